use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let root = PathBuf::from(&crate_dir);
    let config = cbindgen::Config::from_file(root.join("cbindgen.toml")).expect("unable to read cbindgen.toml");
    let out = root.join("include").join("quadroth.h");

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    cbindgen::Builder::new()
        .with_config(config)
        // parsing the one source file keeps the build free of `cargo metadata`
        .with_src(root.join("src").join("lib.rs"))
        .generate()
        .expect("unable to generate bindings")
        .write_to_file(out);
}

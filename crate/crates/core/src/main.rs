fn main() {
    std::process::exit(quadroth::cli::main_with_args(std::env::args_os()));
}

//! Command-line front end. Every command produces one JSON document (the
//! canonical form, always carrying the resolved configuration) and, where it
//! makes sense, a CSV projection of its table.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{compute_w, default_w, smooth_numbers_upto};
use crate::counting::{count_ktrivial, count_report, ktrivial_weighted, Equation, SubspaceFamily};
use crate::error::{Error, Result};
use crate::expsum::{arcs, decay_sup, decay_sup_of, gauss_sums_coprime, major_arc_error, residue_average};
use crate::func::WeightedFn;
use crate::majorant::{plain_majorant, wtricked_majorant, WParams};
use crate::moments::{fourth_moment_ratio, large_spectrum, restriction_ratio};
use crate::regularity::{rado_number, solution_free_greedy, transference_statistic, Budget, RadoStatus};

/// Exit status for a budget that ran out.
pub const EXIT_BUDGET: i32 = 3;
/// Exit status for a configuration rejected before or during dispatch.
pub const EXIT_INVALID: i32 = 2;
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QUADROTH_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Wparams,
    Majorant,
    Decay,
    Gauss,
    Count,
    Ktrivial,
    Moments,
    Spectrum,
    Rado,
    Pipeline,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Wparams => "wparams",
            Command::Majorant => "majorant",
            Command::Decay => "decay",
            Command::Gauss => "gauss",
            Command::Count => "count",
            Command::Ktrivial => "ktrivial",
            Command::Moments => "moments",
            Command::Spectrum => "spectrum",
            Command::Rado => "rado",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

const CSV_HELP: &str = "\
CSV columns by command:
  wparams   X,w,W,b1,b2,sigma,N
  majorant  n,numerator,scale
  decay     X,w,b1,b2,N,grid_points,sup_ratio,bernstein_slack,argmax_alpha
  gauss     q,a,max_abs_s,two_sqrt_q,smooth_vanishing_residual
  count     brute,dft,ktrivial,heuristic
  ktrivial  X,count
  moments   trial,ratio
  spectrum  alpha
  rado      n,colour
  pipeline  field,value";

/// Experiments on majorants, exponential sums and diagonal quadrics.
#[derive(Debug, Clone, Parser, Serialize, Deserialize, Default)]
#[command(name = "quadroth", version, after_help = CSV_HELP)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Experiment to run.
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// JSON file whose fields override the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Square-root cutoff X.
    #[arg(long = "X", visible_alias = "x")]
    #[serde(rename = "X")]
    pub x: Option<u64>,
    /// Smoothness cutoff w (default max(3, floor(sqrt(log X)))).
    #[arg(long)]
    pub w: Option<u64>,
    /// w-smooth b1 (default 1).
    #[arg(long)]
    pub b1: Option<u64>,
    /// b2 coprime to W with -b2 a square mod W (default W - 1).
    #[arg(long)]
    pub b2: Option<u64>,
    /// Use the plain majorant 2x at x^2 instead of the W-tricked one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plain: Option<bool>,
    /// Major-arc exponent for `decay`: arcs around a/q with q <= N^tau.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Grid points per unit of N for sup-norm scans.
    #[arg(long)]
    pub grid_factor: Option<u64>,
    /// Largest modulus q for `gauss`.
    #[arg(long)]
    pub qmax: Option<u64>,
    /// Moment exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of random trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Large-spectrum threshold; for `pipeline` without a set, A = [1, delta X].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Seed for every randomized step.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Equation coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub equation: Option<Vec<i64>>,
    /// Extra forms d, each as a comma separated list; repeat the flag.
    #[arg(long = "form", value_parser = parse_vec)]
    pub forms: Option<Vec<Vec<i64>>>,
    /// Named family: pairs or diagonal.
    #[arg(long)]
    pub preset: Option<String>,
    /// Support length N of the indicator used by `count`.
    #[arg(long = "N", visible_alias = "n")]
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// Explicit DFT modulus for `count`.
    #[arg(long)]
    pub modulus: Option<usize>,
    /// Set A as a comma separated list (`pipeline`).
    #[arg(long, value_delimiter = ',')]
    pub set: Option<Vec<u64>>,
    /// Use a greedy solution-free set as A (`pipeline`).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub solution_free: Option<bool>,
    /// Weight K-trivial tuples by the majorant (`ktrivial`).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub weighted: Option<bool>,
    /// Number of colours (`rado`).
    #[arg(long)]
    pub r: Option<u32>,
    /// Largest interval examined (`rado`).
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Node budget for the colouring search.
    #[arg(long)]
    pub max_nodes: Option<u64>,
    /// Wall-clock budget in milliseconds for the colouring search.
    #[arg(long)]
    pub max_millis: Option<u64>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path; default is $QUADROTH_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_vec(s: &str) -> std::result::Result<Vec<i64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

impl RunConfig {
    /// Applies the fields of a JSON object on top of `self`.
    pub fn merge_json(self, overrides: &Value) -> Result<RunConfig> {
        let Value::Object(extra) = overrides else {
            return Err(Error::Parse("config file must hold a JSON object".into()));
        };
        let config_path = self.config.clone();
        let mut base = serde_json::to_value(&self)?;
        let obj = base.as_object_mut().expect("struct serializes to an object");
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
        let mut merged: RunConfig = serde_json::from_value(base)?;
        merged.config = config_path;
        Ok(merged)
    }

    fn require_x(&self) -> Result<u64> {
        self.x.ok_or_else(|| Error::invalid("X", "required"))
    }

    fn equation(&self) -> Result<Equation> {
        Equation::new(self.equation.clone().ok_or_else(|| Error::invalid("equation", "required"))?)
    }

    fn family(&self, eq: &Equation) -> Result<SubspaceFamily> {
        let mut subs = match &self.forms {
            Some(forms) => SubspaceFamily::from_forms(eq.clone(), forms.clone())?.subspaces,
            None => Vec::new(),
        };
        match self.preset.as_deref() {
            None if subs.is_empty() => subs = SubspaceFamily::pairs_equal(eq.clone()).subspaces,
            None => {}
            Some("pairs") => subs.extend(SubspaceFamily::pairs_equal(eq.clone()).subspaces),
            Some("diagonal") => subs.extend(SubspaceFamily::diagonal(eq.clone())?.subspaces),
            Some(other) => return Err(Error::invalid("preset", format!("unknown preset `{other}`"))),
        }
        SubspaceFamily::new(eq.clone(), subs)
    }

    fn params(&self) -> Result<WParams> {
        let x = self.require_x()?;
        let w = self.w.unwrap_or_else(|| default_w(x));
        let modulus = u64::try_from(compute_w(w)?).map_err(|_| Error::Overflow("W"))?;
        WParams::new(x, w, self.b1.unwrap_or(1), self.b2.unwrap_or(modulus - 1))
    }

    /// Fills defaults so the emitted configuration is complete.
    fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        if let (Some(x), None) = (c.x, c.w) {
            c.w = Some(default_w(x));
        }
        if let Some(w) = c.w {
            if c.b1.is_none() {
                c.b1 = Some(1);
            }
            if c.b2.is_none() {
                if let Ok(m) = compute_w(w) {
                    c.b2 = Some(m as u64 - 1);
                }
            }
        }
        c.format.get_or_insert(Format::Json);
        c.seed.get_or_insert(0);
        c
    }
}

/// What a command produced.
pub struct Outcome {
    pub json: Value,
    pub csv: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub summary: String,
    pub budget_exhausted: bool,
}

fn table<const K: usize>(header: [&str; K], rows: Vec<Vec<String>>) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    Some((header.iter().map(|s| s.to_string()).collect(), rows))
}

fn with_config(mut body: Value, cfg: &RunConfig) -> Result<Value> {
    let mut c = serde_json::to_value(cfg)?;
    if let Value::Object(m) = &mut c {
        m.retain(|k, v| !v.is_null() && k != "output" && k != "threads");
    }
    body.as_object_mut().expect("object body").insert("config".into(), c);
    Ok(body)
}

/// Runs one experiment from a fully merged configuration.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let command = cfg.command.ok_or_else(|| Error::invalid("command", "required"))?;
    let cfg = cfg.resolved();
    let out = match command {
        Command::Wparams => {
            let p = cfg.params()?;
            let body = json!({
                "X": p.x(), "w": p.w(), "W": p.modulus(), "b1": p.b1(), "b2": p.b2(),
                "sigma": p.sigma(), "N": p.nb(), "residues": p.residues(),
            });
            Outcome {
                summary: format!("W = {}, sigma = {}, N = {}", p.modulus(), p.sigma(), p.nb()),
                csv: table(
                    ["X", "w", "W", "b1", "b2", "sigma", "N"],
                    vec![[p.x(), p.w(), p.modulus(), p.b1(), p.b2(), p.sigma(), p.nb()]
                        .iter()
                        .map(u64::to_string)
                        .collect()],
                ),
                json: body,
                budget_exhausted: false,
            }
        }
        Command::Majorant => {
            let (nu, modulus) = if cfg.plain == Some(true) {
                (plain_majorant(cfg.require_x()?)?, None)
            } else {
                let p = cfg.params()?;
                (wtricked_majorant(&p)?, Some(p.modulus()))
            };
            let scale = nu.weights().scale();
            let scale_s = format!("{}/{}", scale.numer(), scale.denom());
            let mut buf = Vec::new();
            nu.write_csv(&mut buf)?;
            let body = json!({
                "N": nu.support_len(),
                "mass": nu.mass(),
                "mass_exact": nu.mass_exact().to_string(),
                "support_size": nu.weights().len(),
                "max_weight": nu.max_weight(),
                "mass_defect_constant": modulus.map(|m| nu.mass_defect_constant(m)),
                "scale": scale_s,
                "entries": nu.weights().points().iter().map(|&(n, v)| [n, v]).collect::<Vec<_>>(),
            });
            Outcome {
                summary: format!("N = {}, mass = {:.6}", nu.support_len(), nu.mass()),
                csv: table(
                    ["n", "numerator", "scale"],
                    nu.weights()
                        .points()
                        .iter()
                        .map(|&(n, v)| vec![n.to_string(), v.to_string(), scale_s.clone()])
                        .collect(),
                ),
                json: body,
                budget_exhausted: false,
            }
        }
        Command::Decay => {
            let gf = cfg.grid_factor.unwrap_or(16);
            let (rep, p) = if cfg.plain == Some(true) {
                (decay_sup_of(&plain_majorant(cfg.require_x()?)?, gf)?, None)
            } else {
                let p = cfg.params()?;
                (decay_sup(&p, gf)?, Some(p))
            };
            let (w, b1, b2) = p.as_ref().map_or((0, 0, 0), |p| (p.w(), p.b1(), p.b2()));
            Outcome {
                summary: format!("sup_ratio = {:.6}, slack = {:.3e}", rep.sup_ratio, rep.bernstein_slack),
                csv: table(
                    ["X", "w", "b1", "b2", "N", "grid_points", "sup_ratio", "bernstein_slack", "argmax_alpha"],
                    vec![vec![
                        cfg.require_x()?.to_string(),
                        w.to_string(),
                        b1.to_string(),
                        b2.to_string(),
                        rep.n.to_string(),
                        rep.grid_points.to_string(),
                        rep.sup_ratio.to_string(),
                        rep.bernstein_slack.to_string(),
                        rep.argmax_alpha.to_string(),
                    ]],
                ),
                json: match (cfg.tau, &p) {
                    (Some(tau), Some(p)) => {
                        let mut v = serde_json::to_value(&rep)?;
                        v["major_arcs"] = arc_summary(p, tau)?;
                        v
                    }
                    (Some(_), None) => return Err(Error::invalid("tau", "needs the W-tricked majorant")),
                    _ => serde_json::to_value(&rep)?,
                },
                budget_exhausted: false,
            }
        }
        Command::Gauss => gauss_command(&cfg)?,
        Command::Count => {
            let eq = cfg.equation()?;
            let n = cfg.n.ok_or_else(|| Error::invalid("N", "required"))?;
            let f = WeightedFn::indicator(1, n as i64);
            let fs = vec![&f; eq.arity()];
            let fam = cfg.family(&eq)?;
            let mut rep = count_report(&fs, &eq, Some(&fam), n)?;
            if let Some(m) = cfg.modulus {
                rep.dft = crate::counting::count_dft(&fs, &eq, Some(m))?;
                rep.agree = rep.dft.rounded_numerator == rep.brute;
            }
            Outcome {
                summary: format!("brute = {}, dft = {}, agree = {}", rep.brute_exact, rep.dft.value, rep.agree),
                csv: table(
                    ["brute", "dft", "ktrivial", "heuristic"],
                    vec![vec![
                        rep.brute_exact.clone(),
                        rep.dft.value.to_string(),
                        rep.ktrivial.map_or(String::new(), |k| k.to_string()),
                        rep.heuristic.to_string(),
                    ]],
                ),
                json: serde_json::to_value(&rep)?,
                budget_exhausted: false,
            }
        }
        Command::Ktrivial => {
            let eq = cfg.equation()?;
            let fam = cfg.family(&eq)?;
            let x = cfg.require_x()?;
            if cfg.weighted == Some(true) {
                let p = cfg.params()?;
                let nu = wtricked_majorant(&p)?;
                let rep = ktrivial_weighted(&nu, &p, &fam)?;
                Outcome {
                    summary: format!("weighted K-trivial = {}", rep.value),
                    csv: table(["X", "count"], vec![vec![x.to_string(), rep.value.to_string()]]),
                    json: serde_json::to_value(&rep)?,
                    budget_exhausted: false,
                }
            } else {
                let c = count_ktrivial(x, &fam)?;
                Outcome {
                    summary: format!("K-trivial count = {c}"),
                    csv: table(["X", "count"], vec![vec![x.to_string(), c.to_string()]]),
                    json: json!({ "X": x, "count": c.to_string(), "subspaces": fam.subspaces.len() }),
                    budget_exhausted: false,
                }
            }
        }
        Command::Moments => {
            let p = cfg.params()?;
            let pe = cfg.p.unwrap_or(5.0);
            let trials = cfg.trials.unwrap_or(20);
            let seed = cfg.seed.unwrap_or(0);
            let rep = restriction_ratio(&p, pe, trials, seed)?;
            let fourth = fourth_moment_ratio(&p)?;
            let reference = (rep.n as f64).powf(pe - 1.0);
            Outcome {
                summary: format!("restriction ratio = {:.6}, fourth moment ratio = {:.6}", rep.ratio, fourth.ratio),
                csv: table(
                    ["trial", "ratio"],
                    rep.trial_ratios
                        .iter()
                        .enumerate()
                        .map(|(i, r)| vec![i.to_string(), r.to_string()])
                        .collect(),
                ),
                json: json!({
                    "X": p.x(), "w": p.w(), "b1": p.b1(), "b2": p.b2(), "p": pe,
                    "value": rep.ratio * reference,
                    "reference_scale": reference,
                    "ratio": rep.ratio,
                    "restriction": rep,
                    "fourth_moment": fourth,
                }),
                budget_exhausted: false,
            }
        }
        Command::Spectrum => {
            let p = cfg.params()?;
            let delta = cfg.delta.ok_or_else(|| Error::invalid("delta", "required"))?;
            let nu = wtricked_majorant(&p)?;
            let rep = large_spectrum(nu.weights(), delta, nu.support_len())?;
            Outcome {
                summary: format!("R = {}, measure estimate = {:.6}", rep.r, rep.measure_estimate),
                csv: table(["alpha"], rep.points.iter().map(|a| vec![a.to_string()]).collect()),
                json: serde_json::to_value(&rep)?,
                budget_exhausted: false,
            }
        }
        Command::Rado => {
            let eq = cfg.equation()?;
            let defaults = Budget::default();
            let budget = Budget {
                max_nodes: cfg.max_nodes.unwrap_or(defaults.max_nodes),
                max_millis: cfg.max_millis.unwrap_or(defaults.max_millis),
            };
            let res = rado_number(&eq, cfg.r.unwrap_or(1), cfg.n_max.unwrap_or(100), budget)?;
            let exhausted = res.status == RadoStatus::ExhaustedBudget;
            Outcome {
                summary: format!("status = {:?}, n = {}", res.status, res.n),
                csv: table(
                    ["n", "colour"],
                    res.certificate
                        .iter()
                        .enumerate()
                        .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()])
                        .collect(),
                ),
                json: serde_json::to_value(&res)?,
                budget_exhausted: exhausted,
            }
        }
        Command::Pipeline => {
            let eq = cfg.equation()?;
            let fam = cfg.family(&eq)?;
            let x = cfg.require_x()?;
            let w = cfg.w.unwrap_or_else(|| default_w(x));
            let a = if cfg.solution_free == Some(true) {
                solution_free_greedy(&eq, x, cfg.seed.unwrap_or(0))?.set
            } else if let Some(set) = &cfg.set {
                set.clone()
            } else {
                let delta = cfg.delta.unwrap_or(1.0);
                (1..=((delta * x as f64).floor() as u64)).collect()
            };
            let rep = transference_statistic(&a, x, w, &eq, &fam)?;
            let body = serde_json::to_value(&rep)?;
            let rows = body
                .as_object()
                .expect("struct")
                .iter()
                .filter(|(_, v)| !v.is_object())
                .map(|(k, v)| vec![k.clone(), v.to_string()])
                .collect();
            Outcome {
                summary: format!(
                    "statistic = {:.4}, delta^2 N = {:.4}, count = {}, K-trivial = {}",
                    rep.statistic, rep.delta_sq_nb, rep.count_brute, rep.ktrivial
                ),
                csv: table(["field", "value"], rows),
                json: body,
                budget_exhausted: false,
            }
        }
    };
    Ok(Outcome {
        json: with_config(out.json, &cfg)?,
        ..out
    })
}

/// Arc decomposition at `tau` and the largest normalized major-arc error
/// over 50 equispaced points per arc.
fn arc_summary(p: &WParams, tau: f64) -> Result<Value> {
    const PER_ARC: usize = 50;
    const MAX_ARCS: usize = 10_000;
    let dec = arcs(p.nb(), tau)?;
    if dec.arcs.len() > MAX_ARCS {
        return Err(Error::invalid("tau", format!("{} arcs exceed the limit {MAX_ARCS}", dec.arcs.len())));
    }
    let nu = wtricked_majorant(p)?;
    let mut worst: f64 = 0.0;
    for arc in &dec.arcs {
        for k in 0..PER_ARC {
            let beta = dec.radius * (2.0 * k as f64 / (PER_ARC - 1) as f64 - 1.0);
            worst = worst.max(major_arc_error(&nu, p, arc.center + beta, arc.q, arc.a as i64)?);
        }
    }
    Ok(json!({
        "tau": dec.tau,
        "q_max": dec.q_max,
        "radius": dec.radius,
        "arcs": dec.arcs.len(),
        "measure": dec.measure(),
        "disjoint": dec.is_pairwise_disjoint(),
        "max_error_ratio": worst,
    }))
}

fn gauss_command(cfg: &RunConfig) -> Result<Outcome> {
    let w = cfg.w.unwrap_or(3);
    let qmax = cfg.qmax.ok_or_else(|| Error::invalid("qmax", "required"))?;
    if qmax < 1 {
        return Err(Error::invalid("qmax", "need qmax >= 1"));
    }
    let modulus = u64::try_from(compute_w(w)?).map_err(|_| Error::Overflow("W"))?;
    let p = WParams::new(1, w, 1, cfg.b2.unwrap_or(modulus - 1))?;
    let smooth = smooth_numbers_upto(qmax, w);
    let mut rows = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for q in 1..=qmax {
        let mut best = (0.0f64, 0u64);
        for z in p.residues() {
            for (a, s) in gauss_sums_coprime(q, z as i64, &p)? {
                if s.norm() > best.0 + 1e-12 {
                    best = (s.norm(), a);
                }
            }
        }
        let residual = if q > 1 && smooth.binary_search(&q).is_ok() {
            let mut r: f64 = 0.0;
            for a in (1..q).filter(|a| a.gcd(&q) == 1) {
                r = r.max(residue_average(q, a as i64, &p)?.norm());
            }
            worst_residual = worst_residual.max(r);
            Some(r)
        } else {
            None
        };
        let bound = 2.0 * (q as f64).sqrt();
        worst_ratio = worst_ratio.max(best.0 / bound);
        rows.push((q, best.1, best.0, bound, residual));
    }
    let csv_rows = rows
        .iter()
        .map(|&(q, a, m, b, r)| {
            vec![
                q.to_string(),
                a.to_string(),
                m.to_string(),
                b.to_string(),
                r.map_or(String::new(), |r| r.to_string()),
            ]
        })
        .collect();
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|&(q, a, m, b, r)| json!({"q": q, "a": a, "max_abs_s": m, "two_sqrt_q": b, "smooth_vanishing_residual": r}))
        .collect();
    Ok(Outcome {
        summary: format!("max |S_q| / 2 sqrt q = {worst_ratio:.6}, max smooth residual = {worst_residual:.3e}"),
        csv: table(["q", "a", "max_abs_s", "two_sqrt_q", "smooth_vanishing_residual"], csv_rows),
        json: json!({
            "W": p.modulus(), "b2": p.b2(), "sigma": p.sigma(),
            "max_ratio_to_bound": worst_ratio,
            "max_smooth_residual": worst_residual,
            "rows": json_rows,
        }),
        budget_exhausted: false,
    })
}

/// Renders the outcome in the requested format.
pub fn render(out: &Outcome, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(&out.json)?;
            s.push(b'\n');
            Ok(s)
        }
        Format::Csv => {
            let (header, rows) = out
                .csv
                .as_ref()
                .ok_or_else(|| Error::invalid("format", "no CSV projection for this command"))?;
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
            for r in rows {
                wtr.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            wtr.into_inner().map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExhausted(_) => EXIT_BUDGET,
        Error::Io(_) => 1,
        _ => EXIT_INVALID,
    }
}

/// Parses arguments, runs, writes the artifact and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: RunConfig) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            cli.clone().merge_json(&serde_json::from_str(&text)?)?
        }
        None => cli,
    };
    if let Some(t) = cfg.threads {
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let out = run(&cfg)?;
    let format = cfg.format.unwrap_or_default();
    let bytes = render(&out, format)?;
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let target = cfg.output.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|d| {
            let name = cfg.command.map_or("run", Command::name);
            PathBuf::from(d).join(format!("{name}.{ext}"))
        })
    });
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, &bytes)?;
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    eprintln!("{}", out.summary);
    Ok(if out.budget_exhausted { EXIT_BUDGET } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("quadroth").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn decay_fields() {
        let out = run(&parse(&["decay", "--X", "1000", "--w", "3"])).unwrap();
        assert!(out.json.get("sup_ratio").is_some());
        assert!(out.json.get("bernstein_slack").is_some());
        assert_eq!(out.json["config"]["X"], 1000);
        assert_eq!(out.json["config"]["b2"], 23);
        let out = run(&parse(&["decay", "--X", "100", "--w", "3", "--tau", "0.3"])).unwrap();
        // N = 417 and 417^0.3 = 6.1
        assert_eq!(out.json["major_arcs"]["q_max"], 6);
        assert!(out.json["major_arcs"]["max_error_ratio"].as_f64().unwrap() > 0.0);
        assert!(run(&parse(&["decay", "--X", "100", "--tau", "0.7"])).is_err());
    }

    #[test]
    fn gauss_csv_columns() {
        let out = run(&parse(&["gauss", "--qmax", "30", "--w", "5"])).unwrap();
        let text = String::from_utf8(render(&out, Format::Csv).unwrap()).unwrap();
        assert!(text.starts_with("q,a,max_abs_s,two_sqrt_q,smooth_vanishing_residual\n"));
        assert_eq!(text.lines().count(), 31);
        assert!(out.json["max_ratio_to_bound"].as_f64().unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn config_overrides_flags() {
        let cfg = parse(&["decay", "--X", "1000"]);
        let merged = cfg.merge_json(&json!({"X": 500, "w": 5})).unwrap();
        assert_eq!(merged.x, Some(500));
        assert_eq!(merged.w, Some(5));
        assert!(parse(&["decay"]).merge_json(&json!({"bogus": 1})).is_err());
    }

    #[test]
    fn invalid_config_is_reported() {
        let e = run(&parse(&["wparams", "--X", "100", "--w", "3", "--b2", "3"])).err().unwrap();
        assert!(matches!(e, Error::InvalidArgument { field: "b2", .. }));
        assert_eq!(exit_code(&e), EXIT_INVALID);
    }

    #[test]
    fn equations_with_negative_entries_parse() {
        let cfg = parse(&["count", "--equation", "1,1,-2", "--N", "10"]);
        assert_eq!(cfg.equation, Some(vec![1, 1, -2]));
        let out = run(&cfg).unwrap();
        assert_eq!(out.json["brute_exact"], "50");
        let cfg = parse(&["ktrivial", "--equation", "1,1,-1,-1", "--form", "1,-1,0,0", "--X", "5"]);
        assert_eq!(cfg.forms, Some(vec![vec![1, -1, 0, 0]]));
    }
}

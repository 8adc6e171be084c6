//! `vhj`: runs scenarios, evaluates closed forms and replays the acceptance
//! suites.
//!
//! Exit codes: 0 success, 1 input error or failed verification, 2 validity
//! window contaminated by the boundary, 3 non-finite numbers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vhj_core::closed_forms::{
    critical_exponent, decay_exponent_a, gamma_barrier, gamma_q, heat_kernel, sigma_source,
    xi_front, z_edge_radius, z_profile,
};
use vhj_core::harness::suites::{run_suites, SUITES};
use vhj_core::harness::{simulate, ScenarioConfig};
use vhj_core::vss::find_vss;
use vhj_core::Error;

#[derive(Parser)]
#[command(
    name = "vhj",
    version,
    about = "Viscous Hamilton-Jacobi laboratory on radial grids"
)]
struct Cli {
    /// Worker threads for parallel scans and suites.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write series.csv and report.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Artifact directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario and print its regime report.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the self-similar profile for `q` in (1, q_c(N)).
    VssProfile {
        #[arg(long)]
        q: f64,
        #[arg(long = "dim", short = 'N', default_value_t = 1)]
        dimension: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Directory for profile.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a closed form, e.g. `eval qc N=2` or `eval z r=0 t=1 M=1 q=1.5`.
    Eval {
        formula: String,
        /// Arguments as `name=value`.
        args: Vec<String>,
    },
    /// Run named acceptance suites (all of them when none are given).
    Verify {
        suites: Vec<String>,
        /// Directory for one JSON report per suite.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// Failure carrying its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } => 3,
            _ => 1,
        };
        Fail(code, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("vhj: cannot set up {k} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate { config, out } => run(&config, out, false),
        Command::Classify { config, out } => run(&config, out, true),
        Command::VssProfile {
            q,
            dimension,
            tol,
            out,
        } => vss_profile(q, dimension, tol, out.as_deref()),
        Command::Eval { formula, args } => eval(&formula, &args).map(|v| {
            println!("{}", format_number(v));
            0
        }),
        Command::Verify { suites, out } => verify(&suites, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("vhj: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(config: &Path, out: Option<PathBuf>, print_report: bool) -> Result<u8, Fail> {
    let cfg = ScenarioConfig::from_file(config)?;
    let out = out.or_else(|| cfg.output.clone());
    if out.is_none() && !print_report {
        return Err(Fail(
            1,
            "no output directory: pass --out or set `output`".into(),
        ));
    }
    let run = simulate(&cfg)?;
    if let Some(dir) = &out {
        let art = run.write_artifacts(dir)?;
        eprintln!(
            "wrote {} and {}",
            art.series.display(),
            art.report.display()
        );
    }
    if print_report {
        println!("{}", run.report_json()?);
    } else {
        println!("{}", run.verdict());
    }
    if run.contaminated() {
        let v = &run.report.validity;
        eprintln!(
            "vhj: boundary contamination at t = {:.4e} before the horizon {:.4e}",
            v.end, v.horizon
        );
        return Ok(2);
    }
    Ok(0)
}

fn vss_profile(q: f64, dimension: usize, tol: f64, out: Option<&Path>) -> Result<u8, Fail> {
    let p = find_vss(q, dimension, tol)?;
    let summary = serde_json::json!({
        "q": p.q,
        "dimension": p.dimension,
        "a": p.a,
        "alpha_star": p.alpha_star,
        "eta_max": p.eta_max(),
        "decay_class": p.decay_class,
        "tail_ratio": p.tail_ratio,
        "window_ratio": p.window_ratio,
    });
    println!("{summary:#}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Fail(1, format!("{}: {e}", dir.display())))?;
        let path = dir.join("profile.csv");
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| Fail(1, format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| Fail(1, format!("{}: {e}", path.display()));
        w.write_record(["eta", "f", "f_prime"]).map_err(io)?;
        for ((e, f), fp) in p.eta_nodes.iter().zip(&p.f).zip(&p.f_prime) {
            w.write_record([e.to_string(), f.to_string(), fp.to_string()])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Fail(1, format!("{}: {e}", path.display())))?;
    }
    Ok(0)
}

/// Fixed ten decimals with trailing zeros removed.
fn format_number(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

const FORMULAS: [(&str, &[&str]); 10] = [
    ("qc", &["N"]),
    ("a", &["q"]),
    ("gamma", &["q"]),
    ("heat", &["r", "t", "N"]),
    ("z", &["r", "t", "M", "q"]),
    ("z-edge", &["t", "M", "q"]),
    ("xi", &["t", "M", "q"]),
    ("sigma", &["y", "t", "M", "q"]),
    ("barrier", &["r", "q"]),
    ("tau-radius", &["R", "q", "N"]),
];

fn eval(formula: &str, args: &[String]) -> Result<f64, Fail> {
    let names = FORMULAS
        .iter()
        .find(|f| f.0 == formula)
        .map(|f| f.1)
        .ok_or_else(|| {
            let known: Vec<&str> = FORMULAS.iter().map(|f| f.0).collect();
            Fail(
                1,
                format!("unknown formula `{formula}`; known: {}", known.join(", ")),
            )
        })?;
    let mut values = vec![None; names.len()];
    for a in args {
        let (k, v) = a
            .split_once('=')
            .ok_or_else(|| Fail(1, format!("argument `{a}` is not name=value")))?;
        let i = names.iter().position(|n| *n == k).ok_or_else(|| {
            Fail(
                1,
                format!("`{formula}` takes {}, not `{k}`", names.join(", ")),
            )
        })?;
        let x: f64 = v
            .parse()
            .map_err(|_| Fail(1, format!("`{v}` is not a number")))?;
        values[i] = Some(x);
    }
    let v: Vec<f64> = values
        .iter()
        .zip(names)
        .map(|(v, n)| v.ok_or_else(|| Fail(1, format!("`{formula}` needs `{n}`"))))
        .collect::<Result<_, _>>()?;
    let dim = |x: f64| -> Result<usize, Fail> {
        if x.fract() == 0.0 && (1.0..=3.0).contains(&x) {
            Ok(x as usize)
        } else {
            Err(Fail(1, format!("N must be 1, 2 or 3, got {x}")))
        }
    };
    let out = match formula {
        "qc" => critical_exponent(dim(v[0])?),
        "a" => decay_exponent_a(v[0])?,
        "gamma" => gamma_q(v[0])?,
        "heat" => heat_kernel(v[0], v[1], dim(v[2])?)?,
        "z" => z_profile(v[0], v[1], v[2], v[3])?,
        "z-edge" => z_edge_radius(v[0], v[1], v[2])?,
        "xi" => xi_front(v[0], v[1], v[2])?,
        "sigma" => sigma_source(v[0], v[1], v[2], v[3])?,
        "barrier" => gamma_barrier(v[0], v[1])?,
        _ => vhj_core::closed_forms::tau_from_radius(v[0], v[1], dim(v[2])?),
    };
    if !out.is_finite() {
        return Err(Fail(3, format!("`{formula}` evaluated to {out}")));
    }
    Ok(out)
}

fn verify(names: &[String], out: Option<&Path>) -> Result<u8, Fail> {
    let names: Vec<&str> = if names.is_empty() {
        SUITES.to_vec()
    } else {
        names.iter().map(String::as_str).collect()
    };
    if let Some(bad) = names.iter().find(|n| !SUITES.contains(n)) {
        return Err(Fail(
            1,
            format!("unknown suite `{bad}`; known: {}", SUITES.join(", ")),
        ));
    }
    let reports = run_suites(&names)?;
    for r in &reports {
        println!("{r}");
        if let Some(dir) = out {
            let dir = dir.join(&r.suite);
            std::fs::create_dir_all(&dir)
                .map_err(|e| Fail(1, format!("{}: {e}", dir.display())))?;
            let json = serde_json::to_string_pretty(r).map_err(|e| Fail(1, e.to_string()))?;
            std::fs::write(dir.join("suite.json"), json)
                .map_err(|e| Fail(1, format!("{}: {e}", dir.display())))?;
        }
    }
    Ok(if reports.iter().all(|r| r.pass()) {
        0
    } else {
        1
    })
}

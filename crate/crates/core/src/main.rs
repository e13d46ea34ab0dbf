use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use arrowroots::interp::Strategy;
use arrowroots::polynomial::{format_hexfloat, parse_values, Polynomial};
use arrowroots::solver::{self, SolveError, SolveOptions, SolveReport, VerifyReport};
use arrowroots::EPS;

#[derive(Parser)]
#[command(name = "arrowroots", version, about = "Real roots of polynomials via arrowhead eigenvalues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Derivative,
    Reciprocal,
    Auto,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Derivative => Strategy::Derivative,
            StrategyArg::Reciprocal => Strategy::Reciprocal,
            StrategyArg::Auto => Strategy::Auto,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute all roots of a polynomial given by its coefficients.
    Solve {
        /// Coefficient file, one per line in descending powers ("-" for stdin).
        #[arg(long, default_value = "-")]
        coeffs: String,
        #[arg(long, value_enum, default_value = "auto")]
        strategy: StrategyArg,
        /// Interpolation points to use instead of computing them.
        #[arg(long)]
        points: Option<String>,
        /// Recompute b in double-double when K_b exceeds this.
        #[arg(long, default_value_t = arrowroots::aheig::DEFAULT_TAU_B)]
        tau_b: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Compare against exact bisection of the stored coefficients.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print coefficients of a test polynomial.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Time matrix construction and root computation.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// prod_{i=1..n} (x - i)
    Wilkinson { n: usize },
}

fn read_source(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
    }
}

fn print_text(report: &SolveReport, verify: Option<&VerifyReport>) {
    for r in &report.roots {
        println!("{:.16e}", r.lambda);
    }
    eprintln!("# degree {}", report.degree);
    if let Some(s) = report.strategy_used {
        eprintln!("# points: {s}");
    }
    for f in &report.strategy_failures {
        eprintln!("# rejected: {f}");
    }
    if let Some(k) = report.k_alpha {
        eprintln!("# K_alpha = {k:.4e}");
    }
    if let Some(c) = report.max_cond {
        eprintln!("# max cond(u, d_j) = {c:.4e}");
    }
    eprintln!(
        "# max K_b = {:.4e}, escalated: {}",
        report.max_k_b, report.escalation_count
    );
    for r in report.roots.iter().filter(|r| r.low_confidence) {
        eprintln!("# warning: root {} has error bound {:.2e}", r.k, r.kappa_bound * EPS);
    }
    for r in report.roots.iter().filter(|r| r.final2_ok == Some(false)) {
        eprintln!("# warning: root {} exceeds the double-double accuracy condition", r.k);
    }
    if let Some(v) = verify {
        eprintln!(
            "# verify: max relative deviation {:.3e}, within bounds: {}",
            v.max_rel_dev, v.all_within_bound
        );
    }
}

fn print_json(report: &SolveReport, verify: Option<&VerifyReport>) {
    let roots: Vec<_> = report
        .roots
        .iter()
        .map(|r| {
            json!({
                "value_hex": format_hexfloat(r.lambda),
                "value_dec": format!("{:.16e}", r.lambda),
                "k_b": r.k_b,
                "kappa_bound": r.kappa_bound,
                "residual": r.residual,
                "escalated": r.b_escalated,
            })
        })
        .collect();
    let mut out = json!({
        "roots": roots,
        "diagnostics": {
            "k_alpha": report.k_alpha,
            "max_cond": report.max_cond,
            "strategy": report.strategy_used,
            "d_points": report.d_points,
        },
        "meta": {
            "degree": report.degree,
            "version": env!("CARGO_PKG_VERSION"),
        },
    });
    if let Some(v) = verify {
        out["verify"] = serde_json::to_value(v).unwrap_or_default();
    }
    println!("{}", serde_json::to_string_pretty(&out).unwrap_or_default());
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run_solve(
    coeffs: &str,
    opts: SolveOptions,
    format: Format,
    verify: bool,
) -> ExitCode {
    let text = match read_source(coeffs) {
        Ok(t) => t,
        Err(e) => return fail(3, e),
    };
    let u = match Polynomial::parse(&text) {
        Ok(u) => u,
        Err(e) => return fail(3, e),
    };
    let report = match solver::solve(&u, &opts) {
        Ok(r) => r,
        Err(e) => return fail(e.exit_code() as u8, e),
    };
    let checked = if verify {
        match solver::verify(&u, &report, 100) {
            Ok(v) => Some(v),
            Err(e) => return fail(1, e),
        }
    } else {
        None
    };
    match format {
        Format::Text => print_text(&report, checked.as_ref()),
        Format::Json => print_json(&report, checked.as_ref()),
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            coeffs,
            strategy,
            points,
            tau_b,
            format,
            verify,
            threads,
        } => {
            let points = match points.map(|p| read_source(&p).and_then(|t| {
                parse_values(&t).map_err(|e| e.to_string())
            })) {
                None => None,
                Some(Ok(p)) => Some(p),
                Some(Err(e)) => return fail(3, e),
            };
            let opts = SolveOptions {
                strategy: strategy.into(),
                points,
                tau_b,
                threads,
                ..SolveOptions::default()
            };
            run_solve(&coeffs, opts, format, verify)
        }
        Command::Gen {
            family: GenFamily::Wilkinson { n },
        } => match solver::generate_wilkinson(n) {
            Ok(w) => {
                if !w.representable {
                    eprintln!("# warning: coefficients of W_{n} are rounded");
                }
                print!("{}", w.poly.to_text());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e.exit_code() as u8, e),
        },
        Command::Bench { sizes, reps } => match solver::bench(&sizes, reps) {
            Ok(rows) => {
                println!("{:>6} {:>12} {:>12} {:>12} {:>8} {:>10}", "n", "build_s", "roots_s", "total_s", "ratio", "max_rel");
                let mut prev: Option<f64> = None;
                for r in &rows {
                    let ratio = prev.map(|p| r.total_secs / p);
                    println!(
                        "{:>6} {:>12.6} {:>12.6} {:>12.6} {:>8} {:>10.2e}",
                        r.n,
                        r.build_secs,
                        r.roots_secs,
                        r.total_secs,
                        ratio.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into()),
                        r.max_rel_err
                    );
                    prev = Some(r.total_secs);
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(1, e as SolveError),
        },
    }
}

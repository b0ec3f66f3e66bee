//! Command line front end: verify channel specs, run protocol demos and
//! tradeoff sweeps, and run the Fock oracle residual suites.
//!
//! Exit codes: 0 ok, 1 usage or parse error, 2 verification failure,
//! 3 oracle residual above tolerance.

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

mod output;
mod verify;

use output::{write_output, Format};

#[derive(Parser)]
#[command(
    name = "quasifree",
    about = "Hybrid quantum-classical phase space calculus tools",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed recorded in every output artifact (all outputs are deterministic)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance override for pass/fail judgements
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a JSON channel spec for complete positivity
    Verify {
        /// Path to the channel spec file
        spec: PathBuf,
    },
    /// Run a protocol demo sweep
    Demo {
        /// One of: teleport, densecode, instrument-position,
        /// instrument-phasespace, cloner, husimi
        id: String,
        /// Squeezing parameters for teleport/densecode (comma separated)
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
        lambda: Vec<f64>,
        /// Position noise variances for instrument-position
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,10")]
        variance: Vec<f64>,
        /// Inverse temperatures for instrument-phasespace
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        beta: Vec<f64>,
        /// Number of clones for cloner
        #[arg(long, default_value_t = 2)]
        nout: usize,
    },
    /// Run a Fock oracle residual suite
    Oracle {
        /// One of: vacuum, weyl, parseval, translate, instrument, all
        suite: String,
        /// Inverse temperature for the instrument suite
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Fock cutoff override
        #[arg(long)]
        cutoff: Option<usize>,
    },
}

#[derive(Serialize)]
struct DemoArtifact {
    seed: u64,
    rows: Vec<quasifree::protocols::TradeoffRow>,
}

#[derive(Serialize)]
struct OracleRow {
    check: String,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OracleArtifact {
    seed: u64,
    suite: String,
    rows: Vec<OracleRow>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Verify { spec } => verify::run(cli, spec),
        Command::Demo {
            id,
            lambda,
            variance,
            beta,
            nout,
        } => {
            let grid: Vec<f64> = match id.as_str() {
                "teleport" | "densecode" => lambda.clone(),
                "instrument-position" => variance.clone(),
                "instrument-phasespace" => beta.clone(),
                "cloner" => vec![*nout as f64],
                "husimi" => vec![0.0],
                other => {
                    return Err(format!(
                        "unknown demo id '{other}'; known: teleport, densecode, \
                         instrument-position, instrument-phasespace, cloner, husimi"
                    ))
                }
            };
            let rows = quasifree::protocols::sweep(id, &grid).map_err(|e| e.to_string())?;
            let artifact = DemoArtifact {
                seed: cli.seed,
                rows,
            };
            write_output(cli.format, cli.out.as_deref(), &artifact, |f| {
                output::demo_rows(f, &artifact)
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            suite,
            beta,
            cutoff,
        } => run_oracle(cli, suite, *beta, *cutoff),
    }
}

fn run_oracle(
    cli: &Cli,
    suite: &str,
    beta: f64,
    cutoff: Option<usize>,
) -> Result<ExitCode, String> {
    use num_complex::Complex64;
    use quasifree::fock::{FockRep, GaussianKind};

    let mut rows = Vec::new();
    let suites: Vec<&str> = if suite == "all" {
        vec!["vacuum", "weyl", "parseval", "translate", "instrument"]
    } else {
        vec![suite]
    };
    for s in &suites {
        match *s {
            "vacuum" => {
                let rep = FockRep::new(cutoff.unwrap_or(40));
                let vac = rep
                    .gaussian_state_matrix(GaussianKind::Vacuum)
                    .map_err(|e| e.to_string())?;
                let mut worst = 0.0_f64;
                for i in 0..13 {
                    for j in 0..13 {
                        let x = -3.0 + i as f64 * 0.5;
                        let y = -3.0 + j as f64 * 0.5;
                        if x * x + y * y > 9.0 {
                            continue;
                        }
                        let chi = rep
                            .charfn_of_density(&vac, x, y)
                            .map_err(|e| e.to_string())?;
                        let expect = (-(x * x + y * y) / 4.0).exp();
                        worst = worst.max((chi - Complex64::new(expect, 0.0)).norm());
                    }
                }
                rows.push(row("vacuum charfn vs closed form", worst, 1e-8, cli.tol));
            }
            "weyl" => {
                let rep = FockRep::new(cutoff.unwrap_or(60));
                let pairs = [
                    ((2.0, 0.0), (0.0, 2.0)),
                    ((1.0, 1.0), (1.0, -1.0)),
                    ((0.5, -1.5), (1.2, 0.4)),
                    ((-2.0, 0.0), (2.0, 0.0)),
                    ((0.0, 1.0), (1.0, 0.0)),
                    ((1.5, 0.5), (-0.5, 1.5)),
                ];
                let worst = pairs
                    .iter()
                    .map(|&(xi, eta)| rep.weyl_relation_residual(xi, eta, 20))
                    .fold(0.0_f64, f64::max);
                rows.push(row("Weyl relation, first 20 levels", worst, 1e-6, cli.tol));
            }
            "parseval" => {
                let rep = FockRep::new(cutoff.unwrap_or(40));
                let n = rep.cutoff();
                let kb = |k: usize, l: usize| ketbra(n, k, l);
                let c = rep
                    .parseval_check(&kb(0, 0), &kb(0, 0), 8.0, 161)
                    .map_err(|e| e.to_string())?;
                rows.push(row("Parseval, vacuum vs vacuum", c.residual, 1e-3, cli.tol));
                let c = rep
                    .parseval_check(&kb(0, 0), &kb(1, 1), 8.0, 161)
                    .map_err(|e| e.to_string())?;
                rows.push(row("Parseval, orthogonal projectors", c.rhs.norm(), 1e-3, cli.tol));
                let c = rep
                    .parseval_check(&kb(1, 0), &kb(1, 0), 8.0, 161)
                    .map_err(|e| e.to_string())?;
                rows.push(row(
                    "Parseval, off-diagonal unit",
                    (c.rhs - Complex64::new(1.0, 0.0)).norm(),
                    1e-3,
                    cli.tol,
                ));
            }
            "translate" => {
                let rep = FockRep::new(cutoff.unwrap_or(40));
                let n = rep.cutoff();
                let kb = |k: usize, l: usize| ketbra(n, k, l);
                let c = rep
                    .translate_average_check(&kb(0, 0), &kb(0, 0), 8.0, 161)
                    .map_err(|e| e.to_string())?;
                rows.push(row("translate average, vacuum", c.residual, 5e-3, cli.tol));
                let c = rep
                    .translate_average_check(&(kb(0, 0) + kb(1, 1)), &kb(0, 0), 8.0, 161)
                    .map_err(|e| e.to_string())?;
                rows.push(row("translate average, rank 2", c.residual, 5e-3, cli.tol));
            }
            "instrument" => {
                if beta <= 0.0 {
                    return Err("instrument suite needs beta > 0".into());
                }
                let rep = FockRep::new(cutoff.unwrap_or(60));
                let n = rep.cutoff();
                let weights: Vec<f64> =
                    (0..n).map(|k| (-beta * (k as f64 + 0.5)).exp()).collect();
                let norm: f64 = weights.iter().sum();
                let f = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    weights.iter().map(|w| Complex64::new(w / norm, 0.0)),
                ));
                let coth = 1.0 / (beta / 2.0).tanh();
                let f0 = rep.fourier_weyl(&f, 0.0, 0.0);
                let mut worst = 0.0_f64;
                for i in 0..9 {
                    for j in 0..9 {
                        let x = -2.0 + i as f64 * 0.5;
                        let y = -2.0 + j as f64 * 0.5;
                        if x * x + y * y > 4.0 {
                            continue;
                        }
                        let got = rep.fourier_weyl(&f, x, y) / f0;
                        let expect = (-coth * (x * x + y * y) / 4.0).exp();
                        worst = worst.max((got - Complex64::new(expect, 0.0)).norm() / expect);
                    }
                }
                rows.push(row(
                    "instrument Fourier profile, relative",
                    worst,
                    1e-4,
                    cli.tol,
                ));
            }
            other => {
                return Err(format!(
                    "unknown oracle suite '{other}'; known: vacuum, weyl, parseval, \
                     translate, instrument, all"
                ))
            }
        }
    }
    let failed = rows.iter().any(|r| !r.pass);
    let artifact = OracleArtifact {
        seed: cli.seed,
        suite: suite.to_string(),
        rows,
    };
    write_output(cli.format, cli.out.as_deref(), &artifact, |f| {
        output::oracle_rows(f, &artifact)
    })?;
    Ok(if failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn row(check: &str, residual: f64, default_tol: f64, over: Option<f64>) -> OracleRow {
    let tolerance = over.unwrap_or(default_tol);
    OracleRow {
        check: check.to_string(),
        residual,
        tolerance,
        pass: residual <= tolerance,
    }
}

fn ketbra(n: usize, k: usize, l: usize) -> nalgebra::DMatrix<num_complex::Complex64> {
    use num_complex::Complex64;
    let mut m = nalgebra::DMatrix::zeros(n, n);
    m[(k, l)] = Complex64::new(1.0, 0.0);
    m
}

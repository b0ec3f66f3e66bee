//! Deterministic table, CSV, and JSON emitters.

use clap::ValueEnum;
use serde::Serialize;
use std::path::Path;

use crate::{DemoArtifact, OracleArtifact};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Serialize `artifact` as JSON, or call `render` for table/CSV text, then
/// write to the output path or stdout.
pub fn write_output<T: Serialize>(
    format: Format,
    out: Option<&Path>,
    artifact: &T,
    render: impl Fn(Format) -> String,
) -> Result<(), String> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(artifact)
                .map_err(|e| format!("serialization failed: {e}"))?;
            s.push('\n');
            s
        }
        other => render(other),
    };
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn demo_rows(format: Format, artifact: &DemoArtifact) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from(
                "protocol,parameter,classical_variance,quantum_variance,fidelity,uncertainty_product,seed\n",
            );
            for r in &artifact.rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.protocol,
                    r.parameter,
                    opt(r.classical_variance),
                    opt(r.quantum_variance),
                    opt(r.fidelity),
                    opt(r.uncertainty_product),
                    artifact.seed
                ));
            }
            s
        }
        _ => {
            let mut s = format!("seed: {}\n", artifact.seed);
            s.push_str(&format!(
                "{:<24} {:>10} {:>14} {:>14} {:>12} {:>12}\n",
                "protocol", "parameter", "classical var", "quantum var", "fidelity", "product"
            ));
            for r in &artifact.rows {
                s.push_str(&format!(
                    "{:<24} {:>10.4} {:>14} {:>14} {:>12} {:>12}\n",
                    r.protocol,
                    r.parameter,
                    fixed(r.classical_variance),
                    fixed(r.quantum_variance),
                    fixed(r.fidelity),
                    fixed(r.uncertainty_product),
                ));
            }
            s
        }
    }
}

pub fn oracle_rows(format: Format, artifact: &OracleArtifact) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("check,residual,tolerance,pass,seed\n");
            for r in &artifact.rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.check, r.residual, r.tolerance, r.pass, artifact.seed
                ));
            }
            s
        }
        _ => {
            let mut s = format!("seed: {}  suite: {}\n", artifact.seed, artifact.suite);
            s.push_str(&format!(
                "{:<40} {:>12} {:>12} {:>6}\n",
                "check", "residual", "tolerance", "pass"
            ));
            for r in &artifact.rows {
                s.push_str(&format!(
                    "{:<40} {:>12.3e} {:>12.1e} {:>6}\n",
                    r.check,
                    r.residual,
                    r.tolerance,
                    if r.pass { "yes" } else { "NO" }
                ));
            }
            s
        }
    }
}

fn fixed(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

//! `verify` subcommand: parse a JSON channel spec and run the complete
//! positivity check.

use serde::Serialize;
use std::path::Path;
use std::process::ExitCode;

use quasifree::channel::CpStatus;
use quasifree::error::Error;
use quasifree::json::ChannelSpec;

use crate::output::{write_output, Format};
use crate::Cli;

#[derive(Serialize)]
struct VerifyArtifact {
    seed: u64,
    file: String,
    verdict: String,
    /// Minimal eigenvalue of the CP witness matrix on failure.
    min_eigenvalue: Option<f64>,
    method: Option<String>,
}

pub fn run(cli: &Cli, spec_path: &Path) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| format!("cannot read {}: {e}", spec_path.display()))?;
    let spec: ChannelSpec =
        serde_json::from_str(&text).map_err(|e| format!("bad channel spec: {e}"))?;

    let (artifact, code) = match spec.build() {
        Ok(channel) => {
            let method = match channel.cp_status() {
                CpStatus::VerifiedExact => "exact",
                CpStatus::SampledOk(_) => "sampled",
                CpStatus::Unchecked => "unchecked",
            };
            (
                VerifyArtifact {
                    seed: cli.seed,
                    file: spec_path.display().to_string(),
                    verdict: "pass".into(),
                    min_eigenvalue: None,
                    method: Some(method.into()),
                },
                ExitCode::SUCCESS,
            )
        }
        Err(Error::NotCompletelyPositive {
            min_eigenvalue, ..
        }) => (
            VerifyArtifact {
                seed: cli.seed,
                file: spec_path.display().to_string(),
                verdict: "fail".into(),
                min_eigenvalue: Some(min_eigenvalue),
                method: None,
            },
            ExitCode::from(2),
        ),
        Err(other) => return Err(format!("invalid channel spec: {other}")),
    };

    write_output(cli.format, cli.out.as_deref(), &artifact, |f| {
        render(f, &artifact)
    })?;
    Ok(code)
}

fn render(format: Format, a: &VerifyArtifact) -> String {
    match format {
        Format::Csv => format!(
            "file,verdict,min_eigenvalue,method,seed\n{},{},{},{},{}\n",
            a.file,
            a.verdict,
            a.min_eigenvalue.map(|x| x.to_string()).unwrap_or_default(),
            a.method.clone().unwrap_or_default(),
            a.seed
        ),
        _ => {
            let mut s = format!("seed: {}\nfile: {}\nverdict: {}\n", a.seed, a.file, a.verdict);
            if let Some(m) = a.min_eigenvalue {
                s.push_str(&format!("witness min eigenvalue: {m}\n"));
            }
            if let Some(m) = &a.method {
                s.push_str(&format!("method: {m}\n"));
            }
            s
        }
    }
}

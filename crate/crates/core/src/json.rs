//! JSON schemas for phase spaces, Gaussian states, and channel specs.
//!
//! A space is either `{"n": int, "s": int}` (canonical hybrid) or
//! `{"sigma": [[...]]}` (explicit form matrix, e.g. for direct sums). A
//! Gaussian state is `{"mean": [...], "cov": [[...]]}`. A channel spec is
//! `{"S": [[...]], "lam": [...], "B": [[...]], "in": space, "out": space}`
//! with an optional `"noise"` string selecting a named non-Gaussian or
//! special noise body instead of the `(lam, B)` Gaussian one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{QuasifreeChannel, VerifyPolicy};
use crate::charfun::CharFn;
use crate::error::{Error, Result};
use crate::gaussian::GaussianChannel;
use crate::phasespace::{PhaseMap, PhaseSpace};
use crate::protocols;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SpaceSpec {
    Hybrid { n: usize, s: usize },
    Explicit { sigma: Vec<Vec<f64>> },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<PhaseSpace> {
        match self {
            SpaceSpec::Hybrid { n, s } => PhaseSpace::hybrid(*n, *s),
            SpaceSpec::Explicit { sigma } => PhaseSpace::from_sigma(rows_to_matrix(sigma)?),
        }
    }

    pub fn of(space: &PhaseSpace) -> SpaceSpec {
        let n = space.quantum_modes();
        let s = space.classical_dims();
        let canonical = PhaseSpace::hybrid(n, s)
            .map(|c| (c.sigma() - space.sigma()).abs().max() < 1e-15)
            .unwrap_or(false);
        if canonical {
            SpaceSpec::Hybrid { n, s }
        } else {
            SpaceSpec::Explicit {
                sigma: matrix_to_rows(space.sigma()),
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianStateSpec {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl GaussianStateSpec {
    pub fn build(&self, space: PhaseSpace) -> Result<CharFn> {
        CharFn::gaussian(
            space,
            DVector::from_vec(self.mean.clone()),
            rows_to_matrix(&self.cov)?,
        )
    }

    pub fn of(state: &CharFn) -> Result<GaussianStateSpec> {
        let (mean, cov) = state.gaussian_parts().ok_or_else(|| {
            Error::InvalidParameter("only Gaussian bodies are serializable".into())
        })?;
        Ok(GaussianStateSpec {
            mean: mean.iter().copied().collect(),
            cov: matrix_to_rows(cov),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(default)]
    pub lam: Option<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "in")]
    pub input: SpaceSpec,
    #[serde(rename = "out")]
    pub output: SpaceSpec,
    /// Named noise body overriding `(lam, B)`: `"one"` for `f = 1`, or
    /// `"two_mode_squeezed:lambda=<x>"` for the entangled resource diagonal.
    #[serde(default)]
    pub noise: Option<String>,
}

impl ChannelSpec {
    pub fn build(&self) -> Result<QuasifreeChannel> {
        let input = self.input.build()?;
        let output = self.output.build()?;
        let map = PhaseMap::new(output.clone(), input, rows_to_matrix(&self.s)?)?;
        let d = output.dim();
        if let Some(name) = &self.noise {
            let noise = named_noise(name, &map)?;
            return QuasifreeChannel::new(map, noise, VerifyPolicy::Default);
        }
        let lam = match &self.lam {
            Some(v) => DVector::from_vec(v.clone()),
            None => DVector::zeros(d),
        };
        let b = match &self.b {
            Some(rows) => rows_to_matrix(rows)?,
            None => DMatrix::zeros(d, d),
        };
        Ok(QuasifreeChannel::from_gaussian(&GaussianChannel::new(
            map, lam, b,
        )?))
    }

    pub fn of(channel: &QuasifreeChannel) -> Result<ChannelSpec> {
        let g = channel.as_gaussian().ok_or_else(|| {
            Error::InvalidParameter("only Gaussian channels are serializable".into())
        })?;
        Ok(ChannelSpec {
            s: matrix_to_rows(g.map().matrix()),
            lam: Some(g.lam().iter().copied().collect()),
            b: Some(matrix_to_rows(g.noise_cov())),
            input: SpaceSpec::of(g.input_space()),
            output: SpaceSpec::of(g.output_space()),
            noise: None,
        })
    }
}

/// Built-in named noise bodies for channel files. The noise lives on the
/// channel output space; its admissibility against `delta sigma` is still
/// checked by the channel constructor.
fn named_noise(name: &str, map: &PhaseMap) -> Result<CharFn> {
    let out = map.source();
    if name == "one" {
        return CharFn::point_at_origin(&out.classicized());
    }
    if let Some(rest) = name.strip_prefix("two_mode_squeezed:lambda=") {
        let lambda: f64 = rest
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad lambda in noise '{name}'")))?;
        let resource = protocols::two_mode_squeezed(lambda)?;
        if out.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: out.dim(),
            });
        }
        let diag = protocols::diagonal_noise(&resource)?;
        let (mean, cov) = diag.gaussian_parts().unwrap();
        return CharFn::gaussian(out.classicized(), mean.clone(), cov.clone());
    }
    Err(Error::InvalidParameter(format!(
        "unknown noise '{name}'; known: one, two_mode_squeezed:lambda=<x>"
    )))
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    for r in rows {
        if r.len() != ncols {
            return Err(Error::InvalidParameter(
                "ragged matrix rows in JSON input".into(),
            ));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_roundtrip() {
        let spec: SpaceSpec = serde_json::from_str(r#"{"n": 1, "s": 1}"#).unwrap();
        let space = spec.build().unwrap();
        assert_eq!(space.quantum_modes(), 1);
        assert_eq!(space.classical_dims(), 1);
        let back = SpaceSpec::of(&space);
        assert!(matches!(back, SpaceSpec::Hybrid { n: 1, s: 1 }));

        let spec: SpaceSpec =
            serde_json::from_str(r#"{"sigma": [[0.0, 1.0], [-1.0, 0.0]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().quantum_modes(), 1);
    }

    #[test]
    fn explicit_sigma_for_conjugate() {
        let conj = PhaseSpace::quantum(1).unwrap().conjugate();
        let spec = SpaceSpec::of(&conj);
        assert!(matches!(spec, SpaceSpec::Explicit { .. }));
        assert_eq!(spec.build().unwrap().sigma(), conj.sigma());
    }

    #[test]
    fn channel_roundtrip() {
        let text = r#"{
            "S": [[1.4142135623730951, 0.0], [0.0, 1.4142135623730951]],
            "lam": [0.0, 0.0],
            "B": [[0.5, 0.0], [0.0, 0.5]],
            "in": {"n": 1, "s": 0},
            "out": {"n": 1, "s": 0}
        }"#;
        let spec: ChannelSpec = serde_json::from_str(text).unwrap();
        let ch = spec.build().unwrap();
        assert!(ch.is_gaussian());
        let back = ChannelSpec::of(&ch).unwrap();
        let rebuilt = back.build().unwrap();
        assert_eq!(rebuilt.map().matrix(), ch.map().matrix());
    }

    #[test]
    fn amplifier_without_noise_rejected() {
        let text = r#"{
            "S": [[1.4142135623730951, 0.0], [0.0, 1.4142135623730951]],
            "in": {"n": 1, "s": 0},
            "out": {"n": 1, "s": 0},
            "noise": "one"
        }"#;
        let spec: ChannelSpec = serde_json::from_str(text).unwrap();
        assert!(matches!(
            spec.build(),
            Err(Error::NotCompletelyPositive { .. })
        ));
    }

    #[test]
    fn named_tms_noise() {
        let text = r#"{
            "S": [[1.0, 0.0], [0.0, 1.0]],
            "in": {"n": 1, "s": 0},
            "out": {"n": 1, "s": 0},
            "noise": "two_mode_squeezed:lambda=1.0"
        }"#;
        let spec: ChannelSpec = serde_json::from_str(text).unwrap();
        let ch = spec.build().unwrap();
        let (_, b) = ch.noise().gaussian_parts().unwrap();
        let v = (-2.0_f64).exp();
        assert!((b[(0, 0)] - v).abs() < 1e-12);
        assert!((b[(1, 1)] - v).abs() < 1e-12);
    }

    #[test]
    fn unknown_noise_rejected() {
        let text = r#"{
            "S": [[1.0]],
            "in": {"n": 0, "s": 1},
            "out": {"n": 0, "s": 1},
            "noise": "bogus"
        }"#;
        let spec: ChannelSpec = serde_json::from_str(text).unwrap();
        assert!(spec.build().is_err());
    }
}

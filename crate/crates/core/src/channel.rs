//! General quasifree channels `(S, f)` with possibly non-Gaussian noise
//! functions, their action on states, combinators, and the sampled complete
//! positivity check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::Arc;

use crate::charfun::{
    quantum_admissible_gaussian, sample_gaussian_vector, twisted_pd_check, Body, CharFn,
    Evaluator, SamplingPolicy, TwistedPdReport, Verdict,
};
use crate::error::{Error, Result};
use crate::gaussian::{block_diag, GaussianChannel};
use crate::phasespace::{PhaseMap, PhaseSpace};

/// What the constructor was able to establish about complete positivity.
/// A sampled pass is a failed falsification attempt, not a certificate; only
/// Gaussian noise bodies get `VerifiedExact`.
#[derive(Clone, Debug)]
pub enum CpStatus {
    VerifiedExact,
    SampledOk(TwistedPdReport),
    Unchecked,
}

/// Verification policy for [`QuasifreeChannel::new`].
#[derive(Clone, Debug, Default)]
pub enum VerifyPolicy {
    /// Exact admissibility for Gaussian noise, default sampling otherwise.
    #[default]
    Default,
    /// Sampled twisted positive definiteness with an explicit policy.
    Sampled(SamplingPolicy),
    /// No check; cp_status stays `Unchecked`.
    Skip,
}

/// Quasifree channel: `chi_out(xi) = f(xi) chi_in(S xi)` with the noise
/// function `f` stored as a state on the noise space `(Xi_out, delta_sigma)`.
#[derive(Clone, Debug)]
pub struct QuasifreeChannel {
    map: PhaseMap,
    noise: CharFn,
    delta: DMatrix<f64>,
    cp_status: CpStatus,
}

fn noise_phase_space(delta: &DMatrix<f64>) -> Result<PhaseSpace> {
    if delta.is_empty() {
        Ok(PhaseSpace::trivial())
    } else {
        PhaseSpace::from_sigma(delta.clone())
    }
}

impl QuasifreeChannel {
    /// `noise` may live on any space of the output dimension; it is rebased
    /// onto the noise space `(Xi_out, delta_sigma)` before verification.
    pub fn new(map: PhaseMap, noise: CharFn, verify: VerifyPolicy) -> Result<Self> {
        let d_out = map.source().dim();
        if noise.space().dim() != d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                got: noise.space().dim(),
            });
        }
        let delta = map.delta_sigma();
        let noise_space = noise_phase_space(&delta)?;
        let noise = rebase(&noise, noise_space);

        let cp_status = match (&verify, noise.body()) {
            (VerifyPolicy::Skip, _) => CpStatus::Unchecked,
            (_, Body::Gaussian { cov, .. }) => {
                let (ok, min) = quantum_admissible_gaussian(cov, &delta);
                if !ok {
                    return Err(Error::NotCompletelyPositive {
                        min_eigenvalue: min,
                        report: Box::new(TwistedPdReport {
                            verdict: Verdict::Fail,
                            min_eigenvalue: min,
                            witness_points: Vec::new(),
                            samples_used: 0,
                            seed: 0,
                            exact: true,
                        }),
                    });
                }
                CpStatus::VerifiedExact
            }
            (policy, Body::General { .. }) => {
                check_hermiticity(&noise)?;
                let sampling = match policy {
                    VerifyPolicy::Sampled(p) => p.clone(),
                    _ => SamplingPolicy::default(),
                };
                let report = twisted_pd_check(&noise, &delta, &sampling)?;
                if report.verdict == Verdict::Fail {
                    return Err(Error::NotCompletelyPositive {
                        min_eigenvalue: report.min_eigenvalue,
                        report: Box::new(report),
                    });
                }
                CpStatus::SampledOk(report)
            }
        };

        Ok(QuasifreeChannel {
            map,
            noise,
            delta,
            cp_status,
        })
    }

    pub fn from_gaussian(ch: &GaussianChannel) -> Self {
        QuasifreeChannel {
            map: ch.map().clone(),
            noise: ch
                .noise_charfn()
                .expect("valid Gaussian channel has a noise state"),
            delta: ch.delta_sigma().clone(),
            cp_status: CpStatus::VerifiedExact,
        }
    }

    pub fn identity(space: &PhaseSpace) -> Self {
        QuasifreeChannel::from_gaussian(&GaussianChannel::identity(space))
    }

    /// A state as a channel from the trivial input system.
    pub fn preparation(state: &CharFn) -> Result<Self> {
        let out = state.space().clone();
        let map = PhaseMap::new(
            out,
            PhaseSpace::trivial(),
            DMatrix::zeros(0, state.space().dim()),
        )?;
        QuasifreeChannel::new(map, state.clone(), VerifyPolicy::Default)
    }

    /// The channel to the trivial system that discards everything.
    pub fn destructive(space: &PhaseSpace) -> Result<Self> {
        let map = PhaseMap::new(
            PhaseSpace::trivial(),
            space.clone(),
            DMatrix::zeros(space.dim(), 0),
        )?;
        let noise = CharFn::gaussian(
            PhaseSpace::trivial(),
            DVector::zeros(0),
            DMatrix::zeros(0, 0),
        )?;
        QuasifreeChannel::new(map, noise, VerifyPolicy::Default)
    }

    pub fn map(&self) -> &PhaseMap {
        &self.map
    }

    pub fn noise(&self) -> &CharFn {
        &self.noise
    }

    pub fn delta_sigma(&self) -> &DMatrix<f64> {
        &self.delta
    }

    pub fn cp_status(&self) -> &CpStatus {
        &self.cp_status
    }

    pub fn input_space(&self) -> &PhaseSpace {
        self.map.target()
    }

    pub fn output_space(&self) -> &PhaseSpace {
        self.map.source()
    }

    pub fn is_gaussian(&self) -> bool {
        self.noise.is_gaussian()
    }

    /// The Gaussian record of the channel, when the noise body is Gaussian.
    pub fn as_gaussian(&self) -> Option<GaussianChannel> {
        let (mean, cov) = self.noise.gaussian_parts()?;
        GaussianChannel::new(self.map.clone(), mean.clone(), cov.clone()).ok()
    }

    pub fn apply(&self, state: &CharFn) -> Result<CharFn> {
        if state.space() != self.input_space() {
            return Err(Error::SpaceMismatch {
                context: "apply: state space differs from channel input space".into(),
            });
        }
        if state.is_gaussian() {
            if let Some(g) = self.as_gaussian() {
                return g.apply(state);
            }
        }
        let map = self.map.clone();
        let noise = self.noise.clone();
        let state = state.clone();
        let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| {
            noise.evaluate_unchecked(xi) * state.evaluate_unchecked(&map.apply(xi))
        });
        CharFn::general(self.output_space().clone(), eval, "channel output")
    }

    /// Heisenberg action on a Weyl element: the image of `W_out(xi)` is
    /// `f(xi) W_in(S xi)`.
    pub fn heisenberg_weyl(&self, xi: &DVector<f64>) -> Result<(Complex64, DVector<f64>)> {
        self.output_space().check_vector(xi)?;
        Ok((self.noise.evaluate_unchecked(xi), self.map.apply(xi)))
    }

    /// `self` applied after `earlier` in state order; noise functions combine
    /// as `f(xi) = f_self(xi) f_earlier(S_self xi)`.
    pub fn concatenate(&self, earlier: &QuasifreeChannel) -> Result<QuasifreeChannel> {
        if earlier.output_space() != self.input_space() {
            return Err(Error::SpaceMismatch {
                context: "concatenate: earlier output space differs from later input space".into(),
            });
        }
        if let (Some(g1), Some(g2)) = (self.as_gaussian(), earlier.as_gaussian()) {
            return Ok(QuasifreeChannel::from_gaussian(&g1.compose(&g2)?));
        }
        let map = self.map.compose(&earlier.map)?;
        let delta = map.delta_sigma();
        let space = noise_phase_space(&delta)?;
        let f1 = self.noise.clone();
        let f2 = earlier.noise.clone();
        let s1 = self.map.clone();
        let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| {
            f1.evaluate_unchecked(xi) * f2.evaluate_unchecked(&s1.apply(xi))
        });
        let noise = CharFn::general(space, eval, "concatenated noise")?;
        // CP of the composite follows from CP of the parts; re-sampling would
        // not add information, so the status degrades to unchecked unless
        // both parts were exact.
        Ok(QuasifreeChannel {
            map,
            noise,
            delta,
            cp_status: CpStatus::Unchecked,
        })
    }

    pub fn tensor(&self, other: &QuasifreeChannel) -> Result<QuasifreeChannel> {
        if let (Some(g1), Some(g2)) = (self.as_gaussian(), other.as_gaussian()) {
            return Ok(QuasifreeChannel::from_gaussian(&g1.tensor(&g2)?));
        }
        let source = self.output_space().direct_sum(other.output_space());
        let target = self.input_space().direct_sum(other.input_space());
        let map = PhaseMap::new(
            source,
            target,
            block_diag(self.map.matrix(), other.map.matrix()),
        )?;
        let delta = map.delta_sigma();
        let space = noise_phase_space(&delta)?;
        let f1 = self.noise.clone();
        let f2 = other.noise.clone();
        let d1 = self.output_space().dim();
        let d2 = other.output_space().dim();
        let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| {
            f1.evaluate_unchecked(&xi.rows(0, d1).into_owned())
                * f2.evaluate_unchecked(&xi.rows(d1, d2).into_owned())
        });
        let noise = CharFn::general(space, eval, "tensor noise")?;
        Ok(QuasifreeChannel {
            map,
            noise,
            delta,
            cp_status: CpStatus::Unchecked,
        })
    }

    /// Keep only a coordinate subset of the output: concatenation with the
    /// noiseless restriction channel.
    pub fn marginal_channel(&self, keep: &[usize]) -> Result<QuasifreeChannel> {
        let out = self.output_space();
        let sub = out.restrict(keep)?;
        let mut embed = DMatrix::zeros(out.dim(), keep.len());
        for (j, &i) in keep.iter().enumerate() {
            embed[(i, j)] = 1.0;
        }
        let restriction = QuasifreeChannel::new(
            PhaseMap::new(sub.clone(), out.clone(), embed)?,
            CharFn::point_at_origin(&sub.classicized())?,
            VerifyPolicy::Default,
        )?;
        restriction.concatenate(self)
    }

    /// Translate the noise state: multiplies `f` by `exp(i xi.eta)`.
    pub fn translate_channel(&self, xi: &DVector<f64>) -> Result<QuasifreeChannel> {
        let noise = self.noise.translate(xi)?;
        Ok(QuasifreeChannel {
            map: self.map.clone(),
            noise,
            delta: self.delta.clone(),
            cp_status: self.cp_status.clone(),
        })
    }
}

fn rebase(noise: &CharFn, space: PhaseSpace) -> CharFn {
    match noise.body() {
        Body::Gaussian { mean, cov } => {
            CharFn::gaussian(space, mean.clone(), cov.clone()).expect("shape-checked rebase")
        }
        Body::General { .. } => {
            // keep the evaluator, swap the bookkeeping space
            let inner = noise.clone();
            let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| inner.evaluate_unchecked(xi));
            CharFn::general(space, eval, "noise").expect("rebase of a valid noise function")
        }
    }
}

fn check_hermiticity(noise: &CharFn) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4845_524d);
    for _ in 0..16 {
        let xi = sample_gaussian_vector(&mut rng, noise.space().dim(), 1.0);
        let plus = noise.evaluate_unchecked(&xi);
        let minus = noise.evaluate_unchecked(&(-&xi));
        if (plus - minus.conj()).norm() > 1e-9 {
            return Err(Error::InvalidParameter(
                "noise function is not Hermitian: f(-xi) != conj f(xi)".into(),
            ));
        }
    }
    Ok(())
}

/// `cb`-norm distance of two Gaussian channels that differ only in their
/// displacement `lam`, with classical noise (`delta_sigma = 0`). In that case
/// the distance is the total variation distance of two equal-covariance
/// normal distributions: `2 (2 Phi(d / (2 sigma)) - 1)` with `d` the mean
/// separation and `sigma` the noise standard deviation along it.
pub fn cb_distance_gaussian(t1: &GaussianChannel, t2: &GaussianChannel) -> Result<f64> {
    let same_s = (t1.map().matrix() - t2.map().matrix()).abs().max() < 1e-12;
    if !same_s {
        return Err(Error::InvalidParameter(
            "cb_distance_gaussian needs identical S".into(),
        ));
    }
    let same_b = if t1.noise_cov().is_empty() {
        t2.noise_cov().is_empty()
    } else {
        (t1.noise_cov() - t2.noise_cov()).abs().max() < 1e-12
    };
    if !same_b {
        return Err(Error::InvalidParameter(
            "cb_distance_gaussian needs identical B".into(),
        ));
    }
    if !t1.delta_sigma().is_empty() && t1.delta_sigma().abs().max() > 1e-10 {
        return Err(Error::InvalidParameter(
            "cb_distance_gaussian implemented for classical noise only".into(),
        ));
    }
    let diff = t1.lam() - t2.lam();
    let d = diff.norm();
    if d == 0.0 {
        return Ok(0.0);
    }
    let u = diff / d;
    let var = (t1.noise_cov() * &u).dot(&u);
    if var <= 1e-24 {
        // point measures at distinct points are orthogonal
        return Ok(2.0);
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(2.0 * (2.0 * normal.cdf(d / (2.0 * var.sqrt())) - 1.0))
}

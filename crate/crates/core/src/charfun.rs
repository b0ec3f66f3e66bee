//! Characteristic functions of hybrid states and the twisted
//! positive-definiteness test.
//!
//! Convention fixed for the whole crate: a Gaussian characteristic function is
//! `chi(xi) = exp(i m.xi - (1/2) xi^T A xi)`, and `A` is admissible as a
//! quantum covariance on `(Xi, sigma)` iff `A + (i/2) sigma >= 0`. With this
//! normalization the oscillator ground state is `exp(-xi^2/4)`, i.e. `A = I/2`
//! with minimal eigenvalue exactly 0 in the admissibility matrix. The Fock
//! oracle confirms the vacuum independently.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::phasespace::PhaseSpace;

pub const SYM_TOL: f64 = 1e-12;

pub type Evaluator = Arc<dyn Fn(&DVector<f64>) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum Body {
    Gaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    },
    General {
        eval: Evaluator,
        description: String,
    },
}

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Gaussian { mean, cov } => f
                .debug_struct("Gaussian")
                .field("mean", mean)
                .field("cov", cov)
                .finish(),
            Body::General { description, .. } => f
                .debug_struct("General")
                .field("description", description)
                .finish(),
        }
    }
}

/// Characteristic function of a state on a hybrid phase space.
#[derive(Clone, Debug)]
pub struct CharFn {
    space: PhaseSpace,
    body: Body,
}

impl CharFn {
    /// Gaussian body `exp(i m.xi - (1/2) xi^T A xi)`.
    pub fn gaussian(space: PhaseSpace, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: mean.len(),
            });
        }
        if cov.nrows() != space.dim() || cov.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: cov.nrows(),
            });
        }
        if !cov.is_empty() {
            let residual = (&cov - cov.transpose()).abs().max();
            if residual > SYM_TOL {
                return Err(Error::NotSymmetric { residual });
            }
        }
        Ok(CharFn {
            space,
            body: Body::Gaussian { mean, cov },
        })
    }

    /// Vacuum-type state `A = I/2`, `m = 0` (quantum modes get the minimal
    /// uncertainty covariance; classical directions a sharp point at 0 would
    /// need `A = 0` there, so this is meant for purely quantum spaces).
    pub fn vacuum(space: &PhaseSpace) -> Result<Self> {
        let d = space.dim();
        CharFn::gaussian(
            space.clone(),
            DVector::zeros(d),
            DMatrix::identity(d, d) * 0.5,
        )
    }

    /// Point measure at the origin: `chi == 1`.
    pub fn point_at_origin(space: &PhaseSpace) -> Result<Self> {
        let d = space.dim();
        CharFn::gaussian(space.clone(), DVector::zeros(d), DMatrix::zeros(d, d))
    }

    /// General body from a pure evaluator. Checks `eval(0) = 1` and spot
    /// checks `|chi| <= 1` on 32 seeded Gaussian sample points.
    pub fn general(
        space: PhaseSpace,
        eval: Evaluator,
        description: impl Into<String>,
    ) -> Result<Self> {
        let at_zero = eval(&DVector::zeros(space.dim()));
        if (at_zero - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::NotNormalized {
                value: format!("{at_zero}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x57_45_59_4c);
        for _ in 0..32 {
            let xi = sample_gaussian_vector(&mut rng, space.dim(), 1.0);
            let modulus = eval(&xi).norm();
            if modulus > 1.0 + 1e-9 {
                return Err(Error::ModulusExceeded { modulus });
            }
        }
        Ok(CharFn {
            space,
            body: Body::General {
                eval,
                description: description.into(),
            },
        })
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn gaussian_parts(&self) -> Option<(&DVector<f64>, &DMatrix<f64>)> {
        match &self.body {
            Body::Gaussian { mean, cov } => Some((mean, cov)),
            Body::General { .. } => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.body, Body::Gaussian { .. })
    }

    pub fn evaluate(&self, xi: &DVector<f64>) -> Result<Complex64> {
        self.space.check_vector(xi)?;
        Ok(self.evaluate_unchecked(xi))
    }

    pub(crate) fn evaluate_unchecked(&self, xi: &DVector<f64>) -> Complex64 {
        match &self.body {
            Body::Gaussian { mean, cov } => {
                let quad = (cov * xi).dot(xi);
                Complex64::new(-0.5 * quad, mean.dot(xi)).exp()
            }
            Body::General { eval, .. } => eval(xi),
        }
    }

    /// Translate by `eta`: `chi'(xi) = exp(i eta.xi) chi(xi)`.
    pub fn translate(&self, eta: &DVector<f64>) -> Result<CharFn> {
        self.space.check_vector(eta)?;
        match &self.body {
            Body::Gaussian { mean, cov } => CharFn::gaussian(
                self.space.clone(),
                mean + eta,
                cov.clone(),
            ),
            Body::General { eval, description } => {
                let eta = eta.clone();
                let inner = eval.clone();
                let wrapped: Evaluator = Arc::new(move |xi: &DVector<f64>| {
                    Complex64::new(0.0, eta.dot(xi)).exp() * inner(xi)
                });
                Ok(CharFn {
                    space: self.space.clone(),
                    body: Body::General {
                        eval: wrapped,
                        description: format!("translate({description})"),
                    },
                })
            }
        }
    }

    /// Convolution: pointwise product of characteristic functions, on the
    /// space with form `s1 sigma1 + s2 sigma2`.
    pub fn convolve(&self, other: &CharFn, signs: (i8, i8)) -> Result<CharFn> {
        if self.space.dim() != other.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: other.space.dim(),
            });
        }
        let sigma = self.space.sigma() * signs.0 as f64 + other.space.sigma() * signs.1 as f64;
        let space = PhaseSpace::from_sigma(sigma)?;
        match (&self.body, &other.body) {
            (Body::Gaussian { mean: m1, cov: a1 }, Body::Gaussian { mean: m2, cov: a2 }) => {
                CharFn::gaussian(space, m1 + m2, a1 + a2)
            }
            _ => {
                let f1 = self.clone();
                let f2 = other.clone();
                let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| {
                    f1.evaluate_unchecked(xi) * f2.evaluate_unchecked(xi)
                });
                Ok(CharFn {
                    space,
                    body: Body::General {
                        eval,
                        description: "convolution".to_string(),
                    },
                })
            }
        }
    }

    /// Restriction of `chi` to a coordinate subset (complementary coordinates
    /// set to zero): the characteristic function of the marginal state.
    pub fn marginal(&self, keep: &[usize]) -> Result<CharFn> {
        let sub = self.space.restrict(keep)?;
        match &self.body {
            Body::Gaussian { mean, cov } => {
                let m = DVector::from_fn(keep.len(), |i, _| mean[keep[i]]);
                let a = DMatrix::from_fn(keep.len(), keep.len(), |r, c| cov[(keep[r], keep[c])]);
                CharFn::gaussian(sub, m, a)
            }
            Body::General { eval, description } => {
                let keep = keep.to_vec();
                let dim = self.space.dim();
                let inner = eval.clone();
                let wrapped: Evaluator = Arc::new(move |xi: &DVector<f64>| {
                    let mut full = DVector::zeros(dim);
                    for (i, &k) in keep.iter().enumerate() {
                        full[k] = xi[i];
                    }
                    inner(&full)
                });
                Ok(CharFn {
                    space: sub,
                    body: Body::General {
                        eval: wrapped,
                        description: format!("marginal({description})"),
                    },
                })
            }
        }
    }
}

/// Is `A` the covariance matrix of a quantum state on `(Xi, sigma)`?
/// Checks `A + (i/2) sigma >= 0`; returns the verdict together with the
/// minimal eigenvalue of the Hermitian admissibility matrix.
pub fn quantum_admissible_gaussian(cov: &DMatrix<f64>, sigma: &DMatrix<f64>) -> (bool, f64) {
    let min = admissibility_min_eigenvalue(cov, sigma);
    let scale = spectral_radius_sym(cov).max(1.0);
    (min >= -1e-9 * scale, min)
}

/// Minimal eigenvalue of `A + (i/2) sigma`.
pub fn admissibility_min_eigenvalue(cov: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let d = cov.nrows();
    let m = DMatrix::from_fn(d, d, |r, c| Complex64::new(cov[(r, c)], 0.5 * sigma[(r, c)]));
    hermitian_eigen_range(&m).0
}

fn spectral_radius_sym(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &e| acc.max(e.abs()))
}

/// (min, max) eigenvalue of a Hermitian complex matrix, Hermitized first to
/// kill non-Hermitian roundoff.
pub(crate) fn hermitian_eigen_range(m: &DMatrix<Complex64>) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eigs = herm.symmetric_eigen().eigenvalues;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &e in eigs.iter() {
        min = min.min(e);
        max = max.max(e);
    }
    (min, max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No violation found. Conclusive only for exact (Gaussian) checks.
    Pass,
    /// A Gram matrix with a negative eigenvalue was found.
    Fail,
    Inconclusive,
}

/// Result of a twisted positive-definiteness check.
#[derive(Clone, Debug)]
pub struct TwistedPdReport {
    pub verdict: Verdict,
    pub min_eigenvalue: f64,
    /// Points of the worst Gram matrix, present on failure.
    pub witness_points: Vec<DVector<f64>>,
    pub samples_used: usize,
    pub seed: u64,
    /// True when the verdict comes from the exact Gaussian admissibility test.
    pub exact: bool,
}

/// How `twisted_pd_check` draws its sample point sets.
#[derive(Clone, Debug)]
pub struct SamplingPolicy {
    pub gram_count: usize,
    pub gram_size: usize,
    pub scales: Vec<f64>,
    pub seed: u64,
    /// Extra user-supplied points; all pairs and triples are also tested.
    pub explicit_points: Vec<DVector<f64>>,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            gram_count: 64,
            gram_size: 8,
            scales: vec![0.25, 1.0, 4.0],
            seed: 0x7150_b0c4,
            explicit_points: Vec::new(),
        }
    }
}

pub(crate) fn sample_gaussian_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DVector<f64> {
    // Box-Muller; two uniforms per normal, deterministic under the seed.
    DVector::from_fn(dim, |_, _| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        scale * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

/// Build the Gram matrix `M_kl = chi(-xi_k + xi_l) exp(-(i/2) xi_k . form xi_l)`
/// for a point set.
pub fn gram_matrix(
    chi: &dyn Fn(&DVector<f64>) -> Complex64,
    form: &DMatrix<f64>,
    points: &[DVector<f64>],
) -> DMatrix<Complex64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |k, l| {
        let diff = &points[l] - &points[k];
        let twist = (form * &points[l]).dot(&points[k]);
        chi(&diff) * Complex64::new(0.0, -0.5 * twist).exp()
    })
}

/// Sampled Bochner test: searches for a Gram matrix of
/// `M_kl = chi(-xi_k + xi_l) exp(-(i/2) xi_k . form xi_l)` with a negative
/// eigenvalue. For zero-mean Gaussian bodies the exact admissibility test is
/// used instead and the verdict is conclusive.
pub fn twisted_pd_check(
    chi: &CharFn,
    form: &DMatrix<f64>,
    policy: &SamplingPolicy,
) -> Result<TwistedPdReport> {
    let dim = chi.space().dim();
    if form.nrows() != dim || form.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: form.nrows(),
        });
    }

    if let Some((mean, cov)) = chi.gaussian_parts() {
        if mean.iter().all(|&m| m == 0.0) {
            let (ok, min) = quantum_admissible_gaussian(cov, form);
            return Ok(TwistedPdReport {
                verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                min_eigenvalue: min,
                witness_points: Vec::new(),
                samples_used: 0,
                seed: policy.seed,
                exact: true,
            });
        }
    }

    if policy.gram_count == 0 && policy.explicit_points.is_empty() {
        return Err(Error::EmptySamplingPolicy);
    }

    let eval = |xi: &DVector<f64>| chi.evaluate_unchecked(xi);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut worst_min = f64::INFINITY;
    let mut worst_points: Vec<DVector<f64>> = Vec::new();
    let mut samples = 0usize;
    let mut failed = false;

    let consider = |points: &[DVector<f64>],
                        samples: &mut usize,
                        worst_min: &mut f64,
                        worst_points: &mut Vec<DVector<f64>>,
                        failed: &mut bool| {
        if points.is_empty() {
            return;
        }
        *samples += points.len();
        let gram = gram_matrix(&eval, form, points);
        let (min, max) = hermitian_eigen_range(&gram);
        if min < *worst_min {
            *worst_min = min;
            *worst_points = points.to_vec();
        }
        if min < -1e-7 * max.max(1.0) {
            *failed = true;
        }
    };

    for i in 0..policy.gram_count {
        let scale = policy.scales[i % policy.scales.len().max(1)];
        let points: Vec<DVector<f64>> = (0..policy.gram_size)
            .map(|_| sample_gaussian_vector(&mut rng, dim, scale))
            .collect();
        consider(&points, &mut samples, &mut worst_min, &mut worst_points, &mut failed);
    }

    let pts = &policy.explicit_points;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let pair = vec![pts[i].clone(), pts[j].clone()];
            consider(&pair, &mut samples, &mut worst_min, &mut worst_points, &mut failed);
            for k in (j + 1)..pts.len() {
                let triple = vec![pts[i].clone(), pts[j].clone(), pts[k].clone()];
                consider(&triple, &mut samples, &mut worst_min, &mut worst_points, &mut failed);
            }
        }
    }

    Ok(TwistedPdReport {
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        min_eigenvalue: worst_min,
        witness_points: if failed { worst_points } else { Vec::new() },
        samples_used: samples,
        seed: policy.seed,
        exact: false,
    })
}

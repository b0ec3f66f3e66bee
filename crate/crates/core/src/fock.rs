//! Truncated Fock-space oracle. Everything here is built from dense matrices
//! on the first `N` oscillator levels and serves as an independent numerical
//! cross-check for the phase space calculus: Weyl operators by matrix
//! exponential, characteristic functions by trace, the Fourier transform on
//! operators, and quadrature versions of the Parseval and translate-average
//! identities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Truncated single-mode representation: annihilation `a`, quadratures
/// `Q = (a + a*)/sqrt(2)` and `P = (a - a*)/(i sqrt(2))`, with a cache of
/// Weyl matrices keyed by a quantized argument grid.
pub struct FockRep {
    cutoff: usize,
    a: DMatrix<Complex64>,
    q: DMatrix<Complex64>,
    p: DMatrix<Complex64>,
    weyl_cache: Mutex<HashMap<(i64, i64), Arc<DMatrix<Complex64>>>>,
}

/// Resolution of the Weyl cache key grid.
const CACHE_QUANTUM: f64 = 1e-9;

impl FockRep {
    pub fn new(cutoff: usize) -> Self {
        let mut a = DMatrix::zeros(cutoff, cutoff);
        for n in 1..cutoff {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let adag = a.adjoint();
        let q = (&a + &adag) / Complex64::new(2.0_f64.sqrt(), 0.0);
        let p = (&a - &adag) / Complex64::new(0.0, 2.0_f64.sqrt());
        FockRep {
            cutoff,
            a,
            q,
            p,
            weyl_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn annihilation(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn position(&self) -> &DMatrix<Complex64> {
        &self.q
    }

    pub fn momentum(&self) -> &DMatrix<Complex64> {
        &self.p
    }

    /// `W(xi) = exp(i (xi_q Q + xi_p P))` by scaling-and-squaring matrix
    /// exponential, cached.
    pub fn weyl(&self, xi_q: f64, xi_p: f64) -> Arc<DMatrix<Complex64>> {
        let key = (
            (xi_q / CACHE_QUANTUM).round() as i64,
            (xi_p / CACHE_QUANTUM).round() as i64,
        );
        if let Some(hit) = self.weyl_cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let gen = (&self.q * Complex64::new(0.0, xi_q)) + (&self.p * Complex64::new(0.0, xi_p));
        let w = Arc::new(gen.exp());
        self.weyl_cache
            .lock()
            .unwrap()
            .entry(key)
            .or_insert(w)
            .clone()
    }

    /// `chi(xi) = tr(rho W(xi))` for a normalized density matrix.
    pub fn charfn_of_density(
        &self,
        rho: &DMatrix<Complex64>,
        xi_q: f64,
        xi_p: f64,
    ) -> Result<Complex64> {
        let trace = rho.trace();
        if (trace - C1).norm() > 1e-8 {
            return Err(Error::BadDensity { trace: trace.re });
        }
        Ok((rho * self.weyl(xi_q, xi_p).as_ref()).trace())
    }

    /// Fourier transform on operators: `xi -> tr(F W(xi))`.
    pub fn fourier_weyl(&self, f: &DMatrix<Complex64>, xi_q: f64, xi_p: f64) -> Complex64 {
        (f * self.weyl(xi_q, xi_p).as_ref()).trace()
    }

    /// Residual of the Weyl relation
    /// `W(xi) W(eta) = exp(-(i/2) xi.sigma(eta)) W(xi + eta)` measured in
    /// spectral norm after projecting onto the first `levels` Fock states.
    pub fn weyl_relation_residual(&self, xi: (f64, f64), eta: (f64, f64), levels: usize) -> f64 {
        let w1 = self.weyl(xi.0, xi.1);
        let w2 = self.weyl(eta.0, eta.1);
        let w12 = self.weyl(xi.0 + eta.0, xi.1 + eta.1);
        let phase = Complex64::new(0.0, -0.5 * (xi.0 * eta.1 - xi.1 * eta.0)).exp();
        let diff = w1.as_ref() * w2.as_ref() - w12.as_ref() * phase;
        let block = diff.columns(0, levels.min(self.cutoff)).into_owned();
        block.svd(false, false).singular_values[0]
    }

    /// Dense unitary displacement `D(alpha) = exp(alpha a* - conj(alpha) a)`;
    /// `W(xi) = D(alpha)` for `alpha = (-xi_p + i xi_q)/sqrt(2)`.
    fn displacement(&self, alpha: Complex64) -> DMatrix<Complex64> {
        let gen = self.a.adjoint() * alpha - &self.a * alpha.conj();
        gen.exp()
    }

    /// Standard Gaussian density matrices with a tail-mass guard.
    pub fn gaussian_state_matrix(&self, kind: GaussianKind) -> Result<DMatrix<Complex64>> {
        let n = self.cutoff;
        let rho = match kind {
            GaussianKind::Vacuum => {
                let mut rho = DMatrix::zeros(n, n);
                rho[(0, 0)] = C1;
                rho
            }
            GaussianKind::Coherent(alpha) => {
                let d = self.displacement(alpha);
                let mut vac = DMatrix::zeros(n, n);
                vac[(0, 0)] = C1;
                &d * vac * d.adjoint()
            }
            GaussianKind::Thermal(t) => {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::InvalidParameter(
                        "thermal parameter must satisfy 0 <= t < 1".into(),
                    ));
                }
                let weights: Vec<f64> = (0..n).map(|k| (1.0 - t) * t.powi(k as i32)).collect();
                let norm: f64 = weights.iter().sum();
                DMatrix::from_diagonal(&DVector::from_iterator(
                    n,
                    weights.iter().map(|w| Complex64::new(w / norm, 0.0)),
                ))
            }
            GaussianKind::Squeezed(r) => {
                // U = exp((r/2)(a*^2 - a^2)) amplifies the position quadrature
                let adag = self.a.adjoint();
                let gen = (&adag * &adag - &self.a * &self.a) * Complex64::new(r / 2.0, 0.0);
                let u = gen.exp();
                let mut vac = DMatrix::zeros(n, n);
                vac[(0, 0)] = C1;
                &u * vac * u.adjoint()
            }
        };
        let guard = (n / 10).max(2);
        let tail: f64 = (n - guard..n).map(|k| rho[(k, k)].re).sum();
        if tail.abs() > 1e-10 {
            return Err(Error::TruncationTooSmall {
                tail: tail.abs(),
                cutoff: n,
            });
        }
        Ok(rho)
    }

    /// `D(alpha) u` through the normally ordered factorization
    /// `exp(-|alpha|^2/2) exp(alpha a*) exp(-conj(alpha) a)`, exact on the
    /// truncated space for vectors supported away from the cutoff.
    pub fn displace_vector(&self, alpha: Complex64, u: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.cutoff;
        // v = exp(-conj(alpha) a) u
        let mut v = u.clone();
        let mut term = u.clone();
        for k in 1..n {
            let mut next = DVector::zeros(n);
            for m in 0..n - 1 {
                next[m] = term[m + 1] * Complex64::new(((m + 1) as f64).sqrt(), 0.0);
            }
            term = next * (-alpha.conj() / Complex64::new(k as f64, 0.0));
            if term.norm() < 1e-300 {
                break;
            }
            v += &term;
        }
        // w = exp(alpha a*) v
        let mut w = v.clone();
        let mut term = v;
        for k in 1..n {
            let mut next = DVector::zeros(n);
            for m in 1..n {
                next[m] = term[m - 1] * Complex64::new((m as f64).sqrt(), 0.0);
            }
            term = next * (alpha / Complex64::new(k as f64, 0.0));
            if term.norm() < 1e-300 {
                break;
            }
            w += &term;
        }
        w * Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0)
    }

    /// Low-rank factorization of an operator for the quadrature fast paths.
    fn factor(&self, f: &DMatrix<Complex64>) -> Vec<(Complex64, DVector<Complex64>, DVector<Complex64>)> {
        let svd = f.clone().svd(true, true);
        let u = svd.u.as_ref().unwrap();
        let vt = svd.v_t.as_ref().unwrap();
        let smax = svd.singular_values.max().max(1e-300);
        let mut terms = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > 1e-13 * smax {
                terms.push((
                    Complex64::new(s, 0.0),
                    u.column(i).into_owned(),
                    vt.row(i).adjoint(),
                ));
            }
        }
        terms
    }

    /// `tr(F W(xi))` via the factored displacement series; agrees with
    /// `fourier_weyl` up to truncation and is much cheaper on dense grids.
    fn fourier_factored(
        &self,
        terms: &[(Complex64, DVector<Complex64>, DVector<Complex64>)],
        alpha: Complex64,
    ) -> Complex64 {
        // tr(F W) = sum_i s_i <v_i| W |u_i>
        terms
            .iter()
            .map(|(s, u, v)| *s * v.dotc(&self.displace_vector(alpha, u)))
            .sum()
    }

    fn alpha_of(xi_q: f64, xi_p: f64) -> Complex64 {
        Complex64::new(-xi_p, xi_q) / Complex64::new(2.0_f64.sqrt(), 0.0)
    }

    /// Parseval identity `tr(F* G) = (2 pi)^{-1} int conj(FF)(xi) FG(xi) dxi`
    /// by uniform quadrature over `|xi_i| <= radius` with `points` nodes per
    /// axis (odd, so the half-resolution subgrid is available for the
    /// Richardson error estimate).
    pub fn parseval_check(
        &self,
        f: &DMatrix<Complex64>,
        g: &DMatrix<Complex64>,
        radius: f64,
        points: usize,
    ) -> Result<QuadratureCheck> {
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidParameter(
                "quadrature needs an odd number of points >= 3".into(),
            ));
        }
        let lhs = (f.adjoint() * g).trace();
        let tf = self.factor(f);
        let tg = self.factor(g);
        let h = 2.0 * radius / (points - 1) as f64;
        let mut fine = C0;
        let mut coarse = C0;
        for i in 0..points {
            let xq = -radius + i as f64 * h;
            for j in 0..points {
                let xp = -radius + j as f64 * h;
                let alpha = Self::alpha_of(xq, xp);
                let val = self.fourier_factored(&tf, alpha).conj()
                    * self.fourier_factored(&tg, alpha);
                fine += val;
                if i % 2 == 0 && j % 2 == 0 {
                    coarse += val;
                }
            }
        }
        let norm = Complex64::new(h * h / (2.0 * std::f64::consts::PI), 0.0);
        let rhs = fine * norm;
        let rhs_coarse = coarse * norm * Complex64::new(4.0, 0.0);
        Ok(QuadratureCheck::new(lhs, rhs, (rhs - rhs_coarse).norm()))
    }

    /// Translate-average identity
    /// `int tr(F W(sigma xi)* G W(sigma xi)) dxi = 2 pi tr(F) tr(G)`.
    pub fn translate_average_check(
        &self,
        f: &DMatrix<Complex64>,
        g: &DMatrix<Complex64>,
        radius: f64,
        points: usize,
    ) -> Result<QuadratureCheck> {
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidParameter(
                "quadrature needs an odd number of points >= 3".into(),
            ));
        }
        let lhs = f.trace() * g.trace() * Complex64::new(2.0 * std::f64::consts::PI, 0.0);
        let tf = self.factor(f);
        let tg = self.factor(g);
        let h = 2.0 * radius / (points - 1) as f64;
        let mut fine = C0;
        let mut coarse = C0;
        for i in 0..points {
            let xq = -radius + i as f64 * h;
            for j in 0..points {
                let xp = -radius + j as f64 * h;
                // sigma (xq, xp) = (xp, -xq); the integral is invariant under
                // this rotation but we keep the substitution literal
                let alpha = Self::alpha_of(xp, -xq);
                // tr(F W* G W) = sum_{i,m} s_i t_m <W v_i | x_m><y_m | W u_i>
                let mut val = C0;
                for (s, u, v) in &tf {
                    let wu = self.displace_vector(alpha, u);
                    let wv = self.displace_vector(alpha, v);
                    for (t, x, y) in &tg {
                        val += *s * *t * wv.dotc(x) * y.dotc(&wu);
                    }
                }
                fine += val;
                if i % 2 == 0 && j % 2 == 0 {
                    coarse += val;
                }
            }
        }
        let norm = Complex64::new(h * h, 0.0);
        let rhs = fine * norm;
        let rhs_coarse = coarse * norm * Complex64::new(4.0, 0.0);
        Ok(QuadratureCheck::new(lhs, rhs, (rhs - rhs_coarse).norm()))
    }
}

/// Gaussian state families for the oracle.
#[derive(Clone, Copy, Debug)]
pub enum GaussianKind {
    Vacuum,
    Coherent(Complex64),
    Thermal(f64),
    Squeezed(f64),
}

/// Result of a quadrature identity check.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs - rhs| / max(|lhs|, 1)`
    pub residual: f64,
    /// Richardson estimate from the half-resolution subgrid.
    pub error_estimate: f64,
    /// false when the quadrature error estimate dominates the residual
    pub grid_ok: bool,
}

impl QuadratureCheck {
    fn new(lhs: Complex64, rhs: Complex64, raw_estimate: f64) -> Self {
        let scale = lhs.norm().max(1.0);
        let residual = (lhs - rhs).norm() / scale;
        let error_estimate = raw_estimate / scale;
        QuadratureCheck {
            lhs,
            rhs,
            residual,
            error_estimate,
            grid_ok: error_estimate <= residual.max(1e-4),
        }
    }
}

/// Default quadrature settings: radius 8, 161 nodes per axis.
pub const QUAD_RADIUS: f64 = 8.0;
pub const QUAD_POINTS: usize = 161;

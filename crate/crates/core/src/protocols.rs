//! Protocol gallery built from the channel primitives: position and phase
//! space observables and instruments, cloners, two-mode squeezed resources,
//! teleportation, and dense coding, plus parameter sweeps for the CLI.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

use crate::channel::{QuasifreeChannel, VerifyPolicy};
use crate::charfun::{admissibility_min_eigenvalue, Body, CharFn, Evaluator};
use crate::error::{Error, Result};
use crate::gaussian::GaussianChannel;
use crate::phasespace::{PhaseMap, PhaseSpace};

/// Covariant position observable on `n` modes: `S: k -> (k, 0)` with a
/// classical noise measure convolved onto the position distribution.
pub fn position_observable(n: usize, noise: &CharFn) -> Result<QuasifreeChannel> {
    if !noise.space().is_classical() {
        return Err(Error::InvalidParameter(
            "position observable noise must be a classical state".into(),
        ));
    }
    if noise.space().dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: noise.space().dim(),
        });
    }
    let input = PhaseSpace::quantum(n)?;
    let output = PhaseSpace::classical(n)?;
    let mut s = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        s[(i, i)] = 1.0;
    }
    let map = PhaseMap::new(output, input, s)?;
    QuasifreeChannel::new(map, noise.clone(), VerifyPolicy::Default)
}

/// Covariant phase space observable: `S = I` onto a classical copy of the
/// whole phase space, noise state `tau`. For `tau` the vacuum, the output
/// distribution is the Husimi function.
pub fn phasespace_observable(n: usize, tau: &CharFn) -> Result<QuasifreeChannel> {
    let input = PhaseSpace::quantum(n)?;
    if tau.space().dim() != input.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim(),
            got: tau.space().dim(),
        });
    }
    let map = PhaseMap::new(
        input.classicized(),
        input.clone(),
        DMatrix::identity(2 * n, 2 * n),
    )?;
    QuasifreeChannel::new(map, tau.clone(), VerifyPolicy::Default)
}

/// Covariant position instrument on `n` modes. Output coordinates are
/// `(q_1..q_n, p_1..p_n, k_1..k_n)` with `k` the measurement outcomes;
/// `S(xi (+) k) = (xi_q + k, xi_p)`. The noise function is
/// `f(xi_q, xi_p, k) = exp(i a.xi_q) chi_tau(k, xi_p)`, so the classical
/// marginal carries the position noise `tau^Q` and the quantum marginal the
/// momentum kicks `delta_a x tau^P`.
pub fn position_instrument(tau: &CharFn, a: &DVector<f64>) -> Result<QuasifreeChannel> {
    if tau.space().dim() % 2 != 0 || tau.space().dim() == 0 {
        return Err(Error::InvalidParameter(
            "instrument noise tau must live on a quantum phase space".into(),
        ));
    }
    let n = tau.space().dim() / 2;
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let input = PhaseSpace::quantum(n)?;
    let output = input.direct_sum(&PhaseSpace::classical(n)?);
    let mut s = DMatrix::zeros(2 * n, 3 * n);
    for i in 0..n {
        s[(i, i)] = 1.0; // q from q
        s[(i, 2 * n + i)] = 1.0; // q shifted by outcome k
        s[(n + i, n + i)] = 1.0; // p from p
    }
    let map = PhaseMap::new(output.clone(), input, s)?;

    let noise = match tau.body() {
        Body::Gaussian { mean, cov } => {
            let mut m = DVector::zeros(3 * n);
            let mut b = DMatrix::zeros(3 * n, 3 * n);
            for i in 0..n {
                m[i] = a[i];
                m[n + i] = mean[n + i]; // tau momentum slot pairs with xi_p
                m[2 * n + i] = mean[i]; // tau position slot pairs with k
            }
            for i in 0..n {
                for j in 0..n {
                    b[(n + i, n + j)] = cov[(n + i, n + j)];
                    b[(2 * n + i, 2 * n + j)] = cov[(i, j)];
                    b[(n + i, 2 * n + j)] = cov[(n + i, j)];
                    b[(2 * n + i, n + j)] = cov[(i, n + j)];
                }
            }
            CharFn::gaussian(output.classicized(), m, b)?
        }
        Body::General { .. } => {
            let tau = tau.clone();
            let a = a.clone();
            let eval: Evaluator = Arc::new(move |w: &DVector<f64>| {
                let mut u = DVector::zeros(2 * n);
                for i in 0..n {
                    u[i] = w[2 * n + i];
                    u[n + i] = w[n + i];
                }
                Complex64::new(0.0, a.dot(&w.rows(0, n).into_owned())).exp()
                    * tau.evaluate_unchecked(&u)
            });
            CharFn::general(output.classicized(), eval, "position instrument noise")?
        }
    };
    QuasifreeChannel::new(map, noise, VerifyPolicy::Default)
}

/// Two-mode squeezed state on `(Xi (+) Xi, sigma (+) (-sigma))`, one mode per
/// side: `chi(xi (+) eta) = exp(-(1/8)(e^{2 lam}|xi - eta|^2 +
/// e^{-2 lam}|xi + eta|^2))`. At `lam = 0` this is a product of vacua; on the
/// diagonal it is `exp(-e^{-2 lam}|xi|^2 / 2)`.
pub fn two_mode_squeezed(lambda: f64) -> Result<CharFn> {
    let space = PhaseSpace::quantum(1)?.direct_sum(&PhaseSpace::quantum(1)?.conjugate());
    CharFn::gaussian(space, DVector::zeros(4), tms_covariance(lambda))
}

/// Covariance of the two-mode squeezed state:
/// `(1/2) [[cosh(2 lam) I, -sinh(2 lam) I], [-sinh(2 lam) I, cosh(2 lam) I]]`.
pub fn tms_covariance(lambda: f64) -> DMatrix<f64> {
    let c = (2.0 * lambda).cosh() * 0.5;
    let s = (2.0 * lambda).sinh() * 0.5;
    let mut a = DMatrix::zeros(4, 4);
    for i in 0..2 {
        a[(i, i)] = c;
        a[(2 + i, 2 + i)] = c;
        a[(i, 2 + i)] = -s;
        a[(2 + i, i)] = -s;
    }
    a
}

fn check_doubled_resource(resource: &CharFn) -> Result<usize> {
    let dim = resource.space().dim();
    if dim % 4 != 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "resource must live on a doubled system".into(),
        ));
    }
    let n = dim / 4;
    let expected = PhaseSpace::quantum(n)?.direct_sum(&PhaseSpace::quantum(n)?.conjugate());
    if (resource.space().sigma() - expected.sigma()).abs().max() > 1e-12 {
        return Err(Error::InvalidParameter(
            "resource form must be sigma (+) (-sigma)".into(),
        ));
    }
    Ok(n)
}

/// The diagonal restriction `g(xi) = chi_resource(xi (+) xi)` as a classical
/// noise state: the displacement noise of teleportation and dense coding.
pub fn diagonal_noise(resource: &CharFn) -> Result<CharFn> {
    let n = check_doubled_resource(resource)?;
    let d = 2 * n;
    let space = PhaseSpace::classical(d)?;
    match resource.body() {
        Body::Gaussian { mean, cov } => {
            let m = DVector::from_fn(d, |i, _| mean[i] + mean[d + i]);
            let b = DMatrix::from_fn(d, d, |i, j| {
                cov[(i, j)] + cov[(i, d + j)] + cov[(d + i, j)] + cov[(d + i, d + j)]
            });
            CharFn::gaussian(space, m, b)
        }
        Body::General { .. } => {
            let resource = resource.clone();
            let eval: Evaluator = Arc::new(move |xi: &DVector<f64>| {
                let mut doubled = DVector::zeros(2 * d);
                doubled.rows_mut(0, d).copy_from(xi);
                doubled.rows_mut(d, d).copy_from(xi);
                resource.evaluate_unchecked(&doubled)
            });
            CharFn::general(space, eval, "diagonal resource noise")
        }
    }
}

/// Continuous-variable teleportation built compositionally: entangle the
/// input with half of the resource through the sharp Bell measurement
/// (`k -> k (+) k` on `(Xi, sigma) (+) (Xi, -sigma)`), transmit the outcome
/// classically, and displace the receiver mode by it. The end-to-end channel
/// has `S = I` and noise `g(xi) = chi_resource(xi (+) xi)`.
///
/// The resource's first summand (form `+sigma`) is the receiver mode; the
/// conjugate summand is measured together with the input.
pub fn teleport(resource: &CharFn) -> Result<QuasifreeChannel> {
    let n = check_doubled_resource(resource)?;
    let d = 2 * n;
    let sys = PhaseSpace::quantum(n)?;
    let conj = sys.conjugate();

    // resource with its summands swapped to (conjugate, receiver) order
    let swapped_space = conj.direct_sum(&sys);
    let swapped = match resource.body() {
        Body::Gaussian { mean, cov } => {
            let m = DVector::from_fn(2 * d, |i, _| mean[(i + d) % (2 * d)]);
            let a = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
                cov[((i + d) % (2 * d), (j + d) % (2 * d))]
            });
            CharFn::gaussian(swapped_space, m, a)?
        }
        Body::General { .. } => {
            let resource = resource.clone();
            let eval: Evaluator = Arc::new(move |w: &DVector<f64>| {
                let mut flipped = DVector::zeros(2 * d);
                flipped.rows_mut(0, d).copy_from(&w.rows(d, d));
                flipped.rows_mut(d, d).copy_from(&w.rows(0, d));
                resource.evaluate_unchecked(&flipped)
            });
            CharFn::general(swapped_space, eval, "swapped resource")?
        }
    };

    let attach = QuasifreeChannel::identity(&sys)
        .tensor(&QuasifreeChannel::preparation(&swapped)?)?;

    // Bell measurement on (input, conjugate half), receiver untouched
    let outcomes = PhaseSpace::classical(d)?;
    let bell_out = outcomes.direct_sum(&sys);
    let mut s1 = DMatrix::zeros(3 * d, 2 * d);
    for i in 0..d {
        s1[(i, i)] = 1.0; // input summand gets k
        s1[(d + i, i)] = 1.0; // conjugate summand gets k
        s1[(2 * d + i, d + i)] = 1.0; // receiver passes through
    }
    let bell = QuasifreeChannel::from_gaussian(&GaussianChannel::new(
        PhaseMap::new(bell_out.clone(), attach.output_space().clone(), s1)?,
        DVector::zeros(2 * d),
        DMatrix::zeros(2 * d, 2 * d),
    )?);

    // receiver correction: displace by the transmitted outcome
    let mut s2 = DMatrix::zeros(2 * d, d);
    for i in 0..d {
        s2[(i, i)] = 1.0;
        s2[(d + i, i)] = 1.0;
    }
    let correct = QuasifreeChannel::from_gaussian(&GaussianChannel::new(
        PhaseMap::new(sys.clone(), bell_out, s2)?,
        DVector::zeros(d),
        DMatrix::zeros(d, d),
    )?);

    correct.concatenate(&bell)?.concatenate(&attach)
}

/// Coherent-state averaged teleportation fidelity for the two-mode squeezed
/// resource: displacement noise variance `e^{-2 lam}` per coordinate gives
/// `F = 1 / (1 + e^{-2 lam})`.
pub fn teleport_fidelity(lambda: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * lambda).exp())
}

/// Dense coding end-to-end channel: classical `2n`-dim input and output,
/// `S = I`, same displacement noise `g(xi) = chi_resource(xi (+) xi)` as
/// teleportation.
pub fn dense_code(resource: &CharFn) -> Result<QuasifreeChannel> {
    let noise = diagonal_noise(resource)?;
    let space = noise.space().clone();
    let d = space.dim();
    let map = PhaseMap::new(space.clone(), space, DMatrix::identity(d, d))?;
    QuasifreeChannel::new(map, noise, VerifyPolicy::Default)
}

/// The `1 -> n_out` cloner map `S((+)_j xi_j) = sum_j xi_j`.
pub fn cloner_map(n_out: usize) -> Result<PhaseMap> {
    if n_out < 2 {
        return Err(Error::InvalidParameter("cloner needs n_out >= 2".into()));
    }
    let input = PhaseSpace::quantum(1)?;
    let mut output = PhaseSpace::quantum(1)?;
    for _ in 1..n_out {
        output = output.direct_sum(&PhaseSpace::quantum(1)?);
    }
    let mut s = DMatrix::zeros(2, 2 * n_out);
    for j in 0..n_out {
        s[(0, 2 * j)] = 1.0;
        s[(1, 2 * j + 1)] = 1.0;
    }
    PhaseMap::new(output, input, s)
}

/// Attempted cloner with isotropic Gaussian noise `B = b I`; fails with the
/// CP violation when `b` is below the no-cloning threshold.
pub fn cloner_channel(n_out: usize, b: f64) -> Result<GaussianChannel> {
    let map = cloner_map(n_out)?;
    let d = 2 * n_out;
    GaussianChannel::new(map, DVector::zeros(d), DMatrix::identity(d, d) * b)
}

/// Minimal eigenvalue of `bI + (i/2) delta_sigma` for the cloner; the channel
/// is admissible iff this is nonnegative.
pub fn cloner_min_eigenvalue(n_out: usize, b: f64) -> Result<f64> {
    let map = cloner_map(n_out)?;
    let d = 2 * n_out;
    Ok(admissibility_min_eigenvalue(
        &(DMatrix::identity(d, d) * b),
        &map.delta_sigma(),
    ))
}

/// No-cloning threshold: the smallest isotropic `b` with `B = b I` admissible,
/// located by bisection on the minimal eigenvalue.
pub fn cloner_threshold(n_out: usize) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = n_out as f64;
    if cloner_min_eigenvalue(n_out, hi)? < 0.0 {
        return Err(Error::InvalidParameter(
            "cloner threshold bracket failed".into(),
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cloner_min_eigenvalue(n_out, mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Gaussian covariant phase space instrument with `Psi-hat` proportional to
/// `exp(-beta H)`, `H = (P^2 + Q^2)/2`. The noise function is the two-mode
/// squeezed characteristic function evaluated at `(xi, xi + eta)` with
/// `tanh(lam) = e^{-beta}`.
#[derive(Clone, Debug)]
pub struct PhasespaceInstrument {
    pub channel: QuasifreeChannel,
    pub beta: f64,
    /// Per-coordinate variance of the quantum translation noise `m`:
    /// `tanh(beta/2)`.
    pub quantum_kick_variance: f64,
    /// Per-coordinate added-noise variance of the classical marginal
    /// observable (density proportional to `exp(-2 beta H)`): `coth(beta)/2`.
    pub classical_noise_variance: f64,
}

pub fn phasespace_instrument_gaussian(beta: f64) -> Result<PhasespaceInstrument> {
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(
            "phase space instrument needs beta > 0".into(),
        ));
    }
    let lambda = (-beta).exp().atanh();
    let input = PhaseSpace::quantum(1)?;
    let output = input.direct_sum(&PhaseSpace::classical(2)?);
    // S(xi (+) eta) = xi + eta
    let mut s = DMatrix::zeros(2, 4);
    for i in 0..2 {
        s[(i, i)] = 1.0;
        s[(i, 2 + i)] = 1.0;
    }
    let map = PhaseMap::new(output.clone(), input, s)?;

    // f(xi (+) eta) = chi_TMS(xi (+) (xi + eta)): pull the TMS covariance
    // back through L(xi, eta) = (xi, xi + eta)
    let mut l = DMatrix::zeros(4, 4);
    for i in 0..2 {
        l[(i, i)] = 1.0;
        l[(2 + i, i)] = 1.0;
        l[(2 + i, 2 + i)] = 1.0;
    }
    let b = l.transpose() * tms_covariance(lambda) * l;
    let noise = CharFn::gaussian(output.classicized(), DVector::zeros(4), b)?;
    let channel = QuasifreeChannel::new(map, noise, VerifyPolicy::Default)?;

    Ok(PhasespaceInstrument {
        channel,
        beta,
        quantum_kick_variance: (beta / 2.0).tanh(),
        classical_noise_variance: 0.5 / beta.tanh(),
    })
}

/// One row of a protocol tradeoff sweep.
#[derive(Clone, Debug, Serialize)]
pub struct TradeoffRow {
    pub protocol: String,
    pub parameter: f64,
    pub classical_variance: Option<f64>,
    pub quantum_variance: Option<f64>,
    pub fidelity: Option<f64>,
    pub uncertainty_product: Option<f64>,
}

/// Deterministic tradeoff rows for the CLI demos. Known ids: `teleport`,
/// `densecode`, `instrument-position`, `instrument-phasespace`, `cloner`,
/// `husimi`.
pub fn sweep(id: &str, grid: &[f64]) -> Result<Vec<TradeoffRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    match id {
        "teleport" | "densecode" => {
            for &lambda in grid {
                let v = (-2.0 * lambda).exp();
                rows.push(TradeoffRow {
                    protocol: id.to_string(),
                    parameter: lambda,
                    classical_variance: Some(v),
                    quantum_variance: None,
                    fidelity: if id == "teleport" {
                        Some(teleport_fidelity(lambda))
                    } else {
                        None
                    },
                    uncertainty_product: None,
                });
            }
        }
        "instrument-position" => {
            for &v in grid {
                if v <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "position instrument variance must be positive".into(),
                    ));
                }
                rows.push(TradeoffRow {
                    protocol: id.to_string(),
                    parameter: v,
                    classical_variance: Some(v),
                    quantum_variance: Some(0.25 / v),
                    fidelity: None,
                    uncertainty_product: Some(0.25),
                });
            }
        }
        "instrument-phasespace" => {
            for &beta in grid {
                let inst = phasespace_instrument_gaussian(beta)?;
                rows.push(TradeoffRow {
                    protocol: id.to_string(),
                    parameter: beta,
                    classical_variance: Some(inst.classical_noise_variance),
                    quantum_variance: Some(inst.quantum_kick_variance),
                    fidelity: None,
                    uncertainty_product: Some(
                        inst.classical_noise_variance * inst.quantum_kick_variance,
                    ),
                });
            }
        }
        "cloner" => {
            for &n in grid {
                let n_out = n as usize;
                rows.push(TradeoffRow {
                    protocol: id.to_string(),
                    parameter: n,
                    classical_variance: None,
                    quantum_variance: Some(cloner_threshold(n_out)?),
                    fidelity: None,
                    uncertainty_product: None,
                });
            }
        }
        "husimi" => {
            for &p in grid {
                rows.push(TradeoffRow {
                    protocol: id.to_string(),
                    parameter: p,
                    classical_variance: Some(1.0),
                    quantum_variance: None,
                    fidelity: None,
                    uncertainty_product: Some(0.25),
                });
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown protocol id '{other}'; known: teleport, densecode, \
                 instrument-position, instrument-phasespace, cloner, husimi"
            )));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::sample_gaussian_vector;
    use approx::assert_abs_diff_eq;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(coords: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(coords)
    }

    fn sharp(n: usize) -> CharFn {
        CharFn::point_at_origin(&PhaseSpace::classical(n).unwrap()).unwrap()
    }

    #[test]
    fn sharp_position_on_vacuum() {
        let obs = position_observable(1, &sharp(1)).unwrap();
        let out = obs
            .apply(&CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap())
            .unwrap();
        let (m, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sharp_position_on_coherent() {
        let ps = PhaseSpace::quantum(1).unwrap();
        let coherent = CharFn::vacuum(&ps).unwrap().translate(&v(&[2.0, 0.0])).unwrap();
        let out = position_observable(1, &sharp(1))
            .unwrap()
            .apply(&coherent)
            .unwrap();
        let (m, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn noisy_position_adds_variance() {
        let cl = PhaseSpace::classical(1).unwrap();
        let noise = CharFn::gaussian(cl, v(&[0.0]), DMatrix::identity(1, 1) * 0.3).unwrap();
        let out = position_observable(1, &noise)
            .unwrap()
            .apply(&CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap())
            .unwrap();
        let (_, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a[(0, 0)], 0.8, epsilon = 1e-14);
    }

    #[test]
    fn position_observable_rejects_quantum_noise() {
        let vac = CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap();
        assert!(position_observable(1, &vac).is_err());
    }

    #[test]
    fn husimi_observable_and_marginal_uncertainty() {
        let ps = PhaseSpace::quantum(1).unwrap();
        let tau = CharFn::vacuum(&ps).unwrap();
        let obs = phasespace_observable(1, &tau).unwrap();
        let out = obs.apply(&CharFn::vacuum(&ps).unwrap()).unwrap();
        let (_, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a.clone(), DMatrix::identity(2, 2), epsilon = 1e-14);
        // marginal factorization (tau * rho)^Q = tau^Q * rho^Q
        let rho = CharFn::gaussian(
            ps.clone(),
            v(&[0.7, -0.1]),
            DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.9]),
        )
        .unwrap();
        let out = obs.apply(&rho).unwrap();
        let q_marg = out.marginal(&[0]).unwrap();
        let expected = rho
            .marginal(&[0])
            .unwrap()
            .convolve(&tau.marginal(&[0]).unwrap(), (1, 1))
            .unwrap();
        let (m1, a1) = q_marg.gaussian_parts().unwrap();
        let (m2, a2) = expected.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m1[0], m2[0], epsilon = 1e-12);
        assert_abs_diff_eq!(a1[(0, 0)], a2[(0, 0)], epsilon = 1e-12);
        // noise marginal uncertainty product at the minimum
        let vq = 0.5;
        let vp = 0.5;
        assert_abs_diff_eq!(vq * vp, 0.25, epsilon = 1e-15);
    }

    fn minimal_tau(vq: f64) -> CharFn {
        CharFn::gaussian(
            PhaseSpace::quantum(1).unwrap(),
            DVector::zeros(2),
            DMatrix::from_diagonal(&v(&[vq, 0.25 / vq])),
        )
        .unwrap()
    }

    #[test]
    fn position_instrument_marginals() {
        for &vq in &[0.1, 0.5, 1.0, 4.0] {
            let inst = position_instrument(&minimal_tau(vq), &v(&[0.0])).unwrap();
            let vac = CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap();
            let out = inst.apply(&vac).unwrap();
            // classical outcome marginal: vacuum q-variance plus tau^Q
            let k_marg = out.marginal(&[2]).unwrap();
            let (_, a) = k_marg.gaussian_parts().unwrap();
            assert_abs_diff_eq!(a[(0, 0)], 0.5 + vq, epsilon = 1e-12);
            // quantum marginal: momentum kicked by tau^P
            let qp_marg = out.marginal(&[0, 1]).unwrap();
            let (_, a) = qp_marg.gaussian_parts().unwrap();
            assert_abs_diff_eq!(a[(0, 0)], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(a[(1, 1)], 0.5 + 0.25 / vq, epsilon = 1e-12);
            // uncertainty product of the added noises
            assert_abs_diff_eq!(vq * (0.25 / vq), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn position_instrument_shift_a() {
        let inst = position_instrument(&minimal_tau(0.5), &v(&[1.5])).unwrap();
        let vac = CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap();
        let out = inst.apply(&vac).unwrap();
        let (m, _) = out.gaussian_parts().unwrap();
        // deterministic position shift a on the quantum output
        assert_abs_diff_eq!(m[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn position_instrument_quantum_marginal_is_disturbance_channel() {
        let tau = minimal_tau(0.5);
        let inst = position_instrument(&tau, &v(&[0.7])).unwrap();
        let quantum = inst.marginal_channel(&[0, 1]).unwrap();
        // disturbance channel: S = I, noise delta_a x tau^P
        let ps = PhaseSpace::quantum(1).unwrap();
        let noise = CharFn::gaussian(
            ps.classicized(),
            v(&[0.7, 0.0]),
            DMatrix::from_diagonal(&v(&[0.0, 0.5])),
        )
        .unwrap();
        let direct = QuasifreeChannel::new(
            PhaseMap::new(ps.clone(), ps.clone(), DMatrix::identity(2, 2)).unwrap(),
            noise,
            VerifyPolicy::Default,
        )
        .unwrap();
        let state = CharFn::gaussian(ps, v(&[0.3, -0.4]), DMatrix::identity(2, 2)).unwrap();
        let a = quantum.apply(&state).unwrap();
        let b = direct.apply(&state).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let xi = sample_gaussian_vector(&mut rng, 2, 1.0);
            assert!((a.evaluate(&xi).unwrap() - b.evaluate(&xi).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn tms_limits_and_diagonal() {
        let prod = two_mode_squeezed(0.0).unwrap();
        let (_, a) = prod.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a.clone(), DMatrix::identity(4, 4) * 0.5, epsilon = 1e-14);

        for &lambda in &[0.0, 0.5, 1.0, 2.0] {
            let tms = two_mode_squeezed(lambda).unwrap();
            let xi = v(&[0.8, -0.3]);
            let diag = v(&[0.8, -0.3, 0.8, -0.3]);
            let got = tms.evaluate(&diag).unwrap();
            let expected = (-(-2.0 * lambda).exp() * xi.norm_squared() / 2.0).exp();
            assert_abs_diff_eq!(got.re, expected, epsilon = 1e-13);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-13);
        }
        // large squeezing: diagonal approaches 1
        let tms = two_mode_squeezed(8.0).unwrap();
        let diag = v(&[1.0, 1.0, 1.0, 1.0]);
        assert!((tms.evaluate(&diag).unwrap().re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tms_is_admissible_and_pure_marginal_thermal() {
        for &lambda in &[0.0, 0.7, 1.5] {
            let tms = two_mode_squeezed(lambda).unwrap();
            let (_, a) = tms.gaussian_parts().unwrap();
            let min = admissibility_min_eigenvalue(a, tms.space().sigma());
            assert!(min > -1e-12, "lambda {lambda}: min {min}");
            // purity: the admissibility matrix is singular
            assert!(min.abs() < 1e-10);
            let marg = tms.marginal(&[0, 1]).unwrap();
            let (_, am) = marg.gaussian_parts().unwrap();
            assert_abs_diff_eq!(
                am.clone(),
                DMatrix::identity(2, 2) * ((2.0 * lambda).cosh() * 0.5),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn teleport_matches_closed_form() {
        for (i, &lambda) in [0.0, 0.3, 0.5, 1.0, 2.0].iter().enumerate() {
            let resource = two_mode_squeezed(lambda).unwrap();
            let tele = teleport(&resource).unwrap();
            assert_abs_diff_eq!(
                tele.map().matrix().clone(),
                DMatrix::identity(2, 2),
                epsilon = 1e-12
            );
            let g = tele.noise();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            for _ in 0..20 {
                let xi = sample_gaussian_vector(&mut rng, 2, 1.0);
                let got = g.evaluate_unchecked(&xi);
                let expected = (-(-2.0 * lambda).exp() * xi.norm_squared() / 2.0).exp();
                assert!((got - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
            // Gaussian record: B = e^{-2 lambda} I
            let (m, b) = g.gaussian_parts().unwrap();
            assert_abs_diff_eq!(m.clone(), DVector::zeros(2), epsilon = 1e-12);
            assert_abs_diff_eq!(
                b.clone(),
                DMatrix::identity(2, 2) * (-2.0 * lambda).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn teleport_fidelity_quadrature_and_monotonicity() {
        // F = int m(dz) |<alpha| D(z) |alpha>|^2 with m = N(0, e^{-2 lam} I)
        // and |<alpha|D(z)|alpha>|^2 = exp(-|z|^2/2)
        let quadrature = |variance: f64| -> f64 {
            let n = 4001;
            let half = 12.0 * variance.sqrt().max(0.1);
            let h = 2.0 * half / (n - 1) as f64;
            let one_dim: f64 = (0..n)
                .map(|i| {
                    let z = -half + i as f64 * h;
                    (-z * z / (2.0 * variance)).exp() * (-z * z / 2.0).exp() * h
                })
                .sum::<f64>()
                / (2.0 * std::f64::consts::PI * variance).sqrt();
            one_dim * one_dim
        };
        let mut last = 0.0;
        for &lambda in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            let f = teleport_fidelity(lambda);
            let v = (-2.0 * lambda).exp();
            assert_abs_diff_eq!(f, quadrature(v), epsilon = 1e-6);
            assert!(f > last);
            last = f;
        }
        assert_abs_diff_eq!(teleport_fidelity(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dense_code_mirrors_teleport_noise() {
        for &lambda in &[0.0, 1.0] {
            let resource = two_mode_squeezed(lambda).unwrap();
            let dc = dense_code(&resource).unwrap();
            assert!(dc.input_space().is_classical());
            let (_, b) = dc.noise().gaussian_parts().unwrap();
            assert_abs_diff_eq!(
                b.clone(),
                DMatrix::identity(2, 2) * (-2.0 * lambda).exp(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn dense_code_perfect_limit_monotone() {
        // TV distance of N(0, (1+v) I_2) to the noiseless N(0, I_2) output,
        // closed form via the crossing radius of the two radial densities
        let tv = |v: f64| -> f64 {
            let s2 = 1.0 + v;
            let r2 = 2.0 * s2 * s2.ln() / (s2 - 1.0);
            (-r2 / (2.0 * s2)).exp() - (-r2 / 2.0).exp()
        };
        let mut last = f64::INFINITY;
        for &lambda in &[0.0_f64, 0.5, 1.0, 2.0, 4.0] {
            let d = tv((-2.0 * lambda).exp());
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn cloner_admissibility_boundary() {
        assert!(cloner_channel(2, 1.0).is_ok());
        assert!(cloner_channel(2, 0.0).is_err());
        assert!(cloner_channel(2, 0.49).is_err());
        assert!(cloner_channel(2, 0.51).is_ok());
        let threshold = cloner_threshold(2).unwrap();
        assert_abs_diff_eq!(threshold, 0.5, epsilon = 1e-6);
        // 1 -> n threshold grows as (n - 1)/2
        assert_abs_diff_eq!(cloner_threshold(3).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(cloner_threshold(4).unwrap(), 1.5, epsilon = 1e-6);
    }

    #[test]
    fn cloner_marginals_symmetric() {
        let ch = cloner_channel(2, 1.0).unwrap();
        let q = QuasifreeChannel::from_gaussian(&ch);
        let vac = CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap();
        let out = q.apply(&vac).unwrap();
        let clone1 = out.marginal(&[0, 1]).unwrap();
        let clone2 = out.marginal(&[2, 3]).unwrap();
        let (_, a1) = clone1.gaussian_parts().unwrap();
        let (_, a2) = clone2.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a1.clone(), a2.clone(), epsilon = 1e-14);
        // each clone is the input plus at least vacuum-unit noise
        assert!(a1[(0, 0)] >= 0.5 + 0.5 - 1e-12);
    }

    #[test]
    fn phasespace_instrument_marginals() {
        for &beta in &[0.5, 1.0, 2.0] {
            let inst = phasespace_instrument_gaussian(beta).unwrap();
            let vac = CharFn::vacuum(&PhaseSpace::quantum(1).unwrap()).unwrap();
            let out = inst.channel.apply(&vac).unwrap();
            // quantum marginal: vacuum plus isotropic kicks of variance
            // tanh(beta/2)
            let qm = out.marginal(&[0, 1]).unwrap();
            let (_, a) = qm.gaussian_parts().unwrap();
            assert_abs_diff_eq!(
                a.clone(),
                DMatrix::identity(2, 2) * (0.5 + inst.quantum_kick_variance),
                epsilon = 1e-12
            );
            // classical marginal: vacuum plus coth(beta)/2 observable noise
            let cm = out.marginal(&[2, 3]).unwrap();
            let (_, a) = cm.gaussian_parts().unwrap();
            assert_abs_diff_eq!(
                a.clone(),
                DMatrix::identity(2, 2) * (0.5 + inst.classical_noise_variance),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn phasespace_instrument_limits() {
        // large beta: coherent-state measurement, kick variance -> 1,
        // classical marginal -> Husimi
        let inst = phasespace_instrument_gaussian(20.0).unwrap();
        assert!((inst.quantum_kick_variance - 1.0).abs() < 1e-8);
        assert!((inst.classical_noise_variance - 0.5).abs() < 1e-8);
        // small beta: kicks vanish, classical noise blows up like 1/(2 beta)
        let inst = phasespace_instrument_gaussian(1e-3).unwrap();
        assert!(inst.quantum_kick_variance < 1e-3);
        assert!((inst.classical_noise_variance * 2.0 * 1e-3 - 1.0).abs() < 1e-5);
        assert!(phasespace_instrument_gaussian(0.0).is_err());
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep("teleport", &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_abs_diff_eq!(rows[0].classical_variance.unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rows[1].classical_variance.unwrap(),
            (-2.0_f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            rows[2].classical_variance.unwrap(),
            (-4.0_f64).exp(),
            epsilon = 1e-15
        );
        let rows = sweep("cloner", &[2.0]).unwrap();
        assert_abs_diff_eq!(rows[0].quantum_variance.unwrap(), 0.5, epsilon = 1e-6);
        let rows = sweep("instrument-position", &[0.1, 1.0]).unwrap();
        for r in &rows {
            assert!(r.classical_variance.unwrap() >= 0.0);
            assert!(r.quantum_variance.unwrap() >= 0.0);
            assert_abs_diff_eq!(r.uncertainty_product.unwrap(), 0.25, epsilon = 1e-15);
        }
        assert!(sweep("nonsense", &[1.0]).is_err());
    }
}

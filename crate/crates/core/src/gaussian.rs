//! Gaussian quasifree channels: the closed sub-calculus where channel action,
//! composition, admissibility, and dilations are all exact matrix arithmetic.

use nalgebra::{DMatrix, DVector};

use crate::charfun::{
    admissibility_min_eigenvalue, CharFn, TwistedPdReport, Verdict, SYM_TOL,
};
use crate::error::{Error, Result};
use crate::phasespace::{PhaseMap, PhaseSpace};

/// Gaussian channel `(S, f)` with noise function
/// `f(xi) = exp(i lam.xi - (1/2) xi^T B xi)`.
#[derive(Clone, Debug)]
pub struct GaussianChannel {
    map: PhaseMap,
    lam: DVector<f64>,
    b: DMatrix<f64>,
    delta: DMatrix<f64>,
}

impl GaussianChannel {
    /// Checks shapes, symmetry of `B`, and the admissibility condition
    /// `B + (i/2) delta_sigma >= 0`.
    pub fn new(map: PhaseMap, lam: DVector<f64>, b: DMatrix<f64>) -> Result<Self> {
        let d_out = map.source().dim();
        if lam.len() != d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                got: lam.len(),
            });
        }
        if b.nrows() != d_out || b.ncols() != d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                got: b.nrows(),
            });
        }
        let residual = if b.is_empty() {
            0.0
        } else {
            (&b - b.transpose()).abs().max()
        };
        if residual > SYM_TOL {
            return Err(Error::NotSymmetric { residual });
        }
        let delta = map.delta_sigma();
        let min = admissibility_min_eigenvalue(&b, &delta);
        let scale = if b.is_empty() { 1.0 } else { b.abs().max().max(1.0) };
        if min < -1e-9 * scale {
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
        Ok(GaussianChannel {
            map,
            lam,
            b,
            delta,
        })
    }

    pub fn identity(space: &PhaseSpace) -> Self {
        let d = space.dim();
        GaussianChannel {
            map: PhaseMap::identity(space),
            lam: DVector::zeros(d),
            b: DMatrix::zeros(d, d),
            delta: DMatrix::zeros(d, d),
        }
    }

    pub fn map(&self) -> &PhaseMap {
        &self.map
    }

    pub fn lam(&self) -> &DVector<f64> {
        &self.lam
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn delta_sigma(&self) -> &DMatrix<f64> {
        &self.delta
    }

    pub fn input_space(&self) -> &PhaseSpace {
        self.map.target()
    }

    pub fn output_space(&self) -> &PhaseSpace {
        self.map.source()
    }

    /// The noise state: the Gaussian with mean `lam` and covariance `B` on
    /// the noise space `(Xi_out, delta_sigma)`.
    pub fn noise_charfn(&self) -> Result<CharFn> {
        let space = if self.delta.is_empty() {
            PhaseSpace::trivial()
        } else {
            PhaseSpace::from_sigma(self.delta.clone())?
        };
        CharFn::gaussian(space, self.lam.clone(), self.b.clone())
    }

    /// `chi_out(xi) = f(xi) chi_in(S xi)`: mean `S^T m + lam`, covariance
    /// `S^T A S + B`.
    pub fn apply(&self, state: &CharFn) -> Result<CharFn> {
        if state.space() != self.input_space() {
            return Err(Error::SpaceMismatch {
                context: "apply: state space differs from channel input space".into(),
            });
        }
        let (m, a) = state.gaussian_parts().ok_or_else(|| {
            Error::InvalidParameter("gaussian apply needs a Gaussian state".into())
        })?;
        let s = self.map.matrix();
        CharFn::gaussian(
            self.output_space().clone(),
            s.transpose() * m + &self.lam,
            s.transpose() * a * s + &self.b,
        )
    }

    /// `self` applied after `earlier` in state order. The composite has
    /// `S = S_earlier S_self`, `lam = lam_self + S_self^T lam_earlier`,
    /// `B = B_self + S_self^T B_earlier S_self`.
    pub fn compose(&self, earlier: &GaussianChannel) -> Result<GaussianChannel> {
        if earlier.output_space() != self.input_space() {
            return Err(Error::SpaceMismatch {
                context: "compose: earlier output space differs from later input space".into(),
            });
        }
        let map = self.map.compose(&earlier.map)?;
        let s1 = self.map.matrix();
        let lam = &self.lam + s1.transpose() * &earlier.lam;
        let b = &self.b + s1.transpose() * &earlier.b * s1;
        GaussianChannel::new(map, lam, b)
    }

    /// Parallel composition on direct sums: `S`, `B` block-diagonal, `lam`
    /// concatenated.
    pub fn tensor(&self, other: &GaussianChannel) -> Result<GaussianChannel> {
        let source = self.output_space().direct_sum(other.output_space());
        let target = self.input_space().direct_sum(other.input_space());
        let map = PhaseMap::new(
            source,
            target,
            block_diag(self.map.matrix(), other.map.matrix()),
        )?;
        let mut lam = DVector::zeros(self.lam.len() + other.lam.len());
        lam.rows_mut(0, self.lam.len()).copy_from(&self.lam);
        lam.rows_mut(self.lam.len(), other.lam.len())
            .copy_from(&other.lam);
        GaussianChannel::new(map, lam, block_diag(&self.b, &other.b))
    }

    /// Splits the channel into a noiseless part and an expansion carrying all
    /// the noise, with environment `(Xi_out, delta_sigma)`:
    /// `S_N xi = S xi (+) xi` with `f_N == 1`, and
    /// `S_E(xi_1 (+) xi_2) = xi_1` with `f_E(xi_1 (+) xi_2) = f(xi_2)`.
    /// Recomposing `noiseless` after `expansion` reproduces the channel.
    pub fn noise_factorize(&self) -> Result<(GaussianChannel, GaussianChannel, PhaseSpace)> {
        let out = self.output_space();
        let inn = self.input_space();
        let env = if self.delta.is_empty() {
            PhaseSpace::trivial()
        } else {
            PhaseSpace::from_sigma(self.delta.clone())?
        };
        let d_out = out.dim();
        let d_in = inn.dim();
        let mid = inn.direct_sum(&env);

        let mut stacked = DMatrix::zeros(d_in + d_out, d_out);
        stacked
            .view_mut((0, 0), (d_in, d_out))
            .copy_from(self.map.matrix());
        stacked
            .view_mut((d_in, 0), (d_out, d_out))
            .copy_from(&DMatrix::identity(d_out, d_out));
        let noiseless = GaussianChannel::new(
            PhaseMap::new(out.clone(), mid.clone(), stacked)?,
            DVector::zeros(d_out),
            DMatrix::zeros(d_out, d_out),
        )?;

        let mut proj = DMatrix::zeros(d_in, d_in + d_out);
        proj.view_mut((0, 0), (d_in, d_in))
            .copy_from(&DMatrix::identity(d_in, d_in));
        let mut lam_e = DVector::zeros(d_in + d_out);
        lam_e.rows_mut(d_in, d_out).copy_from(&self.lam);
        let b_e = block_diag(&DMatrix::zeros(d_in, d_in), &self.b);
        let expansion = GaussianChannel::new(
            PhaseMap::new(mid, inn.clone(), proj)?,
            lam_e,
            b_e,
        )?;

        Ok((expansion, noiseless, env))
    }

    /// Minimal variant of [`noise_factorize`]: the directions on which the
    /// noise function has modulus one and the form deficit vanishes (the
    /// common kernel of `B` and `delta_sigma`) are absorbed into the
    /// noiseless part, so the environment has the smallest possible
    /// dimension. The noiseless factor keeps the displacement component
    /// along those directions.
    pub fn noise_factorize_minimal(
        &self,
    ) -> Result<(GaussianChannel, GaussianChannel, PhaseSpace)> {
        let out = self.output_space();
        let inn = self.input_space();
        let d_out = out.dim();
        let d_in = inn.dim();

        let mut stacked = DMatrix::zeros(2 * d_out, d_out);
        stacked.view_mut((0, 0), (d_out, d_out)).copy_from(&self.b);
        stacked
            .view_mut((d_out, 0), (d_out, d_out))
            .copy_from(&self.delta);
        let c = row_space_basis(&stacked, 1e-10);
        let m = c.ncols();

        let env = if m == 0 {
            PhaseSpace::trivial()
        } else {
            PhaseSpace::from_sigma(crate::phasespace::antisymmetrize(
                &(c.transpose() * &self.delta * &c),
            ))?
        };
        let mid = inn.direct_sum(&env);

        let mut sn = DMatrix::zeros(d_in + m, d_out);
        sn.view_mut((0, 0), (d_in, d_out))
            .copy_from(self.map.matrix());
        sn.view_mut((d_in, 0), (m, d_out)).copy_from(&c.transpose());
        let lam_n = &self.lam - &c * (c.transpose() * &self.lam);
        let noiseless = GaussianChannel::new(
            PhaseMap::new(out.clone(), mid.clone(), sn)?,
            lam_n,
            DMatrix::zeros(d_out, d_out),
        )?;

        let mut proj = DMatrix::zeros(d_in, d_in + m);
        proj.view_mut((0, 0), (d_in, d_in))
            .copy_from(&DMatrix::identity(d_in, d_in));
        let mut lam_e = DVector::zeros(d_in + m);
        lam_e
            .rows_mut(d_in, m)
            .copy_from(&(c.transpose() * &self.lam));
        let b_e = block_diag(
            &DMatrix::zeros(d_in, d_in),
            &symmetrize(&(c.transpose() * &self.b * &c)),
        );
        let expansion = GaussianChannel::new(
            PhaseMap::new(mid, inn.clone(), proj)?,
            lam_e,
            b_e,
        )?;

        Ok((expansion, noiseless, env))
    }

    pub fn classify(&self) -> Classification {
        let delta_max = if self.delta.is_empty() {
            0.0
        } else {
            self.delta.abs().max()
        };
        let b_max = if self.b.is_empty() { 0.0 } else { self.b.abs().max() };
        let noiseless = delta_max < 1e-10 && b_max < 1e-10;
        let smoothing = if self.b.is_empty() {
            false
        } else {
            self.b.clone().symmetric_eigen().eigenvalues.min() > 1e-10
        };
        Classification {
            noiseless,
            smoothing,
        }
    }
}

/// Coarse taxonomy of a Gaussian channel. A channel with `delta_sigma = 0`
/// and `B = 0` is noiseless even when its `S` is rank deficient, which covers
/// sharp observables as well; `smoothing` uses the sufficient criterion
/// `B > 0` (the noise function is then integrable).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub noiseless: bool,
    pub smoothing: bool,
}

/// Decomposition `S = S1 S2 S3` of a symplectic matrix with `S1`, `S3`
/// orthogonal symplectic and `S2 = diag(d_1..d_n, 1/d_1..1/d_n)`, `d_i >= 1`.
#[derive(Clone, Debug)]
pub struct BlochMessiah {
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub s3: DMatrix<f64>,
    /// The diagonal entries `d_i >= 1`, one per mode.
    pub d: DVector<f64>,
}

impl BlochMessiah {
    pub fn squeezing_degrees(&self) -> DVector<f64> {
        self.d.map(|d| d.ln())
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.s1 * &self.s2 * &self.s3
    }
}

/// Bloch-Messiah (Euler) decomposition on a purely quantum space in
/// canonical coordinates, via the polar decomposition `S = O P` followed by
/// a symplectic diagonalization of the positive factor `P`.
pub fn bloch_messiah(space: &PhaseSpace, s: &DMatrix<f64>) -> Result<BlochMessiah> {
    if space.classical_dims() != 0 {
        return Err(Error::InvalidParameter(
            "bloch_messiah needs a purely quantum space".into(),
        ));
    }
    let dim = space.dim();
    let n = space.quantum_modes();
    if s.nrows() != dim || s.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: s.nrows(),
        });
    }
    let j = space.sigma();
    let scale = s.abs().max().max(1.0);
    let residual = (s.transpose() * j * s - j).abs().max();
    if residual > 1e-10 * scale * scale {
        return Err(Error::NotSymplectic { residual });
    }

    let svd = s.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let o = u * vt;
    let p = vt.transpose() * DMatrix::from_diagonal(&svd.singular_values) * vt;
    let p = symmetrize(&p);

    let eig = p.clone().symmetric_eigen();
    let pair_tol = 1e-8;
    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut ds: Vec<f64> = Vec::new();
    let mut unit: Vec<DVector<f64>> = Vec::new();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
    });
    for &i in &order {
        let lam = eig.eigenvalues[i];
        let col: DVector<f64> = eig.eigenvectors.column(i).into();
        if lam > 1.0 + pair_tol {
            ds.push(lam);
            us.push(col.normalize());
        } else if lam >= 1.0 - pair_tol {
            unit.push(col);
        }
    }
    if 2 * us.len() + unit.len() != dim {
        return Err(Error::InvalidParameter(
            "eigenvalue pairing failed; matrix too far from symplectic".into(),
        ));
    }

    let mut pairs: Vec<(DVector<f64>, f64)> = us.into_iter().zip(ds).collect();
    // degenerate d = 1 block: build a symplectic orthonormal basis by
    // Gram-Schmidt against the pairs already chosen
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    for (u, _) in &pairs {
        chosen.push(u.clone());
        chosen.push(j.transpose() * u);
    }
    for cand in &unit {
        if pairs.len() == n {
            break;
        }
        let mut v = cand.clone();
        for c in &chosen {
            let overlap = c.dot(&v);
            v -= c * overlap;
        }
        if v.norm() < 0.5 {
            continue;
        }
        let u = v.normalize();
        let w = (j.transpose() * &u).normalize();
        chosen.push(u.clone());
        chosen.push(w);
        pairs.push((u, 1.0));
    }
    if pairs.len() != n {
        return Err(Error::InvalidParameter(
            "could not complete symplectic eigenbasis".into(),
        ));
    }

    let mut o2 = DMatrix::zeros(dim, dim);
    let mut d = DVector::zeros(n);
    for (i, (u, di)) in pairs.iter().enumerate() {
        o2.set_column(i, u);
        o2.set_column(n + i, &(j.transpose() * u));
        d[i] = *di;
    }
    let mut s2 = DMatrix::zeros(dim, dim);
    for i in 0..n {
        s2[(i, i)] = d[i];
        s2[(n + i, n + i)] = 1.0 / d[i];
    }

    Ok(BlochMessiah {
        s1: &o * &o2,
        s2,
        s3: o2.transpose(),
        d,
    })
}

pub(crate) fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    m
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Orthonormal basis (columns) of the row space of `m`.
fn row_space_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let dim = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let max_sv = svd.singular_values.max().max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * max_sv)
        .collect();
    let mut basis = DMatrix::zeros(dim, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        basis.set_column(j, &vt.row(i).transpose());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_mode() -> PhaseSpace {
        PhaseSpace::quantum(1).unwrap()
    }

    fn amplifier() -> GaussianChannel {
        let ps = one_mode();
        let map = PhaseMap::new(
            ps.clone(),
            ps.clone(),
            DMatrix::identity(2, 2) * 2.0_f64.sqrt(),
        )
        .unwrap();
        GaussianChannel::new(map, DVector::zeros(2), DMatrix::identity(2, 2) * 0.5).unwrap()
    }

    fn heterodyne() -> GaussianChannel {
        let ps = one_mode();
        let map = PhaseMap::new(ps.classicized(), ps, DMatrix::identity(2, 2)).unwrap();
        GaussianChannel::new(map, DVector::zeros(2), DMatrix::identity(2, 2) * 0.5).unwrap()
    }

    #[test]
    fn identity_is_valid_and_noiseless() {
        let ch = GaussianChannel::identity(&one_mode());
        let flags = ch.classify();
        assert!(flags.noiseless);
        assert!(!flags.smoothing);
    }

    #[test]
    fn amplifier_admissible_with_half_unit_noise() {
        let ch = amplifier();
        assert_abs_diff_eq!(
            ch.delta_sigma().clone(),
            -one_mode().sigma(),
            epsilon = 1e-12
        );
        let min = admissibility_min_eigenvalue(ch.noise_cov(), ch.delta_sigma());
        assert_abs_diff_eq!(min, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn amplifier_without_noise_rejected() {
        let ps = one_mode();
        let map = PhaseMap::new(
            ps.clone(),
            ps.clone(),
            DMatrix::identity(2, 2) * 2.0_f64.sqrt(),
        )
        .unwrap();
        let err = GaussianChannel::new(map, DVector::zeros(2), DMatrix::zeros(2, 2));
        match err {
            Err(Error::NotCompletelyPositive { min_eigenvalue, .. }) => {
                assert_abs_diff_eq!(min_eigenvalue, -0.5, epsilon = 1e-12);
            }
            other => panic!("expected CP failure, got {other:?}"),
        }
    }

    #[test]
    fn identity_apply_preserves_state() {
        let ch = GaussianChannel::identity(&one_mode());
        let state = CharFn::vacuum(&one_mode()).unwrap();
        let out = ch.apply(&state).unwrap();
        let (m, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m.clone(), DVector::zeros(2), epsilon = 1e-15);
        assert_abs_diff_eq!(a.clone(), DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn amplifier_on_vacuum_gives_thermal() {
        let out = amplifier().apply(&CharFn::vacuum(&one_mode()).unwrap()).unwrap();
        let (_, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a.clone(), DMatrix::identity(2, 2) * 1.5, epsilon = 1e-14);
    }

    #[test]
    fn heterodyne_on_vacuum_is_husimi() {
        let out = heterodyne().apply(&CharFn::vacuum(&one_mode()).unwrap()).unwrap();
        assert!(out.space().is_classical());
        let (_, a) = out.gaussian_parts().unwrap();
        assert_abs_diff_eq!(a.clone(), DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn heterodyne_agrees_with_vacuum_convolution() {
        let ps = one_mode();
        let rho = CharFn::gaussian(
            ps.clone(),
            DVector::from_row_slice(&[0.4, -1.1]),
            DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 0.7]),
        )
        .unwrap();
        let via_channel = heterodyne().apply(&rho).unwrap();
        let via_conv = rho.convolve(&CharFn::vacuum(&ps).unwrap(), (1, -1)).unwrap();
        let (m1, a1) = via_channel.gaussian_parts().unwrap();
        let (m2, a2) = via_conv.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m1.clone(), m2.clone(), epsilon = 1e-12);
        assert_abs_diff_eq!(a1.clone(), a2.clone(), epsilon = 1e-12);
    }

    #[test]
    fn compose_with_identity_is_original() {
        let ch = amplifier();
        let id = GaussianChannel::identity(&one_mode());
        for composed in [ch.compose(&id).unwrap(), id.compose(&ch).unwrap()] {
            assert_abs_diff_eq!(
                composed.map().matrix().clone(),
                ch.map().matrix().clone(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(composed.lam().clone(), ch.lam().clone(), epsilon = 1e-14);
            assert_abs_diff_eq!(
                composed.noise_cov().clone(),
                ch.noise_cov().clone(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn two_amplifiers_compose() {
        let ch = amplifier();
        let both = ch.compose(&ch).unwrap();
        assert_abs_diff_eq!(
            both.map().matrix().clone(),
            DMatrix::identity(2, 2) * 2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            both.noise_cov().clone(),
            DMatrix::identity(2, 2) * 1.5,
            epsilon = 1e-14
        );
        // cross-check against sequential application
        let vac = CharFn::vacuum(&one_mode()).unwrap();
        let seq = ch.apply(&ch.apply(&vac).unwrap()).unwrap();
        let direct = both.apply(&vac).unwrap();
        let (m1, a1) = seq.gaussian_parts().unwrap();
        let (m2, a2) = direct.gaussian_parts().unwrap();
        assert_abs_diff_eq!(m1.clone(), m2.clone(), epsilon = 1e-12);
        assert_abs_diff_eq!(a1.clone(), a2.clone(), epsilon = 1e-12);
    }

    #[test]
    fn apply_compose_consistency_random_pairs() {
        let ps = one_mode();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c1 = random_channel(&ps, &mut rng);
            let c2 = random_channel(&ps, &mut rng);
            let composed = c2.compose(&c1).unwrap();
            let state = random_state(&ps, &mut rng);
            let seq = c2.apply(&c1.apply(&state).unwrap()).unwrap();
            let direct = composed.apply(&state).unwrap();
            let (m1, a1) = seq.gaussian_parts().unwrap();
            let (m2, a2) = direct.gaussian_parts().unwrap();
            assert_abs_diff_eq!(m1.clone(), m2.clone(), epsilon = 1e-12);
            assert_abs_diff_eq!(a1.clone(), a2.clone(), epsilon = 1e-12);
        }
    }

    fn random_channel(ps: &PhaseSpace, rng: &mut ChaCha8Rng) -> GaussianChannel {
        let d = ps.dim();
        let s = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.5..1.5));
        let map = PhaseMap::new(ps.clone(), ps.clone(), s).unwrap();
        let delta = map.delta_sigma();
        let needed = 0.5 * delta.clone().svd(false, false).singular_values.max();
        let lam = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::identity(d, d) * (needed + 0.1);
        GaussianChannel::new(map, lam, b).unwrap()
    }

    fn random_state(ps: &PhaseSpace, rng: &mut ChaCha8Rng) -> CharFn {
        let d = ps.dim();
        let m = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let t = rng.gen_range(0.5_f64..2.0);
        CharFn::gaussian(ps.clone(), m, DMatrix::identity(d, d) * t).unwrap()
    }

    #[test]
    fn noiseless_compose_noiseless() {
        let ps = one_mode();
        let rot = DMatrix::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        let ch = GaussianChannel::new(
            PhaseMap::new(ps.clone(), ps.clone(), rot).unwrap(),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let both = ch.compose(&ch).unwrap();
        assert!(both.classify().noiseless);
    }

    #[test]
    fn tensor_identities_and_mixed() {
        let ps = one_mode();
        let id = GaussianChannel::identity(&ps);
        let both = id.tensor(&id).unwrap();
        assert!(both.classify().noiseless);
        assert_eq!(both.input_space().dim(), 4);

        let mixed = amplifier().tensor(&id).unwrap();
        let vac2 = CharFn::vacuum(both.input_space()).unwrap();
        let out = mixed.apply(&vac2).unwrap();
        let (_, a) = out.gaussian_parts().unwrap();
        let expected = block_diag(
            &(DMatrix::identity(2, 2) * 1.5),
            &(DMatrix::identity(2, 2) * 0.5),
        );
        assert_abs_diff_eq!(a.clone(), expected, epsilon = 1e-14);

        // marginal on factor 1 recovers the single-channel output
        let marg = out.marginal(&[0, 1]).unwrap();
        let single = amplifier().apply(&CharFn::vacuum(&ps).unwrap()).unwrap();
        let (mm, ma) = marg.gaussian_parts().unwrap();
        let (sm, sa) = single.gaussian_parts().unwrap();
        assert_abs_diff_eq!(mm.clone(), sm.clone(), epsilon = 1e-14);
        assert_abs_diff_eq!(ma.clone(), sa.clone(), epsilon = 1e-14);
    }

    fn assert_recomposes(ch: &GaussianChannel) {
        let (expansion, noiseless, _env) = ch.noise_factorize().unwrap();
        assert!(noiseless.classify().noiseless);
        let back = noiseless.compose(&expansion).unwrap();
        assert_abs_diff_eq!(
            back.map().matrix().clone(),
            ch.map().matrix().clone(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(back.lam().clone(), ch.lam().clone(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            back.noise_cov().clone(),
            ch.noise_cov().clone(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn noise_factorization_identity() {
        let ch = GaussianChannel::identity(&one_mode());
        let (_, _, env) = ch.noise_factorize().unwrap();
        assert!(env.is_classical());
        assert_eq!(env.dim(), 2);
        assert_recomposes(&ch);
    }

    #[test]
    fn noise_factorization_amplifier() {
        let ch = amplifier();
        let (expansion, _, env) = ch.noise_factorize().unwrap();
        assert_eq!(env.quantum_modes(), 1);
        assert_abs_diff_eq!(env.sigma().clone(), -one_mode().sigma(), epsilon = 1e-12);
        // noise block of the expansion carries the vacuum of the conjugate mode
        let b = expansion.noise_cov();
        assert_abs_diff_eq!(
            DMatrix::from(b.view((2, 2), (2, 2))),
            DMatrix::identity(2, 2) * 0.5,
            epsilon = 1e-12
        );
        assert_recomposes(&ch);
    }

    #[test]
    fn noise_factorization_heterodyne() {
        let ch = heterodyne();
        let (_, _, env) = ch.noise_factorize().unwrap();
        assert_abs_diff_eq!(env.sigma().clone(), -one_mode().sigma(), epsilon = 1e-12);
        assert_recomposes(&ch);
    }

    fn assert_recomposes_minimal(ch: &GaussianChannel) -> PhaseSpace {
        let (expansion, noiseless, env) = ch.noise_factorize_minimal().unwrap();
        assert!(noiseless.noise_cov().abs().max() < 1e-12);
        let back = noiseless.compose(&expansion).unwrap();
        assert_abs_diff_eq!(
            back.map().matrix().clone(),
            ch.map().matrix().clone(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(back.lam().clone(), ch.lam().clone(), epsilon = 1e-10);
        assert_abs_diff_eq!(
            back.noise_cov().clone(),
            ch.noise_cov().clone(),
            epsilon = 1e-10
        );
        env
    }

    #[test]
    fn minimal_factorization_shrinks_trivial_directions() {
        // identity with a pure displacement: everything is noiseless
        let ps = one_mode();
        let ch = GaussianChannel::new(
            PhaseMap::identity(&ps),
            DVector::from_row_slice(&[1.0, -2.0]),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let env = assert_recomposes_minimal(&ch);
        assert_eq!(env.dim(), 0);

        // amplifier noise is full rank, nothing to shrink
        let env = assert_recomposes_minimal(&amplifier());
        assert_eq!(env.dim(), 2);

        // classical noise in one coordinate only
        let cl = PhaseSpace::classical(2).unwrap();
        let mut b = DMatrix::zeros(2, 2);
        b[(0, 0)] = 3.0;
        let ch = GaussianChannel::new(
            PhaseMap::identity(&cl),
            DVector::from_row_slice(&[0.5, 0.7]),
            b,
        )
        .unwrap();
        let env = assert_recomposes_minimal(&ch);
        assert_eq!(env.dim(), 1);
        assert!(env.is_classical());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            heterodyne().classify(),
            Classification {
                noiseless: false,
                smoothing: true
            }
        );
        // sharp position observable: B = 0, delta sigma = 0
        let input = one_mode();
        let output = PhaseSpace::classical(1).unwrap();
        let map = PhaseMap::new(
            output,
            input,
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let pos = GaussianChannel::new(map, DVector::zeros(1), DMatrix::zeros(1, 1)).unwrap();
        assert!(pos.classify().noiseless);
        assert!(!pos.classify().smoothing);
        // the amplifier also carries full-rank noise
        assert!(!amplifier().classify().noiseless);
        assert!(amplifier().classify().smoothing);
    }

    #[test]
    fn bloch_messiah_orthogonal_input() {
        let ps = one_mode();
        let rot = DMatrix::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        let bm = bloch_messiah(&ps, &rot).unwrap();
        assert_abs_diff_eq!(bm.s2.clone(), DMatrix::identity(2, 2), epsilon = 1e-10);
        assert_abs_diff_eq!(bm.reconstruct(), rot, epsilon = 1e-10);
    }

    #[test]
    fn bloch_messiah_pure_squeeze() {
        let ps = one_mode();
        let lam = 0.7_f64;
        let sq = DMatrix::from_diagonal(&DVector::from_row_slice(&[lam.exp(), (-lam).exp()]));
        let bm = bloch_messiah(&ps, &sq).unwrap();
        assert_abs_diff_eq!(bm.s2.clone(), sq.clone(), epsilon = 1e-10);
        assert_abs_diff_eq!(&bm.s1 * &bm.s3, DMatrix::identity(2, 2), epsilon = 1e-10);
        assert_abs_diff_eq!(bm.reconstruct(), sq, epsilon = 1e-10);
        assert_abs_diff_eq!(bm.squeezing_degrees()[0], lam, epsilon = 1e-10);
    }

    #[test]
    fn bloch_messiah_random_two_mode() {
        let ps = PhaseSpace::quantum(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let s = random_symplectic_2mode(&mut rng);
            let bm = bloch_messiah(&ps, &s).unwrap();
            assert_abs_diff_eq!(bm.reconstruct(), s.clone(), epsilon = 1e-9);
            let j = ps.sigma();
            for o in [&bm.s1, &bm.s3] {
                assert_abs_diff_eq!(o.transpose() * o, DMatrix::identity(4, 4), epsilon = 1e-9);
                assert_abs_diff_eq!(o.transpose() * j * o, j.clone(), epsilon = 1e-9);
            }
            for &d in bm.d.iter() {
                assert!(d >= 1.0 - 1e-9);
            }
        }
    }

    fn random_symplectic_2mode(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        // passive . squeeze . passive in canonical (q1,q2,p1,p2) order; a
        // block diag(Q, Q) with Q orthogonal is orthogonal symplectic
        let passive = |rng: &mut ChaCha8Rng| {
            let raw = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
            let q = raw.qr().q();
            block_diag(&q, &q)
        };
        let squeeze = |l1: f64, l2: f64| {
            DMatrix::from_diagonal(&DVector::from_row_slice(&[
                l1.exp(),
                l2.exp(),
                (-l1).exp(),
                (-l2).exp(),
            ]))
        };
        let left = passive(rng);
        let mid = squeeze(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let right = passive(rng);
        left * mid * right
    }
}

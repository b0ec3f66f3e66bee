//! Hybrid phase spaces, their antisymmetric forms, and linear maps between them.
//!
//! A hybrid phase space is a real vector space with an antisymmetric form
//! `sigma` whose null space carries the classical degrees of freedom. In the
//! canonical coordinate order `(q_1..q_n, p_1..p_n, x_1..x_s)` the form is the
//! block matrix `[[0, I, 0], [-I, 0, 0], [0, 0, 0]]`. Direct sums keep block
//! order instead of re-sorting into canonical order, so all computations go
//! through `sigma` itself.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ANTISYM_TOL: f64 = 1e-12;

/// Hybrid phase space: `n` quantum modes, `s` classical directions,
/// `dim = 2n + s`, with antisymmetric form `sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpace {
    n: usize,
    s: usize,
    sigma: DMatrix<f64>,
}

impl PhaseSpace {
    /// Canonical hybrid space with `n` quantum and `s` classical degrees of
    /// freedom, coordinates ordered `(q.., p.., x..)`.
    pub fn hybrid(n: usize, s: usize) -> Result<Self> {
        if n == 0 && s == 0 {
            return Err(Error::EmptyPhaseSpace);
        }
        let dim = 2 * n + s;
        let mut sigma = DMatrix::zeros(dim, dim);
        for i in 0..n {
            sigma[(i, n + i)] = 1.0;
            sigma[(n + i, i)] = -1.0;
        }
        Ok(PhaseSpace { n, s, sigma })
    }

    /// Purely quantum space with `n` modes.
    pub fn quantum(n: usize) -> Result<Self> {
        Self::hybrid(n, 0)
    }

    /// Purely classical space of dimension `s`.
    pub fn classical(s: usize) -> Result<Self> {
        Self::hybrid(0, s)
    }

    /// Space from an explicit antisymmetric form. The quantum mode count is
    /// read off the rank of `sigma`, which must be even.
    pub fn from_sigma(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(Error::DimensionMismatch {
                expected: sigma.nrows(),
                got: sigma.ncols(),
            });
        }
        if sigma.is_empty() {
            return Err(Error::EmptyPhaseSpace);
        }
        let residual = (&sigma + sigma.transpose()).abs().max();
        if residual > ANTISYM_TOL {
            return Err(Error::NotAntisymmetric { residual });
        }
        let rank = numerical_rank(&sigma);
        if rank % 2 != 0 {
            return Err(Error::OddRank { rank });
        }
        let dim = sigma.nrows();
        Ok(PhaseSpace {
            n: rank / 2,
            s: dim - rank,
            sigma,
        })
    }

    /// The trivial space `{0}`, used as input of preparations and output of
    /// destructive channels.
    pub fn trivial() -> Self {
        PhaseSpace {
            n: 0,
            s: 0,
            sigma: DMatrix::zeros(0, 0),
        }
    }

    pub fn quantum_modes(&self) -> usize {
        self.n
    }

    pub fn classical_dims(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.s
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn is_classical(&self) -> bool {
        self.n == 0
    }

    /// Same underlying vector space with the form negated, the "conjugate"
    /// system used for resource states and dilations.
    pub fn conjugate(&self) -> Self {
        PhaseSpace {
            n: self.n,
            s: self.s,
            sigma: -&self.sigma,
        }
    }

    /// Same underlying vector space with the zero form (all directions
    /// classical), used for measurement outputs.
    pub fn classicized(&self) -> Self {
        PhaseSpace {
            n: 0,
            s: self.dim(),
            sigma: DMatrix::zeros(self.dim(), self.dim()),
        }
    }

    /// Block direct sum. The result keeps the `(a, b)` block coordinate
    /// order; it is generally not in canonical `(q, p, x)` order.
    pub fn direct_sum(&self, other: &PhaseSpace) -> PhaseSpace {
        let da = self.dim();
        let db = other.dim();
        let mut sigma = DMatrix::zeros(da + db, da + db);
        sigma.view_mut((0, 0), (da, da)).copy_from(&self.sigma);
        sigma.view_mut((da, da), (db, db)).copy_from(&other.sigma);
        PhaseSpace {
            n: self.n + other.n,
            s: self.s + other.s,
            sigma,
        }
    }

    /// sigma(xi, eta).
    pub fn form(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        (self.sigma.clone() * eta).dot(xi)
    }

    /// The Weyl multiplier `exp(-(i/2) xi . sigma eta)` from
    /// `W(xi) W(eta) = exp(-(i/2) xi . sigma eta) W(xi + eta)`.
    pub fn weyl_phase(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> Complex64 {
        Complex64::new(0.0, -0.5 * self.form(xi, eta)).exp()
    }

    pub fn check_vector(&self, xi: &DVector<f64>) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Restriction of the form to a coordinate subset.
    pub fn restrict(&self, keep: &[usize]) -> Result<PhaseSpace> {
        for &i in keep {
            if i >= self.dim() {
                return Err(Error::InvalidParameter(format!(
                    "coordinate index {i} out of range for dim {}",
                    self.dim()
                )));
            }
        }
        if keep.is_empty() {
            return Ok(PhaseSpace::trivial());
        }
        let k = keep.len();
        let sub = DMatrix::from_fn(k, k, |r, c| self.sigma[(keep[r], keep[c])]);
        PhaseSpace::from_sigma(sub)
    }
}

/// Linear map between phase spaces in the channel direction: from the
/// channel's output space to its input space.
#[derive(Clone, Debug)]
pub struct PhaseMap {
    source: PhaseSpace,
    target: PhaseSpace,
    matrix: DMatrix<f64>,
}

impl PhaseMap {
    /// `matrix` is `dim(target) x dim(source)`.
    pub fn new(source: PhaseSpace, target: PhaseSpace, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: matrix.nrows(),
            });
        }
        if matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch {
                expected: source.dim(),
                got: matrix.ncols(),
            });
        }
        Ok(PhaseMap {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(space: &PhaseSpace) -> Self {
        PhaseMap {
            source: space.clone(),
            target: space.clone(),
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    /// Channel output space (the domain of the map).
    pub fn source(&self) -> &PhaseSpace {
        &self.source
    }

    /// Channel input space (the codomain of the map).
    pub fn target(&self) -> &PhaseSpace {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.matrix * xi
    }

    /// The form deficit `Delta sigma = sigma_out - S^T sigma_in S`, the form
    /// the noise function must supply for complete positivity. Antisymmetric
    /// roundoff is symmetrized away before returning.
    pub fn delta_sigma(&self) -> DMatrix<f64> {
        let pulled = self.matrix.transpose() * self.target.sigma() * &self.matrix;
        let raw = self.source.sigma() - pulled;
        antisymmetrize(&raw)
    }

    /// The phase space `(Xi_out, Delta sigma)` on which noise states live.
    pub fn noise_space(&self) -> Result<PhaseSpace> {
        PhaseSpace::from_sigma(self.delta_sigma())
    }

    /// `self` after `earlier` in map-composition order: the composite sends
    /// the final output space through `self.matrix` then `earlier.matrix`.
    pub fn compose(&self, earlier: &PhaseMap) -> Result<PhaseMap> {
        if earlier.source.dim() != self.target.dim() {
            return Err(Error::SpaceMismatch {
                context: format!(
                    "map composition: inner source dim {} vs outer target dim {}",
                    earlier.source.dim(),
                    self.target.dim()
                ),
            });
        }
        PhaseMap::new(
            self.source.clone(),
            earlier.target.clone(),
            earlier.matrix() * self.matrix(),
        )
    }
}

pub(crate) fn antisymmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let max_sv = svd.singular_values.max();
    let tol = 1e-10 * max_sv.max(1.0);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the null space of `m` (columns).
#[cfg(test)]
pub(crate) fn null_space_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let dim = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let max_sv = svd.singular_values.max().max(1.0);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..vt.nrows() {
        if svd.singular_values[i] <= tol * max_sv {
            cols.push(vt.row(i).transpose());
        }
    }
    // rows of v_t beyond the singular value count also span the kernel
    for i in svd.singular_values.len()..dim.min(vt.nrows()) {
        cols.push(vt.row(i).transpose());
    }
    let mut basis = DMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        basis.set_column(j, c);
    }
    basis
}

//! Multimode Gaussian states and the linear-optical operations the
//! protocols need.
//!
//! A state is its first and second moments: a mean vector of length `2n`
//! ordered `(x₁, p₁, …, xₙ, pₙ)` and a real symmetric `2n × 2n` covariance
//! matrix in the same ordering, with ℏ = 1 so the vacuum variance is 1/2 and
//! a coherent state `|α⟩` has mean `√2 (αx, αp)`.
//!
//! States are immutable; every operation returns a new state. Constructors
//! validate symmetry and physicality (all symplectic eigenvalues ≥ 1/2, the
//! uncertainty principle); the transformation operations preserve physicality
//! by construction, which the test suite checks on random operation chains.
//!
//! Because all states here are Gaussian with positive Wigner functions and
//! only commuting quadratures are read out in a given round, joint
//! measurement outcomes are exact multivariate-normal draws from the selected
//! marginal. Conditional post-measurement states are not modeled; no protocol
//! in this crate needs them.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Vacuum variance of each quadrature (ℏ = 1).
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Relative tolerance for the covariance symmetry check.
const SYMMETRY_RTOL: f64 = 1e-12;
/// Absolute slack on the symplectic-eigenvalue bound 1/2.
const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("state must have at least one mode")]
    EmptyState,
    #[error("mean has length {mean_len}, covariance is {cov_rows}x{cov_cols}; expected 2n and 2n x 2n")]
    DimensionMismatch {
        mean_len: usize,
        cov_rows: usize,
        cov_cols: usize,
    },
    #[error("covariance is not symmetric: |V - V^T| reaches {0:.3e}")]
    NotSymmetric(f64),
    #[error("covariance is unphysical: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),
    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },
    #[error("operation needs two distinct modes, got index {0} twice")]
    DegenerateModePair(usize),
    #[error("beamsplitter transmissivity {0} outside [0, 1]")]
    InvalidTransmissivity(f64),
    #[error("loss transmissivity {0} must be in (0, 1]")]
    InvalidLoss(f64),
    #[error("excess noise {0} must be >= 0")]
    InvalidExcessNoise(f64),
    #[error("amplifier gain {0} must be >= 1")]
    InvalidGain(f64),
    #[error("squeezing parameter {0} must be >= 0")]
    InvalidSqueezing(f64),
    #[error("mode {0} selected more than once")]
    DuplicateMode(usize),
    #[error("selected covariance block is not positive definite")]
    DegenerateSelection,
}

/// Which quadrature of a mode to read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

/// A set of commuting quadrature observables: at most one per mode.
///
/// The at-most-once rule guarantees all selected observables commute, so a
/// joint outcome distribution exists.
#[derive(Debug, Clone)]
pub struct QuadratureSelection {
    entries: Vec<(usize, Quadrature)>,
}

impl QuadratureSelection {
    pub fn new(entries: Vec<(usize, Quadrature)>) -> Result<Self, GaussianError> {
        for (k, &(mode, _)) in entries.iter().enumerate() {
            if entries[..k].iter().any(|&(m, _)| m == mode) {
                return Err(GaussianError::DuplicateMode(mode));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, Quadrature)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flat indices into the mean vector / covariance matrix.
    fn indices(&self, n_modes: usize) -> Result<Vec<usize>, GaussianError> {
        self.entries
            .iter()
            .map(|&(mode, q)| {
                if mode >= n_modes {
                    Err(GaussianError::ModeOutOfRange {
                        index: mode,
                        n_modes,
                    })
                } else {
                    Ok(2 * mode + if q == Quadrature::P { 1 } else { 0 })
                }
            })
            .collect()
    }
}

/// An n-mode Gaussian state: mean vector and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Build a state from raw moments, rejecting asymmetric or unphysical
    /// covariances. Failing states are rejected, never clipped.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussianError> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(GaussianError::EmptyState);
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(GaussianError::DimensionMismatch {
                mean_len: dim,
                cov_rows: cov.nrows(),
                cov_cols: cov.ncols(),
            });
        }
        let scale = cov.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut max_asym = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                max_asym = max_asym.max((cov[(i, j)] - cov[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_RTOL * scale {
            return Err(GaussianError::NotSymmetric(max_asym));
        }
        let state = Self {
            n_modes: dim / 2,
            mean,
            cov,
        };
        let nu_min = state.min_symplectic_eigenvalue();
        if nu_min < 0.5 - PHYSICALITY_TOL {
            return Err(GaussianError::Unphysical(nu_min));
        }
        Ok(state)
    }

    /// Internal constructor for operations that preserve physicality by
    /// construction (symplectic maps plus positive added noise).
    fn from_parts(n_modes: usize, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { n_modes, mean, cov }
    }

    /// n-mode vacuum: zero mean, covariance I/2.
    pub fn vacuum(n_modes: usize) -> Result<Self, GaussianError> {
        if n_modes == 0 {
            return Err(GaussianError::EmptyState);
        }
        Ok(Self::from_parts(
            n_modes,
            DVector::zeros(2 * n_modes),
            DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
        ))
    }

    /// Single-mode coherent state |α⟩: mean √2 (αx, αp), covariance I/2.
    pub fn coherent(alpha: Complex<f64>) -> Self {
        let sqrt2 = std::f64::consts::SQRT_2;
        Self::from_parts(
            1,
            DVector::from_column_slice(&[sqrt2 * alpha.re, sqrt2 * alpha.im]),
            DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        )
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r ≥ 0`.
    ///
    /// All four quadrature variances are cosh(2r)/2; x
    /// quadratures are correlated and p quadratures anti-correlated with
    /// magnitude sinh(2r)/2, so that
    /// ⟨(x_A−x_B)²⟩ + ⟨(p_A+p_B)²⟩ = 2e^{−2r}.
    pub fn tmsv(r: f64) -> Result<Self, GaussianError> {
        if !(r >= 0.0) {
            return Err(GaussianError::InvalidSqueezing(r));
        }
        let c = (2.0 * r).cosh() * 0.5;
        let s = (2.0 * r).sinh() * 0.5;
        let mut cov = DMatrix::zeros(4, 4);
        for k in 0..4 {
            cov[(k, k)] = c;
        }
        cov[(0, 2)] = s;
        cov[(2, 0)] = s;
        cov[(1, 3)] = -s;
        cov[(3, 1)] = -s;
        Ok(Self::from_parts(2, DVector::zeros(4), cov))
    }

    /// Tensor product: `self ⊗ other` (modes of `other` appended).
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.n_modes + other.n_modes;
        let da = 2 * self.n_modes;
        let db = 2 * other.n_modes;
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        Self::from_parts(n, mean, cov)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Reduced state of the given modes (marginalization).
    pub fn reduced(&self, modes: &[usize]) -> Result<Self, GaussianError> {
        if modes.is_empty() {
            return Err(GaussianError::EmptyState);
        }
        let mut idx = Vec::with_capacity(2 * modes.len());
        for (k, &m) in modes.iter().enumerate() {
            if m >= self.n_modes {
                return Err(GaussianError::ModeOutOfRange {
                    index: m,
                    n_modes: self.n_modes,
                });
            }
            if modes[..k].contains(&m) {
                return Err(GaussianError::DuplicateMode(m));
            }
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let d = idx.len();
        let mean = DVector::from_fn(d, |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(d, d, |i, j| self.cov[(idx[i], idx[j])]);
        Ok(Self::from_parts(modes.len(), mean, cov))
    }

    /// Symplectic eigenvalues of the covariance matrix, ascending.
    ///
    /// These are the moduli of the eigenvalues of `iΩV`; physical states have
    /// all of them ≥ 1/2.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let d = 2 * self.n_modes;
        // M = Ω V with Ω the block-diagonal symplectic form for (x,p) pairs.
        let mut m = DMatrix::zeros(d, d);
        for k in 0..self.n_modes {
            for j in 0..d {
                m[(2 * k, j)] = self.cov[(2 * k + 1, j)];
                m[(2 * k + 1, j)] = -self.cov[(2 * k, j)];
            }
        }
        let eigs = m.complex_eigenvalues();
        let mut mags: Vec<f64> = eigs.iter().map(|z| z.im.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Eigenvalues come in ±iν pairs; keep one of each.
        mags.into_iter().skip(1).step_by(2).collect()
    }

    fn min_symplectic_eigenvalue(&self) -> f64 {
        self.symplectic_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Convenience physicality predicate used by tests.
    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue() >= 0.5 - PHYSICALITY_TOL
    }

    fn check_mode(&self, index: usize) -> Result<(), GaussianError> {
        if index >= self.n_modes {
            Err(GaussianError::ModeOutOfRange {
                index,
                n_modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    /// Beamsplitter of transmissivity `t` on modes `(i, j)`:
    /// `out_i = √t·in_i + √(1−t)·in_j`, `out_j = √t·in_j − √(1−t)·in_i`,
    /// acting identically on x and p.
    pub fn beamsplitter(&self, i: usize, j: usize, t: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(GaussianError::DegenerateModePair(i));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(GaussianError::InvalidTransmissivity(t));
        }
        let c = t.sqrt();
        let s = (1.0 - t).sqrt();
        Ok(self.two_mode_mix(i, j, c, s))
    }

    // out_i = c·in_i + s·in_j, out_j = c·in_j − s·in_i on both quadratures.
    fn two_mode_mix(&self, i: usize, j: usize, c: f64, s: f64) -> Self {
        let d = 2 * self.n_modes;
        let mut sym = DMatrix::identity(d, d);
        for q in 0..2 {
            let a = 2 * i + q;
            let b = 2 * j + q;
            sym[(a, a)] = c;
            sym[(a, b)] = s;
            sym[(b, b)] = c;
            sym[(b, a)] = -s;
        }
        let mean = &sym * &self.mean;
        let cov = &sym * &self.cov * sym.transpose();
        Self::from_parts(self.n_modes, mean, cov)
    }

    /// Phase rotation by `theta` on mode `i`:
    /// `x → cosθ·x + sinθ·p`, `p → cosθ·p − sinθ·x`.
    pub fn phase(&self, i: usize, theta: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        let (sin, cos) = theta.sin_cos();
        let d = 2 * self.n_modes;
        let mut sym = DMatrix::identity(d, d);
        let x = 2 * i;
        let p = 2 * i + 1;
        sym[(x, x)] = cos;
        sym[(x, p)] = sin;
        sym[(p, p)] = cos;
        sym[(p, x)] = -sin;
        let mean = &sym * &self.mean;
        let cov = &sym * &self.cov * sym.transpose();
        Ok(Self::from_parts(self.n_modes, mean, cov))
    }

    /// Lossy channel on mode `i`: transmissivity `eta ∈ (0, 1]` with an
    /// environment carrying excess noise `xi ≥ 0` (variance (1+ξ)/2).
    ///
    /// Mean scales by √η, the mode's covariance block becomes
    /// η·block + (1−η)(1+ξ)/2·I, cross-covariances scale by √η.
    pub fn loss(&self, i: usize, eta: f64, xi: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(GaussianError::InvalidLoss(eta));
        }
        if !(xi >= 0.0) {
            return Err(GaussianError::InvalidExcessNoise(xi));
        }
        let added = (1.0 - eta) * (1.0 + xi) * 0.5;
        Ok(self.scale_mode(i, eta.sqrt(), added))
    }

    /// Phase-insensitive amplifier on mode `i` with gain `nu ≥ 1`: mean
    /// scales by √ν, the mode's covariance block becomes
    /// ν·block + (ν−1)/2·I (vacuum idler), cross-covariances scale by √ν.
    pub fn amplifier(&self, i: usize, nu: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        if !(nu >= 1.0) {
            return Err(GaussianError::InvalidGain(nu));
        }
        let added = (nu - 1.0) * 0.5;
        Ok(self.scale_mode(i, nu.sqrt(), added))
    }

    // Shared body of loss/amplifier: scale the mode by `g`, add `added·I`
    // to its diagonal block.
    fn scale_mode(&self, i: usize, g: f64, added: f64) -> Self {
        let mut mean = self.mean.clone();
        let mut cov = self.cov.clone();
        let d = 2 * self.n_modes;
        for q in 0..2 {
            let a = 2 * i + q;
            mean[a] *= g;
            for k in 0..d {
                cov[(a, k)] *= g;
            }
            for k in 0..d {
                cov[(k, a)] *= g;
            }
            cov[(a, a)] += added;
        }
        Self::from_parts(self.n_modes, mean, cov)
    }

    /// One joint draw of the selected commuting quadratures.
    pub fn sample_quadratures<R: Rng + ?Sized>(
        &self,
        sel: &QuadratureSelection,
        rng: &mut R,
    ) -> Result<Vec<f64>, GaussianError> {
        let sampler = QuadratureSampler::new(self, sel)?;
        let mut out = vec![0.0; sel.len()];
        sampler.draw(rng, &mut out);
        Ok(out)
    }
}

/// Cached sampler for repeated joint quadrature draws from one state.
///
/// Factorizes the selected covariance block once; each draw is then
/// `mean + L·z` with `z` standard normal.
pub struct QuadratureSampler {
    mean: Vec<f64>,
    chol: DMatrix<f64>,
}

impl QuadratureSampler {
    pub fn new(state: &GaussianState, sel: &QuadratureSelection) -> Result<Self, GaussianError> {
        let idx = sel.indices(state.n_modes)?;
        let k = idx.len();
        let mean = idx.iter().map(|&i| state.mean[i]).collect();
        let sub = DMatrix::from_fn(k, k, |r, c| state.cov[(idx[r], idx[c])]);
        let chol = sub
            .cholesky()
            .ok_or(GaussianError::DegenerateSelection)?
            .unpack();
        Ok(Self { mean, chol })
    }

    /// Draw one outcome vector into `out` (length must match the selection).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let k = self.mean.len();
        debug_assert_eq!(out.len(), k);
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        for r in 0..k {
            let mut acc = self.mean[r];
            for c in 0..=r {
                acc += self.chol[(r, c)] * z[c];
            }
            out[r] = acc;
        }
    }
}

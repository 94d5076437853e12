use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::gate::{symplectic_form, SymplecticGate};
use crate::{Error, Result};

/// Variance of either vacuum quadrature when `a = x + i p`.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Squeezing used for "ideal" resources: `e^{-2r} ≈ 8.3e-11`.
pub const IDEAL_R: f64 = 11.6;

/// Converts squeezing in dB to the squeezing parameter, `e^{-2r} = 10^{-dB/10}`.
pub fn db_to_r(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

/// Which quadrature has its variance reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqueezeAxis {
    #[serde(rename = "squeeze-p")]
    P,
    #[serde(rename = "squeeze-x")]
    X,
}

/// First and second moments of an `N`-mode Gaussian state.
///
/// Besides the ordinary covariance the state carries a `flat` matrix of
/// directions whose variance is unbounded: the covariance is `cov + λ·flat`
/// in the limit `λ → ∞`. Quadrature eigenstates blurred by Gaussian shift
/// noise are represented exactly this way, and homodyne conditioning takes
/// the limit analytically. A state with `flat = 0` is an ordinary (proper)
/// Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    flat: DMatrix<f64>,
}

const FLAT_TOL: f64 = 1e-12;

impl GaussianState {
    /// Builds a proper state, checking dimensions and symmetry.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        let flat = DMatrix::zeros(dim, dim);
        Self::with_flat(mean, cov, flat)
    }

    /// Builds a state with unbounded-variance directions `flat` (symmetric PSD).
    pub fn with_flat(mean: DVector<f64>, cov: DMatrix<f64>, flat: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::NoModes);
        }
        if !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!("mean has odd length {dim}")));
        }
        for (name, m) in [("cov", &cov), ("flat", &flat)] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {dim}x{dim}", m.nrows(), m.ncols())));
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::Dimension(format!("{name} is not symmetric")));
            }
        }
        if mean.iter().chain(cov.iter()).chain(flat.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state moments"));
        }
        Ok(Self { mean, cov, flat })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::NoModes);
        }
        let dim = 2 * n_modes;
        Ok(Self {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * VACUUM_VARIANCE,
            flat: DMatrix::zeros(dim, dim),
        })
    }

    /// Single-mode squeezed vacuum; `SqueezeAxis::P` gives `diag(e^{2r}, e^{-2r})/4`.
    pub fn squeezed_vacuum(r: f64, axis: SqueezeAxis) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidSqueezing(r));
        }
        let (lo, hi) = ((-2.0 * r).exp() * VACUUM_VARIANCE, (2.0 * r).exp() * VACUUM_VARIANCE);
        let diag = match axis {
            SqueezeAxis::P => [hi, lo],
            SqueezeAxis::X => [lo, hi],
        };
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::from_diagonal(&DVector::from_row_slice(&diag)),
            flat: DMatrix::zeros(2, 2),
        })
    }

    /// Coherent state `|α⟩`, mean `(Re α, Im α)`.
    pub fn coherent(alpha_re: f64, alpha_im: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![alpha_re, alpha_im]),
            cov: DMatrix::identity(2, 2) * VACUUM_VARIANCE,
            flat: DMatrix::zeros(2, 2),
        }
    }

    /// Quadrature eigenstate blurred by Gaussian shift noise of variance
    /// `e^{-2r}/4` in the squeezed quadrature. `SqueezeAxis::P` is `|p = 0⟩`;
    /// the conjugate quadrature is flat.
    pub fn blurred_eigenstate(r: f64, axis: SqueezeAxis) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidSqueezing(r));
        }
        let noise = (-2.0 * r).exp() * VACUUM_VARIANCE;
        let (cov, flat) = match axis {
            SqueezeAxis::P => ([0.0, noise], [1.0, 0.0]),
            SqueezeAxis::X => ([noise, 0.0], [0.0, 1.0]),
        };
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::from_diagonal(&DVector::from_row_slice(&cov)),
            flat: DMatrix::from_diagonal(&DVector::from_row_slice(&flat)),
        })
    }

    /// Zero-mode state left after every mode has been measured.
    pub(crate) fn empty() -> Self {
        Self { mean: DVector::zeros(0), cov: DMatrix::zeros(0, 0), flat: DMatrix::zeros(0, 0) }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn flat(&self) -> &DMatrix<f64> {
        &self.flat
    }

    pub fn is_proper(&self) -> bool {
        self.flat.amax() <= FLAT_TOL
    }

    /// Drops numerically negligible flat residue; errors if real unbounded directions remain.
    pub fn into_proper(mut self) -> Result<Self> {
        if !self.is_proper() {
            return Err(Error::Improper);
        }
        self.flat.fill(0.0);
        Ok(self)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut DVector<f64>, &mut DMatrix<f64>, &mut DMatrix<f64>) {
        (&mut self.mean, &mut self.cov, &mut self.flat)
    }

    /// Block direct sum; modes of `self` come first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let block = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a + b, a + b);
            m.view_mut((0, 0), (a, a)).copy_from(x);
            m.view_mut((a, a), (b, b)).copy_from(y);
            m
        };
        GaussianState { mean, cov: block(&self.cov, &other.cov), flat: block(&self.flat, &other.flat) }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::BadMode { mode, n_modes: self.n_modes() });
        }
        Ok(())
    }

    /// `X(u) Z(v)` on one mode.
    pub fn displace(&self, mode: usize, u: f64, v: f64) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += u;
        out.mean[2 * mode + 1] += v;
        Ok(out)
    }

    /// Applies `gate` to the listed modes (gate mode `k` acts on `modes[k]`).
    pub fn apply(&self, gate: &SymplecticGate, modes: &[usize]) -> Result<GaussianState> {
        if gate.n_modes() != modes.len() {
            return Err(Error::ArityMismatch { expected: gate.n_modes(), got: modes.len() });
        }
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return Err(Error::RepeatedMode(m));
            }
        }
        let dim = self.mean.len();
        let (s, d) = (gate.matrix(), gate.displacement_vector());
        let mut full = DMatrix::identity(dim, dim);
        let mut shift = DVector::zeros(dim);
        for (a, &ma) in modes.iter().enumerate() {
            for i in 0..2 {
                full[(2 * ma + i, 2 * ma + i)] = 0.0;
                shift[2 * ma + i] = d[2 * a + i];
            }
        }
        for (a, &ma) in modes.iter().enumerate() {
            for (b, &mb) in modes.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        full[(2 * ma + i, 2 * mb + j)] = s[(2 * a + i, 2 * b + j)];
                    }
                }
            }
        }
        let conj = |m: &DMatrix<f64>| {
            let r = &full * m * full.transpose();
            (&r + r.transpose()) * 0.5
        };
        Ok(GaussianState { mean: &full * &self.mean + shift, cov: conj(&self.cov), flat: conj(&self.flat) })
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn marginal(&self, modes: &[usize]) -> Result<GaussianState> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = idx.len();
        Ok(GaussianState {
            mean: DVector::from_fn(k, |i, _| self.mean[idx[i]]),
            cov: DMatrix::from_fn(k, k, |i, j| self.cov[(idx[i], idx[j])]),
            flat: DMatrix::from_fn(k, k, |i, j| self.flat[(idx[i], idx[j])]),
        })
    }

    /// `(1/4)^N / √det Σ`; `None` for states with unbounded directions.
    pub fn purity(&self) -> Option<f64> {
        if !self.is_proper() {
            return None;
        }
        let det = self.cov.determinant();
        Some(VACUUM_VARIANCE.powi(self.n_modes() as i32) / det.max(0.0).sqrt())
    }

    /// Smallest eigenvalue of `cov + (i/4) J`, restricted to the bounded
    /// subspace (the kernel of `flat`) when unbounded directions exist.
    pub fn uncertainty_margin(&self) -> f64 {
        let dim = self.mean.len();
        let basis = if self.is_proper() {
            DMatrix::identity(dim, dim)
        } else {
            let eig = SymmetricEigen::new(self.flat.clone());
            let scale = self.flat.amax();
            let cols: Vec<_> = (0..dim)
                .filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * scale)
                .map(|i| eig.eigenvectors.column(i).into_owned())
                .collect();
            if cols.is_empty() {
                return f64::INFINITY;
            }
            DMatrix::from_columns(&cols)
        };
        let re = basis.transpose() * &self.cov * &basis;
        let im = basis.transpose() * symplectic_form(self.n_modes()) * &basis * VACUUM_VARIANCE;
        // Hermitian re + i·im embedded as the real symmetric [[re, -im], [im, re]].
        let k = re.nrows();
        let mut emb = DMatrix::zeros(2 * k, 2 * k);
        emb.view_mut((0, 0), (k, k)).copy_from(&re);
        emb.view_mut((k, k), (k, k)).copy_from(&re);
        emb.view_mut((0, k), (k, k)).copy_from(&(-&im));
        emb.view_mut((k, 0), (k, k)).copy_from(&im);
        let emb = (&emb + emb.transpose()) * 0.5;
        SymmetricEigen::new(emb).eigenvalues.min()
    }

    pub fn satisfies_uncertainty(&self, tol: f64) -> bool {
        self.uncertainty_margin() >= -tol
    }

    /// Largest absolute difference of the moments of two states of equal size.
    pub fn distance(&self, other: &GaussianState) -> f64 {
        if self.mean.len() != other.mean.len() {
            return f64::INFINITY;
        }
        let dm = (&self.mean - &other.mean).amax();
        let dc = (&self.cov - &other.cov).amax();
        let df = (&self.flat - &other.flat).amax();
        dm.max(dc).max(df)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_conventions() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(v.cov(), &(DMatrix::identity(2, 2) * 0.25));
        assert_relative_eq!(v.purity().unwrap(), 1.0);
        let v2 = GaussianState::vacuum(2).unwrap();
        assert_eq!(v2.cov(), &(DMatrix::identity(4, 4) * 0.25));
        assert_eq!(GaussianState::vacuum(0), Err(Error::NoModes));
    }

    #[test]
    fn squeezed_vacuum_variances() {
        assert_eq!(GaussianState::squeezed_vacuum(0.0, SqueezeAxis::P).unwrap(), GaussianState::vacuum(1).unwrap());
        let r = db_to_r(10.0);
        let s = GaussianState::squeezed_vacuum(r, SqueezeAxis::P).unwrap();
        // anti-squeezed quadrature: e^{2r}/4 = 10/4
        assert_relative_eq!(s.cov()[(0, 0)], 2.5, epsilon = 1e-12);
        assert_relative_eq!(s.cov()[(1, 1)], 0.025, epsilon = 1e-12);
        let x = GaussianState::squeezed_vacuum(1.0, SqueezeAxis::X).unwrap();
        assert_relative_eq!(x.cov()[(0, 0)], 0.033_833_820_809, epsilon = 1e-11);
        assert!(matches!(GaussianState::squeezed_vacuum(-0.1, SqueezeAxis::P), Err(Error::InvalidSqueezing(_))));
    }

    #[test]
    fn coherent_means() {
        assert_eq!(GaussianState::coherent(0.0, 0.0), GaussianState::vacuum(1).unwrap());
        assert_eq!(GaussianState::coherent(1.0, 0.0).mean().as_slice(), &[1.0, 0.0]);
        assert_eq!(GaussianState::coherent(0.0, 1.0).mean().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn tensor_is_block_diagonal_and_local() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.tensor(&v), GaussianState::vacuum(2).unwrap());
        let s = GaussianState::squeezed_vacuum(0.5, SqueezeAxis::P).unwrap();
        let t = s.tensor(&v);
        assert_eq!(t.cov()[(0, 2)], 0.0);
        assert_eq!(t.cov()[(0, 0)], s.cov()[(0, 0)]);
        let g = SymplecticGate::shear(0.7);
        let a = s.tensor(&v).apply(&g, &[1]).unwrap();
        let b = s.tensor(&v.apply(&g, &[0]).unwrap());
        assert!(a.distance(&b) < 1e-15);
    }

    #[test]
    fn displacement_shifts_mean_only() {
        let v = GaussianState::vacuum(2).unwrap();
        let d = v.displace(0, 1.0, 0.0).unwrap();
        assert_eq!(d.mean().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.cov(), v.cov());
        assert_eq!(v.displace(1, 0.0, 0.0).unwrap(), v);
        let dd = v.displace(1, 0.5, 1.0).unwrap().displace(1, 0.25, -3.0).unwrap();
        assert_eq!(dd.mean().as_slice(), &[0.0, 0.0, 0.75, -2.0]);
        assert!(matches!(v.displace(2, 1.0, 0.0), Err(Error::BadMode { .. })));
    }

    #[test]
    fn cz_on_vacuum() {
        let v = GaussianState::vacuum(2).unwrap();
        let out = v.apply(&SymplecticGate::cz(), &[0, 1]).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 1.0,
            0.0, 2.0, 1.0, 0.0,
            0.0, 1.0, 1.0, 0.0,
            1.0, 0.0, 0.0, 2.0,
        ]) * 0.25;
        assert_relative_eq!(out.cov(), &expected, epsilon = 1e-15);
    }

    #[test]
    fn apply_validates_modes() {
        let v = GaussianState::vacuum(2).unwrap();
        assert_eq!(v.apply(&SymplecticGate::cz(), &[0]), Err(Error::ArityMismatch { expected: 2, got: 1 }));
        assert_eq!(v.apply(&SymplecticGate::cz(), &[1, 1]), Err(Error::RepeatedMode(1)));
        assert_eq!(v.apply(&SymplecticGate::identity(2), &[0, 1]).unwrap(), v);
    }

    #[test]
    fn apply_with_permuted_modes() {
        let s =
            GaussianState::squeezed_vacuum(0.3, SqueezeAxis::X).unwrap().tensor(&GaussianState::coherent(1.0, -0.5));
        let g = SymplecticGate::cz_pp().after(&SymplecticGate::beamsplitter_5050()).unwrap();
        let swapped = s.apply(&g, &[1, 0]).unwrap();
        // permutation P swapping the two modes: apply(g, [1, 0]) = P g P
        let mut p = DMatrix::zeros(4, 4);
        for (a, b) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            p[(a, b)] = 1.0;
        }
        let pg = SymplecticGate::new(&p * g.matrix() * &p, DVector::zeros(4), "p").unwrap();
        let direct = s.apply(&pg, &[0, 1]).unwrap();
        assert!(swapped.distance(&direct) < 1e-15);
    }

    #[test]
    fn uncertainty_margin_detects_violations() {
        assert!(GaussianState::vacuum(1).unwrap().uncertainty_margin().abs() < 1e-15);
        let bad = GaussianState::from_moments(DVector::zeros(2), DMatrix::identity(2, 2) * 0.1).unwrap();
        assert!(!bad.satisfies_uncertainty(1e-12));
        let blurred = GaussianState::blurred_eigenstate(1.0, SqueezeAxis::P).unwrap();
        assert!(!blurred.is_proper());
        assert!(blurred.satisfies_uncertainty(1e-12));
        assert!(blurred.purity().is_none());
    }

    #[test]
    fn rejects_malformed_moments() {
        assert!(GaussianState::from_moments(DVector::zeros(3), DMatrix::zeros(3, 3)).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianState::from_moments(DVector::zeros(2), asym).is_err());
    }
}

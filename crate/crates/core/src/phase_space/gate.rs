use nalgebra::{DMatrix, DVector};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

/// A Gaussian unitary as an affine phase-space map `q -> S q + d`.
///
/// The rows of `S` are the Heisenberg transforms `U† q U` written in the old
/// quadratures; the same matrix pushes mean vectors forward.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticGate {
    s: DMatrix<f64>,
    d: DVector<f64>,
    label: String,
}

/// Block-diagonal symplectic form for `n` modes in interleaved ordering.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

impl SymplecticGate {
    /// Builds a gate from an explicit matrix. The matrix must be square with even size.
    pub fn new(s: DMatrix<f64>, d: DVector<f64>, label: impl Into<String>) -> Result<Self> {
        if s.nrows() != s.ncols() || !s.nrows().is_multiple_of(2) || s.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "gate matrix must be square of even size, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if d.len() != s.nrows() {
            return Err(Error::Dimension(format!(
                "displacement has length {} for a {}-dimensional gate",
                d.len(),
                s.nrows()
            )));
        }
        if s.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gate entries"));
        }
        Ok(Self { s, d, label: label.into() })
    }

    fn linear(s: DMatrix<f64>, label: impl Into<String>) -> Self {
        let d = DVector::zeros(s.nrows());
        Self { s, d, label: label.into() }
    }

    fn single(entries: [f64; 4], label: impl Into<String>) -> Self {
        Self::linear(DMatrix::from_row_slice(2, 2, &entries), label)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::linear(DMatrix::identity(2 * n_modes, 2 * n_modes), "identity")
    }

    /// `C_Z = exp(2i x⊗x)`: `p1 -> p1 + x2`, `p2 -> p2 + x1`.
    pub fn cz() -> Self {
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 1.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            1.0, 0.0, 0.0, 1.0,
        ]);
        Self::linear(s, "cz")
    }

    /// `exp(2i p⊗p)`: `x1 -> x1 - p2`, `x2 -> x2 - p1`.
    pub fn cz_pp() -> Self {
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, -1.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, -1.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        Self::linear(s, "cz_pp")
    }

    /// Fourier transform: `x -> -p`, `p -> x`.
    pub fn fourier() -> Self {
        Self::single([0.0, -1.0, 1.0, 0.0], "fourier")
    }

    /// Quadratic phase `exp(iκx²)`: `p -> p + κx`.
    pub fn shear(kappa: f64) -> Self {
        Self::single([1.0, 0.0, kappa, 1.0], format!("shear({kappa})"))
    }

    /// `exp(iκp²)`: `x -> x - κp`.
    pub fn p_shear(kappa: f64) -> Self {
        Self::single([1.0, -kappa, 0.0, 1.0], format!("p_shear({kappa})"))
    }

    /// Single-mode squeezer `exp(ir(xp + px))`: `x -> e^{-r} x`, `p -> e^{r} p`.
    pub fn squeezer(r: f64) -> Self {
        Self::single([(-r).exp(), 0.0, 0.0, r.exp()], format!("squeezer({r})"))
    }

    /// Phase rotation `exp(iθ(x² + p²))`; θ = π/2 is the Fourier transform.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::single([c, -s, s, c], format!("rotation({theta})"))
    }

    /// Symmetric beam splitter, `q1 -> (q1 + q2)/√2`, `q2 -> (q1 - q2)/√2` for both quadratures.
    pub fn beamsplitter_5050() -> Self {
        let h = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            h, 0.0, h, 0.0,
            0.0, h, 0.0, h,
            h, 0.0, -h, 0.0,
            0.0, h, 0.0, -h,
        ]);
        Self::linear(s, "beamsplitter_5050")
    }

    /// Phase-space displacement `X(u) Z(v)` on one mode.
    pub fn displacement(u: f64, v: f64) -> Self {
        Self { s: DMatrix::identity(2, 2), d: DVector::from_vec(vec![u, v]), label: format!("displace({u},{v})") }
    }

    pub fn n_modes(&self) -> usize {
        self.s.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn displacement_vector(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &SymplecticGate) -> Result<SymplecticGate> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::ArityMismatch { expected: self.n_modes(), got: other.n_modes() });
        }
        Ok(SymplecticGate {
            s: &self.s * &other.s,
            d: &self.s * &other.d + &self.d,
            label: format!("{}*{}", self.label, other.label),
        })
    }

    /// Inverse via `S⁻¹ = -J Sᵀ J`, exact for symplectic matrices.
    pub fn inverse(&self) -> SymplecticGate {
        let j = symplectic_form(self.n_modes());
        let s_inv = -(&j * self.s.transpose() * &j);
        let d = -(&s_inv * &self.d);
        SymplecticGate { s: s_inv, d, label: format!("inv({})", self.label) }
    }

    /// Largest entry of `S J Sᵀ - J`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = symplectic_form(self.n_modes());
        (&self.s * &j * self.s.transpose() - j).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }
}

//! Exact checks of the byproduct-commutation identities.
//!
//! Clifford relations are checked on symplectic matrices. The cubic
//! feedforward relation involves only operators diagonal in `x`, so it reduces
//! to arithmetic on the exponent polynomials `f` of `e^{i f(x)}`.

use nalgebra::Matrix2;
use num_rational::Rational64;
use num_traits::Num;
use std::ops::{Add, Mul, Neg, Sub};

use crate::engine::step_matrix;
use crate::phase_space::SymplecticGate;
use crate::{Error, Result};

/// Displacement `(u', v')` with `G X(u) Z(v) = X(u') Z(v') G`, i.e. `(u', v') = S_G (u, v)`.
pub fn clifford_commute(gate: &SymplecticGate, u: f64, v: f64) -> Result<(f64, f64)> {
    if gate.n_modes() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: gate.n_modes() });
    }
    let s = gate.matrix();
    Ok((s[(0, 0)] * u + s[(0, 1)] * v, s[(1, 0)] * u + s[(1, 1)] * v))
}

/// Univariate polynomial `Σ c_k x^k`, the exponent of a diagonal operator `e^{i f(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPolynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Num + Clone> ExponentPolynomial<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c·x^k`.
    pub fn monomial(c: T, k: usize) -> Self {
        let mut coeffs = vec![T::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// `f(x + s)`: the exponent of `X(s)† e^{if(x)} X(s)`.
    pub fn shift(&self, s: T) -> Self {
        let lin = Self::new(vec![s, T::one()]);
        self.coeffs.iter().rev().fold(Self::new(Vec::new()), |acc, c| &(&acc * &lin) + &Self::constant(c.clone()))
    }
}

impl<T: Num + Clone> Add for &ExponentPolynomial<T> {
    type Output = ExponentPolynomial<T>;
    fn add(self, rhs: Self) -> ExponentPolynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ExponentPolynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Num + Clone> Sub for &ExponentPolynomial<T> {
    type Output = ExponentPolynomial<T>;
    fn sub(self, rhs: Self) -> ExponentPolynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ExponentPolynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Num + Clone> Mul for &ExponentPolynomial<T> {
    type Output = ExponentPolynomial<T>;
    fn mul(self, rhs: Self) -> ExponentPolynomial<T> {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return ExponentPolynomial::new(Vec::new());
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        ExponentPolynomial::new(out)
    }
}

/// Exponent of the adapted cubic gate `D₂'(κ, s₁) = e^{3iκs₁x(s₁ - x)} e^{iκx³}`.
pub fn adapted_cubic_exponent<T: Num + Clone + Neg<Output = T>>(kappa: T, s1: T) -> ExponentPolynomial<T> {
    let three = T::one() + T::one() + T::one();
    // 3κs₁·x·(s₁ - x) = 3κs₁²·x - 3κs₁·x²
    let c = three * kappa.clone() * s1.clone();
    let correction = ExponentPolynomial::new(vec![T::zero(), c.clone() * s1, -c]);
    &correction + &ExponentPolynomial::monomial(kappa, 3)
}

/// Residual exponent of `X(s₁)† D₂'(κ, s₁) X(s₁)` minus the target `κx³`.
///
/// `D₂'(κ,s₁) X(s₁) = X(s₁) D₂(κ)` holds up to a global phase exactly when the
/// residual is the constant `κ s₁³`.
pub fn verify_cubic_feedforward<T: Num + Clone + Neg<Output = T>>(kappa: T, s1: T) -> ExponentPolynomial<T> {
    let shifted = adapted_cubic_exponent(kappa.clone(), s1.clone()).shift(s1);
    &shifted - &ExponentPolynomial::monomial(kappa, 3)
}

/// Rational-arithmetic instance of [`verify_cubic_feedforward`].
pub fn verify_cubic_feedforward_exact(kappa: Rational64, s1: Rational64) -> ExponentPolynomial<Rational64> {
    verify_cubic_feedforward(kappa, s1)
}

fn squeeze_matrix(r: f64) -> Matrix2<f64> {
    Matrix2::new((-r).exp(), 0.0, 0.0, r.exp())
}

fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `‖S_pshear(κ) S_shear(κ) - S_rot(κ) S_sq(κ²/2)‖_F`.
pub fn bch_squeezer_residual(kappa: f64) -> f64 {
    let lhs = Matrix2::new(1.0, -kappa, 0.0, 1.0) * Matrix2::new(1.0, 0.0, kappa, 1.0);
    let rhs = rotation_matrix(kappa) * squeeze_matrix(kappa * kappa / 2.0);
    (lhs - rhs).norm()
}

/// Exact matrix of the four-step squeezer with `κ₁ = κ₂ = κ`, `κ₃ = κ₄ = -κ`:
/// `[[κ⁴ - κ² + 1, κ³], [κ³, κ² + 1]]`.
pub fn squeezer_protocol_matrix(kappa: f64) -> Matrix2<f64> {
    let plus = step_matrix(kappa);
    let minus = step_matrix(-kappa);
    minus * minus * plus * plus
}

/// `‖M - diag(1 - κ², 1 + κ²)‖_F`, the distance from the target squeezer `r = κ²`.
pub fn squeezer_deviation(kappa: f64) -> f64 {
    let k2 = kappa * kappa;
    (squeezer_protocol_matrix(kappa) - Matrix2::new(1.0 - k2, 0.0, 0.0, 1.0 + k2)).norm()
}

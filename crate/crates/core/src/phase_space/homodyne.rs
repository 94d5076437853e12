use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::state::GaussianState;
use crate::{Error, Result};

/// The observable `c_x·x + c_p·p` of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub mode: usize,
    pub c_x: f64,
    pub c_p: f64,
}

impl Quadrature {
    pub fn new(mode: usize, c_x: f64, c_p: f64) -> Result<Self> {
        if !(c_x.is_finite() && c_p.is_finite()) {
            return Err(Error::NonFinite("quadrature coefficients"));
        }
        if c_x == 0.0 && c_p == 0.0 {
            return Err(Error::ZeroQuadrature);
        }
        Ok(Self { mode, c_x, c_p })
    }

    pub fn x(mode: usize) -> Self {
        Self { mode, c_x: 1.0, c_p: 0.0 }
    }

    pub fn p(mode: usize) -> Self {
        Self { mode, c_x: 0.0, c_p: 1.0 }
    }

    /// Local-oscillator angle θ: the observable `p cos θ - x sin θ`.
    pub fn rotated(mode: usize, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { mode, c_x: -s, c_p: c }
    }

    fn norm_sq(&self) -> f64 {
        self.c_x * self.c_x + self.c_p * self.c_p
    }

    /// Coefficient row embedding the observable in a `2N`-dimensional phase space.
    pub fn row(&self, n_modes: usize) -> DVector<f64> {
        let mut c = DVector::zeros(2 * n_modes);
        c[2 * self.mode] = self.c_x;
        c[2 * self.mode + 1] = self.c_p;
        c
    }
}

/// Where a homodyne outcome comes from.
pub enum Readout<'a> {
    Sample(&'a mut ChaCha8Rng),
    Forced(f64),
}

const VARIANCE_TOL: f64 = 1e-12;
const FORCED_TOL: f64 = 1e-9;

/// Measures `quad` and returns the outcome with the conditional state of the
/// remaining modes.
///
/// Proper part: `μ' = μ + Σc (s - cᵀμ)/(cᵀΣc)`, `Σ' = Σ - Σc cᵀΣ/(cᵀΣc)`.
/// When the observable overlaps an unbounded direction (`b = cᵀFc > 0`), the
/// limit `λ → ∞` of the same rule applied to `Σ + λF` is taken exactly:
///
/// ```text
/// μ' = μ + Fc (s - cᵀμ)/b
/// Σ' = Σ - (Σc cᵀF + Fc cᵀΣ)/b + (cᵀΣc) Fc cᵀF / b²
/// F' = F - Fc cᵀF / b
/// ```
///
/// Sampled outcomes of such an observable use the flat part at unit weight;
/// they are representative readings only. The measured mode is removed.
pub fn homodyne(state: &GaussianState, quad: &Quadrature, readout: Readout<'_>) -> Result<(f64, GaussianState)> {
    let n = state.n_modes();
    if quad.mode >= n {
        return Err(Error::BadMode { mode: quad.mode, n_modes: n });
    }
    let c = quad.row(n);
    let (mu, cov, flat) = (state.mean(), state.cov(), state.flat());
    let g_cov = cov * &c;
    let g_flat = flat * &c;
    let a = c.dot(&g_cov);
    let b = c.dot(&g_flat);
    let mu_m = c.dot(mu);
    let scale = quad.norm_sq();

    let draw = |var: f64, readout: Readout<'_>| -> f64 {
        match readout {
            Readout::Forced(s) => s,
            Readout::Sample(rng) => {
                let z: f64 = StandardNormal.sample(rng);
                mu_m + var.max(0.0).sqrt() * z
            }
        }
    };

    let mut post = state.clone();
    let outcome;
    {
        let (mean, pcov, pflat) = post.parts_mut();
        if b > VARIANCE_TOL * scale {
            outcome = draw(a + b, readout);
            let step = (outcome - mu_m) / b;
            *mean += &g_flat * step;
            let cross = &g_cov * g_flat.transpose();
            let ff = &g_flat * g_flat.transpose();
            *pcov -= (&cross + cross.transpose()) / b;
            *pcov += &ff * (a / (b * b));
            *pflat -= ff / b;
        } else if a > VARIANCE_TOL * scale {
            outcome = draw(a, readout);
            *mean += &g_cov * ((outcome - mu_m) / a);
            *pcov -= &g_cov * g_cov.transpose() / a;
        } else {
            // pseudoinverse of a vanishing variance: no update
            outcome = match readout {
                Readout::Forced(s) if (s - mu_m).abs() > FORCED_TOL => {
                    return Err(Error::DegenerateMeasurement { expected: mu_m, forced: s });
                }
                Readout::Forced(s) => s,
                Readout::Sample(_) => mu_m,
            };
        }
        symmetrize(pcov);
        symmetrize(pflat);
    }
    Ok((outcome, remove_mode(&post, quad.mode)))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn remove_mode(state: &GaussianState, mode: usize) -> GaussianState {
    let keep: Vec<usize> = (0..state.n_modes()).filter(|&m| m != mode).collect();
    if keep.is_empty() {
        return GaussianState::empty();
    }
    state.marginal(&keep).expect("kept modes are valid")
}

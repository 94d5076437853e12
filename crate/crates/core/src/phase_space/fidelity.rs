use super::state::GaussianState;
use crate::{Error, Result};

/// `Tr[ρ σ]` for a pure Gaussian `pure` and arbitrary Gaussian `rho` of equal size:
/// `exp(-½ δᵀ(A+B)⁻¹δ) / √det(2(A+B))` in vacuum-variance-1/4 units.
pub fn overlap_fidelity(pure: &GaussianState, rho: &GaussianState) -> Result<f64> {
    if pure.n_modes() != rho.n_modes() {
        return Err(Error::Dimension(format!("overlap of {}-mode and {}-mode states", pure.n_modes(), rho.n_modes())));
    }
    let purity = pure.purity().ok_or(Error::Improper)?;
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure(purity));
    }
    if !rho.is_proper() {
        return Err(Error::Improper);
    }
    let sum = pure.cov() + rho.cov();
    let delta = pure.mean() - rho.mean();
    let inv = sum.clone().try_inverse().ok_or_else(|| Error::Dimension("singular covariance sum".into()))?;
    let quad = delta.dot(&(inv * &delta));
    let det = (sum * 2.0).determinant();
    Ok((-0.5 * quad).exp() / det.sqrt())
}

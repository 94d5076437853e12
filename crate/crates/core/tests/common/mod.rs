#![allow(dead_code)]

use cvmbqc::{GaussianState, SymplecticGate};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new(lo, hi).unwrap().sample(rng)
}

/// A thermal product state scrambled by a random gate sequence, with a random mean.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> GaussianState {
    let mean = DVector::from_fn(2 * n, |_, _| uniform(rng, -2.0, 2.0));
    let cov =
        DMatrix::from_fn(2 * n, 2 * n, |i, j| if i == j { 0.25 * (1.0 + 2.0 * uniform(rng, 0.0, 1.0)) } else { 0.0 });
    // thermal variances come in x/p pairs
    let mut cov = cov;
    for m in 0..n {
        cov[(2 * m + 1, 2 * m + 1)] = cov[(2 * m, 2 * m)];
    }
    let mut st = GaussianState::from_moments(mean, cov).unwrap();
    for _ in 0..3 * n {
        let a = (uniform(rng, 0.0, n as f64) as usize).min(n - 1);
        let b = (a + 1 + (uniform(rng, 0.0, (n - 1) as f64) as usize).min(n - 2)) % n;
        let gate = match (uniform(rng, 0.0, 5.0)) as usize {
            0 => SymplecticGate::rotation(uniform(rng, -3.0, 3.0)),
            1 => SymplecticGate::squeezer(uniform(rng, -1.0, 1.0)),
            2 => SymplecticGate::shear(uniform(rng, -1.5, 1.5)),
            3 => SymplecticGate::beamsplitter_5050(),
            _ => SymplecticGate::cz(),
        };
        let modes: &[usize] = if gate.n_modes() == 1 { &[a] } else { &[a, b] };
        st = st.apply(&gate, modes).unwrap();
    }
    st
}

fn drop_indices<T: nalgebra::Scalar + Copy>(rows: &[usize], mat: &DMatrix<T>) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| mat[(rows[i], rows[j])])
}

/// Conditions on `cos θ·p_m - sin θ·x_m = s` by rotating that observable onto
/// `p_m` and slicing the precision matrix, then marginalizing `x_m`.
pub fn oracle_condition(state: &GaussianState, mode: usize, theta: f64, s: f64) -> (DVector<f64>, DMatrix<f64>) {
    let rotated = state.apply(&SymplecticGate::rotation(-theta), &[mode]).unwrap();
    let n2 = 2 * state.n_modes();
    let k = 2 * mode + 1;
    let rest: Vec<usize> = (0..n2).filter(|&i| i != k).collect();
    let precision = rotated.cov().clone().try_inverse().expect("proper state");
    let p_rr = drop_indices(&rest, &precision);
    let cov_rr = p_rr.try_inverse().unwrap();
    let p_rk = DVector::from_fn(rest.len(), |i, _| precision[(rest[i], k)]);
    let mu_r = DVector::from_fn(rest.len(), |i, _| rotated.mean()[rest[i]]);
    let mean = mu_r - &cov_rr * p_rk * (s - rotated.mean()[k]);

    let keep: Vec<usize> = (0..rest.len()).filter(|&i| rest[i] != 2 * mode).collect();
    let mean = DVector::from_fn(keep.len(), |i, _| mean[keep[i]]);
    (mean, drop_indices(&keep, &cov_rr))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

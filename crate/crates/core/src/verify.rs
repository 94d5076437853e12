//! Self-check suite behind `cvmbqc verify`.

use nalgebra::Matrix2;
use num_rational::Rational64;
use num_traits::Zero;
use std::fmt::Write;

use crate::engine::{outcome_independence_check, steps_matrix, OutcomeSource, Resource, StepPlan};
use crate::feedforward::{bch_squeezer_residual, squeezer_deviation, verify_cubic_feedforward_exact};
use crate::phase_space::{GaussianState, SymplecticGate};
use crate::protocols::{build_protocol, build_report, ProtocolId, ProtocolParams};

/// Grid where the κ³ scaling is tested.
pub const SCALING_KAPPAS: [f64; 4] = [0.025, 0.05, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl SuiteRow {
    fn new(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, value, detail: detail.into() }
    }
}

/// Matrices the suite treats as ground truth. Tests swap in broken ones to make
/// sure the suite notices.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixtures {
    pub fourier: Matrix2<f64>,
}

impl Default for Fixtures {
    fn default() -> Self {
        Self { fourier: Matrix2::new(0.0, -1.0, 1.0, 0.0) }
    }
}

/// `f(κ)/κ³` for each κ and `f(2κ)/f(κ)` for consecutive doublings.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicScaling {
    pub normalized: Vec<f64>,
    pub doubling: Vec<f64>,
}

impl CubicScaling {
    pub fn measure(kappas: &[f64], mut f: impl FnMut(f64) -> f64) -> Self {
        let values: Vec<f64> = kappas.iter().map(|&k| f(k)).collect();
        let normalized = kappas.iter().zip(&values).map(|(k, v)| v / k.powi(3)).collect();
        let doubling = values.windows(2).map(|w| w[1] / w[0]).collect();
        Self { normalized, doubling }
    }

    /// `(max - min) / min` of the normalized values.
    pub fn spread(&self) -> f64 {
        let min = self.normalized.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (max - min) / min
    }

    pub fn passes(&self) -> bool {
        self.spread() <= 0.15 && self.doubling.iter().all(|r| (7.0..=9.0).contains(r))
    }

    fn describe(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
        format!("f/k^3 = [{}], doubling = [{}]", fmt(&self.normalized), fmt(&self.doubling))
    }
}

fn j2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

fn shear(k: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, k, 1.0)
}

fn gate_matrix(g: &SymplecticGate) -> Matrix2<f64> {
    let m = g.matrix();
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn symplectic_rows(fx: &Fixtures) -> Vec<SuiteRow> {
    let gates = [
        SymplecticGate::cz(),
        SymplecticGate::cz_pp(),
        SymplecticGate::fourier(),
        SymplecticGate::shear(0.7),
        SymplecticGate::p_shear(-1.3),
        SymplecticGate::squeezer(0.9),
        SymplecticGate::rotation(2.1),
        SymplecticGate::beamsplitter_5050(),
        SymplecticGate::displacement(0.4, -0.2),
        SymplecticGate::identity(3),
    ];
    let worst = gates.iter().map(SymplecticGate::symplectic_defect).fold(0.0, f64::max);
    let f = fx.fourier;
    let f_defect = (f * j2() * f.transpose() - j2()).amax();

    // F must be the quarter rotation and must conjugate the x-shear into the p-shear
    // that the measurement step relies on.
    let kappa = 0.6;
    let mut composition = (f - gate_matrix(&SymplecticGate::rotation(std::f64::consts::FRAC_PI_2))).amax();
    if let Some(f_inv) = f.try_inverse() {
        let conj = f * shear(kappa) * f_inv;
        composition = composition.max((conj - gate_matrix(&SymplecticGate::p_shear(kappa))).amax());
    } else {
        composition = f64::INFINITY;
    }
    let steps = [0.3, -0.8, 1.1];
    let by_fixture = steps.iter().fold(Matrix2::identity(), |acc, &k| f * shear(k) * acc);
    let plans: Vec<_> = steps.iter().map(|&k| StepPlan::new(k)).collect();
    composition = composition.max((by_fixture - steps_matrix(&plans)).amax());
    let f4 = (f * f * f * f - Matrix2::identity()).amax();

    vec![
        SuiteRow::new("gate_constructors_symplectic", worst <= 1e-12, worst, "max |SJS^T - J| over all constructors"),
        SuiteRow::new("fourier_symplectic", f_defect <= 1e-12, f_defect, "|FJF^T - J|"),
        SuiteRow::new(
            "fourier_composition",
            composition <= 1e-12,
            composition,
            "F = R(pi/2), F D F^-1 = p-shear, step products",
        ),
        SuiteRow::new("fourier_period_four", f4 <= 1e-12, f4, "|F^4 - I|"),
    ]
}

fn cubic_row() -> SuiteRow {
    let vals = [(-3, 2), (-1, 3), (0, 1), (2, 5), (7, 3)].map(|(n, d)| Rational64::new(n, d));
    let mut failures = 0usize;
    for &k in &vals {
        for &s in &vals {
            let r = verify_cubic_feedforward_exact(k, s);
            if (1..=3).any(|deg| !r.coeff(deg).is_zero()) || r.coeff(0) != k * s * s * s {
                failures += 1;
            }
        }
    }
    SuiteRow::new("cubic_feedforward_exact", failures == 0, failures as f64, "5x5 rational grid, residual = k s^3")
}

fn scaling_rows() -> Vec<SuiteRow> {
    let bch = CubicScaling::measure(&SCALING_KAPPAS, bch_squeezer_residual);
    let bch_at = bch_squeezer_residual(0.1);
    let sq = CubicScaling::measure(&SCALING_KAPPAS, squeezer_deviation);
    vec![
        SuiteRow::new("bch_k3_scaling", bch.passes() && bch_at <= 1e-2, bch.spread(), bch.describe()),
        SuiteRow::new("squeezer_k3_scaling", sq.passes(), sq.spread(), sq.describe()),
    ]
}

/// Canned protocols used by the independence and uncertainty checks.
pub fn canned_protocols() -> Vec<(ProtocolId, ProtocolParams)> {
    let base = ProtocolParams::default();
    vec![
        (ProtocolId::IdentityChain, base.clone()),
        (ProtocolId::SqueezerFourStep, base.clone()),
        (ProtocolId::RepeatedSqueezer, ProtocolParams { segments: 2, ..base.clone() }),
        (ProtocolId::OfflineTeleport, base.clone()),
        (ProtocolId::OfflineSqueezer, base.clone()),
        (ProtocolId::CustomChain, ProtocolParams { kappas: vec![0.4, -1.0, 0.0, 2.5], ..base }),
    ]
}

fn protocol_rows() -> Vec<SuiteRow> {
    let seeds: Vec<u64> = (0..20).collect();
    let input = GaussianState::coherent(0.7, -0.4);
    let mut worst_dev = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    let mut errors = Vec::new();
    for (id, params) in canned_protocols() {
        for resource in [Resource::ideal(), Resource::from_db(10.0)] {
            let params = ProtocolParams { resource, ..params.clone() };
            let outcome = build_protocol(id, &params).and_then(|p| {
                let dev = outcome_independence_check(|i, s| p.corrected(i, s), &input, &seeds)?;
                let report = build_report(p.as_ref(), &input, &OutcomeSource::Seeded(3))?;
                Ok((dev, report.check("uncertainty_relation").map_or(f64::NEG_INFINITY, |c| c.value)))
            });
            match outcome {
                Ok((dev, margin)) => {
                    worst_dev = worst_dev.max(dev);
                    worst_margin = worst_margin.min(margin);
                }
                Err(e) => errors.push(format!("{}: {e}", id.as_str())),
            }
        }
    }
    let detail = if errors.is_empty() { "20 seeds, ideal and 10 dB".to_string() } else { errors.join("; ") };
    vec![
        SuiteRow::new("outcome_independence", errors.is_empty() && worst_dev < 1e-9, worst_dev, detail.clone()),
        SuiteRow::new("intermediate_uncertainty", errors.is_empty() && worst_margin >= -1e-9, worst_margin, detail),
    ]
}

pub fn run_suite() -> Vec<SuiteRow> {
    run_suite_with(&Fixtures::default())
}

pub fn run_suite_with(fx: &Fixtures) -> Vec<SuiteRow> {
    let mut rows = symplectic_rows(fx);
    rows.push(cubic_row());
    rows.extend(scaling_rows());
    rows.extend(protocol_rows());
    rows
}

pub fn render_table(rows: &[SuiteRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status}  {:<width$}  {:>12.4e}  {}", r.name, r.value, r.detail);
    }
    let passed = rows.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} checks passed", rows.len());
    out
}

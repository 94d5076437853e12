//! Named experiments: cluster teleportation chains, the four-step cluster
//! squeezer, and off-line teleportation with an EPR resource.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::str::FromStr;

use crate::cluster::modified_resource_with;
use crate::engine::{
    channel_tomography, outcome_independence_check, run_protocol, steps_matrix, ByproductFrame, GaussianChannel,
    MeasurementRecord, OutcomeSource, OutcomeStream, ProtocolRun, Resource, StepPlan,
};
use crate::feedforward::squeezer_protocol_matrix;
use crate::phase_space::{homodyne, overlap_fidelity, GaussianState, Quadrature, SymplecticGate};
use crate::{Error, Result};

/// Seeds used for the per-report outcome-independence check.
pub const INDEPENDENCE_SEEDS: u64 = 10;
pub const INDEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, value: f64) -> Self {
        Self { name: name.into(), passed, value }
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value <= bound, value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub channel: GaussianChannel,
    pub target_s: Matrix2<f64>,
    /// `‖S - target_S‖_F`.
    pub deviation: f64,
    pub noise_trace: f64,
    pub fidelity: Option<f64>,
    /// Corrected output for the report's input.
    pub output: GaussianState,
    pub records: Vec<MeasurementRecord>,
    pub checks: Vec<Check>,
}

impl ProtocolReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A runnable experiment on a single-mode input.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &'static str;
    fn parameters(&self) -> BTreeMap<String, f64>;
    /// Uncorrected run; the returned frame is the byproduct to undo.
    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun>;
    /// Ideal symplectic matrix the protocol is compared against.
    fn target(&self) -> Matrix2<f64>;
    /// Symplectic matrix the output fidelity is measured against.
    fn ideal_gate(&self) -> Matrix2<f64> {
        self.target()
    }
    fn extra_checks(&self, _channel: &GaussianChannel) -> Vec<Check> {
        Vec::new()
    }

    fn corrected(&self, input: &GaussianState, source: &OutcomeSource) -> Result<GaussianState> {
        self.run(input, source)?.corrected()
    }
}

fn fourier_power(n: usize) -> Matrix2<f64> {
    let f = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    (0..n).fold(Matrix2::identity(), |acc, _| f * acc)
}

fn resource_params(resource: &Resource) -> BTreeMap<String, f64> {
    BTreeMap::from([("squeezing_r".to_string(), resource.r)])
}

/// `n - 1` plain p-detections through an `n`-mode chain (input included).
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityChain {
    pub n: usize,
    pub resource: Resource,
}

impl IdentityChain {
    pub fn new(n: usize, resource: Resource) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("identity chain needs n >= 2, got {n}")));
        }
        Ok(Self { n, resource })
    }

    pub fn expected_noise_trace(&self) -> f64 {
        (self.n - 1) as f64 * self.resource.node_noise()
    }
}

impl Protocol for IdentityChain {
    fn name(&self) -> &'static str {
        "identity_chain"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = resource_params(&self.resource);
        p.insert("n_nodes".into(), self.n as f64);
        p
    }

    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun> {
        run_protocol(input, &vec![StepPlan::new(0.0); self.n - 1], self.resource, source)
    }

    fn target(&self) -> Matrix2<f64> {
        fourier_power(self.n - 1)
    }

    fn extra_checks(&self, channel: &GaussianChannel) -> Vec<Check> {
        let err = (channel.noise_trace() - self.expected_noise_trace()).abs();
        vec![Check::at_most("noise_trace_per_step", err, 1e-9)]
    }
}

/// Steps `[κ, κ, -κ, -κ]` on a five-mode chain; approximately `e^{iκ²(xp+px)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezerFourStep {
    pub kappa: f64,
    pub resource: Resource,
}

fn squeezer_steps(kappa: f64, segments: usize) -> Vec<StepPlan> {
    [kappa, kappa, -kappa, -kappa].iter().cycle().take(4 * segments).map(|&k| StepPlan::new(k)).collect()
}

fn squeezer_target(kappa: f64) -> Matrix2<f64> {
    let k2 = kappa * kappa;
    Matrix2::new(1.0 - k2, 0.0, 0.0, 1.0 + k2)
}

impl Protocol for SqueezerFourStep {
    fn name(&self) -> &'static str {
        "squeezer_four_step"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = resource_params(&self.resource);
        p.insert("kappa".into(), self.kappa);
        p
    }

    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun> {
        run_protocol(input, &squeezer_steps(self.kappa, 1), self.resource, source)
    }

    fn target(&self) -> Matrix2<f64> {
        squeezer_target(self.kappa)
    }

    fn ideal_gate(&self) -> Matrix2<f64> {
        let k2 = self.kappa * self.kappa;
        Matrix2::new((-k2).exp(), 0.0, 0.0, k2.exp())
    }

    fn extra_checks(&self, channel: &GaussianChannel) -> Vec<Check> {
        let exact = (channel.s - squeezer_protocol_matrix(self.kappa)).amax();
        let dev = (channel.s - self.target()).norm();
        let k3 = self.kappa.abs().powi(3);
        vec![
            Check::at_most("matches_exact_matrix", exact, 1e-6),
            Check::new("deviation_within_2k3", dev <= 2.0 * k3 + 1e-9, dev),
        ]
    }
}

/// The four-step pattern repeated `segments` times.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedSqueezer {
    pub segments: usize,
    pub kappa: f64,
    pub resource: Resource,
}

impl RepeatedSqueezer {
    pub fn new(segments: usize, kappa: f64, resource: Resource) -> Result<Self> {
        if segments == 0 {
            return Err(Error::Config("repeated squeezer needs at least one segment".into()));
        }
        Ok(Self { segments, kappa, resource })
    }
}

impl Protocol for RepeatedSqueezer {
    fn name(&self) -> &'static str {
        "repeated_squeezer"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = resource_params(&self.resource);
        p.insert("kappa".into(), self.kappa);
        p.insert("segments".into(), self.segments as f64);
        p
    }

    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun> {
        run_protocol(input, &squeezer_steps(self.kappa, self.segments), self.resource, source)
    }

    fn target(&self) -> Matrix2<f64> {
        squeezer_protocol_matrix(self.kappa).pow(self.segments as u32)
    }

    fn extra_checks(&self, channel: &GaussianChannel) -> Vec<Check> {
        vec![Check::at_most("matches_segment_power", (channel.s - self.target()).amax(), 1e-6)]
    }
}

/// Arbitrary Clifford step list.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomChain {
    pub kappas: Vec<f64>,
    pub resource: Resource,
}

impl Protocol for CustomChain {
    fn name(&self) -> &'static str {
        "custom_chain"
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = resource_params(&self.resource);
        for (i, k) in self.kappas.iter().enumerate() {
            p.insert(format!("kappa_{i}"), *k);
        }
        p
    }

    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun> {
        let steps: Vec<_> = self.kappas.iter().map(|&k| StepPlan::new(k)).collect();
        run_protocol(input, &steps, self.resource, source)
    }

    fn target(&self) -> Matrix2<f64> {
        let steps: Vec<_> = self.kappas.iter().map(|&k| StepPlan::new(k)).collect();
        steps_matrix(&steps)
    }
}

/// How the off-line correction is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionScaling {
    /// Displace by `(e^{-r}u, e^{r}v)`, the byproduct pushed through the squeezer.
    Commuted,
    /// Displace by `(u, v)` as for plain teleportation.
    Unscaled,
}

/// Teleportation with an EPR resource whose second mode carries an off-line gate
/// `diag(e^{-r_gate}, e^{r_gate})`. `r_gate = 0` is plain teleportation.
///
/// The input and resource mode 1 meet on a symmetric beam splitter; `u = x_in - x_1`
/// is √2 times the x reading of the `-` port and `v = p_in + p_1` √2 times the p
/// reading of the `+` port. Resource mode 2 is then `U X(-u) Z(-v) ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineTeleport {
    pub resource: Resource,
    pub r_gate: f64,
    pub scaling: CorrectionScaling,
}

impl OfflineTeleport {
    pub fn teleport(resource: Resource) -> Self {
        Self { resource, r_gate: 0.0, scaling: CorrectionScaling::Commuted }
    }

    pub fn squeezer(resource: Resource, r_gate: f64) -> Self {
        Self { resource, r_gate, scaling: CorrectionScaling::Commuted }
    }

    pub fn with_scaling(mut self, scaling: CorrectionScaling) -> Self {
        self.scaling = scaling;
        self
    }

    /// Expected added noise `U (e^{-2r}/2 · I) Uᵀ`.
    pub fn expected_noise(&self) -> Matrix2<f64> {
        let e = 2.0 * self.resource.node_noise();
        Matrix2::new(e * (-2.0 * self.r_gate).exp(), 0.0, 0.0, e * (2.0 * self.r_gate).exp())
    }
}

impl Protocol for OfflineTeleport {
    fn name(&self) -> &'static str {
        if self.r_gate == 0.0 {
            "offline_teleport"
        } else {
            "offline_squeezer"
        }
    }

    fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = resource_params(&self.resource);
        p.insert("r_gate".into(), self.r_gate);
        p
    }

    fn run(&self, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolRun> {
        if input.n_modes() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: input.n_modes() });
        }
        let gate = SymplecticGate::squeezer(self.r_gate);
        let resource = modified_resource_with(self.resource.r, &gate, self.resource.model)?;
        let mut state = input.tensor(&resource);
        let mut intermediates = vec![state.clone()];
        state = state.apply(&SymplecticGate::beamsplitter_5050(), &[0, 1])?;
        intermediates.push(state.clone());

        let mut stream = OutcomeStream::new(source);
        let (xb, next) = homodyne(&state, &Quadrature::x(1), stream.next(SQRT_2)?)?;
        intermediates.push(next.clone());
        let (pa, out) = homodyne(&next, &Quadrature::p(0), stream.next(SQRT_2)?)?;
        intermediates.push(out.clone());
        let (u, v) = (SQRT_2 * xb, SQRT_2 * pa);

        let frame = match self.scaling {
            CorrectionScaling::Commuted => ByproductFrame { u: -(-self.r_gate).exp() * u, v: -self.r_gate.exp() * v },
            CorrectionScaling::Unscaled => ByproductFrame { u: -u, v: -v },
        };
        let records = vec![
            MeasurementRecord {
                step_index: 0,
                mode: 1,
                kappa: 0.0,
                theta: -FRAC_PI_2,
                raw_outcome: xb,
                rescaled_outcome: u,
            },
            MeasurementRecord { step_index: 1, mode: 0, kappa: 0.0, theta: 0.0, raw_outcome: pa, rescaled_outcome: v },
        ];
        Ok(ProtocolRun { output: out.into_proper()?, records, frame, intermediates })
    }

    fn target(&self) -> Matrix2<f64> {
        Matrix2::new((-self.r_gate).exp(), 0.0, 0.0, self.r_gate.exp())
    }

    fn extra_checks(&self, channel: &GaussianChannel) -> Vec<Check> {
        let err = (channel.n - self.expected_noise()).amax();
        vec![Check::at_most("teleportation_noise", err, 1e-9)]
    }
}

/// Runs `protocol` on `input`, reconstructs its corrected channel and evaluates
/// the standard checks.
pub fn build_report(protocol: &dyn Protocol, input: &GaussianState, source: &OutcomeSource) -> Result<ProtocolReport> {
    let seed = match source {
        OutcomeSource::Seeded(s) => *s,
        _ => 0,
    };
    let run = protocol.run(input, source)?;
    let output = run.corrected()?;
    let corrected = |i: &GaussianState, s: &OutcomeSource| protocol.corrected(i, s);
    let channel = channel_tomography(corrected, seed)?;
    let target_s = protocol.target();
    let deviation = (channel.s - target_s).norm();

    let ideal_s = protocol.ideal_gate();
    let fidelity = match input.purity() {
        Some(p) if (p - 1.0).abs() <= 1e-9 && (ideal_s.determinant() - 1.0).abs() <= 1e-9 => {
            let ideal = GaussianChannel { s: ideal_s, ..GaussianChannel::identity() };
            Some(overlap_fidelity(&ideal.apply(input)?, &output)?)
        }
        _ => None,
    };

    let seeds: Vec<u64> = (0..INDEPENDENCE_SEEDS).map(|i| seed.wrapping_add(i)).collect();
    let independence = outcome_independence_check(corrected, input, &seeds)?;
    let margin = run
        .intermediates
        .iter()
        .chain(std::iter::once(&output))
        .map(GaussianState::uncertainty_margin)
        .fold(f64::INFINITY, f64::min);

    let mut checks = vec![
        Check::at_most("outcome_independence", independence, INDEPENDENCE_TOL),
        Check::new("uncertainty_relation", margin >= -1e-9, margin),
        Check::new("noise_psd", channel.noise_min_eigenvalue() >= -1e-10, channel.noise_min_eigenvalue()),
    ];
    checks.extend(protocol.extra_checks(&channel));

    Ok(ProtocolReport {
        name: protocol.name().to_string(),
        parameters: protocol.parameters(),
        noise_trace: channel.noise_trace(),
        channel,
        target_s,
        deviation,
        fidelity,
        output,
        records: run.records,
        checks,
    })
}

pub fn identity_chain(
    n: usize,
    resource: Resource,
    input: &GaussianState,
    source: &OutcomeSource,
) -> Result<ProtocolReport> {
    build_report(&IdentityChain::new(n, resource)?, input, source)
}

pub fn squeezer_four_step(
    kappa: f64,
    resource: Resource,
    input: &GaussianState,
    source: &OutcomeSource,
) -> Result<ProtocolReport> {
    build_report(&SqueezerFourStep { kappa, resource }, input, source)
}

pub fn repeated_squeezer(
    segments: usize,
    kappa: f64,
    resource: Resource,
    input: &GaussianState,
    source: &OutcomeSource,
) -> Result<ProtocolReport> {
    build_report(&RepeatedSqueezer::new(segments, kappa, resource)?, input, source)
}

pub fn offline_teleport(input: &GaussianState, resource: Resource, source: &OutcomeSource) -> Result<ProtocolReport> {
    build_report(&OfflineTeleport::teleport(resource), input, source)
}

pub fn offline_squeezer(
    input: &GaussianState,
    resource: Resource,
    r_gate: f64,
    source: &OutcomeSource,
) -> Result<ProtocolReport> {
    build_report(&OfflineTeleport::squeezer(resource, r_gate), input, source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    IdentityChain,
    SqueezerFourStep,
    RepeatedSqueezer,
    OfflineTeleport,
    OfflineSqueezer,
    CustomChain,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 6] = [
        ProtocolId::IdentityChain,
        ProtocolId::SqueezerFourStep,
        ProtocolId::RepeatedSqueezer,
        ProtocolId::OfflineTeleport,
        ProtocolId::OfflineSqueezer,
        ProtocolId::CustomChain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::IdentityChain => "identity_chain",
            ProtocolId::SqueezerFourStep => "squeezer_four_step",
            ProtocolId::RepeatedSqueezer => "repeated_squeezer",
            ProtocolId::OfflineTeleport => "offline_teleport",
            ProtocolId::OfflineSqueezer => "offline_squeezer",
            ProtocolId::CustomChain => "custom_chain",
        }
    }
}

impl FromStr for ProtocolId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

/// Parameters shared by every protocol; each protocol reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub resource: Resource,
    pub kappa: f64,
    pub kappas: Vec<f64>,
    pub n_nodes: usize,
    pub segments: usize,
    pub r_gate: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self { resource: Resource::ideal(), kappa: 0.2, kappas: Vec::new(), n_nodes: 5, segments: 1, r_gate: 0.04 }
    }
}

pub fn build_protocol(id: ProtocolId, p: &ProtocolParams) -> Result<Box<dyn Protocol>> {
    Ok(match id {
        ProtocolId::IdentityChain => Box::new(IdentityChain::new(p.n_nodes, p.resource)?),
        ProtocolId::SqueezerFourStep => Box::new(SqueezerFourStep { kappa: p.kappa, resource: p.resource }),
        ProtocolId::RepeatedSqueezer => Box::new(RepeatedSqueezer::new(p.segments, p.kappa, p.resource)?),
        ProtocolId::OfflineTeleport => Box::new(OfflineTeleport::teleport(p.resource)),
        ProtocolId::OfflineSqueezer => Box::new(OfflineTeleport::squeezer(p.resource, p.r_gate)),
        ProtocolId::CustomChain => {
            if p.kappas.is_empty() {
                return Err(Error::Config("custom_chain needs a non-empty `kappas` list".into()));
            }
            Box::new(CustomChain { kappas: p.kappas.clone(), resource: p.resource })
        }
    })
}

/// Runs every grid point independently with the same seed; rows keep grid order.
pub fn sweep(id: ProtocolId, grid: &[ProtocolParams], input: &GaussianState, seed: u64) -> Result<Vec<ProtocolReport>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let point = |p: &ProtocolParams| -> Result<ProtocolReport> {
        let protocol = build_protocol(id, p)?;
        build_report(protocol.as_ref(), input, &OutcomeSource::Seeded(seed))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(point).collect()
    }
}

//! Step-by-step execution of measurement-based protocols on linear clusters.
//!
//! Each step couples the current head mode to the next cluster node, measures
//! `p + κx` on the head with a rotated local oscillator and leaves
//! `X(s) F D(κ)` on the next node, `D(κ) = e^{iκx²}`. The displacement
//! byproducts are accumulated in a [`ByproductFrame`] and removed once at the end.

use nalgebra::{DVector, Matrix2, Vector2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{attach_input, linear_cluster, ClusterSpec, NodeModel};
use crate::phase_space::{
    homodyne, GaussianState, Quadrature, Readout, SqueezeAxis, SymplecticGate, IDEAL_R, VACUUM_VARIANCE,
};
use crate::{db_to_r, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub kappa: f64,
}

impl StepPlan {
    pub fn new(kappa: f64) -> Self {
        Self { kappa }
    }
}

/// Pending `X(u) Z(v)` on the current output mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ByproductFrame {
    pub u: f64,
    pub v: f64,
}

impl ByproductFrame {
    /// Pushes the frame through `F D(κ)` and adds the new `X(s)`:
    /// `X(s) F D(κ) X(u) Z(v) = X(s - κu - v) Z(u) F D(κ)`.
    pub fn update(self, s: f64, kappa: f64) -> ByproductFrame {
        update_frame(self, s, kappa)
    }
}

pub fn update_frame(frame: ByproductFrame, s: f64, kappa: f64) -> ByproductFrame {
    ByproductFrame { u: s - kappa * frame.u - frame.v, v: frame.u }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step_index: usize,
    pub mode: usize,
    pub kappa: f64,
    pub theta: f64,
    pub raw_outcome: f64,
    pub rescaled_outcome: f64,
}

/// Local-oscillator angle and rescaling for measuring `p + κx`:
/// `θ = atan(-κ)`, `(p cos θ - x sin θ)/cos θ = p + κx`.
pub fn measurement_basis(kappa: f64) -> (f64, f64) {
    let theta = (-kappa).atan();
    (theta, 1.0 / theta.cos())
}

/// Affine Gaussian channel `μ -> Sμ + d`, `Σ -> SΣSᵀ + N` on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChannel {
    pub s: Matrix2<f64>,
    pub n: Matrix2<f64>,
    pub d: Vector2<f64>,
}

impl GaussianChannel {
    pub fn identity() -> Self {
        Self { s: Matrix2::identity(), n: Matrix2::zeros(), d: Vector2::zeros() }
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.n_modes() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: state.n_modes() });
        }
        let mu = Vector2::new(state.mean()[0], state.mean()[1]);
        let cov = Matrix2::from_fn(|i, j| state.cov()[(i, j)]);
        let mu = self.s * mu + self.d;
        let cov = self.s * cov * self.s.transpose() + self.n;
        GaussianState::from_moments(
            DVector::from_column_slice(mu.as_slice()),
            nalgebra::DMatrix::from_fn(2, 2, |i, j| 0.5 * (cov[(i, j)] + cov[(j, i)])),
        )
    }

    pub fn noise_trace(&self) -> f64 {
        self.n.trace()
    }

    /// Smallest eigenvalue of the added-noise matrix.
    pub fn noise_min_eigenvalue(&self) -> f64 {
        let sym = (self.n + self.n.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

/// Where the measurement outcomes of a protocol run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeSource {
    /// Sampled from the Born distribution with a ChaCha8 stream seeded by this value.
    Seeded(u64),
    /// Every (rescaled) outcome forced to the same value.
    Constant(f64),
    /// Rescaled outcomes forced in measurement order.
    Sequence(Vec<f64>),
}

/// Hands out one [`Readout`] per measurement.
pub struct OutcomeStream {
    source: OutcomeSource,
    rng: Option<ChaCha8Rng>,
    index: usize,
}

impl OutcomeStream {
    pub fn new(source: &OutcomeSource) -> Self {
        let rng = match source {
            OutcomeSource::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Self { source: source.clone(), rng, index: 0 }
    }

    /// Next readout; forced values are divided by `rescale` so that the
    /// rescaled outcome equals the requested value.
    pub fn next(&mut self, rescale: f64) -> Result<Readout<'_>> {
        let i = self.index;
        self.index += 1;
        match &self.source {
            OutcomeSource::Seeded(_) => Ok(Readout::Sample(self.rng.as_mut().expect("seeded stream"))),
            OutcomeSource::Constant(s) => Ok(Readout::Forced(s / rescale)),
            OutcomeSource::Sequence(v) => {
                v.get(i).map(|s| Readout::Forced(s / rescale)).ok_or(Error::MissingOutcome(i))
            }
        }
    }
}

/// Squeezing and node model of the resource states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resource {
    pub r: f64,
    pub model: NodeModel,
}

impl Resource {
    pub fn new(r: f64) -> Self {
        Self { r, model: NodeModel::ShiftNoise }
    }

    pub fn from_db(db: f64) -> Self {
        Self::new(db_to_r(db))
    }

    pub fn ideal() -> Self {
        Self::new(IDEAL_R)
    }

    pub fn with_model(mut self, model: NodeModel) -> Self {
        self.model = model;
        self
    }

    /// Per-quadrature noise `e^{-2r}/4` carried by one resource node.
    pub fn node_noise(&self) -> f64 {
        (-2.0 * self.r).exp() * VACUUM_VARIANCE
    }
}

/// Result of a protocol run. `output` is uncorrected; `frame` is the byproduct it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub output: GaussianState,
    pub records: Vec<MeasurementRecord>,
    pub frame: ByproductFrame,
    /// Every state of the register from the coupled resource to the output.
    pub intermediates: Vec<GaussianState>,
}

impl ProtocolRun {
    pub fn corrected(&self) -> Result<GaussianState> {
        apply_correction(&self.output, &self.frame)
    }
}

/// The ideal symplectic matrix of one step, `S_F · S_shear(κ) = [[-κ, -1], [1, 0]]`.
pub fn step_matrix(kappa: f64) -> Matrix2<f64> {
    Matrix2::new(-kappa, -1.0, 1.0, 0.0)
}

/// Ideal matrix of a step list, later steps to the left.
pub fn steps_matrix(steps: &[StepPlan]) -> Matrix2<f64> {
    steps.iter().fold(Matrix2::identity(), |acc, st| step_matrix(st.kappa) * acc)
}

/// Teleports `input` through a linear cluster of `steps.len()` nodes, measuring
/// `p + κ_j x` on successive modes.
pub fn run_protocol(
    input: &GaussianState,
    steps: &[StepPlan],
    resource: Resource,
    source: &OutcomeSource,
) -> Result<ProtocolRun> {
    if steps.is_empty() {
        return Err(Error::EmptyProtocol);
    }
    if steps.iter().any(|s| !s.kappa.is_finite()) {
        return Err(Error::NonFinite("step kappa"));
    }
    let spec = ClusterSpec::new(steps.len(), resource.r).with_model(resource.model);
    let mut state = attach_input(input, &linear_cluster(&spec)?)?;
    let mut intermediates = vec![state.clone()];
    let mut stream = OutcomeStream::new(source);
    let mut frame = ByproductFrame::default();
    let mut records = Vec::with_capacity(steps.len());
    for (j, step) in steps.iter().enumerate() {
        let (theta, rescale) = measurement_basis(step.kappa);
        let (raw, next) = homodyne(&state, &Quadrature::rotated(0, theta), stream.next(rescale)?)?;
        let s = raw * rescale;
        frame = frame.update(s, step.kappa);
        records.push(MeasurementRecord {
            step_index: j,
            mode: j,
            kappa: step.kappa,
            theta,
            raw_outcome: raw,
            rescaled_outcome: s,
        });
        state = next;
        intermediates.push(state.clone());
    }
    Ok(ProtocolRun { output: state.into_proper()?, records, frame, intermediates })
}

/// Undoes the byproduct with `X(-u) Z(-v)`.
pub fn apply_correction(state: &GaussianState, frame: &ByproductFrame) -> Result<GaussianState> {
    state.displace(0, -frame.u, -frame.v)
}

/// Dual elementary step: `|x=0⟩`-type node coupled by `exp(2i p⊗p)`, a
/// p-detection of the input mode behind a Fourier rotation (a reading `t` of
/// `x - p_node`), leaving `Z(-t) F ψ` with the node's noise in `x` only.
pub fn dual_step(input: &GaussianState, resource: Resource, source: &OutcomeSource) -> Result<ProtocolRun> {
    if input.n_modes() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: input.n_modes() });
    }
    let node = resource.model.node(resource.r, SqueezeAxis::X)?;
    let coupled = input.tensor(&node).apply(&SymplecticGate::cz_pp(), &[0, 1])?;
    let rotated = coupled.apply(&SymplecticGate::fourier(), &[0])?;
    let mut stream = OutcomeStream::new(source);
    let (t, out) = homodyne(&rotated, &Quadrature::p(0), stream.next(1.0)?)?;
    let record =
        MeasurementRecord { step_index: 0, mode: 0, kappa: 0.0, theta: 0.0, raw_outcome: t, rescaled_outcome: t };
    Ok(ProtocolRun {
        output: out.clone().into_proper()?,
        records: vec![record],
        frame: ByproductFrame { u: 0.0, v: -t },
        intermediates: vec![coupled, rotated, out],
    })
}

const DETERMINISM_TOL: f64 = 1e-6;

/// Reconstructs `(S, N, d)` of a corrected, outcome-independent protocol from
/// three mean probes: vacuum, `|α=1⟩` and `|α=i⟩`.
pub fn channel_tomography<F>(protocol: F, seed: u64) -> Result<GaussianChannel>
where
    F: Fn(&GaussianState, &OutcomeSource) -> Result<GaussianState>,
{
    let vacuum = GaussianState::vacuum(1)?;
    let src = OutcomeSource::Seeded(seed);
    let out_vac = protocol(&vacuum, &src)?;
    let check = protocol(&vacuum, &OutcomeSource::Seeded(seed.wrapping_add(1)))?;
    let dev = out_vac.distance(&check);
    if dev > DETERMINISM_TOL {
        return Err(Error::NonDeterministicChannel(dev));
    }
    let out_x = protocol(&GaussianState::coherent(1.0, 0.0), &src)?;
    let out_p = protocol(&GaussianState::coherent(0.0, 1.0), &src)?;
    for out in [&out_vac, &out_x, &out_p] {
        if out.n_modes() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: out.n_modes() });
        }
    }
    let mean = |s: &GaussianState| Vector2::new(s.mean()[0], s.mean()[1]);
    let d = mean(&out_vac);
    let s = Matrix2::from_columns(&[mean(&out_x) - d, mean(&out_p) - d]);
    let cov = Matrix2::from_fn(|i, j| out_vac.cov()[(i, j)]);
    let n = cov - s * s.transpose() * VACUUM_VARIANCE;
    Ok(GaussianChannel { s, n: (n + n.transpose()) * 0.5, d })
}

/// Largest moment difference of the corrected output across `seeds`.
pub fn outcome_independence_check<F>(protocol: F, input: &GaussianState, seeds: &[u64]) -> Result<f64>
where
    F: Fn(&GaussianState, &OutcomeSource) -> Result<GaussianState>,
{
    let mut reference: Option<GaussianState> = None;
    let mut worst = 0.0f64;
    for &seed in seeds {
        let out = protocol(input, &OutcomeSource::Seeded(seed))?;
        match &reference {
            None => reference = Some(out),
            Some(r) => worst = worst.max(r.distance(&out)),
        }
    }
    Ok(worst)
}

//! Resource states: linear cluster chains, input attachment and the two-mode
//! resources used for off-line teleportation.

use serde::{Deserialize, Serialize};

use crate::phase_space::{GaussianState, SqueezeAxis, SymplecticGate};
use crate::{Error, Result};

/// How a finitely squeezed resource mode is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeModel {
    /// Pure squeezed vacuum with anti-squeezed conjugate quadrature.
    PureSqueezed,
    /// Quadrature eigenstate with Gaussian shift noise `e^{-2r}/4` in the squeezed
    /// quadrature and an unbounded conjugate quadrature. Teleportation through such
    /// nodes adds exactly that noise and nothing else.
    #[default]
    ShiftNoise,
}

impl NodeModel {
    pub fn node(self, r: f64, axis: SqueezeAxis) -> Result<GaussianState> {
        match self {
            NodeModel::PureSqueezed => GaussianState::squeezed_vacuum(r, axis),
            NodeModel::ShiftNoise => GaussianState::blurred_eigenstate(r, axis),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    pub n_nodes: usize,
    pub squeezing_r: f64,
    pub model: NodeModel,
}

impl ClusterSpec {
    /// A chain of pure p-squeezed vacua.
    pub fn new(n_nodes: usize, squeezing_r: f64) -> Self {
        Self { n_nodes, squeezing_r, model: NodeModel::PureSqueezed }
    }

    pub fn with_model(mut self, model: NodeModel) -> Self {
        self.model = model;
        self
    }
}

/// `n` p-squeezed nodes coupled by `C_Z` between neighbours, applied left to right.
pub fn linear_cluster(spec: &ClusterSpec) -> Result<GaussianState> {
    if spec.n_nodes == 0 {
        return Err(Error::NoModes);
    }
    let node = spec.model.node(spec.squeezing_r, SqueezeAxis::P)?;
    let mut state = node.clone();
    for _ in 1..spec.n_nodes {
        state = state.tensor(&node);
    }
    let cz = SymplecticGate::cz();
    for j in 1..spec.n_nodes {
        state = state.apply(&cz, &[j - 1, j])?;
    }
    Ok(state)
}

/// Couples a single-mode input to the head of `cluster` with `C_Z`; the input becomes mode 0.
pub fn attach_input(input: &GaussianState, cluster: &GaussianState) -> Result<GaussianState> {
    if input.n_modes() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: input.n_modes() });
    }
    if cluster.n_modes() == 0 {
        return Err(Error::NoModes);
    }
    input.tensor(cluster).apply(&SymplecticGate::cz(), &[0, 1])
}

/// Two-mode squeezed state from a symmetric beam splitter on `|p=0⟩`-like and
/// `|x=0⟩`-like inputs: `Var(x1 - x2) = Var(p1 + p2) = e^{-2r}/2`.
pub fn epr_resource(r: f64) -> Result<GaussianState> {
    epr_resource_with(r, NodeModel::PureSqueezed)
}

pub fn epr_resource_with(r: f64, model: NodeModel) -> Result<GaussianState> {
    let pair = model.node(r, SqueezeAxis::P)?.tensor(&model.node(r, SqueezeAxis::X)?);
    pair.apply(&SymplecticGate::beamsplitter_5050(), &[0, 1])
}

/// EPR resource with `u_gate` applied off-line to mode 2 (index 1).
pub fn modified_resource(r: f64, u_gate: &SymplecticGate) -> Result<GaussianState> {
    modified_resource_with(r, u_gate, NodeModel::PureSqueezed)
}

pub fn modified_resource_with(r: f64, u_gate: &SymplecticGate, model: NodeModel) -> Result<GaussianState> {
    if u_gate.n_modes() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: u_gate.n_modes() });
    }
    epr_resource_with(r, model)?.apply(u_gate, &[1])
}

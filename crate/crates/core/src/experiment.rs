//! Experiment configs, result documents and sweep tables.
//!
//! Configs and results are JSON tagged with `schema_version`. Every float in a
//! result document is rounded to 12 significant digits, so documents diff
//! cleanly and parse back to the same value. Outcomes are drawn from ChaCha8
//! streams (`rand_chacha`) seeded with `seed_from_u64`; trial `i` uses `seed + i`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cluster::NodeModel;
use crate::engine::{GaussianChannel, MeasurementRecord, OutcomeSource, Resource};
use crate::phase_space::{db_to_r, GaussianState, SqueezeAxis};
use crate::protocols::{build_protocol, build_report, sweep, Check, ProtocolId, ProtocolParams, ProtocolReport};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: [&str; 18] = [
    "index",
    "param",
    "value",
    "protocol",
    "deviation",
    "noise_trace",
    "fidelity",
    "S11",
    "S12",
    "S21",
    "S22",
    "N11",
    "N12",
    "N22",
    "d1",
    "d2",
    "independence",
    "passed",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    #[default]
    Vacuum,
    Coherent {
        re: f64,
        im: f64,
    },
    Squeezed {
        r: f64,
        axis: SqueezeAxis,
    },
}

impl InputSpec {
    pub fn state(&self) -> Result<GaussianState> {
        match *self {
            InputSpec::Vacuum => GaussianState::vacuum(1),
            InputSpec::Coherent { re, im } => Ok(GaussianState::coherent(re, im)),
            InputSpec::Squeezed { r, axis } => GaussianState::squeezed_vacuum(r, axis),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SqueezingDb,
    Kappa,
    NNodes,
    Segments,
    RGate,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::SqueezingDb => "squeezing_db",
            SweepParam::Kappa => "kappa",
            SweepParam::NNodes => "n_nodes",
            SweepParam::Segments => "segments",
            SweepParam::RGate => "r_gate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

fn default_kappa() -> f64 {
    0.2
}
fn default_n_nodes() -> usize {
    5
}
fn default_r_gate() -> f64 {
    0.04
}
fn one() -> usize {
    1
}

/// One experiment. `squeezing_db` absent means the ideal-squeezing limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub protocol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing_db: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "one")]
    pub segments: usize,
    #[serde(default = "default_r_gate")]
    pub r_gate: f64,
    #[serde(default)]
    pub node_model: NodeModel,
    #[serde(default)]
    pub input: InputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

fn finite(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(field_error(field, "must be finite"))
    }
}

fn check_db(field: &str, db: f64) -> Result<f64> {
    if finite(field, db)? < 0.0 {
        return Err(field_error(field, format!("must be >= 0, got {db}")));
    }
    Ok(db)
}

fn count(field: &str, x: f64, min: usize) -> Result<usize> {
    if !x.is_finite() || x.fract() != 0.0 || x < min as f64 {
        return Err(field_error(field, format!("must be an integer >= {min}, got {x}")));
    }
    Ok(x as usize)
}

impl ExperimentConfig {
    /// Parses and validates; diagnostics name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        self.protocol_id()?;
        if let Some(db) = self.squeezing_db {
            check_db("squeezing_db", db)?;
        }
        finite("kappa", self.kappa)?;
        finite("r_gate", self.r_gate)?;
        if self.kappas.iter().any(|k| !k.is_finite()) {
            return Err(field_error("kappas", "must be finite"));
        }
        if self.trials == 0 {
            return Err(field_error("trials", "must be >= 1"));
        }
        match self.input {
            InputSpec::Coherent { re, im } => {
                finite("input.re", re)?;
                finite("input.im", im)?;
            }
            InputSpec::Squeezed { r, .. } => {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(field_error("input.r", format!("must be finite and >= 0, got {r}")));
                }
            }
            InputSpec::Vacuum => {}
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(field_error("sweep.values", "must not be empty"));
            }
            for &v in &sw.values {
                self.with_sweep_value(sw.param, v)?;
            }
        }
        self.params()?;
        Ok(())
    }

    pub fn protocol_id(&self) -> Result<ProtocolId> {
        self.protocol.parse().map_err(|e: Error| field_error("protocol", e))
    }

    /// The single place where dB becomes a squeezing parameter.
    pub fn resource(&self) -> Resource {
        match self.squeezing_db {
            Some(db) => Resource::new(db_to_r(db)),
            None => Resource::ideal(),
        }
        .with_model(self.node_model)
    }

    pub fn params(&self) -> Result<ProtocolParams> {
        let id = self.protocol_id()?;
        let params = ProtocolParams {
            resource: self.resource(),
            kappa: self.kappa,
            kappas: self.kappas.clone(),
            n_nodes: self.n_nodes,
            segments: self.segments,
            r_gate: self.r_gate,
        };
        build_protocol(id, &params).map_err(|e| field_error(id.as_str(), e))?;
        Ok(params)
    }

    fn with_sweep_value(&self, param: SweepParam, v: f64) -> Result<Self> {
        let field = "sweep.values";
        let mut cfg = self.clone();
        match param {
            SweepParam::SqueezingDb => cfg.squeezing_db = Some(check_db(field, v)?),
            SweepParam::Kappa => cfg.kappa = finite(field, v)?,
            SweepParam::NNodes => cfg.n_nodes = count(field, v, 2)?,
            SweepParam::Segments => cfg.segments = count(field, v, 1)?,
            SweepParam::RGate => cfg.r_gate = finite(field, v)?,
        }
        cfg.sweep = None;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    /// Row-major.
    #[serde(rename = "S")]
    pub s: [f64; 4],
    /// `[N11, N12, N22]`.
    #[serde(rename = "N")]
    pub n: [f64; 3],
    pub d: [f64; 2],
}

impl From<&GaussianChannel> for ChannelDoc {
    fn from(c: &GaussianChannel) -> Self {
        Self {
            s: [c.s[(0, 0)], c.s[(0, 1)], c.s[(1, 0)], c.s[(1, 1)]].map(round12),
            n: [c.n[(0, 0)], c.n[(0, 1)], c.n[(1, 1)]].map(round12),
            d: [c.d[0], c.d[1]].map(round12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDoc {
    pub mean: [f64; 2],
    /// `[Var x, Cov(x,p), Var p]`.
    pub cov: [f64; 3],
}

impl From<&GaussianState> for OutputDoc {
    fn from(s: &GaussianState) -> Self {
        let (m, c) = (s.mean(), s.cov());
        Self { mean: [m[0], m[1]].map(round12), cov: [c[(0, 0)], c[(0, 1)], c[(1, 1)]].map(round12) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDoc {
    pub seed: u64,
    pub output: OutputDoc,
    /// Largest moment difference from trial 0.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminismDoc {
    pub trials: usize,
    pub max_deviation: f64,
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub protocol: String,
    pub parameters: BTreeMap<String, f64>,
    pub channel: ChannelDoc,
    pub target_s: [f64; 4],
    pub deviation: f64,
    pub noise_trace: f64,
    pub fidelity: Option<f64>,
    pub output: OutputDoc,
    pub checks: Vec<Check>,
    pub records: Vec<MeasurementRecord>,
    pub trials: Vec<TrialDoc>,
    pub determinism: DeterminismDoc,
}

const TRIAL_TOL: f64 = 1e-9;

fn round_check(c: &Check) -> Check {
    Check { value: round12(c.value), ..c.clone() }
}

fn round_record(r: &MeasurementRecord) -> MeasurementRecord {
    MeasurementRecord {
        theta: round12(r.theta),
        raw_outcome: round12(r.raw_outcome),
        rescaled_outcome: round12(r.rescaled_outcome),
        kappa: round12(r.kappa),
        ..r.clone()
    }
}

impl ResultDocument {
    pub fn from_report(config: &ExperimentConfig, report: &ProtocolReport, trials: Vec<TrialDoc>) -> Self {
        let t = &report.target_s;
        let max_deviation = trials.iter().map(|t| t.deviation).fold(0.0, f64::max);
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            protocol: report.name.clone(),
            parameters: report.parameters.iter().map(|(k, v)| (k.clone(), round12(*v))).collect(),
            channel: (&report.channel).into(),
            target_s: [t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]].map(round12),
            deviation: round12(report.deviation),
            noise_trace: round12(report.noise_trace),
            fidelity: report.fidelity.map(round12),
            output: (&report.output).into(),
            checks: report.checks.iter().map(round_check).collect(),
            records: report.records.iter().map(round_record).collect(),
            determinism: DeterminismDoc {
                trials: trials.len(),
                max_deviation: round12(max_deviation),
                identical: max_deviation <= TRIAL_TOL,
            },
            trials,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Runs `config` once for the report and `trials` times for the determinism table.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultDocument> {
    config.validate()?;
    let protocol = build_protocol(config.protocol_id()?, &config.params()?)?;
    let input = config.input.state()?;
    let report = build_report(protocol.as_ref(), &input, &OutcomeSource::Seeded(config.seed))?;

    let outputs = (0..config.trials as u64)
        .map(|i| {
            let seed = config.seed.wrapping_add(i);
            protocol.corrected(&input, &OutcomeSource::Seeded(seed)).map(|out| (seed, out))
        })
        .collect::<Result<Vec<_>>>()?;
    let trials = outputs
        .iter()
        .map(|(seed, out)| TrialDoc {
            seed: *seed,
            output: out.into(),
            deviation: round12(out.distance(&outputs[0].1)),
        })
        .collect();
    Ok(ResultDocument::from_report(config, &report, trials))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub report: ProtocolReport,
}

/// Runs every value of `config.sweep`; rows are in the order the values were given.
pub fn run_sweep(config: &ExperimentConfig) -> Result<(SweepParam, Vec<SweepRow>)> {
    config.validate()?;
    let spec = config.sweep.as_ref().ok_or_else(|| field_error("sweep", "required for a sweep"))?;
    let grid =
        spec.values.iter().map(|&v| config.with_sweep_value(spec.param, v)?.params()).collect::<Result<Vec<_>>>()?;
    let reports = sweep(config.protocol_id()?, &grid, &config.input.state()?, config.seed)?;
    let rows = reports
        .into_iter()
        .zip(&spec.values)
        .enumerate()
        .map(|(index, (report, &value))| SweepRow { index, value, report })
        .collect();
    Ok((spec.param, rows))
}

fn cell(x: f64) -> String {
    let x = round12(x);
    if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for row in rows {
        let r = &row.report;
        let (s, n, d) = (&r.channel.s, &r.channel.n, &r.channel.d);
        let independence = r.check("outcome_independence").map_or(f64::NAN, |c| c.value);
        let fields = [
            row.index.to_string(),
            param.as_str().to_string(),
            cell(row.value),
            r.name.clone(),
            cell(r.deviation),
            cell(r.noise_trace),
            r.fidelity.map(cell).unwrap_or_default(),
            cell(s[(0, 0)]),
            cell(s[(0, 1)]),
            cell(s[(1, 0)]),
            cell(s[(1, 1)]),
            cell(n[(0, 0)]),
            cell(n[(0, 1)]),
            cell(n[(1, 1)]),
            cell(d[0]),
            cell(d[1]),
            cell(independence),
            r.all_passed().to_string(),
        ];
        w.write_record(&fields).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(protocol: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(r#"{{"schema_version": 1, "protocol": "{protocol}"}}"#)).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = base("squeezer_four_step");
        assert_eq!(cfg.kappa, 0.2);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.input, InputSpec::Vacuum);
        assert_eq!(cfg.resource(), Resource::ideal());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let cases = [
            (r#"{"schema_version": 1, "protocol": "warp"}"#, "protocol"),
            (r#"{"schema_version": 2, "protocol": "offline_teleport"}"#, "schema_version"),
            (r#"{"schema_version": 1, "protocol": "offline_teleport", "squeezing_db": -1}"#, "squeezing_db"),
            (r#"{"schema_version": 1, "protocol": "offline_teleport", "trials": 0}"#, "trials"),
            (
                r#"{"schema_version": 1, "protocol": "offline_teleport", "sweep": {"param": "kappa", "values": []}}"#,
                "sweep.values",
            ),
            (
                r#"{"schema_version": 1, "protocol": "identity_chain", "sweep": {"param": "n_nodes", "values": [2.5]}}"#,
                "sweep.values",
            ),
            (
                r#"{"schema_version": 1, "protocol": "offline_teleport", "sweep": {"param": "depth", "values": [1]}}"#,
                "depth",
            ),
            (r#"{"schema_version": 1, "protocol": "offline_teleport", "kapa": 0.1}"#, "kapa"),
            (r#"{"schema_version": 1}"#, "protocol"),
            (r#"{"schema_version": 1, "protocol": "identity_chain", "n_nodes": 1}"#, "identity_chain"),
            (r#"{"schema_version": 1, "protocol": "custom_chain"}"#, "custom_chain"),
        ];
        for (text, field) in cases {
            let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
            assert!(err.contains(field), "{text}: {err}");
        }
    }

    #[test]
    fn config_round_trips() {
        let text = r#"{"schema_version": 1, "protocol": "offline_squeezer", "squeezing_db": 10,
            "input": {"kind": "squeezed", "r": 0.3, "axis": "squeeze-x"}, "seed": 9,
            "sweep": {"param": "r_gate", "values": [0.0, 0.1]}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(-2.5e-17), -2.5e-17);
        assert_eq!(round12(0.0), 0.0);
        let x = round12(std::f64::consts::PI);
        assert_eq!(round12(x), x);
    }

    #[test]
    fn csv_cells() {
        assert_eq!(cell(0.5), "0.5");
        assert_eq!(cell(3.14018491737e-16), "3.14018491737e-16");
        assert_eq!(cell(0.0), "0");
        assert_eq!(cell(-2.0e-5).parse::<f64>().unwrap(), -2.0e-5);
    }

    #[test]
    fn squeezer_document() {
        let mut cfg = base("squeezer_four_step");
        cfg.squeezing_db = Some(50.0);
        cfg.seed = 7;
        let doc = run_experiment(&cfg).unwrap();
        let expected = [0.9616, 0.008, 0.008, 1.04];
        for (got, want) in doc.channel.s.iter().zip(expected) {
            assert!((got - want).abs() < 1e-6);
        }
        assert_eq!(doc.records.len(), 4);
        assert!(doc.determinism.identical);
    }

    #[test]
    fn documents_round_trip_and_repeat() {
        let mut cfg = base("offline_teleport");
        cfg.squeezing_db = Some(10.0);
        cfg.trials = 20;
        cfg.input = InputSpec::Coherent { re: 0.5, im: -1.0 };
        let doc = run_experiment(&cfg).unwrap();
        assert_eq!(doc.trials.len(), 20);
        assert!(doc.determinism.identical, "{:?}", doc.determinism);
        let text = doc.to_json().unwrap();
        assert_eq!(ResultDocument::from_json(&text).unwrap(), doc);
        assert_eq!(run_experiment(&cfg).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn custom_chain_needs_steps() {
        let text = r#"{"schema_version": 1, "protocol": "custom_chain", "kappas": [0.1, 0.2]}"#;
        let mut cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(run_experiment(&cfg).is_ok());
        cfg.kappas = vec![];
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn fidelity_sweep_table() {
        let mut cfg = base("offline_teleport");
        cfg.sweep = Some(SweepSpec { param: SweepParam::SqueezingDb, values: vec![0.0, 3.0, 10.0] });
        let (param, rows) = run_sweep(&cfg).unwrap();
        let csv = sweep_csv(param, &rows).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        let fid: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
        assert!((fid[0] - 0.5).abs() < 1e-9);
        assert!((fid[1] - 1.0 / (1.0 + 10f64.powf(-0.3))).abs() < 1e-9);
        assert!((fid[2] - 1.0 / 1.1).abs() < 1e-9);
        assert!(run_sweep(&base("offline_teleport")).is_err());
    }

    #[test]
    fn noise_grows_linearly_with_length() {
        let mut cfg = base("identity_chain");
        cfg.squeezing_db = Some(10.0);
        cfg.sweep = Some(SweepSpec { param: SweepParam::NNodes, values: vec![2.0, 3.0, 4.0, 5.0, 6.0] });
        let (_, rows) = run_sweep(&cfg).unwrap();
        for row in &rows {
            assert!((row.report.noise_trace - (row.value - 1.0) * 0.025).abs() < 1e-9);
        }
    }
}

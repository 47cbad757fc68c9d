//! Serializable run report. Every field is deterministic for a fixed scenario
//! and tool version unless wall-clock timings are requested.

use serde::Serialize;

use limitflow_core::math::Complex64;

pub type Pair = [f64; 2];

pub fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    NotApplicable,
    HypothesesUnmet,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub analysis: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRecord {
    pub name: &'static str,
    pub requested: bool,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientEcho {
    pub index: usize,
    pub model: String,
    pub limit: Option<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub order: usize,
    pub coefficients: Vec<CoefficientEcho>,
    pub initial: Vec<Pair>,
    pub initial_random: bool,
    pub seed: u64,
    pub sampling: String,
    pub period: f64,
    pub steps: usize,
    pub window: (usize, usize),
    pub analyses: Vec<&'static str>,
    pub tolerances: crate::scenario::Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateResult {
    pub period: f64,
    pub samples: usize,
    pub final_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizeResult {
    pub period: f64,
    pub steps: usize,
    pub max_sample_gap: f64,
    pub limiting_row: Vec<Pair>,
    pub k_tilde: f64,
    pub rho_tilde: f64,
    pub expected_rho_tilde: Option<f64>,
    pub fitted_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootRow {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub period: f64,
    /// Ascending coefficients of `Δ_T`.
    pub characteristic_polynomial: Vec<Pair>,
    pub roots: Vec<RootRow>,
    pub mu: f64,
    pub next_ring: Option<f64>,
    pub classification: &'static str,
    pub generator_eigenvalues: Vec<Pair>,
    pub max_real_eigenvalue: f64,
    pub mu_sample_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderRow {
    pub k: i64,
    pub measured: f64,
    pub bound: f64,
    pub k_const: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResiduesResult {
    pub truncation: usize,
    pub nu_hat: f64,
    pub c_tail: f64,
    pub epsilon: f64,
    pub dominant_roots: Vec<RootRow>,
    pub residue_gap: f64,
    pub remainder: Vec<RemainderRow>,
    pub cycle_nodes: usize,
    pub cycle_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetRow {
    pub t: f64,
    pub k_t: usize,
    pub period: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub schedule: &'static str,
    pub mu: f64,
    pub epsilon: f64,
    pub window: (usize, usize),
    pub slope: Option<f64>,
    pub threshold: f64,
    pub fitted_rate: Option<f64>,
    pub points_used: usize,
    pub relative: bool,
    pub vacuous: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementRow {
    pub k: usize,
    pub j: usize,
    pub bound: f64,
    pub measured: f64,
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsResult {
    pub norm: &'static str,
    pub horizon: usize,
    pub k_star: f64,
    pub rho_star: f64,
    pub k_tilde: f64,
    pub rho_tilde: f64,
    pub k: f64,
    pub rho: f64,
    /// The undefined exponent in the boundedness ceiling is taken as `j`.
    pub exponent_n: &'static str,
    pub boundedness_ceiling: f64,
    pub boundedness_inequality: bool,
    pub boundedness_sup: f64,
    pub boundedness_status: &'static str,
    /// Limiting solution restarted from `w_k` at each `k`.
    pub increments: Vec<IncrementRow>,
    /// Limiting solution sharing the initial window only; diagnostic.
    pub increments_shared_start: Vec<IncrementRow>,
    pub sup_bound: f64,
    pub sup_measured: f64,
    pub sup_tends_to_zero: bool,
    pub sup_status: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetRow {
    pub tau: f64,
    pub max_ratio: f64,
    pub slope: Option<f64>,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersampleResult {
    pub offsets: Vec<OffsetRow>,
    pub k_bar: f64,
    pub tau_zero_matches_expansion: bool,
    pub pass: bool,
}

/// Per-sample rows for `trajectories.csv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryTable {
    pub period: f64,
    pub x: Vec<Complex64>,
    pub x_star: Option<Vec<Complex64>>,
}

/// Data behind `decay.svg`: the measured error and the `(μ−ε)^k` reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    pub measured: Vec<(usize, f64)>,
    pub reference_base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub scenario: ScenarioEcho,
    pub warnings: Vec<String>,
    pub analyses: Vec<AnalysisRecord>,
    pub simulate: Option<SimulateResult>,
    pub discretize: Option<DiscretizeResult>,
    pub spectrum: Option<SpectrumResult>,
    pub residues: Option<ResiduesResult>,
    pub expansion: Option<ExpansionResult>,
    pub bounds: Option<BoundsResult>,
    pub intersample: Option<IntersampleResult>,
    pub verdicts: Vec<Verdict>,
    pub outcome: Outcome,
    #[serde(skip)]
    pub trajectory: Option<TrajectoryTable>,
    #[serde(skip)]
    pub decay: Option<DecaySeries>,
}

impl Report {
    /// Exit status: 0 all pass, 2 any failed verdict, 4 any analysis error.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Error => 4,
        }
    }

    pub(crate) fn settle(&mut self) {
        self.outcome = if self.analyses.iter().any(|a| !a.ok) {
            Outcome::Error
        } else if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            Outcome::Fail
        } else {
            Outcome::Pass
        };
    }
}

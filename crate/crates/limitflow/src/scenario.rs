//! Scenario files: a flat INI-like format with repeated `[coefficient]` sections.
//!
//! ```text
//! [scenario]
//! name = flagship
//! order = 2
//! initial = 1, 0
//! analyses = simulate, spectrum, residues, expansion
//!
//! [sampling]
//! period = 0.5
//! steps = 200
//!
//! [coefficient]
//! index = 1
//! kind = exp_perturbed
//! limit = 0.35
//! amplitude = 0.2
//! rate = 0.5
//! ```
//!
//! Index 0 defaults to the constant 1 when omitted. Complex values are written
//! `a+bi`. Tables and breakpoints are comma-separated `t:value` pairs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use limitflow_core::coefficients::{Breakpoint, CoefficientModel};
use limitflow_core::companion::CompanionSystem;
use limitflow_core::math::{c64, re, Complex64};
use limitflow_core::spectrum::Stability;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {field}: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Analyses in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Simulate,
    Discretize,
    Spectrum,
    Residues,
    Expansion,
    Bounds,
    Intersample,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Simulate,
        Analysis::Discretize,
        Analysis::Spectrum,
        Analysis::Residues,
        Analysis::Expansion,
        Analysis::Bounds,
        Analysis::Intersample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Simulate => "simulate",
            Analysis::Discretize => "discretize",
            Analysis::Spectrum => "spectrum",
            Analysis::Residues => "residues",
            Analysis::Expansion => "expansion",
            Analysis::Bounds => "bounds",
            Analysis::Intersample => "intersample",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn prerequisites(self) -> &'static [Analysis] {
        match self {
            Analysis::Simulate => &[],
            Analysis::Discretize => &[Analysis::Simulate],
            Analysis::Spectrum => &[Analysis::Simulate],
            Analysis::Residues => &[Analysis::Simulate, Analysis::Spectrum],
            Analysis::Expansion | Analysis::Intersample => &[Analysis::Residues],
            Analysis::Bounds => &[Analysis::Discretize],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConditions {
    Given(Vec<Complex64>),
    /// Uniform in `[−1, 1]` per component, drawn from the run seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    Fixed { period: f64, steps: usize },
    /// `T_t = t/k_t` with `k_t = ⌈t/step⌉` per target time.
    Targets { times: Vec<f64>, step: f64 },
}

impl Sampling {
    /// Period and horizon used by analyses that need a single grid.
    pub fn nominal(&self) -> (f64, usize) {
        match self {
            Sampling::Fixed { period, steps } => (*period, *steps),
            Sampling::Targets { times, step } => {
                let k = times.iter().map(|t| (t / step).ceil() as usize).max().unwrap_or(1);
                (*step, k.max(1))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub integrator: f64,
    pub cluster: f64,
    pub band: f64,
    pub truncation: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integrator: 1e-10,
            cluster: 1e-6,
            band: 1e-6,
            truncation: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub order: usize,
    /// Sorted by index, `0..=order`.
    pub coefficients: Vec<CoefficientModel>,
    pub initial: InitialConditions,
    pub sampling: Sampling,
    /// Expansion fit window `[lo, hi]`, clipped to the horizon.
    pub window: (usize, usize),
    /// Requested analyses plus their prerequisites, in dependency order.
    pub analyses: Vec<Analysis>,
    pub requested: Vec<Analysis>,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub expect_stability: Option<Stability>,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn system(&self) -> Result<CompanionSystem, ScenarioError> {
        CompanionSystem::new(self.coefficients.clone()).map_err(|e| ScenarioError::Validation(format!("coefficients: {e}")))
    }

    pub fn runs(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Entry, ScenarioError> {
        self.take(key).ok_or_else(|| parse_err(self.line, key, format!("missing in [{}]", self.name)))
    }

    fn finish(self) -> Result<(), ScenarioError> {
        match self.entries.into_iter().next() {
            Some((key, e)) => Err(parse_err(e.line, &key, format!("unknown key in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn sections(text: &str) -> Result<Vec<Section>, ScenarioError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| parse_err(line, "section", "unterminated header"))?.trim();
            if !matches!(name, "scenario" | "sampling" | "tolerances" | "expect" | "coefficient") {
                return Err(parse_err(line, name, "unknown section"));
            }
            out.push(Section {
                name: name.to_string(),
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| parse_err(line, body, "expected `key = value`"))?;
        let key = key.trim();
        let section = out.last_mut().ok_or_else(|| parse_err(line, key, "key outside any section"))?;
        let entry = Entry {
            line,
            value: value.trim().to_string(),
        };
        if section.entries.insert(key.to_string(), entry).is_some() {
            return Err(parse_err(line, key, "duplicate key"));
        }
    }
    Ok(out)
}

fn number(e: &Entry, field: &str) -> Result<f64, ScenarioError> {
    let x: f64 = e.value.parse().map_err(|_| parse_err(e.line, field, format!("`{}` is not a number", e.value)))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(parse_err(e.line, field, "must be finite"))
    }
}

fn integer(e: &Entry, field: &str) -> Result<usize, ScenarioError> {
    e.value.parse().map_err(|_| parse_err(e.line, field, format!("`{}` is not a nonnegative integer", e.value)))
}

fn positive(e: &Entry, field: &str) -> Result<f64, ScenarioError> {
    let x = number(e, field)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(parse_err(e.line, field, "must be positive"))
    }
}

/// `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let finite = |z: Complex64| (z.re.is_finite() && z.im.is_finite()).then_some(z);
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(re).and_then(finite);
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (real, imag) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let imag = match imag {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let imag = imag.strip_prefix('+').unwrap_or(imag);
    finite(c64(real.parse().ok()?, imag.parse().ok()?))
}

fn complex(e: &Entry, field: &str) -> Result<Complex64, ScenarioError> {
    parse_complex(&e.value).ok_or_else(|| parse_err(e.line, field, format!("`{}` is not a number", e.value)))
}

fn list<'a>(e: &'a Entry) -> impl Iterator<Item = &'a str> {
    e.value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn breakpoints(e: &Entry, field: &str) -> Result<Vec<Breakpoint>, ScenarioError> {
    list(e)
        .map(|pair| {
            let (t, v) = pair.split_once(':').ok_or_else(|| parse_err(e.line, field, format!("`{pair}` is not `t:value`")))?;
            let t: f64 = t.trim().parse().map_err(|_| parse_err(e.line, field, format!("`{t}` is not a time")))?;
            let value = parse_complex(v).ok_or_else(|| parse_err(e.line, field, format!("`{v}` is not a number")))?;
            Ok(Breakpoint { t, value })
        })
        .collect()
}

fn coefficient(mut s: Section) -> Result<CoefficientModel, ScenarioError> {
    let index_entry = s.required("index")?;
    let index = integer(&index_entry, "index")?;
    let kind = s.required("kind")?;
    let invalid = |e: limitflow_core::Error| parse_err(kind.line, "kind", format!("coefficient {index}: {e}"));
    let model = match kind.value.as_str() {
        "constant" => CoefficientModel::constant(index, complex(&s.required("value")?, "value")?),
        "exp_approach" => {
            let limit = complex(&s.required("limit")?, "limit")?;
            let rate = positive(&s.required("rate")?, "rate")?;
            let onset = s.take("onset").map(|e| number(&e, "onset")).transpose()?.unwrap_or(0.0);
            CoefficientModel::exp_approach(index, limit, rate, onset).map_err(invalid)?
        }
        "exp_perturbed" => {
            let limit = complex(&s.required("limit")?, "limit")?;
            let amplitude = complex(&s.required("amplitude")?, "amplitude")?;
            let rate = positive(&s.required("rate")?, "rate")?;
            CoefficientModel::exp_perturbed(index, limit, amplitude, rate).map_err(invalid)?
        }
        "piecewise" => CoefficientModel::piecewise(index, breakpoints(&s.required("breakpoints")?, "breakpoints")?).map_err(invalid)?,
        "tabulated" => {
            let table = breakpoints(&s.required("table")?, "table")?;
            let limit = s.take("limit").map(|e| complex(&e, "limit")).transpose()?;
            CoefficientModel::tabulated(index, table, limit).map_err(invalid)?
        }
        other => return Err(parse_err(kind.line, "kind", format!("unknown coefficient kind `{other}`"))),
    };
    s.finish()?;
    Ok(model)
}

fn stability(e: &Entry) -> Result<Stability, ScenarioError> {
    match e.value.as_str() {
        "asymptotically_stable" | "stable" => Ok(Stability::AsymptoticallyStable),
        "lyapunov_stable" | "marginal" => Ok(Stability::LyapunovStable),
        "unstable" => Ok(Stability::Unstable),
        other => Err(parse_err(e.line, "stability", format!("`{other}` is not a stability class"))),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut head: Option<Section> = None;
    let mut sampling_section: Option<Section> = None;
    let mut tol_section: Option<Section> = None;
    let mut expect_section: Option<Section> = None;
    let mut coefficient_sections = Vec::new();
    for s in sections(text)? {
        let slot = match s.name.as_str() {
            "coefficient" => {
                coefficient_sections.push(s);
                continue;
            }
            "scenario" => &mut head,
            "sampling" => &mut sampling_section,
            "tolerances" => &mut tol_section,
            _ => &mut expect_section,
        };
        if slot.is_some() {
            return Err(parse_err(s.line, &s.name, "section appears twice"));
        }
        *slot = Some(s);
    }
    let mut head = head.ok_or_else(|| parse_err(1, "scenario", "missing [scenario] section"))?;
    let mut warnings = Vec::new();

    let name = head.required("name")?.value;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
        return Err(parse_err(head.line, "name", "use letters, digits, `_`, `-` or `.`"));
    }
    let order_entry = head.required("order")?;
    let order = integer(&order_entry, "order")?;
    if order == 0 {
        return Err(ScenarioError::Validation("order must be at least 1".into()));
    }

    let initial_entry = head.required("initial")?;
    let initial = if initial_entry.value == "random" {
        InitialConditions::Random
    } else {
        let values = list(&initial_entry)
            .map(|v| parse_complex(v).ok_or_else(|| parse_err(initial_entry.line, "initial", format!("`{v}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != order {
            return Err(ScenarioError::Validation(format!("initial conditions: expected {order} values, found {}", values.len())));
        }
        InitialConditions::Given(values)
    };

    let analyses_entry = head.required("analyses")?;
    let mut requested = Vec::new();
    for a in list(&analyses_entry) {
        let parsed = Analysis::parse(a).ok_or_else(|| parse_err(analyses_entry.line, "analyses", format!("unknown analysis `{a}`")))?;
        if requested.contains(&parsed) {
            warnings.push(format!("analysis `{a}` listed more than once"));
        } else {
            requested.push(parsed);
        }
    }
    if requested.is_empty() {
        return Err(ScenarioError::Validation("at least one analysis must be requested".into()));
    }
    let mut analyses = requested.clone();
    let mut i = 0;
    while i < analyses.len() {
        for &p in analyses[i].prerequisites() {
            if !analyses.contains(&p) {
                analyses.push(p);
            }
        }
        i += 1;
    }
    analyses.sort();
    let output = head.take("output").map(|e| PathBuf::from(e.value));
    head.finish()?;

    let mut sampling = sampling_section.ok_or_else(|| parse_err(1, "sampling", "missing [sampling] section"))?;
    let sampling_spec = match (sampling.take("period"), sampling.take("targets")) {
        (Some(p), None) => {
            let period = positive(&p, "period")?;
            let steps = sampling.take("steps").map(|e| integer(&e, "steps")).transpose()?.unwrap_or(200);
            if steps < 30 {
                return Err(ScenarioError::Validation("steps must be at least 30".into()));
            }
            Sampling::Fixed { period, steps }
        }
        (None, Some(t)) => {
            let times = list(&t)
                .map(|v| v.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()).ok_or_else(|| parse_err(t.line, "targets", format!("`{v}` is not a positive time"))))
                .collect::<Result<Vec<_>, _>>()?;
            if times.len() < 10 {
                return Err(ScenarioError::Validation("targets need at least 10 times for a decay fit".into()));
            }
            let step = positive(&sampling.required("step")?, "step")?;
            Sampling::Targets { times, step }
        }
        (Some(p), Some(_)) => return Err(parse_err(p.line, "period", "give either period or targets, not both")),
        (None, None) => return Err(parse_err(sampling.line, "period", "missing period or targets")),
    };
    let window = match sampling.take("window") {
        Some(e) => {
            let bounds = list(&e).map(|v| v.parse::<usize>()).collect::<Result<Vec<_>, _>>();
            match bounds.as_deref() {
                Ok([lo, hi]) if lo < hi => (*lo, *hi),
                _ => return Err(parse_err(e.line, "window", "expected `lo, hi` with lo < hi")),
            }
        }
        None => (20, 120),
    };
    sampling.finish()?;

    let mut tolerances = Tolerances::default();
    if let Some(mut t) = tol_section {
        if let Some(e) = t.take("integrator") {
            tolerances.integrator = positive(&e, "integrator")?;
        }
        if let Some(e) = t.take("cluster") {
            tolerances.cluster = positive(&e, "cluster")?;
        }
        if let Some(e) = t.take("band") {
            tolerances.band = positive(&e, "band")?;
        }
        if let Some(e) = t.take("truncation") {
            tolerances.truncation = integer(&e, "truncation")?;
        }
        t.finish()?;
    }

    let expect_stability = match expect_section {
        Some(mut e) => {
            let s = e.take("stability").map(|v| stability(&v)).transpose()?;
            e.finish()?;
            s
        }
        None => None,
    };

    let mut coefficients: Vec<CoefficientModel> = Vec::new();
    for s in coefficient_sections {
        let line = s.line;
        let model = coefficient(s)?;
        if model.index > order {
            return Err(ScenarioError::Validation(format!("coefficient index {} exceeds order {order} (line {line})", model.index)));
        }
        if coefficients.iter().any(|m| m.index == model.index) {
            return Err(ScenarioError::Validation(format!("coefficient index {} given twice (line {line})", model.index)));
        }
        coefficients.push(model);
    }
    if !coefficients.iter().any(|m| m.index == 0) {
        coefficients.push(CoefficientModel::constant(0, re(1.0)));
    }
    coefficients.sort_by_key(|m| m.index);
    if let Some(missing) = (0..=order).find(|i| !coefficients.iter().any(|m| m.index == *i)) {
        return Err(ScenarioError::Validation(format!("missing coefficient for index {missing}")));
    }

    let scenario = Scenario {
        name,
        order,
        coefficients,
        initial,
        sampling: sampling_spec,
        window,
        analyses,
        requested,
        tolerances,
        output,
        expect_stability,
        warnings,
    };
    scenario.system()?;
    Ok(scenario)
}

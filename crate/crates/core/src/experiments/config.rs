//! Experiment configuration: JSON schema, validation and content hash.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::operators::{self, HamiltonianSpec, PotentialTerm, VtildeStrategy, DEFAULT_SYMMETRY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Converge,
    Lr,
    Corr,
    Bbgky,
    Bounds,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Converge => "converge",
            Scenario::Lr => "lr",
            Scenario::Corr => "corr",
            Scenario::Bbgky => "bbgky",
            Scenario::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Complex number as `[re, im]`.
pub type RawComplex = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPotential {
    pub order: usize,
    /// Row-major nested arrays of `[re, im]` pairs.
    pub matrix: Vec<Vec<RawComplex>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub d: usize,
    pub m_max: usize,
    #[serde(default)]
    pub potentials: Vec<RawPotential>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSettings {
    /// Block sizes `(m, n)` of the two observables.
    #[serde(default = "default_pairs")]
    pub pairs: Vec<[usize; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ObservableSettings {
    fn default() -> Self {
        ObservableSettings {
            pairs: default_pairs(),
            samples: default_samples(),
        }
    }
}

fn default_pairs() -> Vec<[usize; 2]> {
    vec![[1, 1]]
}

fn default_samples() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BbgkySettings {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    /// Coarse finite-difference step; a second pass uses `dt/2`.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Largest `m` in the telescoping check.
    #[serde(default = "default_telescoping_m")]
    pub telescoping_max_m: usize,
}

impl Default for BbgkySettings {
    fn default() -> Self {
        BbgkySettings {
            k_values: default_k_values(),
            dt: default_dt(),
            telescoping_max_m: default_telescoping_m(),
        }
    }
}

fn default_k_values() -> Vec<usize> {
    vec![1, 2]
}

fn default_dt() -> f64 {
    1e-2
}

fn default_telescoping_m() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RawVtilde {
    Canonical,
    Search { restarts: usize },
}

impl Default for RawVtilde {
    fn default() -> Self {
        RawVtilde::Canonical
    }
}

fn default_tol() -> f64 {
    crate::hartree::DEFAULT_TOL
}

/// The document exactly as serialized; hashing re-serializes this.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub spec: RawSpec,
    pub scenario: Scenario,
    pub n_values: Vec<usize>,
    pub time_grid: Vec<f64>,
    pub initial_phi: Vec<RawComplex>,
    #[serde(default = "default_tol")]
    pub integrator_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub vtilde_strategy: RawVtilde,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub observables: ObservableSettings,
    #[serde(default)]
    pub bbgky: BbgkySettings,
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub spec: HamiltonianSpec,
    pub initial_phi: CVec,
}

impl ExperimentConfig {
    pub fn scenario(&self) -> Scenario {
        self.raw.scenario
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn n_values(&self) -> &[usize] {
        &self.raw.n_values
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.raw.time_grid
    }

    pub fn integrator_tol(&self) -> f64 {
        self.raw.integrator_tol
    }

    pub fn vtilde_strategy(&self) -> VtildeStrategy {
        match self.raw.vtilde_strategy {
            RawVtilde::Canonical => VtildeStrategy::Canonical,
            RawVtilde::Search { restarts } => VtildeStrategy::Search {
                restarts,
                seed: self.raw.seed,
            },
        }
    }

    /// Hex SHA-256 of the canonical JSON re-serialization.
    pub fn hash(&self) -> String {
        config_hash(&self.raw)
    }

    pub fn with_seed(self, seed: u64) -> Result<Self> {
        let mut raw = self.raw;
        raw.seed = seed;
        validate(raw, "<override>")
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        let mut raw = self.raw;
        raw.integrator_tol = tol;
        validate(raw, "<override>")
    }
}

pub fn config_hash(raw: &RawConfig) -> String {
    let bytes = serde_json::to_vec(raw).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Parses and validates a JSON document; `origin` labels diagnostics.
pub fn load_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(origin, format!("at `{path}`: {}", e.inner()))
    })?;
    validate(raw, origin)
}

pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text, &path.display().to_string())
}

fn complex(c: &RawComplex) -> C64 {
    C64::new(c[0], c[1])
}

fn parse_matrix(rows: &[Vec<RawComplex>], field: &str, origin: &str) -> Result<CMat> {
    let n = rows.len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::config(
            origin,
            format!("at `{field}[{i}]`: row has {} entries, expected {n}", row.len()),
        ));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::config(origin, format!("at `{field}`: non-finite entry")));
    }
    Ok(CMat::from_fn(n, n, |i, j| complex(&rows[i][j])))
}

fn validate(raw: RawConfig, origin: &str) -> Result<ExperimentConfig> {
    let err = |field: &str, msg: String| Error::config(origin, format!("at `{field}`: {msg}"));
    let d = raw.spec.d;
    if d == 0 {
        return Err(err("spec.d", "must be at least 1".into()));
    }
    if raw.spec.m_max == 0 {
        return Err(err("spec.m_max", "must be at least 1".into()));
    }

    let mut terms = Vec::with_capacity(raw.spec.potentials.len());
    for (i, p) in raw.spec.potentials.iter().enumerate() {
        let field = format!("spec.potentials[{i}]");
        if p.order == 0 || p.order > raw.spec.m_max {
            return Err(err(
                &format!("{field}.order"),
                format!("order {} outside 1..={}", p.order, raw.spec.m_max),
            ));
        }
        if terms.iter().any(|t: &PotentialTerm| t.order == p.order) {
            return Err(err(&format!("{field}.order"), format!("order {} given twice", p.order)));
        }
        let matrix = parse_matrix(&p.matrix, &format!("{field}.matrix"), origin)?;
        let term = PotentialTerm::new(p.order, matrix);
        let report = operators::validate_potential_with_tol(&term, d, DEFAULT_SYMMETRY_TOL);
        if !report.is_valid() {
            return Err(err(&format!("{field}.matrix"), report.to_string()));
        }
        terms.push(term);
    }
    let spec = HamiltonianSpec::new(d, raw.spec.m_max, terms).map_err(|e| err("spec", e.to_string()))?;

    if raw.n_values.is_empty() {
        return Err(err("n_values", "must not be empty".into()));
    }
    if raw.n_values[0] == 0 {
        return Err(err("n_values[0]", "particle numbers must be at least 1".into()));
    }
    if let Some(i) = raw.n_values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(err(&format!("n_values[{}]", i + 1), "must be strictly increasing".into()));
    }
    let max_order = spec.max_present_order();
    if raw.n_values[0] < max_order {
        return Err(err(
            "n_values[0]",
            format!("interaction order {max_order} exceeds particle number {}", raw.n_values[0]),
        ));
    }

    if raw.time_grid.is_empty() {
        return Err(err("time_grid", "must not be empty".into()));
    }
    if let Some(i) = raw.time_grid.iter().position(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(err(&format!("time_grid[{i}]"), "times must be finite and non-negative".into()));
    }
    if let Some(i) = raw.time_grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(err(&format!("time_grid[{}]", i + 1), "must be strictly increasing".into()));
    }

    if raw.initial_phi.len() != d {
        return Err(err(
            "initial_phi",
            format!("has {} entries, expected d = {d}", raw.initial_phi.len()),
        ));
    }
    let phi = CVec::from_iterator(d, raw.initial_phi.iter().map(complex));
    let norm = phi.norm();
    if !((norm - 1.0).abs() <= 1e-10) {
        return Err(err("initial_phi", format!("norm {norm} differs from 1")));
    }

    if !(raw.integrator_tol > 0.0 && raw.integrator_tol.is_finite()) {
        return Err(err("integrator_tol", "must be positive".into()));
    }
    if let RawVtilde::Search { restarts: 0 } = raw.vtilde_strategy {
        return Err(err("vtilde_strategy.search.restarts", "must be at least 1".into()));
    }
    if raw.observables.samples == 0 {
        return Err(err("observables.samples", "must be at least 1".into()));
    }
    if let Some(i) = raw.observables.pairs.iter().position(|p| p[0] == 0 || p[1] == 0) {
        return Err(err(&format!("observables.pairs[{i}]"), "block sizes must be at least 1".into()));
    }
    if !(raw.bbgky.dt > 0.0 && raw.bbgky.dt.is_finite()) {
        return Err(err("bbgky.dt", "must be positive".into()));
    }
    if let Some(i) = raw.bbgky.k_values.iter().position(|&k| k == 0) {
        return Err(err(&format!("bbgky.k_values[{i}]"), "levels start at 1".into()));
    }

    Ok(ExperimentConfig {
        raw,
        spec,
        initial_phi: phi,
    })
}

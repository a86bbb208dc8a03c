//! Scenario files (TOML).
//!
//! ```toml
//! mode = "parallel"            # or "fading"
//!
//! [budgets]
//! p1_db = 12.0                 # -inf means a zero budget
//! p2_db = 10.0
//!
//! [sweep]
//! gamma1 = [0, 0.5, 1, 2, inf] # ascending; inf is the maximal-secrecy end
//!
//! [parallel]
//! nu = [1, 2, 3]
//! mu = [5, 3, 4]
//!
//! [fading]
//! sigma1 = 1.0
//! sigma2 = 1.0
//! sigma3 = 1.0
//! nu = 2.0
//! mu = 2.0
//! samples = 20000
//! seed = 2024
//! rule = "consistent"          # or "literal"
//! ```
//!
//! `[verify]` and `[output]` are optional; see [`VerifySection`] and
//! [`OutputSection`].

use std::path::{Path, PathBuf};

use cmac_secrecy::{db_to_linear, FadingRule, GridSpec, ParallelInstance, RayleighSpec};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Weights swept when a scenario does not list its own.
pub const DEFAULT_SWEEP: [f64; 10] = [
    0.0,
    0.25,
    0.5,
    1.0,
    2.0,
    4.0,
    8.0,
    16.0,
    32.0,
    f64::INFINITY,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(alias = "parallel-gaussian")]
    Parallel,
    Fading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub p1_db: f64,
    pub p2_db: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub gamma1: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            gamma1: DEFAULT_SWEEP.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelSection {
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

fn default_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSection {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub nu: f64,
    pub mu: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rule: FadingRule,
}

/// Settings of the `verify` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Seed of the random instance suite.
    pub seed: u64,
    /// Random single-link instances.
    pub single_link_instances: usize,
    /// Random instances with 2 or 3 links (alternating).
    pub multi_link_instances: usize,
    pub gamma1: Vec<f64>,
    pub noise_range: [f64; 2],
    pub budget_range: [f64; 2],
    /// Largest allowed |closed form − oracle| objective gap.
    pub tolerance: f64,
    pub kkt_tolerance: f64,
    /// Relative tolerance of the beamforming ratio law.
    pub ratio_tolerance: f64,
    /// Relative tolerance on budgets met by the multiplier search.
    pub budget_tolerance: f64,
    pub points_per_axis: usize,
    pub refinement_rounds: usize,
    /// Fading states checked against the per-state Lagrangian oracle.
    pub states: usize,
    pub state_refinement_rounds: usize,
    /// Largest allowed Lagrangian gap on one state.
    pub state_tolerance: f64,
    /// Share of states that must agree for a rule to count as consistent.
    pub agreement_threshold: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            seed: 1,
            single_link_instances: 0,
            multi_link_instances: 0,
            gamma1: vec![0.0, 0.5, 1.0, 2.0, 8.0],
            noise_range: [0.5, 10.0],
            budget_range: [1.0, 30.0],
            tolerance: 1e-3,
            kkt_tolerance: 1e-8,
            ratio_tolerance: 1e-10,
            budget_tolerance: 1e-6,
            points_per_axis: 64,
            refinement_rounds: 3,
            states: 100,
            state_refinement_rounds: 8,
            state_tolerance: 1e-6,
            agreement_threshold: 0.95,
        }
    }
}

impl VerifySection {
    pub fn grid(&self) -> CliResult<GridSpec> {
        GridSpec::new(self.points_per_axis, self.refinement_rounds)
            .map_err(|e| CliError::Usage(format!("[verify] {e}")))
    }

    pub fn state_grid(&self) -> CliResult<GridSpec> {
        GridSpec::new(self.points_per_axis, self.state_refinement_rounds)
            .map_err(|e| CliError::Usage(format!("[verify] {e}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub budgets: Budgets,
    #[serde(default)]
    pub sweep: Sweep,
    pub parallel: Option<ParallelSection>,
    pub fading: Option<FadingSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// 1-based line of `key` inside `[section]` (top level when `section` is
/// empty), for diagnostics.
fn line_of(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Checker<'a> {
    path: &'a Path,
    source: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, reason: impl std::fmt::Display) -> CliError {
        let field = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        let at = match line_of(self.source, section, key) {
            Some(l) => format!("line {l}: "),
            None => String::new(),
        };
        CliError::Config {
            path: self.path.to_path_buf(),
            message: format!("{at}field `{field}`: {reason}"),
        }
    }
}

impl ScenarioConfig {
    pub fn from_str_at(source: &str, path: &Path) -> CliResult<Self> {
        let cfg: ScenarioConfig = toml::from_str(source).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate(&Checker { path, source })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let source = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str_at(&source, path)
    }

    fn validate(&self, c: &Checker) -> CliResult<()> {
        for (key, v) in [("p1_db", self.budgets.p1_db), ("p2_db", self.budgets.p2_db)] {
            if v.is_nan() || v == f64::INFINITY {
                return Err(c.fail("budgets", key, format!("must be finite or -inf, got {v}")));
            }
        }
        let g = &self.sweep.gamma1;
        if g.is_empty() {
            return Err(c.fail("sweep", "gamma1", "must not be empty"));
        }
        if let Some(bad) = g.iter().find(|x| x.is_nan() || **x < 0.0) {
            return Err(c.fail("sweep", "gamma1", format!("values must be >= 0, got {bad}")));
        }
        if g.windows(2).any(|w| w[1] < w[0]) {
            return Err(c.fail("sweep", "gamma1", "must be sorted ascending"));
        }
        match self.mode {
            Mode::Parallel => {
                let Some(p) = &self.parallel else {
                    return Err(c.fail("", "mode", "mode \"parallel\" needs a [parallel] section"));
                };
                if p.nu.len() != p.mu.len() {
                    return Err(c.fail(
                        "parallel",
                        "mu",
                        format!("has {} entries but nu has {}", p.mu.len(), p.nu.len()),
                    ));
                }
                if p.nu.is_empty() {
                    return Err(c.fail("parallel", "nu", "must not be empty"));
                }
                for (key, xs) in [("nu", &p.nu), ("mu", &p.mu)] {
                    if let Some(bad) = xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                        return Err(c.fail(
                            "parallel",
                            key,
                            format!("noise must be finite and > 0, got {bad}"),
                        ));
                    }
                }
            }
            Mode::Fading => {
                let Some(f) = &self.fading else {
                    return Err(c.fail("", "mode", "mode \"fading\" needs a [fading] section"));
                };
                for (key, v) in [
                    ("sigma1", f.sigma1),
                    ("sigma2", f.sigma2),
                    ("sigma3", f.sigma3),
                    ("nu", f.nu),
                    ("mu", f.mu),
                ] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(c.fail(
                            "fading",
                            key,
                            format!("must be finite and > 0, got {v}"),
                        ));
                    }
                }
                if f.samples == 0 {
                    return Err(c.fail("fading", "samples", "must be >= 1"));
                }
            }
        }
        let v = &self.verify;
        for (key, r) in [
            ("noise_range", v.noise_range),
            ("budget_range", v.budget_range),
        ] {
            if !(r[0] > 0.0 && r[1] >= r[0] && r[1].is_finite()) {
                return Err(c.fail("verify", key, format!("need 0 < lo <= hi, got {r:?}")));
            }
        }
        if v.points_per_axis < 8 {
            return Err(c.fail("verify", "points_per_axis", "must be >= 8"));
        }
        if v.gamma1.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(c.fail("verify", "gamma1", "values must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            if let Some(f) = &mut self.fading {
                f.seed = seed;
            }
            self.verify.seed = seed;
        }
        if let (Some(n), Some(f)) = (o.samples, &mut self.fading) {
            f.samples = n;
        }
        if let Some(t) = o.tolerance {
            self.verify.tolerance = t;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(fmt) = o.format {
            self.output.format = fmt;
        }
    }

    /// Linear budgets.
    pub fn budgets(&self) -> [f64; 2] {
        [
            db_to_linear(self.budgets.p1_db),
            db_to_linear(self.budgets.p2_db),
        ]
    }

    pub fn parallel_instance(&self) -> CliResult<ParallelInstance> {
        let p = self
            .parallel
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs a [parallel] section".into()))?;
        let [p1, p2] = self.budgets();
        Ok(ParallelInstance::from_noise(&p.nu, &p.mu, p1, p2)?)
    }

    pub fn rayleigh(&self) -> CliResult<RayleighSpec> {
        let f = self
            .fading
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs a [fading] section".into()))?;
        Ok(RayleighSpec {
            sigma1: f.sigma1,
            sigma2: f.sigma2,
            sigma3: f.sigma3,
            nu: f.nu,
            mu: f.mu,
            n_samples: f.samples,
            seed: f.seed,
        })
    }

    pub fn fading_rule(&self) -> FadingRule {
        self.fading.as_ref().map(|f| f.rule).unwrap_or_default()
    }
}

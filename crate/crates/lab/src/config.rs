//! Experiment configuration files.
//!
//! A config is one TOML document. Every field has an explicit default, and
//! [`ExperimentConfig::emit`] writes all of them so the copy stored next to
//! the results describes the run completely.

use std::path::{Path, PathBuf};

use nbrw_core::dynamics::{DynamicsSpec, Mechanism};
use nbrw_core::theory::{Family, Limit, TimeMap};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    TauTail,
    MixProfile,
    ExactVerify,
    StaticMix,
    ShortcutAudit,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::TauTail => "tau-tail",
            CommandKind::MixProfile => "mix-profile",
            CommandKind::ExactVerify => "exact-verify",
            CommandKind::StaticMix => "static-mix",
            CommandKind::ShortcutAudit => "shortcut-audit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Local,
    Near,
    Global,
}

impl Mode {
    pub fn family(self) -> Family {
        match self {
            Mode::Local => Family::Local,
            Mode::Near => Family::Near,
            Mode::Global => Family::Global,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Near => "near",
            Mode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DegreeSpec {
    Regular {
        degree: usize,
    },
    TwoPoint {
        d1: usize,
        d2: usize,
        fraction: f64,
    },
    PowerLaw {
        exponent: f64,
        min: usize,
        max: usize,
    },
    /// Newline-delimited degrees; relative paths resolve against the config.
    File {
        path: PathBuf,
    },
    Explicit {
        degrees: Vec<usize>,
    },
}

impl Default for DegreeSpec {
    fn default() -> Self {
        DegreeSpec::Regular { degree: 3 }
    }
}

impl DegreeSpec {
    /// Whether the vertex count comes from the spec rather than the `n` grid.
    pub fn fixed_size(&self) -> bool {
        matches!(self, DegreeSpec::File { .. } | DegreeSpec::Explicit { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub n: Vec<usize>,
    pub degrees: DegreeSpec,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            n: vec![1000],
            degrees: DegreeSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub mode: Mode,
    pub alpha: f64,
    /// Radius, near mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

impl DynamicsConfig {
    pub fn spec(&self) -> Result<DynamicsSpec> {
        let mech = match self.mode {
            Mode::Local => Mechanism::Local,
            Mode::Global => Mechanism::Global,
            Mode::Near => Mechanism::Near {
                r: self.r.ok_or_else(|| {
                    LabError::config("dynamics.r is required for mode = \"near\"")
                })?,
            },
        };
        Ok(DynamicsSpec::new(mech, self.alpha)?)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// Overrides the time map chosen from the mechanism and regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_map: Option<TimeMap>,
}

/// A scaling limit written as a number, `"infinite"` or `"zero"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LimitSpec {
    Finite(f64),
    Word(LimitWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitWord {
    Infinite,
    Zero,
}

impl LimitSpec {
    pub fn limit(self) -> Limit {
        match self {
            LimitSpec::Finite(v) => Limit::Finite(v),
            LimitSpec::Word(LimitWord::Infinite) => Limit::Infinite,
            LimitSpec::Word(LimitWord::Zero) => Limit::Zero,
        }
    }
}

/// Limits of the scaling diagnostics used for theory columns. Unset limits
/// are read off the finite-`n` values of the diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    /// Limit of `α log n` (local), `α r log n` (near) or `α (log n)²` (global).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary: Option<LimitSpec>,
    /// Limit of `α r²`, near mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_square: Option<LimitSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub graph_replicas: u64,
    pub plugin_samples: u64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            graph_replicas: 200,
            plugin_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticMixConfig {
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Emit the full TV curve as `d_stat` rows.
    pub curve: bool,
}

impl Default for StaticMixConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.25,
            horizon: None,
            curve: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub r: Vec<usize>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { r: vec![5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    pub degrees: Vec<Vec<usize>>,
    pub modes: Vec<Mode>,
    pub alphas: Vec<f64>,
    /// Radius for near mode.
    pub r: usize,
    pub tolerance: f64,
    /// Write each joint matrix as dense text under `matrices/`.
    pub export_matrices: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            degrees: vec![vec![2, 2], vec![3, 3], vec![2, 3, 3]],
            modes: vec![Mode::Local, Mode::Near, Mode::Global],
            alphas: vec![0.25, 0.5, 0.75],
            r: 2,
            tolerance: 1e-12,
            export_matrices: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// Dump audited walk paths as JSON lines.
    pub trajectories: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            format: OutputFormat::Both,
            trajectories: false,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_replicas() -> u64 {
    10_000
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub command: Option<CommandKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    /// Fresh uniform `(x, ξ)` per replica instead of one shared start.
    #[serde(default = "yes")]
    pub annealed: bool,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(default)]
    pub budgets: BudgetConfig,
    #[serde(default)]
    pub static_mix: StaticMixConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub exact: ExactConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// All defaults, for `command`.
    pub fn new(command: CommandKind) -> Self {
        Self {
            command: Some(command),
            seed: default_seed(),
            replicas: default_replicas(),
            annealed: true,
            graph: GraphConfig::default(),
            dynamics: DynamicsConfig::default(),
            grid: GridConfig::default(),
            theory: TheoryConfig::default(),
            budgets: BudgetConfig::default(),
            static_mix: StaticMixConfig::default(),
            audit: AuditConfig::default(),
            exact: ExactConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn command(&self) -> Result<CommandKind> {
        self.command
            .ok_or_else(|| LabError::config("command is not set"))
    }

    /// Checks field ranges and that referenced files exist.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        let cmd = self.command()?;
        let bad = |field: &str, why: String| Err(LabError::config(format!("{field}: {why}")));
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1".into());
        }
        let a = self.dynamics.alpha;
        if !(0.0..=1.0).contains(&a) {
            return bad("dynamics.alpha", format!("{a} is not in [0, 1]"));
        }
        match (self.dynamics.mode, self.dynamics.r) {
            (Mode::Near, None) => return bad("dynamics.r", "required for mode = \"near\"".into()),
            (Mode::Near, Some(0)) => return bad("dynamics.r", "must be at least 1".into()),
            (Mode::Local | Mode::Global, Some(_)) => {
                return bad("dynamics.r", "only meaningful for mode = \"near\"".into())
            }
            _ => {}
        }
        if !self.graph.degrees.fixed_size() {
            if self.graph.n.is_empty() {
                return bad("graph.n", "grid is empty".into());
            }
            if let Some(&n) = self.graph.n.iter().find(|&&n| n < 2) {
                return bad("graph.n", format!("{n} is below 2"));
            }
        }
        match &self.graph.degrees {
            DegreeSpec::File { path } => {
                let p = base_dir.join(path);
                if !p.is_file() {
                    return bad(
                        "graph.degrees.path",
                        format!("{} does not exist", p.display()),
                    );
                }
            }
            DegreeSpec::TwoPoint { fraction, .. } if !(0.0..=1.0).contains(fraction) => {
                return bad(
                    "graph.degrees.fraction",
                    format!("{fraction} is not in [0, 1]"),
                );
            }
            DegreeSpec::Explicit { degrees } if degrees.is_empty() => {
                return bad("graph.degrees.degrees", "empty".into());
            }
            _ => {}
        }
        let t_empty = self.grid.t.as_ref().is_none_or(|t| t.is_empty());
        let c_empty = self.grid.c.as_ref().is_none_or(|c| c.is_empty());
        match cmd {
            CommandKind::TauTail | CommandKind::MixProfile => {
                if self.grid.t.is_some() && self.grid.c.is_some() {
                    return bad("grid", "give either t or c, not both".into());
                }
                if t_empty && c_empty {
                    return bad("grid", "needs a nonempty t or c grid".into());
                }
                if let Some(c) = self.grid.c.iter().flatten().find(|c| !(**c >= 0.0)) {
                    return bad("grid.c", format!("{c} is negative"));
                }
            }
            CommandKind::ShortcutAudit => {
                if t_empty {
                    return bad("grid.t", "needs a nonempty t grid".into());
                }
                if self.audit.r.is_empty() || self.audit.r.contains(&0) {
                    return bad("audit.r", "needs radii of at least 1".into());
                }
            }
            CommandKind::StaticMix => {
                let e = self.static_mix.epsilon;
                if !(e > 0.0 && e <= 1.0) {
                    return bad("static_mix.epsilon", format!("{e} is not in (0, 1]"));
                }
            }
            CommandKind::ExactVerify => {
                let x = &self.exact;
                if x.degrees.is_empty() || x.modes.is_empty() || x.alphas.is_empty() {
                    return bad("exact", "degrees, modes and alphas must be nonempty".into());
                }
                if let Some(a) = x.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return bad("exact.alphas", format!("{a} is not in [0, 1]"));
                }
                if x.r == 0 {
                    return bad("exact.r", "must be at least 1".into());
                }
                if !(x.tolerance >= 0.0) {
                    return bad("exact.tolerance", "must be nonnegative".into());
                }
            }
        }
        Ok(())
    }
}

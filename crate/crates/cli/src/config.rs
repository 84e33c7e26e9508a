//! TOML run configuration.
//!
//! ```toml
//! potential = "radial: -2*t^2 + (5/3)*t^3 - (1/4)*t^4"
//!
//! [action]
//! type = "block_rotation"      # or "finite_group"
//! dim = 2
//! blocks = [[0, 1]]            # 0-based coordinate pairs
//! generators = "diagonal"      # "torus" or explicit block lists
//!
//! [search]
//! seeds = [[1.0, 0.0]]
//!
//! [conley]
//! epsilon = 1e-3
//! tol_res = 1e-6
//! j0 = 1
//!
//! [finder]
//! amplitudes = [3e-2, 1e-2]
//! steps = 2048
//! tol_orbit = 1e-9
//!
//! [outputs]
//! report_path = "report.json"
//! orbit_csv_dir = "orbits"
//! ```
//! Relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use lyapcenter_core::critical_orbits::SearchConfig;
use lyapcenter_core::orbit_finder::{FinderOptions, Method};
use lyapcenter_core::symmetry::{BlockRotation, FinitePermGroup, GroupAction};
use lyapcenter_core::ConleyOptions;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: String,
    pub action: ActionConfig,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub conley: ConleySection,
    #[serde(default)]
    pub finder: FinderSection,
    #[serde(default)]
    pub outputs: OutputSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionConfig {
    BlockRotation {
        dim: usize,
        blocks: Vec<(usize, usize)>,
        #[serde(default)]
        generators: Generators,
    },
    FiniteGroup {
        /// JSON group table, see `FinitePermGroup::from_json`.
        table: PathBuf,
        /// Subgroup `H` whose admissibility in `G` is reported.
        subgroup: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Generators {
    Named(String),
    Explicit(Vec<Vec<usize>>),
}

impl Default for Generators {
    fn default() -> Self {
        Generators::Named("diagonal".into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub seeds: Vec<Vec<f64>>,
    #[serde(default = "default_newton_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_tol_grad")]
    pub tol_grad: f64,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub dim: Option<usize>,
}

fn default_newton_iter() -> usize {
    50
}

fn default_tol_grad() -> f64 {
    1e-10
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            newton_max_iter: default_newton_iter(),
            tol_grad: default_tol_grad(),
            bounds: None,
            dim: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConleySection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tol_res")]
    pub tol_res: f64,
    pub j0: Option<usize>,
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_tol_res() -> f64 {
    1e-6
}

impl Default for ConleySection {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            tol_res: default_tol_res(),
            j0: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinderSection {
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_tol_orbit")]
    pub tol_orbit: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub method: MethodName,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Verlet,
    Rk4,
}

fn default_amplitudes() -> Vec<f64> {
    vec![3e-2, 1e-2]
}

fn default_steps() -> usize {
    2048
}

fn default_tol_orbit() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    30
}

impl Default for FinderSection {
    fn default() -> Self {
        Self {
            amplitudes: default_amplitudes(),
            steps: default_steps(),
            tol_orbit: default_tol_orbit(),
            max_iter: default_max_iter(),
            method: MethodName::Verlet,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report_path: Option<PathBuf>,
    pub orbit_csv_dir: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.potential.trim().is_empty() {
            return Err(invalid("potential is empty"));
        }
        let positive = [
            ("search.tol_grad", self.search.tol_grad),
            ("conley.epsilon", self.conley.epsilon),
            ("conley.tol_res", self.conley.tol_res),
            ("finder.tol_orbit", self.finder.tol_orbit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.conley.epsilon >= 1.0 {
            return Err(invalid("conley.epsilon must be below 1"));
        }
        if self.conley.j0 == Some(0) {
            return Err(invalid("conley.j0 is 1-based"));
        }
        if self.finder.steps < 32 {
            return Err(invalid(format!(
                "finder.steps must be at least 32, got {}",
                self.finder.steps
            )));
        }
        let a = &self.finder.amplitudes;
        if a.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("finder.amplitudes must be positive"));
        }
        if a.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("finder.amplitudes must be strictly decreasing"));
        }
        if let Some(b) = &self.search.bounds {
            if b.iter().any(|(lo, hi)| !(lo < hi)) {
                return Err(invalid("search.bounds entries must satisfy lo < hi"));
            }
        }
        Ok(())
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            seeds: self.search.seeds.clone(),
            newton_max_iter: self.search.newton_max_iter,
            tol_grad: self.search.tol_grad,
            tol_res: self.conley.tol_res,
            bounds: self.search.bounds.clone(),
            dim: self.search.dim,
        }
    }

    pub fn conley_options(&self) -> ConleyOptions {
        ConleyOptions {
            epsilon: self.conley.epsilon,
            tol_res: self.conley.tol_res,
            cross_check: true,
        }
    }

    pub fn finder_options(&self) -> FinderOptions {
        FinderOptions {
            steps: self.finder.steps,
            method: match self.finder.method {
                MethodName::Verlet => Method::Verlet,
                MethodName::Rk4 => Method::Rk4,
            },
            tol_orbit: self.finder.tol_orbit,
            max_iter: self.finder.max_iter,
            bounds: self.search.bounds.clone(),
        }
    }

    /// Build the group action; the finite-group table is read from disk.
    pub fn group_action(&self) -> Result<(GroupAction, Option<Vec<usize>>), CliError> {
        match &self.action {
            ActionConfig::BlockRotation {
                dim,
                blocks,
                generators,
            } => {
                let b = match generators {
                    Generators::Named(name) if name == "diagonal" => BlockRotation::diagonal(*dim, blocks.clone()),
                    Generators::Named(name) if name == "torus" => BlockRotation::torus(*dim, blocks.clone()),
                    Generators::Named(other) => {
                        return Err(invalid(format!(
                        "action.generators must be \"diagonal\", \"torus\" or a list of block lists, got \"{other}\""
                    )))
                    }
                    Generators::Explicit(g) => BlockRotation::new(*dim, blocks.clone(), g.clone()),
                }
                .map_err(|e| invalid(format!("action: {e}")))?;
                Ok((GroupAction::BlockRotation(b), None))
            }
            ActionConfig::FiniteGroup { table, subgroup } => {
                let path = self.resolve(table);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| invalid(format!("cannot read group table {}: {e}", path.display())))?;
                let g = FinitePermGroup::from_json(&text).map_err(|e| invalid(format!("group table: {e}")))?;
                let h = subgroup
                    .as_deref()
                    .map(|s| g.parse_subset(s))
                    .transpose()
                    .map_err(|e| invalid(format!("action.subgroup: {e}")))?;
                Ok((GroupAction::FinitePerm(g), h))
            }
        }
    }
}

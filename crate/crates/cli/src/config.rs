//! Run configuration: a versioned TOML file. Lengths in mm, angles in
//! degrees, stresses in MPa, forces in N.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hardstop::engage::Surge;
use hardstop::field::{AxisScale, BoundaryLabel, DirectionGrid, RadialBoundaryField};
use hardstop::geometry::{HardStopPair, SamplingOptions, TorusCapProfile};
use hardstop::optimizer::{DesignParam, DesignVariable, SearchOptions, StressTarget, TargetRole};
use hardstop::stress::{StressModel, TabulatedMeta};
use hardstop::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A problem with the configuration or a file it names. Exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub delta_z_mm: f64,
    /// Precomputed contact boundary used instead of extracting one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs_boundary: Option<PathBuf>,
    #[serde(default, rename = "stress")]
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub trajectories: Vec<TrajectoryConfig>,
    #[serde(default)]
    pub stress_map: StressMapConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimization: Option<OptimizationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub d_l: f64,
    pub d_s: f64,
    pub r_c: f64,
    pub theta_o_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_diameter: Option<f64>,
}

impl ProfileConfig {
    fn of(p: &TorusCapProfile) -> Self {
        Self {
            d_l: p.d_l(),
            d_s: p.d_s(),
            r_c: p.r_c(),
            theta_o_deg: p.theta_o().to_degrees(),
            clip_diameter: p.clip_diameter(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub stage: ProfileConfig,
    pub ground: ProfileConfig,
    pub z_ab: f64,
    pub z_oa: f64,
    pub z_lo: f64,
}

impl GeometryConfig {
    pub fn of(pair: &HardStopPair) -> Self {
        Self {
            stage: ProfileConfig::of(&pair.stage),
            ground: ProfileConfig::of(&pair.ground),
            z_ab: pair.z_ab,
            z_oa: pair.z_oa,
            z_lo: pair.z_lo,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub density: f64,
    pub min_points: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let s = SamplingOptions::default();
        Self {
            density: s.density,
            min_points: s.min_points,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_alpha: usize,
    pub n_sep: usize,
    pub delta_ref_mm: f64,
    pub theta_ref_deg: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_alpha: 360,
            n_sep: 7,
            delta_ref_mm: 1.0,
            theta_ref_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear {
        r_delta_mpa_per_mm: f64,
        r_theta_mpa_per_deg: f64,
    },
    Radial {
        r_prime_mpa: f64,
    },
    Beam {
        length_mm: f64,
        modulus_mpa: f64,
        diameter_mm: f64,
        #[serde(default)]
        axial_force_n: f64,
    },
    Tabulated {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axial_force_n: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_z_deg: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub name: String,
    pub sigma_cr_mpa: f64,
    #[serde(default = "default_role")]
    pub role: TargetRole,
    pub model: ModelConfig,
}

fn default_role() -> TargetRole {
    TargetRole::MustContainHs
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressMapConfig {
    pub slices_deg: Vec<f64>,
    pub delta_max_mm: f64,
    pub theta_max_deg: f64,
    pub steps: usize,
}

impl Default for StressMapConfig {
    fn default() -> Self {
        Self {
            slices_deg: vec![0.0, 30.0, 60.0, 90.0],
            delta_max_mm: 3.0,
            theta_max_deg: 6.0,
            steps: 121,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableConfig {
    pub param: DesignParam,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConfig {
    pub variables: Vec<VariableConfig>,
    /// Target whose φ_hs is maximised; the first target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary: Option<String>,
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default = "default_search_alpha")]
    pub search_n_alpha: usize,
    #[serde(default = "default_search_sep")]
    pub search_n_sep: usize,
    #[serde(default = "default_search_density")]
    pub search_density: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_random_starts")]
    pub random_starts: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_penalty() -> f64 {
    10.0
}
fn default_search_alpha() -> usize {
    72
}
fn default_search_sep() -> usize {
    4
}
fn default_search_density() -> f64 {
    16.0
}
fn default_max_evals() -> usize {
    SearchOptions::default().max_evals
}
fn default_random_starts() -> usize {
    SearchOptions::default().random_starts
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub trajectory: String,
    /// Stress target evaluated along the trajectory; the first when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default = "default_peak")]
    pub peak_multiplier: f64,
    #[serde(default = "default_width")]
    pub width_steps: f64,
    #[serde(default = "default_center")]
    pub center_pct: f64,
}

fn default_peak() -> f64 {
    3.0
}
fn default_width() -> f64 {
    13.0
}
fn default_center() -> f64 {
    50.0
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_alpha: Option<usize>,
    pub grid_sep: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| bad("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.inner().message().to_string();
            bad(if path == "." { "" } else { &path }, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; relative file paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| bad("", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for t in &mut cfg.targets {
            if let ModelConfig::Tabulated { path, .. } = &mut t.model {
                resolve(path);
            }
        }
        for t in &mut cfg.trajectories {
            resolve(&mut t.path);
        }
        if let Some(p) = &mut cfg.hs_boundary {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(n) = o.grid_alpha {
            self.grid.n_alpha = n;
        }
        if let Some(n) = o.grid_sep {
            self.grid.n_sep = n;
        }
        if let Some(seed) = o.seed {
            if let Some(opt) = &mut self.optimization {
                opt.seed = seed;
            }
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let g = &self.grid;
        if g.n_alpha < 8 || !g.n_alpha.is_multiple_of(4) {
            return Err(bad("grid.n_alpha", "must be a multiple of 4 and at least 8"));
        }
        if g.n_sep < 1 {
            return Err(bad("grid.n_sep", "must be at least 1"));
        }
        for (k, v) in [
            ("grid.delta_ref_mm", g.delta_ref_mm),
            ("grid.theta_ref_deg", g.theta_ref_deg),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(k, "must be positive"));
            }
        }
        if !(self.sampling.density.is_finite() && self.sampling.density > 0.0) {
            return Err(bad("sampling.density", "must be positive"));
        }
        if !self.delta_z_mm.is_finite() {
            return Err(bad("delta_z_mm", "must be finite"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (k, t) in self.targets.iter().enumerate() {
            let safe = !t.name.is_empty()
                && t.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !safe {
                return Err(bad(
                    &format!("stress[{k}].name"),
                    "use letters, digits, '_' or '-' only",
                ));
            }
            if !names.insert(t.name.as_str()) {
                return Err(bad(
                    &format!("stress[{k}].name"),
                    format!("duplicate target {:?}", t.name),
                ));
            }
            if !(t.sigma_cr_mpa.is_finite() && t.sigma_cr_mpa > 0.0) {
                return Err(bad(&format!("stress[{k}].sigma_cr_mpa"), "must be positive"));
            }
        }
        let mut traj_names = std::collections::BTreeSet::new();
        for (k, t) in self.trajectories.iter().enumerate() {
            if !traj_names.insert(t.name.as_str()) {
                return Err(bad(
                    &format!("trajectories[{k}].name"),
                    format!("duplicate trajectory {:?}", t.name),
                ));
            }
        }
        let m = &self.stress_map;
        if m.steps < 2 {
            return Err(bad("stress_map.steps", "must be at least 2"));
        }
        if let Some(k) = m.slices_deg.iter().position(|s| !(0.0..=90.0).contains(s)) {
            return Err(bad(&format!("stress_map.slices_deg[{k}]"), "must lie in [0, 90]"));
        }
        for (k, v) in [
            ("stress_map.delta_max_mm", m.delta_max_mm),
            ("stress_map.theta_max_deg", m.theta_max_deg),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(k, "must be positive"));
            }
        }
        if let Some(o) = &self.optimization {
            if o.variables.is_empty() {
                return Err(bad("optimization.variables", "needs at least one variable"));
            }
            for (k, v) in o.variables.iter().enumerate() {
                if !(v.lo.is_finite() && v.hi.is_finite() && v.lo < v.hi) {
                    return Err(bad(&format!("optimization.variables[{k}]"), "needs finite lo < hi"));
                }
            }
            if let Some(p) = &o.primary {
                self.target_index(Some(p), "optimization.primary")?;
            }
            if o.search_n_alpha < 8 || !o.search_n_alpha.is_multiple_of(4) {
                return Err(bad(
                    "optimization.search_n_alpha",
                    "must be a multiple of 4 and at least 8",
                ));
            }
            if o.search_n_sep < 1 {
                return Err(bad("optimization.search_n_sep", "must be at least 1"));
            }
        }
        if let Some(s) = &self.simulation {
            if !self.trajectories.iter().any(|t| t.name == s.trajectory) {
                return Err(bad(
                    "simulation.trajectory",
                    format!("no trajectory named {:?}", s.trajectory),
                ));
            }
            if let Some(t) = &s.target {
                self.target_index(Some(t), "simulation.target")?;
            }
        }
        Ok(())
    }

    pub fn target_index(&self, name: Option<&String>, key: &str) -> Result<usize, ConfigError> {
        if self.targets.is_empty() {
            return Err(bad("stress", "no stress targets configured"));
        }
        match name {
            None => Ok(0),
            Some(n) => self
                .targets
                .iter()
                .position(|t| &t.name == n)
                .ok_or_else(|| bad(key, format!("no stress target named {n:?}"))),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn grid(&self) -> DirectionGrid {
        self.grid_with(self.grid.n_alpha, self.grid.n_sep)
    }

    pub fn grid_with(&self, n_alpha: usize, n_sep: usize) -> DirectionGrid {
        let scale = AxisScale {
            delta_ref: self.grid.delta_ref_mm,
            theta_ref: self.grid.theta_ref_deg.to_radians(),
        };
        DirectionGrid { n_alpha, n_sep, scale }
    }

    pub fn sampling(&self) -> SamplingOptions {
        SamplingOptions {
            density: self.sampling.density,
            min_points: self.sampling.min_points,
        }
    }

    pub fn pair(&self) -> hardstop::Result<HardStopPair> {
        let g = &self.geometry;
        let profile =
            |p: &ProfileConfig| TorusCapProfile::from_degrees(p.d_l, p.d_s, p.r_c, p.theta_o_deg, p.clip_diameter);
        HardStopPair::new(profile(&g.stage)?, profile(&g.ground)?, g.z_ab, g.z_oa, g.z_lo)
    }

    pub fn model(&self, k: usize) -> anyhow::Result<StressModel> {
        let key = format!("stress[{k}].model");
        Ok(match &self.targets[k].model {
            ModelConfig::Linear {
                r_delta_mpa_per_mm,
                r_theta_mpa_per_deg,
            } => StressModel::linear(*r_delta_mpa_per_mm, *r_theta_mpa_per_deg)?,
            ModelConfig::Radial { r_prime_mpa } => StressModel::radial(*r_prime_mpa, self.grid().scale)?,
            ModelConfig::Beam {
                length_mm,
                modulus_mpa,
                diameter_mm,
                axial_force_n,
            } => StressModel::beam(*length_mm, *modulus_mpa, *diameter_mm, *axial_force_n)?,
            ModelConfig::Tabulated {
                path,
                axial_force_n,
                theta_z_deg,
            } => {
                let file = fs::File::open(path)
                    .map_err(|e| bad(&format!("{key}.path"), format!("cannot open {}: {e}", path.display())))?;
                let meta = TabulatedMeta {
                    axial_force: *axial_force_n,
                    theta_z: theta_z_deg.map(f64::to_radians),
                };
                StressModel::load_tabulated(std::io::BufReader::new(file), meta)
                    .map_err(|e| anyhow::Error::new(e).context(format!("reading {}", path.display())))?
            }
        })
    }

    pub fn stress_targets(&self) -> anyhow::Result<Vec<StressTarget>> {
        (0..self.targets.len())
            .map(|k| {
                let t = &self.targets[k];
                Ok(StressTarget {
                    name: t.name.clone(),
                    model: self.model(k)?,
                    sigma_cr: t.sigma_cr_mpa,
                    role: t.role,
                })
            })
            .collect()
    }

    pub fn trajectories(&self) -> anyhow::Result<Vec<Trajectory>> {
        self.trajectories
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let file = fs::File::open(&t.path).map_err(|e| {
                    bad(
                        &format!("trajectories[{k}].path"),
                        format!("cannot open {}: {e}", t.path.display()),
                    )
                })?;
                Trajectory::read_csv(t.name.clone(), std::io::BufReader::new(file))
                    .map_err(|e| anyhow::Error::new(e).context(format!("reading {}", t.path.display())))
            })
            .collect()
    }

    /// The configured precomputed contact boundary, if any.
    pub fn hs_boundary(&self) -> anyhow::Result<Option<RadialBoundaryField>> {
        let Some(path) = &self.hs_boundary else {
            return Ok(None);
        };
        let file =
            fs::File::open(path).map_err(|e| bad("hs_boundary", format!("cannot open {}: {e}", path.display())))?;
        let f = RadialBoundaryField::read_csv(
            std::io::BufReader::new(file),
            self.grid(),
            self.delta_z_mm,
            BoundaryLabel::HardStop,
        )
        .map_err(|e| anyhow::Error::new(e).context(format!("reading {}", path.display())))?;
        Ok(Some(f))
    }

    pub fn design_variables(&self) -> Vec<DesignVariable> {
        self.optimization
            .iter()
            .flat_map(|o| &o.variables)
            .map(|v| DesignVariable {
                param: v.param,
                lo: v.lo,
                hi: v.hi,
            })
            .collect()
    }

    pub fn surge(&self) -> Option<Surge> {
        self.simulation.as_ref().map(|s| Surge {
            peak_multiplier: s.peak_multiplier,
            width_steps: s.width_steps,
            center_pct: s.center_pct,
        })
    }
}

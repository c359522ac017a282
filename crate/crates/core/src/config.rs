//! File-based configuration shared by the library and the CLI.
//!
//! Every section rejects unknown keys and every field is range-checked by
//! [`Config::validate`]. Values can be overridden from the environment with
//! `ONEMAP_<SECTION>_<KEY>` (for example `ONEMAP_DETECTOR_FP_RATE=0.3`).

use serde::{Deserialize, Serialize};

use crate::belief_map::{BlurParams, FeatureVarianceForm, MappingParams, VarianceParams};
use crate::error::{Error, Result};
use crate::exploration::{FrontierParams, OccupancyParams};
use crate::sim::{CameraParams, DetectorParams, WorldParams};

pub const ENV_PREFIX: &str = "ONEMAP_";

/// Environment names that belong to CLI flags rather than config keys.
pub const RESERVED_ENV: &[&str] = &["CONFIG", "SEED", "JOBS", "OUT"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingConfig {
    pub prior_variance: f64,
    /// Optimal feature extraction distance (meters).
    pub d_opt: f64,
    pub eps_var: f64,
    pub variance_form: FeatureVarianceForm,
    /// Depth-noise coefficient of the blur kernel: σ_d² = p · d².
    pub p: f64,
    /// Kernel truncation radius in standard deviations.
    pub truncation: f64,
    pub literal_variance_weights: bool,
}

impl Default for MappingConfig {
    fn default() -> Self {
        let v = VarianceParams::default();
        let b = BlurParams::default();
        Self {
            prior_variance: 1.0,
            d_opt: v.d_opt,
            eps_var: v.eps_var,
            variance_form: v.form,
            p: b.p,
            truncation: b.truncation,
            literal_variance_weights: false,
        }
    }
}

impl MappingConfig {
    pub fn params(&self) -> MappingParams {
        MappingParams {
            variance: VarianceParams {
                d_opt: self.d_opt,
                eps_var: self.eps_var,
                form: self.variance_form,
            },
            blur: BlurParams {
                p: self.p,
                truncation: self.truncation,
            },
            literal_variance_weights: self.literal_variance_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub distractor_overlap: f64,
    /// Image pixels per feature patch side.
    pub patch_size: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            feature_dim: 16,
            noise_sigma: 0.1,
            distractor_overlap: 0.3,
            patch_size: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplorationConfig {
    pub tau_e: f64,
    pub tau_c: f64,
    pub tau_sim: f64,
    pub consensus: bool,
    /// Accept detections in the top this-many percent of observed similarity.
    pub consensus_percentile: f64,
    pub min_frontier_length: usize,
    pub obstacle_height: f64,
    pub footprint_radius: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        let o = OccupancyParams::default();
        Self {
            tau_e: 0.3,
            tau_c: 0.3,
            tau_sim: 0.35,
            consensus: true,
            consensus_percentile: 5.0,
            min_frontier_length: FrontierParams::default().min_length,
            obstacle_height: o.obstacle_height,
            footprint_radius: o.footprint_radius,
        }
    }
}

impl ExplorationConfig {
    pub fn occupancy(&self) -> OccupancyParams {
        OccupancyParams {
            obstacle_height: self.obstacle_height,
            footprint_radius: self.footprint_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanningConfig {
    /// Obstacle inflation (meters).
    pub agent_radius: f64,
    /// Goals off the navigable map snap to free cells within this radius (meters).
    pub snap_radius: f64,
    /// Re-select goals every this many steps.
    pub replan_every: usize,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        Self {
            agent_radius: 0.2,
            snap_radius: 1.5,
            replan_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Meters per forward step.
    pub step_size: f64,
    pub turn_deg: f64,
    /// Turn a full circle at the start of an object goal unless the map
    /// already holds a high-similarity cluster for the category.
    pub initial_spin: bool,
    /// Steps allowed per object goal.
    pub step_budget: usize,
    /// A goal counts as found within this distance of an instance (meters).
    pub success_radius: f64,
    /// The agent stops this close to an accepted detection (meters).
    pub approach_radius: f64,
    /// Keep the map between the goals of an episode.
    pub reuse_map: bool,
    /// Radius around reached or unreachable goal targets that is skipped
    /// for the rest of the current object (meters).
    pub visited_goal_radius: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            step_size: 0.25,
            turn_deg: 30.0,
            initial_spin: true,
            step_budget: 500,
            success_radius: 1.5,
            approach_radius: 1.4,
            reuse_map: true,
            visited_goal_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_worlds: usize,
    pub n_episodes: usize,
    pub seq_len: usize,
    /// Minimum distance between consecutive search regions (meters).
    pub min_leg_distance: f64,
    /// Start each episode beside an object of a category that is not a goal.
    pub anchor_start: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_worlds: 10,
            n_episodes: 100,
            seq_len: 3,
            min_leg_distance: 0.2,
            anchor_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub mapping: MappingConfig,
    pub embedding: EmbeddingConfig,
    pub exploration: ExplorationConfig,
    pub planning: PlanningConfig,
    pub agent: AgentConfig,
    pub camera: CameraParams,
    pub detector: DetectorParams,
    pub world: WorldParams,
    pub dataset: DatasetConfig,
}

const SECTIONS: &[&str] = &[
    "mapping",
    "embedding",
    "exploration",
    "planning",
    "agent",
    "camera",
    "detector",
    "world",
    "dataset",
];

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(what.to_string()))
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parses `text`, applies `ONEMAP_*` overrides from `vars`, then validates.
    pub fn from_toml_with_env(text: &str, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        apply_env_overrides(&mut table, vars)?;
        let cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mapping;
        check(m.prior_variance > 0.0, "mapping.prior_variance must be positive")?;
        check(m.d_opt > 0.0, "mapping.d_opt must be positive")?;
        check(m.eps_var > 0.0 && m.eps_var < m.prior_variance, "mapping.eps_var must lie in (0, prior_variance)")?;
        check(m.p >= 0.0 && m.p.is_finite(), "mapping.p must be non-negative")?;
        check(m.truncation > 0.0, "mapping.truncation must be positive")?;

        let e = &self.embedding;
        check(e.feature_dim > 0, "embedding.feature_dim must be positive")?;
        check(e.noise_sigma >= 0.0, "embedding.noise_sigma must be non-negative")?;
        check((0.0..1.0).contains(&e.distractor_overlap), "embedding.distractor_overlap must lie in [0, 1)")?;
        check(e.patch_size > 0, "embedding.patch_size must be positive")?;
        check(
            self.camera.width % e.patch_size == 0 && self.camera.height % e.patch_size == 0,
            "camera width and height must be multiples of embedding.patch_size",
        )?;

        let x = &self.exploration;
        let prior = m.prior_variance;
        check(x.tau_e > 0.0 && x.tau_e < prior, "exploration.tau_e must lie in (0, prior_variance)")?;
        check(x.tau_c > 0.0 && x.tau_c < prior, "exploration.tau_c must lie in (0, prior_variance)")?;
        check(x.tau_sim > -1.0 && x.tau_sim < 1.0, "exploration.tau_sim must lie in (-1, 1)")?;
        check(
            x.consensus_percentile > 0.0 && x.consensus_percentile < 100.0,
            "exploration.consensus_percentile must lie in (0, 100)",
        )?;
        check(x.min_frontier_length >= 1, "exploration.min_frontier_length must be at least 1")?;
        check(x.obstacle_height >= 0.0, "exploration.obstacle_height must be non-negative")?;
        check(x.footprint_radius >= 0.0, "exploration.footprint_radius must be non-negative")?;

        let p = &self.planning;
        check(p.agent_radius >= 0.0, "planning.agent_radius must be non-negative")?;
        check(p.snap_radius >= 0.0, "planning.snap_radius must be non-negative")?;
        check(p.replan_every >= 1, "planning.replan_every must be at least 1")?;
        check(
            x.footprint_radius <= p.agent_radius,
            "exploration.footprint_radius may not exceed planning.agent_radius",
        )?;

        let a = &self.agent;
        check(a.step_size > 0.0, "agent.step_size must be positive")?;
        check(a.turn_deg > 0.0 && a.turn_deg <= 180.0, "agent.turn_deg must lie in (0, 180]")?;
        check(a.step_budget > 0, "agent.step_budget must be positive")?;
        check(a.success_radius > 0.0, "agent.success_radius must be positive")?;
        check(
            a.approach_radius > 0.0 && a.approach_radius <= a.success_radius,
            "agent.approach_radius must lie in (0, success_radius]",
        )?;
        check(a.visited_goal_radius >= 0.0, "agent.visited_goal_radius must be non-negative")?;

        self.camera.validate()?;
        self.detector.validate()?;
        self.world.validate().map_err(|e| Error::Config(e.to_string()))?;
        let missing = self.world.categories.iter().any(|c| c == crate::embedding::VOID_LABEL);
        check(!missing, "world.categories may not contain the reserved label 'void'")?;

        let d = &self.dataset;
        check(d.n_worlds > 0 || d.n_episodes == 0, "dataset.n_worlds must be positive when episodes are requested")?;
        check(d.seq_len >= 1, "dataset.seq_len must be at least 1")?;
        check(d.min_leg_distance >= 0.0, "dataset.min_leg_distance must be non-negative")?;
        Ok(())
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrap {
        v: toml::Value,
    }
    toml::from_str::<Wrap>(&format!("v = {raw}"))
        .map(|w| w.v)
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()))
}

/// Applies `ONEMAP_<SECTION>_<KEY>=value` and `ONEMAP_<KEY>=value` overrides.
/// Values are read as TOML scalars, falling back to strings.
pub fn apply_env_overrides(table: &mut toml::Table, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_string(), v)))
        .filter(|(k, _)| !RESERVED_ENV.contains(&k.as_str()))
        .collect();
    vars.sort();
    for (name, raw) in vars {
        let lower = name.to_ascii_lowercase();
        let value = parse_scalar(&raw);
        match SECTIONS.iter().find(|s| lower.starts_with(&format!("{s}_"))) {
            Some(section) => {
                let key = lower[section.len() + 1..].to_string();
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                let toml::Value::Table(sub) = entry else {
                    return Err(Error::Config(format!("{section} is not a table")));
                };
                sub.insert(key, value);
            }
            None => {
                table.insert(lower, value);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml("[mapping]\nd_optimal = 2.0\n").is_err());
        assert!(Config::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(Config::from_toml("[exploration]\ntau_e = 1.5\n").is_err());
        assert!(Config::from_toml("[detector]\nfp_rate = 2.0\n").is_err());
        assert!(Config::from_toml("[camera]\nwidth = 4\n").is_err());
    }

    #[test]
    fn env_overrides_apply() {
        let vars = vec![
            ("ONEMAP_DETECTOR_FP_RATE".to_string(), "0.3".to_string()),
            ("ONEMAP_AGENT_REUSE_MAP".to_string(), "false".to_string()),
            ("ONEMAP_CONFIG".to_string(), "ignored.toml".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let c = Config::from_toml_with_env("", vars).unwrap();
        assert_eq!(c.detector.fp_rate, 0.3);
        assert!(!c.agent.reuse_map);
    }

    #[test]
    fn bad_env_override_is_an_error() {
        let vars = vec![("ONEMAP_MAPPING_NOPE".to_string(), "1".to_string())];
        assert!(Config::from_toml_with_env("", vars).is_err());
    }
}

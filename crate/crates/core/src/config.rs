//! Scenario and training configuration.
//!
//! Configs are TOML or JSON documents with two sections, `scenario` and `rl`.
//! Every field has a default, so an empty file yields the reference scenario.
//! Power fields carry a `_dbm` suffix, distances `_m`, frequencies `_hz`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Orientation of the similarity term inside the QoE product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoeOrientation {
    /// `Θa(1 - ξ)`, as the objective is printed.
    AsPaper,
    /// `Θa(ξ)`: higher similarity raises QoE.
    SimilarityReward,
}

/// How a transmit power is mapped before the logistic `Θb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormalization {
    /// `(P - P_min) / (P_max - P_min)` with powers in dBm.
    MinmaxDbm,
    /// Raw power in watts.
    Watts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Rayleigh fast fading redrawn every step.
    Rayleigh,
    /// Rayleigh fading drawn once per episode and then held.
    FrozenPerEpisode,
    /// `|g|^2 = 1` on every link.
    Unity,
}

/// Who keeps a subband when several V2V pairs request it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictRule {
    LowestIndex,
    HighestGain,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimilarityConfig {
    Parametric {
        #[serde(default = "defaults::xi_max")]
        xi_max: f64,
        #[serde(default = "defaults::slope")]
        slope: f64,
        #[serde(default = "defaults::g0_db")]
        g0_db: f64,
        #[serde(default = "defaults::g1_db")]
        g1_db: f64,
    },
    /// CSV grid with header `u,sinr_db,xi`; relative paths resolve against
    /// the config file's directory.
    Table { path: PathBuf },
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig::Parametric {
            xi_max: defaults::xi_max(),
            slope: defaults::slope(),
            g0_db: defaults::g0_db(),
            g1_db: defaults::g1_db(),
        }
    }
}

mod defaults {
    pub fn xi_max() -> f64 {
        0.995
    }
    pub fn slope() -> f64 {
        0.3
    }
    pub fn g0_db() -> f64 {
        15.0
    }
    pub fn g1_db() -> f64 {
        2.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Embodied vehicles `I`.
    pub num_vehicles: usize,
    /// V2I links `W`; follows `num_vehicles` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_v2i: Option<usize>,
    /// V2V pairs `Q`; follows `num_vehicles` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_v2v: Option<usize>,

    pub carrier_freq_hz: f64,
    pub bs_height_m: f64,
    pub vehicle_height_m: f64,
    pub lane_width_m: f64,
    pub num_lanes: usize,
    pub road_length_m: f64,
    /// Lateral distance from the road edge to the base station mast.
    pub bs_offset_m: f64,
    pub vehicle_speed_mps: f64,
    pub pair_gap_min_m: f64,
    pub pair_gap_max_m: f64,

    pub v2i_power_dbm: f64,
    pub v2v_power_levels_dbm: Vec<f64>,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub noise_a_dbm: f64,
    pub noise_b_dbm: f64,
    pub shadow_sigma_v2i_db: f64,
    pub shadow_sigma_v2v_db: f64,
    pub fading: FadingMode,

    pub xi_threshold: f64,
    pub sinr_threshold_db: f64,
    pub u_max: u32,
    pub similarity: SimilarityConfig,
    pub qoe_orientation: QoeOrientation,
    pub theta_b_power_normalization: PowerNormalization,

    pub demand_words: f64,
    pub step_duration_s: f64,
    pub episode_steps: usize,
    pub bandwidth_per_subband_hz: f64,
    pub bits_per_semantic_symbol: f64,

    pub conflict_resolution: ConflictRule,
    /// Append remaining-demand and remaining-time fractions to the state.
    pub state_extras: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_vehicles: 4,
            num_v2i: None,
            num_v2v: None,
            carrier_freq_hz: 1e9,
            bs_height_m: 25.0,
            vehicle_height_m: 1.5,
            lane_width_m: 3.5,
            num_lanes: 4,
            road_length_m: 400.0,
            bs_offset_m: 35.0,
            vehicle_speed_mps: 15.0,
            pair_gap_min_m: 5.0,
            pair_gap_max_m: 15.0,
            v2i_power_dbm: 23.0,
            v2v_power_levels_dbm: vec![-100.0, 5.0, 15.0, 23.0],
            p_min_dbm: -100.0,
            p_max_dbm: 23.0,
            noise_a_dbm: -114.0,
            noise_b_dbm: -114.0,
            shadow_sigma_v2i_db: 3.0,
            shadow_sigma_v2v_db: 8.0,
            fading: FadingMode::Rayleigh,
            xi_threshold: 0.3,
            sinr_threshold_db: 10.0,
            u_max: 4,
            similarity: SimilarityConfig::default(),
            qoe_orientation: QoeOrientation::SimilarityReward,
            theta_b_power_normalization: PowerNormalization::MinmaxDbm,
            demand_words: 800.0,
            step_duration_s: 1e-3,
            episode_steps: 100,
            bandwidth_per_subband_hz: 180e3,
            bits_per_semantic_symbol: 16.0,
            conflict_resolution: ConflictRule::LowestIndex,
            state_extras: false,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn num_v2i_links(&self) -> usize {
        self.num_v2i.unwrap_or(self.num_vehicles)
    }

    pub fn num_v2v_pairs(&self) -> usize {
        self.num_v2v.unwrap_or(self.num_vehicles)
    }

    pub fn num_power_levels(&self) -> usize {
        self.v2v_power_levels_dbm.len()
    }

    pub fn validate(&self) -> Result<()> {
        let at_least = |field: &str, v: usize, min: usize| {
            if v < min {
                Err(Error::invalid(field, format!("must be >= {min}, got {v}")))
            } else {
                Ok(())
            }
        };
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive, got {v}")))
            }
        };
        at_least("num_vehicles", self.num_vehicles, 1)?;
        at_least("num_v2i", self.num_v2i_links(), 1)?;
        at_least("num_v2v", self.num_v2v_pairs(), 1)?;
        at_least("num_lanes", self.num_lanes, 1)?;
        at_least("episode_steps", self.episode_steps, 1)?;
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("bs_height_m", self.bs_height_m)?;
        positive("vehicle_height_m", self.vehicle_height_m)?;
        positive("lane_width_m", self.lane_width_m)?;
        positive("road_length_m", self.road_length_m)?;
        positive("step_duration_s", self.step_duration_s)?;
        positive("bandwidth_per_subband_hz", self.bandwidth_per_subband_hz)?;
        positive("bits_per_semantic_symbol", self.bits_per_semantic_symbol)?;
        if !(self.bs_offset_m >= 0.0) {
            return Err(Error::invalid("bs_offset_m", "must be non-negative"));
        }
        if !(self.vehicle_speed_mps >= 0.0) {
            return Err(Error::invalid("vehicle_speed_mps", "must be non-negative"));
        }
        if !(self.pair_gap_min_m > 0.0 && self.pair_gap_min_m <= self.pair_gap_max_m) {
            return Err(Error::invalid(
                "pair_gap_min_m",
                "need 0 < pair_gap_min_m <= pair_gap_max_m",
            ));
        }
        if !(self.p_min_dbm < self.p_max_dbm) {
            return Err(Error::invalid("p_min_dbm", "must be below p_max_dbm"));
        }
        let levels = &self.v2v_power_levels_dbm;
        if levels.is_empty() {
            return Err(Error::invalid("v2v_power_levels_dbm", "must be non-empty"));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "v2v_power_levels_dbm",
                "must be strictly increasing",
            ));
        }
        if levels
            .iter()
            .any(|&p| !(p >= self.p_min_dbm && p <= self.p_max_dbm))
        {
            return Err(Error::invalid(
                "v2v_power_levels_dbm",
                format!(
                    "every level must lie in [{}, {}] dBm",
                    self.p_min_dbm, self.p_max_dbm
                ),
            ));
        }
        if !(self.shadow_sigma_v2i_db >= 0.0) {
            return Err(Error::invalid("shadow_sigma_v2i_db", "must be non-negative"));
        }
        if !(self.shadow_sigma_v2v_db >= 0.0) {
            return Err(Error::invalid("shadow_sigma_v2v_db", "must be non-negative"));
        }
        if !(self.xi_threshold > 0.0 && self.xi_threshold < 1.0) {
            return Err(Error::invalid(
                "xi_threshold",
                format!("must lie in (0, 1), got {}", self.xi_threshold),
            ));
        }
        if !self.sinr_threshold_db.is_finite() {
            return Err(Error::invalid("sinr_threshold_db", "must be finite"));
        }
        if self.u_max < 1 {
            return Err(Error::invalid("u_max", "must be >= 1"));
        }
        if !(self.demand_words >= 0.0) {
            return Err(Error::invalid("demand_words", "must be non-negative"));
        }
        if let SimilarityConfig::Parametric {
            xi_max,
            slope,
            g1_db,
            ..
        } = &self.similarity
        {
            if !(*xi_max > 0.0 && *xi_max <= 1.0) {
                return Err(Error::invalid("similarity.xi_max", "must lie in (0, 1]"));
            }
            if !(*slope > 0.0) {
                return Err(Error::invalid("similarity.slope", "must be positive"));
            }
            if !(*g1_db >= 0.0) {
                return Err(Error::invalid("similarity.g1_db", "must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Target used to fit the critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueTarget {
    /// `A_t + V(s_t)` from the GAE recursion.
    Gae,
    /// `r_t + γ V(s_{t+1})`.
    OneStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Categorical,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub iterations: usize,
    pub steps_per_iteration: usize,
    pub minibatch_size: usize,
    pub epochs_per_update: usize,
    /// λ₁, weight of the similarity-threshold penalty.
    pub penalty_similarity: f64,
    /// λ₂, weight of the SINR-threshold penalty (per dB of shortfall).
    pub penalty_sinr: f64,
    pub hidden_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub entropy_coef: f64,
    pub num_envs: usize,
    pub value_target: ValueTarget,
    pub head: HeadKind,
    pub initial_log_std: f64,
    pub max_grad_norm: Option<f64>,
    /// Fit the critic on standardized targets, rescaling its output layer
    /// when the running statistics move.
    pub normalize_values: bool,
    pub checkpoint_every: usize,
    pub eval_episodes: usize,
    pub record_wallclock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            discount: 0.99,
            gae_lambda: 0.95,
            clip: 0.5,
            lr_initial: 1e-4,
            lr_final: 1e-8,
            iterations: 100,
            steps_per_iteration: 2048,
            minibatch_size: 256,
            epochs_per_update: 4,
            penalty_similarity: 1.0,
            penalty_sinr: 1.0,
            hidden_sizes: vec![512, 512, 512],
            seeds: vec![0, 1, 2, 3, 4],
            entropy_coef: 0.01,
            num_envs: 4,
            value_target: ValueTarget::Gae,
            head: HeadKind::Categorical,
            initial_log_std: -0.5,
            max_grad_norm: None,
            normalize_values: true,
            checkpoint_every: 10,
            eval_episodes: 20,
            record_wallclock: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::invalid("discount", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::invalid("gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.clip > 0.0) {
            return Err(Error::invalid("clip", "must be positive"));
        }
        if !(self.lr_final > 0.0 && self.lr_initial > 0.0) {
            return Err(Error::invalid("lr_initial", "learning rates must be positive"));
        }
        if self.lr_final > self.lr_initial {
            return Err(Error::invalid("lr_final", "must not exceed lr_initial"));
        }
        for (field, v) in [
            ("iterations", self.iterations),
            ("steps_per_iteration", self.steps_per_iteration),
            ("minibatch_size", self.minibatch_size),
            ("epochs_per_update", self.epochs_per_update),
            ("num_envs", self.num_envs),
            ("checkpoint_every", self.checkpoint_every),
        ] {
            if v == 0 {
                return Err(Error::invalid(field, "must be >= 1"));
            }
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::invalid(
                "hidden_sizes",
                "need at least one hidden layer, all sizes >= 1",
            ));
        }
        if !(self.penalty_similarity >= 0.0 && self.penalty_sinr >= 0.0) {
            return Err(Error::invalid("penalty_sinr", "penalties must be non-negative"));
        }
        if !(self.entropy_coef >= 0.0) {
            return Err(Error::invalid("entropy_coef", "must be non-negative"));
        }
        if let Some(g) = self.max_grad_norm {
            if !(g > 0.0) {
                return Err(Error::invalid("max_grad_norm", "must be positive"));
            }
        }
        Ok(())
    }

    /// Label used in manifests and aggregate CSVs.
    pub fn method_label(&self) -> &'static str {
        if self.gae_lambda == 0.0 {
            "ppo"
        } else {
            "gae-ppo"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub rl: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.rl.validate()
    }

    pub fn parse(text: &str, format: ConfigFormat, origin: &str) -> Result<Self> {
        Self::parse_with_overrides(text, format, origin, &[])
    }

    /// Parses a document, applies `section.key=value` overrides, then validates.
    pub fn parse_with_overrides(
        text: &str,
        format: ConfigFormat,
        origin: &str,
        overrides: &[String],
    ) -> Result<Self> {
        let mut tree: Value = match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::Parse {
                path: origin.to_string(),
                message: e.to_string(),
            })?,
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| Error::Parse {
                path: origin.to_string(),
                message: format!("line {} column {}: {e}", e.line(), e.column()),
            })?,
        };
        for ov in overrides {
            apply_override(&mut tree, ov)?;
        }
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(tree).map_err(|e| Error::Parse {
                path: origin.to_string(),
                message: format!("field `{}`: {}", e.path(), e.inner()),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: "<serialize>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Loads a config file and resolves relative table paths against its directory.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = ExperimentConfig::parse_with_overrides(
        &text,
        ConfigFormat::from_path(path),
        &path.display().to_string(),
        overrides,
    )?;
    if let SimilarityConfig::Table { path: table } = &mut cfg.scenario.similarity {
        if table.is_relative() {
            if let Some(dir) = path.parent() {
                *table = dir.join(&*table);
            }
        }
    }
    Ok(cfg)
}

fn apply_override(tree: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::invalid(spec, "override must look like section.key=value"))?;
    let key = key.trim();
    let value = parse_override_value(raw.trim());
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::invalid(key, "empty path segment"));
        }
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Override values are TOML literals; anything unparsable is kept as a string.
fn parse_override_value(raw: &str) -> Value {
    #[derive(Deserialize)]
    struct Wrapper {
        v: Value,
    }
    match toml::from_str::<Wrapper>(&format!("v = {raw}")) {
        Ok(w) => w.v,
        Err(_) => Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_yields_reference_values() {
        let cfg = ExperimentConfig::parse("", ConfigFormat::Toml, "<mem>").unwrap();
        assert_eq!(
            cfg.scenario.v2v_power_levels_dbm,
            vec![-100.0, 5.0, 15.0, 23.0]
        );
        assert_eq!(cfg.rl.discount, 0.99);
        assert_eq!(cfg.rl.clip, 0.5);
        assert_eq!(cfg.rl.lr_initial, 1e-4);
        assert_eq!(cfg.rl.lr_final, 1e-8);
        assert_eq!(cfg.scenario.v2i_power_dbm, 23.0);
        assert_eq!(cfg.scenario.noise_a_dbm, -114.0);
        assert_eq!(cfg.scenario.shadow_sigma_v2i_db, 3.0);
        assert_eq!(cfg.scenario.shadow_sigma_v2v_db, 8.0);
        assert_eq!(cfg.scenario.xi_threshold, 0.3);
        assert_eq!(cfg.scenario.sinr_threshold_db, 10.0);
        assert_eq!(cfg.scenario.num_v2i_links(), 4);
        assert_eq!(cfg.scenario.num_v2v_pairs(), 4);
    }

    #[test]
    fn out_of_range_threshold_names_field() {
        let err = ExperimentConfig::parse(
            "[scenario]\nxi_threshold = 1.5\n",
            ConfigFormat::Toml,
            "<mem>",
        )
        .unwrap_err();
        assert!(err.to_string().contains("xi_threshold"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = ExperimentConfig::parse(
            "[scenario]\nnum_vehicles = 4\nu_max = = 3\n",
            ConfigFormat::Toml,
            "cfg.toml",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg.toml") && msg.contains('3'), "{msg}");
    }

    #[test]
    fn type_error_names_field_path() {
        let err = ExperimentConfig::parse(
            r#"{"rl": {"clip": "wide"}}"#,
            ConfigFormat::Json,
            "cfg.json",
        )
        .unwrap_err();
        assert!(err.to_string().contains("rl.clip"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ExperimentConfig::parse(
            "[scenario]\nnum_vehicle = 4\n",
            ConfigFormat::Toml,
            "<mem>"
        )
        .is_err());
    }

    #[test]
    fn power_levels_must_stay_in_range() {
        let err = ExperimentConfig::parse(
            "[scenario]\nv2v_power_levels_dbm = [-100.0, 30.0]\n",
            ConfigFormat::Toml,
            "<mem>",
        )
        .unwrap_err();
        assert!(err.to_string().contains("v2v_power_levels_dbm"));
        assert!(ExperimentConfig::parse(
            "[scenario]\nv2v_power_levels_dbm = [15.0, 5.0]\n",
            ConfigFormat::Toml,
            "<mem>"
        )
        .is_err());
    }

    #[test]
    fn train_invariants() {
        for doc in [
            "[rl]\ndiscount = 1.2\n",
            "[rl]\ngae_lambda = -0.1\n",
            "[rl]\nclip = 0.0\n",
            "[rl]\nlr_initial = 1e-6\nlr_final = 1e-4\n",
        ] {
            assert!(
                ExperimentConfig::parse(doc, ConfigFormat::Toml, "<mem>").is_err(),
                "{doc}"
            );
        }
    }

    #[test]
    fn overrides_use_dotted_paths() {
        let cfg = ExperimentConfig::parse_with_overrides(
            "",
            ConfigFormat::Toml,
            "<mem>",
            &[
                "rl.gae_lambda=0".into(),
                "scenario.num_vehicles=8".into(),
                "scenario.qoe_orientation=as_paper".into(),
                "rl.hidden_sizes=[8, 8]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.rl.gae_lambda, 0.0);
        assert_eq!(cfg.rl.method_label(), "ppo");
        assert_eq!(cfg.scenario.num_vehicles, 8);
        assert_eq!(cfg.scenario.num_v2v_pairs(), 8);
        assert_eq!(cfg.scenario.qoe_orientation, QoeOrientation::AsPaper);
        assert_eq!(cfg.rl.hidden_sizes, vec![8, 8]);
        assert!(ExperimentConfig::parse_with_overrides(
            "",
            ConfigFormat::Toml,
            "<mem>",
            &["rl.gae_lambda".into()]
        )
        .is_err());
    }

    #[test]
    fn table_similarity_parses() {
        let cfg = ExperimentConfig::parse(
            "[scenario.similarity]\nkind = \"table\"\npath = \"xi.csv\"\n",
            ConfigFormat::Toml,
            "<mem>",
        )
        .unwrap();
        assert_eq!(
            cfg.scenario.similarity,
            SimilarityConfig::Table {
                path: PathBuf::from("xi.csv")
            }
        );
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            1usize..20,
            prop::option::of(1usize..20),
            0.01f64..0.99,
            1u32..8,
            0.0f64..=1.0,
            0.0f64..=1.0,
            0u64..(i64::MAX as u64),
            prop::bool::ANY,
        )
            .prop_map(|(n, w, xi, u, gamma, lam, seed, extras)| {
                let mut c = ExperimentConfig::default();
                c.scenario.num_vehicles = n;
                c.scenario.num_v2i = w;
                c.scenario.xi_threshold = xi;
                c.scenario.u_max = u;
                c.scenario.seed = seed;
                c.scenario.state_extras = extras;
                c.scenario.fading = FadingMode::FrozenPerEpisode;
                c.rl.discount = gamma;
                c.rl.gae_lambda = lam;
                c.rl.max_grad_norm = Some(0.5);
                c
            })
    }

    proptest! {
        #[test]
        fn serialize_reload_is_identity(cfg in arb_config()) {
            let toml_text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::parse(&toml_text, ConfigFormat::Toml, "<toml>").unwrap();
            prop_assert_eq!(&back, &cfg);
            let json_text = cfg.to_json_string().unwrap();
            let back = ExperimentConfig::parse(&json_text, ConfigFormat::Json, "<json>").unwrap();
            prop_assert_eq!(&back, &cfg);
        }
    }
}

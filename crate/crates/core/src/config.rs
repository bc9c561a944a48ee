//! File-backed scenario configuration for the Euclidean simulation
//! subcommands: agent groups with box-sampled anchors and uniform behavioral
//! bounds, graph initialization, engine options, and the scheme selector.

use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::{AcceptanceMode, AgentProfile, EngineConfig, InteractionGraph};
use crate::error::{Error, Result};
use crate::rng::{streams, substream};
use crate::sdr::Bounds;
use crate::spaces::Euclidean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub space: SpaceConfig,
    pub groups: Vec<GroupConfig>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpaceConfig {
    Euclidean { dim: usize },
}

/// Anchors drawn uniformly from the cube `center ± spread`; behavioral
/// parameters drawn uniformly from their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub size: usize,
    pub center: Vec<f64>,
    pub spread: f64,
    pub theta: Bounds,
    pub rho: Bounds,
    pub r: Bounds,
    pub epsilon: Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "topology")]
pub enum GraphConfig {
    #[default]
    Complete,
    Knn {
        k: usize,
    },
    ErdosRenyi {
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineOptions {
    #[serde(default = "default_p_stop")]
    pub p_stop: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub acceptance_mode: AcceptanceMode,
    #[serde(default)]
    pub time_update: bool,
}

fn default_p_stop() -> f64 {
    0.95
}

fn default_max_steps() -> usize {
    500
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            p_stop: default_p_stop(),
            max_steps: default_max_steps(),
            acceptance_mode: AcceptanceMode::Threshold,
            time_update: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default)]
    pub two_stage: bool,
    /// Cluster count for the two-stage scheme; defaults to the group count.
    #[serde(default)]
    pub k: Option<usize>,
}

/// Sampled scenario: space, anchors, agent profiles, and group labels.
pub type SampledScenario = (Euclidean, Vec<Vec<f64>>, Vec<AgentProfile>, Vec<usize>);

impl ScenarioConfig {
    /// All schema violations, each naming the offending field path.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let SpaceConfig::Euclidean { dim } = &self.space;
        if *dim == 0 {
            v.push("space.dim: must be >= 1".into());
        }
        if self.groups.is_empty() {
            v.push("groups: at least one group required".into());
        }
        for (i, g) in self.groups.iter().enumerate() {
            let at = |field: &str, msg: String| format!("groups[{i}].{field}: {msg}");
            if g.size == 0 {
                v.push(at("size", "must be >= 1".into()));
            }
            if g.center.len() != *dim {
                v.push(at(
                    "center",
                    format!("length {} does not match space.dim {dim}", g.center.len()),
                ));
            }
            if !(g.spread >= 0.0) || !g.spread.is_finite() {
                v.push(at(
                    "spread",
                    format!("must be finite and >= 0, got {}", g.spread),
                ));
            }
            for (b, name) in [
                (&g.theta, "theta"),
                (&g.rho, "rho"),
                (&g.r, "r"),
                (&g.epsilon, "epsilon"),
            ] {
                if !b.lo.is_finite() || !b.hi.is_finite() || b.lo > b.hi {
                    v.push(at(name, format!("invalid bounds [{}, {}]", b.lo, b.hi)));
                }
            }
            if g.theta.lo < 0.0 || g.theta.hi > 1.0 {
                v.push(at(
                    "theta",
                    format!("bounds [{}, {}] outside [0, 1]", g.theta.lo, g.theta.hi),
                ));
            }
            if g.rho.lo <= 0.0 {
                v.push(at("rho", format!("lower bound {} must be > 0", g.rho.lo)));
            }
            if g.r.lo < 0.0 {
                v.push(at("r", format!("lower bound {} must be >= 0", g.r.lo)));
            }
            if g.epsilon.lo <= 0.0 {
                v.push(at(
                    "epsilon",
                    format!("lower bound {} must be > 0", g.epsilon.lo),
                ));
            }
        }
        match &self.graph {
            GraphConfig::Knn { k } if *k == 0 => {
                v.push("graph.k: must be >= 1".into());
            }
            GraphConfig::ErdosRenyi { p } if !(0.0..=1.0).contains(p) => {
                v.push(format!("graph.p: {p} outside [0, 1]"));
            }
            _ => {}
        }
        if !(0.0 < self.engine.p_stop && self.engine.p_stop <= 1.0) {
            v.push(format!(
                "engine.p_stop: {} outside (0, 1]",
                self.engine.p_stop
            ));
        }
        if self.engine.max_steps == 0 {
            v.push("engine.max_steps: must be >= 1".into());
        }
        if let Some(k) = self.scheme.k {
            let n: usize = self.groups.iter().map(|g| g.size).sum();
            if k == 0 || k > n {
                v.push(format!("scheme.k: {k} outside 1..={n}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn n_agents(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }

    pub fn cluster_count(&self) -> usize {
        self.scheme.k.unwrap_or(self.groups.len())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            p_stop: self.engine.p_stop,
            max_steps: self.engine.max_steps,
            acceptance_mode: self.engine.acceptance_mode,
            time_update: self.engine.time_update,
            seed: self.seed,
        }
    }

    /// Draws the anchors, profiles, and group labels; deterministic per seed.
    pub fn sample(&self) -> Result<SampledScenario> {
        self.validate()?;
        let SpaceConfig::Euclidean { dim } = self.space;
        let mut rng = substream(self.seed, &[streams::SAMPLING]);
        let mut anchors = Vec::new();
        let mut profiles = Vec::new();
        let mut labels = Vec::new();
        let unit =
            |rng: &mut dyn RngCore| ((rng.next_u64() >> 11) as f64 + 0.5) / 9007199254740992.0;
        for (k, g) in self.groups.iter().enumerate() {
            for _ in 0..g.size {
                let anchor: Vec<f64> = g
                    .center
                    .iter()
                    .map(|&c| c + g.spread * (2.0 * unit(&mut rng) - 1.0))
                    .collect();
                let sample = |b: &Bounds, rng: &mut dyn RngCore| b.lo + (b.hi - b.lo) * unit(rng);
                profiles.push(AgentProfile::new(
                    sample(&g.theta, &mut rng),
                    sample(&g.rho, &mut rng),
                    sample(&g.r, &mut rng),
                    sample(&g.epsilon, &mut rng),
                )?);
                anchors.push(anchor);
                labels.push(k);
            }
        }
        Ok((Euclidean::new(dim), anchors, profiles, labels))
    }

    pub fn build_graph(&self, space: &Euclidean, anchors: &[Vec<f64>]) -> Result<InteractionGraph> {
        match &self.graph {
            GraphConfig::Complete => Ok(InteractionGraph::complete(anchors.len())),
            GraphConfig::Knn { k } => InteractionGraph::knn(space, anchors, *k),
            GraphConfig::ErdosRenyi { p } => {
                InteractionGraph::erdos_renyi(anchors.len(), *p, self.seed)
            }
        }
    }
}

/// Reads and fully validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Generic helper for the sdr/gev scenario files.
pub fn parse_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_json_file<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ScenarioConfig {
        ScenarioConfig {
            space: SpaceConfig::Euclidean { dim: 2 },
            groups: vec![GroupConfig {
                size: 3,
                center: vec![0.0, 0.0],
                spread: 0.5,
                theta: Bounds::new(0.1, 0.4),
                rho: Bounds::new(0.5, 1.0),
                r: Bounds::new(0.0, 1.0),
                epsilon: Bounds::new(0.1, 0.2),
            }],
            graph: GraphConfig::Complete,
            engine: EngineOptions::default(),
            scheme: SchemeConfig::default(),
            seed: 7,
        }
    }

    #[test]
    fn minimal_config_valid_and_round_trips() {
        let config = minimal();
        assert!(config.validate().is_ok());
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        // serialize -> parse -> serialize fixpoint
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn theta_out_of_range_names_the_field() {
        let mut config = minimal();
        config.groups[0].theta = Bounds::new(0.5, 1.2);
        let v = config.violations();
        assert!(v.iter().any(|m| m.contains("groups[0].theta")), "{v:?}");
    }

    #[test]
    fn omitted_optionals_take_defaults() {
        let text = r#"{
            "space": {"kind": "euclidean", "dim": 1},
            "groups": [{
                "size": 2, "center": [0.0], "spread": 0.1,
                "theta": {"lo": 0.1, "hi": 0.2},
                "rho": {"lo": 1.0, "hi": 2.0},
                "r": {"lo": 0.0, "hi": 1.0},
                "epsilon": {"lo": 0.1, "hi": 0.2}
            }],
            "seed": 1
        }"#;
        let config: ScenarioConfig = serde_json::from_str(text).unwrap();
        assert!(!config.engine.time_update);
        assert_eq!(config.engine.p_stop, 0.95);
        assert_eq!(config.engine.max_steps, 500);
        assert_eq!(config.graph, GraphConfig::Complete);
        assert!(!config.scheme.two_stage);
    }

    #[test]
    fn sampling_is_deterministic_and_in_bounds() {
        let config = minimal();
        let (_, anchors, profiles, labels) = config.sample().unwrap();
        let (_, anchors2, _, _) = config.sample().unwrap();
        assert_eq!(anchors, anchors2);
        assert_eq!(labels, vec![0, 0, 0]);
        for a in &anchors {
            for (x, c) in a.iter().zip(&config.groups[0].center) {
                assert!((x - c).abs() <= config.groups[0].spread);
            }
        }
        for p in &profiles {
            assert!((0.1..=0.4).contains(&p.theta));
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = parse_config(Path::new("/nonexistent/config.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn malformed_json_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(parse_config(&path), Err(Error::Config(_))));
    }
}

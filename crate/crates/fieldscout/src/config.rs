//! TOML run configuration. Every section and key is optional; missing values
//! take the library defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use fieldscout_core::gp::KernelKind;
use fieldscout_core::metrics::{
    DEFAULT_DBSCAN_EPS, DEFAULT_DBSCAN_MIN_PTS, DEFAULT_HASH_BITS, DEFAULT_WEED_THRESHOLD,
};
use fieldscout_core::mission::{MissionConfig, SyntheticCosts, Timing};
use fieldscout_core::partition::{
    BspLseParams, HexParams, Method, PartitionSettings, QuadtreeParams, VoronoiParams, WedgeletParams,
    DEFAULT_EVAL_RES,
};
use fieldscout_core::planner::UtilityWeights;
use fieldscout_core::raster::{DEFAULT_GSD, DEFAULT_PATCH_PX};
use fieldscout_core::Point;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub deterministic: bool,
    pub field: FieldSource,
    pub partition: PartitionConfig,
    pub represent: RepresentConfig,
    pub mission: MissionSection,
    pub features: FeatureConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            deterministic: false,
            field: FieldSource::default(),
            partition: PartitionConfig::default(),
            represent: RepresentConfig::default(),
            mission: MissionSection::default(),
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[default]
    Red,
    Green,
    Blue,
    Luma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobConfig {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Ground truth: a raster file or a synthetic blob field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSource {
    /// Raster path; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub channel: Channel,
    pub gsd: f64,
    pub res: usize,
    /// Random blob count, used when `blobs` is empty.
    pub n_blobs: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub noise: f64,
    pub blobs: Vec<BlobConfig>,
}

impl Default for FieldSource {
    fn default() -> Self {
        FieldSource {
            path: None,
            channel: Channel::Red,
            gsd: DEFAULT_GSD,
            res: 256,
            n_blobs: 5,
            radius_min: 0.04,
            radius_max: 0.1,
            noise: 0.0,
            blobs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub grid_cell_px: usize,
    pub quadtree_max_depth: usize,
    pub quadtree_tol: f64,
    pub wedgelet_max_depth: usize,
    pub wedgelet_tol: f64,
    pub wedgelet_angles: usize,
    pub wedgelet_offsets: usize,
    pub bsp_lse_max_depth: usize,
    pub bsp_lse_tol: f64,
    pub bsp_lse_angles: usize,
    pub bsp_lse_offsets: usize,
    pub bsp_lse_refine: usize,
    pub bsp_region_min_px: usize,
    pub hex_base_res: usize,
    pub hex_tol: f64,
    pub voronoi_seeds: usize,
    pub voronoi_iters: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        let s = PartitionSettings::default();
        PartitionConfig {
            grid_cell_px: s.grid_cell_px,
            quadtree_max_depth: s.quadtree.max_depth,
            quadtree_tol: s.quadtree.tol,
            wedgelet_max_depth: s.wedgelet.max_depth,
            wedgelet_tol: s.wedgelet.tol,
            wedgelet_angles: s.wedgelet.angles,
            wedgelet_offsets: s.wedgelet.offsets,
            bsp_lse_max_depth: s.bsp_lse.max_depth,
            bsp_lse_tol: s.bsp_lse.tol,
            bsp_lse_angles: s.bsp_lse.angles,
            bsp_lse_offsets: s.bsp_lse.offsets,
            bsp_lse_refine: s.bsp_lse.refine,
            bsp_region_min_px: s.bsp_region_min_px,
            hex_base_res: s.hexagon.base_res,
            hex_tol: s.hexagon.tol,
            voronoi_seeds: s.voronoi.n_seeds,
            voronoi_iters: s.voronoi.iters,
        }
    }
}

impl PartitionConfig {
    pub fn settings(&self) -> PartitionSettings {
        PartitionSettings {
            grid_cell_px: self.grid_cell_px,
            quadtree: QuadtreeParams {
                max_depth: self.quadtree_max_depth,
                tol: self.quadtree_tol,
            },
            wedgelet: WedgeletParams {
                max_depth: self.wedgelet_max_depth,
                tol: self.wedgelet_tol,
                angles: self.wedgelet_angles,
                offsets: self.wedgelet_offsets,
            },
            bsp_lse: BspLseParams {
                max_depth: self.bsp_lse_max_depth,
                tol: self.bsp_lse_tol,
                angles: self.bsp_lse_angles,
                offsets: self.bsp_lse_offsets,
                refine: self.bsp_lse_refine,
            },
            bsp_region_min_px: self.bsp_region_min_px,
            hexagon: HexParams {
                base_res: self.hex_base_res,
                tol: self.hex_tol,
            },
            voronoi: VoronoiParams {
                n_seeds: self.voronoi_seeds,
                iters: self.voronoi_iters,
                seed: 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepresentConfig {
    pub methods: Vec<String>,
    pub trials: usize,
    /// Pooled GP training samples per trial.
    pub samples: usize,
    pub patch_px: usize,
    pub eval_res: usize,
    pub hash_bits: usize,
    pub fit_restarts: usize,
}

impl Default for RepresentConfig {
    fn default() -> Self {
        RepresentConfig {
            methods: Method::ADAPTIVE.iter().map(|m| m.name().to_string()).collect(),
            trials: 7,
            samples: 100,
            patch_px: DEFAULT_PATCH_PX,
            eval_res: DEFAULT_EVAL_RES,
            hash_bits: DEFAULT_HASH_BITS,
            fit_restarts: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    #[default]
    Matern32,
    Exponential,
}

impl From<KernelName> for KernelKind {
    fn from(k: KernelName) -> Self {
        match k {
            KernelName::Matern32 => KernelKind::Matern32,
            KernelName::Exponential => KernelKind::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSection {
    pub methods: Vec<String>,
    pub horizon: usize,
    pub budget_s: f64,
    pub speed_mps: f64,
    pub retrain_every: usize,
    pub bootstrap_samples: usize,
    pub altitude_m: f64,
    pub fov_deg: f64,
    pub lambda_cost: f64,
    pub lambda_visit: f64,
    /// Used when `starts` is 1.
    pub start: [f64; 2],
    /// Number of start poses; more than one draws them uniformly at random.
    pub starts: usize,
    pub eval_res: usize,
    pub path_cap: usize,
    pub weed_threshold: f64,
    pub rmse_samples: usize,
    pub uncertainty_res: usize,
    pub kernel: KernelName,
    pub fit_restarts: usize,
    pub max_steps: usize,
    pub synthetic_gp_s: f64,
    pub synthetic_retrain_s: f64,
    pub synthetic_plan_s: f64,
}

impl Default for MissionSection {
    fn default() -> Self {
        let m = MissionConfig::default();
        let c = SyntheticCosts::default();
        MissionSection {
            methods: vec!["quadtree".into(), "voronoi".into()],
            horizon: m.horizon,
            budget_s: m.budget_s,
            speed_mps: m.speed_mps,
            retrain_every: m.retrain_every,
            bootstrap_samples: m.bootstrap_samples,
            altitude_m: m.altitude_m,
            fov_deg: m.fov_deg,
            lambda_cost: m.weights.lambda_cost,
            lambda_visit: m.weights.lambda_visit,
            start: [m.start.x, m.start.y],
            starts: 5,
            eval_res: m.eval_res,
            path_cap: m.path_cap,
            weed_threshold: m.weed_threshold,
            rmse_samples: m.rmse_samples,
            uncertainty_res: m.uncertainty_res,
            kernel: KernelName::Matern32,
            fit_restarts: m.fit_restarts,
            max_steps: m.max_steps,
            synthetic_gp_s: c.gp_s,
            synthetic_retrain_s: c.retrain_s,
            synthetic_plan_s: c.plan_s,
        }
    }
}

impl MissionSection {
    /// Library configuration for one mission.
    pub fn mission_config(
        &self,
        method: Method,
        start: Point,
        seed: u64,
        deterministic: bool,
        partition: &PartitionConfig,
    ) -> MissionConfig {
        MissionConfig {
            representation: method,
            horizon: self.horizon,
            budget_s: self.budget_s,
            speed_mps: self.speed_mps,
            retrain_every: self.retrain_every,
            bootstrap_samples: self.bootstrap_samples,
            altitude_m: self.altitude_m,
            fov_deg: self.fov_deg,
            weights: UtilityWeights {
                lambda_cost: self.lambda_cost,
                lambda_visit: self.lambda_visit,
            },
            seed,
            start,
            eval_res: self.eval_res,
            path_cap: self.path_cap,
            weed_threshold: self.weed_threshold,
            rmse_samples: self.rmse_samples,
            uncertainty_res: self.uncertainty_res,
            kernel: self.kernel.into(),
            fit_restarts: self.fit_restarts,
            partition: partition.settings(),
            timing: if deterministic {
                Timing::Synthetic(SyntheticCosts {
                    gp_s: self.synthetic_gp_s,
                    retrain_s: self.synthetic_retrain_s,
                    plan_s: self.synthetic_plan_s,
                })
            } else {
                Timing::Measured
            },
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub weed_threshold: f64,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            weed_threshold: DEFAULT_WEED_THRESHOLD,
            dbscan_eps: DEFAULT_DBSCAN_EPS,
            dbscan_min_pts: DEFAULT_DBSCAN_MIN_PTS,
        }
    }
}

/// Parses a method list, rejecting unknown names as usage errors.
pub fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    if names.is_empty() {
        return Err(CliError::Usage("at least one method is required".into()));
    }
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let m = n
            .trim()
            .parse::<Method>()
            .map_err(|_| CliError::Usage(format!("unknown method `{n}`")))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        toml::from_str(text).map_err(|e| CliError::Data(format!("config: {e}")))
    }

    /// Reads a config file. A relative raster path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg = Config::parse(&text).map_err(|e| match e {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(p) = &cfg.field.path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.field.path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.represent.trials, 7);
        assert_eq!(c.mission.budget_s, 2400.0);
        assert_eq!(c.mission.starts, 5);
        assert_eq!(c.field.gsd, 0.0104);
        assert_eq!(c.partition.settings(), PartitionSettings::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = Config::default();
        c.field.blobs.push(BlobConfig {
            x: 0.3,
            y: 0.6,
            radius: 0.05,
            amplitude: 0.8,
        });
        c.mission.kernel = KernelName::Exponential;
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Config::parse("seed = 3\n\n[mission]\nbudget_s = 10.0\nbugdet = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("bugdet"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn wrong_type_is_rejected() {
        assert!(Config::parse("[mission]\nhorizon = \"four\"\n").is_err());
    }

    #[test]
    fn method_names() {
        let ms = parse_methods(&["quadtree".into(), " Voronoi".into(), "quadtree".into()]).unwrap();
        assert_eq!(ms, vec![Method::Quadtree, Method::Voronoi]);
        let e = parse_methods(&["octree".into()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(parse_methods(&[]).is_err());
    }

    #[test]
    fn deterministic_mission_uses_synthetic_costs() {
        let c = Config::default();
        let m = c
            .mission
            .mission_config(Method::Voronoi, Point::new(0.2, 0.3), 9, true, &c.partition);
        assert_eq!(m.timing, Timing::Synthetic(SyntheticCosts::default()));
        assert_eq!(m.seed, 9);
        let m = c.mission.mission_config(Method::Voronoi, Point::new(0.2, 0.3), 9, false, &c.partition);
        assert_eq!(m.timing, Timing::Measured);
    }
}

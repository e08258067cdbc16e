//! Budgeted receding-horizon mission loop: sense, update the GP, rebuild the
//! representation, plan and move until the time budget is spent.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::gp::{fit_map, FitOptions, GpModel, Hyperparams, KernelKind, PosteriorCache};
use crate::metrics::{coverage, mean_uncertainty, rmse_vs_truth, DEFAULT_RMSE_SAMPLES, DEFAULT_WEED_THRESHOLD};
use crate::partition::{centroids, Field, Method, PartitionSettings, DEFAULT_EVAL_RES};
use crate::planner::{delaunay, plan, UtilityWeights, DEFAULT_HORIZON, DEFAULT_PATH_CAP};
use crate::raster::{extract_footprint, footprint_px, CoverageMask, Observation, WeedRaster};
use crate::{Error, Point, Result};

/// Source of wall-clock time in seconds.
pub trait Clock {
    fn now_s(&mut self) -> f64;
}

/// A clock that never advances.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now_s(&mut self) -> f64 {
        0.0
    }
}

/// Fixed per-stage compute costs used instead of measured time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticCosts {
    pub gp_s: f64,
    /// Added to `gp_s` on steps that refit hyperparameters.
    pub retrain_s: f64,
    pub plan_s: f64,
}

impl Default for SyntheticCosts {
    fn default() -> Self {
        SyntheticCosts {
            gp_s: 0.5,
            retrain_s: 1.5,
            plan_s: 0.2,
        }
    }
}

impl SyntheticCosts {
    /// Representation build time per method, on the scale of typical
    /// single-core timings for a full orthomosaic.
    pub fn representation_s(&self, method: Method) -> f64 {
        match method {
            Method::Grid => 0.01,
            Method::Quadtree => 0.02,
            Method::Wedgelet => 4.13,
            Method::BspLse => 141.0,
            Method::BspRegion => 0.01,
            Method::Hexagon => 7.32,
            Method::Voronoi => 4.76,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    /// Stage times come from the supplied [`Clock`].
    Measured,
    Synthetic(SyntheticCosts),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub representation: Method,
    pub horizon: usize,
    pub budget_s: f64,
    pub speed_mps: f64,
    pub retrain_every: usize,
    pub bootstrap_samples: usize,
    pub altitude_m: f64,
    pub fov_deg: f64,
    pub weights: UtilityWeights,
    pub seed: u64,
    pub start: Point,
    pub eval_res: usize,
    pub path_cap: usize,
    pub weed_threshold: f64,
    pub rmse_samples: usize,
    /// Grid side for the mean-uncertainty metric.
    pub uncertainty_res: usize,
    pub kernel: KernelKind,
    pub fit_restarts: usize,
    pub partition: PartitionSettings,
    pub timing: Timing,
    /// Safety stop independent of the budget.
    pub max_steps: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            representation: Method::Quadtree,
            horizon: DEFAULT_HORIZON,
            budget_s: 2400.0,
            speed_mps: 2.0,
            retrain_every: 10,
            bootstrap_samples: 10,
            altitude_m: 7.0,
            fov_deg: 33.0,
            weights: UtilityWeights::default(),
            seed: 0,
            start: Point::new(0.1, 0.1),
            eval_res: DEFAULT_EVAL_RES,
            path_cap: DEFAULT_PATH_CAP,
            weed_threshold: DEFAULT_WEED_THRESHOLD,
            rmse_samples: DEFAULT_RMSE_SAMPLES,
            uncertainty_res: 64,
            kernel: KernelKind::Matern32,
            fit_restarts: 4,
            partition: PartitionSettings::default(),
            timing: Timing::Measured,
            max_steps: 100_000,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget_s >= 0.0) || !self.budget_s.is_finite() {
            return Err(Error::invalid("budget must be a non-negative number of seconds"));
        }
        if !(self.speed_mps > 0.0) || !self.speed_mps.is_finite() {
            return Err(Error::invalid("speed must be positive"));
        }
        if self.horizon == 0 || self.retrain_every == 0 || self.eval_res == 0 || self.uncertainty_res == 0 {
            return Err(Error::invalid("horizon, retrain cadence and grid sizes must be positive"));
        }
        if !self.start.in_unit_square() {
            return Err(Error::invalid("start pose must be in the unit square"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub weed_coverage: f64,
    pub map_coverage: f64,
    pub rmse: f64,
    pub mean_uncertainty: f64,
    pub t_gp: f64,
    pub t_repr: f64,
    pub t_plan: f64,
    pub t_travel: f64,
    pub distance_m: f64,
    /// Pose after the move.
    pub pose: Point,
    pub time_left: f64,
    pub n_samples: usize,
    pub n_cells: usize,
    pub n_candidates: usize,
    pub best_utility: f64,
    pub best_info: f64,
    pub best_cost_m: f64,
    pub best_revisit: f64,
    /// Largest `|U - (I - λc·C - λv·v̄)|` over every scored path this step.
    pub utility_residual: f64,
    pub refit: bool,
    /// Hyperparameter fit or GP conditioning failed; previous values kept.
    pub gp_warning: bool,
    /// No candidate path; moved to the nearest uncovered centroid.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionOutcome {
    pub records: Vec<StepRecord>,
    /// Start pose followed by the pose after every step.
    pub trajectory: Vec<Point>,
    pub theta: Hyperparams,
    /// Truth-resolution coverage at the end of the mission.
    pub mask: CoverageMask,
}

/// Marks the `footprint_px` square around `pose`. Idempotent.
pub fn apply_footprint(mask: &mut CoverageMask, pose: Point, footprint_px: usize) -> Result<()> {
    if !pose.in_unit_square() {
        return Err(Error::invalid("pose must be in the unit square"));
    }
    mask.apply(pose, footprint_px);
    Ok(())
}

/// Remaining budget after a step's four stage times.
pub fn account_time(time_left: f64, record: &StepRecord) -> f64 {
    time_left - (record.t_gp + record.t_repr + record.t_plan + record.t_travel)
}

fn render_mean(model: &GpModel, res: usize) -> Result<Field> {
    Field::from_fn(res, |p| model.predict_mean(p))
}

struct Stopwatch<'c, C: Clock> {
    clock: &'c mut C,
    timing: Timing,
}

impl<C: Clock> Stopwatch<'_, C> {
    fn time<T>(&mut self, synthetic: impl Fn(&SyntheticCosts) -> f64, f: impl FnOnce() -> T) -> (T, f64) {
        match self.timing {
            Timing::Synthetic(costs) => (f(), synthetic(&costs)),
            Timing::Measured => {
                let t0 = self.clock.now_s();
                let out = f();
                (out, (self.clock.now_s() - t0).max(0.0))
            }
        }
    }
}

/// Runs one mission over `truth`. Compute stages are timed with `clock`
/// unless the configuration asks for synthetic costs.
pub fn run_mission<C: Clock>(cfg: &MissionConfig, truth: &WeedRaster, clock: &mut C) -> Result<MissionOutcome> {
    cfg.validate()?;
    let fp_truth = footprint_px(cfg.altitude_m, cfg.fov_deg, truth.gsd())?;
    let fp_eval = ((fp_truth as f64 * cfg.eval_res as f64 / truth.width() as f64).round() as usize).max(1);
    let map_size_m = truth.map_size_m();
    let mut sw = Stopwatch {
        clock,
        timing: cfg.timing,
    };

    let mut pose = cfg.start;
    let mut truth_mask = CoverageMask::new(truth.width(), truth.height())?;
    let mut eval_mask = CoverageMask::new(cfg.eval_res, cfg.eval_res)?;
    let mut samples: Vec<Observation> = Vec::new();
    let mut theta = Hyperparams::prior_mode();
    let mut model = GpModel::prior(cfg.kernel, theta)?;
    let mut time_left = cfg.budget_s;
    let mut records = Vec::new();
    let mut trajectory = alloc::vec![pose];
    let opts = FitOptions {
        kind: cfg.kernel,
        restarts: cfg.fit_restarts,
        seed: cfg.seed,
        ..FitOptions::default()
    };

    let mut step = 0;
    while time_left > 0.0 && step < cfg.max_steps {
        // sense
        let fp = extract_footprint(truth, pose, fp_truth)?;
        samples.push(Observation { pos: pose, value: fp.mean });
        apply_footprint(&mut truth_mask, pose, fp_truth)?;
        apply_footprint(&mut eval_mask, pose, fp_eval)?;

        // GP update
        let refit = samples.len() >= 2 && samples.len() % cfg.retrain_every == 0;
        let ((next_model, next_theta, warn), t_gp) = sw.time(
            |c| c.gp_s + if refit { c.retrain_s } else { 0.0 },
            || {
                let mut warn = false;
                let mut th = theta;
                if refit {
                    let xs: Vec<Point> = samples.iter().map(|o| o.pos).collect();
                    let ys: Vec<f64> = samples.iter().map(|o| o.value).collect();
                    match fit_map(&xs, &ys, theta, &opts) {
                        Ok(out) => {
                            th = out.theta;
                            warn |= out.warning;
                        }
                        Err(_) => warn = true,
                    }
                }
                match GpModel::from_observations(cfg.kernel, th, &samples) {
                    Ok(m) => (Some(m), th, warn),
                    Err(_) => (None, theta, true),
                }
            },
        );
        if let Some(m) = next_model {
            model = m;
            theta = next_theta;
        }

        // representation
        let method = if step < cfg.bootstrap_samples {
            Method::Grid
        } else {
            cfg.representation
        };
        let (part, t_repr) = sw.time(
            |c| c.representation_s(method),
            || -> Result<_> {
                let field = render_mean(&model, cfg.eval_res)?;
                if method == Method::Grid {
                    let settings = PartitionSettings {
                        grid_cell_px: (cfg.eval_res / 8).max(1),
                        ..cfg.partition
                    };
                    settings.build(Method::Grid, &field, cfg.seed)
                } else {
                    cfg.partition.build(method, &field, cfg.seed.wrapping_add(step as u64))
                }
            },
        );
        let part = part?;

        // plan
        let (planned, t_plan) = sw.time(
            |c| c.plan_s,
            || -> Result<_> {
                let mut pts = centroids(&part);
                pts.push(pose);
                let g = delaunay(&pts)?;
                let start = g.node_of(pts.len() - 1);
                let cache = PosteriorCache::new(&model, g.nodes());
                let out = plan(&g, start, &cache, &eval_mask, &cfg.weights, map_size_m, cfg.horizon, cfg.path_cap)?;
                let residual = out
                    .scored
                    .iter()
                    .map(|c| {
                        (c.utility - (c.info - cfg.weights.lambda_cost * c.cost_m - cfg.weights.lambda_visit * c.revisit))
                            .abs()
                    })
                    .fold(0.0, f64::max);
                let next = out.best.as_ref().map(|b| g.node(b.next_node()));
                Ok((out, next, residual, pts))
            },
        );
        let (out, next, residual, pts) = planned?;

        let (next, fallback) = match next {
            Some(p) => (p, false),
            None => {
                let target = pts[..pts.len() - 1]
                    .iter()
                    .filter(|&&c| !eval_mask.at(c))
                    .min_by(|a, b| a.dist2(pose).total_cmp(&b.dist2(pose)));
                match target {
                    Some(&p) => (p, true),
                    None => break,
                }
            }
        };

        let distance_m = pose.dist(next) * map_size_m;
        let t_travel = distance_m / cfg.speed_mps;
        pose = next;
        let (weed_coverage, map_coverage) = coverage(&truth_mask, truth, cfg.weed_threshold)?;
        let best = out.best.as_ref();
        let mut rec = StepRecord {
            step,
            weed_coverage,
            map_coverage,
            rmse: rmse_vs_truth(&model, truth, cfg.rmse_samples, cfg.seed)?,
            mean_uncertainty: mean_uncertainty(&model, cfg.uncertainty_res)?,
            t_gp,
            t_repr,
            t_plan,
            t_travel,
            distance_m,
            pose,
            time_left,
            n_samples: samples.len(),
            n_cells: part.len(),
            n_candidates: out.scored.len(),
            best_utility: best.map_or(0.0, |b| b.utility),
            best_info: best.map_or(0.0, |b| b.info),
            best_cost_m: best.map_or(0.0, |b| b.cost_m),
            best_revisit: best.map_or(0.0, |b| b.revisit),
            utility_residual: residual,
            refit,
            gp_warning: warn,
            fallback,
        };
        time_left = account_time(time_left, &rec);
        rec.time_left = time_left;
        records.push(rec);
        trajectory.push(pose);
        step += 1;
    }
    Ok(MissionOutcome {
        records,
        trajectory,
        theta,
        mask: truth_mask,
    })
}

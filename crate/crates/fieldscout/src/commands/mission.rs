use std::path::Path;
use std::time::Instant;

use fieldscout_core::mission::{run_mission, Clock, MissionOutcome, StepRecord};
use fieldscout_core::partition::Method;
use fieldscout_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{mean_std, num, pool};
use crate::config::{parse_methods, Config};
use crate::error::{CliError, CliResult};
use crate::io::{draw_trajectory, field_from_source, line_chart, raster_image};
use crate::output::{RunDir, RunManifest};

pub const STEPS_SCHEMA: &str = "fieldscout.steps/1";
pub const SUMMARY_SCHEMA: &str = "fieldscout.mission_summary/1";
pub const CURVES_SCHEMA: &str = "fieldscout.curves/1";
pub const BREAKDOWN_SCHEMA: &str = "fieldscout.breakdown/1";
pub const PATH_SCHEMA: &str = "fieldscout.path/1";

const STEP_HEADER: [&str; 26] = [
    "method",
    "start",
    "step",
    "weed_coverage",
    "map_coverage",
    "rmse",
    "mean_uncertainty",
    "t_gp",
    "t_repr",
    "t_plan",
    "t_travel",
    "distance_m",
    "x",
    "y",
    "time_left",
    "n_samples",
    "n_cells",
    "n_candidates",
    "best_utility",
    "best_info",
    "best_cost_m",
    "best_revisit",
    "utility_residual",
    "refit",
    "gp_warning",
    "fallback",
];

struct WallClock(Instant);

impl Clock for WallClock {
    fn now_s(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Start poses: the configured one, or `n` uniform draws from the seed.
pub fn start_poses(cfg: &Config) -> Vec<Point> {
    let m = &cfg.mission;
    if m.starts <= 1 {
        return vec![Point::new(m.start[0], m.start[1])];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_57a7);
    (0..m.starts)
        .map(|_| Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect()
}

fn step_row(method: Method, start: usize, r: &StepRecord) -> Vec<String> {
    vec![
        method.name().to_string(),
        start.to_string(),
        r.step.to_string(),
        num(r.weed_coverage),
        num(r.map_coverage),
        num(r.rmse),
        num(r.mean_uncertainty),
        num(r.t_gp),
        num(r.t_repr),
        num(r.t_plan),
        num(r.t_travel),
        num(r.distance_m),
        num(r.pose.x),
        num(r.pose.y),
        num(r.time_left),
        r.n_samples.to_string(),
        r.n_cells.to_string(),
        r.n_candidates.to_string(),
        num(r.best_utility),
        num(r.best_info),
        num(r.best_cost_m),
        num(r.best_revisit),
        num(r.utility_residual),
        r.refit.to_string(),
        r.gp_warning.to_string(),
        r.fallback.to_string(),
    ]
}

fn stage_sum(recs: &[StepRecord]) -> [f64; 4] {
    recs.iter().fold([0.0; 4], |a, r| {
        [a[0] + r.t_gp, a[1] + r.t_repr, a[2] + r.t_plan, a[3] + r.t_travel]
    })
}

/// Runs every (method, start) mission and writes steps, curves, summaries,
/// stage-time breakdowns, path polylines and trajectory overlays.
pub fn mission(cfg: &Config, out: &Path) -> CliResult<RunManifest> {
    let methods = parse_methods(&cfg.mission.methods)?;
    if cfg.mission.budget_s < 0.0 || cfg.mission.budget_s.is_nan() {
        return Err(CliError::Usage("budget must be non-negative".into()));
    }
    let truth = field_from_source(&cfg.field, cfg.seed)?;
    let starts = start_poses(cfg);
    let jobs: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (0..starts.len()).map(move |k| (m, k)))
        .collect();
    let outcomes: Vec<(MissionOutcome, f64)> = pool(cfg.deterministic)?.install(|| {
        jobs.par_iter()
            .map(|&(m, k)| {
                let mc = cfg.mission.mission_config(
                    m,
                    starts[k],
                    cfg.seed.wrapping_add(k as u64),
                    cfg.deterministic,
                    &cfg.partition,
                );
                let t0 = Instant::now();
                let out = run_mission(&mc, &truth, &mut WallClock(Instant::now()))?;
                // wall time is recorded only for measured runs
                let wall = if cfg.deterministic { 0.0 } else { t0.elapsed().as_secs_f64() };
                Ok((out, wall))
            })
            .collect::<CliResult<_>>()
    })?;

    let mut run = RunDir::create(out)?;
    let mut steps = Vec::new();
    let mut summary = Vec::new();
    let mut breakdown = Vec::new();
    for (&(m, k), (o, wall)) in jobs.iter().zip(&outcomes) {
        for r in &o.records {
            steps.push(step_row(m, k, r));
        }
        let [g, rp, pl, tr] = stage_sum(&o.records);
        let last = o.records.last();
        summary.push(vec![
            m.name().to_string(),
            k.to_string(),
            num(starts[k].x),
            num(starts[k].y),
            o.records.len().to_string(),
            num(last.map_or(0.0, |r| r.weed_coverage)),
            num(last.map_or(0.0, |r| r.map_coverage)),
            num(last.map_or(f64::NAN, |r| r.rmse)),
            num(last.map_or(f64::NAN, |r| r.mean_uncertainty)),
            num(o.records.iter().map(|r| r.distance_m).sum()),
            num(last.map_or(cfg.mission.budget_s, |r| r.time_left)),
            num(o.theta.sigma_f2),
            num(o.theta.ell),
            num(o.theta.sigma_n2),
            num(*wall),
        ]);
        breakdown.push(vec![
            m.name().to_string(),
            k.to_string(),
            num(g),
            num(rp),
            num(pl),
            num(tr),
            num(g + rp + pl + tr),
        ]);
    }
    run.csv("steps.csv", STEPS_SCHEMA, &STEP_HEADER, &steps)?;
    run.csv(
        "summary.csv",
        SUMMARY_SCHEMA,
        &[
            "method",
            "start",
            "start_x",
            "start_y",
            "steps",
            "weed_coverage",
            "map_coverage",
            "rmse",
            "mean_uncertainty",
            "distance_m",
            "time_left",
            "sigma_f2",
            "ell",
            "sigma_n2",
            "wall_s",
        ],
        &summary,
    )?;
    run.csv(
        "breakdown.csv",
        BREAKDOWN_SCHEMA,
        &["method", "start", "t_gp", "t_repr", "t_plan", "t_travel", "total"],
        &breakdown,
    )?;

    let mut curves = Vec::new();
    let mut chart = Vec::new();
    for &m in &methods {
        let runs: Vec<&MissionOutcome> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|((jm, _), _)| *jm == m)
            .map(|(_, (o, _))| o)
            .collect();
        let longest = runs.iter().map(|o| o.records.len()).max().unwrap_or(0);
        let mut weed = Vec::with_capacity(longest);
        for s in 0..longest {
            let at: Vec<&StepRecord> = runs.iter().filter_map(|o| o.records.get(s)).collect();
            let stat = |f: fn(&StepRecord) -> f64| mean_std(&at.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (wm, ws) = stat(|r| r.weed_coverage);
            let (mm, ms) = stat(|r| r.map_coverage);
            let (rm, rs) = stat(|r| r.rmse);
            let (um, us) = stat(|r| r.mean_uncertainty);
            weed.push(wm);
            curves.push(vec![
                m.name().to_string(),
                s.to_string(),
                at.len().to_string(),
                num(wm),
                num(ws),
                num(mm),
                num(ms),
                num(rm),
                num(rs),
                num(um),
                num(us),
            ]);
        }
        chart.push(weed);
    }
    run.csv(
        "curves.csv",
        CURVES_SCHEMA,
        &[
            "method",
            "step",
            "n",
            "weed_coverage_mean",
            "weed_coverage_std",
            "map_coverage_mean",
            "map_coverage_std",
            "rmse_mean",
            "rmse_std",
            "mean_uncertainty_mean",
            "mean_uncertainty_std",
        ],
        &curves,
    )?;
    run.image("weed_coverage.png", &line_chart(&chart, 1.0, 480, 320))?;

    let map_m = truth.map_size_m();
    for (&(m, k), (o, _)) in jobs.iter().zip(&outcomes) {
        let rows: Vec<Vec<String>> = o
            .trajectory
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), num(p.x), num(p.y), num(p.x * map_m), num(p.y * map_m)])
            .collect();
        let stem = format!("{}_{k}", m.name());
        run.csv(&format!("path_{stem}.csv"), PATH_SCHEMA, &["index", "x", "y", "x_m", "y_m"], &rows)?;
        let mut img = raster_image(&truth);
        draw_trajectory(&mut img, &o.trajectory);
        run.image(&format!("overlay_{stem}.png"), &img)?;
    }
    let inputs: Vec<_> = cfg.field.path.iter().cloned().collect();
    run.finish("mission", cfg, &inputs)
}

//! Public-API checks against independent reference computations.

use approx::assert_relative_eq;
use fieldscout_core::gp::{
    build_train_cov, fit_map, kernel_at, mutual_information, posterior_cov, FitOptions, GpModel, Hyperparams,
    KernelKind, PosteriorCache, DEFAULT_JITTER,
};
use fieldscout_core::metrics::{
    coverage, dbscan_sizes, field_features, hamming, mean_uncertainty, mse, perceptual_hash, rmse_vs_truth, spearman,
    ssim,
};
use fieldscout_core::mission::apply_footprint;
use fieldscout_core::partition::{
    build_bsp_lse, build_grid, centroids, locate, rasterize, BspLseParams, Field, Geometry, Method,
    PartitionSettings,
};
use fieldscout_core::planner::{delaunay, in_circle, select_best, utility, UtilityWeights};
use fieldscout_core::raster::{extract_footprint, footprint_extent_px, pooled_samples, CoverageMask, Observation, WeedRaster};
use fieldscout_core::Point;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn theta() -> Hyperparams {
    Hyperparams::new(0.8, 0.15, 0.02).unwrap()
}

fn random_points(n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect()
}

fn min_eigenvalue(m: &[f64], n: usize) -> f64 {
    DMatrix::from_row_slice(n, n, m).symmetric_eigen().eigenvalues.min()
}

#[test]
fn footprint_extent_from_camera_geometry() {
    let n = footprint_extent_px(7.0, 33.0, 0.0104).unwrap();
    let expected = 2.0 * 7.0 * (16.5f64).to_radians().tan() / 0.0104;
    assert_relative_eq!(n, expected, max_relative = 1e-12);
    assert!((n - 400.0).abs() / 400.0 < 0.01, "{n}");
    assert_relative_eq!(footprint_extent_px(0.0052, 90.0, 0.0104).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(
        footprint_extent_px(14.0, 33.0, 0.0104).unwrap(),
        2.0 * n,
        max_relative = 1e-12
    );
}

#[test]
fn corner_footprint_is_clipped_region_average() {
    let (w, h) = (9, 7);
    let vals: Vec<f64> = (0..w * h).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
    let r = WeedRaster::new(w, h, vals.clone(), 0.01).unwrap();
    for (centre, size) in [(Point::new(0.0, 0.0), 4), (Point::new(1.0, 1.0), 6), (Point::new(0.05, 0.9), 6)] {
        // pixels whose centres fall inside the square window
        let (cx, cy) = (centre.x * w as f64, centre.y * h as f64);
        let half = size as f64 / 2.0;
        let inside = |c: usize, n: usize, x: f64| {
            let p = c as f64 + 0.5;
            p >= x - half && p < x + half && c < n
        };
        let mut sum = 0.0;
        let mut count = 0;
        for row in 0..h {
            for col in 0..w {
                if inside(col, w, cx) && inside(row, h, cy) {
                    sum += vals[row * w + col];
                    count += 1;
                }
            }
        }
        let fp = extract_footprint(&r, centre, size).unwrap();
        assert_eq!(fp.patch.len(), count);
        assert_relative_eq!(fp.mean, sum / count as f64, epsilon = 1e-12);
    }
}

#[test]
fn pooled_samples_match_window_means() {
    let r = WeedRaster::new(4, 2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0], 0.01).unwrap();
    let obs = pooled_samples(&r, 50, 1, 3).unwrap();
    for o in &obs {
        assert_eq!(o.value, r.sample(o.pos));
    }
    let straddle = extract_footprint(&r, Point::new(0.5, 0.5), 2).unwrap();
    assert_eq!(straddle.mean, 0.5);
}

#[test]
fn matern_closed_form() {
    let t = theta();
    let r = t.ell / 3f64.sqrt();
    assert_relative_eq!(kernel_at(KernelKind::Matern32, r, &t), t.sigma_f2 * 2.0 * (-1f64).exp(), epsilon = 1e-14);
    assert_relative_eq!(2.0 * (-1f64).exp(), 0.7358, epsilon = 1e-4);
    assert_eq!(kernel_at(KernelKind::Matern32, 0.0, &t), t.sigma_f2);
    let mut prev = t.sigma_f2;
    for k in 1..200 {
        let v = kernel_at(KernelKind::Matern32, k as f64 * 0.01, &t);
        assert!(v < prev && v > 0.0);
        prev = v;
    }
}

#[test]
fn coincident_training_points_stay_positive_definite() {
    let t = theta();
    let p = Point::new(0.3, 0.4);
    let k = build_train_cov(KernelKind::Matern32, &[p, p], &t, DEFAULT_JITTER).unwrap();
    assert_eq!(k[1], t.sigma_f2);
    // eigenvalues of [[a, b], [b, a]] are a ± b
    assert_relative_eq!(min_eigenvalue(&k, 2), t.sigma_n2 + DEFAULT_JITTER, epsilon = 1e-12);
}

#[test]
fn one_point_posterior_closed_form() {
    let t = theta();
    let x = Point::new(0.2, 0.2);
    let m = GpModel::new(KernelKind::Matern32, t, vec![x], vec![0.9]).unwrap();
    for q in [Point::new(0.25, 0.2), Point::new(0.6, 0.9), Point::new(1.0, 1.0)] {
        let k = kernel_at(KernelKind::Matern32, q.dist(x), &t);
        let s = t.sigma_f2 + t.sigma_n2 + DEFAULT_JITTER;
        let (mean, var) = m.predict_one(q);
        assert_relative_eq!(mean, k * 0.9 / s, epsilon = 1e-12);
        assert_relative_eq!(var, t.sigma_f2 - k * k / s, epsilon = 1e-12);
    }
    let (far_mean, far_var) = m.predict_one(Point::new(1.0, 1.0));
    assert!(far_mean.abs() < 1e-3 && (far_var - t.sigma_f2).abs() < 1e-3);
}

#[test]
fn posterior_covariance_is_psd_on_random_sets() {
    let t = theta();
    let xs = random_points(40, 1);
    let ys: Vec<f64> = xs.iter().map(|p| (p.x * 6.0).sin() * p.y).collect();
    let m = GpModel::new(KernelKind::Matern32, t, xs, ys).unwrap();
    for seed in 0..10 {
        let d = 2 + seed as usize;
        let pts = random_points(d, 100 + seed);
        let cov = posterior_cov(&m, &pts);
        assert!(min_eigenvalue(&cov, d) >= -1e-8);
        let cached = PosteriorCache::new(&m, &pts).cov(&(0..d).collect::<Vec<_>>());
        for (a, b) in cov.iter().zip(&cached) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
    let prior = GpModel::prior(KernelKind::Matern32, t).unwrap();
    let pts = random_points(5, 9);
    let cov = posterior_cov(&prior, &pts);
    for i in 0..5 {
        for j in 0..5 {
            let k = kernel_at(KernelKind::Matern32, pts[i].dist(pts[j]), &t);
            assert_relative_eq!(cov[i * 5 + j], k, epsilon = 1e-12);
        }
    }
}

#[test]
fn information_matches_log_determinant() {
    let n2 = 0.05;
    assert_relative_eq!(mutual_information(&[n2], 1, n2).unwrap(), 0.5 * 2f64.ln(), epsilon = 1e-12);
    assert_relative_eq!(0.5 * 2f64.ln(), 0.34657, epsilon = 1e-5);
    let diag = [0.3, 0.01, 1.2];
    let mut m = vec![0.0; 9];
    for i in 0..3 {
        m[i * 4] = diag[i];
    }
    let expect: f64 = diag.iter().map(|v| 0.5 * (1.0 + v / n2).ln()).sum();
    assert_relative_eq!(mutual_information(&m, 3, n2).unwrap(), expect, epsilon = 1e-12);

    let m = GpModel::prior(KernelKind::Matern32, theta()).unwrap();
    let pts = random_points(6, 4);
    let cov = posterior_cov(&m, &pts);
    let a = DMatrix::from_row_slice(6, 6, &cov) / n2 + DMatrix::<f64>::identity(6, 6);
    let logdet: f64 = a.symmetric_eigen().eigenvalues.iter().map(|e| e.ln()).sum();
    assert_relative_eq!(mutual_information(&cov, 6, n2).unwrap(), 0.5 * logdet, epsilon = 1e-10);
}

#[test]
fn fitted_lengthscale_recovers_truth() {
    let truth = Hyperparams::new(1.0, 0.1, 0.01).unwrap();
    let xs = random_points(200, 5);
    let k = build_train_cov(KernelKind::Matern32, &xs, &truth, 0.0).unwrap();
    let l = DMatrix::from_row_slice(200, 200, &k).cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let z = nalgebra::DVector::from_fn(200, |_, _| rng.sample::<f64, _>(StandardNormal));
    let ys: Vec<f64> = (l * z).iter().copied().collect();
    let fit = fit_map(&xs, &ys, Hyperparams::prior_mode(), &FitOptions::default()).unwrap();
    assert!(fit.theta.ell > truth.ell / 2.0 && fit.theta.ell < truth.ell * 2.0, "{:?}", fit.theta);
}

fn quadrant_field() -> Field {
    Field::new(
        4,
        vec![
            0.0, 0.2, 1.0, 1.0, //
            0.4, 0.2, 1.0, 0.0, //
            0.3, 0.3, 0.5, 0.5, //
            0.3, 0.3, 0.9, 0.1,
        ],
    )
    .unwrap()
}

#[test]
fn grid_cells_hold_quadrant_means() {
    let p = build_grid(&quadrant_field(), 2).unwrap();
    let means: Vec<f64> = p.cells().iter().map(|c| c.mean_value).collect();
    let expect = [0.2, 0.75, 0.3, 0.5];
    for (m, e) in means.iter().zip(expect) {
        assert_relative_eq!(*m, e, epsilon = 1e-12);
    }
    let cs = centroids(&p);
    let quarters = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];
    for (c, (x, y)) in cs.iter().zip(quarters) {
        assert_relative_eq!(c.x, x, epsilon = 1e-12);
        assert_relative_eq!(c.y, y, epsilon = 1e-12);
    }
    let one = build_grid(&quadrant_field(), 4).unwrap();
    assert_eq!(one.len(), 1);
    assert_relative_eq!(centroids(&one)[0].x, 0.5);
}

#[test]
fn rasterize_conserves_mass_for_every_method() {
    let f = Field::from_fn(32, |p| (-((p.x - 0.3).powi(2) + (p.y - 0.6).powi(2)) / 0.02).exp()).unwrap();
    let total: f64 = f.values().iter().sum();
    let settings = PartitionSettings::default();
    for m in Method::ALL {
        let p = settings.build(m, &f, 1).unwrap();
        let back = rasterize(&p, 32).unwrap();
        // cell means are pixel means, so mass is conserved exactly
        assert_relative_eq!(back.values().iter().sum::<f64>(), total, epsilon = 1e-9);
        assert_eq!(p.cells().iter().map(|c| c.area_px).sum::<usize>(), 32 * 32, "{m:?}");
    }
}

#[test]
fn locate_agrees_with_pixel_labels() {
    let f = Field::from_fn(32, |p| if p.x + 0.4 * p.y > 0.6 { 1.0 } else { 0.2 * p.y }).unwrap();
    let settings = PartitionSettings::default();
    let pts = random_points(300, 8);
    for m in Method::ALL {
        let p = settings.build(m, &f, 2).unwrap();
        for q in &pts {
            let (c, r) = q.pixel(32);
            assert_eq!(locate(&p, *q).unwrap(), p.labels()[r * 32 + c] as usize, "{m:?} at {q:?}");
        }
        if m == Method::Grid {
            for (i, c) in centroids(&p).iter().enumerate() {
                assert_eq!(locate(&p, *c).unwrap(), i);
            }
        }
    }
}

/// Angle of the polygon edge that does not lie on the unit-square border.
fn interior_edge_angle(vs: &[Point]) -> f64 {
    let on_border = |a: Point, b: Point| {
        let same = |u: f64, v: f64, edge: f64| (u - edge).abs() < 1e-9 && (v - edge).abs() < 1e-9;
        same(a.x, b.x, 0.0) || same(a.x, b.x, 1.0) || same(a.y, b.y, 0.0) || same(a.y, b.y, 1.0)
    };
    let n = vs.len();
    let (a, b) = (0..n)
        .map(|i| (vs[i], vs[(i + 1) % n]))
        .find(|&(a, b)| !on_border(a, b) && a.dist(b) > 1e-9)
        .expect("interior edge");
    (b.y - a.y).atan2(b.x - a.x).rem_euclid(core::f64::consts::PI)
}

#[test]
fn bsp_lse_split_follows_diagonal_edge() {
    for deg in [20.0f64, 33.0, 45.0, 65.0, 120.0, 155.0] {
        let dir = deg.to_radians();
        let (s, c) = dir.sin_cos();
        // a quarter pixel off centre so no pixel centre lies on the edge
        let x0 = 0.5 + 0.25 / 32.0;
        let f = Field::from_fn(32, |p| if (p.x - x0) * s - (p.y - 0.5) * c > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let p = build_bsp_lse(&f, &BspLseParams::default()).unwrap();
        assert_eq!(p.len(), 2, "{deg}");
        let Geometry::Polygon(vs) = &p.cells()[0].geometry else {
            panic!("bsp cells are polygons")
        };
        let d = (interior_edge_angle(vs) - dir).abs();
        let d = d.min(core::f64::consts::PI - d);
        assert!(d.to_degrees() < 5.0, "{deg}: off by {}", d.to_degrees());
    }
}

#[test]
fn ssim_hash_and_mse_reference_cases() {
    let a = Field::from_fn(32, |p| 0.5 + 0.4 * (p.x * 9.0).sin() * (p.y * 7.0).cos()).unwrap();
    let b = Field::new(32, a.values().iter().map(|v| v + 1e-3).collect()).unwrap();
    let s = ssim(&a, &b).unwrap();
    assert!(s < 1.0 && s > 0.99, "{s}");
    assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
    assert_eq!(ssim(&a, &a).unwrap(), 1.0);

    let neg = Field::new(32, a.values().iter().map(|v| 1.0 - v).collect()).unwrap();
    let (ha, hn) = (perceptual_hash(&a, 4096).unwrap(), perceptual_hash(&neg, 4096).unwrap());
    assert!(hamming(&ha, &hn).unwrap() > 2048);
    assert_eq!(perceptual_hash(&a, 4096).unwrap(), ha);

    let naive: f64 = a
        .values()
        .iter()
        .zip(neg.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / 1024.0;
    assert_relative_eq!(mse(&a, &neg).unwrap(), naive, epsilon = 1e-15);
}

#[test]
fn dense_training_on_constant_truth() {
    let truth = WeedRaster::constant(64, 64, 0.4, 0.01).unwrap();
    let obs: Vec<Observation> = (0..400)
        .map(|i| {
            let p = Point::pixel_centre(i % 20, i / 20, 20);
            Observation::new(p.x, p.y, truth.sample(p))
        })
        .collect();
    let t = Hyperparams::new(0.5, 0.2, 1e-4).unwrap();
    let m = GpModel::from_observations(KernelKind::Matern32, t, &obs).unwrap();
    assert!(rmse_vs_truth(&m, &truth, 2000, 3).unwrap() < 0.01);
}

#[test]
fn uncertainty_shrinks_as_observations_accumulate() {
    let t = theta();
    let pts = random_points(30, 12);
    let mut prev = mean_uncertainty(&GpModel::prior(KernelKind::Matern32, t).unwrap(), 16).unwrap();
    assert_relative_eq!(prev, t.sigma_f2, epsilon = 1e-12);
    for n in 1..=pts.len() {
        let m = GpModel::new(KernelKind::Matern32, t, pts[..n].to_vec(), vec![0.5; n]).unwrap();
        let u = mean_uncertainty(&m, 16).unwrap();
        assert!(u <= prev + 1e-12, "step {n}: {u} > {prev}");
        prev = u;
    }
}

#[test]
fn coverage_of_the_weed_half() {
    let vals: Vec<f64> = (0..64).map(|i| if i % 8 < 4 { 1.0 } else { 0.0 }).collect();
    let truth = WeedRaster::new(8, 8, vals, 0.01).unwrap();
    let mut mask = CoverageMask::new(8, 8).unwrap();
    for r in 0..8 {
        for c in 0..4 {
            mask.set(c, r);
        }
    }
    assert_eq!(coverage(&mask, &truth, 0.5).unwrap(), (1.0, 0.5));
}

#[test]
fn dbscan_matches_brute_force() {
    let w = 40;
    let mut mask = vec![false; w * w];
    for (c0, r0) in [(2, 2), (28, 27)] {
        for r in r0..r0 + 6 {
            for c in c0..c0 + 6 {
                mask[r * w + c] = true;
            }
        }
    }
    let mut sizes = dbscan_sizes(&mask, w, 5.0, 10);
    sizes.sort_unstable();
    assert_eq!(sizes, brute_dbscan(&mask, w, 5.0, 10));
    assert_eq!(sizes, vec![36, 36]);

    let truth = WeedRaster::new(w, w, mask.iter().map(|&b| b as u8 as f64).collect(), 0.01).unwrap();
    let f = field_features(&truth, 0.5, 5.0, 10).unwrap();
    assert_eq!((f.num_weed_patches, f.dbscan_num_clusters), (2, 2));
    assert_eq!(f.largest_patch_fraction, 0.5);
}

/// Textbook DBSCAN over the foreground pixels; returns sorted cluster sizes.
fn brute_dbscan(mask: &[bool], w: usize, eps: f64, min_pts: usize) -> Vec<usize> {
    let pts: Vec<(f64, f64)> = (0..mask.len())
        .filter(|&i| mask[i])
        .map(|i| ((i % w) as f64, (i / w) as f64))
        .collect();
    let near = |a: usize| -> Vec<usize> {
        (0..pts.len())
            .filter(|&b| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt() <= eps)
            .collect()
    };
    let mut label: Vec<Option<usize>> = vec![None; pts.len()];
    let mut sizes = Vec::new();
    for p in 0..pts.len() {
        if label[p].is_some() || near(p).len() < min_pts {
            continue;
        }
        let id = sizes.len();
        sizes.push(0);
        let mut stack = vec![p];
        label[p] = Some(id);
        while let Some(q) = stack.pop() {
            sizes[id] += 1;
            let nq = near(q);
            if nq.len() < min_pts {
                continue;
            }
            for r in nq {
                if label[r].is_none() {
                    label[r] = Some(id);
                    stack.push(r);
                }
            }
        }
    }
    sizes.sort_unstable();
    sizes
}

#[test]
fn rank_correlation_lattice_on_five_fields() {
    // with 5 samples rho = 1 - sum(d^2) / 20, so one adjacent swap gives 0.9
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_relative_eq!(spearman(&x, &[1.0, 2.0, 3.0, 5.0, 4.0]).unwrap(), 0.9, epsilon = 1e-12);
    for reported in [0.9, -0.5, 0.3, 0.0, -0.9, 0.7, -0.8, 0.1, -0.7] {
        let s: f64 = (1.0 - reported) * 20.0;
        assert!((s - s.round()).abs() < 1e-9 && s.round() as i64 % 2 == 0, "{reported}");
    }
    assert_eq!(spearman(&x, &x).unwrap(), 1.0);
    assert_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
}

#[test]
fn delaunay_triangles_have_empty_circumcircles() {
    let pts = random_points(50, 21);
    let g = delaunay(&pts).unwrap();
    for t in g.triangles() {
        let [a, b, c] = t.map(|i| g.node(i));
        let orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        for (i, &d) in g.nodes().iter().enumerate() {
            if t.contains(&i) {
                continue;
            }
            let s = in_circle(a, b, c, d) * orient.signum();
            assert!(s <= 1e-12, "node {i} inside circumcircle of {t:?}");
        }
    }
    // Euler: a triangulation of n points with h on the hull has 3n - 3 - h edges
    let edges = g.edges().len();
    let tris = g.triangles().len();
    assert_eq!(edges, (3 * tris + hull_edges(&g)) / 2);
}

fn hull_edges(g: &fieldscout_core::planner::TraversalGraph) -> usize {
    let mut count = std::collections::HashMap::new();
    for t in g.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count.values().filter(|&&n| n == 1).count()
}

#[test]
fn crafted_three_path_selection_matches_exhaustive_scoring() {
    let t = Hyperparams::new(0.5, 0.1, 0.01).unwrap();
    let m = GpModel::new(KernelKind::Matern32, t, vec![Point::new(0.8, 0.8)], vec![0.2]).unwrap();
    let nodes = [Point::new(0.1, 0.1), Point::new(0.3, 0.1), Point::new(0.1, 0.4), Point::new(0.8, 0.75)];
    let cache = PosteriorCache::new(&m, &nodes);
    let mut mask = CoverageMask::new(10, 10).unwrap();
    mask.set(1, 4);
    let w = UtilityWeights::default();
    let paths = [vec![0, 1], vec![0, 2], vec![0, 3]];
    let scored: Vec<_> = paths.iter().map(|p| utility(p, &cache, &mask, &w, 10.0).unwrap()).collect();
    // exhaustive oracle: I from the log-determinant, cost from Euclid, revisit from the mask
    let oracle: Vec<f64> = paths
        .iter()
        .map(|p| {
            let pts: Vec<Point> = p.iter().map(|&i| nodes[i]).collect();
            let cov = posterior_cov(&m, &pts);
            let a = DMatrix::from_row_slice(2, 2, &cov) / t.sigma_n2 + DMatrix::<f64>::identity(2, 2);
            let info = 0.5 * a.determinant().ln();
            let cost = pts[0].dist(pts[1]) * 10.0;
            let revisit = pts.iter().filter(|q| mask.at(**q)).count() as f64 / 2.0;
            info - 0.15 * cost - 400.0 * revisit
        })
        .collect();
    for (s, o) in scored.iter().zip(&oracle) {
        assert_relative_eq!(s.utility, *o, epsilon = 1e-9);
    }
    let best = (0..3).max_by(|&a, &b| oracle[a].total_cmp(&oracle[b])).unwrap();
    let (chosen, next) = select_best(&scored).unwrap();
    assert_eq!(chosen.waypoints, paths[best]);
    assert_eq!(next, paths[best][1]);

    let shifted: Vec<_> = scored
        .iter()
        .cloned()
        .map(|mut c| {
            c.utility += 123.0;
            c
        })
        .collect();
    assert_eq!(select_best(&shifted).unwrap().0.waypoints, chosen.waypoints);
}

#[test]
fn centred_half_side_footprint_sets_a_quarter() {
    let mut mask = CoverageMask::new(64, 64).unwrap();
    apply_footprint(&mut mask, Point::new(0.5, 0.5), 32).unwrap();
    assert_eq!(mask.count(), 64 * 64 / 4);
    let once = mask.clone();
    apply_footprint(&mut mask, Point::new(0.5, 0.5), 32).unwrap();
    assert_eq!(mask, once);
    apply_footprint(&mut mask, Point::new(0.5, 0.5), 64).unwrap();
    assert_eq!(mask.fraction(), 1.0);
}

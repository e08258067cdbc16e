use fieldscout_core::gp::{kernel_at, mutual_information, posterior_cov, GpModel, Hyperparams, KernelKind};
use fieldscout_core::metrics::{composite_scores, hamming, perceptual_hash, spearman, ssim};
use fieldscout_core::partition::{locate, rasterize, Field, Method, PartitionSettings};
use fieldscout_core::planner::{delaunay, enumerate_paths, in_circle, path_cost};
use fieldscout_core::raster::{pooled_samples, CoverageMask, WeedRaster};
use fieldscout_core::Point;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Point::new(x, y))
}

/// Small fields: a few soft blobs on a quantised background.
fn field() -> impl Strategy<Value = Field> {
    (8usize..=24, prop::collection::vec((point(), 0.05..0.3f64), 0..4), any::<u64>()).prop_map(|(res, blobs, salt)| {
        Field::from_fn(res, |p| {
            let bg = ((p.x * 7.0 + p.y * 3.0 + (salt % 5) as f64).floor() % 3.0) * 0.05;
            let b = blobs
                .iter()
                .map(|(c, r)| (-p.dist2(*c) / (2.0 * r * r)).exp())
                .fold(0.0, f64::max);
            (bg + b).min(1.0)
        })
        .unwrap()
    })
}

fn method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

fn theta() -> impl Strategy<Value = Hyperparams> {
    (0.1..2.0f64, 0.02..0.5f64, 0.001..0.2f64).prop_map(|(s, l, n)| Hyperparams::new(s, l, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_tile_the_field(f in field(), m in method(), seed in 0u64..100) {
        let mut settings = PartitionSettings::default();
        settings.voronoi.n_seeds = 16;
        let p = settings.build(m, &f, seed).unwrap();
        let res = f.res();
        prop_assert!(!p.is_empty());
        prop_assert_eq!(p.cells().iter().map(|c| c.area_px).sum::<usize>(), res * res);
        let mut sums = vec![(0.0, 0usize); p.len()];
        for (i, &l) in p.labels().iter().enumerate() {
            prop_assert!((l as usize) < p.len());
            sums[l as usize].0 += f.values()[i];
            sums[l as usize].1 += 1;
        }
        for (c, (s, n)) in p.cells().iter().zip(&sums) {
            prop_assert_eq!(c.area_px, *n);
            prop_assert!((c.mean_value - s / *n as f64).abs() < 1e-9);
        }
        let back = rasterize(&p, res).unwrap();
        for (i, &l) in p.labels().iter().enumerate() {
            prop_assert_eq!(back.values()[i], p.cells()[l as usize].mean_value);
            let q = Point::pixel_centre(i % res, i / res, res);
            prop_assert_eq!(locate(&p, q).unwrap(), l as usize);
        }
    }

    #[test]
    fn partition_builds_are_deterministic(f in field(), m in method(), seed in 0u64..100) {
        let settings = PartitionSettings::default();
        prop_assert_eq!(settings.build(m, &f, seed).unwrap(), settings.build(m, &f, seed).unwrap());
    }

    #[test]
    fn kernel_is_bounded_and_decreasing(t in theta(), a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for kind in [KernelKind::Matern32, KernelKind::Exponential] {
            let (klo, khi) = (kernel_at(kind, lo, &t), kernel_at(kind, hi, &t));
            prop_assert!(klo >= khi);
            prop_assert!(klo <= t.sigma_f2 && khi >= 0.0);
        }
    }

    #[test]
    fn information_is_nonnegative_and_grows_with_points(
        t in theta(),
        train in prop::collection::vec(point(), 0..8),
        pts in prop::collection::vec(point(), 1..6),
    ) {
        let ys = vec![0.3; train.len()];
        let m = GpModel::new(KernelKind::Matern32, t, train, ys).unwrap();
        let mut prev = 0.0;
        for d in 1..=pts.len() {
            let cov = posterior_cov(&m, &pts[..d]);
            let i = mutual_information(&cov, d, t.sigma_n2).unwrap();
            prop_assert!(i >= -1e-12);
            prop_assert!(i >= prev - 1e-9, "{} < {}", i, prev);
            prev = i;
        }
    }

    #[test]
    fn predictive_variance_within_prior(t in theta(), train in prop::collection::vec(point(), 1..10), q in point()) {
        let ys: Vec<f64> = train.iter().map(|p| p.x).collect();
        let m = GpModel::new(KernelKind::Matern32, t, train, ys).unwrap();
        let (mean, var) = m.predict_one(q);
        prop_assert!(var >= -1e-12 && var <= t.sigma_f2 + 1e-12);
        prop_assert_eq!(mean, m.predict_mean(q));
    }

    #[test]
    fn composite_scores_are_unit_interval(rows in prop::collection::vec(prop::array::uniform3(0.0..10.0f64), 2..8)) {
        let s = composite_scores(&rows).unwrap();
        prop_assert_eq!(s.len(), rows.len());
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        // a row no worse than every other on every metric scores highest
        for (i, r) in rows.iter().enumerate() {
            if rows.iter().all(|o| (0..3).all(|k| r[k] <= o[k])) {
                prop_assert!(s.iter().all(|v| *v <= s[i] + 1e-12));
            }
        }
    }

    #[test]
    fn spearman_is_symmetric_and_rank_based(
        xy in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 3..12),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = spearman(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            prop_assert!((spearman(&y, &x).unwrap() - r).abs() < 1e-12);
            let cubed: Vec<f64> = x.iter().map(|v| v * v * v + 1.0).collect();
            prop_assert!((spearman(&cubed, &y).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn image_metrics_are_symmetric(a in field()) {
        let b = Field::new(a.res(), a.values().iter().map(|v| (v * 0.7 + 0.1).min(1.0)).collect()).unwrap();
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        let (ha, hb) = (perceptual_hash(&a, 256).unwrap(), perceptual_hash(&b, 256).unwrap());
        let d = hamming(&ha, &hb).unwrap();
        prop_assert_eq!(d, hamming(&hb, &ha).unwrap());
        prop_assert!(d <= 256);
    }

    #[test]
    fn footprints_are_idempotent_and_bounded(w in 4usize..40, h in 4usize..40, pose in point(), size in 1usize..30) {
        let mut mask = CoverageMask::new(w, h).unwrap();
        mask.apply(pose, size);
        let once = mask.clone();
        prop_assert!(mask.count() >= 1 && mask.count() <= size * size);
        mask.apply(pose, size);
        prop_assert_eq!(&mask, &once);
    }

    #[test]
    fn pooled_values_stay_in_raster_range(
        vals in prop::collection::vec(0.0..1.0f64, 36),
        patch in 1usize..8,
        seed in any::<u64>(),
    ) {
        let r = WeedRaster::new(6, 6, vals.clone(), 0.01).unwrap();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for o in pooled_samples(&r, 20, patch, seed).unwrap() {
            prop_assert!(o.value >= lo - 1e-12 && o.value <= hi + 1e-12);
            prop_assert!(o.pos.in_unit_square());
        }
    }

    #[test]
    fn delaunay_is_empty_circle(pts in prop::collection::vec(point(), 3..30)) {
        let g = delaunay(&pts).unwrap();
        for t in g.triangles() {
            let [a, b, c] = t.map(|i| g.node(i));
            let orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            for (i, &d) in g.nodes().iter().enumerate() {
                if !t.contains(&i) {
                    prop_assert!(in_circle(a, b, c, d) * orient.signum() <= 1e-9);
                }
            }
        }
        for i in 0..g.len() {
            for &j in g.neighbours(i) {
                prop_assert!(g.neighbours(j).contains(&i));
            }
        }
    }

    #[test]
    fn walks_are_simple_and_follow_edges(pts in prop::collection::vec(point(), 3..15), horizon in 1usize..4) {
        let g = delaunay(&pts).unwrap();
        for w in enumerate_paths(&g, 0, horizon, 5000).unwrap() {
            prop_assert_eq!(w[0], 0);
            prop_assert!(w.len() >= 2 && w.len() <= horizon + 1);
            for pair in w.windows(2) {
                prop_assert!(g.neighbours(pair[0]).contains(&pair[1]));
            }
            let mut sorted = w.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), w.len());
        }
    }

    #[test]
    fn path_cost_triangle_inequality(a in point(), b in point(), c in point(), size in 1.0..100.0f64) {
        prop_assert!(path_cost(&[a, c], size) <= path_cost(&[a, b, c], size) + 1e-9);
    }
}

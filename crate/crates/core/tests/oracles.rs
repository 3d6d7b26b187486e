//! Checks against independent reference implementations.

use mgd_core::coreset::{
    build_divisive_tree, build_neighborhoods, convex_hull, hull_area_ratio, kmeans_baseline, polygon_area,
};
use mgd_core::data::{distance_to_circle, BlobClass, LabeledLatentSet, ManifoldSpec};
use mgd_core::geometry::tangent_frame;
use mgd_core::guidance::{log_affinity, mode_guidance, KernelKind};
use mgd_core::linalg::symmetric_eigen;
use mgd_core::metrics::{diversity, knn_accuracy, manifold_distance_stats, mmd, representativeness, set_l2, Bandwidth};
use mgd_core::oracle::MixtureOracle;
use mgd_core::rng::rng_from_seed;
use mgd_core::schedule::NoiseSchedule;
use ndarray::{array, Array1, Array2};
use rand::Rng;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// log p_t(x) written out directly: log Σ_k w_k N(x; √ᾱ μ_k, v I).
fn naive_log_density(x: &[f64], t: usize, w: &[f64], means: &Array2<f64>, var: f64, s: &NoiseSchedule) -> f64 {
    let ab = s.alpha_bar(t);
    let v = ab * var + 1.0 - ab;
    let d = x.len() as f64;
    let terms: Vec<f64> = (0..means.nrows())
        .map(|k| {
            let sq: f64 = (0..x.len()).map(|j| (x[j] - ab.sqrt() * means[[k, j]]).powi(2)).sum();
            w[k].ln() - sq / (2.0 * v) - 0.5 * d * (2.0 * std::f64::consts::PI * v).ln()
        })
        .collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

#[test]
fn score_matches_finite_differences_of_naive_density() {
    let s = NoiseSchedule::linear(50, 1e-4, 0.2).unwrap();
    let mut rng = rng_from_seed(11);
    let means = random_matrix(&mut rng, 5, 3, 2.0);
    let w = vec![0.1, 0.3, 0.2, 0.25, 0.15];
    let oracle = MixtureOracle::new(w.clone(), means.clone(), 0.2).unwrap();
    for _ in 0..50 {
        let t = rng.random_range(1..=50);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = oracle.score(Array1::from(x.clone()).view(), t, &s).unwrap();
        let h = 1e-5;
        for j in 0..3 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let fd = (naive_log_density(&xp, t, &w, &means, 0.2, &s) - naive_log_density(&xm, t, &w, &means, 0.2, &s))
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + fd.abs()), "t={t} j={j}: fd {fd} vs {}", g[j]);
        }
        let ld = oracle.log_density(Array1::from(x.clone()).view(), t, &s).unwrap();
        assert!((ld - naive_log_density(&x, t, &w, &means, 0.2, &s)).abs() < 1e-10);
    }
}

fn phi(kind: KernelKind, r: f64, s: f64) -> f64 {
    match kind {
        KernelKind::Rbf => r * r / (2.0 * s * s),
        KernelKind::Laplace => r / s,
        KernelKind::Imq => (1.0 + r * r / (2.0 * s * s)).ln(),
    }
}

#[test]
fn mode_guidance_matches_finite_differences_of_log_kernel() {
    let mut rng = rng_from_seed(12);
    for kind in KernelKind::ALL {
        for _ in 0..40 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let sigma = rng.random_range(0.3..2.0);
            let logk = |p: &[f64]| {
                let r = p.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                -phi(kind, r, sigma)
            };
            let g = mode_guidance(Array1::from(x.clone()).view(), Array1::from(c.clone()).view(), kind, sigma).unwrap();
            for j in 0..3 {
                let h = 1e-6;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let fd = (logk(&xp) - logk(&xm)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-5, "{kind:?}: fd {fd} vs {}", g[j]);
            }
            let la = log_affinity(Array1::from(x.clone()).view(), Array1::from(c.clone()).view(), kind, sigma);
            assert!((la - logk(&x)).abs() < 1e-12);
        }
    }
}

#[test]
fn guidance_worked_examples() {
    let z = array![0.0, 0.0];
    let g = mode_guidance(array![2.0, 0.0].view(), z.view(), KernelKind::Rbf, 1.0).unwrap();
    assert_eq!(g.to_vec(), vec![-2.0, 0.0]);
    let g = mode_guidance(array![3.0, 4.0].view(), z.view(), KernelKind::Laplace, 1.0).unwrap();
    assert!((g[0] + 0.6).abs() < 1e-15 && (g[1] + 0.8).abs() < 1e-15);
}

#[test]
fn eigendecomposition_agrees_with_nalgebra() {
    let mut rng = rng_from_seed(13);
    for n in [2usize, 3, 5, 8] {
        for _ in 0..20 {
            let a = random_matrix(&mut rng, n, n, 1.0);
            let sym = &a + &a.t();
            let ours = symmetric_eigen(sym.view()).unwrap();
            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| sym[[i, j]]);
            let mut reference: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.values.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
            // A v = λ v for every returned pair
            for k in 0..n {
                let v = ours.vectors.column(k);
                let av = sym.dot(&v);
                let err = (&av - &(&v * ours.values[k])).iter().fold(0.0f64, |m, e| m.max(e.abs()));
                assert!(err < 1e-9);
            }
        }
    }
}

#[test]
fn tangent_of_noiseless_arc_is_analytic() {
    let arc: Array2<f64> = Array2::from_shape_fn((31, 2), |(i, j)| {
        let th = (i as f64 - 15.0) * 0.01;
        if j == 0 {
            th.cos()
        } else {
            th.sin()
        }
    });
    let f = tangent_frame(arc.view(), 1, 1e-12).unwrap();
    assert!(f.basis[[1, 0]].abs() >= 0.99);
}

#[test]
fn four_point_tree_and_kmeans_match_enumeration() {
    let z = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
    let tree = build_divisive_tree(z.view(), 1).unwrap();
    let [a, b] = tree.root().children.unwrap();
    let mut halves = [tree.nodes[a].centroid.to_vec(), tree.nodes[b].centroid.to_vec()];
    halves.sort_by(|x, y| x[0].total_cmp(&y[0]));
    assert_eq!(halves, [vec![0.0, 0.5], vec![10.0, 0.5]]);

    // best 2-partition by exhaustive search
    let sse = |idx: &[usize]| {
        let m: Vec<f64> = (0..2).map(|j| idx.iter().map(|&i| z[[i, j]]).sum::<f64>() / idx.len() as f64).collect();
        idx.iter().map(|&i| (0..2).map(|j| (z[[i, j]] - m[j]).powi(2)).sum::<f64>()).sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1u32..(1 << 4) - 1 {
        let (p, q): (Vec<usize>, Vec<usize>) = (0..4).partition(|&i| mask & (1 << i) != 0);
        let cost = sse(&p) + sse(&q);
        if cost < best.0 {
            best = (cost, mask);
        }
    }
    let km = kmeans_baseline(z.view(), 2).unwrap();
    let mut got: Vec<Vec<f64>> = km.outer_iter().map(|r| r.to_vec()).collect();
    got.sort_by(|x, y| x[0].total_cmp(&y[0]));
    assert_eq!(got, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
    assert_eq!(best.0, 1.0);
    assert_eq!(kmeans_baseline(z.view(), 1).unwrap().row(0).to_vec(), vec![5.0, 0.5]);
}

#[test]
fn neighborhoods_match_distance_scan() {
    let grid: Array2<f64> =
        Array2::from_shape_fn((25, 2), |(i, j)| if j == 0 { (i / 5) as f64 } else { (i % 5) as f64 });
    let centers = [array![2.0, 2.0], array![0.0, 0.0], array![4.2, 1.7]];
    let sel: Vec<_> = centers.iter().map(|c| (c.clone(), None, None)).collect();
    let cs = build_neighborhoods(grid.view(), &sel, 1.5).unwrap();
    for (entry, c) in cs.entries.iter().zip(&centers) {
        let scan: Vec<usize> = (0..25)
            .filter(|&i| ((grid[[i, 0]] - c[0]).powi(2) + (grid[[i, 1]] - c[1]).powi(2)).sqrt() <= 1.5)
            .collect();
        assert_eq!(entry.neighborhood, scan);
    }
}

#[test]
fn hull_worked_examples() {
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    assert_eq!(polygon_area(&convex_hull(&square)), 1.0);
    let c = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let z = array![[-0.5, -0.5], [1.5, -0.5], [1.5, 1.5], [-0.5, 1.5], [0.5, 0.5]];
    assert_eq!(hull_area_ratio(c.view(), z.view()).unwrap().ratio, 0.25);
    assert_eq!(hull_area_ratio(z.view(), z.view()).unwrap().ratio, 1.0);
    let line = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
    let r = hull_area_ratio(line.view(), z.view()).unwrap();
    assert!(r.degenerate && r.ratio == 0.0);
}

fn brute_mmd(a: &Array2<f64>, b: &Array2<f64>, h: f64) -> f64 {
    let k = |x: ndarray::ArrayView1<f64>, y: ndarray::ArrayView1<f64>| {
        (-(&x - &y).mapv(|v| v * v).sum() / (2.0 * h * h)).exp()
    };
    let (n, m) = (a.nrows() as f64, b.nrows() as f64);
    let mut xx = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.nrows() {
            xx += k(a.row(i), a.row(j));
        }
    }
    let mut yy = 0.0;
    for i in 0..b.nrows() {
        for j in 0..b.nrows() {
            yy += k(b.row(i), b.row(j));
        }
    }
    let mut xy = 0.0;
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            xy += k(a.row(i), b.row(j));
        }
    }
    (xx / (n * n) + yy / (m * m) - 2.0 * xy / (n * m)).max(0.0).sqrt()
}

#[test]
fn set_metrics_match_brute_force() {
    let mut rng = rng_from_seed(14);
    let a = random_matrix(&mut rng, 50, 3, 1.0);
    let b = random_matrix(&mut rng, 50, 3, 1.5);
    let got = mmd(a.view(), b.view(), Bandwidth::Fixed(0.8)).unwrap();
    assert!((got - brute_mmd(&a, &b, 0.8)).abs() <= 1e-12);

    let s = random_matrix(&mut rng, 20, 3, 1.0);
    let d = random_matrix(&mut rng, 30, 3, 1.0);
    let cos =
        |x: ndarray::ArrayView1<f64>, y: ndarray::ArrayView1<f64>| x.dot(&y) / (x.dot(&x).sqrt() * y.dot(&y).sqrt());
    let mut rep = f64::INFINITY;
    for i in 0..20 {
        let mut best = f64::NEG_INFINITY;
        for j in 0..30 {
            best = best.max(cos(s.row(i), d.row(j)));
        }
        rep = rep.min(best);
    }
    assert!((representativeness(s.view(), d.view()).unwrap() - rep).abs() <= 1e-12);

    let p = random_matrix(&mut rng, 25, 3, 1.0);
    let mut top = f64::NEG_INFINITY;
    for i in 0..25 {
        for j in 0..25 {
            if i != j {
                top = top.max(cos(p.row(i), p.row(j)));
            }
        }
    }
    assert!((diversity(p.view()).unwrap() - (1.0 - top)).abs() <= 1e-12);

    let shift = array![0.3, -1.2, 2.0];
    let moved = &a + &shift;
    let l2 = set_l2(a.view(), moved.view()).unwrap();
    assert!((l2 - shift.dot(&shift).sqrt()).abs() < 1e-12);
}

#[test]
fn knn_matches_exhaustive_classification() {
    let spec = ManifoldSpec::Blobs {
        classes: vec![
            BlobClass { means: vec![vec![-1.0, 0.0]], std: 1.0 },
            BlobClass { means: vec![vec![1.0, 0.0]], std: 1.0 },
        ],
    };
    let train = spec.sample(40, 0.0, &mut rng_from_seed(15)).unwrap();
    let test = spec.sample(100, 0.0, &mut rng_from_seed(16)).unwrap();
    let mut hits = 0;
    for (q, &label) in test.points.outer_iter().zip(&test.labels) {
        let mut all: Vec<(f64, usize)> = train
            .points
            .outer_iter()
            .zip(&train.labels)
            .map(|(p, &l)| ((&p - &q).mapv(|v| v * v).sum().sqrt(), l))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ones = all[..3].iter().filter(|e| e.1 == 1).count();
        let pred = usize::from(ones >= 2);
        hits += usize::from(pred == label);
    }
    let expect = hits as f64 / 200.0;
    assert_eq!(knn_accuracy(&train, &test, 3).unwrap(), expect);

    let single = LabeledLatentSet::new(array![[0.0, 0.0], [1.0, 1.0]], vec![1, 1]).unwrap();
    let prevalence = test.labels.iter().filter(|&&l| l == 1).count() as f64 / test.len() as f64;
    assert_eq!(knn_accuracy(&single, &test, 1).unwrap(), prevalence);
}

#[test]
fn manifold_stats_match_direct_average() {
    let spec = ManifoldSpec::circle(1.5, 3, 0.4);
    let mut rng = rng_from_seed(17);
    let pts = random_matrix(&mut rng, 64, 2, 3.0);
    let direct: Vec<f64> = pts.outer_iter().map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.5).abs()).collect();
    let mean = direct.iter().sum::<f64>() / 64.0;
    let st = manifold_distance_stats(pts.view(), &spec).unwrap();
    assert!((st.mean - mean).abs() < 1e-12);
    assert_eq!(st.max, direct.iter().cloned().fold(0.0, f64::max));
    for p in pts.outer_iter() {
        assert!((distance_to_circle(p, 1.5) - ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.5).abs()).abs() < 1e-15);
    }
    let blobs = ManifoldSpec::Blobs { classes: vec![BlobClass { means: vec![vec![0.0, 0.0]], std: 1.0 }] };
    assert!(manifold_distance_stats(pts.view(), &blobs).is_err());
}

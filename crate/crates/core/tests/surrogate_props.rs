use knobtune_core::acquisition::expected_improvement;
use knobtune_core::surrogate::{ForestModel, ForestParams, GpModel, Kernel, Stationary, Surrogate};
use knobtune_core::transfer::{ranking_loss, rgpe_weights_from_predictions};
use knobtune_core::Sense;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Family {
    Rbf,
    Matern,
    Hamming,
    Mixed,
}

/// Independent kernel formulas; `split` columns are numeric, the rest categorical.
fn oracle_k(f: Family, ls: &[f64], var: f64, split: usize, a: &[f64], b: &[f64]) -> f64 {
    let sq = |cols: std::ops::Range<usize>| -> f64 { cols.map(|c| ((a[c] - b[c]) / ls[c]).powi(2)).sum() };
    let ham = |cols: std::ops::Range<usize>| -> f64 {
        cols.filter(|&c| a[c] != b[c]).map(|c| 1.0 / ls[c]).sum()
    };
    let matern = |r2: f64| {
        let r = r2.sqrt();
        (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp()
    };
    let d = a.len();
    match f {
        Family::Rbf => var * (-0.5 * sq(0..d)).exp(),
        Family::Matern => var * matern(sq(0..d)),
        Family::Hamming => var * (-ham(0..d)).exp(),
        Family::Mixed => var * matern(sq(0..split)) * (-ham(split..d)).exp(),
    }
}

fn build_kernel(f: Family, ls: &[f64], var: f64, split: usize) -> Kernel {
    let d = ls.len();
    let st = |cols: Vec<usize>, v: f64| Stationary {
        lengthscales: cols.iter().map(|&c| ls[c]).collect(),
        columns: cols,
        variance: v,
    };
    match f {
        Family::Rbf => Kernel::Rbf(st((0..d).collect(), var)),
        Family::Matern => Kernel::Matern52(st((0..d).collect(), var)),
        Family::Hamming => Kernel::Hamming(st((0..d).collect(), var)),
        Family::Mixed => Kernel::Product(vec![
            Kernel::Matern52(st((0..split).collect(), var)),
            Kernel::Hamming(st((split..d).collect(), 1.0)),
        ]),
    }
}

#[derive(Debug, Clone)]
struct Problem {
    family: Family,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    q: Vec<Vec<f64>>,
    ls: Vec<f64>,
    var: f64,
    noise: f64,
    split: usize,
}

fn problem() -> impl Strategy<Value = Problem> {
    let family = prop_oneof![Just(Family::Rbf), Just(Family::Matern), Just(Family::Hamming), Just(Family::Mixed)];
    (family, 2usize..5, 1usize..=50, any::<u64>()).prop_map(|(family, d, n, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let split = match family {
            Family::Hamming => 0,
            Family::Mixed => d / 2,
            _ => d,
        };
        // categorical columns hold one of three levels
        let point = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..d).map(|c| if c < split { rng.gen::<f64>() } else { rng.gen_range(0..3) as f64 }).collect()
        };
        let x: Vec<Vec<f64>> = (0..n).map(|_| point(&mut rng)).collect();
        let q: Vec<Vec<f64>> = (0..5).map(|_| point(&mut rng)).collect();
        let y = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let ls = (0..d).map(|_| rng.gen_range(0.1..2.0)).collect();
        Problem {
            family,
            x,
            y,
            q,
            ls,
            var: rng.gen_range(0.5..3.0),
            noise: rng.gen_range(1e-3..0.1),
            split,
        }
    })
}

/// Dense standardized solve of the predictive equations with nalgebra.
fn dense_oracle(p: &Problem, q: &[f64]) -> (f64, f64) {
    let n = p.x.len();
    let mean = p.y.iter().sum::<f64>() / n as f64;
    let var = p.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let scale = if var.sqrt() > 1e-12 && n > 1 { var.sqrt() } else { 1.0 };
    let ys = DVector::from_iterator(n, p.y.iter().map(|v| (v - mean) / scale));
    let k = |a: &[f64], b: &[f64]| oracle_k(p.family, &p.ls, p.var, p.split, a, b);
    let mut kmat = DMatrix::from_fn(n, n, |i, j| k(&p.x[i], &p.x[j]));
    for i in 0..n {
        kmat[(i, i)] += p.noise;
    }
    let kq = DVector::from_iterator(n, p.x.iter().map(|xi| k(xi, q)));
    let lu = kmat.lu();
    let alpha = lu.solve(&ys).unwrap();
    let v = lu.solve(&kq).unwrap();
    let m = kq.dot(&alpha);
    let s2 = (k(q, q) - kq.dot(&v)).max(0.0);
    (mean + scale * m, scale * scale * s2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn gp_matches_dense_solve(p in problem()) {
        let kernel = build_kernel(p.family, &p.ls, p.var, p.split);
        let gp = GpModel::fit(p.x.clone(), &p.y, kernel, p.noise).unwrap();
        prop_assert_eq!(gp.jitter(), 0.0);
        for q in p.q.iter().chain(p.x.iter().take(3)) {
            let (m, v) = gp.predict(q);
            let (om, ov) = dense_oracle(&p, q);
            prop_assert!((m - om).abs() <= 1e-8 * (1.0 + om.abs()), "mean {} vs {}", m, om);
            prop_assert!((v - ov).abs() <= 1e-8 * (1.0 + ov.abs()), "var {} vs {}", v, ov);
        }
    }

    #[test]
    fn covariance_is_positive_semidefinite(p in problem()) {
        let kernel = build_kernel(p.family, &p.ls, p.var, p.split);
        let n = p.x.len();
        let k = knobtune_core::surrogate::covariance_matrix(&kernel, &p.x);
        let m = DMatrix::from_row_slice(n, n, &k);
        prop_assert!((&m - m.transpose()).amax() == 0.0);
        let min = m.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-9 * p.var * n as f64, "min eigenvalue {}", min);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forest_statistics(n in 2usize..60, d in 1usize..5, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let categorical: Vec<bool> = (0..d).map(|c| c % 2 == 1).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| categorical.iter().map(|&c| if c { rng.gen_range(0..4) as f64 } else { rng.gen() }).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let params = ForestParams { n_trees: 20, ..ForestParams::default() };
        let f = ForestModel::fit(&x, &y, &categorical, &params, seed).unwrap();
        prop_assert_eq!(f.trees.len(), 20);
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        for q in x.iter().take(10) {
            let t = f.tree_predictions(q);
            prop_assert!(t.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            let var = t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t.len() as f64;
            let (m, v) = f.predict(q);
            prop_assert!((m - mean).abs() < 1e-9 && (v - var).abs() < 1e-9);
        }
        prop_assert_eq!(f.clone(), ForestModel::fit(&x, &y, &categorical, &params, seed).unwrap());
    }

    #[test]
    fn ei_properties(mean in -10.0..10.0f64, std in 1e-3..5.0f64, best in -10.0..10.0f64) {
        for sense in [Sense::Minimize, Sense::Maximize] {
            let ei = expected_improvement(mean, std, best, sense);
            let gap = match sense { Sense::Minimize => best - mean, Sense::Maximize => mean - best };
            prop_assert!(ei >= 0.0);
            prop_assert!(ei + 1e-12 >= gap.max(0.0));
            prop_assert!(expected_improvement(mean, std * 1.5, best, sense) + 1e-12 >= ei);
        }
        let a = expected_improvement(mean, std, best, Sense::Minimize);
        let b = expected_improvement(-mean, std, -best, Sense::Maximize);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ranking_loss_matches_enumeration(pairs in prop::collection::vec((-3i32..3, -3i32..3), 2..30)) {
        let m: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let mut brute = 0u64;
        for j in 0..m.len() {
            for k in 0..m.len() {
                let predicted = m[j] <= m[k];
                let actual = y[j] <= y[k];
                if predicted != actual {
                    brute += 1;
                }
            }
        }
        prop_assert_eq!(ranking_loss(&m, &y).unwrap(), brute);
    }

    #[test]
    fn rgpe_weights_are_a_distribution(
        cands in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 8), 1..5),
        y in prop::collection::vec(-5.0..5.0f64, 8),
        samples in 1usize..60,
        seed in any::<u64>(),
    ) {
        let w = rgpe_weights_from_predictions(&cands, &y, samples, seed).unwrap();
        prop_assert_eq!(w.len(), cands.len());
        prop_assert!(w.iter().all(|v| *v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

use super::*;
use crate::space::Value;
use alloc::string::ToString;
use alloc::vec;

fn results(pairs: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
    pairs.iter().map(|(n, v)| (n.to_string(), v.to_vec())).collect()
}

#[test]
fn improvement_examples() {
    assert_eq!(improvement_over_default(120.0, 100.0, Sense::Maximize).unwrap(), 20.0);
    assert_eq!(improvement_over_default(150.0, 200.0, Sense::Minimize).unwrap(), 25.0);
    assert_eq!(improvement_over_default(7.0, 7.0, Sense::Minimize).unwrap(), 0.0);
    assert!(improvement_over_default(1.0, 0.0, Sense::Minimize).is_err());
}

#[test]
fn ranking_examples() {
    let t = average_ranking(&results(&[("a", &[1.0, 2.0]), ("b", &[3.0, 4.0])]), Sense::Minimize).unwrap();
    assert_eq!(t.mean_rank["a"], 1.0);
    assert_eq!(t.mean_rank["b"], 2.0);
    let t = average_ranking(&results(&[("a", &[1.0, 2.0]), ("b", &[2.0, 1.0])]), Sense::Minimize).unwrap();
    assert_eq!(t.mean_rank["a"], 1.5);
    assert_eq!(t.mean_rank["b"], 1.5);
    assert!(average_ranking(&results(&[("a", &[1.0]), ("b", &[1.0, 2.0])]), Sense::Minimize).is_err());
}

#[test]
fn ranking_sorts_sessions_first() {
    // a: sessions {5, 1, 9} → sorted (max) 9, 5, 1; b: 8, 6, 2
    let t = average_ranking(&results(&[("a", &[5.0, 1.0, 9.0]), ("b", &[2.0, 8.0, 6.0])]), Sense::Maximize).unwrap();
    assert_eq!(t.round_ranks["a"], vec![1.0, 2.0, 2.0]);
    assert_eq!(t.round_ranks["b"], vec![2.0, 1.0, 1.0]);
    assert!((t.mean_rank["a"] - 5.0 / 3.0).abs() < 1e-15);
}

#[test]
fn quartile_values() {
    assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), [2.0, 3.0, 4.0]);
    assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap(), [1.75, 2.5, 3.25]);
    assert!(quartiles(&[]).is_err());
}

#[test]
fn ridge_fits_linear_data() {
    let f = synthetic::linear(&[3.0, -2.0, 0.5, 1.0]);
    let (configs, y) = f.sample_dataset(60, 3);
    let opts = SelectOptions { folds: 5, draws: 4 };
    let sel = model_select(&f.space, &configs, &y, &[ModelKind::Ridge, ModelKind::Knn], &opts, 0).unwrap();
    let ridge = sel.scores.iter().find(|s| s.model == ModelKind::Ridge).unwrap();
    assert!(ridge.r2 >= 0.99, "{}", ridge.r2);
    assert_eq!(sel.winner, ModelKind::Ridge);
    assert_eq!(sel, model_select(&f.space, &configs, &y, &[ModelKind::Ridge, ModelKind::Knn], &opts, 0).unwrap());
}

#[test]
fn ties_favor_rf() {
    let f = synthetic::linear(&[1.0, 1.0]);
    let (configs, _) = f.sample_dataset(20, 0);
    let y = vec![2.0; 20];
    let opts = SelectOptions { folds: 4, draws: 2 };
    let sel = model_select(&f.space, &configs, &y, &[ModelKind::Knn, ModelKind::Ridge, ModelKind::Rf], &opts, 0).unwrap();
    assert_eq!(sel.winner, ModelKind::Rf);
    assert!(model_select(&f.space, &configs[..3], &y[..3], &[ModelKind::Rf], &opts, 0).is_err());
}

#[test]
fn constant_benchmark() {
    let f = synthetic::heterogeneous();
    let (configs, _) = f.sample_dataset(30, 0);
    let y = vec![5.0; 30];
    let b = build_benchmark(
        f.space.clone(),
        &configs,
        &y,
        Sense::Minimize,
        f.space.default_config(),
        &ModelParams::Rf(ForestParams::default()),
        Provenance::default(),
        1,
    )
    .unwrap();
    b.validate().unwrap();
    assert_eq!(b.default_value, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        assert_eq!(bench_evaluate(&b, &f.space.random_config(&mut rng)).unwrap(), 5.0);
    }
    let bad = Configuration::new(vec![Value::Int(0)]);
    assert!(bench_evaluate(&b, &bad).is_err());
}

#[test]
fn knn_modes() {
    let f = synthetic::linear(&[1.0]);
    let configs: Vec<Configuration> = [0.0, 0.5, 1.0].iter().map(|x| Configuration::new(vec![Value::Real(*x)])).collect();
    let y = [0.0, 1.0, 4.0];
    let m = RegressionModel::fit(&f.space, &configs, &y, &ModelParams::Knn { k: 2, distance_weighted: false }, 0).unwrap();
    assert_eq!(m.predict(&f.space, &Configuration::new(vec![Value::Real(0.2)])), 0.5);
    let m = RegressionModel::fit(&f.space, &configs, &y, &ModelParams::Knn { k: 3, distance_weighted: true }, 0).unwrap();
    assert_eq!(m.predict(&f.space, &configs[2]), 4.0);
}

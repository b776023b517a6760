use knobtune::benchfile::{benchmark_to_string, parse_benchmark};
use knobtune::spacefile::{config_from_json, config_to_json, parse_space, space_to_string};
use knobtune::table::{parse_rows, trajectory_rows, trajectory_to_string, training_to_string};
use knobtune_core::bench::{bench_evaluate, build_benchmark, synthetic, ModelParams, Provenance};
use knobtune_core::surrogate::ForestParams;
use knobtune_core::{ConfigSpace, History, KnobSpec, Sense, Status};
use proptest::prelude::*;

fn space() -> impl Strategy<Value = ConfigSpace> {
    let knob = prop_oneof![
        (-1e6..1e6f64, 1e-3..1e6f64).prop_map(|(lo, w)| (0u8, lo, lo + w, 0usize)),
        (-1000.0..1000.0f64, 1.0..5000.0f64).prop_map(|(lo, w)| (1u8, lo.round(), (lo + w).round(), 0)),
        (1usize..6).prop_map(|k| (2u8, 0.0, 0.0, k)),
    ];
    prop::collection::vec(knob, 1..8).prop_map(|ks| {
        let knobs = ks
            .iter()
            .enumerate()
            .map(|(i, &(t, lo, hi, k))| match t {
                0 => KnobSpec::continuous(format!("real_{i}"), lo, hi, hi).unwrap(),
                1 => KnobSpec::integer(format!("int_{i}"), lo as i64, hi as i64, lo as i64).unwrap(),
                _ => KnobSpec::categorical(format!("cat_{i}"), (0..k).map(|c| format!("level \"{c}\", x")), k / 2).unwrap(),
            })
            .collect();
        ConfigSpace::new("prop space", knobs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn space_document_round_trip(s in space()) {
        prop_assert_eq!(parse_space(&space_to_string(&s)).unwrap(), s);
    }

    #[test]
    fn configuration_round_trips(s in space(), seed in any::<u64>()) {
        let configs = s.random_sample(6, seed);
        for c in &configs {
            prop_assert_eq!(&config_from_json(&s, &config_to_json(&s, c)).unwrap(), c);
        }
        let mut h = History::new(Sense::Maximize);
        for (i, c) in configs.iter().enumerate() {
            let status = if i % 4 == 3 { Status::Failed } else { Status::Ok };
            h.push(c.clone(), (i as f64).sqrt() * 1e-3, status, None);
        }
        let rows = trajectory_rows(&h, Clone::clone);
        let back = parse_rows(&trajectory_to_string(&s, &rows), &s).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(&a.config, &b.config);
            prop_assert_eq!(Some(a.value), b.value);
            prop_assert_eq!(a.status, b.status);
            prop_assert_eq!(a.best_so_far, b.best_so_far);
        }
        let training: Vec<_> = rows.iter().map(|r| (r.config.clone(), r.value, r.status)).collect();
        let back = parse_rows(&training_to_string(&s, &training), &s).unwrap();
        prop_assert_eq!(back.len(), training.len());
        for (a, b) in training.iter().zip(&back) {
            prop_assert_eq!(&a.0, &b.config);
            prop_assert_eq!(a.2, b.status);
        }
    }
}

#[test]
fn benchmark_round_trip_predicts_identically() {
    let f = synthetic::heterogeneous();
    let (configs, y) = f.sample_dataset(120, 5);
    let params = ModelParams::Rf(ForestParams { n_trees: 30, ..ForestParams::default() });
    let bench = build_benchmark(
        f.space.clone(),
        &configs,
        &y,
        f.sense,
        f.space.default_config(),
        &params,
        Provenance { dataset: "lhs".into(), n_samples: 120, selection: None },
        3,
    )
    .unwrap();
    let text = benchmark_to_string(&bench);
    let loaded = parse_benchmark(&text).unwrap();
    assert_eq!(loaded, bench);
    assert_eq!(benchmark_to_string(&loaded), text);
    for c in f.space.random_sample(100, 11) {
        assert_eq!(bench_evaluate(&loaded, &c).unwrap().to_bits(), bench_evaluate(&bench, &c).unwrap().to_bits());
    }
    let legacy = text.replacen("\"surrogate\"", "\"forest\"", 1);
    assert_eq!(parse_benchmark(&legacy).unwrap(), bench);
}

#[test]
fn benchmark_layout_is_checked() {
    let f = synthetic::heterogeneous();
    let (configs, y) = f.sample_dataset(30, 1);
    let params = ModelParams::Ridge { alpha: 1.0 };
    let bench = build_benchmark(f.space.clone(), &configs, &y, f.sense, f.space.default_config(), &params, Provenance::default(), 0).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&benchmark_to_string(&bench)).unwrap();
    doc["space"]["knobs"].as_array_mut().unwrap().pop();
    let err = parse_benchmark(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("layout") || err.contains("knob"), "{err}");
}

mod common;

use knobtune_core::space::Scheme;
use knobtune_core::{ConfigSpace, KnobKind, Value};
use proptest::prelude::*;

/// Checks exact stratification of every numeric column of an LHS design.
fn assert_stratified(space: &ConfigSpace, n: usize, seed: u64) {
    let design = space.lhs_sample(n, seed);
    assert_eq!(design.len(), n);
    for (j, knob) in space.knobs().iter().enumerate() {
        match knob.kind() {
            KnobKind::Continuous { .. } => {
                let mut u: Vec<f64> = design.iter().map(|c| knob.to_unit(&c.values()[j])).collect();
                u.sort_by(f64::total_cmp);
                for (i, v) in u.iter().enumerate() {
                    assert_eq!((v * n as f64).floor() as usize, i, "knob {} n {n} seed {seed}", knob.name());
                }
            }
            KnobKind::Integer { lower, upper } => {
                // value v covers [(v - lower) / span, (v - lower + 1) / span) of the unit interval
                let span = (upper - lower + 1) as f64;
                let mut v: Vec<i64> = design
                    .iter()
                    .map(|c| match c.values()[j] {
                        Value::Int(x) => x,
                        _ => panic!("integer knob holds a non-integer"),
                    })
                    .collect();
                v.sort_unstable();
                for (i, x) in v.iter().enumerate() {
                    let lo = (x - lower) as f64 / span;
                    let hi = (x - lower + 1) as f64 / span;
                    let (s_lo, s_hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                    assert!(lo < s_hi && s_lo < hi, "knob {} n {n} seed {seed}", knob.name());
                }
            }
            KnobKind::Categorical { categories } => {
                let k = categories.len();
                let mut counts = vec![0usize; k];
                for c in &design {
                    if let Value::Category(x) = c.values()[j] {
                        counts[x] += 1;
                    }
                }
                let (min, max) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                assert!(max - min <= 1, "categories not cycled: {counts:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lhs_stratification_is_exact(space in common::space(5), n in 1usize..=100, seed in any::<u64>()) {
        assert_stratified(&space, n, seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_decode_round_trip(space in common::space(6), seed in any::<u64>()) {
        for c in space.random_sample(5, seed) {
            space.validate(&c).unwrap();
            for scheme in [Scheme::Unit, Scheme::UnitOneHot, Scheme::Raw] {
                let e = space.encode(&c, scheme).unwrap();
                prop_assert_eq!(e.coords.len(), space.layout(scheme).width());
                let back = space.decode(&e).unwrap();
                for (k, (a, b)) in space.knobs().iter().zip(back.values().iter().zip(c.values())) {
                    match (a, b) {
                        (Value::Real(x), Value::Real(y)) => {
                            let tol = 1e-12 * (1.0 + y.abs());
                            prop_assert!((x - y).abs() <= tol, "{}: {} vs {}", k.name(), x, y);
                        }
                        _ => prop_assert_eq!(a, b),
                    }
                }
            }
        }
    }

    #[test]
    fn unit_coordinates_stay_in_range(space in common::space(6), seed in any::<u64>()) {
        for c in space.lhs_sample(7, seed) {
            for scheme in [Scheme::Unit, Scheme::UnitOneHot] {
                let e = space.encode(&c, scheme).unwrap();
                prop_assert!(e.coords.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let onehot = space.encode(&c, Scheme::UnitOneHot).unwrap();
            for span in space.layout(Scheme::UnitOneHot).spans().iter().filter(|s| s.categorical) {
                let block = &onehot.coords[span.start..span.start + span.len];
                prop_assert_eq!(block.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn decode_of_arbitrary_coordinates_is_valid(space in common::space(6), coords in prop::collection::vec(-2.0..3.0f64, 40)) {
        for scheme in [Scheme::Unit, Scheme::UnitOneHot, Scheme::Raw] {
            let w = space.layout(scheme).width();
            let c = space.decode_coords(&coords[..w.min(coords.len())], scheme);
            if w <= coords.len() {
                space.validate(&c.unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn subspace_restrict_complete(space in common::space(6), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let names = space.knob_names();
        let chosen = names[pick.index(names.len())];
        let (sub, completion) = space.subspace(&[chosen]).unwrap();
        prop_assert_eq!(sub.len(), 1);
        for c in space.random_sample(4, seed) {
            let full = completion.complete(&completion.restrict(&c));
            let i = space.index_of(chosen).unwrap();
            for (j, v) in full.values().iter().enumerate() {
                let expected = if j == i { c.values()[j] } else { space.knobs()[j].default_value() };
                prop_assert_eq!(*v, expected);
            }
        }
    }
}

//! Strategies shared by the property tests.
#![allow(dead_code)]

use knobtune_core::{ConfigSpace, KnobSpec};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum KnobShape {
    Continuous(f64, f64),
    Integer(i64, i64),
    Categorical(usize),
}

pub fn knob_shape() -> impl Strategy<Value = KnobShape> {
    prop_oneof![
        (-100.0..100.0f64, 0.1..100.0f64).prop_map(|(lo, w)| KnobShape::Continuous(lo, lo + w)),
        (-50i64..50, 1i64..200).prop_map(|(lo, w)| KnobShape::Integer(lo, lo + w)),
        (1usize..7).prop_map(KnobShape::Categorical),
    ]
}

pub fn build_space(shapes: &[KnobShape]) -> ConfigSpace {
    let knobs = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| match *s {
            KnobShape::Continuous(lo, hi) => KnobSpec::continuous(format!("c{i}"), lo, hi, lo).unwrap(),
            KnobShape::Integer(lo, hi) => KnobSpec::integer(format!("i{i}"), lo, hi, hi).unwrap(),
            KnobShape::Categorical(k) => {
                KnobSpec::categorical(format!("k{i}"), (0..k).map(|c| format!("v{c}")), k - 1).unwrap()
            }
        })
        .collect();
    ConfigSpace::new("generated", knobs).unwrap()
}

pub fn space(max_knobs: usize) -> impl Strategy<Value = ConfigSpace> {
    prop::collection::vec(knob_shape(), 1..=max_knobs).prop_map(|s| build_space(&s))
}

//! Heterogeneous configuration spaces.
//!
//! A [`ConfigSpace`] is an ordered list of knobs. The order is significant: it
//! fixes the layout of every encoding and the column order of every file that
//! carries configurations. A [`Configuration`] stores one [`Value`] per knob
//! in that order.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{floor, round};
use crate::{Error, Result};

/// Domain of a single knob.
#[derive(Debug, Clone, PartialEq)]
pub enum KnobKind {
    Continuous { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { categories: Vec<String> },
}

/// A knob value. Categorical values are indices into the knob's category list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Category(usize),
}

impl Value {
    /// Numeric view of the value (category index for categoricals).
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(v) => v,
            Value::Int(v) => v as f64,
            Value::Category(v) => v as f64,
        }
    }

    fn key(&self) -> u64 {
        match *self {
            Value::Real(v) => v.to_bits(),
            Value::Int(v) => v as u64,
            Value::Category(v) => v as u64,
        }
    }
}

/// A typed knob definition with its default value.
#[derive(Debug, Clone, PartialEq)]
pub struct KnobSpec {
    name: String,
    kind: KnobKind,
    default: Value,
}

impl KnobSpec {
    /// Validates and builds a knob.
    pub fn new(name: impl Into<String>, kind: KnobKind, default: Value) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidKnob {
            knob: name.clone(),
            reason,
        };
        if name.is_empty() {
            return Err(invalid("empty name".into()));
        }
        match &kind {
            KnobKind::Continuous { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite()) {
                    return Err(invalid("bounds must be finite".into()));
                }
                if lower >= upper {
                    return Err(invalid(format!("lower {lower} must be < upper {upper}")));
                }
            }
            KnobKind::Integer { lower, upper } => {
                if lower >= upper {
                    return Err(invalid(format!("lower {lower} must be < upper {upper}")));
                }
            }
            KnobKind::Categorical { categories } => {
                if categories.is_empty() {
                    return Err(invalid("no categories".into()));
                }
                let mut seen = BTreeSet::new();
                for c in categories {
                    if !seen.insert(c.as_str()) {
                        return Err(invalid(format!("duplicate category `{c}`")));
                    }
                }
            }
        }
        let spec = KnobSpec {
            name: name.clone(),
            kind,
            default,
        };
        if !spec.contains(&default) {
            return Err(invalid(format!("default {default:?} outside domain")));
        }
        Ok(spec)
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64, default: f64) -> Result<Self> {
        Self::new(name, KnobKind::Continuous { lower, upper }, Value::Real(default))
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64, default: i64) -> Result<Self> {
        Self::new(name, KnobKind::Integer { lower, upper }, Value::Int(default))
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
        default: usize,
    ) -> Result<Self> {
        let categories = categories.into_iter().map(Into::into).collect();
        Self::new(name, KnobKind::Categorical { categories }, Value::Category(default))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &KnobKind {
        &self.kind
    }

    pub fn default_value(&self) -> Value {
        self.default
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, KnobKind::Categorical { .. })
    }

    /// Number of categories, `None` for numeric knobs.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            KnobKind::Categorical { categories } => Some(categories.len()),
            _ => None,
        }
    }

    /// Whether `value` has the right variant and lies in the domain.
    pub fn contains(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (KnobKind::Continuous { lower, upper }, Value::Real(v)) => {
                v.is_finite() && *lower <= *v && *v <= *upper
            }
            (KnobKind::Integer { lower, upper }, Value::Int(v)) => *lower <= *v && *v <= *upper,
            (KnobKind::Categorical { categories }, Value::Category(c)) => *c < categories.len(),
            _ => false,
        }
    }

    /// Maps a value affinely onto `[0, 1]`. Categoricals map to `index / (k - 1)`.
    pub fn to_unit(&self, value: &Value) -> f64 {
        match (&self.kind, value) {
            (KnobKind::Continuous { lower, upper }, Value::Real(v)) => (v - lower) / (upper - lower),
            (KnobKind::Integer { lower, upper }, Value::Int(v)) => {
                (v - lower) as f64 / (upper - lower) as f64
            }
            (KnobKind::Categorical { categories }, Value::Category(c))
                if categories.len() > 1 => {
                    *c as f64 / (categories.len() - 1) as f64
                }
            _ => 0.0,
        }
    }

    /// Inverse of [`KnobSpec::to_unit`]. Integers and categories round to the
    /// nearest admissible value, out-of-range inputs are clamped.
    pub fn from_unit(&self, u: f64) -> Value {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        match &self.kind {
            KnobKind::Continuous { lower, upper } => {
                if u >= 1.0 {
                    Value::Real(*upper)
                } else {
                    Value::Real((lower + u * (upper - lower)).clamp(*lower, *upper))
                }
            }
            KnobKind::Integer { lower, upper } => {
                let v = round(*lower as f64 + u * (upper - lower) as f64) as i64;
                Value::Int(v.clamp(*lower, *upper))
            }
            KnobKind::Categorical { categories } => {
                let k = categories.len();
                let idx = round(u * (k.saturating_sub(1)) as f64) as usize;
                Value::Category(idx.min(k - 1))
            }
        }
    }

    /// Maps a stratum coordinate in `[0, 1)` to a value with equal probability
    /// mass per admissible value (used by the samplers).
    fn value_at_coordinate(&self, u: f64) -> Value {
        match &self.kind {
            KnobKind::Continuous { .. } => self.from_unit(u),
            KnobKind::Integer { lower, upper } => {
                let span = (upper - lower + 1) as f64;
                let v = *lower + floor(u * span) as i64;
                Value::Int(v.clamp(*lower, *upper))
            }
            KnobKind::Categorical { categories } => {
                let k = categories.len();
                Value::Category((floor(u * k as f64) as usize).min(k - 1))
            }
        }
    }

    /// Clamps and rounds an arbitrary raw number into the domain.
    pub fn from_raw(&self, x: f64) -> Value {
        let x = if x.is_nan() { 0.0 } else { x };
        match &self.kind {
            KnobKind::Continuous { lower, upper } => Value::Real(x.clamp(*lower, *upper)),
            KnobKind::Integer { lower, upper } => {
                Value::Int((round(x.clamp(*lower as f64, *upper as f64)) as i64).clamp(*lower, *upper))
            }
            KnobKind::Categorical { categories } => {
                let idx = round(x.clamp(0.0, (categories.len() - 1) as f64)) as usize;
                Value::Category(idx)
            }
        }
    }

    /// Label of a category index, if this knob is categorical.
    pub fn category_label(&self, index: usize) -> Option<&str> {
        match &self.kind {
            KnobKind::Categorical { categories } => categories.get(index).map(String::as_str),
            _ => None,
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        match &self.kind {
            KnobKind::Categorical { categories } => categories.iter().position(|c| c == label),
            _ => None,
        }
    }
}

/// One value per knob, in space order.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    values: Vec<Value>,
}

impl Configuration {
    pub fn new(values: Vec<Value>) -> Self {
        Configuration { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Value] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of a knob looked up by name.
    pub fn get(&self, space: &ConfigSpace, name: &str) -> Option<Value> {
        space.index_of(name).and_then(|i| self.values.get(i).copied())
    }

    /// Exact bitwise identity key, usable in ordered sets.
    pub fn key(&self) -> Vec<u64> {
        self.values.iter().map(Value::key).collect()
    }
}

/// Encoding schemes for turning configurations into numeric vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Every knob to one coordinate in `[0, 1]`; categoricals as scaled index.
    Unit,
    /// Numeric knobs to `[0, 1]`, categoricals expanded into one-hot blocks.
    UnitOneHot,
    /// Numeric values as-is, categoricals as their index.
    Raw,
}

/// Column span of one knob inside an encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub knob: usize,
    pub start: usize,
    pub len: usize,
    pub categorical: bool,
}

/// Encoding descriptor: scheme plus the per-knob column spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    scheme: Scheme,
    spans: Vec<Span>,
    width: usize,
}

impl Layout {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Columns that belong to numeric knobs.
    pub fn numeric_columns(&self) -> Vec<usize> {
        self.spans
            .iter()
            .filter(|s| !s.categorical)
            .flat_map(|s| s.start..s.start + s.len)
            .collect()
    }

    /// Columns that belong to categorical knobs.
    pub fn categorical_columns(&self) -> Vec<usize> {
        self.spans
            .iter()
            .filter(|s| s.categorical)
            .flat_map(|s| s.start..s.start + s.len)
            .collect()
    }

    /// Knob index owning each column.
    pub fn column_owners(&self) -> Vec<usize> {
        let mut owners = alloc::vec![0; self.width];
        for s in &self.spans {
            for c in s.start..s.start + s.len {
                owners[c] = s.knob;
            }
        }
        owners
    }
}

/// An encoded configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVector {
    pub coords: Vec<f64>,
    pub layout: Layout,
}

/// An ordered, named collection of knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    name: String,
    knobs: Vec<KnobSpec>,
}

impl ConfigSpace {
    pub fn new(name: impl Into<String>, knobs: Vec<KnobSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for k in &knobs {
            if !seen.insert(k.name.as_str()) {
                return Err(Error::DuplicateKnob(k.name.clone()));
            }
        }
        Ok(ConfigSpace {
            name: name.into(),
            knobs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn knobs(&self) -> &[KnobSpec] {
        &self.knobs
    }

    pub fn len(&self) -> usize {
        self.knobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knobs.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.knobs.iter().position(|k| k.name == name)
    }

    pub fn knob_names(&self) -> Vec<&str> {
        self.knobs.iter().map(|k| k.name.as_str()).collect()
    }

    pub fn has_categorical(&self) -> bool {
        self.knobs.iter().any(KnobSpec::is_categorical)
    }

    pub fn default_config(&self) -> Configuration {
        Configuration::new(self.knobs.iter().map(|k| k.default).collect())
    }

    pub fn validate(&self, config: &Configuration) -> Result<()> {
        if config.len() != self.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} values, got {}",
                self.len(),
                config.len()
            )));
        }
        for (knob, v) in self.knobs.iter().zip(config.values()) {
            if !knob.contains(v) {
                return Err(Error::InvalidConfig(format!(
                    "value {v:?} outside domain of `{}`",
                    knob.name
                )));
            }
        }
        Ok(())
    }

    pub fn layout(&self, scheme: Scheme) -> Layout {
        let mut spans = Vec::with_capacity(self.knobs.len());
        let mut start = 0;
        for (i, k) in self.knobs.iter().enumerate() {
            let len = match (scheme, k.cardinality()) {
                (Scheme::UnitOneHot, Some(card)) => card,
                _ => 1,
            };
            spans.push(Span {
                knob: i,
                start,
                len,
                categorical: k.is_categorical(),
            });
            start += len;
        }
        Layout {
            scheme,
            spans,
            width: start,
        }
    }

    /// Validates and encodes a configuration.
    pub fn encode(&self, config: &Configuration, scheme: Scheme) -> Result<EncodedVector> {
        self.validate(config)?;
        let mut coords = Vec::new();
        self.encode_into(config, scheme, &mut coords);
        Ok(EncodedVector {
            coords,
            layout: self.layout(scheme),
        })
    }

    /// Appends the encoding of an already validated configuration to `out`.
    pub fn encode_into(&self, config: &Configuration, scheme: Scheme, out: &mut Vec<f64>) {
        for (k, v) in self.knobs.iter().zip(config.values()) {
            match (scheme, v) {
                (Scheme::Raw, v) => out.push(v.as_f64()),
                (Scheme::UnitOneHot, Value::Category(c)) => {
                    let card = k.cardinality().unwrap_or(1);
                    out.extend((0..card).map(|j| if j == *c { 1.0 } else { 0.0 }));
                }
                (_, v) => out.push(k.to_unit(v)),
            }
        }
    }

    /// Encodes a list of validated configurations into rows.
    pub fn encode_all(&self, configs: &[Configuration], scheme: Scheme) -> Vec<Vec<f64>> {
        configs
            .iter()
            .map(|c| {
                let mut row = Vec::new();
                self.encode_into(c, scheme, &mut row);
                row
            })
            .collect()
    }

    pub fn decode(&self, vec: &EncodedVector) -> Result<Configuration> {
        let expected = self.layout(vec.layout.scheme);
        if expected != vec.layout {
            return Err(Error::LayoutMismatch("layout does not belong to this space".into()));
        }
        self.decode_coords(&vec.coords, vec.layout.scheme)
    }

    /// Decodes raw coordinates in the given scheme. Integers round to nearest
    /// and clamp; one-hot blocks take the argmax with lowest-index tie-break.
    pub fn decode_coords(&self, coords: &[f64], scheme: Scheme) -> Result<Configuration> {
        let layout = self.layout(scheme);
        if coords.len() != layout.width {
            return Err(Error::LayoutMismatch(format!(
                "expected {} coordinates, got {}",
                layout.width,
                coords.len()
            )));
        }
        let values = self
            .knobs
            .iter()
            .zip(&layout.spans)
            .map(|(k, span)| {
                let x = coords[span.start];
                match scheme {
                    Scheme::Raw => k.from_raw(x),
                    Scheme::Unit => k.from_unit(x),
                    Scheme::UnitOneHot if span.categorical => {
                        let block = &coords[span.start..span.start + span.len];
                        let mut best = 0;
                        for (j, v) in block.iter().enumerate() {
                            if *v > block[best] {
                                best = j;
                            }
                        }
                        Value::Category(best)
                    }
                    Scheme::UnitOneHot => k.from_unit(x),
                }
            })
            .collect();
        Ok(Configuration::new(values))
    }

    /// Latin hypercube design of `n` configurations.
    ///
    /// Each numeric knob gets one sample per equal-width stratum of `[0, 1)`.
    /// Categorical knobs cycle through a random permutation of their
    /// categories, then the assignment is shuffled across samples.
    pub fn lhs_sample(&self, n: usize, seed: u64) -> Vec<Configuration> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.lhs_sample_with(n, &mut rng)
    }

    pub fn lhs_sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Configuration> {
        if n == 0 {
            return Vec::new();
        }
        let mut columns: Vec<Vec<Value>> = Vec::with_capacity(self.knobs.len());
        for k in &self.knobs {
            let col = match k.cardinality() {
                Some(card) => {
                    let mut perm: Vec<usize> = (0..card).collect();
                    perm.shuffle(rng);
                    let mut col: Vec<Value> =
                        (0..n).map(|i| Value::Category(perm[i % card])).collect();
                    col.shuffle(rng);
                    col
                }
                None => {
                    let mut strata: Vec<usize> = (0..n).collect();
                    strata.shuffle(rng);
                    strata
                        .into_iter()
                        .map(|s| {
                            // keep the draw strictly inside its stratum
                            let r: f64 = rng.gen_range(1e-9..1.0 - 1e-9);
                            k.value_at_coordinate((s as f64 + r) / n as f64)
                        })
                        .collect()
                }
            };
            columns.push(col);
        }
        (0..n)
            .map(|i| Configuration::new(columns.iter().map(|c| c[i]).collect()))
            .collect()
    }

    /// Uniform random configurations.
    pub fn random_sample(&self, n: usize, seed: u64) -> Vec<Configuration> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.random_config(&mut rng)).collect()
    }

    /// One uniform draw over the whole space.
    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let values = self
            .knobs
            .iter()
            .map(|k| match &k.kind {
                KnobKind::Continuous { lower, upper } => {
                    Value::Real(lower + rng.gen::<f64>() * (upper - lower))
                }
                KnobKind::Integer { lower, upper } => Value::Int(rng.gen_range(*lower..=*upper)),
                KnobKind::Categorical { categories } => {
                    Value::Category(rng.gen_range(0..categories.len()))
                }
            })
            .collect();
        Configuration::new(values)
    }

    /// Restricts the space to `selected` knobs (kept in space order). The
    /// returned [`Completion`] fills the other knobs with their defaults.
    pub fn subspace(&self, selected: &[&str]) -> Result<(ConfigSpace, Completion)> {
        if selected.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut indices = BTreeSet::new();
        for name in selected {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownKnob((*name).into()))?;
            if !indices.insert(i) {
                return Err(Error::DuplicateKnob((*name).into()));
            }
        }
        let indices: Vec<usize> = indices.into_iter().collect();
        let knobs = indices.iter().map(|&i| self.knobs[i].clone()).collect();
        let sub = ConfigSpace::new(self.name.clone(), knobs)?;
        Ok((
            sub,
            Completion {
                defaults: self.default_config(),
                selected: indices,
            },
        ))
    }
}

/// Maps configurations of a subspace back into the full space.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    defaults: Configuration,
    selected: Vec<usize>,
}

impl Completion {
    /// Full-space indices of the selected knobs, in subspace order.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Fills the unselected knobs with their defaults.
    pub fn complete(&self, sub: &Configuration) -> Configuration {
        let mut full = self.defaults.clone();
        for (&i, v) in self.selected.iter().zip(sub.values()) {
            full.values[i] = *v;
        }
        full
    }

    /// Projects a full configuration onto the subspace.
    pub fn restrict(&self, full: &Configuration) -> Configuration {
        Configuration::new(self.selected.iter().map(|&i| full.values[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_space() -> ConfigSpace {
        ConfigSpace::new(
            "small",
            vec![
                KnobSpec::continuous("buffer", 0.0, 10.0, 5.0).unwrap(),
                KnobSpec::integer("threads", 1, 5, 2).unwrap(),
                KnobSpec::categorical("flush", ["a", "b", "c"], 0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn knob_validation() {
        assert!(KnobSpec::integer("x", 0, 100, 500).is_err());
        assert!(KnobSpec::continuous("x", 1.0, 1.0, 1.0).is_err());
        assert!(KnobSpec::categorical("x", ["a", "a"], 0).is_err());
        assert!(KnobSpec::categorical("x", Vec::<String>::new(), 0).is_err());
        match KnobSpec::integer("pool", 0, 100, 500) {
            Err(Error::InvalidKnob { knob, .. }) => assert_eq!(knob, "pool"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let k = KnobSpec::integer("x", 0, 1, 0).unwrap();
        assert_eq!(
            ConfigSpace::new("s", vec![k.clone(), k]),
            Err(Error::DuplicateKnob("x".into()))
        );
    }

    #[test]
    fn unit_and_onehot_encoding() {
        let s = small_space();
        let c = Configuration::new(vec![Value::Real(10.0), Value::Int(3), Value::Category(1)]);
        let unit = s.encode(&c, Scheme::Unit).unwrap();
        assert_eq!(unit.coords, vec![1.0, 0.5, 0.5]);
        let onehot = s.encode(&c, Scheme::UnitOneHot).unwrap();
        assert_eq!(onehot.coords, vec![1.0, 0.5, 0.0, 1.0, 0.0]);
        let raw = s.encode(&c, Scheme::Raw).unwrap();
        assert_eq!(raw.coords, vec![10.0, 3.0, 1.0]);
    }

    #[test]
    fn single_category_encodes_to_zero() {
        let k = KnobSpec::categorical("only", ["x"], 0).unwrap();
        assert_eq!(k.to_unit(&Value::Category(0)), 0.0);
        assert_eq!(k.from_unit(0.7), Value::Category(0));
    }

    #[test]
    fn decode_rounding_and_ties() {
        let s = ConfigSpace::new(
            "s",
            vec![
                KnobSpec::integer("flag", 0, 1, 0).unwrap(),
                KnobSpec::categorical("c", ["a", "b", "c"], 0).unwrap(),
            ],
        )
        .unwrap();
        let c = s.decode_coords(&[0.49999, 0.4, 0.4, 0.2], Scheme::UnitOneHot).unwrap();
        assert_eq!(c.values(), &[Value::Int(0), Value::Category(0)]);
        assert!(matches!(
            s.decode_coords(&[0.1, 0.2], Scheme::UnitOneHot),
            Err(Error::LayoutMismatch(_))
        ));
        // out-of-range coordinates clamp
        let c = s.decode_coords(&[1.7, 2.0], Scheme::Unit).unwrap();
        assert_eq!(c.values(), &[Value::Int(1), Value::Category(2)]);
    }

    #[test]
    fn invalid_config_rejected_by_encode() {
        let s = small_space();
        let bad = Configuration::new(vec![Value::Real(11.0), Value::Int(3), Value::Category(1)]);
        assert!(s.encode(&bad, Scheme::Unit).is_err());
        let wrong_type = Configuration::new(vec![Value::Int(1), Value::Int(3), Value::Category(1)]);
        assert!(s.validate(&wrong_type).is_err());
    }

    #[test]
    fn lhs_four_strata() {
        let s = ConfigSpace::new("s", vec![KnobSpec::continuous("x", 0.0, 10.0, 0.0).unwrap()]).unwrap();
        for seed in 0..20 {
            let sample = s.lhs_sample(4, seed);
            let mut hits = [0; 4];
            for c in &sample {
                let v = c.values()[0].as_f64();
                hits[(floor(v / 2.5) as usize).min(3)] += 1;
            }
            assert_eq!(hits, [1, 1, 1, 1]);
        }
    }

    #[test]
    fn lhs_is_deterministic_and_valid() {
        let s = small_space();
        let a = s.lhs_sample(10, 42);
        assert_eq!(a, s.lhs_sample(10, 42));
        assert_ne!(a, s.lhs_sample(10, 43));
        for c in &a {
            s.validate(c).unwrap();
        }
        // categories are balanced: 10 samples over 3 categories
        let mut counts = [0; 3];
        for c in &a {
            if let Value::Category(i) = c.values()[2] {
                counts[i] += 1;
            }
        }
        counts.sort();
        assert_eq!(counts, [3, 3, 4]);
    }

    #[test]
    fn random_sample_contract() {
        let s = small_space();
        assert!(s.random_sample(0, 1).is_empty());
        let a = s.random_sample(50, 9);
        assert_eq!(a, s.random_sample(50, 9));
        for c in &a {
            s.validate(c).unwrap();
        }
    }

    #[test]
    fn subspace_completion() {
        let s = small_space();
        let (sub, completion) = s.subspace(&["flush", "buffer"]).unwrap();
        assert_eq!(sub.knob_names(), vec!["buffer", "flush"]);
        let c = Configuration::new(vec![Value::Real(1.5), Value::Category(2)]);
        let full = completion.complete(&c);
        assert_eq!(full.values(), &[Value::Real(1.5), Value::Int(2), Value::Category(2)]);
        s.validate(&full).unwrap();
        assert_eq!(completion.restrict(&full), c);

        let (all, completion) = s.subspace(&["buffer", "threads", "flush"]).unwrap();
        assert_eq!(all, s);
        let d = s.default_config();
        assert_eq!(completion.complete(&d), d);

        assert_eq!(s.subspace(&[]).unwrap_err(), Error::EmptySelection);
        assert_eq!(s.subspace(&["nope"]).unwrap_err(), Error::UnknownKnob("nope".into()));
    }
}

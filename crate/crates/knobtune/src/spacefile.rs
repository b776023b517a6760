//! JSON documents for spaces and single configurations.
//!
//! A space document is `{"name", "knobs": [{"name", "type", "min", "max" |
//! "categories", "default"}]}` with knob order significant. Categorical
//! values are written as labels everywhere outside the core crate.

use std::path::Path;

use knobtune_core::{ConfigSpace, Configuration, KnobKind, KnobSpec, Value};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::error::{read_to_string, write_file, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub name: String,
    pub knobs: Vec<KnobDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnobDoc {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    pub default: Json,
}

impl SpaceDoc {
    pub fn from_space(space: &ConfigSpace) -> Self {
        let knobs = space
            .knobs()
            .iter()
            .map(|k| {
                let default = value_to_json(k, &k.default_value());
                match k.kind() {
                    KnobKind::Continuous { lower, upper } => KnobDoc {
                        name: k.name().into(),
                        kind: "continuous".into(),
                        min: Some(Json::from(*lower)),
                        max: Some(Json::from(*upper)),
                        categories: None,
                        default,
                    },
                    KnobKind::Integer { lower, upper } => KnobDoc {
                        name: k.name().into(),
                        kind: "integer".into(),
                        min: Some(Json::from(*lower)),
                        max: Some(Json::from(*upper)),
                        categories: None,
                        default,
                    },
                    KnobKind::Categorical { categories } => KnobDoc {
                        name: k.name().into(),
                        kind: "categorical".into(),
                        min: None,
                        max: None,
                        categories: Some(categories.clone()),
                        default,
                    },
                }
            })
            .collect();
        SpaceDoc {
            name: space.name().into(),
            knobs,
        }
    }

    /// Validates the document; errors name the offending knob.
    pub fn to_space(&self) -> Result<ConfigSpace> {
        let knobs = self.knobs.iter().map(knob_from_doc).collect::<Result<Vec<_>>>()?;
        Ok(ConfigSpace::new(self.name.clone(), knobs)?)
    }
}

fn knob_from_doc(d: &KnobDoc) -> Result<KnobSpec> {
    let bad = |msg: &str| Error::Schema(format!("knob `{}`: {msg}", d.name));
    let numeric_only = |d: &KnobDoc| {
        if d.categories.is_some() {
            Err(bad("numeric knob must not list categories"))
        } else {
            Ok(())
        }
    };
    match d.kind.as_str() {
        "continuous" => {
            numeric_only(d)?;
            let get = |v: &Option<Json>, what: &str| {
                v.as_ref().and_then(Json::as_f64).ok_or_else(|| bad(&format!("`{what}` must be a number")))
            };
            let default = d.default.as_f64().ok_or_else(|| bad("`default` must be a number"))?;
            Ok(KnobSpec::continuous(&d.name, get(&d.min, "min")?, get(&d.max, "max")?, default)?)
        }
        "integer" => {
            numeric_only(d)?;
            let get = |v: Option<&Json>, what: &str| {
                v.and_then(json_integer).ok_or_else(|| bad(&format!("`{what}` must be an integer")))
            };
            Ok(KnobSpec::integer(
                &d.name,
                get(d.min.as_ref(), "min")?,
                get(d.max.as_ref(), "max")?,
                get(Some(&d.default), "default")?,
            )?)
        }
        "categorical" => {
            if d.min.is_some() || d.max.is_some() {
                return Err(bad("categorical knob must not have bounds"));
            }
            let cats = d.categories.as_ref().ok_or_else(|| bad("`categories` missing"))?;
            let label = d.default.as_str().ok_or_else(|| bad("`default` must be a category label"))?;
            let idx = cats
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| bad(&format!("default `{label}` is not a category")))?;
            Ok(KnobSpec::categorical(&d.name, cats.iter().cloned(), idx)?)
        }
        other => Err(bad(&format!("unknown type `{other}`"))),
    }
}

fn json_integer(v: &Json) -> Option<i64> {
    v.as_i64().or_else(|| v.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 9.0e15).map(|f| f as i64))
}

pub fn parse_space(text: &str) -> Result<ConfigSpace> {
    let doc: SpaceDoc = serde_json::from_str(text).map_err(|e| Error::Schema(format!("space document: {e}")))?;
    doc.to_space()
}

pub fn read_space(path: &Path) -> Result<ConfigSpace> {
    let doc: SpaceDoc = serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e))?;
    doc.to_space().map_err(|e| Error::format(path, e))
}

pub fn space_to_string(space: &ConfigSpace) -> String {
    serde_json::to_string_pretty(&SpaceDoc::from_space(space)).expect("space documents serialize")
}

pub fn write_space(path: &Path, space: &ConfigSpace) -> Result<()> {
    write_file(path, (space_to_string(space) + "\n").as_bytes())
}

pub fn value_to_json(knob: &KnobSpec, value: &Value) -> Json {
    match *value {
        Value::Real(v) => Json::from(v),
        Value::Int(v) => Json::from(v),
        Value::Category(c) => Json::from(knob.category_label(c).unwrap_or_default()),
    }
}

pub fn value_from_json(knob: &KnobSpec, v: &Json) -> Result<Value> {
    let bad = || Error::Schema(format!("knob `{}`: invalid value {v}", knob.name()));
    let value = match knob.kind() {
        KnobKind::Continuous { .. } => Value::Real(v.as_f64().ok_or_else(bad)?),
        KnobKind::Integer { .. } => Value::Int(json_integer(v).ok_or_else(bad)?),
        KnobKind::Categorical { .. } => Value::Category(v.as_str().and_then(|s| knob.category_index(s)).ok_or_else(bad)?),
    };
    if !knob.contains(&value) {
        return Err(Error::Schema(format!("knob `{}`: value {v} outside domain", knob.name())));
    }
    Ok(value)
}

/// Configuration as a JSON object keyed by knob name, in space order.
pub fn config_to_json(space: &ConfigSpace, config: &Configuration) -> Json {
    let map: Map<String, Json> = space
        .knobs()
        .iter()
        .zip(config.values())
        .map(|(k, v)| (k.name().to_string(), value_to_json(k, v)))
        .collect();
    Json::Object(map)
}

/// Missing knobs take their defaults; unknown names are rejected.
pub fn config_from_json(space: &ConfigSpace, doc: &Json) -> Result<Configuration> {
    let map = doc.as_object().ok_or_else(|| Error::Schema("configuration must be a JSON object".into()))?;
    for name in map.keys() {
        if space.index_of(name).is_none() {
            return Err(Error::Schema(format!("unknown knob `{name}`")));
        }
    }
    let values = space
        .knobs()
        .iter()
        .map(|k| match map.get(k.name()) {
            Some(v) => value_from_json(k, v),
            None => Ok(k.default_value()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration::new(values))
}

pub fn read_config(path: &Path, space: &ConfigSpace) -> Result<Configuration> {
    let doc: Json = serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e))?;
    config_from_json(space, &doc).map_err(|e| Error::format(path, e))
}

pub fn write_config(path: &Path, space: &ConfigSpace, config: &Configuration) -> Result<()> {
    let text = serde_json::to_string_pretty(&config_to_json(space, config)).expect("configurations serialize");
    write_file(path, (text + "\n").as_bytes())
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    write_file(path, (text + "\n").as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"name": "db", "knobs": [
        {"name": "buffer_pool", "type": "integer", "min": 16, "max": 4096, "default": 128},
        {"name": "io_ratio", "type": "continuous", "min": 0.0, "max": 1.0, "default": 0.5},
        {"name": "flush", "type": "categorical", "categories": ["O_DIRECT", "fsync"], "default": "fsync"}
    ]}"#;

    #[test]
    fn parses_and_round_trips() {
        let space = parse_space(DOC).unwrap();
        assert_eq!(space.knob_names(), ["buffer_pool", "io_ratio", "flush"]);
        assert_eq!(space.default_config().values()[2], Value::Category(1));
        assert_eq!(parse_space(&space_to_string(&space)).unwrap(), space);
    }

    #[test]
    fn errors_name_the_knob() {
        let dup = DOC.replace("\"io_ratio\"", "\"buffer_pool\"");
        assert!(parse_space(&dup).unwrap_err().to_string().contains("buffer_pool"));
        let out = DOC.replace("\"default\": 128", "\"default\": 9000");
        assert!(parse_space(&out).unwrap_err().to_string().contains("buffer_pool"));
        let kind = DOC.replace("\"continuous\"", "\"float\"");
        assert!(parse_space(&kind).unwrap_err().to_string().contains("io_ratio"));
        assert!(parse_space("{\"name\": 1}").is_err());
    }

    #[test]
    fn config_json() {
        let space = parse_space(DOC).unwrap();
        let doc: Json = serde_json::from_str(r#"{"flush": "O_DIRECT", "buffer_pool": 512}"#).unwrap();
        let c = config_from_json(&space, &doc).unwrap();
        assert_eq!(c.values(), [Value::Int(512), Value::Real(0.5), Value::Category(0)]);
        assert_eq!(config_from_json(&space, &config_to_json(&space, &c)).unwrap(), c);
        let bad: Json = serde_json::from_str(r#"{"flush": "never"}"#).unwrap();
        assert!(config_from_json(&space, &bad).is_err());
        let unknown: Json = serde_json::from_str(r#"{"nope": 1}"#).unwrap();
        assert!(config_from_json(&space, &unknown).is_err());
    }
}

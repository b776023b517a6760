//! Training-set assembly from optimizer logs and sampled data files.

use std::collections::HashSet;
use std::path::PathBuf;

use knobtune_core::bench::{ModelParams, RegressionModel};
use knobtune_core::importance::TrainingSet;
use knobtune_core::surrogate::ForestParams;
use knobtune_core::{ConfigSpace, Configuration, Sense, Status};

use crate::error::{Error, Result};
use crate::table::read_rows;

/// Successful, distinct observations in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub configs: Vec<Configuration>,
    pub values: Vec<f64>,
    pub sources: Vec<PathBuf>,
    pub rows_read: usize,
    pub failed: usize,
    pub duplicates: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Value observed at `config`, if the data contains it.
    pub fn value_at(&self, config: &Configuration) -> Option<f64> {
        let key = config.key();
        self.configs.iter().position(|c| c.key() == key).map(|i| self.values[i])
    }
}

/// Concatenates the files in order. Failed rows are dropped before
/// deduplication, so a configuration that failed once and succeeded later
/// is kept with its successful value.
pub fn assemble_dataset(space: &ConfigSpace, paths: &[PathBuf]) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::Schema("no data files given".into()));
    }
    let mut seen = HashSet::new();
    let mut out = Dataset {
        configs: Vec::new(),
        values: Vec::new(),
        sources: paths.to_vec(),
        rows_read: 0,
        failed: 0,
        duplicates: 0,
    };
    for path in paths {
        for row in read_rows(path, space)? {
            out.rows_read += 1;
            let value = match (row.status, row.value) {
                (Status::Ok, Some(v)) => v,
                _ => {
                    out.failed += 1;
                    continue;
                }
            };
            if !seen.insert(row.config.key()) {
                out.duplicates += 1;
                continue;
            }
            out.configs.push(row.config);
            out.values.push(value);
        }
    }
    Ok(out)
}

/// Value to credit the default configuration with: the observed value when
/// the data contains it, otherwise a forest prediction.
pub fn default_value(space: &ConfigSpace, data: &Dataset, default_config: &Configuration, seed: u64) -> Result<f64> {
    if let Some(v) = data.value_at(default_config) {
        return Ok(v);
    }
    let model = RegressionModel::fit(space, &data.configs, &data.values, &ModelParams::Rf(ForestParams::default()), seed)?;
    Ok(model.predict(space, default_config))
}

pub fn training_set(
    space: &ConfigSpace,
    data: &Dataset,
    sense: Sense,
    default_config: Configuration,
    seed: u64,
) -> Result<TrainingSet> {
    let dv = default_value(space, data, &default_config, seed)?;
    Ok(TrainingSet::new(space.clone(), data.configs.clone(), data.values.clone(), default_config, dv, sense)?)
}

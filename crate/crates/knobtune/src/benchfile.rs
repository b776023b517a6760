//! Benchmark artifacts: one JSON file holding the space, the fitted
//! surrogate, the objective sense and the default configuration.

use std::path::Path;

use knobtune_core::bench::{Provenance, RegressionModel, TuningBenchmark};
use knobtune_core::Sense;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{read_to_string, write_file, Error, Result};
use crate::spacefile::{config_from_json, config_to_json, SpaceDoc};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchDoc {
    space: SpaceDoc,
    /// Tagged by model kind; older files may call the field `forest`.
    #[serde(alias = "forest")]
    surrogate: RegressionModel,
    sense: String,
    default_config: Json,
    default_value: f64,
    provenance: Provenance,
}

pub fn benchmark_to_string(bench: &TuningBenchmark) -> String {
    let doc = BenchDoc {
        space: SpaceDoc::from_space(&bench.space),
        surrogate: bench.surrogate.clone(),
        sense: bench.sense.as_str().into(),
        default_config: config_to_json(&bench.space, &bench.default_config),
        default_value: bench.default_value,
        provenance: bench.provenance.clone(),
    };
    serde_json::to_string(&doc).expect("benchmarks serialize")
}

pub fn parse_benchmark(text: &str) -> Result<TuningBenchmark> {
    let doc: BenchDoc = serde_json::from_str(text).map_err(|e| Error::Schema(format!("benchmark document: {e}")))?;
    let space = doc.space.to_space()?;
    let default_config = config_from_json(&space, &doc.default_config)?;
    let bench = TuningBenchmark {
        sense: doc.sense.parse::<Sense>()?,
        default_config,
        surrogate: doc.surrogate,
        default_value: doc.default_value,
        provenance: doc.provenance,
        space,
    };
    bench.validate()?;
    Ok(bench)
}

pub fn write_benchmark(path: &Path, bench: &TuningBenchmark) -> Result<()> {
    write_file(path, (benchmark_to_string(bench) + "\n").as_bytes())
}

pub fn read_benchmark(path: &Path) -> Result<TuningBenchmark> {
    parse_benchmark(&read_to_string(path)?).map_err(|e| Error::format(path, e))
}

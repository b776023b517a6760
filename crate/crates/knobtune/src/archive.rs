//! Source-task archives: a directory with one trajectory CSV per past task
//! (`<task>.csv`) and an optional metrics profile (`<task>.metrics.json`, a
//! JSON array of reals). Tasks are loaded in task-id order.

use std::path::Path;

use knobtune_core::transfer::BaseTask;
use knobtune_core::{ConfigSpace, History, Status};

use crate::error::{Error, Result};
use crate::spacefile::{read_json, write_json};
use crate::table::{read_rows, trajectory_rows, write_trajectory};

pub fn load_archive(dir: &Path, space: &ConfigSpace) -> Result<Vec<BaseTask>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut csvs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            csvs.push(path);
        }
    }
    csvs.sort();
    let mut tasks = Vec::with_capacity(csvs.len());
    for path in csvs {
        let task_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let (configs, values) = read_rows(&path, space)?
            .into_iter()
            .filter(|r| r.status == Status::Ok)
            .filter_map(|r| r.value.map(|v| (r.config, v)))
            .unzip();
        let metrics_path = dir.join(format!("{task_id}.metrics.json"));
        let metrics_profile = if metrics_path.exists() {
            Some(read_json::<Vec<f64>>(&metrics_path)?)
        } else {
            None
        };
        tasks.push(BaseTask {
            task_id,
            configs,
            values,
            metrics_profile,
        });
    }
    if tasks.is_empty() {
        return Err(Error::format(dir, "archive holds no task CSVs"));
    }
    Ok(tasks)
}

/// Stores a finished session as task `task_id`, with its metrics profile
/// when the session recorded metrics.
pub fn archive_session(dir: &Path, task_id: &str, space: &ConfigSpace, history: &History) -> Result<()> {
    write_trajectory(&dir.join(format!("{task_id}.csv")), space, &trajectory_rows(history, Clone::clone))?;
    if let Some(profile) = history.metrics_profile() {
        write_json(&dir.join(format!("{task_id}.metrics.json")), &profile)?;
    }
    Ok(())
}

//! Objectives evaluated by an external command.
//!
//! The command template is run through `sh -c` after replacing every
//! `{config_path}` with the path of a JSON file holding the configuration.
//! The last non-empty stdout line must parse as a finite real. An earlier
//! line of the form `metrics: v1 v2 ...` (spaces or commas) supplies the
//! internal-metrics vector used by workload mapping. Timeouts, nonzero exits
//! and unparseable output become failed observations, never errors.

use std::fs::File;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use knobtune_core::{ConfigSpace, Configuration, Status};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::spacefile::write_config;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// NaN when the evaluation failed.
    pub value: f64,
    pub status: Status,
    pub metrics: Option<Vec<f64>>,
    /// Why the evaluation failed.
    pub diagnostic: Option<String>,
}

impl Evaluation {
    fn failed(diagnostic: String) -> Self {
        Evaluation {
            value: f64::NAN,
            status: Status::Failed,
            metrics: None,
            diagnostic: Some(diagnostic),
        }
    }
}

#[derive(Debug)]
pub struct ExternalObjective {
    template: String,
    timeout: Duration,
    scratch: tempfile::TempDir,
    calls: usize,
}

impl ExternalObjective {
    pub fn new(template: impl Into<String>, timeout: Duration) -> Result<Self> {
        let template = template.into();
        if template.trim().is_empty() {
            return Err(Error::Schema("empty objective command".into()));
        }
        let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        Ok(ExternalObjective {
            template,
            timeout,
            scratch,
            calls: 0,
        })
    }

    /// Runs the command on `config`. Only scratch-directory I/O errors are
    /// returned as errors.
    pub fn evaluate(&mut self, space: &ConfigSpace, config: &Configuration) -> Result<Evaluation> {
        self.calls += 1;
        let config_path = self.scratch.path().join(format!("config_{}.json", self.calls));
        write_config(&config_path, space, config)?;
        let stdout_path = self.scratch.path().join("stdout");
        let stderr_path = self.scratch.path().join("stderr");
        let create = |p: &PathBuf| File::create(p).map_err(|e| Error::io(p, e));
        let command = self.template.replace("{config_path}", &shell_quote(&config_path.to_string_lossy()));
        let spawned = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .stdin(Stdio::null())
            .stdout(create(&stdout_path)?)
            .stderr(create(&stderr_path)?)
            .spawn();
        let mut child = match spawned {
            Ok(c) => c,
            Err(e) => return Ok(Evaluation::failed(format!("spawn failed: {e}"))),
        };
        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(s)) => s,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Evaluation::failed(format!("timed out after {:?}", self.timeout)));
            }
            Err(e) => return Ok(Evaluation::failed(format!("wait failed: {e}"))),
        };
        let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let stdout = read(&stdout_path)?;
        if !status.success() {
            let stderr = read(&stderr_path)?;
            let tail = stderr.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
            return Ok(Evaluation::failed(format!("command exited with {status}: {}", tail.trim())));
        }
        Ok(parse_output(&stdout))
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

/// Applies the stdout contract to captured output.
pub fn parse_output(stdout: &str) -> Evaluation {
    let lines: Vec<&str> = stdout.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let Some((last, earlier)) = lines.split_last() else {
        return Evaluation::failed("command printed nothing".into());
    };
    let value = match last.parse::<f64>() {
        Ok(v) if v.is_finite() => v,
        _ => return Evaluation::failed(format!("last line `{last}` is not a finite number")),
    };
    let mut metrics = None;
    for line in earlier {
        if let Some(rest) = line.strip_prefix("metrics:") {
            let parsed: std::result::Result<Vec<f64>, _> =
                rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
            match parsed {
                Ok(v) => metrics = Some(v),
                Err(_) => return Evaluation::failed(format!("malformed metrics line `{line}`")),
            }
        }
    }
    Evaluation {
        value,
        status: Status::Ok,
        metrics,
        diagnostic: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_contract() {
        assert_eq!(parse_output("warming up\n42.0\n").value, 42.0);
        assert_eq!(parse_output("  -1e3  \n\n").value, -1000.0);
        let e = parse_output("metrics: 1, 2 3\n7\n");
        assert_eq!(e.metrics, Some(vec![1.0, 2.0, 3.0]));
        for bad in ["", "42 tps", "nan", "inf\n", "metrics: x\n1"] {
            let e = parse_output(bad);
            assert_eq!(e.status, Status::Failed, "{bad:?}");
            assert!(e.diagnostic.is_some());
        }
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("/tmp/a b"), "'/tmp/a b'");
        assert_eq!(shell_quote("it's"), "'it'\\''s'");
    }
}

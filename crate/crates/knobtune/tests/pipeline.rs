use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use knobtune::dataset::assemble_dataset;
use knobtune::experiment::{report, run_experiment, ExperimentPlan, Seeds};
use knobtune::objective::ExternalObjective;
use knobtune::spacefile::{write_json, write_space};
use knobtune::table::write_training;
use knobtune_core::bench::{build_benchmark, synthetic, ModelParams, Provenance};
use knobtune_core::surrogate::ForestParams;
use knobtune_core::{Configuration, KnobSpec, Status, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_knobtune"))
}

fn small_benchmark(dir: &Path) -> PathBuf {
    let f = synthetic::heterogeneous();
    let (configs, y) = f.sample_dataset(80, 2);
    let params = ModelParams::Rf(ForestParams { n_trees: 20, ..ForestParams::default() });
    let b = build_benchmark(f.space.clone(), &configs, &y, f.sense, f.space.default_config(), &params, Provenance::default(), 1)
        .unwrap();
    let path = dir.join("bench.json");
    knobtune::benchfile::write_benchmark(&path, &b).unwrap();
    path
}

#[test]
fn assembly_dedups_and_drops_failures() {
    let dir = tempfile::tempdir().unwrap();
    let f = synthetic::linear(&[1.0, 2.0]);
    let configs = f.space.lhs_sample(10, 0);
    let a: Vec<_> = configs.iter().map(|c| (c.clone(), 1.0, Status::Ok)).collect();
    let mut b: Vec<_> = configs[..4].iter().map(|c| (c.clone(), 9.0, Status::Ok)).collect();
    b.extend(f.space.lhs_sample(5, 1).into_iter().map(|c| (c, 2.0, Status::Ok)));
    b.push((f.space.lhs_sample(1, 2)[0].clone(), f64::NAN, Status::Failed));
    write_training(&dir.path().join("a.csv"), &f.space, &a).unwrap();
    write_training(&dir.path().join("b.csv"), &f.space, &b).unwrap();
    let d = assemble_dataset(&f.space, &[dir.path().join("a.csv"), dir.path().join("b.csv")]).unwrap();
    assert_eq!(d.len(), 15);
    assert_eq!((d.rows_read, d.duplicates, d.failed), (20, 4, 1));
    assert!(d.values[..10].iter().all(|v| *v == 1.0), "first copy wins");

    let other = knobtune_core::ConfigSpace::new("o", vec![KnobSpec::continuous("z", 0.0, 1.0, 0.0).unwrap()]).unwrap();
    assert!(assemble_dataset(&other, &[dir.path().join("a.csv")]).is_err());
}

#[test]
fn external_objective_contract() {
    let space = synthetic::linear(&[1.0]).space;
    let c = Configuration::new(vec![Value::Real(0.25)]);
    let t = Duration::from_secs(10);
    let e = ExternalObjective::new("echo 42.0", t).unwrap().evaluate(&space, &c).unwrap();
    assert_eq!((e.value, e.status), (42.0, Status::Ok));
    let e = ExternalObjective::new("grep -c x0 {config_path}; echo 'metrics: 1 2'; echo 7", t)
        .unwrap()
        .evaluate(&space, &c)
        .unwrap();
    assert_eq!((e.value, e.metrics), (7.0, Some(vec![1.0, 2.0])));
    let e = ExternalObjective::new("sleep 5; echo 1", Duration::from_millis(200)).unwrap().evaluate(&space, &c).unwrap();
    assert_eq!(e.status, Status::Failed);
    assert!(e.diagnostic.unwrap().contains("timed out"));
    let e = ExternalObjective::new("echo fast", t).unwrap().evaluate(&space, &c).unwrap();
    assert!(e.diagnostic.unwrap().contains("not a finite number"));
    let e = ExternalObjective::new("echo 3; echo oops >&2; exit 3", t).unwrap().evaluate(&space, &c).unwrap();
    assert_eq!(e.status, Status::Failed);
    assert!(e.diagnostic.unwrap().contains("oops"));
}

#[test]
fn tournament_files_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let bench = small_benchmark(dir.path());
    let plan = |out: &str| ExperimentPlan {
        benchmark_path: bench.clone(),
        optimizers: vec!["random".into(), "tpe".into(), "ga".into()],
        budget: 25,
        seeds: Seeds::Count(3),
        out_dir: dir.path().join(out),
    };
    let serial = run_experiment(&plan("serial"), 1).unwrap();
    let parallel = run_experiment(&plan("parallel"), 3).unwrap();
    assert_eq!(serial.entries.len(), 9);
    for (a, b) in serial.entries.iter().zip(&parallel.entries) {
        let x = std::fs::read(dir.path().join("serial").join(&a.file)).unwrap();
        let y = std::fs::read(dir.path().join("parallel").join(&b.file)).unwrap();
        assert_eq!(x, y, "{}", a.file.display());
        assert_eq!(String::from_utf8(x).unwrap().lines().count(), 26);
    }
    let summary = report(&dir.path().join("serial"), &dir.path().join("report")).unwrap();
    assert_eq!(summary.optimizers.len(), 3);
    let ranks: f64 = summary.ranking.mean_rank.values().sum();
    assert!((ranks - 6.0).abs() < 1e-12);
    let curve = std::fs::read_to_string(dir.path().join("report/best_so_far.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 3 * 25);

    let empty = dir.path().join("empty");
    write_json(&empty.join("manifest.json"), &serde_json::json!({"benchmark_path": bench, "budget": 25, "entries": []})).unwrap();
    assert!(report(&empty, &empty).is_err());
}

#[test]
fn plan_validation() {
    let mut plan = ExperimentPlan {
        benchmark_path: "b.json".into(),
        optimizers: vec!["smac".into()],
        budget: 5,
        seeds: Seeds::List(vec![1, 2]),
        out_dir: "out".into(),
    };
    assert!(plan.kinds().is_err(), "budget below the initial design");
    plan.budget = 50;
    assert!(plan.kinds().is_ok());
    plan.seeds = Seeds::List(vec![]);
    assert!(plan.kinds().is_err());
    plan.seeds = Seeds::Count(2);
    plan.optimizers.push("SMAC".into());
    assert!(plan.kinds().is_err());
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn cli_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |s: &str| d.join(s);
    run_ok(bin().args(["sample", "--synthetic", "heterogeneous", "--n", "60", "--seed", "4", "--out"]).arg(p("data")));
    let stdout = run_ok(bin().arg("space-validate").arg("--space").arg(p("data/space.json")));
    assert!(stdout.starts_with("ok: `heterogeneous` has 20 knobs"), "{stdout}");

    run_ok(
        bin().args(["select-knobs", "--method", "fanova", "--k", "5", "--sense", "minimize", "--seed", "1"])
            .arg("--space").arg(p("data/space.json"))
            .arg("--data").arg(p("data/samples.csv"))
            .arg("--out").arg(p("select")),
    );
    let top = std::fs::read_to_string(p("select/top_knobs.txt")).unwrap();
    assert_eq!(top.lines().count(), 5);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("select/importance.json")).unwrap()).unwrap();
    assert_eq!(report["ranking"].as_array().unwrap().len(), 20);

    run_ok(
        bin().args(["bench-build", "--sense", "minimize", "--seed", "0", "--folds", "3", "--draws", "2"])
            .arg("--space").arg(p("data/space.json"))
            .arg("--data").arg(p("data/samples.csv"))
            .arg("--out").arg(p("bench")),
    );
    assert!(p("bench/benchmark.json").exists() && p("bench/selection.json").exists());

    // tune a five-knob subspace against the benchmark, then archive it and reuse it
    run_ok(
        bin().args(["tune", "--optimizer", "tpe", "--budget", "15", "--seed", "7"])
            .arg("--benchmark").arg(p("bench/benchmark.json"))
            .arg("--knobs").arg(p("select/top_knobs.txt"))
            .arg("--out").arg(p("tune")),
    );
    let traj = std::fs::read_to_string(p("tune/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 16);
    assert!(traj.lines().next().unwrap().starts_with("iteration,int_00,"));
    std::fs::create_dir_all(p("archive")).unwrap();
    std::fs::copy(p("tune/trajectory.csv"), p("archive/task_a.csv")).unwrap();
    run_ok(
        bin().args(["tune", "--optimizer", "mixed_bo", "--budget", "13", "--seed", "1", "--transfer", "rgpe"])
            .arg("--benchmark").arg(p("bench/benchmark.json"))
            .arg("--knobs").arg(p("select/top_knobs.txt"))
            .arg("--archive").arg(p("archive"))
            .arg("--out").arg(p("tune_rgpe")),
    );
    assert!(p("tune_rgpe/best.json").exists());

    let plan = serde_json::json!({
        "benchmark_path": "bench/benchmark.json",
        "optimizers": ["random", "tpe"],
        "budget": 12,
        "seeds": [3, 4],
        "out_dir": "run"
    });
    write_json(&p("plan.json"), &plan).unwrap();
    let stdout = run_ok(bin().arg("bench-run").arg("--plan").arg(p("plan.json")).args(["--jobs", "2"]));
    assert!(stdout.contains("4 sessions"), "{stdout}");
    assert!(p("run/summary.json").exists() && p("run/trajectories/tpe_seed4.csv").exists());
    run_ok(bin().arg("report").arg("--dir").arg(p("run")).arg("--out").arg(p("again")));
    assert_eq!(std::fs::read(p("run/summary.json")).unwrap(), std::fs::read(p("again/summary.json")).unwrap());
}

#[test]
fn cli_tune_with_command_objective() {
    let dir = tempfile::tempdir().unwrap();
    let space = knobtune_core::ConfigSpace::new(
        "cmd",
        vec![KnobSpec::integer("threads", 1, 64, 8).unwrap(), KnobSpec::categorical("mode", ["a", "b"], 0).unwrap()],
    )
    .unwrap();
    write_space(&dir.path().join("space.json"), &space).unwrap();
    // objective: the threads value read back from the config file
    let cmd = "sed -n 's/.*\"threads\": \\([0-9]*\\).*/\\1/p' {config_path}";
    run_ok(
        bin().args(["tune", "--optimizer", "smac", "--budget", "12", "--seed", "7", "--sense", "max"])
            .arg("--space").arg(dir.path().join("space.json"))
            .arg("--objective-cmd").arg(cmd)
            .arg("--out").arg(dir.path().join("out")),
    );
    let traj = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let rows: Vec<&str> = traj.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells[1], cells[3], "value equals the threads knob: {r}");
        assert_eq!(cells[4], "ok");
    }
}

#[test]
fn cli_errors_are_single_lines() {
    let out = bin().args(["tune", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim_end().lines().count(), 1);

    let out = bin().args(["space-validate", "--space", "/nonexistent/space.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.starts_with("error: "), "{err}");

    let help = run_ok(bin().args(["tune", "--help"]));
    for flag in ["--space", "--optimizer", "--budget", "--seed", "--sense", "--objective-cmd", "--benchmark", "--knobs", "--transfer", "--archive", "--gamma", "--out"] {
        assert!(help.contains(flag), "{flag}");
    }
}

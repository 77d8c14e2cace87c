use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn skyway(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skyway"));
    cmd.args(args).env_remove("SKYWAY_SEED");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn generate(dir: &Path, nodes: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("s{nodes}_{seed}.json"));
    let out = run(&mut skyway(&[
        "generate",
        "--nodes",
        &nodes.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{out:?}");
    path
}

/// Failures injected by a json simulate run; compute times are left out.
fn failures(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{out:?}");
    let trace: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    trace["failures"].clone()
}

#[test]
fn skyline_marks_the_reference_catalog() {
    let out = run(&mut skyway(&[
        "skyline",
        "--catalog",
        data("reference_catalog.json").to_str().unwrap(),
    ]));
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let csv: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "id,is_skyline,witness")
        .skip(1)
        .collect();
    assert!(!csv.is_empty());
    let on = csv.iter().filter(|l| l.split(',').nth(1) == Some("true")).count();
    assert_eq!(on, 7, "{text}");
    // every dominated drone names its witness
    for l in csv.iter().filter(|l| l.split(',').nth(1) == Some("false")) {
        assert!(!l.split(',').nth(2).unwrap().is_empty(), "{l}");
    }
}

#[test]
fn plan_prints_legs_and_summary() {
    let scenario = data("scenario_12.json");
    for algo in ["lookahead", "greedy", "bruteforce"] {
        let out = run(&mut skyway(&[
            "plan",
            "--scenario",
            scenario.to_str().unwrap(),
            "--algo",
            algo,
            "--depth",
            "1",
        ]));
        assert_eq!(out.status.code(), Some(0), "{algo}: {out:?}");
        let text = stdout(&out);
        assert!(text.starts_with("leg,from,to,"), "{text}");
        assert!(text.contains(&format!("# algorithm={algo} ")), "{text}");
    }
}

#[test]
fn oversized_bruteforce_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = generate(dir.path(), 20, 4);
    let out = run(&mut skyway(&[
        "plan",
        "--scenario",
        scenario.to_str().unwrap(),
        "--algo",
        "bruteforce",
    ]));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = data("scenario_12.json");

    let bad_rate = run(&mut skyway(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--failure-rate",
        "1.5",
    ]));
    assert_eq!(bad_rate.status.code(), Some(2), "{bad_rate:?}");

    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"seed": 1, "node_counts": [], "failure_rates": [0.1]}"#).unwrap();
    let out = dir.path().join("m.csv");
    let bad_config = run(&mut skyway(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(bad_config.status.code(), Some(2), "{bad_config:?}");

    let catalog = dir.path().join("catalog.json");
    std::fs::write(&catalog, "[]").unwrap();
    let empty = run(&mut skyway(&["skyline", "--catalog", catalog.to_str().unwrap(), "--weight", "1"]));
    assert_eq!(empty.status.code(), Some(2), "{empty:?}");

    let bad_algo = run(&mut skyway(&["plan", "--scenario", scenario.to_str().unwrap(), "--algo", "astar"]));
    assert_eq!(bad_algo.status.code(), Some(2), "{bad_algo:?}");
}

#[test]
fn seed_flag_beats_environment() {
    let scenario = data("scenario_12.json");
    let sim = |seed_flag: Option<&str>, env: Option<&str>| {
        let mut args = vec![
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--failure-rate",
            "0.5",
            "--json",
        ];
        if let Some(s) = seed_flag {
            args.extend(["--seed", s]);
        }
        let mut cmd = skyway(&args);
        if let Some(e) = env {
            cmd.env("SKYWAY_SEED", e);
        }
        failures(&run(&mut cmd))
    };
    let flag_only = sim(Some("11"), None);
    let env_only = sim(None, Some("11"));
    let both = sim(Some("11"), Some("99"));
    let other = sim(None, Some("99"));
    assert_eq!(env_only, flag_only);
    assert_eq!(both, flag_only);
    assert_ne!(other, flag_only, "seeds 11 and 99 should inject differently");
}

#[test]
fn experiment_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"seed": 5, "node_counts": [10], "failure_rates": [0.1, 0.4],
            "algorithms": ["lookahead", "greedy", "bruteforce"], "runs_per_point": 3}"#,
    )
    .unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let res = run(&mut skyway(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        assert!(res.status.success(), "{res:?}");
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("algorithm,"));
    assert_eq!(lines.count(), 6);

    // the environment seed changes the sweep, the flag overrides it again
    let env_out = dir.path().join("env.csv");
    let res = run(skyway(&[
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        env_out.to_str().unwrap(),
        "--seed",
        "5",
    ])
    .env("SKYWAY_SEED", "6"));
    assert!(res.status.success(), "{res:?}");
    assert_eq!(std::fs::read(&env_out).unwrap(), files[0]);
}

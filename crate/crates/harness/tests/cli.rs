use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fjnet-cli"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn toy_preset_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["toy", "--out", "toy"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "toy.json",
        "toy_curve.csv",
        "trace_beers.csv",
        "trace_nad.csv",
    ] {
        assert!(dir.path().join("toy").join(f).exists(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("toy/toy.json")).unwrap())
            .unwrap();
    assert_eq!(summary["outcome"]["ok"], true);
}

#[test]
fn several_configs_run_in_parallel_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a.toml", 1), ("b.toml", 2)] {
        fs::write(
            dir.path().join(name),
            format!(
                "experiment = \"gradcheck\"\nseed = {seed}\n[check]\ninstances = 3\nmax_n = 6\n"
            ),
        )
        .unwrap();
    }
    let out = cli(
        &[
            "gradcheck",
            "--config",
            "a.toml",
            "--config",
            "b.toml",
            "--out",
            "runs",
            "--parallel",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for sub in ["a", "b"] {
        assert!(dir
            .path()
            .join("runs")
            .join(sub)
            .join("gradcheck.csv")
            .exists());
    }
}

#[test]
fn invalid_configuration_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("typo.toml"),
        "experiment = \"toy\"\nseeed = 3\n",
    )
    .unwrap();
    let out = cli(&["toy", "--config", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeed"));

    fs::write(
        dir.path().join("budget.toml"),
        "experiment = \"budget\"\n[dataset]\nkind = \"polarized\"\nn = 10\n",
    )
    .unwrap();
    let out = cli(&["toy", "--config", "budget.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["nad-compare", "--print-config"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    fs::write(dir.path().join("c.toml"), &text).unwrap();
    let again = cli(
        &["nad-compare", "--config", "c.toml", "--print-config"],
        dir.path(),
    );
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    let strip = |t: &str| t.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(
        strip(&text),
        strip(&String::from_utf8(again.stdout).unwrap())
    );
}

#[test]
fn shipped_configurations_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let experiment = text
            .lines()
            .find_map(|l| l.strip_prefix("experiment = "))
            .unwrap()
            .trim_matches('"');
        let out = cli(
            &[
                experiment,
                "--config",
                path.to_str().unwrap(),
                "--print-config",
            ],
            &root,
        );
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        seen += 1;
    }
    assert!(seen >= 3);
}

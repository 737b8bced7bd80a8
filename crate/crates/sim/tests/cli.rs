use std::fs;
use std::path::Path;
use std::process::Command;

use bdirs_sim::experiment::{CONVERGENCE_CSV, CONVERGENCE_JSON, SWEEP_CSV, SWEEP_JSON};
use serde_json::Value;

const SMALL: &str = r#"
seeds = [2, 0, 1]

[scenario]
n_bs = 4
m_irs = 4

[sweep]
n_values = [4, 2]
p_dbm_values = [20.0, 10.0]
"#;

fn bdirs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bdirs")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_owned();
    (
        header,
        lines.map(|l| l.split(',').map(str::to_owned).collect()).collect(),
    )
}

#[test]
fn converge_writes_sorted_monotone_traces_and_consistent_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = bdirs(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv_rows(&out.join(CONVERGENCE_CSV));
    assert_eq!(header, "seed,variant,outer_iter,se_bits_per_hz");
    let keys: Vec<(u64, String, usize)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].clone(), r[2].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(
        keys.iter()
            .map(|k| k.0)
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        3
    );

    // Traces are non-decreasing; collect each run's last value.
    let mut finals: std::collections::BTreeMap<(u64, String), f64> = Default::default();
    let mut iters: std::collections::BTreeMap<(u64, String), usize> = Default::default();
    for (k, r) in keys.iter().zip(&rows) {
        let se: f64 = r[3].parse().unwrap();
        assert!(se.is_finite() && se >= 0.0);
        let key = (k.0, k.1.clone());
        if let Some(prev) = finals.get(&key) {
            assert!(se >= *prev);
        }
        finals.insert(key.clone(), se);
        *iters.entry(key).or_default() += 1;
    }

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join(CONVERGENCE_JSON)).unwrap()).unwrap();
    assert_eq!(summary["tool"], "bdirs-sim");
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    for variant in ["bd", "diag"] {
        let vals: Vec<f64> = finals.iter().filter(|(k, _)| k.1 == variant).map(|(_, v)| *v).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let reported = summary["variants"][variant]["mean_final_se"].as_f64().unwrap();
        assert!(
            (reported - mean).abs() <= 1e-12 * mean.abs().max(1e-300),
            "{variant}: {reported} vs {mean}"
        );
        assert_eq!(summary["variants"][variant]["runs"], 3);
    }
    let names: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[test]
fn sweep_grid_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = bdirs(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--variant",
        "bd",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv_rows(&out.join(SWEEP_CSV));
    assert_eq!(header, "n,p_dbm,variant,seed,se_final");
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(rows.iter().all(|r| r[2] == "bd"));
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("2", "10"));

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join(SWEEP_JSON)).unwrap()).unwrap();
    let points = summary["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    for pt in points {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r[0].parse::<u64>().ok() == pt["n"].as_u64()
                    && r[1].parse::<f64>().unwrap() == pt["p_dbm"].as_f64().unwrap()
            })
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 3);
        let mean = vals.iter().sum::<f64>() / 3.0;
        assert!((pt["mean_se"].as_f64().unwrap() - mean).abs() <= 1e-12 * mean);
    }
    assert_eq!(summary["power_gain_10_to_20_dbm"].as_array().unwrap().len(), 2);
    assert_eq!(summary["antenna_gain_min_to_max_n"].as_array().unwrap().len(), 2);
    assert_eq!(summary["reference_power_gain"], 0.2);
    assert_eq!(summary["reference_antenna_gain"], 0.15);
}

#[test]
fn single_grid_point_gives_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[scenario]\nm_irs = 3\n[sweep]\nn_values = [3]\np_dbm_values = [10.0]\n",
    );
    let out = dir.path().join("out");
    let o = bdirs(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "5..=9",
        "--variant",
        "diag",
    ]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out.join(SWEEP_CSV));
    assert_eq!(
        rows.iter().map(|r| r[3].as_str()).collect::<Vec<_>>(),
        ["5", "6", "7", "8", "9"]
    );
}

#[test]
fn l_bits_override_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let hash = |extra: &[&str], name: &str| {
        let out = dir.path().join(name);
        let mut args = vec![
            "converge",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seeds",
            "0..1",
        ];
        args.extend_from_slice(extra);
        assert!(bdirs(&args).status.success());
        let s: Value = serde_json::from_str(&fs::read_to_string(out.join(CONVERGENCE_JSON)).unwrap()).unwrap();
        s["config_hash"].as_str().unwrap().to_owned()
    };
    assert_ne!(hash(&[], "a"), hash(&["--l-bits", "2"], "b"));
    assert_eq!(hash(&[], "c"), hash(&[], "d"));
}

#[test]
fn validation_failure_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seeds = []\n");
    let out = dir.path().join("out");
    let o = bdirs(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), SMALL);
    let o = bdirs(&[
        "converge",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "3..1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = bdirs(&["converge", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let o = bdirs(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let o = bdirs(&[
        "sweep",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
        "--out",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn output_dir_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-config");
    let text = format!("{SMALL}\n[output]\ndir = {:?}\n", out.to_str().unwrap());
    let cfg = write_config(dir.path(), &text);
    assert!(bdirs(&["converge", "--config", &cfg, "--seeds", "0..1"])
        .status
        .success());
    assert!(out.join(CONVERGENCE_CSV).exists());
}

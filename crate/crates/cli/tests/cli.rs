use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use hoti_cli::config::RunConfig;
use hoti_cli::{load_config, run, Command};
use serde_json::Value;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn hoti(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_hoti")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn every_shipped_config_validates() {
    for entry in fs::read_dir(shipped("")).unwrap() {
        let path = entry.unwrap().path();
        load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn empty_axes_exits_2_naming_axes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"version": 1, "lattice": {"axes": []}}"#);
    let out = hoti(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("axes"));
}

#[test]
fn unknown_key_exits_2_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "lattice": {"axes": [{"t": 1, "lambda": 0.5, "b": "1/3", "n": 9}]}, "dos": {"eta": 0.1, "sigma": 2}}"#,
    );
    let out = hoti(&["dos", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dos") && err.contains("sigma"), "{err}");
}

#[test]
fn missing_command_section_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"version": 1, "lattice": {"axes": [{"t": 1, "lambda": 0.5, "b": "1/3", "n": 9}]}}"#);
    let out = hoti(&["evolve", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gap_closing_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "lattice": {"axes": [{"t": 1, "lambda": 0, "b": "1/3", "n": 9}]}, "chern": {"mode": "abelian"}}"#,
    );
    let out = hoti(&["chern", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fig2_config_emits_1d_and_2d_dos_with_corner_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&shipped("fig2.json")).unwrap();
    let files = run(Command::Dos, &cfg, tmp.path()).unwrap();
    let names: Vec<&str> = files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["dos_axis0.csv", "dos_axis1.csv", "dos_lattice.csv"]);

    let curve: Vec<(f64, f64)> = read_csv(&tmp.path().join("dos_lattice.csv"))
        .iter()
        .map(|r| (r["energy"].parse().unwrap(), r["density"].parse().unwrap()))
        .collect();
    // the lowest corner level sits at twice the 1D edge energy, about -1.389
    let (peak_idx, _) = curve
        .iter()
        .enumerate()
        .filter(|(_, (e, _))| (e + 1.3887).abs() < 0.01)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let peak = curve[peak_idx].1;
    let lo = curve.iter().filter(|(e, _)| (*e + 1.3887).abs() < 0.15 && (*e + 1.3887).abs() > 0.08);
    assert!(lo.clone().count() > 0);
    for (_, d) in lo {
        assert!(*d < peak, "corner peak not isolated");
    }
}

#[test]
fn fig3_config_produces_xi_table_with_expected_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = load_config(&shipped("fig3.json")).unwrap();
    cfg.output.formats = vec![];
    run(Command::Evolve, &cfg, tmp.path()).unwrap();
    let rows = read_csv(&tmp.path().join("xi.csv"));
    assert_eq!(rows.len(), 12);
    for corner in ["C1", "C2", "C3", "C4"] {
        let xi = |phi_prefix: &str| -> f64 {
            rows.iter()
                .find(|r| r["injection"] == corner && r["phi"].starts_with(phi_prefix))
                .unwrap()["xi"]
                .parse()
                .unwrap()
        };
        assert!(xi("0.4398") > xi("2.356"), "{corner}");
    }
}

#[test]
fn chern_outputs_match_known_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&shipped("figS1.json")).unwrap();
    run(Command::Chern, &cfg, tmp.path()).unwrap();
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("chern.json")).unwrap()).unwrap();
    assert_eq!(report["integers"], serde_json::json!([[-1, 2, -1]]));
    let flux = read_csv(&tmp.path().join("chern_flux_axis0_subset1.csv"));
    assert_eq!(flux.len(), 1600);
    let total: f64 = flux.iter().map(|r| r["flux"].parse::<f64>().unwrap()).sum();
    assert!((total / (2.0 * std::f64::consts::PI) - 2.0).abs() < 1e-6);
}

#[test]
fn assemble_writes_state_json_pgm_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = shipped("figS2.json");
    let out = hoti(&[
        "assemble",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--format",
        "json,pgm",
        "--workers",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_csv(&tmp.path().join("assemble.csv"));
    let labels: Vec<&str> = summary.iter().map(|r| r["parity"].as_str()).collect();
    assert_eq!(labels, ["SS", "SA", "AS", "AA"]);
    for r in &summary {
        assert!(r["residual"].parse::<f64>().unwrap() < 1e-9);
        assert!(r["dense_deviation"].parse::<f64>().unwrap() < 1e-9);
    }
    let state: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("state_corner_0.json")).unwrap()).unwrap();
    assert_eq!(state["role"], "Corner");
    assert_eq!(state["state"]["dims"], serde_json::json!([30, 30]));
    assert_eq!(state["state"]["amps"].as_array().unwrap().len(), 900);
    let img = fs::read(tmp.path().join("state_corner_0.pgm")).unwrap();
    assert!(img.starts_with(b"P5\n30 30\n255\n"));
    assert_eq!(img.len(), b"P5\n30 30\n255\n".len() + 900);
}

#[test]
fn manifest_lists_every_file_and_echo_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&shipped("fig2.json")).unwrap();
    run(Command::Assemble, &cfg, tmp.path()).unwrap();
    let manifest: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["command"], "assemble");
    let listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect();
    let mut on_disk: Vec<String> = dir_contents(tmp.path()).into_keys().filter(|n| n != "manifest.json").collect();
    let mut sorted = listed.clone();
    sorted.sort();
    on_disk.sort();
    assert_eq!(sorted, on_disk);
    let echo = serde_json::to_string(&manifest["config"]).unwrap();
    assert_eq!(RunConfig::from_json(&echo).unwrap(), cfg);
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = shipped("vector_chern.json");
    for (dir, workers) in [(&a, "1"), (&b, "4")] {
        let out = hoti(&["chern", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--workers", workers]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(dir_contents(a.path()), dir_contents(b.path()));

    let c = tempfile::tempdir().unwrap();
    let d = tempfile::tempdir().unwrap();
    let cfg = load_config(&shipped("fig2.json")).unwrap();
    for dir in [&c, &d] {
        run(Command::Spectrum, &cfg, dir.path()).unwrap();
        run(Command::Dos, &cfg, dir.path()).unwrap();
    }
    assert_eq!(dir_contents(c.path()), dir_contents(d.path()));
}

#[test]
fn phase_spellings_are_both_accepted() {
    let text = |phi: &str| {
        format!(r#"{{"version": 1, "lattice": {{"axes": [{{"t": 1, "lambda": 0.5, "b": "1/3", "n": 9, "phi": {phi}}}]}}}}"#)
    };
    let radians = RunConfig::from_json(&text("0.15")).unwrap();
    let multiple = RunConfig::from_json(&text("\"0.15pi\"")).unwrap();
    assert_eq!(radians.lattice.axes[0].phi.0, 0.15);
    assert_eq!(multiple.lattice.axes[0].phi.0, 0.15 * std::f64::consts::PI);
}

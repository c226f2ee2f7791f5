// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fermidark(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermidark"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("FERMIDARK_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of an artifact CSV as (header, rows).
fn csv(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn spectrum_dark_counts() {
    let dir = TempDir::new().unwrap();
    for (fg, fe, n, want, file) in [
        ("9/2", "9/2", "2", 1, "spectrum_fg9_2_fe9_2_n2"),
        ("1/2", "3/2", "2", 5, "spectrum_fg1_2_fe3_2_n2"),
        ("3/2", "1/2", "4", 5, "spectrum_fg3_2_fe1_2_n4"),
    ] {
        let o = fermidark(dir.path(), &["spectrum", "--fg", fg, "--fe", fe, "--n", n, "--U", "0"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains(&format!(": {want} dark states")), "{}", stdout(&o));
        let j = json(dir.path().join(format!("spectrum/{file}.json")));
        let total: u64 = j["result"]["dark_states"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, want);
        assert_eq!(j["manifest"]["config"]["n"], n.parse::<u64>().unwrap());
        assert_eq!(j["manifest"]["version"], env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn spectrum_rejects_invalid_sectors() {
    let dir = TempDir::new().unwrap();
    let o = fermidark(dir.path(), &["spectrum", "--fg", "1/2", "--fe", "5/2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fermidark(dir.path(), &["spectrum", "--fg", "1/2", "--fe", "1/2", "--n", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

fn darks_by_excitation(out: &Path, fg: &str, fe: &str, n: &str) -> Vec<(u64, u64)> {
    let o = fermidark(out, &["darks", "--fg", fg, "--fe", fe, "--n", n]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file = format!("darks/darks_fg{}_fe{}_n{n}.csv", fg.replace('/', "_"), fe.replace('/', "_"));
    let (header, rows) = csv(out.join(file));
    let (ne, pred, num) = (column(&header, "n_e"), column(&header, "predicted"), column(&header, "numerical"));
    let max_ne: usize = n.parse().unwrap();
    let mut sums = vec![(0, 0); max_ne];
    for r in rows {
        let k: usize = r[ne].parse().unwrap();
        sums[k - 1].0 += r[pred].parse::<u64>().unwrap();
        sums[k - 1].1 += r[num].parse::<u64>().unwrap();
    }
    sums
}

#[test]
fn darks_census_examples() {
    let dir = TempDir::new().unwrap();
    assert_eq!(darks_by_excitation(dir.path(), "3/2", "5/2", "4"), vec![(21, 21), (28, 28), (0, 0), (0, 0)]);
    assert_eq!(darks_by_excitation(dir.path(), "5/2", "3/2", "2"), vec![(0, 0), (0, 0)]);
    assert_eq!(darks_by_excitation(dir.path(), "3/2", "3/2", "3"), vec![(12, 12), (0, 0), (0, 0)]);
}

#[test]
fn prepare_presets_reach_their_goldens() {
    let dir = TempDir::new().unwrap();
    for (preset, state, golden) in [("fig3d", "D_0", 0.95982), ("fig5d", "D_0", 0.99089)] {
        let o = fermidark(dir.path(), &["prepare", "--preset", preset]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (header, rows) = csv(dir.path().join(format!("prepare/prepare_{preset}.csv")));
        let k = column(&header, state);
        let peak = rows.iter().map(|r| r[k].parse::<f64>().unwrap()).fold(f64::MIN, f64::max);
        assert!((peak - golden).abs() <= 0.01 * golden, "{preset}: {peak}");
        let j = json(dir.path().join(format!("prepare/prepare_{preset}.json")));
        assert!(j["result"]["trace_drift"].as_f64().unwrap() < 1e-8);
        assert_eq!(j["manifest"]["config"]["name"], preset);
    }
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const ZERO_DRIVE: &str = r#"{
  "name": "still",
  "level_structure": { "f_g": "1/2", "f_e": "1/2" },
  "n": 2,
  "scheme": "raman",
  "raman": { "f_s": "1/2", "omega_eff": 0.0 },
  "initial_state": "G_1/2",
  "tracked": ["G_1/2", "D_0", "ee"],
  "t_max": 50.0,
  "samples": 51
}"#;

#[test]
fn zero_drive_config_is_flat() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "still.json", ZERO_DRIVE);
    let o = fermidark(dir.path(), &["prepare", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(dir.path().join("prepare/prepare_still.csv"));
    assert_eq!(rows.len(), 51);
    for name in ["G_1/2", "D_0", "ee"] {
        let k = column(&header, name);
        let first: f64 = rows[0][k].parse().unwrap();
        assert!(rows.iter().all(|r| (r[k].parse::<f64>().unwrap() - first).abs() < 1e-12), "{name}");
    }
}

#[test]
fn bad_configs_exit_with_config_error() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("unknown.json", ZERO_DRIVE.replace("\"samples\": 51", "\"samples\": 51, \"bogus\": 1")),
        ("negative.json", ZERO_DRIVE.replace("50.0", "-1.0")),
        ("mismatch.json", ZERO_DRIVE.replace("\"scheme\": \"raman\"", "\"scheme\": \"zeeman\"")),
        ("state.json", ZERO_DRIVE.replace("\"D_0\"", "\"|g-3/2 g1/2>\"")),
        ("levels.json", ZERO_DRIVE.replace("\"f_e\": \"1/2\"", "\"f_e\": \"5/2\"")),
    ];
    for (name, body) in cases {
        let cfg = write_config(dir.path(), name, &body);
        let o = fermidark(dir.path(), &["prepare", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = fermidark(dir.path(), &["prepare", "--preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn onsite_sweep_reports_maxima() {
    let dir = TempDir::new().unwrap();
    let o = fermidark(dir.path(), &["onsite"]);
    assert!(o.status.success());
    let j = json(dir.path().join("onsite/onsite.json"));
    let get = |key: &str| j["result"][key].as_f64().unwrap();
    assert!((get("ell_perp_over_ell_z_at_max") - 1.66).abs() <= 0.02);
    assert!((get("ell_z_over_ell_perp_at_max") - 2.18).abs() <= 0.02);
    assert!((get("nu_z_over_nu_perp") - 7.59).abs() <= 0.1);
    assert!((get("nu_perp_over_nu_z") - 22.59).abs() <= 0.3);
    assert!(get("shape_integral_at_unit_ratio").abs() < 1e-12);
    let (header, rows) = csv(dir.path().join("onsite/onsite.csv"));
    let ratio = column(&header, "ell_perp_over_ell_z");
    let shape = column(&header, "shape_integral");
    let unit = rows.iter().find(|row| (row[ratio].parse::<f64>().unwrap() - 1.0).abs() < 1e-12).expect("ratio 1 sampled");
    assert!(unit[shape].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn multisite_products_are_dark() {
    let dir = TempDir::new().unwrap();
    let o = fermidark(dir.path(), &["multisite", "--geometries", "10", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn identical_inputs_give_identical_csv() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let runs: [&[&str]; 4] = [
        &["spectrum", "--fg", "3/2", "--fe", "5/2", "--n", "3", "--U", "2"],
        &["darks", "--fg", "3/2", "--fe", "3/2", "--n", "3"],
        &["prepare", "--preset", "fig3c"],
        &["multisite", "--geometries", "4", "--seed", "11"],
    ];
    for args in runs {
        assert!(fermidark(a.path(), args).status.success());
        assert!(fermidark(b.path(), args).status.success());
    }
    let mut compared = 0;
    for entry in walk(a.path()) {
        if entry.extension().is_some_and(|e| e == "csv") {
            let twin = b.path().join(entry.strip_prefix(a.path()).unwrap());
            assert_eq!(fs::read(&entry).unwrap(), fs::read(twin).unwrap(), "{}", entry.display());
            compared += 1;
        }
    }
    assert_eq!(compared, 4);
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn artifacts_embed_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    assert!(fermidark(dir.path(), &["prepare", "--preset", "fig3d", "--t-max", "10"]).status.success());
    let text = fs::read_to_string(dir.path().join("prepare/prepare_fig3d.csv")).unwrap();
    let line = text.lines().find_map(|l| l.strip_prefix("# config ")).expect("config line");
    let cfg: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(cfg["t_max"], 10.0);
    assert!(text.lines().next().unwrap().contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn output_root_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fermidark"))
        .args(["darks", "--fg", "1/2", "--fe", "1/2", "--n", "2"])
        .env("FERMIDARK_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("darks/darks_fg1_2_fe1_2_n2.csv").exists());
}

use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use netsir::config::ExperimentConfig;
use netsir::{resolve, run, Command, Overrides};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_netsir")).args(args).current_dir(cwd).output().unwrap()
}

fn karate() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/karate.edges")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn missing_edge_list_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["stats", "no/such/graph.edges"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/graph.edges"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[network]\nkind = \"ba\"\nn = 10\n");
    let out = bin(&["compare", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exp.toml"));
}

#[test]
fn stats_on_karate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["stats", karate().to_str().unwrap(), "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/stats.csv")).unwrap();
    assert_eq!(column(&csv, "n"), vec!["34"]);
    assert_eq!(column(&csv, "m"), vec!["78"]);
    assert!(dir.path().join("res/manifest.toml").exists());
}

#[test]
fn er_mean_degree_is_exact() {
    let cfg = ExperimentConfig::from_toml("[network]\nkind = \"er\"\nn = 500\nedges = 6125\n").unwrap();
    let cfg = resolve(cfg, Command::Stats, &Overrides::default()).unwrap();
    let out = run(Command::Stats, &cfg).unwrap();
    assert_eq!(column(out.file("stats.csv").unwrap(), "mean_degree"), vec!["24.5"]);
}

#[test]
fn centrality_rows_keep_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.edges");
    std::fs::write(&path, "a b\nb c\nc a\nc d\n").unwrap();
    let out = bin(&["centrality", path.to_str().unwrap(), "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("res/centrality.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "node,label,DC,BC,CC,CN,CR");
    assert_eq!(column(&csv, "label"), vec!["a", "b", "c", "d"]);
}

#[test]
fn single_strategy_compare_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[network]\nkind = \"ba\"\nn = 50\nm = 2\n");
    let out = bin(&["compare", "--config", cfg.to_str().unwrap(), "--strategy", "unc", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fewer than 2"));
    let metrics = std::fs::read_to_string(dir.path().join("res/metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().starts_with("Unc,"));
    assert!(metrics.contains("Delta,NA,NA"));
}

#[test]
fn compare_orders_optimal_uniform_uncontrolled() {
    let cfg = ExperimentConfig::from_toml(
        "seed = 2\nstrategies = [\"optimal\", \"un\", \"unc\"]\n[network]\nkind = \"ba\"\nn = 100\nm = 3\n[params]\nbeta0_multiple = 3.0\nw_total = 10.0\n",
    )
    .unwrap();
    let cfg = resolve(cfg, Command::Compare, &Overrides::default()).unwrap();
    let out = run(Command::Compare, &cfg).unwrap();
    let csv = out.file("metrics.csv").unwrap();
    let area: Vec<f64> = column(csv, "area")[..3].iter().map(|v| v.parse().unwrap()).collect();
    assert!(area[0] <= area[1] && area[1] <= area[2], "{area:?}");
    assert!(out.file("fbs_report.csv").unwrap().starts_with("iteration,J,rel_change,lambda4_max\n"));
}

#[test]
fn same_seed_same_bytes_through_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "strategies = [\"optimal\", \"dra\", \"cr+\"]\n[network]\nkind = \"ws\"\nn = 60\nk = 4\np = 0.1\n[params]\nbeta0_multiple = 3.0\nw_total = 6.0\n",
    );
    for d in ["a", "b"] {
        let out = bin(&["compare", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", d], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(dir.path().join("a").join(&name)).unwrap(),
            std::fs::read(dir.path().join("b").join(&name)).unwrap(),
            "{name:?}"
        );
        n += 1;
    }
    assert!(n >= 8);
}

#[test]
fn seed_override_changes_generated_network() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[network]\nkind = \"ba\"\nn = 80\nm = 2\n");
    let c = cfg.to_str().unwrap();
    bin(&["stats", "--config", c, "--out", "a"], dir.path());
    bin(&["stats", "--config", c, "--seed", "2", "--out", "b"], dir.path());
    let read = |d: &str| std::fs::read_to_string(dir.path().join(d).join("stats.csv")).unwrap();
    assert_ne!(read("a"), read("b"));
    let manifest = std::fs::read_to_string(dir.path().join("b/manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 2"));
}

#[test]
fn relative_edge_list_resolves_against_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("conf")).unwrap();
    std::fs::write(dir.path().join("conf/tri.edges"), "0 1\n1 2\n2 0\n2 3\n").unwrap();
    std::fs::write(dir.path().join("conf/exp.toml"), "[network]\nkind = \"file\"\npath = \"tri.edges\"\n").unwrap();
    let out = bin(&["stats", "--config", "conf/exp.toml", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn correlate_emits_one_row_per_grid_point() {
    let cfg = ExperimentConfig::from_toml(
        "[network]\nkind = \"ba\"\nn = 200\nm = 3\n[params]\nbeta0_multiple = 3.0\nw_total = 20.0\nsteps = 100\n[analysis]\nmetrics = [\"dc\", \"bc\"]\n",
    )
    .unwrap();
    let cfg = resolve(cfg, Command::Correlate, &Overrides::default()).unwrap();
    let out = run(Command::Correlate, &cfg).unwrap();
    let csv = out.file("correlation.csv").unwrap();
    assert_eq!(csv.lines().count(), 1 + 101);
    let r_dc: Vec<f64> = column(csv, "r_DC")[..10].iter().map(|v| v.parse().unwrap()).collect();
    assert!(r_dc.iter().sum::<f64>() / 10.0 > 0.0);
    assert_eq!(out.file("degree_classes.csv").unwrap().lines().count(), 1 + 101);
}

#[test]
fn uniform_correlate_is_undefined_with_warning() {
    let cfg = ExperimentConfig::from_toml(
        "strategies = [\"un\"]\n[network]\nkind = \"ba\"\nn = 60\nm = 2\n[params]\nsteps = 20\n[analysis]\nmetrics = [\"dc\"]\n",
    )
    .unwrap();
    let cfg = resolve(cfg, Command::Correlate, &Overrides::default()).unwrap();
    let out = run(Command::Correlate, &cfg).unwrap();
    assert!(column(out.file("correlation.csv").unwrap(), "r_DC").iter().all(|v| v == "NA"));
    assert!(out.warnings.iter().any(|w| w.contains("r_DC is undefined")));
}

#[test]
fn optimize_writes_control_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["optimize", karate().to_str().unwrap(), "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let control = std::fs::read_to_string(dir.path().join("res/control_optimal.csv")).unwrap();
    assert_eq!(control.lines().count(), 1 + 201);
    assert!(control.starts_with("t,w_0,w_1,"));
    let traj = std::fs::read_to_string(dir.path().join("res/trajectory_optimal.csv")).unwrap();
    assert!(traj.starts_with("t,mean_S,mean_I,mean_R,I_0,"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn horton(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horton"))
        .args(args)
        .env("HORTON_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn igw_constants_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = horton(dir.path(), &["igw", "--q0", "0.75"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("igw_constants.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[1] - 1.76221).abs() < 1e-5);
    assert_eq!(row[2], 4.0);
    assert!((row[4] - 6.349604).abs() < 1e-6);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("igw.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["q0"], 0.75);
    assert!(summary["version"].is_string());
}

#[test]
fn sweep_columns_and_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = horton(dir.path(), &["igw", "--sweep", "0.5:0.99:0.01"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("acr_sweep.csv");
    assert_eq!(header(&path), "q0,a,c,R");
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "0.5,1.0,2.0,4.0");
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn bad_q0_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&horton(dir.path(), &["igw", "--q0", "0.3"])), 2);
    assert_eq!(code(&horton(dir.path(), &["igw"])), 2);
    assert_eq!(code(&horton(dir.path(), &["nonsense"])), 2);
}

#[test]
fn converge_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = horton(dir.path(), &["converge", "--dist", "igw:0.9"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("trajectory.csv");
    assert_eq!(header(&path), "step,q0,mean,sup_distance,status");
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);

    let o = horton(dir.path(), &["converge", "--dist", "finite:0.6,0,0.4"]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stdout).contains("converged-to-point-mass"));

    let o = horton(dir.path(), &["converge", "--dist", "zipf", "--steps", "200"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("converged-to-IGW(0.50"));

    let o = horton(dir.path(), &["converge", "--dist", "zipf", "--steps", "10"]);
    assert_eq!(code(&o), 6);
}

#[test]
fn mc_writes_estimates_and_reports_conditioning_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = horton(dir.path(), &["mc", "--dist", "igw:0.75", "--k", "3", "--n", "500", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&dir.path().join("mc_tokunaga.csv")),
        "i,j,T,T_se,T_regular,T_regular_se,t_total,n"
    );
    assert_eq!(header(&dir.path().join("mc_branches.csv")), "k,N_mean,N_mean_se,ratio,ratio_se,n");
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mc.summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["seed"], 4);
    assert!(s["results"]["censoring_rate"].is_number());

    let o = horton(dir.path(), &["mc", "--dist", "binary", "--k", "10", "--n", "5", "--budget", "1"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn mc_is_reproducible_and_thread_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["mc", "--dist", "binary", "--k", "3", "--n", "300", "--seed", "9"];
    assert_eq!(code(&horton(a.path(), &args)), 0);
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "2"]);
    assert_eq!(code(&horton(b.path(), &with_threads)), 0);
    assert_eq!(
        fs::read(a.path().join("mc_tokunaga.csv")).unwrap(),
        fs::read(b.path().join("mc_tokunaga.csv")).unwrap()
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"q0": 0.6, "terms": 5}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&horton(dir.path(), &["igw", "--config", cfg, "--q0", "0.9"])), 0);
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("igw.summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["q0"], 0.9);
    assert_eq!(s["config"]["terms"], 5);
    assert_eq!(s["config"]["k"], 8);
    let rows = fs::read_to_string(dir.path().join("igw_pmf.csv")).unwrap().lines().count();
    assert_eq!(rows, 7);
}

#[test]
fn oscillatory_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = horton(dir.path(), &["oscillatory", "--q0", "0.55", "--m-max", "60"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("oscillatory_qm.csv");
    assert_eq!(header(&path), "m,q_m,igw_q_m,ratio,residual");
    let text = fs::read_to_string(&path).unwrap();
    for line in text.lines().skip(1) {
        let residual: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual <= 1e-8);
    }
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oscillatory.summary.json")).unwrap()).unwrap();
    assert_eq!(s["results"]["regularity"]["status"], "oscillating");
}

#[test]
fn enumerate_flags_insufficient_cap() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&horton(dir.path(), &["enumerate", "--dist", "binary", "--k", "2"])), 0);
    assert!(dir.path().join("enumeration.json").exists());
    assert_eq!(
        code(&horton(dir.path(), &["enumerate", "--dist", "binary", "--k", "3", "--max-vertices", "15"])),
        3
    );
    assert_eq!(code(&horton(dir.path(), &["enumerate", "--dist", "zipf", "--k", "2"])), 2);
}

#[test]
fn tree_files() {
    let dir = tempfile::tempdir().unwrap();
    // planted tree: cherry below a vertex that also carries a leaf
    let tree = r#"{"nodes":[{"parent":null,"children":[1]},{"parent":0,"children":[2,3]},{"parent":1,"children":[]},{"parent":1,"children":[4,5]},{"parent":3,"children":[]},{"parent":3,"children":[]}],"root":0}"#;
    let input = dir.path().join("t.json");
    fs::write(&input, tree).unwrap();
    let input = input.to_str().unwrap();
    let o = horton(dir.path(), &["order", "--input", input]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["order"], 2);
    assert_eq!(v["order_by_pruning"], 2);
    assert_eq!(v["branch_counts"], serde_json::json!([3, 1]));

    let out = dir.path().join("p.json");
    let o = horton(dir.path(), &["prune-tree", "--input", input, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let pruned: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(pruned["nodes"].as_array().unwrap().len(), 2);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"nodes":[{"parent":null,"children":[1]}],"root":0}"#).unwrap();
    assert_eq!(code(&horton(dir.path(), &["order", "--input", bad.to_str().unwrap()])), 2);
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use atompart::eppf::{PitmanYor, VTable};
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_atompart");

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let f = Files {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("py.json", r#"{"eppf":{"type":"pitman_yor","sigma":0.5,"theta":1.0}}"#);
        f.write("spike.json", r#"{"base_measure":{"atoms":[0.3],"diffuse":0.7}}"#);
        f.write("diffuse.json", r#"{"base_measure":{"atoms":[]}}"#);
        f.write("two.json", r#"{"base_measure":{"atoms":[0.2,0.1],"diffuse":0.7}}"#);
        f
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(BIN).args(args).env(key, val).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn eppf_values() {
    let f = Files::new();
    let m = f.path("py.json");
    for (sizes, q) in [("2", 0.25), ("1,1", 0.75), ("1", 1.0)] {
        let o = run(&["eppf", "--model", &m, "--sizes", sizes]);
        assert_eq!(code(&o), 0);
        assert!((json(&o)["q"].as_f64().unwrap() - q).abs() < 1e-15);
    }
    let o = run(&["eppf", "--model", &m, "--partition", "[[1,3],[2]]"]);
    assert_eq!(json(&o)["sizes"], serde_json::json!([2, 1]));
}

#[test]
fn induced_all_methods() {
    let f = Files::new();
    let (m, h) = (f.path("py.json"), f.path("spike.json"));
    for method in ["general", "gibbs", "spike_slab", "oracle"] {
        let o = run(&["induced", "--model", &m, "--base-measure", &h, "--sizes", "2", "--method", method]);
        assert_eq!(code(&o), 0, "{method}");
        let v = json(&o);
        assert!((v["probability"].as_f64().unwrap() - 0.3175).abs() < 1e-12);
        assert_eq!(v["method"], method);
        assert_eq!(v["cross_check"]["agree"], true);
        assert!(v["cross_check"]["abs_diff"].as_f64().unwrap() < 1e-10);
        assert!(v["wall_time_ms"].as_f64().is_some());
        assert_eq!(v["partition"], serde_json::json!([[1, 2]]));
    }
}

#[test]
fn diffuse_induced_matches_eppf() {
    let f = Files::new();
    let m = f.path("py.json");
    let a = json(&run(&["eppf", "--model", &m, "--partition", "[[1,2],[3]]"]));
    let b = json(&run(&["induced", "--model", &m, "--base-measure", &f.path("diffuse.json"), "--partition", "[[1,2],[3]]"]));
    assert_eq!(a["q"], b["probability"]);
}

#[test]
fn invalid_input_exits_2() {
    let f = Files::new();
    let bad = f.write("bad.json", r#"{"eppf":{"type":"pitman_yor","sigma":1.5,"theta":1.0}}"#);
    let bad = bad.display().to_string();
    let (m, h) = (f.path("py.json"), f.path("spike.json"));
    assert_eq!(code(&run(&["eppf", "--model", &bad, "--sizes", "2"])), 2);
    assert_eq!(code(&run(&["eppf", "--model", &f.path("missing.json"), "--sizes", "2"])), 2);
    assert_eq!(code(&run(&["eppf", "--model", &m, "--sizes", "0"])), 2);
    assert_eq!(code(&run(&["eppf", "--model", &m, "--partition", "[[1],[1]]"])), 2);
    assert_eq!(code(&run(&["eppf", "--model", &m, "--bogus"])), 2);
    assert_eq!(code(&run(&["induced", "--model", &m, "--base-measure", &h, "--sizes", "2", "--method", "fast"])), 2);
    let two = f.path("two.json");
    assert_eq!(
        code(&run(&["induced", "--model", &m, "--base-measure", &two, "--sizes", "2", "--method", "spike_slab"])),
        2
    );
}

#[test]
fn caps_exit_3() {
    let f = Files::new();
    let (m, h) = (f.path("py.json"), f.path("spike.json"));
    assert_eq!(code(&run(&["induced", "--model", &m, "--base-measure", &h, "--sizes", "11"])), 3);
    assert_eq!(code(&run(&["induced", "--model", &m, "--base-measure", &h, "--sizes", "8", "--method", "oracle"])), 3);
    let o = run_env(&["induced", "--model", &m, "--base-measure", &h, "--sizes", "2,2"], "ATOMPART_CAP_N", "3");
    assert_eq!(code(&o), 3);
    let o = run(&["sample", "--model", &m, "--base-measure", &h, "--n", "100001"]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&run(&["stirling", "--sigma", "0.5", "--n", "6000"])), 3);
}

#[test]
fn gibbs_model_file() {
    let f = Files::new();
    let t = VTable::from_pitman_yor(&PitmanYor::new(0.5, 1.0).unwrap(), 8).unwrap();
    t.write_csv(&f.dir.path().join("v.csv")).unwrap();
    let g = f.write("g.json", r#"{"eppf":{"type":"gibbs","sigma":0.5,"v_table_file":"v.csv"}}"#);
    let o = run(&["induced", "--model", g.to_str().unwrap(), "--base-measure", &f.path("spike.json"), "--sizes", "2"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["probability"].as_f64().unwrap() - 0.3175).abs() < 1e-12);
    let o = run(&["eppf", "--model", g.to_str().unwrap(), "--sizes", "9"]);
    assert_eq!(code(&o), 3);
}

fn corrupt_table(dir: &Path) {
    let t = VTable::from_pitman_yor(&PitmanYor::new(0.5, 1.0).unwrap(), 8).unwrap();
    t.write_csv(&dir.join("v.csv")).unwrap();
    let text = fs::read_to_string(dir.join("v.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // header, then (1,1), (2,1), (2,2), (3,1), ...
    let row: Vec<&str> = lines[5].split(',').collect();
    let v: f64 = row[2].parse().unwrap();
    lines[5] = format!("{},{},{}", row[0], row[1], v + 0.05);
    fs::write(dir.join("v.csv"), lines.join("\n") + "\n").unwrap();
}

#[test]
fn selfcheck_passes_and_flags_corrupted_table() {
    let o = run(&["selfcheck"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));

    let f = Files::new();
    corrupt_table(f.dir.path());
    let g = f.write("g.json", r#"{"eppf":{"type":"gibbs","sigma":0.5,"v_table_file":"v.csv"}}"#);
    let o = run(&["selfcheck", "--model", g.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("FAIL") && l.contains("recursion")), "{out}");
    // Other commands refuse the table outright.
    let o = run(&["eppf", "--model", g.to_str().unwrap(), "--sizes", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sample_is_deterministic() {
    let f = Files::new();
    let (m, h) = (f.path("py.json"), f.path("two.json"));
    let args = ["sample", "--model", &m, "--base-measure", &h, "--n", "12", "--paths", "50", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("path,latent_blocks,merged_blocks,partition,labels\n"));
    assert_eq!(text.lines().count(), 51);
    let c = run(&["sample", "--model", &m, "--base-measure", &h, "--n", "12", "--paths", "50", "--seed", "8"]);
    assert_ne!(text.as_bytes(), c.stdout.as_slice());
    let t1 = run(&["--threads", "1", "sample", "--model", &m, "--base-measure", &h, "--n", "12", "--paths", "50", "--seed", "7"]);
    assert_eq!(text.as_bytes(), t1.stdout.as_slice());
}

#[test]
fn sample_single_observation() {
    let f = Files::new();
    let o = run(&["sample", "--model", &f.path("py.json"), "--base-measure", &f.path("spike.json"), "--n", "1", "--paths", "20"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "1");
    }
}

#[test]
fn sample_frequencies_match_induced() {
    let f = Files::new();
    let (m, h) = (f.path("py.json"), f.path("two.json"));
    let paths = 100_000;
    let o = run(&["sample", "--model", &m, "--base-measure", &h, "--n", "3", "--paths", &paths.to_string(), "--frequencies", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let freq: HashMap<String, f64> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[2].parse().unwrap())
        })
        .collect();
    for p in ["[[1,2,3]]", "[[1,2],[3]]", "[[1,3],[2]]", "[[1],[2,3]]", "[[1],[2],[3]]"] {
        let v = json(&run(&["induced", "--model", &m, "--base-measure", &h, "--partition", p]));
        let exact = v["probability"].as_f64().unwrap();
        let band = 4.0 * (exact * (1.0 - exact) / paths as f64).sqrt();
        assert!((freq[p] - exact).abs() <= band, "{p}: {} vs {exact}", freq[p]);
    }
}

#[test]
fn stirling_command() {
    let o = run(&["stirling", "--sigma", "0.5", "--n", "3", "--k", "2"]);
    assert!((json(&o)["value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let o = run(&["stirling", "--sigma", "0", "--n", "4"]);
    assert_eq!(json(&o)["values"], serde_json::json!([6.0, 11.0, 6.0, 1.0]));
    let o = run(&["stirling", "--sigma", "-0.5", "--n", "2", "--k", "1"]);
    assert!((json(&o)["value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(code(&run(&["stirling", "--sigma", "1.0", "--n", "3"])), 2);
}

#[test]
fn asymptotics_command() {
    let f = Files::new();
    let cfg = f.write(
        "exp.json",
        r#"{"eppf":{"type":"pitman_yor","sigma":0.5,"theta":1.0},
            "base_measure":{"atoms":[0.3]},
            "replicates":4,"checkpoints":[10,100,1000],"r_max":3,
            "statistics":["merged_ratio"],
            "tolerances":{"merged_ratio":1.0}}"#,
    );
    let csv_path = f.path("paths.csv");
    let o = run(&["asymptotics", "--config", cfg.to_str().unwrap(), "--seed", "5", "--output", &csv_path]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["identity_violations"], 0);
    assert_eq!(v["statistics"][0]["statistic"], "merged_ratio");
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("replicate,n,K_n,N_n,Lambda_n,merged,k1,k2,k3\n"));
    assert_eq!(text.lines().count(), 13);

    // A failing statistical check exits 1.
    let strict = f.write(
        "strict.json",
        r#"{"eppf":{"type":"pitman_yor","sigma":0.5,"theta":1.0},
            "base_measure":{"atoms":[0.3]},
            "replicates":2,"checkpoints":[10],
            "statistics":["merged_ratio"],
            "tolerances":{"merged_ratio":0.0}}"#,
    );
    assert_eq!(code(&run(&["asymptotics", "--config", strict.to_str().unwrap()])), 1);

    let o = run(&["asymptotics", "--model", &f.path("py.json"), "--base-measure", &f.path("spike.json"), "--n", "100", "--replicates", "2"]);
    assert!(matches!(code(&o), 0 | 1));
    assert!(json(&o)["statistics"].is_array());
    assert_eq!(code(&run(&["asymptotics", "--model", &f.path("py.json")])), 2);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splice_cli::config::ExperimentConfig;
use splice_cli::error::{EXIT_CONFIG, EXIT_IO, EXIT_OK};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_splice");

/// Small linear-toy experiment that runs every stage in a few seconds.
fn toy_config(out: &Path, step2: bool) -> serde_json::Value {
    serde_json::json!({
        "format_version": 1,
        "seed": 3,
        "output_dir": out,
        "data": {"source": "linear_toy", "n": 300, "n_a": 6, "n_b": 6, "m_za": 1, "m_zb": 1, "m_s": 1},
        "model": {"m_za": 1, "m_zb": 1, "m_s": 1, "hidden": [8]},
        "step1": {"epochs": 3, "minibatch_size": 64, "t_restart": 50, "n_msr_restart": 20},
        "step2": {
            "enabled": step2, "k_graph": 8, "k_avg": 3, "n_landmarks": 20,
            "train": {"epochs": 2, "minibatch_size": 64, "t_restart": 50, "n_msr_restart": 20}
        },
        "baselines": {"rrr_dims": [1, 2, 4], "splice_dims": [1, 2], "classifier": {"epochs": 2}},
        "metrics": {"higher_order": [1], "probe_epochs": 2, "probe_hidden": [4]}
    })
}

fn write_config(dir: &Path, name: &str, v: &serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn splice(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|x| x.unwrap().iter().map(String::from).collect()));
    rows
}

fn manifest_stages(out: &Path) -> Vec<String> {
    csv_rows(&out.join("manifest.csv"))[1..]
        .iter()
        .map(|r| r[0].clone())
        .collect()
}

#[test]
fn unknown_key_is_a_config_error_with_field_path() {
    let tmp = TempDir::new().unwrap();
    let mut v = toy_config(&tmp.path().join("out"), false);
    v["model"]["hiden"] = serde_json::json!([4]);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let o = splice(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_CONFIG);
    let e = stderr(&o);
    assert!(e.contains("model") && e.contains("hiden"), "{e}");
}

#[test]
fn wrong_type_reports_nested_path() {
    let tmp = TempDir::new().unwrap();
    let mut v = toy_config(&tmp.path().join("out"), false);
    v["step2"]["train"]["epochs"] = serde_json::json!("ten");
    let cfg = write_config(tmp.path(), "c.json", &v);
    let o = splice(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_CONFIG);
    assert!(stderr(&o).contains("step2.train.epochs"), "{}", stderr(&o));
}

#[test]
fn semantic_validation_errors() {
    let base = toy_config(Path::new("out"), false);
    let cases: [(&str, serde_json::Value); 4] = [
        ("format_version", serde_json::json!(2)),
        ("step1", serde_json::json!({"epochs": 0})),
        (
            "model",
            serde_json::json!({"m_za": 1, "m_zb": 1, "m_s": 0, "hidden": [8]}),
        ),
        (
            "data",
            serde_json::json!({"source": "csv_pair", "view_a": "/nonexistent/a.csv", "view_b": "/nonexistent/b.csv"}),
        ),
    ];
    for (key, val) in cases {
        let mut v = base.clone();
        v[key] = val;
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains(key), "{key}: {err}");
    }
    let err = ExperimentConfig::from_json(r#"{"format_version": 1, "data": {"source": "nope"}}"#).unwrap_err();
    assert!(err.to_string().contains("data"), "{err}");
}

#[test]
fn hash_ignores_output_dir_but_not_seed() {
    let a = ExperimentConfig::from_json(&toy_config(Path::new("x"), false).to_string()).unwrap();
    let b = ExperimentConfig::from_json(&toy_config(Path::new("y"), false).to_string()).unwrap();
    assert_eq!(a.hash(), b.hash());
    let mut c = a.clone();
    c.seed += 1;
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 16);
}

#[test]
fn gen_data_writes_views_and_truth() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let o = splice(&[
        "gen-data",
        "--source",
        "lgnv1",
        "--trials",
        "3000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let data = out.join("data");
    let a = csv_rows(&data.join("viewA.csv"));
    let b = csv_rows(&data.join("viewB.csv"));
    let t = csv_rows(&data.join("truth.csv"));
    assert_eq!((a.len(), b.len(), t.len()), (3001, 3001, 3001));
    for rows in [&a, &b, &t] {
        assert!(rows[0].iter().any(|h| h == "config_hash"), "{:?}", rows[0]);
    }
    assert_eq!(manifest_stages(&out), ["gen"]);
}

#[test]
fn full_run_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&out, true));
    let o = splice(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    for f in [
        "step1.ckpt",
        "step2.ckpt",
        "latents.csv",
        "saturation.csv",
        "metrics.csv",
        "cca.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(
        manifest_stages(&out),
        ["gen", "step1", "step2", "baselines", "metrics", "export"]
    );
    let hash = ExperimentConfig::load(&cfg).unwrap().hash();
    for f in [
        "latents.csv",
        "saturation.csv",
        "metrics.csv",
        "cca.csv",
        "manifest.csv",
    ] {
        let rows = csv_rows(&out.join(f));
        let col = rows[0].iter().position(|h| h == "config_hash").expect(f);
        assert!(rows[1..].iter().all(|r| r[col] == hash), "{f}");
    }
    let metrics = csv_rows(&out.join("metrics.csv"));
    assert_eq!(metrics[0], ["metric", "group", "value", "config_hash", "seed"]);
    let has = |m: &str| metrics.iter().any(|r| r[0] == m);
    for m in [
        "reconstruction_r2",
        "msr_variance_ratio",
        "latent_cca_min",
        "saturation_dim",
        "higher_order_ratio_1",
    ] {
        assert!(has(m), "{m}");
    }
    let sat = csv_rows(&out.join("saturation.csv"));
    let methods: Vec<&str> = sat[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["rrr", "rrr", "rrr", "splice", "splice"]);
}

#[test]
fn identical_config_and_seed_give_identical_metrics() {
    let tmp = TempDir::new().unwrap();
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let cfg = write_config(tmp.path(), &format!("{name}.json"), &toy_config(&out, false));
        let o = splice(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
        texts.push(fs::read_to_string(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&out, false));
    let o = splice(&["gen-data", "--config", cfg.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.seed = 11;
    let rows = csv_rows(&out.join("manifest.csv"));
    assert_eq!(rows[1][2], c.hash());
}

#[test]
fn resume_at_step2_skips_step1() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&first, false));
    let o = splice(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let ckpt = first.join("step1.ckpt");

    let second = tmp.path().join("second");
    let o = splice(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--stage",
        "step2",
        "--resume",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    assert_eq!(
        manifest_stages(&second),
        ["gen", "step2", "baselines", "metrics", "export"]
    );
    assert!(!second.join("step1.ckpt").exists());
    assert!(second.join("step2.ckpt").exists());
}

#[test]
fn subcommands_run_standalone() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&out, false));
    let c = cfg.to_str().unwrap();

    let o = splice(&["rrr", "--config", c, "--dims", "1,2,4,8,16"]);
    assert_eq!(code(&o), EXIT_IO, "rrr before gen-data must name the data file");
    assert!(stderr(&o).contains("viewA.csv"), "{}", stderr(&o));

    assert_eq!(code(&splice(&["gen-data", "--config", c])), EXIT_OK);
    let o = splice(&["rrr", "--config", c, "--dims", "1,2,4,8,16"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let sat = csv_rows(&out.join("saturation.csv"));
    let rrr: Vec<&str> = sat[1..]
        .iter()
        .filter(|r| r[0] == "rrr")
        .map(|r| r[1].as_str())
        .collect();
    // Ranks are capped at min(n_a, n_b) = 6.
    assert_eq!(rrr, ["1", "2", "4", "6"]);

    let o = splice(&["eval", "--config", c]);
    assert_eq!(code(&o), EXIT_IO);
    assert!(stderr(&o).contains("step1.ckpt"), "{}", stderr(&o));

    assert_eq!(code(&splice(&["train", "--config", c])), EXIT_OK);
    assert_eq!(code(&splice(&["geometry", "--config", c])), EXIT_OK);
    assert_eq!(code(&splice(&["eval", "--config", c])), EXIT_OK);
    assert_eq!(code(&splice(&["export-latents", "--config", c])), EXIT_OK);
    let latents = csv_rows(&out.join("latents.csv"));
    assert_eq!(latents.len() - 1, 300);
    assert_eq!(
        latents[0],
        [
            "sample",
            "split",
            "z_A_0",
            "z_B_0",
            "s_AtoB_0",
            "s_BtoA_0",
            "config_hash"
        ]
    );

    let o = splice(&["rrr", "--config", c, "--dims", "1,x"]);
    assert_eq!(code(&o), EXIT_CONFIG);
    assert!(stderr(&o).contains("--dims"));
}

#[test]
fn locked_output_dir_is_refused() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".splice.lock"), "1\n").unwrap();
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&out, false));
    let o = splice(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_IO);
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
    // The lock of a finished run is released.
    fs::remove_file(out.join(".splice.lock")).unwrap();
    assert_eq!(code(&splice(&["gen-data", "--config", cfg.to_str().unwrap()])), EXIT_OK);
    assert!(!out.join(".splice.lock").exists());
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &toy_config(&tmp.path().join("out"), false));
    let o = Command::new(BIN)
        .args(["gen-data", "--config", cfg.to_str().unwrap()])
        .env("SPLICE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_CONFIG);
    let o = Command::new(BIN)
        .args(["gen-data", "--config", cfg.to_str().unwrap()])
        .env("SPLICE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_OK);
}

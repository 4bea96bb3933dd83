use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hprnnpb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hprnnpb"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hprnnpb(dir.path(), &["gradcheck", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("max relative gradient error"));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["train", "--bogus"],
        &["train", "--config", "missing.toml"],
        &["reproduce", "--experiment", "fig9"],
        &["gen-data", "--seed", "abc"],
    ] {
        let out = hprnnpb(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    fs::write(dir.path().join("bad.toml"), "[network]\nhidden = 3\n").unwrap();
    assert_eq!(code(&hprnnpb(dir.path(), &["train", "--config", "bad.toml"])), 2);
}

#[test]
fn data_and_persistence_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&hprnnpb(p, &["train", "--data", "nowhere", "--epochs", "1"])), 3);
    fs::create_dir(p.join("bad")).unwrap();
    fs::write(p.join("bad/x.csv"), "t_index,in0,shape,color,repeat\n0,zz,cosine,green,0\n").unwrap();
    assert_eq!(code(&hprnnpb(p, &["train", "--data", "bad", "--epochs", "1"])), 3);

    fs::create_dir(p.join("model")).unwrap();
    fs::write(p.join("model/state.json"), "{\"format\":\"hprnnpb-state\",\"vers").unwrap();
    assert_eq!(
        code(&hprnnpb(p, &["gen-data", "--out", "data", "--repeats", "1"])),
        0
    );
    assert_eq!(code(&hprnnpb(p, &["recognize", "--model", "model", "--data", "data"])), 5);
}

#[test]
fn divergence_has_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("hot.toml"),
        "[network]\neta_dorsal = 0.1\neta_ventral = 0.1\nweight_init_range = 3.0\nxi_plus = 1.5\n",
    )
    .unwrap();
    let out = hprnnpb(dir.path(), &["train", "--config", "hot.toml", "--epochs", "300", "--out", "m"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_recognize_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = hprnnpb(p, &["gen-data", "--out", "data", "--seed", "5", "--noise-sigma", "0.001"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_dir(p.join("data")).unwrap().count(), 20);
    let header = fs::read_to_string(p.join("data/cosine_yellow_0.csv")).unwrap();
    assert!(header.starts_with("t_index,in0,in1,in2,in3,shape,color,repeat\n"));

    let out = hprnnpb(p, &["train", "--data", "data", "--out", "model", "--epochs", "4", "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["state.json", "pb_table.csv", "cost_curve.csv", "summary.json", "MANIFEST.json"] {
        assert!(p.join("model").join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(p.join("model/cost_curve.csv")).unwrap().lines().count(), 5);

    let out = hprnnpb(
        p,
        &["recognize", "--model", "model", "--data", "data/square_green_2.csv", "--out", "rec", "--epochs", "6"],
    );
    assert_eq!(code(&out), 0);
    let trace = fs::read_to_string(p.join("rec/recognition_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 7);

    let out = hprnnpb(p, &["predict", "--model", "model", "--data", "data", "--out", "pred", "--epochs", "3"]);
    assert_eq!(code(&out), 0);
    let pred = fs::read_to_string(p.join("pred/prediction_trace.csv")).unwrap();
    assert_eq!(pred.lines().count(), 1 + 20 * 20);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("pred/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["per_unit_mse"].as_array().unwrap().len(), 20);
}

#[test]
fn reproduce_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut runs = Vec::new();
    for out_dir in ["a", "b"] {
        let out = hprnnpb(p, &["reproduce", "--experiment", "fig4", "--epochs", "3", "--seed", "11", "--out", out_dir]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(p.join(out_dir));
    }
    let table = fs::read_to_string(runs[0].join("pb_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 21);
    for f in ["pb_table.csv", "cost_curve.csv", "recognition_trace.csv", "prediction_trace.csv", "summary.json", "state.json"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
    let manifest = |dir: &Path| -> serde_json::Value {
        let mut m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap();
        m["config"]["output_dir"] = serde_json::Value::Null;
        m
    };
    let m = manifest(&runs[0]);
    assert_eq!(m, manifest(&runs[1]));
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["train"]["max_epochs"], 3);
}

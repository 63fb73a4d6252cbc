mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use monosoup::{read_archive, write_archive, Checkpoint, DType};
use serde_json::{json, Value};

fn monosoup(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monosoup"));
    for a in args {
        cmd.arg(a);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn save(dir: &Path, name: &str, ckpt: &Checkpoint) -> PathBuf {
    let path = dir.join(name);
    write_archive(ckpt, &path).unwrap();
    path
}

fn pair(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = common::rng(11);
    let layout = [("layers.0.weight", vec![12, 8]), ("layers.0.bias", vec![12]), ("layers.1.weight", vec![6, 12])];
    let pre = common::random_checkpoint(&mut rng, DType::F32, &layout, 1.0);
    let ft = common::perturb(&mut rng, &pre, 0.1);
    (save(dir, "pre.safetensors", &pre), save(dir, "ft.safetensors", &ft))
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn edit_writes_checkpoint_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, ft) = pair(dir.path());
    let (out, report) = (dir.path().join("e.safetensors"), dir.path().join("r.json"));
    let res = monosoup(&[&"edit", &"--pre", &pre, &"--ft", &ft, &"--rule", &"effective", &"--out", &out, &"--report", &report]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert!(res.stdout.is_empty());

    let edited = read_archive(&out).unwrap();
    let ft = read_archive(&ft).unwrap();
    assert_eq!(edited.len(), ft.len());
    for (name, t) in &ft {
        let e = edited.get(name).unwrap();
        assert_eq!((e.dtype(), e.shape()), (t.dtype(), t.shape()));
    }
    assert_eq!(edited.get("layers.0.bias"), ft.get("layers.0.bias"));

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["rank_rule"], "effective");
    assert_eq!(doc["layers"].as_array().unwrap().len(), 3);
    assert_eq!(doc["totals"]["edited"], 2);
    assert_eq!(doc["totals"]["pass_through_vector"], 1);
}

#[test]
fn stock_with_mismatched_shapes_names_the_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(12);
    let layout = [("a.weight", vec![4, 4]), ("b.weight", vec![3, 5])];
    let pre = common::random_checkpoint(&mut rng, DType::F32, &layout, 1.0);
    let ft1 = common::perturb(&mut rng, &pre, 0.1);
    let bad_layout = [("a.weight", vec![4, 4]), ("b.weight", vec![5, 3])];
    let ft2 = common::random_checkpoint(&mut rng, DType::F32, &bad_layout, 1.0);
    let out = dir.path().join("m.safetensors");
    let res = monosoup(&[
        &"merge", &"stock",
        &"--pre", &save(dir.path(), "p.st", &pre),
        &"--ft1", &save(dir.path(), "a.st", &ft1),
        &"--ft2", &save(dir.path(), "b.st", &ft2),
        &"--out", &out,
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(stderr(&res).contains("b.weight"), "{}", stderr(&res));
    assert!(!out.exists());
}

fn planar_manifest(dir: &Path) -> (PathBuf, PathBuf) {
    let (pre, candidates, ranking) = common::planar_pool();
    let pre_path = save(dir, "pre.safetensors", &pre);
    let entries: Vec<Value> = candidates
        .iter()
        .map(|(id, ckpt)| {
            save(dir, &format!("{id}.safetensors"), ckpt);
            json!({"id": id, "path": format!("{id}.safetensors"), "score": ranking[id]})
        })
        .collect();
    let manifest = dir.join("pool.json");
    std::fs::write(&manifest, serde_json::to_string(&entries).unwrap()).unwrap();
    (pre_path, manifest)
}

#[test]
fn sfgs_reproduces_the_planar_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, manifest) = planar_manifest(dir.path());
    let (out, report) = (dir.path().join("s.safetensors"), dir.path().join("s.json"));
    let res = monosoup(&[&"merge", &"sfgs", &"--pre", &pre, &"--pool", &manifest, &"--delta", &"0.5", &"--out", &out, &"--report", &report]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert_eq!(String::from_utf8_lossy(&res.stdout).trim(), "p,q,s");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["selected"], json!(["p", "q", "s"]));
    let accepted: Vec<bool> = doc["steps"].as_array().unwrap().iter().map(|s| s["accepted"].as_bool().unwrap()).collect();
    assert_eq!(accepted, [true, true, false, true]);

    let (_, candidates, _) = common::planar_pool();
    let soup = read_archive(&out).unwrap();
    let reference = common::reference_mean(&[&candidates[0].1, &candidates[1].1, &candidates[3].1]);
    assert!(common::max_diff_to(&soup, &reference) < 1e-12);
}

#[test]
fn negative_delta_is_accepted_and_selects_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, manifest) = planar_manifest(dir.path());
    let out = dir.path().join("s.safetensors");
    let res = monosoup(&[&"merge", &"sfgs", &"--pre", &pre, &"--pool", &manifest, &"--delta", &"-1", &"--out", &out]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert_eq!(String::from_utf8_lossy(&res.stdout).trim(), "p,q,r,s");
}

#[test]
fn config_file_supplies_flags_and_the_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, manifest) = planar_manifest(dir.path());
    let out = dir.path().join("s.safetensors");
    let config = dir.path().join("job.json");
    let job = json!({"command": "merge sfgs", "pre": pre, "pool": manifest, "delta": 0.99, "out": out});
    std::fs::write(&config, job.to_string()).unwrap();

    let res = monosoup(&[&"--config", &config]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert_eq!(String::from_utf8_lossy(&res.stdout).trim(), "p");

    let res = monosoup(&[&"--config", &config, &"merge", &"sfgs", &"--delta", &"0.5"]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert_eq!(String::from_utf8_lossy(&res.stdout).trim(), "p,q,s");
}

#[test]
fn greedy_with_scores_file() {
    let dir = tempfile::tempdir().unwrap();
    let (_, manifest) = planar_manifest(dir.path());
    let scores = dir.path().join("scores.json");
    let table = json!({"p": 0.5, "p,q": 0.6, "p,q,r": 0.55, "p,q,s": 0.6});
    std::fs::write(&scores, table.to_string()).unwrap();
    let out = dir.path().join("g.safetensors");
    let res = monosoup(&[&"merge", &"greedy", &"--pool", &manifest, &"--scores", &scores, &"--out", &out]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    assert_eq!(String::from_utf8_lossy(&res.stdout).trim(), "p,q,s");
}

#[test]
fn failed_runs_leave_no_outputs_behind() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, _) = pair(dir.path());
    // Fine-tuned model with a non-finite entry: the edit fails after loading.
    let mut ft = read_archive(&pre).unwrap();
    let t = ft.get("layers.1.weight").unwrap();
    let mut values = t.to_f64();
    values[3] = f64::NAN;
    let poisoned = t.with_values(&values).unwrap();
    ft.insert("layers.1.weight", poisoned);
    let ft = save(dir.path(), "nan.safetensors", &ft);

    let out = dir.path().join("e.safetensors");
    std::fs::write(&out, b"previous contents").unwrap();
    let before = files_in(dir.path());
    let report = dir.path().join("r.json");
    let res = monosoup(&[&"edit", &"--pre", &pre, &"--ft", &ft, &"--out", &out, &"--report", &report]);
    assert_eq!(res.status.code(), Some(4), "{}", stderr(&res));
    assert!(stderr(&res).contains("layers.1.weight"));
    assert_eq!(std::fs::read(&out).unwrap(), b"previous contents");
    assert_eq!(files_in(dir.path()), before);
}

#[test]
fn parameters_are_validated_before_anything_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, ft) = pair(dir.path());
    let out = dir.path().join("w.safetensors");
    let res = monosoup(&[&"merge", &"wiseft", &"--pre", &pre, &"--ft", &ft, &"--lambda", &"1.5", &"--out", &out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
    let res = monosoup(&[&"edit", &"--pre", &pre, &"--ft", &ft, &"--rule", &"energy:1.2", &"--out", &out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn inspect_and_sweep_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (pre, ft) = pair(dir.path());
    let spectrum = dir.path().join("spectrum.csv");
    let res = monosoup(&[&"inspect", &"spectrum", &"--pre", &pre, &"--ft", &ft, &"--energies", &"0.5,0.9", &"--out", &spectrum]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let text = std::fs::read_to_string(&spectrum).unwrap();
    // Header plus one row per matrix layer and threshold.
    assert_eq!(text.lines().count(), 1 + 2 * 2);

    let sweep_dir = dir.path().join("sweep");
    let res = monosoup(&[&"sweep", &"truncate", &"--pre", &pre, &"--ft", &ft, &"--energies", &"0.5,1", &"--out-dir", &sweep_dir]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let full = read_archive(sweep_dir.join("truncated_R1.safetensors")).unwrap();
    let ft = read_archive(&ft).unwrap();
    for (name, t) in &ft {
        let diff = common::max_abs_diff(&full.get(name).unwrap().to_f64(), &t.to_f64());
        assert!(diff < 1e-6, "{name}: {diff}");
    }
    assert!(sweep_dir.join("sweep.csv").exists());
}

#[test]
fn cka_prints_one_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(13);
    let x = common::random_checkpoint(&mut rng, DType::F64, &[("activations", vec![20, 4])], 1.0);
    let path = save(dir.path(), "x.safetensors", &x);
    let res = monosoup(&[&"cka", &"--x", &path, &"--y", &path]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let value: f64 = String::from_utf8_lossy(&res.stdout).trim().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-12);
}

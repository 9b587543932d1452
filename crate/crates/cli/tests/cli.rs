use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use thop_core::format::TensorFile;
use thop_core::graph::{adjacency, matrix_power, parse_edge_list, Graph};

fn thop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thop")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

const FIXTURE: &str = "0 1\n0 2\n1 3\n2 3\n3 4\n";

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sbm(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("sbm");
    let res = thop(&["gen-sbm", "--sizes", "30,30", "--p-in", "0.3", "--p-out", "0.05", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn fixture_simple_tensor_fiber() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", FIXTURE);
    let out = dir.path().join("t.thop");
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "3", "--semantics", "simple", "--out", s(&out)]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    assert!(text.contains("n 5") && text.contains("L 3") && text.contains("semantics simple"), "{text}");
    let t = TensorFile::read_from(std::fs::File::open(&out).unwrap()).unwrap().into_normalized().unwrap();
    assert_eq!(t.fiber(0, 4), &[0.5, 0.25, 0.25, 0.5, 0.5]);
}

#[test]
fn zero_length_tensor_has_n_nonzeros() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", FIXTURE);
    let out = dir.path().join("t.thop");
    for sem in ["simple", "walk"] {
        let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "0", "--semantics", sem, "--out", s(&out)]);
        assert_eq!(code(&res), 0);
        assert!(stdout(&res).contains("nonzeros 5"), "{}", stdout(&res));
    }
}

#[test]
fn malformed_graph_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("bad.txt", "0 1\n1 two\n"), ("loop.txt", "0 1\n2 2\n"), ("empty.txt", "# nothing\n")] {
        let graph = write(&dir, name, text);
        let out = dir.path().join(format!("{name}.thop"));
        let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "2", "--semantics", "walk", "--out", s(&out)]);
        assert_eq!(code(&res), 2, "{name}");
        assert!(!out.exists(), "{name}");
    }
    let res = thop(&["build-tensor", "--graph", "/nonexistent/g.txt", "--L", "2", "--semantics", "walk", "--out", "x"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn enumeration_cap_exits_3() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", FIXTURE);
    let out = dir.path().join("t.thop");
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "2", "--semantics", "simple", "--cap", "4", "--out", s(&out)]);
    assert_eq!(code(&res), 3);
    assert!(!out.exists());
    let res = thop(&["verify", "--graph", s(&graph), "--Lmax", "2", "--cap", "4"]);
    assert_eq!(code(&res), 3);
}

#[test]
fn walk_count_overflow_exits_3() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "k6.txt", &Graph::complete(6).to_edge_list());
    let out = dir.path().join("t.thop");
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "30", "--semantics", "walk", "--out", s(&out)]);
    assert_eq!(code(&res), 3);
}

#[test]
fn semantics_flag_is_required() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", FIXTURE);
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "2", "--out", "x"]);
    assert_eq!(code(&res), 2);
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", "2", "--semantics", "path", "--out", "x"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn verify_fixture_and_random_graphs() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", FIXTURE);
    let res = thop(&["verify", "--graph", s(&graph), "--Lmax", "4"]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    for name in ["cardinality", "sum_recovery_simple", "sum_recovery_walk"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.contains("cardinality: 100/100 passed"), "{text}");

    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed as usize % 7);
        let g = Graph::random_gnp(n, 0.4, &mut rng);
        let graph = write(&dir, &format!("r{seed}.txt"), &g.to_edge_list());
        let res = thop(&["verify", "--graph", s(&graph), "--Lmax", "4"]);
        assert_eq!(code(&res), 0, "seed {seed}: {}", stdout(&res));
    }
}

#[test]
fn verify_edgeless_graph() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.txt", "#n 4\n");
    let res = thop(&["verify", "--graph", s(&graph), "--Lmax", "3"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}

fn build(dir: &TempDir, graph_text: &str, length: &str, semantics: &str) -> PathBuf {
    let graph = write(dir, &format!("g{length}{semantics}.txt"), graph_text);
    let out = dir.path().join(format!("t{length}{semantics}.thop"));
    let res = thop(&["build-tensor", "--graph", s(&graph), "--L", length, "--semantics", semantics, "--out", s(&out)]);
    assert_eq!(code(&res), 0);
    out
}

#[test]
fn sum_reduction_recovers_adjacency_power() {
    let dir = TempDir::new().unwrap();
    let tensor = build(&dir, FIXTURE, "3", "walk");
    let out = dir.path().join("r.thop");
    let res = thop(&["reduce", "--tensor", s(&tensor), "--method", "sum", "--d", "1", "--out", s(&out)]);
    assert_eq!(code(&res), 0);
    let reduced = TensorFile::decode(&std::fs::read(&out).unwrap()).unwrap().into_reduced().unwrap();
    assert_eq!(reduced.depth(), 1);
    let a3 = matrix_power(&adjacency(&parse_edge_list(FIXTURE).unwrap()), 3).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert!((reduced.get(i, j, 0) - a3.get(i, j) as f64).abs() < 1e-9);
        }
    }
    let map: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.thop.map.json")).unwrap()).unwrap();
    assert_eq!(map["kind"], "sum");
}

#[test]
fn pca_full_depth_reconstruction_check() {
    let dir = TempDir::new().unwrap();
    let tensor = build(&dir, FIXTURE, "2", "walk");
    let out = dir.path().join("r.thop");
    let map_out = dir.path().join("map.json");
    let res = thop(&[
        "reduce", "--tensor", s(&tensor), "--method", "pca", "--d", "5", "--out", s(&out), "--map-out", s(&map_out),
        "--check-reconstruction",
    ]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    let err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("reconstruction_error "))
        .expect("error line")
        .parse()
        .unwrap();
    assert!(err < 1e-8, "{err}");
    let map: serde_json::Value = serde_json::from_slice(&std::fs::read(&map_out).unwrap()).unwrap();
    assert_eq!(map["kind"], "pca");
    assert_eq!(map["d"], 5);
}

#[test]
fn reduce_dimension_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let tensor = build(&dir, FIXTURE, "2", "walk");
    let out = dir.path().join("r.thop");
    for (method, d) in [("pca", "0"), ("pca", "6"), ("randproj", "0"), ("randproj", "9"), ("sum", "2")] {
        let res = thop(&["reduce", "--tensor", s(&tensor), "--method", method, "--d", d, "--out", s(&out)]);
        assert_eq!(code(&res), 4, "{method} d={d}");
        assert!(!out.exists());
    }
}

#[test]
fn reduce_bad_format_exits_2() {
    let dir = TempDir::new().unwrap();
    let junk = write(&dir, "junk.thop", "not a tensor");
    let out = dir.path().join("r.thop");
    let res = thop(&["reduce", "--tensor", s(&junk), "--method", "sum", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    let tensor = build(&dir, FIXTURE, "2", "walk");
    let mut bytes = std::fs::read(&tensor).unwrap();
    bytes.truncate(bytes.len() - 3);
    let cut = dir.path().join("cut.thop");
    std::fs::write(&cut, bytes).unwrap();
    let res = thop(&["reduce", "--tensor", s(&cut), "--method", "sum", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn randproj_depends_on_seed() {
    let dir = TempDir::new().unwrap();
    let tensor = build(&dir, FIXTURE, "2", "walk");
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let res = thop(&["reduce", "--tensor", s(&tensor), "--method", "randproj", "--d", "2", "--seed", seed, "--out", s(&out)]);
        assert_eq!(code(&res), 0);
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("7", "a.thop"), run("7", "b.thop"));
    assert_ne!(run("7", "a.thop"), run("8", "c.thop"));
}

#[test]
fn train_bundled_config() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let out = dir.path().join("run");
    let res = thop(&["train", "--dataset", s(&data), "--config", s(&manifest("configs/thop_pca.json")), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let acc: f64 = stdout(&res)
        .lines()
        .find_map(|l| l.strip_prefix("test_acc "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc >= 0.8, "{acc}");
    for f in ["run.json", "metrics.jsonl", "model.json", "table.txt", "timing.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 200);
    let first: serde_json::Value = serde_json::from_str(metrics.lines().next().unwrap()).unwrap();
    for key in ["epoch", "loss", "train_acc", "val_acc", "test_acc"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    let run: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert!(run.get("wall_clock_seconds").is_none());
    let timing: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("timing.json")).unwrap()).unwrap();
    assert!(timing["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sum_config_matches_mixhop_metrics() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let load = |cfg: &str, name: &str| {
        let out = dir.path().join(name);
        let res = thop(&["train", "--dataset", s(&data), "--config", s(&manifest(cfg)), "--out", s(&out)]);
        assert_eq!(code(&res), 0);
        std::fs::read_to_string(out.join("metrics.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .collect::<Vec<_>>()
    };
    let sum = load("configs/thop_sum.json", "sum");
    let mix = load("configs/mixhop.json", "mix");
    assert_eq!(sum.len(), mix.len());
    for (a, b) in sum.iter().zip(&mix) {
        for key in ["loss", "train_acc", "val_acc", "test_acc"] {
            let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
            assert!((x - y).abs() < 1e-7, "{key}: {x} vs {y}");
        }
    }
}

#[test]
fn train_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let cfg = manifest("configs/thop_pca.json");
    let out = dir.path().join("run");

    let bad_cfg = write(&dir, "bad.json", "{\"name\": \"x\", \"source\": \"adj_powers\", \"powers\": [1], \"bogus\": 1}");
    let res = thop(&["train", "--dataset", s(&data), "--config", s(&bad_cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    let res = thop(&["train", "--dataset", s(&data), "--config", s(&write(&dir, "trunc.json", "{")), "--out", s(&out)]);
    assert_eq!(code(&res), 2);

    std::fs::remove_file(data.join("labels.txt")).unwrap();
    let res = thop(&["train", "--dataset", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    assert!(!out.exists());
}

#[test]
fn train_resource_cap_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let cfg = write(
        &dir,
        "simple.json",
        r#"{"name": "t", "source": "reduced_tensor", "powers": [1], "semantics": "simple", "reduction": "sum", "enumeration_cap": 10, "epochs": 2}"#,
    );
    let res = thop(&["train", "--dataset", s(&data), "--config", s(&cfg), "--out", s(&dir.path().join("run"))]);
    assert_eq!(code(&res), 3);
}

#[test]
fn compare_bundled_config() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let out = dir.path().join("cmp");
    let res = thop(&["compare", "--dataset", s(&data), "--config", s(&manifest("configs/compare.json")), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("table.json")).unwrap()).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 20);
    let summary = table["summary"].as_array().unwrap();
    assert_eq!(summary.len(), 4);
    assert!(summary.iter().all(|r| r["runs"] == 5 && r["test_acc_std"].as_f64().is_some()));
    let models: Vec<&str> = summary.iter().map(|r| r["model"].as_str().unwrap()).collect();
    let mut sorted = models.clone();
    sorted.sort();
    assert_eq!(models, sorted);
    assert!(std::fs::read_to_string(out.join("table.txt")).unwrap().contains("test_mean"));
}

#[test]
fn compare_three_models_three_rows() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let cfg = write(
        &dir,
        "cmp.json",
        r#"{"models": [
            {"name": "b", "source": "adj_powers", "powers": [1], "epochs": 5},
            {"name": "a", "source": "adj_powers", "powers": [0, 1], "epochs": 5},
            {"name": "c", "source": "reduced_tensor", "powers": [1], "depth": 2, "epochs": 5}
        ]}"#,
    );
    let out = dir.path().join("cmp");
    let res = thop(&["compare", "--dataset", s(&data), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("table.json")).unwrap()).unwrap();
    let names: Vec<&str> = table["rows"].as_array().unwrap().iter().map(|r| r["model"].as_str().unwrap()).collect();
    assert_eq!(names, ["a", "b", "c"]);
}

#[test]
fn compare_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = sbm(&dir);
    let out = dir.path().join("cmp");
    let res = thop(&["compare", "--dataset", s(&data), "--config", s(&write(&dir, "c.json", "[1, 2]")), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    let res = thop(&["compare", "--dataset", s(&dir.path().join("missing")), "--config", s(&manifest("configs/compare.json")), "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

#[test]
fn unknown_flags_rejected_and_help_lists_flags() {
    let res = thop(&["verify", "--graph", "x", "--Lmax", "2", "--verbose"]);
    assert_eq!(code(&res), 2);
    let res = thop(&["reduce", "--help"]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    for flag in ["--tensor", "--method", "--d", "--seed", "--out", "--map-out", "--check-reconstruction"] {
        assert!(text.contains(flag), "{flag}");
    }
    let res = thop(&["build-tensor", "--help"]);
    let text = stdout(&res);
    for flag in ["--graph", "--L", "--semantics", "--out", "--cap"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn gen_sbm_rejects_bad_probabilities() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let res = thop(&["gen-sbm", "--p-in", "0.1", "--p-out", "0.3", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
    let res = thop(&["gen-sbm", "--sizes", "30", "--out", s(&out)]);
    assert_eq!(code(&res), 2);
}

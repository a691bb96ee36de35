#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const ONTOLOGIES: [(&str, [&str; 8]); 3] = [
    (
        "alpha",
        ["catalyst", "reactor", "methanation", "nickel", "pressure", "hydrogen", "oxide", "kinetics"],
    ),
    (
        "beta",
        ["protein", "enzyme", "cell", "membrane", "gene", "receptor", "tissue", "metabolite"],
    ),
    (
        "gamma",
        ["spectrometer", "chromatography", "detector", "column", "sample", "calibration", "peak", "solvent"],
    ),
];

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ontorel")
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).output().expect("spawn ontorel")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "ontorel {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn owl(ontology: &str, words: &[&str], classes: usize) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\"?>\n<rdf:RDF xmlns:owl=\"http://www.w3.org/2002/07/owl#\"\n  \
         xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n  \
         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\">\n",
    );
    for c in 0..classes {
        let w = |k: usize| words[(c * 3 + k * 5) % words.len()];
        s.push_str(&format!(
            "  <owl:Class rdf:about=\"http://example.org/{ontology}#C{c}\">\n    \
             <rdfs:label>{} {} {ontology}{c}</rdfs:label>\n    \
             <rdfs:comment>A {} of {} with {} and {} in the {} setting.</rdfs:comment>\n  </owl:Class>\n",
            w(0),
            w(1),
            w(2),
            w(3),
            w(4),
            w(5),
            w(6)
        ));
    }
    s.push_str("</rdf:RDF>\n");
    s
}

fn document(seed: usize) -> String {
    let mut s = String::from("# Introduction\n\n");
    for p in 0..6 {
        let (_, words) = ONTOLOGIES[(p + seed) % ONTOLOGIES.len()];
        let sentence: Vec<&str> = (0..18).map(|i| words[(i * 7 + p + seed) % words.len()]).collect();
        s.push_str(&format!("The study of {} was carried out carefully.\n\n", sentence.join(" ")));
    }
    s.push_str("References\n\nSmith, J. A catalyst reactor methanation nickel pressure hydrogen oxide kinetics study, 2020.\n");
    s
}

/// Writes the synthetic ontologies, tag sets, corpus, grid and config into
/// `dir`.
pub fn write_inputs(dir: &Path) {
    fs::create_dir_all(dir.join("owl")).unwrap();
    fs::create_dir_all(dir.join("docs")).unwrap();
    let mut tags = serde_json::Map::new();
    for (name, words) in ONTOLOGIES {
        fs::write(dir.join(format!("owl/{name}.owl")), owl(name, &words, 24)).unwrap();
        tags.insert(name.into(), serde_json::json!(["rdfs:label", "rdfs:comment"]));
    }
    fs::write(dir.join("tags.json"), serde_json::to_string_pretty(&tags).unwrap()).unwrap();
    for d in 0..2 {
        fs::write(dir.join(format!("docs/paper{d}.txt")), document(d)).unwrap();
    }
    let grid = serde_json::json!([
        {"kind": "knn", "axes": [{"name": "n_neighbors", "values": [1, 3]}, {"name": "weights", "values": ["uniform", "distance"]}]},
        {"kind": "svm", "axes": [{"name": "c", "values": [1.0, 10.0]}, {"name": "kernel", "values": ["linear"]}]},
        {"kind": "random_forest", "axes": [{"name": "n_estimators", "values": [5]}, {"name": "max_depth", "values": [5]}]},
        {"kind": "gaussian_process", "axes": [{"name": "kernel", "values": ["rbf"]}]},
        {"kind": "mlp", "axes": [{"name": "hidden_size", "values": [8]}, {"name": "max_epochs", "values": [50]}]}
    ]);
    fs::write(dir.join("grid.json"), serde_json::to_string_pretty(&grid).unwrap()).unwrap();
    let config = serde_json::json!({
        "split": {"n_test_partitions": 4},
        "folds": 3,
        "seeds": {"default": 7}
    });
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config).unwrap()).unwrap();
}

pub const MODELS: [&str; 5] = [
    "models/random_forest.model",
    "models/svm.model",
    "models/gaussian_process.model",
    "models/knn.model",
    "models/mlp.model",
];

/// Runs every stage with relative paths inside `dir` and returns the
/// artifacts written, relative to `dir`.
pub fn run_pipeline(dir: &Path) -> Vec<PathBuf> {
    write_inputs(dir);
    let c = ["--config", "config.json"];
    let with = |args: &[&str]| -> Vec<String> { c.iter().chain(args).map(|s| s.to_string()).collect() };
    let go = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(dir, &refs)
    };
    go(with(&[
        "extract-owl",
        "--tags",
        "tags.json",
        "alpha=owl/alpha.owl",
        "beta=owl/beta.owl",
        "gamma=owl/gamma.owl",
        "--out",
        "annotations.ndjson",
    ]));
    go(with(&["ingest-text", "docs/paper0.txt", "docs/paper1.txt", "--out", "paragraphs.ndjson"]));
    go(with(&["embed", "annotations.ndjson", "--dim", "64", "--out", "vectors.ovs"]));
    go(with(&["embed", "paragraphs.ndjson", "--dim", "64", "--out", "paragraph-vectors.ovs"]));
    go(with(&["split", "--annotations", "annotations.ndjson", "--vectors", "vectors.ovs", "--out", "split"]));
    go(with(&[
        "tune",
        "--data",
        "split/train.ndjson",
        "--vectors",
        "vectors.ovs",
        "--grid",
        "grid.json",
        "--out",
        "cv.ndjson",
    ]));
    go(with(&[
        "train",
        "--data",
        "split/train.ndjson",
        "--vectors",
        "vectors.ovs",
        "--params",
        "cv.ndjson",
        "--out",
        "models",
    ]));
    let partitions: Vec<String> = (1..=4).map(|i| format!("split/partition-{i:02}.ndjson")).collect();
    let mut evaluate = vec!["evaluate", "--vectors", "vectors.ovs", "--out", "metrics.ndjson", "--models"];
    evaluate.extend(MODELS);
    evaluate.push("--partitions");
    evaluate.extend(partitions.iter().map(String::as_str));
    go(with(&evaluate));
    go(with(&["compare", "metrics.ndjson", "--out", "comparison.ndjson"]));
    let mut predict = vec![
        "predict",
        "--vectors",
        "paragraph-vectors.ovs",
        "--paragraphs",
        "paragraphs.ndjson",
        "--out",
        "predictions.ndjson",
        "--models",
    ];
    predict.extend(MODELS);
    go(with(&predict));
    go(with(&["report", "predictions.ndjson", "--charts", "charts", "--out", "report.ndjson"]));

    let mut artifacts = Vec::new();
    collect(dir, dir, &mut artifacts);
    artifacts.sort();
    artifacts
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

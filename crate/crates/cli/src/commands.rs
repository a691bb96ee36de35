use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ontorel::artifact::{
    self, read_header, read_model, read_records, read_store, write_model, write_records, write_store, ArtifactHeader,
    ArtifactKind, DigestStatus,
};
use ontorel::classifiers::{fit, ClassifierKind, ClassifierParams, ClassifierSpec, TrainedModel};
use ontorel::corpus::{filter_paragraphs, split_paragraphs, Paragraph};
use ontorel::dataset::{partition_disjoint, stratified_split, undersample, LabelRow, LabeledDataset, SplitSpec, UndersampleCap};
use ontorel::embed::{Backend, BackendDescriptor, VectorStore};
use ontorel::evaluation::{evaluate, render_summary, score_matrix, summarize, Measure, MetricRow, Summary};
use ontorel::owl::{count_classes, extract_annotations, AnnotationRecord, ExtractOptions, TagSetConfig};
use ontorel::report::{aggregate, classify_corpus, AggregateBasis, AggregateReport, PredictionRecord};
use ontorel::selection::{grid_search, CvResult, Scoring, DEFAULT_FOLDS};
use ontorel::stats::{compare, Comparison, DEFAULT_ALPHA};
use ontorel::{EmbeddedSample, Error, OntologyId, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Context;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphRecord {
    pub sample_id: String,
    #[serde(flatten)]
    pub paragraph: Paragraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub measure: Measure,
    pub classifiers: Vec<String>,
    /// Partitions in rows, classifiers in columns.
    pub scores: Vec<Vec<f64>>,
    pub summaries: Vec<Summary>,
    pub comparison: Comparison,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

fn parse_kinds(text: &str) -> Result<Vec<ClassifierKind>> {
    if text == "all" {
        return Ok(ClassifierKind::ALL.to_vec());
    }
    text.split(',').map(|k| k.trim().parse()).collect()
}

/// `ONTOLOGY=PATH` pairs, in argument order.
pub fn extract_owl(ctx: &Context, inputs: &[String], tags: Option<&Path>, min_length: Option<usize>) -> Result<()> {
    let tag_config = match tags {
        Some(path) => TagSetConfig::from_json(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)?,
        None => ctx.config.tag_sets.clone().unwrap_or_else(TagSetConfig::builtin),
    };
    let options = ExtractOptions {
        min_length: min_length
            .or(ctx.config.annotation_min_length)
            .unwrap_or(ExtractOptions::default().min_length),
    };
    let mut jobs = Vec::new();
    for input in inputs {
        let (name, path) = input
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("expected ONTOLOGY=PATH, got {input:?}")))?;
        let ontology = OntologyId::new(name)?;
        let tag_set = tag_config
            .get(&ontology)
            .ok_or_else(|| Error::InvalidInput(format!("no tag set for ontology {ontology}")))?;
        jobs.push((tag_set, PathBuf::from(path)));
    }
    let out = ctx.out("annotations.ndjson")?;
    let mut records: Vec<AnnotationRecord> = Vec::new();
    for (tag_set, path) in &jobs {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        records.extend(extract_annotations(BufReader::new(file), tag_set, &options)?);
    }
    let used: serde_json::Map<String, serde_json::Value> = jobs
        .iter()
        .map(|(t, _)| (t.ontology.to_string(), json!(t.tags)))
        .collect();
    let header = ArtifactHeader::new(ArtifactKind::Annotations, "extract-owl")
        .inputs(jobs.iter().map(|(_, p)| p.as_path()))?
        .config(json!({"tag_sets": used, "min_length": options.min_length}));
    write_records(&out, header, &records)?;
    let classes = count_classes(&records);
    for (tag_set, _) in &jobs {
        let n = records.iter().filter(|r| r.ontology == tag_set.ontology).count();
        println!(
            "{}\trecords={n}\tclasses={}",
            tag_set.ontology,
            classes.get(&tag_set.ontology).copied().unwrap_or(0)
        );
    }
    Ok(())
}

pub fn ingest_text(ctx: &Context, inputs: &[PathBuf], min_length: Option<usize>, keep_headings: bool) -> Result<()> {
    let mut policy = ctx.config.filter_policy();
    if let Some(n) = min_length {
        policy.min_length = n;
    }
    if keep_headings {
        policy.drop_headings = false;
    }
    policy.validate()?;
    let out = ctx.out("paragraphs.ndjson")?;
    let mut doc_ids = HashSet::new();
    let mut records = Vec::new();
    let mut total = 0;
    for path in inputs {
        let doc_id = file_stem(path);
        if !doc_ids.insert(doc_id.clone()) {
            return Err(Error::InvalidInput(format!("duplicate document id {doc_id}")));
        }
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let paragraphs = split_paragraphs(&text, &doc_id);
        total += paragraphs.len();
        records.extend(filter_paragraphs(&paragraphs, &policy).into_iter().map(|p| ParagraphRecord {
            sample_id: p.sample_id(),
            paragraph: p,
        }));
    }
    let header = ArtifactHeader::new(ArtifactKind::Paragraphs, "ingest-text")
        .inputs(inputs.iter().map(PathBuf::as_path))?
        .config(serde_json::to_value(&policy)?);
    write_records(&out, header, &records)?;
    println!("documents={}\tparagraphs={total}\tkept={}", inputs.len(), records.len());
    Ok(())
}

/// `(sample_id, text)` pairs of an annotation or paragraph artifact, first
/// occurrence of each id.
fn texts_of(path: &Path) -> Result<(ArtifactKind, Vec<(String, String)>)> {
    let kind = read_header(path)?.artifact;
    let pairs: Vec<(String, String)> = match kind {
        ArtifactKind::Annotations => read_records::<AnnotationRecord>(path, kind)?
            .1
            .into_iter()
            .map(|r| (r.record_id, r.text))
            .collect(),
        ArtifactKind::Paragraphs => read_records::<ParagraphRecord>(path, kind)?
            .1
            .into_iter()
            .map(|r| (r.sample_id, r.paragraph.text))
            .collect(),
        other => {
            return Err(Error::Format(format!(
                "{}: cannot embed a {} artifact",
                path.display(),
                other.as_str()
            )))
        }
    };
    let mut seen = HashSet::new();
    Ok((kind, pairs.into_iter().filter(|(id, _)| seen.insert(id.clone())).collect()))
}

pub fn embed(ctx: &Context, input: &Path) -> Result<()> {
    let descriptor = ctx.backend()?;
    let out = ctx.out("vectors.ovs")?;
    let (kind, pairs) = texts_of(input)?;
    let backend = descriptor.open()?;
    if let Some(d) = ctx.dim {
        if d != backend.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: backend.dim(),
                context: Some(format!("backend {descriptor}")),
            });
        }
    }
    let vectors = backend.embed_samples(&pairs)?;
    let mut store = VectorStore::new(backend.dim())?;
    for ((id, _), v) in pairs.iter().zip(&vectors) {
        store.insert(id, v.as_slice())?;
    }
    let mut header = ArtifactHeader::new(ArtifactKind::Vectors, "embed")
        .input(input)?
        .config(json!({"backend": descriptor.to_string(), "source": kind.as_str(), "dim": backend.dim()}));
    if let (BackendDescriptor::Store { path }, Backend::Store(_)) = (&descriptor, &backend) {
        header = header.input(Path::new(path))?;
    }
    write_store(&out, header, &mut store)?;
    println!("vectors={}\tdim={}", store.len(), store.dim());
    Ok(())
}

fn vocab_of(header: &ArtifactHeader) -> Option<Vec<OntologyId>> {
    serde_json::from_value(header.config.get("label_vocab")?.clone()).ok()
}

/// Labeled samples from a dataset or annotation artifact joined with a
/// vector store.
fn load_dataset(path: &Path, store: &VectorStore) -> Result<LabeledDataset> {
    let header = read_header(path)?;
    let rows: Vec<LabelRow> = match header.artifact {
        ArtifactKind::Dataset => read_records(path, ArtifactKind::Dataset)?.1,
        ArtifactKind::Annotations => {
            let mut seen = HashSet::new();
            read_records::<AnnotationRecord>(path, ArtifactKind::Annotations)?
                .1
                .into_iter()
                .filter(|r| seen.insert(r.record_id.clone()))
                .map(|r| LabelRow {
                    sample_id: r.record_id,
                    label: r.ontology,
                })
                .collect()
        }
        other => {
            return Err(Error::Format(format!(
                "{}: expected a dataset or annotations artifact, found {}",
                path.display(),
                other.as_str()
            )))
        }
    };
    let vocab = vocab_of(&header).unwrap_or_else(|| {
        let set: BTreeSet<OntologyId> = rows.iter().map(|r| r.label.clone()).collect();
        set.into_iter().collect()
    });
    LabeledDataset::from_rows(&rows, vocab, store)
}

fn dataset_header(role: &str, data: &LabeledDataset, config: serde_json::Value, inputs: &[&Path]) -> Result<ArtifactHeader> {
    let mut config = config;
    config["role"] = json!(role);
    config["label_vocab"] = json!(data.label_vocab());
    Ok(ArtifactHeader::new(ArtifactKind::Dataset, "split")
        .inputs(inputs.iter().copied())?
        .config(config))
}

pub fn split(
    ctx: &Context,
    annotations: &Path,
    vectors: &Path,
    train_fraction: Option<f64>,
    partitions: Option<usize>,
    cap: Option<&str>,
) -> Result<()> {
    let defaults = SplitSpec::default();
    let spec = SplitSpec {
        train_fraction: train_fraction
            .or(ctx.config.split.train_fraction)
            .unwrap_or(defaults.train_fraction),
        n_test_partitions: partitions
            .or(ctx.config.split.n_test_partitions)
            .unwrap_or(defaults.n_test_partitions),
        seed: ctx.seed("split"),
    };
    spec.validate()?;
    let cap_text = cap
        .map(str::to_string)
        .or_else(|| ctx.config.split.undersample.clone())
        .unwrap_or_else(|| "min-class".to_string());
    let cap: Option<UndersampleCap> = if cap_text == "none" { None } else { Some(cap_text.parse()?) };
    let out = ctx.out("split")?;
    let (_, store) = read_store(vectors)?;
    let data = load_dataset(annotations, &store)?;
    let (train, test) = stratified_split(&data, &spec)?;
    let train = match cap {
        Some(cap) => undersample(&train, cap, spec.seed)?,
        None => train,
    };
    let parts = partition_disjoint(&test, spec.n_test_partitions, spec.seed)?;
    let config = json!({
        "train_fraction": spec.train_fraction,
        "n_test_partitions": spec.n_test_partitions,
        "undersample": cap_text,
    });
    let inputs = [annotations, vectors];
    let write = |name: String, role: &str, d: &LabeledDataset, extra: Option<usize>| -> Result<()> {
        let mut cfg = config.clone();
        if let Some(i) = extra {
            cfg["partition"] = json!(i);
        }
        let header = dataset_header(role, d, cfg, &inputs)?.seed("split", spec.seed);
        write_records(&out.join(name), header, &d.label_rows())
    };
    write("train.ndjson".into(), "train", &train, None)?;
    write("test.ndjson".into(), "test", &test, None)?;
    for (i, p) in parts.iter().enumerate() {
        write(format!("partition-{:02}.ndjson", i + 1), "partition", p, Some(i + 1))?;
    }
    let counts = |d: &LabeledDataset| {
        d.class_counts().iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    };
    println!("train={}\tclass_counts={}", train.len(), counts(&train));
    println!("test={}\tpartitions={}", test.len(), parts.len());
    Ok(())
}

fn parse_scoring(text: &str) -> Result<Scoring> {
    serde_json::from_value(json!(text)).map_err(|_| Error::param("scoring", format!("unknown scoring {text:?}")))
}

pub fn tune(
    ctx: &Context,
    data_path: &Path,
    vectors: &Path,
    classifier: &str,
    grid: Option<&Path>,
    folds: Option<usize>,
    scoring: Option<&str>,
) -> Result<()> {
    let kinds = parse_kinds(classifier)?;
    let folds = folds.or(ctx.config.folds).unwrap_or(DEFAULT_FOLDS);
    let scoring = match scoring {
        Some(s) => parse_scoring(s)?,
        None => ctx.config.scoring.unwrap_or_default(),
    };
    let seed = ctx.seed("tune");
    let file_grids: Vec<ontorel::selection::GridSpec> = match grid {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            if value.is_array() {
                serde_json::from_value(value)?
            } else {
                vec![serde_json::from_value(value)?]
            }
        }
        None => Vec::new(),
    };
    let out = ctx.out("cv.ndjson")?;
    let (_, store) = read_store(vectors)?;
    let data = load_dataset(data_path, &store)?;
    let mut results: Vec<CvResult> = Vec::new();
    for kind in kinds {
        let grid = file_grids
            .iter()
            .find(|g| g.kind == kind)
            .cloned()
            .unwrap_or_else(|| ctx.config.grid(kind));
        results.push(grid_search(&grid, &data, folds, seed, scoring)?);
    }
    let mut inputs = vec![data_path, vectors];
    if let Some(g) = grid {
        inputs.push(g);
    }
    let header = ArtifactHeader::new(ArtifactKind::CvResult, "tune")
        .seed("tune", seed)
        .inputs(inputs)?
        .config(json!({"folds": folds, "scoring": scoring}));
    write_records(&out, header, &results)?;
    for r in &results {
        let best = r.best_point();
        println!(
            "{}\tpoints={}\tskipped={}\tbest_mean={:.6}\tbest={}",
            r.kind,
            r.points.len(),
            r.n_skipped(),
            best.mean_score.unwrap_or(f64::NAN),
            serde_json::to_string(&best.point)?
        );
    }
    Ok(())
}

pub fn train(
    ctx: &Context,
    data_path: &Path,
    vectors: &Path,
    params: Option<&Path>,
    classifier: Option<&str>,
) -> Result<()> {
    let seed = ctx.seed("train");
    let specs: Vec<ClassifierSpec> = match params {
        Some(path) => {
            let (_, results) = read_records::<CvResult>(path, ArtifactKind::CvResult)?;
            let wanted = classifier.map(parse_kinds).transpose()?;
            results
                .into_iter()
                .filter(|r| wanted.as_ref().is_none_or(|w| w.contains(&r.kind)))
                .map(|r| r.best)
                .collect()
        }
        None => parse_kinds(classifier.unwrap_or("all"))?
            .into_iter()
            .map(|k| ClassifierSpec::new(ClassifierParams::selected(k), seed))
            .collect(),
    };
    if specs.is_empty() {
        return Err(Error::InvalidInput("no classifier selected for training".into()));
    }
    let out = ctx.out("models")?;
    let (_, store) = read_store(vectors)?;
    let data = load_dataset(data_path, &store)?;
    let mut inputs = vec![data_path, vectors];
    if let Some(p) = params {
        inputs.push(p);
    }
    for spec in &specs {
        let model = fit(spec, &data)?;
        let path = out.join(format!("{}.model", spec.kind()));
        let header = ArtifactHeader::new(ArtifactKind::Model, "train")
            .seed("train", spec.seed)
            .inputs(inputs.iter().copied())?
            .config(serde_json::to_value(spec)?);
        write_model(&path, header, &model)?;
        println!("{}\tconverged={}\t{}", spec.kind(), model.converged, path.display());
    }
    Ok(())
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<(String, TrainedModel)>> {
    let mut names = HashSet::new();
    paths
        .iter()
        .map(|p| {
            let (_, model) = read_model(p)?;
            let name = file_stem(p);
            if !names.insert(name.clone()) {
                return Err(Error::InvalidInput(format!("two models named {name}")));
            }
            Ok((name, model))
        })
        .collect()
}

pub fn evaluate_cmd(ctx: &Context, models: &[PathBuf], vectors: &Path, partitions: &[PathBuf]) -> Result<()> {
    let out = ctx.out("metrics.ndjson")?;
    let loaded = load_models(models)?;
    let (_, store) = read_store(vectors)?;
    let parts: Vec<LabeledDataset> = partitions
        .iter()
        .map(|p| load_dataset(p, &store))
        .collect::<Result<_>>()?;
    let rows = evaluate(&loaded, &parts)?;
    let mut inputs: Vec<&Path> = models.iter().map(PathBuf::as_path).collect();
    inputs.push(vectors);
    inputs.extend(partitions.iter().map(PathBuf::as_path));
    let header = ArtifactHeader::new(ArtifactKind::Metrics, "evaluate").inputs(inputs)?;
    write_records(&out, header, &rows)?;
    print!("{}", render_summary(&summarize(&rows)));
    Ok(())
}

pub fn compare_cmd(ctx: &Context, metrics: &Path, measure: &str, alpha: Option<f64>) -> Result<()> {
    let measure: Measure = measure.parse()?;
    let alpha = alpha.or(ctx.config.alpha).unwrap_or(DEFAULT_ALPHA);
    let out = ctx.out("comparison.ndjson")?;
    let (_, rows) = read_records::<MetricRow>(metrics, ArtifactKind::Metrics)?;
    let (classifiers, scores) = score_matrix(&rows, measure)?;
    let comparison = compare(&scores, &classifiers, alpha)?;
    let report = ComparisonReport {
        measure,
        summaries: summarize(&rows),
        classifiers,
        scores,
        comparison,
    };
    let header = ArtifactHeader::new(ArtifactKind::Comparison, "compare")
        .input(metrics)?
        .config(json!({"measure": measure, "alpha": alpha}));
    write_records(&out, header, std::slice::from_ref(&report))?;
    let f = &report.comparison.friedman;
    println!(
        "friedman\tstatistic={:.6}\tp={:.6e}\tn={}\tmeasure={}",
        f.statistic,
        f.p_value,
        f.n,
        measure.as_str()
    );
    print!("{}", report.comparison.win_matrix.render());
    print!("{}", report.comparison.win_matrix.render_p_values());
    Ok(())
}

pub fn predict(ctx: &Context, models: &[PathBuf], vectors: &Path, paragraphs: &Path) -> Result<()> {
    let out = ctx.out("predictions.ndjson")?;
    let loaded = load_models(models)?;
    let (_, store) = read_store(vectors)?;
    let (_, records) = read_records::<ParagraphRecord>(paragraphs, ArtifactKind::Paragraphs)?;
    let mut seen = HashSet::new();
    let records: Vec<ParagraphRecord> = records.into_iter().filter(|r| seen.insert(r.sample_id.clone())).collect();
    let ids: Vec<String> = records.iter().map(|r| r.sample_id.clone()).collect();
    let vectors_of = ontorel::embed::vector_store_lookup(&ids, &store)?;
    let samples: Vec<EmbeddedSample> = ids
        .iter()
        .zip(vectors_of)
        .map(|(id, v)| EmbeddedSample::paragraph(id.clone(), v))
        .collect();
    let doc_ids: Vec<String> = records.iter().map(|r| r.paragraph.doc_id.clone()).collect();
    let predictions: Vec<PredictionRecord> = classify_corpus(&loaded, &samples, &doc_ids)?.into_iter().flatten().collect();
    let vocab = loaded.first().map(|(_, m)| m.label_vocab.clone()).unwrap_or_default();
    let mut inputs: Vec<&Path> = models.iter().map(PathBuf::as_path).collect();
    inputs.push(vectors);
    inputs.push(paragraphs);
    let header = ArtifactHeader::new(ArtifactKind::Predictions, "predict")
        .inputs(inputs)?
        .config(json!({"label_vocab": vocab}));
    write_records(&out, header, &predictions)?;
    println!("models={}\tparagraphs={}\trecords={}", loaded.len(), samples.len(), predictions.len());
    Ok(())
}

pub fn report(ctx: &Context, predictions: &Path, basis: &str, charts: Option<&Path>) -> Result<()> {
    let basis: AggregateBasis = serde_json::from_value(json!(basis.replace('-', "_")))
        .map_err(|_| Error::param("basis", format!("unknown basis {basis:?}")))?;
    let out = ctx.out("report.ndjson")?;
    let (header, records) = read_records::<PredictionRecord>(predictions, ArtifactKind::Predictions)?;
    let vocab = vocab_of(&header).unwrap_or_default();
    let report: AggregateReport = aggregate(&records, &vocab, basis);
    let out_header = ArtifactHeader::new(ArtifactKind::Report, "report")
        .input(predictions)?
        .config(json!({"basis": basis}));
    write_records(&out, out_header, std::slice::from_ref(&report))?;
    for measure in ontorel::report::Measure::ALL {
        print!("{}", report.render(measure));
    }
    if let Some(dir) = charts {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for measure in ontorel::report::Measure::ALL {
            let path = dir.join(format!("{}.csv", measure.as_str()));
            fs::write(&path, report.bar_chart_csv(measure)).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

pub fn verify(paths: &[PathBuf]) -> Result<()> {
    let mut failed = 0;
    for path in paths {
        let report = artifact::verify(path)?;
        let mut problems: Vec<String> = Vec::new();
        if report.body != DigestStatus::Ok {
            problems.push("body digest mismatch".into());
        }
        for (input, status) in &report.inputs {
            match status {
                DigestStatus::Ok => {}
                DigestStatus::Mismatch => problems.push(format!("input {input} changed")),
                DigestStatus::Missing => problems.push(format!("input {input} missing")),
            }
        }
        if problems.is_empty() {
            println!("ok\t{}\t{}", report.artifact.as_str(), path.display());
        } else {
            failed += 1;
            println!("fail\t{}\t{}\t{}", report.artifact.as_str(), path.display(), problems.join("; "));
        }
    }
    if failed > 0 {
        return Err(Error::Format(format!("{failed} of {} artifacts failed verification", paths.len())));
    }
    Ok(())
}

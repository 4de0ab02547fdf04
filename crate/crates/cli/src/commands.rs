use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use urban_absa::corpus::{
    apc_to_atepc, parse_apc, parse_atepc, serialize_apc, serialize_atepc, ApcRecord, AtepcSentence, CorpusError,
    Polarity,
};
use urban_absa::eval::{evaluate, render_details, render_table, EchoOracle, EvalError, MetricReport};
use urban_absa::geo::{
    aggregate_frequency, bin_spatial, export_geojson, frequency_csv, frequency_svg, ExportMode, FrequencyTable,
    GeoAspectRecord, GeoError,
};
use urban_absa::ingest::{
    collect, FixtureBackend, IngestError, LatLon, LiveBackend, LiveConfig, PlacesBackend, QueryGrid, Review,
};
use urban_absa::lcf::{predict, AbsaModel, AspectModel, AspectPrediction, ModelConfig, ModelError};
use urban_absa::synth;
use urban_absa::train::{train_with, TrainConfig, TrainError};

use crate::cli::{
    AnalyzeArgs, ConvertArgs, EvalArgs, Format, InferArgs, IngestArgs, PlotArgs, SynthArgs, SynthKind, TrainArgs,
};
use crate::config::ConfigError;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_MISSING_CHECKPOINT: u8 = 5;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.json";
pub const TRAIN_SPLIT_FILE: &str = "train.atepc";
pub const TEST_SPLIT_FILE: &str = "test.atepc";
pub const FREQUENCY_FILE: &str = "frequency.csv";
pub const POINTS_FILE: &str = "aspects.geojson";
pub const CELLS_FILE: &str = "cells.geojson";

/// A line of `infer` output.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReviewPrediction {
    pub text: String,
    pub aspects: Vec<AspectPrediction>,
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::MissingCheckpoint(_) => EXIT_MISSING_CHECKPOINT,
        ModelError::Config(_) | ModelError::TooLong { .. } => EXIT_CONFIG,
        ModelError::Checkpoint(_) => EXIT_PARSE,
        _ => EXIT_FAILURE,
    }
}

/// Stable exit code for the first recognised error in the chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            return match e {
                IngestError::InvalidGrid(_) | IngestError::MissingApiKey(_) => EXIT_CONFIG,
                IngestError::Parse { .. } => EXIT_PARSE,
                IngestError::Io(_) => EXIT_FAILURE,
                _ => EXIT_BACKEND,
            };
        }
        if cause.is::<CorpusError>() || cause.is::<GeoError>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return EXIT_PARSE;
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return model_code(e);
        }
        if let Some(e) = cause.downcast_ref::<TrainError>() {
            return match e {
                TrainError::Config(_) | TrainError::EmptyCorpus => EXIT_CONFIG,
                TrainError::Model(m) => model_code(m),
                _ => EXIT_FAILURE,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Model(m) => model_code(m),
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_FAILURE
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn detect_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("atepc") => Format::Atepc,
        _ => Format::Apc,
    })
}

/// Reads an annotated file in either format as per-aspect ATEPC copies.
fn read_annotated(path: &Path, format: Option<Format>) -> Result<Vec<AtepcSentence>> {
    let text = read_text(path)?;
    let parsed = match detect_format(path, format) {
        Format::Apc => parse_apc(&text).and_then(|r| apc_to_atepc(&r)),
        Format::Atepc => parse_atepc(&text),
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn atepc_to_apc(sentences: &[AtepcSentence]) -> Result<Vec<ApcRecord>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (span, polarity) = s
                .focused()
                .ok_or_else(|| CorpusError::Invalid(format!("sentence {} has no labelled aspect", i + 1)))?;
            Ok(ApcRecord::new(s.tokens.clone(), span, polarity)?)
        })
        .collect()
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let grid = QueryGrid {
        origin: LatLon::new(a.origin_lat, a.origin_lon),
        rows: a.rows,
        cols: a.cols,
        spacing_m: a.spacing_m,
        radius_m: a.radius_m,
        category: a.category.clone(),
    };
    let backend: Box<dyn PlacesBackend> = match (&a.fixtures, a.live) {
        (Some(dir), false) => Box::new(FixtureBackend::new(dir)?),
        (None, true) => {
            if !(a.rate > 0.0) {
                return Err(config_err(format!("--rate must be positive, got {}", a.rate)));
            }
            let config = LiveConfig { requests_per_sec: a.rate, ..LiveConfig::from_env()? };
            Box::new(LiveBackend::new(config)?)
        }
        _ => return Err(config_err("choose a backend: --fixtures <DIR> or --live")),
    };
    let collection = collect(&grid, backend.as_ref())?;
    collection.write(&a.out)?;
    eprintln!(
        "collected {} places, {} reviews into {}",
        collection.places.len(),
        collection.reviews.len(),
        a.out.display()
    );
    Ok(())
}

pub fn convert(a: &ConvertArgs) -> Result<()> {
    let text = read_text(&a.input)?;
    let out = match (a.from, a.to) {
        (Format::Apc, Format::Atepc) => serialize_atepc(&apc_to_atepc(&parse_apc(&text)?)?),
        (Format::Apc, Format::Apc) => serialize_apc(&parse_apc(&text)?),
        (Format::Atepc, Format::Atepc) => serialize_atepc(&parse_atepc(&text)?),
        (Format::Atepc, Format::Apc) => serialize_apc(&atepc_to_apc(&parse_atepc(&text)?)?),
    };
    emit(a.output.as_deref(), &out)
}

pub fn train(a: &TrainArgs, seed: u64) -> Result<()> {
    let corpus = read_annotated(&a.corpus, a.format)?;
    let model_config = ModelConfig {
        vocab_size: 2,
        d_model: a.d_model,
        n_heads: a.n_heads,
        n_layers: a.n_layers,
        d_ff: a.d_ff,
        max_len: a.max_len,
        srd_threshold: a.alpha,
        lcf_mode: a.lcf_mode,
        dropout: a.dropout,
        seed,
    };
    model_config.validate()?;
    let train_config = TrainConfig {
        train_size: a.train_size,
        test_size: a.test_size,
        batch_size: a.batch_size,
        num_epochs: a.epochs,
        learning_rate: a.lr,
        seed,
        ..TrainConfig::default()
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let outcome = train_with(&model_config, &corpus, &train_config, &mut |r, _| {
        eprintln!(
            "epoch {}: tag loss {:.4}, polarity loss {:.4}, ATE F1 {}, APC F1 {}",
            r.epoch,
            r.tag_loss,
            r.polarity_loss,
            r.ate_f1.map_or("-".into(), |v| format!("{v:.4}")),
            r.apc_f1.map_or("-".into(), |v| format!("{v:.4}")),
        );
        Ok(())
    })?;
    let ckpt = a.out.join(CHECKPOINT_FILE);
    outcome.model.save(&ckpt)?;
    write_text(&a.out.join(HISTORY_FILE), &(serde_json::to_string_pretty(&outcome.history)? + "\n"))?;
    write_text(&a.out.join(TRAIN_SPLIT_FILE), &serialize_atepc(&outcome.train))?;
    write_text(&a.out.join(TEST_SPLIT_FILE), &serialize_atepc(&outcome.test))?;
    eprintln!("wrote {}", ckpt.display());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let test = read_annotated(&a.test, a.format)?;
    let mut rows: Vec<(String, MetricReport)> = Vec::new();
    if a.echo_oracle {
        rows.push(("echo-oracle".into(), evaluate(&EchoOracle::new(&test), &test)?));
    } else {
        let ckpt = a.checkpoint.as_deref().expect("clap requires a checkpoint");
        if let Some(base) = &a.baseline {
            let model = AbsaModel::load(base)?;
            rows.push(("baseline".into(), evaluate(&model, &test)?));
        }
        let model = AbsaModel::load(ckpt)?;
        let name = format!("LCF ({}, alpha {})", model.model.config().lcf_mode, alpha_text(model.model.config()));
        rows.push((name, evaluate(&model, &test)?));
    }
    let table: Vec<(&str, &MetricReport)> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let mut out = render_table(&table);
    for (name, report) in &rows {
        out.push_str(&format!("\n{name}\n{}", render_details(report)));
    }
    print!("{out}");
    if let Some(path) = &a.json {
        let map: BTreeMap<&str, &MetricReport> = table.into_iter().collect();
        write_text(path, &(serde_json::to_string_pretty(&map)? + "\n"))?;
    }
    Ok(())
}

fn alpha_text(c: &ModelConfig) -> String {
    if c.srd_threshold == usize::MAX {
        "inf".into()
    } else {
        c.srd_threshold.to_string()
    }
}

/// Review texts from a plain file (one per line) or a reviews.jsonl file.
fn read_reviews_input(input: Option<&Path>) -> Result<Vec<String>> {
    let mut text = String::new();
    match input {
        Some(p) => text = read_text(p)?,
        None => {
            std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
        }
    }
    let is_jsonl = input.is_some_and(|p| p.extension().is_some_and(|e| e == "jsonl"));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if is_jsonl {
            let review: Review =
                serde_json::from_str(line).with_context(|| format!("line {} of reviews input", i + 1))?;
            out.push(review.text);
        } else {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

pub fn infer(a: &InferArgs) -> Result<()> {
    let model = AbsaModel::load(&a.checkpoint)?;
    let reviews = read_reviews_input(a.input.as_deref())?;
    let mut out = String::new();
    for text in reviews {
        let aspects = predict(&text, &model as &dyn AspectModel)?;
        out.push_str(&serde_json::to_string(&ReviewPrediction { text, aspects })?);
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let predictions: Vec<ReviewPrediction> = read_jsonl(&a.predictions)?;
    let reviews: Vec<Review> = read_jsonl(&a.reviews)?;
    if predictions.len() != reviews.len() {
        return Err(config_err(format!(
            "{} predictions for {} reviews; run infer on the same reviews file",
            predictions.len(),
            reviews.len()
        )));
    }
    let mut records = Vec::new();
    for (i, (p, r)) in predictions.iter().zip(&reviews).enumerate() {
        if p.text != r.text {
            return Err(config_err(format!("prediction {} does not match review {} text", i + 1, i + 1)));
        }
        for aspect in &p.aspects {
            records.push(GeoAspectRecord::from_prediction(r, aspect)?);
        }
    }
    if a.top_k == Some(0) {
        return Err(config_err("--top-k must be at least 1"));
    }
    let k = a.top_k.unwrap_or(usize::MAX);
    let tables: Vec<FrequencyTable> = Polarity::ALL.iter().map(|p| aggregate_frequency(&records, *p, k)).collect();
    let bins = bin_spatial(&records, a.cell_size).map_err(|e| config_err(e.to_string()))?;
    fs::create_dir_all(&a.out)?;
    write_text(&a.out.join(FREQUENCY_FILE), &frequency_csv(&tables))?;
    write_text(&a.out.join(POINTS_FILE), &export_geojson(&records, &[], ExportMode::Points))?;
    write_text(&a.out.join(CELLS_FILE), &export_geojson(&[], &bins, ExportMode::Cells))?;
    eprintln!("{} aspects from {} reviews in {} cells", records.len(), reviews.len(), bins.len());
    Ok(())
}

#[derive(Deserialize)]
struct FrequencyRow {
    polarity: String,
    aspect: String,
    count: usize,
}

pub fn plot(a: &PlotArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&a.frequency).with_context(|| format!("opening {}", a.frequency.display()))?;
    let mut tables: BTreeMap<Polarity, Vec<(String, usize)>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: FrequencyRow = row?;
        let polarity: Polarity = row.polarity.parse()?;
        tables.entry(polarity).or_default().push((row.aspect, row.count));
    }
    fs::create_dir_all(&a.out)?;
    for polarity in Polarity::ALL {
        let mut entries = tables.remove(&polarity).unwrap_or_default();
        entries.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        entries.truncate(a.top_k.max(1));
        let path: PathBuf = a.out.join(format!("{}.svg", polarity.as_str().to_lowercase()));
        write_text(&path, &frequency_svg(&FrequencyTable { polarity, entries }))?;
    }
    Ok(())
}

pub fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    match a.kind {
        SynthKind::Corpus => {
            if a.sentences == 0 {
                return Err(config_err("--sentences must be at least 1"));
            }
            write_text(&a.out, &serialize_apc(&synth::synthetic_apc(a.sentences, seed)))
        }
        SynthKind::Fixtures => {
            let summary = synth::write_fixtures(&a.out, a.places, seed)?;
            let g = &summary.grid;
            let conf = format!(
                "fixtures={}\norigin-lat={}\norigin-lon={}\nrows={}\ncols={}\nspacing-m={}\nradius-m={}\ncategory={}\n",
                a.out.display(),
                g.origin.lat,
                g.origin.lon,
                g.rows,
                g.cols,
                g.spacing_m,
                g.radius_m,
                g.category
            );
            write_text(&a.out.join("grid.conf"), &conf)?;
            eprintln!("{} places, {} reviews expected", summary.places, summary.reviews);
            Ok(())
        }
    }
}

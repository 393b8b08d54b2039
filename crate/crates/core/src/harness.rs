//! Experiment runner for the incremental OCR and wine protocols.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{
    load_csv, load_optdigits_pool, load_wine_pool, make_increments, ClassId, Dataset, IncrementSpec, ScalerKind,
};
use crate::error::{Error, Result};
use crate::iluga::{classify, learn_increment, IlugaConfig};
use crate::learnpp::{
    combine_learnpp, combine_learnpp_mt, train_increment_learnpp, Combination, LearnppConfig, LearnppState,
};
use crate::multiclass::{Ensemble, ModelFile, ModelPayload};

/// Environment variable overriding the data directory.
pub const DATA_DIR_ENV: &str = "ILEARN_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Iluga,
    Learnpp,
    LearnppMt,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Iluga => "iluga",
            Method::Learnpp => "learnpp",
            Method::LearnppMt => "learnpp_mt",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iluga" => Ok(Method::Iluga),
            "learnpp" => Ok(Method::Learnpp),
            "learnpp_mt" | "learnpp-mt" => Ok(Method::LearnppMt),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Ocr,
    Wine,
    /// A `label,f0,...` CSV; requires an explicit increment spec.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub method: Method,
    /// Defaults to the canonical protocol of `dataset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increments: Option<IncrementSpec>,
    #[serde(default)]
    pub iluga: IlugaConfig,
    #[serde(default)]
    pub learnpp: LearnppConfig,
    /// When set, Learn++ trains up to this many hypotheses per increment and
    /// keeps the prefix that scores best on the validation set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learnpp_validation_max: Option<usize>,
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Ocr,
    Wine,
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ocr" => Ok(Protocol::Ocr),
            "wine" => Ok(Protocol::Wine),
            _ => Err(Error::InvalidParameter(format!("unknown protocol {s:?} (expected ocr or wine)"))),
        }
    }
}

impl ExperimentConfig {
    /// The canonical set-up: two ILUGA units or five Learn++ hypotheses per
    /// OCR increment; on wine Learn++ picks its hypothesis count on the validation set.
    pub fn canonical(protocol: Protocol, method: Method, repetitions: usize, seed: u64) -> Self {
        let (dataset, scaling) = match protocol {
            Protocol::Ocr => (DatasetSource::Ocr, ScalerKind::OPTDIGITS),
            Protocol::Wine => (DatasetSource::Wine, ScalerKind::MinMax),
        };
        let iluga = IlugaConfig {
            scaling,
            ..IlugaConfig::default()
        };
        let learnpp = LearnppConfig {
            scaling,
            ..LearnppConfig::default()
        };
        Self {
            dataset,
            method,
            increments: None,
            iluga,
            learnpp,
            learnpp_validation_max: (protocol == Protocol::Wine).then_some(10),
            repetitions,
            seed,
            data_dir: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if matches!(self.dataset, DatasetSource::Csv { .. }) && self.increments.is_none() {
            return Err(Error::InvalidParameter("csv datasets need an explicit `increments` spec".into()));
        }
        if let DatasetSource::Csv { path } = &self.dataset {
            if !path.exists() {
                return Err(Error::MissingData {
                    path: path.clone(),
                    hint: "check the `dataset.path` entry of the config".into(),
                });
            }
        }
        self.iluga.validate()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Explicit directory, else `$ILEARN_DATA_DIR`, else `./data`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn load_pool(cfg: &ExperimentConfig) -> Result<(String, Dataset, IncrementSpec)> {
    let dir = resolve_data_dir(cfg.data_dir.as_deref());
    let (name, pool, spec) = match &cfg.dataset {
        DatasetSource::Ocr => ("ocr".to_string(), load_optdigits_pool(&dir)?, IncrementSpec::ocr()),
        DatasetSource::Wine => ("wine".to_string(), load_wine_pool(&dir)?, IncrementSpec::wine()),
        DatasetSource::Csv { path } => (
            path.display().to_string(),
            load_csv(path)?,
            cfg.increments.clone().unwrap_or_else(|| IncrementSpec {
                increments: vec![],
                validation: None,
                test: Default::default(),
            }),
        ),
    };
    Ok((name, pool, cfg.increments.clone().unwrap_or(spec)))
}

/// Trained state of one method, whichever it is.
#[derive(Debug, Clone)]
pub enum Model {
    Iluga(Ensemble),
    Learnpp { state: LearnppState, mt: bool },
}

impl Model {
    pub fn new(method: Method) -> Self {
        match method {
            Method::Iluga => Model::Iluga(Ensemble::new()),
            Method::Learnpp => Model::Learnpp {
                state: LearnppState::new(),
                mt: false,
            },
            Method::LearnppMt => Model::Learnpp {
                state: LearnppState::new(),
                mt: true,
            },
        }
    }

    pub fn from_file(file: ModelFile, mt: bool) -> Self {
        match file.payload {
            ModelPayload::Iluga(e) => Model::Iluga(e),
            ModelPayload::Learnpp(state) => Model::Learnpp { state, mt },
        }
    }

    pub fn to_file(&self) -> ModelFile {
        match self {
            Model::Iluga(e) => ModelFile::new(ModelPayload::Iluga(e.clone())),
            Model::Learnpp { state, .. } => ModelFile::new(ModelPayload::Learnpp(state.clone())),
        }
    }

    pub fn known_classes(&self) -> &BTreeSet<ClassId> {
        match self {
            Model::Iluga(e) => e.known_classes(),
            Model::Learnpp { state, .. } => state.known_classes(),
        }
    }

    /// Units for ILUGA, hypotheses for Learn++.
    pub fn classifier_count(&self) -> usize {
        match self {
            Model::Iluga(e) => e.units().len(),
            Model::Learnpp { state, .. } => state.len(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        match self {
            Model::Iluga(e) => classify(e, x),
            Model::Learnpp { state, mt } => {
                let preds = predict_all(state, x)?;
                Ok(if *mt {
                    combine_learnpp_mt(state, &preds)
                } else {
                    combine_learnpp(state, &preds)
                })
            }
        }
    }
}

fn predict_all(state: &LearnppState, x: &[f64]) -> Result<Vec<ClassId>> {
    if state.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(state.hypotheses().iter().map(|h| h.predict(x)).collect())
}

/// Accuracy of `model` on `data`, overall and per class (indexed by position in `classes`).
pub fn evaluate(model: &Model, data: &Dataset, classes: &[ClassId]) -> Result<(usize, Vec<f64>)> {
    let mut hits = vec![0usize; classes.len()];
    let mut totals = vec![0usize; classes.len()];
    let mut correct = 0;
    for s in data.samples() {
        let ok = model.predict(&s.features)? == s.label;
        correct += ok as usize;
        if let Ok(k) = classes.binary_search(&s.label) {
            totals[k] += 1;
            hits[k] += ok as usize;
        }
    }
    let per_class = hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| if t > 0 { h as f64 / t as f64 } else { 0.0 })
        .collect();
    Ok((correct, per_class))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementEval {
    pub per_class: Vec<f64>,
    pub trained: Vec<bool>,
    pub correct: usize,
    pub total: usize,
    pub gen: f64,
    pub classifiers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub seed: u64,
    pub increments: Vec<IncrementEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementRow {
    pub name: String,
    /// Mean accuracy per class; `None` where the class was not yet trained.
    pub per_class: Vec<Option<f64>>,
    pub gen: f64,
    pub std: f64,
    pub classifiers: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: Method,
    pub repetitions: usize,
    pub seed: u64,
    pub classes: Vec<ClassId>,
    pub rows: Vec<IncrementRow>,
    pub raw: Vec<RepetitionResult>,
    /// Wall-clock seconds; left out by default so reports are reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_secs: Option<f64>,
    pub config: ExperimentConfig,
}

impl RunReport {
    pub fn final_row(&self) -> Option<&IncrementRow> {
        self.rows.last()
    }

    pub fn class_accuracy(&self, row: usize, class: ClassId) -> Option<f64> {
        let k = self.classes.binary_search(&class).ok()?;
        self.rows.get(row)?.per_class[k]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn train_step(model: Model, increment: &Dataset, validation: Option<&Dataset>, cfg: &ExperimentConfig, rep_seed: u64) -> Result<Model> {
    match model {
        Model::Iluga(e) => {
            let icfg = IlugaConfig {
                seed: rep_seed,
                ..cfg.iluga.clone()
            };
            Ok(Model::Iluga(learn_increment(&e, increment, &icfg)?))
        }
        Model::Learnpp { state, mt } => {
            let mut lcfg = LearnppConfig {
                seed: rep_seed,
                combination: if mt { Combination::Mt } else { Combination::Plain },
                ..cfg.learnpp.clone()
            };
            let select = cfg.learnpp_validation_max.zip(validation);
            if let Some((max, _)) = select {
                lcfg.hypotheses_per_increment = max;
            }
            let before = state.len();
            let mut next = train_increment_learnpp(&state, increment, &lcfg)?;
            if let Some((_, val)) = select {
                let classes: Vec<ClassId> = val.classes().iter().copied().collect();
                let mut best = (usize::MAX, before + 1);
                for len in before + 1..=next.len() {
                    let mut trial = next.clone();
                    trial.truncate(len);
                    let (correct, _) = evaluate(&Model::Learnpp { state: trial, mt }, val, &classes)?;
                    // ties keep the smaller ensemble
                    if best.0 == usize::MAX || correct > best.0 {
                        best = (correct, len);
                    }
                }
                next.truncate(best.1);
            }
            Ok(Model::Learnpp { state: next, mt })
        }
    }
}

/// One repetition: build increments, learn them in order, evaluate after each.
pub fn run_repetition(cfg: &ExperimentConfig, pool: &Dataset, spec: &IncrementSpec, rep_seed: u64) -> Result<(RepetitionResult, Model)> {
    let sets = make_increments(pool, spec, rep_seed)?;
    let classes: Vec<ClassId> = sets.test.classes().iter().copied().collect();
    let mut model = Model::new(cfg.method);
    let mut evals = Vec::new();
    for (k, inc) in sets.increments.iter().enumerate() {
        model = train_step(model, inc, sets.validation.as_ref(), cfg, crate::derive_seed(rep_seed, k as u64))?;
        let (correct, per_class) = evaluate(&model, &sets.test, &classes)?;
        let total = sets.test.len();
        evals.push(IncrementEval {
            trained: classes.iter().map(|c| model.known_classes().contains(c)).collect(),
            per_class,
            correct,
            total,
            gen: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
            classifiers: model.classifier_count(),
        });
    }
    Ok((
        RepetitionResult {
            seed: rep_seed,
            increments: evals,
        },
        model,
    ))
}

/// Aggregates repetitions into the per-increment table.
pub fn summarize(raw: &[RepetitionResult], n_classes: usize) -> Vec<IncrementRow> {
    let n_inc = raw.first().map_or(0, |r| r.increments.len());
    (0..n_inc)
        .map(|k| {
            let evals: Vec<&IncrementEval> = raw.iter().map(|r| &r.increments[k]).collect();
            let per_class = (0..n_classes)
                .map(|c| {
                    evals
                        .iter()
                        .all(|e| e.trained[c])
                        .then(|| mean(&evals.iter().map(|e| e.per_class[c]).collect::<Vec<_>>()))
                })
                .collect();
            let gens: Vec<f64> = evals.iter().map(|e| e.gen).collect();
            IncrementRow {
                name: format!("DS{}", k + 1),
                per_class,
                gen: mean(&gens),
                std: std_dev(&gens),
                classifiers: mean(&evals.iter().map(|e| e.classifiers as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

/// Runs every repetition (seed `cfg.seed + r`) and aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_with_models(cfg).map(|(r, _)| r)
}

/// As [`run_experiment`], also returning the final model of each repetition.
pub fn run_experiment_with_models(cfg: &ExperimentConfig) -> Result<(RunReport, Vec<Model>)> {
    cfg.validate()?;
    let (name, pool, spec) = load_pool(cfg)?;
    let seeds: Vec<u64> = (0..cfg.repetitions as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    let results: Vec<Result<(RepetitionResult, Model)>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            seeds.par_iter().map(|&s| run_repetition(cfg, &pool, &spec, s)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            seeds.iter().map(|&s| run_repetition(cfg, &pool, &spec, s)).collect()
        }
    };
    let mut raw = Vec::with_capacity(results.len());
    let mut models = Vec::with_capacity(results.len());
    for r in results {
        let (rep, model) = r?;
        raw.push(rep);
        models.push(model);
    }
    let classes: Vec<ClassId> = spec.test.keys().copied().collect();
    let rows = summarize(&raw, classes.len());
    Ok((
        RunReport {
            dataset: name,
            method: cfg.method,
            repetitions: cfg.repetitions,
            seed: cfg.seed,
            classes,
            rows,
            raw,
            elapsed_secs: None,
            config: cfg.clone(),
        },
        models,
    ))
}

/// Largest drop in mean per-class accuracy between consecutive increments,
/// over classes trained at the earlier one. Returns `(drop, class, increment index)`.
pub fn worst_forgetting(report: &RunReport) -> Option<(f64, ClassId, usize)> {
    let mut worst: Option<(f64, ClassId, usize)> = None;
    for k in 1..report.rows.len() {
        for (c, &class) in report.classes.iter().enumerate() {
            if let (Some(before), Some(after)) = (report.rows[k - 1].per_class[c], report.rows[k].per_class[c]) {
                let drop = before - after;
                if worst.is_none_or(|w| drop > w.0) {
                    worst = Some((drop, class, k));
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` when the value must be at least the threshold, `false` for at most.
    pub at_least: bool,
    pub passed: bool,
}

impl Check {
    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            at_least: true,
            passed: value >= threshold,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            at_least: false,
            passed: value <= threshold,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {:.4} (need {} {:.4})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            if self.at_least { ">=" } else { "<=" },
            self.threshold
        )
    }
}

pub const OCR_MIN_GEN: f64 = 0.88;
pub const OCR_MIN_NEW_CLASS: f64 = 0.75;
pub const WINE_MIN_GEN: f64 = 0.90;
pub const MAX_FORGETTING: f64 = 0.15;

/// Threshold checks for a reproduction report. Only ILUGA has absolute targets.
pub fn acceptance_checks(protocol: Protocol, report: &RunReport) -> Vec<Check> {
    let mut checks = Vec::new();
    if report.method != Method::Iluga {
        return checks;
    }
    let last = report.rows.len().saturating_sub(1);
    let gen = report.final_row().map_or(0.0, |r| r.gen);
    match protocol {
        Protocol::Ocr => {
            checks.push(Check::at_least("final generalized accuracy", gen, OCR_MIN_GEN));
            for class in [4, 9] {
                let acc = report.class_accuracy(last, class).unwrap_or(0.0);
                checks.push(Check::at_least(&format!("class {class} accuracy after DS3"), acc, OCR_MIN_NEW_CLASS));
            }
            let drop = worst_forgetting(report).map_or(0.0, |w| w.0);
            checks.push(Check::at_most("worst per-class drop across an increment", drop, MAX_FORGETTING));
        }
        Protocol::Wine => checks.push(Check::at_least("final generalized accuracy", gen, WINE_MIN_GEN)),
    }
    checks
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub report: RunReport,
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn reproduce(protocol: Protocol, method: Method, repetitions: usize, seed: u64, data_dir: Option<&Path>) -> Result<Reproduction> {
    let mut cfg = ExperimentConfig::canonical(protocol, method, repetitions, seed);
    cfg.data_dir = data_dir.map(Path::to_path_buf);
    let report = run_experiment(&cfg)?;
    let checks = acceptance_checks(protocol, &report);
    Ok(Reproduction { report, checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "text" | "table" | "text-table" => Ok(ReportFormat::Text),
            _ => Err(Error::InvalidParameter(format!("unknown report format {s:?}"))),
        }
    }
}

/// Two CSV blocks separated by a blank line: `increment,class,accuracy` then `increment,gen,std`.
pub fn report_to_csv(report: &RunReport) -> String {
    let mut out = String::from("increment,class,accuracy\n");
    for row in &report.rows {
        for (class, acc) in report.classes.iter().zip(&row.per_class) {
            if let Some(a) = acc {
                let _ = writeln!(out, "{},{class},{a}", row.name);
            }
        }
    }
    out.push_str("\nincrement,gen,std\n");
    for row in &report.rows {
        let _ = writeln!(out, "{},{},{}", row.name, row.gen, row.std);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportCsv {
    pub cells: Vec<(String, ClassId, f64)>,
    pub summary: Vec<(String, f64, f64)>,
}

pub fn parse_report_csv(text: &str) -> Result<ReportCsv> {
    let mut out = ReportCsv::default();
    let mut section = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        match line {
            "" => continue,
            "increment,class,accuracy" => section = 1,
            "increment,gen,std" => section = 2,
            _ => {
                let f: Vec<&str> = line.split(',').collect();
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(line_no, format!("not a number: {s:?}")));
                if f.len() != 3 {
                    return Err(Error::parse(line_no, "expected 3 fields"));
                }
                match section {
                    1 => out.cells.push((
                        f[0].to_string(),
                        f[1].parse().map_err(|_| Error::parse(line_no, "bad class id"))?,
                        num(f[2])?,
                    )),
                    2 => out.summary.push((f[0].to_string(), num(f[1])?, num(f[2])?)),
                    _ => return Err(Error::parse(line_no, "data before header")),
                }
            }
        }
    }
    Ok(out)
}

fn pct(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

/// Fixed-width table: one row per increment, one column per class plus Gen and Std.
pub fn report_to_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "Class");
    for c in &report.classes {
        let _ = write!(out, "{:>8}", format!("C{c}"));
    }
    let _ = writeln!(out, "{:>8}{:>8}", "Gen", "Std");
    for row in &report.rows {
        let _ = write!(out, "{:<8}", row.name);
        for cell in &row.per_class {
            let _ = write!(out, "{:>8}", cell.map_or("-".to_string(), pct));
        }
        let _ = writeln!(out, "{:>8}{:>8}", pct(row.gen), pct(row.std));
    }
    out
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Csv => report_to_csv(report),
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Text => report_to_text(report),
    })
}

pub fn report_emit(report: &RunReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(per_class: Vec<f64>, trained: Vec<bool>, correct: usize) -> IncrementEval {
        IncrementEval {
            per_class,
            trained,
            correct,
            total: 10,
            gen: correct as f64 / 10.0,
            classifiers: 2,
        }
    }

    fn report(raw: Vec<RepetitionResult>) -> RunReport {
        RunReport {
            dataset: "test".into(),
            method: Method::Iluga,
            repetitions: raw.len(),
            seed: 0,
            classes: vec![0, 1, 2],
            rows: summarize(&raw, 3),
            raw,
            elapsed_secs: None,
            config: ExperimentConfig::canonical(Protocol::Wine, Method::Iluga, 1, 0),
        }
    }

    fn sample_report() -> RunReport {
        report(vec![
            RepetitionResult {
                seed: 0,
                increments: vec![
                    eval(vec![1.0, 0.8, 0.0], vec![true, true, false], 6),
                    eval(vec![0.9, 0.8, 0.7], vec![true, true, true], 8),
                ],
            },
            RepetitionResult {
                seed: 1,
                increments: vec![
                    eval(vec![1.0, 0.6, 0.0], vec![true, true, false], 5),
                    eval(vec![0.7, 0.9, 0.9], vec![true, true, true], 9),
                ],
            },
        ])
    }

    #[test]
    fn summary_means_and_absent_cells() {
        let r = sample_report();
        assert_eq!(r.rows[0].per_class, vec![Some(1.0), Some(0.7), None]);
        assert!((r.rows[1].gen - 0.85).abs() < 1e-12);
        assert!((r.rows[0].std - std_dev(&[0.6, 0.5])).abs() < 1e-15);
        let (drop, class, k) = worst_forgetting(&r).unwrap();
        assert!((drop - 0.2).abs() < 1e-12 && class == 0 && k == 1);
    }

    #[test]
    fn single_repetition_has_zero_std() {
        let r = report(vec![RepetitionResult {
            seed: 0,
            increments: vec![eval(vec![1.0, 1.0, 1.0], vec![true; 3], 10)],
        }]);
        assert_eq!(r.rows[0].std, 0.0);
    }

    #[test]
    fn csv_round_trip_keeps_gen() {
        let r = sample_report();
        let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        let parsed = parse_report_csv(&report_to_csv(&back)).unwrap();
        for (row, (name, gen, std)) in r.rows.iter().zip(&parsed.summary) {
            assert_eq!(&row.name, name);
            assert!((row.gen - gen).abs() < 1e-12);
            assert!((row.std - std).abs() < 1e-12);
        }
        assert_eq!(parsed.cells.len(), 5);
    }

    #[test]
    fn empty_report_csv_is_headers_only() {
        let r = report(vec![]);
        let csv = report_to_csv(&r);
        assert_eq!(csv, "increment,class,accuracy\n\nincrement,gen,std\n");
        assert_eq!(parse_report_csv(&csv).unwrap(), ReportCsv::default());
    }

    #[test]
    fn text_table_marks_untrained() {
        let text = report_to_text(&sample_report());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["DS1", "100.0%", "70.0%", "-", "55.0%", "7.1%"]);
    }

    #[test]
    fn parsing_helpers() {
        assert_eq!("learnpp_mt".parse::<Method>().unwrap(), Method::LearnppMt);
        assert!("svm".parse::<Method>().is_err());
        assert_eq!("wine".parse::<Protocol>().unwrap(), Protocol::Wine);
        assert_eq!("text-table".parse::<ReportFormat>().unwrap(), ReportFormat::Text);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::canonical(Protocol::Ocr, Method::Iluga, 0, 1);
        assert!(cfg.validate().is_err());
        cfg.repetitions = 1;
        assert!(cfg.validate().is_ok());
        cfg.dataset = DatasetSource::Csv { path: "/nonexistent.csv".into() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_data_is_reported() {
        let mut cfg = ExperimentConfig::canonical(Protocol::Ocr, Method::Iluga, 1, 1);
        cfg.data_dir = Some("/nonexistent-dir".into());
        match run_experiment(&cfg) {
            Err(Error::MissingData { hint, .. }) => assert!(hint.contains("UCI")),
            other => panic!("unexpected {other:?}"),
        }
    }
}

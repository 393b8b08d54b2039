//! Dataset loading, increment construction and the stratified three-way split.
//!
//! Loaders understand the UCI `optdigits` files (`optdigits.tra`, `optdigits.tes`),
//! the UCI `wine.data` file, and a generic labelled CSV with a
//! `label,f0,...,f{d-1}` header which is also the format increments are written in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = usize;

/// Class id → number of samples.
pub type ClassCounts = BTreeMap<ClassId, usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: ClassId,
}

/// A labelled feature matrix.
///
/// `classes` is always exactly the set of labels present, so an empty dataset
/// has an empty class inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    classes: BTreeSet<ClassId>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dataset dimension must be > 0".into()));
        }
        if let Some(bad) = samples.iter().find(|s| s.features.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.features.len(),
            });
        }
        let classes = samples.iter().map(|s| s.label).collect();
        Ok(Self {
            samples,
            dim,
            classes,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &BTreeSet<ClassId> {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut counts = ClassCounts::new();
        for s in &self.samples {
            *counts.entry(s.label).or_default() += 1;
        }
        counts
    }

    /// Indices of samples grouped by class, in dataset order.
    pub fn indices_by_class(&self) -> BTreeMap<ClassId, Vec<usize>> {
        let mut by_class: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            by_class.entry(s.label).or_default().push(i);
        }
        by_class
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let samples: Vec<Sample> = indices.iter().map(|&i| self.samples[i].clone()).collect();
        let classes = samples.iter().map(|s| s.label).collect();
        Dataset {
            samples,
            dim: self.dim,
            classes,
        }
    }

    /// Concatenates datasets of equal dimensionality.
    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let dim = parts.first().map(|d| d.dim).ok_or(Error::NoSamples)?;
        let mut samples = Vec::new();
        for part in parts {
            if part.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: part.dim,
                });
            }
            samples.extend(part.samples.iter().cloned());
        }
        Dataset::new(samples, dim)
    }

    /// Writes the dataset as CSV with a `label,f0,...` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for j in 0..self.dim {
            let _ = write!(out, ",f{j}");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{}", s.label);
            for v in &s.features {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses the UCI optdigits format: 64 integer features in `[0,16]` then a digit label.
pub fn parse_optdigits(text: &str) -> Result<Dataset> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 65 {
            return Err(Error::parse(
                line_no,
                format!("expected 65 fields, found {}", fields.len()),
            ));
        }
        let mut features = Vec::with_capacity(64);
        for (j, f) in fields[..64].iter().enumerate() {
            let v: i64 = f
                .parse()
                .map_err(|_| Error::parse(line_no, format!("feature {j}: not an integer: {f:?}")))?;
            if !(0..=16).contains(&v) {
                return Err(Error::parse(line_no, format!("feature {j}: {v} outside [0,16]")));
            }
            features.push(v as f64);
        }
        let label: i64 = fields[64]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("label not an integer: {:?}", fields[64])))?;
        if !(0..=9).contains(&label) {
            return Err(Error::parse(line_no, format!("label {label} outside 0..9")));
        }
        samples.push(Sample {
            features,
            label: label as ClassId,
        });
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    Dataset::new(samples, 64)
}

pub fn load_optdigits(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_optdigits(&read_to_string(path.as_ref())?)
}

/// Parses UCI `wine.data`: class id 1–3 followed by 13 real attributes.
/// Labels are remapped to 0..2.
pub fn parse_wine(text: &str) -> Result<Dataset> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 14 {
            return Err(Error::parse(
                line_no,
                format!("expected 14 fields, found {}", fields.len()),
            ));
        }
        let label = match fields[0] {
            "1" => 0,
            "2" => 1,
            "3" => 2,
            other => return Err(Error::parse(line_no, format!("unknown class id {other:?}"))),
        };
        let features = fields[1..]
            .iter()
            .enumerate()
            .map(|(j, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::parse(line_no, format!("attribute {j}: not a number: {f:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample { features, label });
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    Dataset::new(samples, 13)
}

pub fn load_wine(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_wine(&read_to_string(path.as_ref())?)
}

/// Parses the generic CSV format written by [`Dataset::to_csv`].
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::NoSamples)?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first().map(|c| c.trim()) != Some("label") || cols.len() < 2 {
        return Err(Error::parse(1, "header must be `label,f0,...`"));
    }
    let dim = cols.len() - 1;
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        let label = fields[0]
            .parse::<ClassId>()
            .map_err(|_| Error::parse(line_no, format!("label not a class id: {:?}", fields[0])))?;
        let features = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample { features, label });
    }
    Dataset::new(samples, dim)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_csv(&read_to_string(path.as_ref())?)
}

/// Merges `optdigits.tra` and `optdigits.tes` found in `dir`.
pub fn load_optdigits_pool(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mut parts = Vec::new();
    for name in ["optdigits.tra", "optdigits.tes"] {
        let path = dir.join(name);
        if !path.exists() {
            return Err(Error::MissingData {
                path,
                hint: "download optdigits.tra and optdigits.tes from the UCI repository \
                       (https://archive.ics.uci.edu/dataset/80) into the data directory"
                    .into(),
            });
        }
        parts.push(load_optdigits(&path)?);
    }
    Dataset::concat(&[&parts[0], &parts[1]])
}

pub fn load_wine_pool(dir: impl AsRef<Path>) -> Result<Dataset> {
    let path = dir.as_ref().join("wine.data");
    if !path.exists() {
        return Err(Error::MissingData {
            path,
            hint: "download wine.data from the UCI repository \
                   (https://archive.ics.uci.edu/dataset/109) into the data directory"
                .into(),
        });
    }
    load_wine(path)
}

/// Per-class sample counts for each training increment, an optional
/// held-out validation set, and the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSpec {
    pub increments: Vec<ClassCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ClassCounts>,
    pub test: ClassCounts,
}

fn counts_row(values: &[usize]) -> ClassCounts {
    values.iter().copied().enumerate().filter(|&(_, n)| n > 0).collect()
}

impl IncrementSpec {
    /// The three-increment optdigits protocol; classes 4 and 9 only appear in the last increment.
    pub fn ocr() -> Self {
        Self {
            increments: vec![
                counts_row(&[250, 250, 250, 0, 0, 250, 250, 250, 0, 0]),
                counts_row(&[150, 0, 150, 250, 0, 150, 0, 150, 250, 0]),
                counts_row(&[0, 150, 0, 150, 400, 0, 150, 0, 150, 400]),
            ],
            validation: None,
            test: counts_row(&[110, 114, 111, 114, 113, 111, 111, 113, 110, 112]),
        }
    }

    /// The two-increment wine protocol (class ids already remapped to 0..2).
    pub fn wine() -> Self {
        Self {
            increments: vec![counts_row(&[26, 31, 0]), counts_row(&[13, 16, 32])],
            validation: Some(counts_row(&[7, 8, 5])),
            test: counts_row(&[13, 16, 11]),
        }
    }

    fn all_rows(&self) -> impl Iterator<Item = &ClassCounts> {
        self.increments
            .iter()
            .chain(self.validation.iter())
            .chain(std::iter::once(&self.test))
    }

    /// Total requested per class across every set.
    pub fn totals(&self) -> ClassCounts {
        let mut totals = ClassCounts::new();
        for row in self.all_rows() {
            for (&c, &n) in row {
                *totals.entry(c).or_default() += n;
            }
        }
        totals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    pub increments: Vec<Dataset>,
    pub validation: Option<Dataset>,
    pub test: Dataset,
}

/// Samples the sets described by `spec` from `pool` without replacement.
///
/// Each class's pool indices are shuffled once and then dealt out in the
/// order increments, validation, test; every returned set is itself shuffled.
pub fn make_increments(pool: &Dataset, spec: &IncrementSpec, seed: u64) -> Result<Increments> {
    let mut by_class = pool.indices_by_class();
    for (&class, &requested) in &spec.totals() {
        let available = by_class.get(&class).map_or(0, Vec::len);
        if requested > available {
            return Err(Error::Unsatisfiable {
                class,
                requested,
                available,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for indices in by_class.values_mut() {
        indices.shuffle(&mut rng);
    }
    let mut cursor: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut take = |row: &ClassCounts, rng: &mut ChaCha8Rng| {
        let mut picked = Vec::new();
        for (&class, &n) in row {
            let start = cursor.entry(class).or_default();
            // `totals` was checked above, so every class with n > 0 is present.
            if n > 0 {
                picked.extend_from_slice(&by_class[&class][*start..*start + n]);
            }
            *start += n;
        }
        picked.shuffle(rng);
        pool.subset(&picked)
    };

    let increments = spec.increments.iter().map(|row| take(row, &mut rng)).collect();
    let validation = spec.validation.as_ref().map(|row| take(row, &mut rng));
    let test = take(&spec.test, &mut rng);
    Ok(Increments {
        increments,
        validation,
        test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriSplit {
    pub train: Dataset,
    pub val1: Dataset,
    pub val2: Dataset,
}

pub const DEFAULT_SPLIT: [f64; 3] = [0.6, 0.2, 0.2];

/// Largest-remainder apportionment of `n` items over `ratios`, with every
/// part receiving at least one item when `n >= ratios.len()`.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let targets = ratios.map(|r| r * n as f64);
    let mut sizes = targets.map(|t| t.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    // stable: ties go to the earlier part
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    for k in 0..3 {
        if sizes[k] == 0 {
            let donor = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
            sizes[donor] -= 1;
            sizes[k] = 1;
        }
    }
    sizes
}

/// Stratified random split into Train / Val1 / Val2.
pub fn tri_split(increment: &Dataset, ratios: [f64; 3], seed: u64) -> Result<TriSplit> {
    if ratios.iter().any(|&r| !(r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, mut indices) in increment.indices_by_class() {
        if indices.len() < 3 {
            return Err(Error::TooFewSamples {
                class,
                count: indices.len(),
                required: 3,
            });
        }
        indices.shuffle(&mut rng);
        let sizes = apportion(indices.len(), &ratios);
        let mut rest = indices.as_slice();
        for (part, size) in parts.iter_mut().zip(sizes) {
            let (head, tail) = rest.split_at(size);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    let [mut a, mut b, mut c] = parts;
    a.shuffle(&mut rng);
    b.shuffle(&mut rng);
    c.shuffle(&mut rng);
    Ok(TriSplit {
        train: increment.subset(&a),
        val1: increment.subset(&b),
        val2: increment.subset(&c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScalerKind {
    /// `x / divisor` with no fitting.
    Fixed { divisor: f64 },
    /// Per-feature min-max fitted on one increment.
    MinMax,
}

impl ScalerKind {
    pub const OPTDIGITS: ScalerKind = ScalerKind::Fixed { divisor: 16.0 };
}

/// Feature scaling stored with each trained unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Scaler {
    Fixed { divisor: f64 },
    /// Features with `max == min` map to 0.
    MinMax { min: Vec<f64>, max: Vec<f64> },
}

pub fn fit_scaler(kind: ScalerKind, increment: &Dataset) -> Scaler {
    match kind {
        ScalerKind::Fixed { divisor } => Scaler::Fixed { divisor },
        ScalerKind::MinMax => {
            let dim = increment.dim();
            let mut min = vec![f64::INFINITY; dim];
            let mut max = vec![f64::NEG_INFINITY; dim];
            for s in increment.samples() {
                for (j, &v) in s.features.iter().enumerate() {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                }
            }
            if increment.is_empty() {
                min.fill(0.0);
                max.fill(0.0);
            }
            Scaler::MinMax { min, max }
        }
    }
}

impl Scaler {
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Scaler::Fixed { divisor } => x.iter().map(|v| v / divisor).collect(),
            Scaler::MinMax { min, max } => x
                .iter()
                .zip(min.iter().zip(max))
                .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect(),
        }
    }

    /// Feature count the scaler was fitted for, if it depends on one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Scaler::Fixed { .. } => None,
            Scaler::MinMax { min, .. } => Some(min.len()),
        }
    }
}

pub fn apply_scaler(scaler: &Scaler, data: &Dataset) -> Dataset {
    let samples = data
        .samples()
        .iter()
        .map(|s| Sample {
            features: scaler.transform(&s.features),
            label: s.label,
        })
        .collect();
    Dataset {
        samples,
        dim: data.dim(),
        classes: data.classes().clone(),
    }
}

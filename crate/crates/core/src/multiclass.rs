//! One-vs-one units with per-decision weights and the potential-vote
//! normalized weighted majority vote.
//!
//! Every binary classifier in the ensemble casts one vote for one of its two
//! classes. The vote is worth that decision's weight divided by the number
//! of classifiers (across the whole ensemble) that could have voted for the
//! class, so a class introduced late competes on equal terms with classes
//! that many older units know about.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::{ClassId, Scaler};
use crate::error::{Error, Result};
use crate::learnpp::LearnppState;
use crate::svm::BinarySvmModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBinaryClassifier {
    pub model: BinarySvmModel,
    pub weight_neg: f64,
    pub weight_pos: f64,
}

impl WeightedBinaryClassifier {
    pub fn pair(&self) -> (ClassId, ClassId) {
        self.model.pair
    }

    /// Class chosen for a scaled input plus the weight attached to that decision.
    #[inline]
    pub fn decide(&self, scaled: &[f64]) -> (ClassId, f64) {
        if self.model.decision_value_unchecked(scaled) >= 0.0 {
            (self.model.pair.1, self.weight_pos)
        } else {
            (self.model.pair.0, self.weight_neg)
        }
    }
}

/// Unordered pairs `(a, b)` with `a < b`, in lexicographic order.
pub fn class_pairs(classes: &BTreeSet<ClassId>) -> Vec<(ClassId, ClassId)> {
    let v: Vec<ClassId> = classes.iter().copied().collect();
    let mut pairs = Vec::with_capacity(v.len() * v.len().saturating_sub(1) / 2);
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            pairs.push((v[i], v[j]));
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassUnit {
    pub classes: BTreeSet<ClassId>,
    pub scaler: Scaler,
    pub classifiers: Vec<WeightedBinaryClassifier>,
}

impl MulticlassUnit {
    /// Checks that the classifiers cover every class pair exactly once and weights are sane.
    pub fn new(
        classes: BTreeSet<ClassId>,
        scaler: Scaler,
        classifiers: Vec<WeightedBinaryClassifier>,
    ) -> Result<Self> {
        let unit = Self {
            classes,
            scaler,
            classifiers,
        };
        unit.validate()?;
        Ok(unit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::NotEnoughClasses(self.classes.len()));
        }
        let mut want: BTreeSet<(ClassId, ClassId)> = class_pairs(&self.classes).into_iter().collect();
        if self.classifiers.len() != want.len() {
            return Err(Error::Format(format!(
                "unit over {} classes needs {} classifiers, has {}",
                self.classes.len(),
                want.len(),
                self.classifiers.len()
            )));
        }
        for c in &self.classifiers {
            let (a, b) = c.pair();
            if !want.remove(&(a.min(b), a.max(b))) {
                return Err(Error::Format(format!("pair ({a}, {b}) missing or duplicated")));
            }
            for w in [c.weight_neg, c.weight_pos] {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::Format(format!("invalid decision weight {w}")));
                }
            }
        }
        Ok(())
    }

    /// Decisions of every classifier on a raw input.
    pub fn decisions(&self, x: &[f64]) -> Vec<(ClassId, f64)> {
        let scaled = self.scaler.transform(x);
        self.classifiers.iter().map(|c| c.decide(&scaled)).collect()
    }

    /// Which side each classifier picks on a raw input: `true` for `pair.1`.
    pub fn sides(&self, x: &[f64]) -> Vec<bool> {
        let scaled = self.scaler.transform(x);
        self.classifiers
            .iter()
            .map(|c| c.model.decision_value_unchecked(&scaled) >= 0.0)
            .collect()
    }

    pub fn set_uniform_weights(&mut self, w: f64) {
        for c in &mut self.classifiers {
            c.weight_neg = w;
            c.weight_pos = w;
        }
    }

    /// Plain one-vs-one prediction of this unit in isolation.
    pub fn predict(&self, x: &[f64]) -> ClassId {
        let pv = unit_potential_votes(self);
        let mut scores = vec![0.0; max_class(&self.classes) + 1];
        for (class, w) in self.decisions(x) {
            scores[class] += w / pv[class] as f64;
        }
        argmax_known(&scores, &self.classes)
    }

    pub fn dim(&self) -> usize {
        self.classifiers.first().map_or(0, |c| c.model.dim())
    }
}

fn max_class(classes: &BTreeSet<ClassId>) -> ClassId {
    classes.iter().next_back().copied().unwrap_or(0)
}

fn unit_potential_votes(unit: &MulticlassUnit) -> Vec<usize> {
    let mut pv = vec![0usize; max_class(&unit.classes) + 1];
    for c in &unit.classifiers {
        pv[c.model.pair.0] += 1;
        pv[c.model.pair.1] += 1;
    }
    pv
}

/// Highest score among `known`; the lowest class id wins ties.
pub(crate) fn argmax_known(scores: &[f64], known: &BTreeSet<ClassId>) -> ClassId {
    let mut best = *known.iter().next().expect("nonempty class set");
    for &c in known {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ensemble {
    units: Vec<MulticlassUnit>,
    known_classes: BTreeSet<ClassId>,
}

impl Ensemble {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn units(&self) -> &[MulticlassUnit] {
        &self.units
    }

    pub fn known_classes(&self) -> &BTreeSet<ClassId> {
        &self.known_classes
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.units.first().map(MulticlassUnit::dim)
    }

    pub fn classifier_count(&self) -> usize {
        self.units.iter().map(|u| u.classifiers.len()).sum()
    }

    fn validate(&self) -> Result<()> {
        let mut known = BTreeSet::new();
        for u in &self.units {
            u.validate()?;
            known.extend(u.classes.iter().copied());
        }
        if known != self.known_classes {
            return Err(Error::Format("known_classes inconsistent with units".into()));
        }
        if let Some(dim) = self.dim() {
            if self.units.iter().any(|u| u.dim() != dim) {
                return Err(Error::Format("units disagree on input dimension".into()));
            }
        }
        Ok(())
    }
}

/// Appends a unit; the existing units are moved over untouched.
pub fn add_unit(mut ensemble: Ensemble, unit: MulticlassUnit) -> Ensemble {
    ensemble.known_classes.extend(unit.classes.iter().copied());
    ensemble.units.push(unit);
    ensemble
}

/// Number of binary classifiers across the ensemble able to vote for each class.
pub fn potential_votes(ensemble: &Ensemble) -> BTreeMap<ClassId, usize> {
    let mut pv = BTreeMap::new();
    for u in &ensemble.units {
        for c in &u.classifiers {
            *pv.entry(c.model.pair.0).or_insert(0) += 1;
            *pv.entry(c.model.pair.1).or_insert(0) += 1;
        }
    }
    pv
}

/// Dense potential-vote table indexed by class id.
pub(crate) fn potential_votes_dense(units: &[&MulticlassUnit]) -> Vec<usize> {
    let top = units.iter().map(|u| max_class(&u.classes)).max().unwrap_or(0);
    let mut pv = vec![0usize; top + 1];
    for u in units {
        for c in &u.classifiers {
            pv[c.model.pair.0] += 1;
            pv[c.model.pair.1] += 1;
        }
    }
    pv
}

/// Per-class weighted, potential-vote normalized scores.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteResult {
    pub predicted: ClassId,
    pub scores: BTreeMap<ClassId, f64>,
}

pub fn vote(ensemble: &Ensemble, x: &[f64]) -> Result<VoteResult> {
    let dim = ensemble.dim().ok_or(Error::EmptyEnsemble)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    let units: Vec<&MulticlassUnit> = ensemble.units.iter().collect();
    let pv = potential_votes_dense(&units);
    let mut scores = vec![0.0; pv.len()];
    for u in &ensemble.units {
        for (class, w) in u.decisions(x) {
            scores[class] += w / pv[class] as f64;
        }
    }
    let predicted = argmax_known(&scores, &ensemble.known_classes);
    Ok(VoteResult {
        predicted,
        scores: ensemble.known_classes.iter().map(|&c| (c, scores[c])).collect(),
    })
}

pub const MODEL_FORMAT: &str = "ilearn-model";
pub const MODEL_VERSION: u32 = 1;

/// What a model file holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum ModelPayload {
    Iluga(Ensemble),
    Learnpp(LearnppState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub known_classes: BTreeSet<ClassId>,
    #[serde(flatten)]
    pub payload: ModelPayload,
}

impl ModelFile {
    pub fn new(payload: ModelPayload) -> Self {
        let (dim, known_classes) = match &payload {
            ModelPayload::Iluga(e) => (e.dim().unwrap_or(0), e.known_classes.clone()),
            ModelPayload::Learnpp(s) => (s.dim().unwrap_or(0), s.known_classes().clone()),
        };
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dim,
            known_classes,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let (dim, known) = match &file.payload {
            ModelPayload::Iluga(e) => {
                e.validate()?;
                (e.dim().unwrap_or(0), e.known_classes.clone())
            }
            ModelPayload::Learnpp(s) => (s.dim().unwrap_or(0), s.known_classes().clone()),
        };
        if dim != file.dim || known != file.known_classes {
            return Err(Error::Format("header disagrees with model contents".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn save_ensemble(ensemble: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    ModelFile::new(ModelPayload::Iluga(ensemble.clone())).save(path)
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    match ModelFile::load(path)?.payload {
        ModelPayload::Iluga(e) => Ok(e),
        ModelPayload::Learnpp(_) => Err(Error::Format("file holds a Learn++ model, not an ensemble".into())),
    }
}

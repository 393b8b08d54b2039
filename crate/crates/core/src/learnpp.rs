//! Learn++ and Learn++.MT baselines with one-vs-one SVM base learners.
//!
//! Per increment a distribution `D` over the new instances starts uniform.
//! Each round draws half the increment according to `D`, trains a fixed-kernel
//! SVM unit `h_t`, and measures its weighted error `ε_t`; rounds with
//! `ε_t ≥ ½` are redrawn. `h_t` votes with weight `ln(1/β_t)`, `β_t = ε_t/(1−ε_t)`.
//! The composite of every hypothesis so far then has weighted error `E_t`
//! (also required `< ½`), and instances it gets right are down-weighted by
//! `B_t = E_t/(1−E_t)`.
//!
//! Learn++.MT changes the vote, both at prediction time and for the composite
//! used during training: hypotheses that never saw class `c` lose weight in
//! proportion to how strongly the hypotheses that did see `c` agree on it.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{apply_scaler, fit_scaler, ClassId, Dataset, ScalerKind};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::multiclass::{argmax_known, class_pairs, MulticlassUnit, WeightedBinaryClassifier};
use crate::svm::{train_smo, SmoParams};

/// Errors are floored here so that vote weights stay finite.
const MIN_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakHypothesis {
    pub unit: MulticlassUnit,
    pub vote_weight: f64,
    pub trained_classes: BTreeSet<ClassId>,
    /// Weighted training error ε_t this hypothesis was accepted with.
    pub error: f64,
}

impl WeakHypothesis {
    pub fn predict(&self, x: &[f64]) -> ClassId {
        self.unit.predict(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearnppState {
    hypotheses: Vec<WeakHypothesis>,
    known_classes: BTreeSet<ClassId>,
}

impl LearnppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hypotheses(&self) -> &[WeakHypothesis] {
        &self.hypotheses
    }

    pub fn known_classes(&self) -> &BTreeSet<ClassId> {
        &self.known_classes
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.hypotheses.first().map(|h| h.unit.dim())
    }

    /// Keeps the first `len` hypotheses.
    pub fn truncate(&mut self, len: usize) {
        self.hypotheses.truncate(len);
        self.known_classes = self
            .hypotheses
            .iter()
            .flat_map(|h| h.trained_classes.iter().copied())
            .collect();
    }

    fn push(&mut self, h: WeakHypothesis) {
        self.known_classes.extend(h.trained_classes.iter().copied());
        self.hypotheses.push(h);
    }

    #[cfg(test)]
    pub(crate) fn from_hypotheses(hyps: Vec<WeakHypothesis>) -> Self {
        let mut s = Self::new();
        for h in hyps {
            s.push(h);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnppConfig {
    pub hypotheses_per_increment: usize,
    /// Fraction of the increment drawn for each base learner.
    pub subset_fraction: f64,
    /// Attempts per hypothesis before giving up.
    pub retry_budget: usize,
    pub c: f64,
    /// RBF width; `None` means `1 / dim`.
    pub gamma: Option<f64>,
    pub scaling: ScalerKind,
    pub smo: SmoParams,
    /// Vote rule for the training-time composite.
    pub combination: Combination,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    #[default]
    Plain,
    Mt,
}

impl Default for LearnppConfig {
    fn default() -> Self {
        Self {
            hypotheses_per_increment: 5,
            subset_fraction: 0.5,
            retry_budget: 10,
            c: 1.0,
            gamma: None,
            scaling: ScalerKind::MinMax,
            smo: SmoParams::default(),
            combination: Combination::Plain,
            seed: 0,
        }
    }
}

/// `ln(1/β)` with `β = ε/(1−ε)`, or `None` when `ε ≥ ½`.
pub fn vote_weight_for_error(error: f64) -> Option<f64> {
    if !(error < 0.5) {
        return None;
    }
    let e = error.max(MIN_ERROR);
    Some(((1.0 - e) / e).ln())
}

/// Draws `k` distinct indices with probability proportional to `weights`.
fn weighted_subset(weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    // Efraimidis–Spirakis: keep the k largest u^(1/w), compared as ln(u)/w
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / w.max(f64::MIN_POSITIVE), i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = keyed.into_iter().take(k).map(|(_, i)| i).collect();
    picked.sort_unstable();
    picked
}

fn train_base_unit(increment: &Dataset, subset: &Dataset, cfg: &LearnppConfig) -> Result<MulticlassUnit> {
    let scaler = fit_scaler(cfg.scaling, increment);
    let scaled = apply_scaler(&scaler, subset);
    let gamma = cfg.gamma.unwrap_or(1.0 / increment.dim() as f64);
    let kernel = KernelSpec::Rbf { gamma };
    let mut classifiers = Vec::new();
    for pair in class_pairs(scaled.classes()) {
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = scaled
            .samples()
            .iter()
            .filter(|s| s.label == pair.0 || s.label == pair.1)
            .map(|s| (s.features.clone(), if s.label == pair.1 { 1.0 } else { -1.0 }))
            .unzip();
        let model = train_smo(&x, &y, kernel, cfg.c, &cfg.smo, pair)?;
        classifiers.push(WeightedBinaryClassifier {
            model,
            weight_neg: 1.0,
            weight_pos: 1.0,
        });
    }
    MulticlassUnit::new(scaled.classes().clone(), scaler, classifiers)
}

/// Weighted vote over cached per-hypothesis predictions.
fn combine(preds: &[ClassId], weights: &[f64], known: &BTreeSet<ClassId>) -> ClassId {
    let top = known.iter().next_back().copied().unwrap_or(0);
    let mut scores = vec![0.0; top + 1];
    for (&p, &w) in preds.iter().zip(weights) {
        scores[p] += w;
    }
    argmax_known(&scores, known)
}

fn weighted_error(preds: &[ClassId], data: &Dataset, dist: &[f64]) -> f64 {
    preds
        .iter()
        .zip(data.samples())
        .zip(dist)
        .filter(|((&p, s), _)| p != s.label)
        .map(|(_, &d)| d)
        .sum()
}

/// Learns one increment, adding up to `cfg.hypotheses_per_increment` hypotheses.
///
/// Stops early once no draw within the retry budget is accepted, provided the
/// increment has already contributed at least one hypothesis.
pub fn train_increment_learnpp(state: &LearnppState, increment: &Dataset, cfg: &LearnppConfig) -> Result<LearnppState> {
    train_increment_observed(state, increment, cfg, |_| {})
}

/// As [`train_increment_learnpp`], calling `observe` with `D` after every update.
pub fn train_increment_observed(
    state: &LearnppState,
    increment: &Dataset,
    cfg: &LearnppConfig,
    mut observe: impl FnMut(&[f64]),
) -> Result<LearnppState> {
    if increment.classes().len() < 2 {
        return Err(Error::NotEnoughClasses(increment.classes().len()));
    }
    if let Some(dim) = state.dim() {
        if dim != increment.dim() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: increment.dim(),
            });
        }
    }
    if !(cfg.subset_fraction > 0.0 && cfg.subset_fraction <= 1.0) {
        return Err(Error::InvalidParameter("subset_fraction must lie in (0, 1]".into()));
    }

    let n = increment.len();
    let k = ((n as f64 * cfg.subset_fraction).round() as usize).clamp(2, n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, state.len() as u64));
    let mut out = state.clone();
    let mut dist = vec![1.0 / n as f64; n];

    // predictions of every hypothesis in `out` on this increment
    let mut cached: Vec<Vec<ClassId>> = out
        .hypotheses
        .iter()
        .map(|h| increment.samples().iter().map(|s| h.predict(&s.features)).collect())
        .collect();

    for _ in 0..cfg.hypotheses_per_increment {
        let mut accepted = None;
        for _ in 0..cfg.retry_budget.max(1) {
            let subset = increment.subset(&weighted_subset(&dist, k, &mut rng));
            if subset.classes().len() < 2 {
                continue;
            }
            let unit = match train_base_unit(increment, &subset, cfg) {
                Ok(u) => u,
                Err(Error::NotConverged { .. }) => continue,
                Err(e) => return Err(e),
            };
            let preds: Vec<ClassId> = increment.samples().iter().map(|s| unit.predict(&s.features)).collect();
            let eps = weighted_error(&preds, increment, &dist);
            let Some(vote_weight) = vote_weight_for_error(eps) else {
                continue;
            };

            let hyp = WeakHypothesis {
                trained_classes: unit.classes.clone(),
                unit,
                vote_weight,
                error: eps,
            };
            let mut weights: Vec<f64> = out.hypotheses.iter().map(|h| h.vote_weight).collect();
            weights.push(vote_weight);
            let mut trained: Vec<&BTreeSet<ClassId>> = out.hypotheses.iter().map(|h| &h.trained_classes).collect();
            trained.push(&hyp.trained_classes);
            let mut known = out.known_classes.clone();
            known.extend(hyp.trained_classes.iter().copied());
            let composite: Vec<ClassId> = (0..n)
                .map(|i| {
                    let row: Vec<ClassId> = cached.iter().map(|p| p[i]).chain([preds[i]]).collect();
                    match cfg.combination {
                        Combination::Plain => combine(&row, &weights, &known),
                        Combination::Mt => combine_mt(&row, &weights, &trained, &known),
                    }
                })
                .collect();
            let big_e = weighted_error(&composite, increment, &dist);
            if !(big_e < 0.5) {
                continue;
            }
            accepted = Some((hyp, preds, composite, big_e));
            break;
        }
        let Some((hyp, preds, composite, big_e)) = accepted else {
            // D has concentrated on samples no new hypothesis can fix; keep what we have
            if out.len() > state.len() {
                break;
            }
            return Err(Error::WeakLearnerExhausted {
                retries: cfg.retry_budget.max(1),
            });
        };

        let e = big_e.max(MIN_ERROR);
        let beta = e / (1.0 - e);
        for ((d, &p), s) in dist.iter_mut().zip(&composite).zip(increment.samples()) {
            if p == s.label {
                *d *= beta;
            }
        }
        let total: f64 = dist.iter().sum();
        for d in &mut dist {
            *d /= total;
        }
        observe(&dist);
        out.push(hyp);
        cached.push(preds);
    }
    Ok(out)
}

fn all_predictions(state: &LearnppState, x: &[f64]) -> Result<Vec<ClassId>> {
    let dim = state.dim().ok_or(Error::EmptyEnsemble)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    Ok(state.hypotheses.iter().map(|h| h.predict(x)).collect())
}

/// Weighted majority vote with weights `ln(1/β_t)`.
pub fn predict_learnpp(state: &LearnppState, x: &[f64]) -> Result<ClassId> {
    let preds = all_predictions(state, x)?;
    Ok(combine_learnpp(state, &preds))
}

pub fn combine_learnpp(state: &LearnppState, preds: &[ClassId]) -> ClassId {
    let weights: Vec<f64> = state.hypotheses.iter().map(|h| h.vote_weight).collect();
    combine(preds, &weights, &state.known_classes)
}

/// Learn++.MT vote (dynamic weight reduction for classes a hypothesis never saw).
pub fn predict_learnpp_mt(state: &LearnppState, x: &[f64]) -> Result<ClassId> {
    let preds = all_predictions(state, x)?;
    Ok(combine_learnpp_mt(state, &preds))
}

/// `P(c)` is the share of weight, among hypotheses trained on `c`, that votes
/// `c`. A hypothesis's vote is multiplied by `1 − P(c)` for every known class
/// `c` it was not trained on.
pub fn combine_learnpp_mt(state: &LearnppState, preds: &[ClassId]) -> ClassId {
    let weights: Vec<f64> = state.hypotheses.iter().map(|h| h.vote_weight).collect();
    let trained: Vec<&BTreeSet<ClassId>> = state.hypotheses.iter().map(|h| &h.trained_classes).collect();
    combine_mt(preds, &weights, &trained, &state.known_classes)
}

fn combine_mt(preds: &[ClassId], weights: &[f64], trained: &[&BTreeSet<ClassId>], known: &BTreeSet<ClassId>) -> ClassId {
    let top = known.iter().next_back().copied().unwrap_or(0);
    let mut confidence = vec![0.0; top + 1];
    for &c in known {
        let (mut for_c, mut total) = (0.0, 0.0);
        for ((t, &w), &p) in trained.iter().zip(weights).zip(preds) {
            if t.contains(&c) {
                total += w;
                if p == c {
                    for_c += w;
                }
            }
        }
        confidence[c] = if total > 0.0 { for_c / total } else { 0.0 };
    }
    let mut scores = vec![0.0; top + 1];
    for ((t, &w), &p) in trained.iter().zip(weights).zip(preds) {
        let mut w = w;
        for &c in known {
            if !t.contains(&c) {
                w *= 1.0 - confidence[c];
            }
        }
        scores[p] += w;
    }
    argmax_known(&scores, known)
}

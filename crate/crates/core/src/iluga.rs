//! Incremental learning with GA-optimized SVM units.
//!
//! Each new unit is built in two stages from a fresh Train/Val1/Val2 split
//! of the incoming increment:
//!
//! 1. for every class pair, a GA searches kernel family, kernel
//!    hyperparameters and the soft margin C; a candidate is scored by
//!    the accuracy on Val1 of an SVM trained on Train;
//! 2. a second GA searches one weight per binary decision, scored by the
//!    accuracy on Val2 of the whole ensemble (earlier units frozen) with the
//!    candidate unit added.
//!
//! Training only ever sees the increment being learned. Earlier units are
//! carried over unchanged.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::{apply_scaler, fit_scaler, tri_split, ClassId, Dataset, ScalerKind, TriSplit, DEFAULT_SPLIT};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, Gene, GeneSpec};
use crate::kernels::{CrossProducts, InnerProducts, KernelSpec};
use crate::multiclass::{
    add_unit, argmax_known, class_pairs, load_ensemble, potential_votes_dense, vote, Ensemble, MulticlassUnit,
    WeightedBinaryClassifier,
};
use crate::svm::{cross_decisions, solve_dual, BinarySvmModel, SmoParams};
use crate::Scaler;

/// Kernel families searched in stage 1, in gene-index order.
pub const FAMILIES: [&str; 4] = ["quadratic", "rbf", "polynomial", "tanh"];

/// Ranges of the stage-1 kernel genes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSearch {
    pub degrees: Vec<u32>,
    pub gamma: (f64, f64),
    pub coef: (f64, f64),
    pub tanh_scale: (f64, f64),
    pub tanh_offset: (f64, f64),
}

impl Default for KernelSearch {
    fn default() -> Self {
        Self {
            degrees: vec![2, 3, 4, 5],
            gamma: (1e-3, 10.0),
            coef: (0.0, 2.0),
            tanh_scale: (1e-3, 1.0),
            tanh_offset: (-2.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IlugaConfig {
    /// Units trained per increment (`m`).
    pub units_per_increment: usize,
    pub split_ratios: [f64; 3],
    pub stage1_ga: GaConfig,
    pub stage2_ga: GaConfig,
    /// Soft-margin search interval, searched on a log scale.
    pub c_range: (f64, f64),
    pub kernel_search: KernelSearch,
    pub scaling: ScalerKind,
    pub smo: SmoParams,
    pub seed: u64,
}

impl Default for IlugaConfig {
    fn default() -> Self {
        Self {
            units_per_increment: 2,
            split_ratios: DEFAULT_SPLIT,
            stage1_ga: GaConfig::default(),
            stage2_ga: GaConfig {
                seed_spread: Some(0.1),
                ..GaConfig::default()
            },
            c_range: (0.1, 1000.0),
            kernel_search: KernelSearch::default(),
            scaling: ScalerKind::MinMax,
            smo: SmoParams::default(),
            seed: 0,
        }
    }
}

impl IlugaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.units_per_increment < 1 {
            return Err(Error::InvalidParameter("units_per_increment must be >= 1".into()));
        }
        let (lo, hi) = self.c_range;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::InvalidParameter(format!("invalid c_range ({lo}, {hi})")));
        }
        if self.kernel_search.degrees.is_empty() || self.kernel_search.degrees.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter("polynomial degrees must be >= 2".into()));
        }
        self.stage1_ga.validate()?;
        self.stage2_ga.validate()
    }

    /// Stage-1 chromosome layout: family, degree, gamma, coef, tanh scale, tanh offset, C.
    pub fn stage1_genes(&self) -> Vec<GeneSpec> {
        let ks = &self.kernel_search;
        vec![
            GeneSpec::Categorical { count: FAMILIES.len() },
            GeneSpec::Categorical { count: ks.degrees.len() },
            GeneSpec::log_real(ks.gamma.0, ks.gamma.1),
            GeneSpec::real(ks.coef.0, ks.coef.1),
            GeneSpec::log_real(ks.tanh_scale.0, ks.tanh_scale.1),
            GeneSpec::real(ks.tanh_offset.0, ks.tanh_offset.1),
            GeneSpec::log_real(self.c_range.0, self.c_range.1),
        ]
    }

    pub fn decode_kernel(&self, genes: &[Gene]) -> (KernelSpec, f64) {
        let ks = &self.kernel_search;
        let coef = genes[3].as_real();
        let kernel = match genes[0].as_cat() {
            0 => KernelSpec::Quadratic { coef },
            1 => KernelSpec::Rbf { gamma: genes[2].as_real() },
            2 => KernelSpec::Polynomial {
                degree: ks.degrees[genes[1].as_cat()],
                coef,
            },
            _ => KernelSpec::Tanh {
                scale: genes[4].as_real(),
                offset: genes[5].as_real(),
            },
        };
        (kernel, genes[6].as_real())
    }
}

/// Stage-1 result: the best SVM for every class pair, plus the unit's scaler.
#[derive(Debug, Clone)]
pub struct Stage1Output {
    pub scaler: Scaler,
    pub models: Vec<BinarySvmModel>,
    /// Val1 pair accuracy of each returned model.
    pub pair_fitness: Vec<f64>,
    /// Per-generation best fitness of each pair's GA.
    pub histories: Vec<Vec<f64>>,
}

fn pair_rows(ds: &Dataset, pair: (ClassId, ClassId)) -> (Vec<Vec<f64>>, Vec<f64>) {
    ds.samples()
        .iter()
        .filter(|s| s.label == pair.0 || s.label == pair.1)
        .map(|s| (s.features.clone(), if s.label == pair.1 { 1.0 } else { -1.0 }))
        .unzip()
}

struct PairSearch {
    pair: (ClassId, ClassId),
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    inner: InnerProducts,
    val_y: Vec<f64>,
    cross: CrossProducts,
}

impl PairSearch {
    fn new(train: &Dataset, val1: &Dataset, pair: (ClassId, ClassId)) -> Result<Self> {
        let (x, y) = pair_rows(train, pair);
        let (vx, val_y) = pair_rows(val1, pair);
        for (name, labels) in [("Train", &y), ("Val1", &val_y)] {
            if !labels.iter().any(|&v| v > 0.0) || !labels.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} lacks samples of class pair ({}, {})",
                    pair.0, pair.1
                )));
            }
        }
        Ok(Self {
            pair,
            inner: InnerProducts::new(&x),
            cross: CrossProducts::new(&vx, &x),
            x,
            y,
            val_y,
        })
    }

    /// Val1 accuracy, or −∞ when the kernel is invalid or SMO fails to converge.
    fn fitness(&self, kernel: &KernelSpec, c: f64, smo: &SmoParams) -> f64 {
        if kernel.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        let gram = self.inner.gram(kernel);
        let sol = solve_dual(&gram, &self.y, c, smo);
        if !sol.converged || !sol.b.is_finite() {
            return f64::NEG_INFINITY;
        }
        let dec = cross_decisions(&self.cross, kernel, &self.y, &sol);
        let correct = dec
            .iter()
            .zip(&self.val_y)
            .filter(|(&d, &t)| (d >= 0.0) == (t > 0.0))
            .count();
        correct as f64 / self.val_y.len() as f64
    }

    fn train(&self, kernel: KernelSpec, c: f64, smo: &SmoParams) -> BinarySvmModel {
        let gram = self.inner.gram(&kernel);
        let sol = solve_dual(&gram, &self.y, c, smo);
        BinarySvmModel::from_solution(&self.x, &self.y, &sol, kernel, c, self.pair)
    }
}

fn scaled_split(split: &TriSplit, kind: ScalerKind) -> Result<(Scaler, TriSplit)> {
    let whole = Dataset::concat(&[&split.train, &split.val1, &split.val2])?;
    let scaler = fit_scaler(kind, &whole);
    let scaled = TriSplit {
        train: apply_scaler(&scaler, &split.train),
        val1: apply_scaler(&scaler, &split.val1),
        val2: apply_scaler(&scaler, &split.val2),
    };
    Ok((scaler, scaled))
}

/// Stage 1: one GA per class pair over kernel and soft margin.
pub fn train_unit_stage1(split: &TriSplit, cfg: &IlugaConfig, seed: u64) -> Result<Stage1Output> {
    cfg.validate()?;
    let classes = split.train.classes();
    if classes.len() < 2 {
        return Err(Error::NotEnoughClasses(classes.len()));
    }
    let (scaler, scaled) = scaled_split(split, cfg.scaling)?;
    let genes = cfg.stage1_genes();
    let pairs = class_pairs(classes);

    let search_pair = |(idx, &pair): (usize, &(ClassId, ClassId))| -> Result<(BinarySvmModel, f64, Vec<f64>)> {
        let search = PairSearch::new(&scaled.train, &scaled.val1, pair)?;
        let ga_cfg = cfg.stage1_ga.with_seed(derive_seed(seed, idx as u64));
        let out = run_ga(&ga_cfg, &genes, &[], |g| {
            let (kernel, c) = cfg.decode_kernel(g);
            search.fitness(&kernel, c, &cfg.smo)
        })?;
        let best = out.best.fitness.unwrap_or(f64::NEG_INFINITY);
        if best == f64::NEG_INFINITY {
            return Err(Error::NoUsableModel(pair.0, pair.1));
        }
        let (kernel, c) = cfg.decode_kernel(&out.best.genes);
        Ok((search.train(kernel, c, &cfg.smo), best, out.history))
    };

    let results: Vec<Result<(BinarySvmModel, f64, Vec<f64>)>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            pairs.par_iter().enumerate().map(search_pair).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            pairs.iter().enumerate().map(search_pair).collect()
        }
    };

    let mut out = Stage1Output {
        scaler,
        models: Vec::with_capacity(pairs.len()),
        pair_fitness: Vec::with_capacity(pairs.len()),
        histories: Vec::with_capacity(pairs.len()),
    };
    for r in results {
        let (model, fit, hist) = r?;
        out.models.push(model);
        out.pair_fitness.push(fit);
        out.histories.push(hist);
    }
    Ok(out)
}

/// Val2 accuracy of `prior` plus a candidate unit, as a function of the
/// candidate's decision weights. Binary decisions are computed once.
pub struct WeightFitness {
    pv: Vec<usize>,
    known: std::collections::BTreeSet<ClassId>,
    pairs: Vec<(ClassId, ClassId)>,
    base_scores: Vec<Vec<f64>>,
    sides: Vec<Vec<bool>>,
    labels: Vec<ClassId>,
}

impl WeightFitness {
    pub fn new(prior: &Ensemble, candidate: &MulticlassUnit, val2: &Dataset) -> Self {
        let mut units: Vec<&MulticlassUnit> = prior.units().iter().collect();
        units.push(candidate);
        let pv = potential_votes_dense(&units);
        let mut known = prior.known_classes().clone();
        known.extend(candidate.classes.iter().copied());

        let mut base_scores = Vec::with_capacity(val2.len());
        let mut sides = Vec::with_capacity(val2.len());
        for s in val2.samples() {
            let mut scores = vec![0.0; pv.len()];
            for u in prior.units() {
                for (class, w) in u.decisions(&s.features) {
                    scores[class] += w / pv[class] as f64;
                }
            }
            base_scores.push(scores);
            sides.push(candidate.sides(&s.features));
        }
        Self {
            pv,
            known,
            pairs: candidate.classifiers.iter().map(|c| c.pair()).collect(),
            base_scores,
            sides,
            labels: val2.samples().iter().map(|s| s.label).collect(),
        }
    }

    /// Genes are `[w_neg(0), w_pos(0), w_neg(1), w_pos(1), ...]`.
    pub fn accuracy(&self, weights: &[f64]) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let mut scores = vec![0.0; self.pv.len()];
        let mut correct = 0usize;
        for ((base, sides), &label) in self.base_scores.iter().zip(&self.sides).zip(&self.labels) {
            scores.copy_from_slice(base);
            for (k, (&pos, &(neg_c, pos_c))) in sides.iter().zip(&self.pairs).enumerate() {
                let (class, w) = if pos {
                    (pos_c, weights[2 * k + 1])
                } else {
                    (neg_c, weights[2 * k])
                };
                scores[class] += w / self.pv[class] as f64;
            }
            if argmax_known(&scores, &self.known) == label {
                correct += 1;
            }
        }
        correct as f64 / self.labels.len() as f64
    }
}

pub fn weights_of(unit: &MulticlassUnit) -> Vec<f64> {
    unit.classifiers
        .iter()
        .flat_map(|c| [c.weight_neg, c.weight_pos])
        .collect()
}

/// Stage 2: GA over the 2·(pair count) decision weights in [0, 1].
///
/// Generation 0 always contains the all-ones chromosome. Returns the unit and its Val2 fitness.
pub fn train_unit_stage2(
    prior: &Ensemble,
    stage1: Stage1Output,
    split: &TriSplit,
    cfg: &IlugaConfig,
    seed: u64,
) -> Result<(MulticlassUnit, f64)> {
    if split.val2.is_empty() {
        return Err(Error::NoSamples);
    }
    let classes = stage1
        .models
        .iter()
        .flat_map(|m| [m.pair.0, m.pair.1])
        .collect();
    let classifiers = stage1
        .models
        .into_iter()
        .map(|model| WeightedBinaryClassifier {
            model,
            weight_neg: 1.0,
            weight_pos: 1.0,
        })
        .collect();
    let mut unit = MulticlassUnit::new(classes, stage1.scaler, classifiers)?;

    let fitness = WeightFitness::new(prior, &unit, &split.val2);
    let n_genes = 2 * unit.classifiers.len();
    let spec = vec![GeneSpec::real(0.0, 1.0); n_genes];
    let ones = vec![Gene::Real(1.0); n_genes];
    // Accuracy first; among equal accuracies prefer larger weights, so decisions
    // are only damped when that fixes a Val2 sample. The bonus stays below one sample.
    let bonus = 0.5 / (split.val2.len() as f64 * n_genes as f64);
    let out = run_ga(&cfg.stage2_ga.with_seed(seed), &spec, &[ones], |g| {
        let w: Vec<f64> = g.iter().map(Gene::as_real).collect();
        fitness.accuracy(&w) + bonus * w.iter().sum::<f64>()
    })?;

    for (k, c) in unit.classifiers.iter_mut().enumerate() {
        c.weight_neg = out.best.genes[2 * k].as_real();
        c.weight_pos = out.best.genes[2 * k + 1].as_real();
    }
    let acc = fitness.accuracy(&weights_of(&unit));
    Ok((unit, acc))
}

/// Learns one data increment: `m` times split, run both stages, append the unit.
///
/// The input ensemble is not modified; its units appear unchanged at the front of the result.
pub fn learn_increment(ensemble: &Ensemble, increment: &Dataset, cfg: &IlugaConfig) -> Result<Ensemble> {
    cfg.validate()?;
    if increment.classes().len() < 2 {
        return Err(Error::NotEnoughClasses(increment.classes().len()));
    }
    if let Some(dim) = ensemble.dim() {
        if dim != increment.dim() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: increment.dim(),
            });
        }
    }
    let mut out = ensemble.clone();
    for _ in 0..cfg.units_per_increment {
        // unit index makes every split and GA stream distinct across increments
        let unit_seed = derive_seed(cfg.seed, out.units().len() as u64);
        let split = tri_split(increment, cfg.split_ratios, derive_seed(unit_seed, 0))?;
        let stage1 = train_unit_stage1(&split, cfg, derive_seed(unit_seed, 1))?;
        let (unit, _) = train_unit_stage2(&out, stage1, &split, cfg, derive_seed(unit_seed, 2))?;
        out = add_unit(out, unit);
    }
    Ok(out)
}

/// Resumes from a saved ensemble file and learns one more increment.
pub fn learn_increment_from_file(path: impl AsRef<Path>, increment: &Dataset, cfg: &IlugaConfig) -> Result<Ensemble> {
    learn_increment(&load_ensemble(path)?, increment, cfg)
}

pub fn classify(ensemble: &Ensemble, x: &[f64]) -> Result<ClassId> {
    Ok(vote(ensemble, x)?.predicted)
}

//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use ilearn::ga::{run_ga, GaConfig, Gene, GeneSpec};
use ilearn::kernels::{gram_matrix, kernel_eval, KernelSpec};
use ilearn::learnpp::{predict_learnpp, predict_learnpp_mt, train_increment_learnpp, train_increment_observed};
use ilearn::multiclass::{add_unit, vote, Ensemble, ModelFile, ModelPayload, MulticlassUnit, WeightedBinaryClassifier};
use ilearn::svm::{solve_dual, BinarySvmModel, SmoParams};
use ilearn::{ClassId, Dataset, LearnppConfig, Sample, Scaler, ScalerKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KKT_TOL: f64 = 2e-3;
pub const PSD_TOL: f64 = 1e-9;
pub const LABEL_SWAP_TOL: f64 = 1e-9;
pub const DIST_SUM_TOL: f64 = 1e-9;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn fail(msg: String) -> Result<(), TestCaseError> {
    Err(TestCaseError::fail(msg))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, span: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-span..span)).collect())
        .collect()
}

pub fn mercer_kernel(rng: &mut ChaCha8Rng) -> KernelSpec {
    match rng.random_range(0..4) {
        0 => KernelSpec::Linear,
        1 => KernelSpec::Quadratic {
            coef: rng.random_range(0.0..2.0),
        },
        2 => KernelSpec::Polynomial {
            degree: rng.random_range(2..=5),
            coef: rng.random_range(0.0..2.0),
        },
        _ => KernelSpec::Rbf {
            gamma: rng.random_range(0.01..5.0),
        },
    }
}

#[derive(Debug, Clone)]
pub struct SvmProblem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub kernel: KernelSpec,
    pub c: f64,
}

pub fn svm_problem(seed: u64) -> SvmProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..14);
    let dim = rng.random_range(1..4);
    let x = random_points(&mut rng, n, dim, 1.0);
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    SvmProblem {
        x,
        y,
        kernel: mercer_kernel(&mut rng),
        c: rng.random_range(0.1..10.0),
    }
}

/// Optimality conditions of the soft-margin dual after SMO.
pub fn check_kkt(p: &SvmProblem) -> Result<(), TestCaseError> {
    let gram = gram_matrix(&p.kernel, &p.x).unwrap();
    let sol = solve_dual(&gram, &p.y, p.c, &SmoParams::default());
    prop_assert!(sol.converged, "not converged");
    let n = p.y.len();
    let eq: f64 = sol.alpha.iter().zip(&p.y).map(|(a, y)| a * y).sum();
    prop_assert!(eq.abs() < 1e-9, "Σαy = {eq}");
    for i in 0..n {
        let a = sol.alpha[i];
        prop_assert!((-1e-12..=p.c + 1e-12).contains(&a), "α out of box: {a}");
        let f: f64 = (0..n).map(|j| sol.alpha[j] * p.y[j] * gram.get(i, j)).sum::<f64>() + sol.b;
        let m = p.y[i] * f;
        let bad = if a <= 1e-8 {
            m < 1.0 - KKT_TOL
        } else if a >= p.c - 1e-8 {
            m > 1.0 + KKT_TOL
        } else {
            (m - 1.0).abs() > KKT_TOL
        };
        if bad {
            return fail(format!("KKT violated at {i}: α={a}, y·f={m}, C={}", p.c));
        }
    }
    Ok(())
}

/// Swapping the labels negates the learned decision function.
pub fn check_label_swap(p: &SvmProblem) -> Result<(), TestCaseError> {
    let gram = gram_matrix(&p.kernel, &p.x).unwrap();
    let neg: Vec<f64> = p.y.iter().map(|v| -v).collect();
    let a = solve_dual(&gram, &p.y, p.c, &SmoParams::default());
    let b = solve_dual(&gram, &neg, p.c, &SmoParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(p.x.len() as u64);
    let probes = random_points(&mut rng, 10, p.x[0].len(), 1.5);
    for q in probes.iter().chain(&p.x) {
        let fa: f64 = a
            .alpha
            .iter()
            .zip(&p.x)
            .zip(&p.y)
            .map(|((al, xi), yi)| al * yi * kernel_eval(&p.kernel, xi, q).unwrap())
            .sum::<f64>()
            + a.b;
        let fb: f64 = b
            .alpha
            .iter()
            .zip(&p.x)
            .zip(&neg)
            .map(|((al, xi), yi)| al * yi * kernel_eval(&p.kernel, xi, q).unwrap())
            .sum::<f64>()
            + b.b;
        prop_assert!((fa + fb).abs() <= LABEL_SWAP_TOL, "f={fa}, swapped={fb}");
    }
    Ok(())
}

pub fn check_gram_psd(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..11);
    let dim = rng.random_range(1..4);
    let xs = random_points(&mut rng, n, dim, 1.0);
    let kernel = mercer_kernel(&mut rng);
    let g = gram_matrix(&kernel, &xs).unwrap();
    let dense: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g.get(i, j)).collect()).collect();
    for i in 0..n {
        for j in 0..n {
            prop_assert_eq!(dense[i][j], dense[j][i]);
            prop_assert_eq!(dense[i][j], kernel_eval(&kernel, &xs[i], &xs[j]).unwrap());
        }
    }
    let min = jacobi_eigenvalues(dense).into_iter().fold(f64::INFINITY, f64::min);
    prop_assert!(min >= -PSD_TOL, "{kernel:?}: min eigenvalue {min}");
    Ok(())
}

pub fn check_kernel_ranges(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..5);
    let pts = random_points(&mut rng, 2, dim, 1.5);
    let rbf = KernelSpec::Rbf {
        gamma: rng.random_range(1e-3..10.0),
    };
    let v = kernel_eval(&rbf, &pts[0], &pts[1]).unwrap();
    prop_assert!(v > 0.0 && v <= 1.0, "rbf {v}");
    prop_assert_eq!(kernel_eval(&rbf, &pts[0], &pts[0]).unwrap(), 1.0);
    let tanh = KernelSpec::Tanh {
        scale: rng.random_range(1e-3..1.0),
        offset: rng.random_range(-2.0..0.0),
    };
    let t = kernel_eval(&tanh, &pts[0], &pts[1]).unwrap();
    prop_assert!(t > -1.0 && t < 1.0, "tanh {t}");
    Ok(())
}

fn random_model(rng: &mut ChaCha8Rng, pair: (ClassId, ClassId), dim: usize) -> BinarySvmModel {
    let n_sv = rng.random_range(1..4);
    BinarySvmModel {
        kernel: if rng.random_bool(0.5) {
            KernelSpec::Linear
        } else {
            KernelSpec::Rbf { gamma: 0.7 }
        },
        c: 1.0,
        b: rng.random_range(-0.5..0.5),
        pair,
        sv: random_points(rng, n_sv, dim, 1.0),
        alpha_y: (0..n_sv).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

fn random_unit(rng: &mut ChaCha8Rng, classes: &BTreeSet<ClassId>, dim: usize, unit_weights: bool) -> MulticlassUnit {
    let list: Vec<ClassId> = classes.iter().copied().collect();
    let mut classifiers = Vec::new();
    for (i, &a) in list.iter().enumerate() {
        for &b in &list[i + 1..] {
            let model = random_model(rng, (a, b), dim);
            let (weight_neg, weight_pos) = if unit_weights {
                (1.0, 1.0)
            } else {
                (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))
            };
            classifiers.push(WeightedBinaryClassifier {
                model,
                weight_neg,
                weight_pos,
            });
        }
    }
    MulticlassUnit::new(classes.clone(), Scaler::Fixed { divisor: 1.0 }, classifiers).unwrap()
}

fn random_classes(rng: &mut ChaCha8Rng) -> BTreeSet<ClassId> {
    let k = rng.random_range(2..5);
    let mut s = BTreeSet::new();
    while s.len() < k {
        s.insert(rng.random_range(0..6));
    }
    s
}

pub const VOTE_DIM: usize = 2;

pub fn random_ensemble(seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Ensemble::new();
    for _ in 0..rng.random_range(1..5) {
        let classes = random_classes(&mut rng);
        e = add_unit(e, random_unit(&mut rng, &classes, VOTE_DIM, false));
    }
    e
}

pub fn probes(seed: u64, n: usize) -> Vec<Vec<f64>> {
    random_points(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed), n, VOTE_DIM, 2.0)
}

fn scaled(e: &Ensemble, factor: f64) -> Ensemble {
    let mut out = Ensemble::new();
    for u in e.units() {
        let mut u = u.clone();
        for c in &mut u.classifiers {
            c.weight_neg *= factor;
            c.weight_pos *= factor;
        }
        out = add_unit(out, u);
    }
    out
}

pub fn check_scaling_invariance(seed: u64, factor: f64) -> Result<(), TestCaseError> {
    let e = random_ensemble(seed);
    let s = scaled(&e, factor);
    for x in probes(seed, 30) {
        prop_assert_eq!(vote(&e, &x).unwrap().predicted, vote(&s, &x).unwrap().predicted);
    }
    Ok(())
}

/// Unweighted one-vs-one majority, ties to the lowest class id.
fn plain_majority(units: &[MulticlassUnit], x: &[f64]) -> ClassId {
    let mut counts = std::collections::BTreeMap::<ClassId, usize>::new();
    for u in units {
        for c in &u.classifiers {
            *counts.entry(c.model.predict(x).unwrap()).or_default() += 1;
        }
    }
    let best = counts.values().copied().max().unwrap();
    *counts.iter().find(|(_, &n)| n == best).unwrap().0
}

pub fn check_plain_majority(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = random_classes(&mut rng);
    let mut e = Ensemble::new();
    let mut units = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let u = random_unit(&mut rng, &classes, VOTE_DIM, true);
        units.push(u.clone());
        e = add_unit(e, u);
    }
    for x in probes(seed, 30) {
        prop_assert_eq!(vote(&e, &x).unwrap().predicted, plain_majority(&units, &x));
    }
    Ok(())
}

pub fn check_roundtrip(seed: u64) -> Result<(), TestCaseError> {
    let e = random_ensemble(seed);
    let json = ModelFile::new(ModelPayload::Iluga(e.clone())).to_json().unwrap();
    let back = match ModelFile::from_json(&json).unwrap().payload {
        ModelPayload::Iluga(b) => b,
        other => return fail(format!("wrong payload {other:?}")),
    };
    for x in probes(seed, 100) {
        prop_assert_eq!(vote(&e, &x).unwrap(), vote(&back, &x).unwrap());
    }
    Ok(())
}

pub fn check_ga(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec: Vec<GeneSpec> = (0..rng.random_range(1..6))
        .map(|_| match rng.random_range(0..3) {
            0 => GeneSpec::Categorical {
                count: rng.random_range(2..6),
            },
            1 => GeneSpec::real(-1.0, rng.random_range(0.0..3.0)),
            _ => GeneSpec::log_real(1e-3, rng.random_range(1.0..100.0)),
        })
        .collect();
    let targets: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let escaped = AtomicBool::new(false);
    let fitness = |g: &[Gene]| {
        if !g.iter().zip(&spec).all(|(g, s)| s.contains(g)) {
            escaped.store(true, Ordering::Relaxed);
        }
        -g.iter()
            .zip(&targets)
            .map(|(g, t)| match g {
                Gene::Cat(v) => (*v as f64 / 5.0 - t).powi(2),
                Gene::Real(v) => (v.abs().ln_1p() - t).powi(2),
            })
            .sum::<f64>()
    };
    let cfg = GaConfig {
        population_size: rng.random_range(4..16),
        generations: rng.random_range(1..10),
        seed,
        ..GaConfig::default()
    };
    let a = run_ga(&cfg, &spec, &[], fitness).unwrap();
    let b = run_ga(&cfg, &spec, &[], fitness).unwrap();
    prop_assert!(!escaped.load(Ordering::Relaxed), "gene left its spec");
    prop_assert!(a.history.windows(2).all(|w| w[1] >= w[0]), "history {:?}", a.history);
    prop_assert_eq!(a.best.fitness, a.history.last().copied());
    prop_assert_eq!(&a.best.genes, &b.best.genes);
    prop_assert_eq!(&a.history, &b.history);
    Ok(())
}

pub fn blobs(seed: u64, classes: &[ClassId], per_class: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for &c in classes {
        let center = [(c % 3) as f64 * 3.0, (c / 3) as f64 * 3.0];
        for _ in 0..per_class {
            samples.push(Sample {
                features: center.iter().map(|m| m + rng.random_range(-1.5..1.5)).collect(),
                label: c,
            });
        }
    }
    Dataset::new(samples, 2).unwrap()
}

pub fn learnpp_cfg(seed: u64) -> LearnppConfig {
    LearnppConfig {
        hypotheses_per_increment: 4,
        scaling: ScalerKind::MinMax,
        seed,
        ..LearnppConfig::default()
    }
}

pub fn check_distribution(seed: u64) -> Result<(), TestCaseError> {
    let data = blobs(seed, &[0, 1, 2], 15);
    let mut bad = None;
    let mut updates = 0;
    let out = train_increment_observed(&Default::default(), &data, &learnpp_cfg(seed), |d| {
        updates += 1;
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL || d.iter().any(|&v| !(v >= 0.0)) {
            bad = Some(sum);
        }
    });
    prop_assert!(out.is_ok(), "{:?}", out.err());
    prop_assert!(updates >= 1);
    prop_assert!(bad.is_none(), "D sums to {:?}", bad);
    for h in out.unwrap().hypotheses() {
        prop_assert!(h.error < 0.5 && h.vote_weight.is_finite());
    }
    Ok(())
}

pub fn check_mt_matches_plain(seed: u64) -> Result<(), TestCaseError> {
    let data = blobs(seed, &[0, 1, 2], 30);
    let state = train_increment_learnpp(&Default::default(), &data, &learnpp_cfg(seed)).unwrap();
    let known = state.known_classes().clone();
    prop_assume!(state.hypotheses().iter().all(|h| h.trained_classes == known));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in random_points(&mut rng, 30, 2, 6.0) {
        prop_assert_eq!(predict_learnpp(&state, &x).unwrap(), predict_learnpp_mt(&state, &x).unwrap());
    }
    Ok(())
}

/// Runs each property for `cases` random seeds; used by the acceptance runner.
pub fn run_property_suites(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    type Check = fn(u64) -> Result<(), TestCaseError>;
    let suites: [(&'static str, Check); 9] = [
        ("kkt after training", |s| check_kkt(&svm_problem(s))),
        ("label swap negates decision", |s| check_label_swap(&svm_problem(s))),
        ("gram symmetric and psd", check_gram_psd),
        ("kernel value ranges", check_kernel_ranges),
        ("vote scaling invariance", |s| check_scaling_invariance(s, 1.0 + (s % 97) as f64 * 0.37)),
        ("normalized vote equals plain majority", check_plain_majority),
        ("ga elitism and determinism", check_ga),
        ("learn++ distribution normalized", check_distribution),
        ("model round trip preserves vote", check_roundtrip),
    ];
    suites
        .iter()
        .map(|&(name, check)| {
            let config = Config {
                cases,
                failure_persistence: None,
                ..Config::default()
            };
            let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
            let r = runner.run(&any::<u64>(), check).map_err(|e| e.to_string());
            (name, r)
        })
        .collect()
}

pub const ORACLE_OBJECTIVE_TOL: f64 = 1e-3;
pub const TWO_POINT_TOL: f64 = 1e-6;

/// Feasible-set grid search for a 4-point dual; the last α follows from Σαy = 0.
/// A coarse grid is refined once around its best point.
pub fn brute_force_dual4(gram: &[[f64; 4]; 4], y: &[f64; 4], c: f64) -> f64 {
    let objective = |a: &[f64; 4]| {
        let mut quad = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                quad += a[i] * a[j] * y[i] * y[j] * gram[i][j];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let complete = |a0: f64, a1: f64, a2: f64| {
        let a3 = -y[3] * (a0 * y[0] + a1 * y[1] + a2 * y[2]);
        (-1e-12..=c + 1e-12).contains(&a3).then_some([a0, a1, a2, a3.clamp(0.0, c)])
    };
    let search = |lo: [f64; 3], hi: [f64; 3], steps: usize| {
        let mut best = (f64::NEG_INFINITY, [0.0; 3]);
        let at = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / steps as f64;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let (a0, a1, a2) = (at(0, i), at(1, j), at(2, k));
                    if let Some(a) = complete(a0, a1, a2) {
                        let v = objective(&a);
                        if v > best.0 {
                            best = (v, [a0, a1, a2]);
                        }
                    }
                }
            }
        }
        best
    };
    let coarse = search([0.0; 3], [c; 3], 100);
    let h = c / 100.0;
    let lo = coarse.1.map(|v| (v - 2.0 * h).max(0.0));
    let hi = coarse.1.map(|v| (v + 2.0 * h).min(c));
    search(lo, hi, 80).0.max(coarse.0)
}

#[derive(Debug, Clone)]
pub struct FourPoint {
    pub x: Vec<Vec<f64>>,
    pub y: [f64; 4],
    pub kernel: KernelSpec,
    pub c: f64,
}

pub fn four_point_problem(seed: u64) -> FourPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_points(&mut rng, 4, 2, 2.0);
    let mut y = [1.0, -1.0, 1.0, -1.0];
    for v in &mut y[2..] {
        if rng.random_bool(0.5) {
            *v = -*v;
        }
    }
    let kernel = if rng.random_bool(0.5) {
        KernelSpec::Linear
    } else {
        KernelSpec::Rbf {
            gamma: rng.random_range(0.1..2.0),
        }
    };
    FourPoint {
        x,
        y,
        kernel,
        c: rng.random_range(0.2..2.0),
    }
}

/// `(smo objective, grid objective)`.
pub fn oracle_gap(p: &FourPoint) -> (f64, f64) {
    let g = gram_matrix(&p.kernel, &p.x).unwrap();
    let mut dense = [[0.0; 4]; 4];
    for (i, row) in dense.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = g.get(i, j);
        }
    }
    let sol = solve_dual(&g, &p.y, p.c, &SmoParams::default());
    let smo = ilearn::svm::dual_objective(&g, &p.y, &sol.alpha);
    (smo, brute_force_dual4(&dense, &p.y, p.c))
}

/// Points ±1 on a line with C large: α = ½ for both, b = 0 and
/// decision values ±1 at the points.
pub fn two_point_errors() -> Vec<f64> {
    let x = vec![vec![-1.0], vec![1.0]];
    let y = [-1.0, 1.0];
    let m = ilearn::train_smo(&x, &y, KernelSpec::Linear, 100.0, &SmoParams::default(), (0, 1)).unwrap();
    let g = gram_matrix(&KernelSpec::Linear, &x).unwrap();
    let sol = solve_dual(&g, &y, 100.0, &SmoParams::default());
    vec![
        (sol.alpha[0] - 0.5).abs(),
        (sol.alpha[1] - 0.5).abs(),
        sol.b.abs(),
        (m.decision_value(&[1.0]).unwrap() - 1.0).abs(),
        (m.decision_value(&[-1.0]).unwrap() + 1.0).abs(),
        m.decision_value(&[0.0]).unwrap().abs(),
    ]
}

fn small_iluga_cfg(seed: u64) -> ilearn::IlugaConfig {
    let ga = GaConfig {
        population_size: 8,
        generations: 4,
        ..GaConfig::default()
    };
    ilearn::IlugaConfig {
        stage1_ga: ga,
        stage2_ga: GaConfig {
            seed_spread: Some(0.1),
            ..ga
        },
        scaling: ScalerKind::MinMax,
        seed,
        ..ilearn::IlugaConfig::default()
    }
}

pub fn two_increments() -> (Ensemble, Ensemble) {
    let e1 = ilearn::learn_increment(&Ensemble::new(), &blobs(1, &[0, 1, 2], 40), &small_iluga_cfg(1)).unwrap();
    let e2 = ilearn::learn_increment(&e1, &blobs(2, &[1, 3, 4], 40), &small_iluga_cfg(2)).unwrap();
    (e1, e2)
}


/// Prior units byte-identical and, alone, voting as before; new classes learned.
pub fn audit_prior_units() -> Result<(), String> {
    let (e1, e2) = two_increments();
    if e2.units().len() != e1.units().len() + 2 {
        return Err(format!("{} units after increment", e2.units().len()));
    }
    for (k, (a, b)) in e1.units().iter().zip(e2.units()).enumerate() {
        if serde_json::to_string(a).unwrap() != serde_json::to_string(b).unwrap() {
            return Err(format!("unit {k} changed"));
        }
    }
    let rebuilt = e2.units()[..e1.units().len()].iter().cloned().fold(Ensemble::new(), add_unit);
    for x in probes(9, 50) {
        if vote(&rebuilt, &x).unwrap() != vote(&e1, &x).unwrap() {
            return Err(format!("prior vote changed at {x:?}"));
        }
    }
    Ok(())
}

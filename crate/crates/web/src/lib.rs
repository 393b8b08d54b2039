//! wasm-bindgen front end for the demo page in `www/`.
//!
//! Every export works on flat `f64` arrays of 2-D points in the unit square
//! and returns row-major grids of `res × res` cells, top row first.

use ilearn::datasets::DEFAULT_SPLIT;
use ilearn::ga::{run_ga, GaConfig, GeneSpec};
use ilearn::{classify, learn_increment, train_smo, ClassId, Dataset, Ensemble, IlugaConfig, KernelSpec, Sample, ScalerKind, SmoParams};
use wasm_bindgen::prelude::*;

const MAX_RES: usize = 200;

fn grid_points(res: usize) -> impl Iterator<Item = [f64; 2]> {
    let step = 1.0 / (res.max(2) - 1) as f64;
    (0..res).flat_map(move |r| (0..res).map(move |c| [c as f64 * step, 1.0 - r as f64 * step]))
}

fn points(xy: &[f64]) -> Result<Vec<Vec<f64>>, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("coordinates must come in x, y pairs".into());
    }
    Ok(xy.chunks(2).map(|p| p.to_vec()).collect())
}

fn check_res(res: usize) -> Result<(), String> {
    if (2..=MAX_RES).contains(&res) {
        Ok(())
    } else {
        Err(format!("grid resolution must be in 2..={MAX_RES}"))
    }
}

pub fn parse_kernel(name: &str, param: f64) -> Result<KernelSpec, String> {
    Ok(match name {
        "linear" => KernelSpec::Linear,
        "quadratic" => KernelSpec::Quadratic { coef: 1.0 },
        "cubic" => KernelSpec::Polynomial { degree: 3, coef: 1.0 },
        "rbf" => KernelSpec::Rbf { gamma: param },
        _ => return Err(format!("unknown kernel {name:?}")),
    })
}

/// Decision values of a binary SVM trained on `xy` with labels ±1.
pub fn svm_surface_impl(xy: &[f64], labels: &[f64], kernel: &str, param: f64, c: f64, res: usize) -> Result<Vec<f64>, String> {
    check_res(res)?;
    let x = points(xy)?;
    if x.len() != labels.len() {
        return Err("one label per point".into());
    }
    let kernel = parse_kernel(kernel, param)?;
    let model = train_smo(&x, labels, kernel, c, &SmoParams::default(), (0, 1)).map_err(|e| e.to_string())?;
    Ok(grid_points(res).map(|p| model.decision_value_unchecked(&p)).collect())
}

/// Maximizes a test function on [-5, 5]²; returns the best fitness after each generation.
pub fn ga_trace_impl(function: &str, population: usize, generations: usize, seed: u64) -> Result<Vec<f64>, String> {
    let f: fn(f64, f64) -> f64 = match function {
        "sphere" => |x, y| -(x * x + y * y),
        "rastrigin" => |x, y| {
            let tau = std::f64::consts::TAU;
            -(20.0 + x * x - 10.0 * (tau * x).cos() + y * y - 10.0 * (tau * y).cos())
        },
        "himmelblau" => |x, y| -((x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2)),
        _ => return Err(format!("unknown function {function:?}")),
    };
    let cfg = GaConfig {
        population_size: population,
        generations,
        seed,
        ..GaConfig::default()
    };
    let spec = [GeneSpec::real(-5.0, 5.0), GeneSpec::real(-5.0, 5.0)];
    let out = run_ga(&cfg, &spec, &[], |g| f(g[0].as_real(), g[1].as_real())).map_err(|e| e.to_string())?;
    Ok(out.history)
}

/// Trains ILUGA on the points tagged increment 0, then on those tagged 1,
/// and returns the predicted-class grid after each: `2 · res²` class ids.
pub fn incremental_regions_impl(xy: &[f64], classes: &[u32], increment: &[u32], res: usize, seed: u64) -> Result<Vec<u32>, String> {
    check_res(res)?;
    let x = points(xy)?;
    if x.len() != classes.len() || x.len() != increment.len() {
        return Err("one class and one increment tag per point".into());
    }
    let part = |k: u32| {
        let samples = x
            .iter()
            .zip(classes)
            .zip(increment)
            .filter(|(_, &t)| t == k)
            .map(|((p, &c), _)| Sample {
                features: p.clone(),
                label: c as ClassId,
            })
            .collect();
        Dataset::new(samples, 2).map_err(|e| e.to_string())
    };
    let ga = GaConfig {
        population_size: 10,
        generations: 6,
        ..GaConfig::default()
    };
    let mut cfg = IlugaConfig {
        stage1_ga: ga,
        stage2_ga: GaConfig {
            seed_spread: Some(0.1),
            ..ga
        },
        split_ratios: DEFAULT_SPLIT,
        scaling: ScalerKind::Fixed { divisor: 1.0 },
        ..IlugaConfig::default()
    };
    let mut ensemble = Ensemble::new();
    let mut out = Vec::with_capacity(2 * res * res);
    for k in 0..2 {
        cfg.seed = seed.wrapping_add(k as u64);
        ensemble = learn_increment(&ensemble, &part(k)?, &cfg).map_err(|e| format!("increment {}: {e}", k + 1))?;
        for p in grid_points(res) {
            out.push(classify(&ensemble, &p).map_err(|e| e.to_string())? as u32);
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = svmSurface)]
pub fn svm_surface(xy: &[f64], labels: &[f64], kernel: &str, param: f64, c: f64, res: usize) -> Result<Vec<f64>, JsError> {
    svm_surface_impl(xy, labels, kernel, param, c, res).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gaTrace)]
pub fn ga_trace(function: &str, population: usize, generations: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    ga_trace_impl(function, population, generations, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = incrementalRegions)]
pub fn incremental_regions(xy: &[f64], classes: &[u32], increment: &[u32], res: usize, seed: u32) -> Result<Vec<u32>, JsError> {
    incremental_regions_impl(xy, classes, increment, res, seed as u64).map_err(|e| JsError::new(&e))
}

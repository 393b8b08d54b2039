//! Soft-margin binary SVM (C-SVC) trained with SMO.
//!
//! The solver works on the dual
//!
//! ```text
//! min  ½ αᵀQα − eᵀα   s.t.  0 ≤ αᵢ ≤ C,  yᵀα = 0,   Qᵢⱼ = yᵢyⱼK(xᵢ,xⱼ)
//! ```
//!
//! choosing at every step the pair that violates the KKT conditions most
//! (`i = argmax −yₜ∇ₜ` over the "up" set, `j = argmin` over the "low" set) and
//! stopping once the violation gap drops below `tol`.

use serde::{Deserialize, Serialize};

use crate::datasets::ClassId;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, CrossProducts, KernelSpec, SymMatrix};

/// Dual coefficients below this are dropped from the model.
pub const SV_THRESHOLD: f64 = 1e-8;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoParams {
    pub tol: f64,
    /// Iteration budget is `max_passes · 10 · n` pair updates (at least 1000).
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_passes: 10,
        }
    }
}

impl SmoParams {
    fn max_iter(&self, n: usize) -> usize {
        (self.max_passes.max(1) * 10 * n).max(1000)
    }
}

/// Raw solution of the dual problem.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `W(α) = Σα − ½ ΣΣ αᵢαⱼ yᵢyⱼ Kᵢⱼ`, the (maximization form) dual objective.
pub fn dual_objective(gram: &SymMatrix, y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += alpha[j] * y[j] * row[j];
        }
        quad += alpha[i] * y[i] * acc;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solves the dual on a precomputed Gram matrix. `y` holds ±1.
pub fn solve_dual(gram: &SymMatrix, y: &[f64], c: f64, params: &SmoParams) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_iter(n);
    let mut iterations = 0;
    let mut converged = false;

    let is_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let is_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut up, mut low) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if is_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                up = t;
            }
            if is_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                low = t;
            }
        }
        if up == usize::MAX || low == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        // Second-order partner for each extreme; the better of the two pairs is
        // taken, which keeps the choice unchanged when all labels are negated.
        let partner = |anchor: usize, g_anchor: f64, want_low: bool| {
            let k_aa = gram.get(anchor, anchor);
            let mut best = (f64::INFINITY, usize::MAX);
            for t in 0..n {
                let v = -y[t] * grad[t];
                let ok = if want_low {
                    is_low(alpha[t], y[t]) && v < g_anchor
                } else {
                    is_up(alpha[t], y[t]) && v > g_anchor
                };
                if ok {
                    let b = if want_low { g_anchor - v } else { v - g_anchor };
                    let mut a = k_aa + gram.get(t, t) - 2.0 * gram.get(anchor, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    if -b * b / a < best.0 {
                        best = (-b * b / a, t);
                    }
                }
            }
            best
        };
        let (gain_a, j_a) = partner(up, gmax, true);
        let (gain_b, i_b) = partner(low, gmin, false);
        let key = |p: usize, q: usize| (p.min(q), p.max(q));
        let (i, j) = if gain_a < gain_b || (gain_a == gain_b && key(up, j_a) <= key(i_b, low)) {
            (up, j_a)
        } else {
            (i_b, low)
        };
        iterations += 1;

        let kii = gram.get(i, i);
        let kjj = gram.get(j, j);
        let kij = gram.get(i, j);
        let qij = y[i] * y[j] * kij;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kii + kjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kii + kjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        let (row_i, row_j) = (gram.row(i), gram.row(j));
        for t in 0..n {
            grad[t] += y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    DualSolution {
        b: -threshold(&alpha, &grad, y, c),
        alpha,
        iterations,
        converged,
    }
}

/// ρ such that f(x) = Σαᵢyᵢ K(xᵢ,x) − ρ: the mean of yᵢ∇ᵢ over free
/// variables, or the midpoint of the feasible interval when none are free.
fn threshold(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// A trained binary classifier for the class pair `(neg, pos)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub b: f64,
    pub pair: (ClassId, ClassId),
    pub sv: Vec<Vec<f64>>,
    pub alpha_y: Vec<f64>,
}

impl BinarySvmModel {
    /// Builds a model from a dual solution, keeping only αᵢ > [`SV_THRESHOLD`].
    pub fn from_solution(
        x: &[Vec<f64>],
        y: &[f64],
        sol: &DualSolution,
        kernel: KernelSpec,
        c: f64,
        pair: (ClassId, ClassId),
    ) -> Self {
        let mut sv = Vec::new();
        let mut alpha_y = Vec::new();
        for ((xi, &yi), &a) in x.iter().zip(y).zip(&sol.alpha) {
            if a > SV_THRESHOLD {
                sv.push(xi.clone());
                alpha_y.push(a * yi);
            }
        }
        Self {
            kernel,
            c,
            b: sol.b,
            pair,
            sv,
            alpha_y,
        }
    }

    pub fn dim(&self) -> usize {
        self.sv.first().map_or(0, Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.decision_value_unchecked(x))
    }

    #[inline]
    pub fn decision_value_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (s, &ay) in self.sv.iter().zip(&self.alpha_y) {
            acc += ay * self.kernel.eval_unchecked(s, x);
        }
        acc + self.b
    }

    /// `pair.1` for a non-negative decision value, `pair.0` otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        Ok(self.class_for(self.decision_value(x)?))
    }

    #[inline]
    pub fn class_for(&self, decision: f64) -> ClassId {
        if decision >= 0.0 {
            self.pair.1
        } else {
            self.pair.0
        }
    }
}

fn check_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidParameter("labels must be ±1".into()));
    }
    if !y.iter().any(|&v| v > 0.0) {
        return Err(Error::SingleClass("negative"));
    }
    if !y.iter().any(|&v| v < 0.0) {
        return Err(Error::SingleClass("positive"));
    }
    Ok(())
}

/// Trains on `x` with ±1 labels `y`; `pair` records which classes −1 and +1 stand for.
pub fn train_smo(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    c: f64,
    params: &SmoParams,
    pair: (ClassId, ClassId),
) -> Result<BinarySvmModel> {
    if x.is_empty() {
        return Err(Error::NoSamples);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    check_labels(y)?;
    kernel.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be > 0, got {c}")));
    }
    let gram = gram_matrix(&kernel, x)?;
    let sol = solve_dual(&gram, y, c, params);
    if !sol.converged {
        return Err(Error::NotConverged {
            iterations: sol.iterations,
        });
    }
    Ok(BinarySvmModel::from_solution(x, y, &sol, kernel, c, pair))
}

/// Decision values of a dual solution on query rows, via precomputed cross products.
pub fn cross_decisions(
    cross: &CrossProducts,
    kernel: &KernelSpec,
    y: &[f64],
    sol: &DualSolution,
) -> Vec<f64> {
    let active: Vec<(usize, f64)> = sol
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > SV_THRESHOLD)
        .map(|(i, &a)| (i, a * y[i]))
        .collect();
    (0..cross.rows())
        .map(|r| {
            let mut acc = 0.0;
            for &(i, ay) in &active {
                acc += ay * cross.kernel(kernel, r, i);
            }
            acc + sol.b
        })
        .collect()
}

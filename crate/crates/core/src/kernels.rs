//! Kernel functions and Gram matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    /// `(x·y + coef)^2`
    Quadratic { coef: f64 },
    /// `(x·y + coef)^degree`
    Polynomial { degree: u32, coef: f64 },
    /// `exp(-gamma ‖x−y‖²)`
    Rbf { gamma: f64 },
    /// `tanh(scale x·y + offset)`; not positive semi-definite in general.
    Tanh { scale: f64, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Quadratic { coef } if !(coef >= 0.0 && coef.is_finite()) => {
                bad(format!("quadratic coef must be >= 0, got {coef}"))
            }
            KernelSpec::Polynomial { degree, .. } if degree < 2 => {
                bad(format!("polynomial degree must be >= 2, got {degree}"))
            }
            KernelSpec::Polynomial { coef, .. } if !(coef >= 0.0 && coef.is_finite()) => {
                bad(format!("polynomial coef must be >= 0, got {coef}"))
            }
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("rbf gamma must be > 0, got {gamma}"))
            }
            KernelSpec::Tanh { scale, offset } if !(scale.is_finite() && offset.is_finite()) => {
                bad(format!("tanh parameters must be finite, got ({scale}, {offset})"))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from the inner product and the squared norms of both arguments.
    #[inline]
    pub fn from_inner(&self, dot: f64, norm_x: f64, norm_y: f64) -> f64 {
        match *self {
            KernelSpec::Linear => dot,
            KernelSpec::Quadratic { coef } => {
                let t = dot + coef;
                t * t
            }
            KernelSpec::Polynomial { degree, coef } => (dot + coef).powi(degree as i32),
            KernelSpec::Rbf { gamma } => {
                let d2 = (norm_x + norm_y - 2.0 * dot).max(0.0);
                (-gamma * d2).exp()
            }
            KernelSpec::Tanh { scale, offset } => (scale * dot + offset).tanh(),
        }
    }

    /// Evaluates the kernel; callers guarantee equal lengths.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            _ => self.from_inner(dot(x, y), 0.0, 0.0),
        }
    }

    pub fn is_mercer(&self) -> bool {
        !matches!(self, KernelSpec::Tanh { .. })
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Dense symmetric matrix, stored full row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

pub fn gram_matrix(spec: &KernelSpec, xs: &[Vec<f64>]) -> Result<SymMatrix> {
    if let Some(first) = xs.first() {
        if let Some(bad) = xs.iter().find(|x| x.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                actual: bad.len(),
            });
        }
    }
    Ok(SymMatrix::from_fn(xs.len(), |i, j| spec.eval_unchecked(&xs[i], &xs[j])))
}

/// Inner products of a training set, reusable across kernel choices.
#[derive(Debug, Clone)]
pub struct InnerProducts {
    dots: SymMatrix,
    norms: Vec<f64>,
}

impl InnerProducts {
    pub fn new(xs: &[Vec<f64>]) -> Self {
        let dots = SymMatrix::from_fn(xs.len(), |i, j| dot(&xs[i], &xs[j]));
        let norms = (0..xs.len()).map(|i| dots.get(i, i)).collect();
        Self { dots, norms }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn gram(&self, spec: &KernelSpec) -> SymMatrix {
        let n = self.len();
        SymMatrix::from_fn(n, |i, j| {
            spec.from_inner(self.dots.get(i, j), self.norms[i], self.norms[j])
        })
    }
}

/// Inner products between query rows and training rows.
#[derive(Debug, Clone)]
pub struct CrossProducts {
    rows: usize,
    cols: usize,
    dots: Vec<f64>,
    row_norms: Vec<f64>,
    col_norms: Vec<f64>,
}

impl CrossProducts {
    pub fn new(queries: &[Vec<f64>], train: &[Vec<f64>]) -> Self {
        let mut dots = Vec::with_capacity(queries.len() * train.len());
        for q in queries {
            dots.extend(train.iter().map(|t| dot(q, t)));
        }
        Self {
            rows: queries.len(),
            cols: train.len(),
            dots,
            row_norms: queries.iter().map(|q| dot(q, q)).collect(),
            col_norms: train.iter().map(|t| dot(t, t)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Kernel value between query `r` and training row `c`.
    #[inline]
    pub fn kernel(&self, spec: &KernelSpec, r: usize, c: usize) -> f64 {
        spec.from_inner(self.dots[r * self.cols + c], self.row_norms[r], self.col_norms[c])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let rbf = KernelSpec::Rbf { gamma: 0.7 };
        assert_eq!(kernel_eval(&rbf, &[0.3, -1.2], &[0.3, -1.2]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let quad = KernelSpec::Quadratic { coef: 1.0 };
        assert_eq!(kernel_eval(&quad, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 4.0);
        let poly = KernelSpec::Polynomial { degree: 3, coef: 0.5 };
        assert!((kernel_eval(&poly, &[1.0, 1.0], &[1.0, 0.0]).unwrap() - 3.375).abs() < 1e-12);
        let tanh = KernelSpec::Tanh { scale: 0.5, offset: -1.0 };
        assert!((kernel_eval(&tanh, &[2.0], &[3.0]).unwrap() - 2f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
        assert!(gram_matrix(&KernelSpec::Linear, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn small_grams() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let g = gram_matrix(&KernelSpec::Linear, &xs).unwrap();
        assert_eq!(g.row(0), &[0.0, 0.0]);
        assert_eq!(g.row(1), &[0.0, 1.0]);
        let g = gram_matrix(&KernelSpec::Rbf { gamma: 2.0 }, &xs).unwrap();
        assert_eq!((g.get(0, 0), g.get(1, 1)), (1.0, 1.0));
    }

    #[test]
    fn inner_product_route_matches_direct() {
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos(), i as f64 / 6.0])
            .collect();
        let ip = InnerProducts::new(&xs);
        let cross = CrossProducts::new(&xs[..2], &xs);
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Quadratic { coef: 0.3 },
            KernelSpec::Polynomial { degree: 4, coef: 1.0 },
            KernelSpec::Rbf { gamma: 1.5 },
            KernelSpec::Tanh { scale: 0.2, offset: -0.5 },
        ] {
            let direct = gram_matrix(&spec, &xs).unwrap();
            let fast = ip.gram(&spec);
            for i in 0..6 {
                for j in 0..6 {
                    assert!((direct.get(i, j) - fast.get(i, j)).abs() < 1e-12, "{spec:?}");
                }
            }
            assert!((cross.kernel(&spec, 1, 4) - direct.get(1, 4)).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
        assert!(KernelSpec::Polynomial { degree: 1, coef: 0.0 }.validate().is_err());
        assert!(KernelSpec::Quadratic { coef: -1.0 }.validate().is_err());
        assert!(KernelSpec::Tanh { scale: 1.0, offset: -1.0 }.validate().is_ok());
    }

    #[test]
    fn kernel_serializes_tagged() {
        let s = serde_json::to_string(&KernelSpec::Rbf { gamma: 0.25 }).unwrap();
        assert_eq!(s, r#"{"family":"rbf","gamma":0.25}"#);
    }
}

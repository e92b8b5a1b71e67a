//! Sequential minimal optimization for the soft-margin SVM dual.
//!
//! Each step picks the pair of multipliers that most violates the KKT
//! conditions (first index by maximal gradient violation, second by the
//! largest guaranteed objective increase), solves the two-variable
//! subproblem in closed form and clips it to the box `[0, C]` along the
//! equality constraint. Iteration stops once the maximal violation drops
//! below the tolerance.

use super::{KernelSpec, SvmModel};
use crate::error::{Error, Result};

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoConfig {
    /// Stop when `max(-y∇) over I_up` minus `min(-y∇) over I_low` falls
    /// below this value.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(10⁷, 100·n)`.
    pub max_iter: Option<usize>,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective `Σ α - ½ αᵀ Q α` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual for a precomputed row-major Gram matrix.
pub fn solve_dual(gram: &[f64], y: &[f64], c: f64, config: &SmoConfig) -> Result<DualSolution> {
    let n = y.len();
    if gram.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix of {} entries for {n} samples",
            gram.len()
        )));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!("C must be > 0, got {c}")));
    }
    if let Some(v) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::InvalidParameter(format!(
            "label {v} is not +1 or -1"
        )));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass("SVM training needs both labels".into()));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram matrix"));
    }

    let k = |i: usize, j: usize| gram[i * n + j];
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i * n + j];

    let mut alpha = vec![0.0; n];
    // gradient of ½ αᵀQα - eᵀα
    let mut grad = vec![-1.0; n];
    let max_iter = config.max_iter.unwrap_or_else(|| 10_000_000.max(100 * n));
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // first index: maximal -y∇ over I_up
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            if in_up && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        // second index: best second-order gain among violators in I_low
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            g_max2 = g_max2.max(v);
            if i == usize::MAX {
                continue;
            }
            let diff = g_max + v;
            if diff > 0.0 {
                let curvature = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let gain = -(diff * diff) / if curvature > 0.0 { curvature } else { TAU };
                if gain <= best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        if g_max + g_max2 < config.tolerance || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let curvature = (k(i, i) + k(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / curvature;
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
            let curvature = (k(i, i) + k(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / curvature;
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

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    let bias = -offset(&alpha, &grad, y, c);
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| -0.5 * a * (g - 1.0))
        .sum();
    Ok(DualSolution {
        alpha,
        bias,
        objective,
        iterations,
        converged,
    })
}

/// Decision offset ρ with `f(x) = Σ αy K - ρ`: the mean of `y∇` over free
/// multipliers, or the midpoint of the bound-implied interval when none is
/// free.
fn offset(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
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
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Builds a model from a dual solution, keeping samples with `α > 0`.
pub fn model_from_solution(
    xs: &[Vec<f64>],
    y: &[f64],
    solution: &DualSolution,
    c: f64,
    kernel: KernelSpec,
) -> SvmModel {
    let (support_vectors, dual_coefs) = xs
        .iter()
        .zip(y)
        .zip(&solution.alpha)
        .filter(|(_, a)| **a > 0.0)
        .map(|((x, yl), a)| (x.clone(), a * yl))
        .unzip();
    SvmModel {
        support_vectors,
        dual_coefs,
        bias: solution.bias,
        kernel,
        c_penalty: c,
    }
}

/// Trains a classifier on `xs` with labels `±1`.
pub fn smo_train(
    xs: &[Vec<f64>],
    y: &[f64],
    c: f64,
    kernel: KernelSpec,
    config: &SmoConfig,
) -> Result<SvmModel> {
    Ok(smo_train_full(xs, y, c, kernel, config)?.0)
}

/// Like [`smo_train`], also returning the full multiplier vector.
pub fn smo_train_full(
    xs: &[Vec<f64>],
    y: &[f64],
    c: f64,
    kernel: KernelSpec,
    config: &SmoConfig,
) -> Result<(SvmModel, DualSolution)> {
    kernel.validate()?;
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} labels",
            xs.len(),
            y.len()
        )));
    }
    let dim = xs.first().map_or(0, Vec::len);
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch("samples of unequal length".into()));
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training samples"));
    }
    let solution = solve_dual(&kernel.gram(xs), y, c, config)?;
    let model = model_from_solution(xs, y, &solution, c, kernel);
    Ok((model, solution))
}

//! Soft-margin RBF-kernel SVM trained by sequential minimal optimization.
//!
//! The dual problem solved is
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a    s.t.  y^T a = 0,  0 <= a_i <= C
//! Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Working pairs are the maximal violating pair; ties go to the lowest index
//! so the solver is deterministic for a given input order.

use crate::error::{Error, Result};
use crate::model::Meaning;

/// KKT gap at which the solver stops.
pub const TOLERANCE: f64 = 1e-6;
const TAU: f64 = 1e-12;
const BOUND_EPS: f64 = 1e-12;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// `1 / (2 * median^2)` of the pairwise Euclidean distances.
///
/// Falls back to the smallest positive distance when more than half of the
/// pairs coincide, and to 1.0 when every point is identical or fewer than two
/// points are given.
pub fn median_heuristic_gamma<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let mut dists = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            dists.push(squared_distance(points[i].as_ref(), points[j].as_ref()).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let mut median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    if median <= 0.0 {
        match dists.iter().find(|&&d| d > 0.0) {
            Some(&d) => median = d,
            None => return 1.0,
        }
    }
    1.0 / (2.0 * median * median)
}

/// Fitted classifier: `f(x) = sum_i coef_i K(sv_i, x) - rho`, yellow when
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionFunction {
    /// Support points with their signed coefficients `alpha_i * y_i`.
    pub support: Vec<(Vec<f64>, f64)>,
    pub bias: f64,
    pub gamma: f64,
}

impl DecisionFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|(sv, coef)| coef * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Predicted meaning; an exact zero is reported as `None`.
    pub fn predict(&self, x: &[f64]) -> Option<Meaning> {
        let v = self.value(x);
        if v > 0.0 {
            Some(Meaning::Yellow)
        } else if v < 0.0 {
            Some(Meaning::Grey)
        } else {
            None
        }
    }
}

/// Raw solver output over a precomputed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the dual for labels `y` (each +1 or -1) given a symmetric kernel
/// accessor `kernel(i, j)`.
pub fn solve_dual(y: &[f64], c: f64, kernel: impl Fn(usize, usize) -> f64) -> DualSolution {
    let n = y.len();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * kernel(i, j);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let qd: Vec<f64> = (0..n).map(|i| q[i * n + i]).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of the objective at alpha = 0.
    let mut grad = vec![-1.0; n];

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let max_iter = 10_000_000usize.min(100_000 * n.max(1));
    let mut iterations = 0;

    while iterations < max_iter {
        // Maximal violating pair.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut i_sel = None;
        let mut j_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
            let v = -y[t] * grad[t];
            if in_up && v > gmax {
                gmax = v;
                i_sel = Some(t);
            }
            if in_low && v < gmin {
                gmin = v;
                j_sel = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if gmax - gmin < TOLERANCE {
            break;
        }
        iterations += 1;

        let old_ai = alpha[i];
        let old_aj = alpha[j];
        let qi = &q[i * n..(i + 1) * n];
        let qj = &q[j * n..(j + 1) * n];
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qi[j];
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
            let mut quad = qd[i] + qd[j] - 2.0 * qi[j];
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
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // Rounding in `c - diff` and friends can leave a multiplier a few ulps
        // inside the box; it would then count as free and skew rho.
        for t in [i, j] {
            if alpha[t] > c * (1.0 - BOUND_EPS) {
                alpha[t] = c;
            } else if alpha[t] < c * BOUND_EPS {
                alpha[t] = 0.0;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        for t in 0..n {
            grad[t] += qi[t] * dai + qj[t] * daj;
        }
    }

    // rho from free variables, or the midpoint of the feasible interval.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
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
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    let rho = if rho.is_finite() { rho } else { 0.0 };

    // f(a) = 1/2 a^T (G - p) with p = -e.
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    DualSolution {
        alpha,
        rho,
        objective,
        iterations,
    }
}

/// Fits a soft-margin RBF SVM on labeled points.
pub fn train_rbf_svm<P: AsRef<[f64]>>(data: &[(P, Meaning)], c: f64, gamma: f64) -> Result<DecisionFunction> {
    let dim = data.first().map(|(p, _)| p.as_ref().len()).unwrap_or(0);
    for (p, _) in data {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedSignal("non-finite feature".into()));
        }
    }
    let has = |m: Meaning| data.iter().any(|(_, l)| *l == m);
    if !has(Meaning::Yellow) || !has(Meaning::Grey) {
        return Err(Error::SingleClass);
    }
    let y: Vec<f64> = data.iter().map(|(_, l)| l.sign()).collect();
    let sol = solve_dual(&y, c, |i, j| rbf(data[i].0.as_ref(), data[j].0.as_ref(), gamma));
    Ok(DecisionFunction {
        support: sol
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| **a > 0.0)
            .map(|(i, a)| (data[i].0.as_ref().to_vec(), a * y[i]))
            .collect(),
        bias: -sol.rho,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let data = vec![(vec![-1.0, 0.0], Meaning::Yellow), (vec![1.0, 0.0], Meaning::Grey)];
        let f = train_rbf_svm(&data, 10.0, 0.5).unwrap();
        assert_eq!(f.predict(&[-1.0, 0.0]), Some(Meaning::Yellow));
        assert_eq!(f.predict(&[1.0, 0.0]), Some(Meaning::Grey));
    }

    #[test]
    fn xor_fits_with_median_gamma() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let labels = [Meaning::Yellow, Meaning::Yellow, Meaning::Grey, Meaning::Grey];
        let data: Vec<_> = pts.iter().zip(labels).map(|(p, l)| (p.to_vec(), l)).collect();
        let gamma = median_heuristic_gamma(&pts);
        let f = train_rbf_svm(&data, 10.0, gamma).unwrap();
        for (p, l) in &data {
            assert_eq!(f.predict(p), Some(*l));
        }
    }

    #[test]
    fn single_class_is_an_error() {
        let data = vec![(vec![0.0], Meaning::Grey), (vec![1.0], Meaning::Grey)];
        assert_eq!(train_rbf_svm(&data, 1.0, 1.0).unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn dimension_mismatch() {
        let data = vec![(vec![0.0], Meaning::Grey), (vec![1.0, 2.0], Meaning::Yellow)];
        assert!(matches!(
            train_rbf_svm(&data, 1.0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identical_points_mixed_labels() {
        let data = vec![
            (vec![0.5, 0.5], Meaning::Grey),
            (vec![0.5, 0.5], Meaning::Yellow),
            (vec![0.5, 0.5], Meaning::Grey),
            (vec![0.5, 0.5], Meaning::Yellow),
        ];
        let f = train_rbf_svm(&data, 10.0, median_heuristic_gamma(&[[0.5, 0.5]; 4])).unwrap();
        assert!(f.value(&[0.5, 0.5]).abs() < 1e-9);
    }

    #[test]
    fn median_gamma_of_unit_spacing() {
        let pts = [[0.0], [1.0], [2.0]];
        // distances 1, 1, 2 -> median 1
        assert!((median_heuristic_gamma(&pts) - 0.5).abs() < 1e-15);
        assert_eq!(median_heuristic_gamma(&[[3.0]]), 1.0);
    }
}

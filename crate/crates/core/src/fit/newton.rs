//! Penalized ascent machinery shared by the two parts of the seasonal fit:
//! a damped Newton / Fisher-scoring loop with halving line search, an SPD
//! solver with ridge fallback, and the effective-degrees-of-freedom
//! bisection used to pick default smoothing weights.

use nalgebra::{DMatrix, DVector};

/// A smooth objective to be maximized.
pub(crate) trait Objective {
    /// Penalized log-likelihood at `theta`.
    fn value(&self, theta: &DVector<f64>) -> f64;
    /// Gradient of the penalized log-likelihood.
    fn grad(&self, theta: &DVector<f64>) -> DVector<f64>;
    /// SPD approximation of the negative Hessian (Fisher information plus
    /// penalty curvature).
    fn neg_hess(&self, theta: &DVector<f64>) -> DMatrix<f64>;
}

pub(crate) struct Ascent {
    pub theta: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after every accepted step, starting value included.
    pub trajectory: Vec<f64>,
}

/// Maximizes `obj` from `theta0`. Each Newton direction is backtracked
/// until the objective does not decrease, so the trajectory is monotone
/// non-decreasing by construction.
pub(crate) fn maximize<O: Objective>(
    obj: &O,
    theta0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Ascent {
    let mut theta = theta0;
    let mut value = obj.value(&theta);
    let mut trajectory = vec![value];
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        let g = obj.grad(&theta);
        let h = obj.neg_hess(&theta);
        let step = solve_spd(h, &g);

        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..60 {
            let cand = &theta + &step * t;
            let v = obj.value(&cand);
            if v.is_finite() && v >= value {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            // No direction of ascent at working precision.
            converged = true;
            break;
        };
        let delta = v - value;
        theta = cand;
        value = v;
        trajectory.push(value);
        if delta.abs() < tol {
            converged = true;
            break;
        }
    }

    Ascent { theta, value, iterations, converged, trajectory }
}

/// Solves `h x = g` for SPD-ish `h`; falls back to an increasing ridge and
/// finally LU if the factorization fails.
pub(crate) fn solve_spd(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        return ch.solve(g);
    }
    let n = h.nrows();
    let scale = (h.trace() / n as f64).abs().max(1e-12);
    let mut ridge = 1e-10 * scale;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            return ch.solve(g);
        }
        ridge *= 10.0;
    }
    h.lu().solve(g).unwrap_or_else(|| DVector::zeros(n))
}

/// Effective degrees of freedom `tr[(info + 2 lambda pen)^-1 info]`.
pub(crate) fn edf(info: &DMatrix<f64>, pen: &DMatrix<f64>, lambda: f64) -> f64 {
    let m = info + pen * (2.0 * lambda);
    let solved = match m.clone().cholesky() {
        Some(ch) => ch.solve(info),
        None => match m.lu().solve(info) {
            Some(s) => s,
            None => return f64::NAN,
        },
    };
    solved.trace()
}

/// Smallest lambda whose EDF reaches `target`, by bisection on ln lambda.
/// EDF is monotone decreasing in lambda from rank(info) down to the
/// penalty null-space dimension, so the bracket below always contains the
/// solution when the target is attainable; otherwise the nearest bracket
/// end is returned.
pub(crate) fn lambda_for_edf(info: &DMatrix<f64>, pen: &DMatrix<f64>, target: f64) -> f64 {
    let p = info.nrows() as f64;
    let target = target.clamp(1.0 + 1e-3, p - 1e-3);
    let (mut lo, mut hi) = (-26.0_f64, 33.0_f64); // ln lambda
    if edf(info, pen, lo.exp()) <= target {
        return lo.exp();
    }
    if edf(info, pen, hi.exp()) >= target {
        return hi.exp();
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if edf(info, pen, mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

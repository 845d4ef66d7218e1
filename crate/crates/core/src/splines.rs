//! Cyclic cubic regression splines on the unit seasonal interval.
//!
//! The basis is parameterized by the spline's values at `dim` equally
//! spaced knots on [0, 1) with period 1. Writing `gamma` for the second
//! derivatives at the knots, continuity of the first derivative gives the
//! cyclic tridiagonal system `B gamma = D beta`, so `gamma = F beta` with
//! `F = B^-1 D`. Evaluation anywhere in [0, 1) is the standard cubic
//! interpolation formula in `beta` and `gamma`, which makes every basis
//! function a periodic C^2 cardinal spline. The roughness penalty is exact:
//! `integral f''(u)^2 du = beta' (D' B^-1 D) beta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Cyclic cubic spline basis with equally spaced knots.
#[derive(Debug, Clone)]
pub struct CyclicBasis {
    knots: Vec<f64>,
    /// Maps knot values to knot second derivatives (`F = B^-1 D`).
    second_deriv_map: DMatrix<f64>,
    /// Roughness penalty `S = D' B^-1 D`, symmetric PSD with the constants
    /// as null space.
    penalty: DMatrix<f64>,
}

impl CyclicBasis {
    /// Builds a basis of dimension `dim >= 4` with knots at `j / dim`.
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 4 {
            return Err(Error::domain(
                "CyclicBasis",
                format!("basis dimension must be >= 4, got {dim}"),
            ));
        }
        let knots: Vec<f64> = (0..dim).map(|j| j as f64 / dim as f64).collect();
        let h: Vec<f64> = (0..dim)
            .map(|j| {
                let next = if j + 1 < dim { knots[j + 1] } else { 1.0 };
                next - knots[j]
            })
            .collect();

        let mut b = DMatrix::zeros(dim, dim);
        let mut d = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let prev = (j + dim - 1) % dim;
            let next = (j + 1) % dim;
            let h_prev = h[prev];
            let h_j = h[j];
            b[(j, prev)] += h_prev / 6.0;
            b[(j, j)] += (h_prev + h_j) / 3.0;
            b[(j, next)] += h_j / 6.0;
            d[(j, prev)] += 1.0 / h_prev;
            d[(j, j)] += -1.0 / h_prev - 1.0 / h_j;
            d[(j, next)] += 1.0 / h_j;
        }

        let chol = b
            .clone()
            .cholesky()
            .ok_or_else(|| Error::domain("CyclicBasis", "knot system not positive definite"))?;
        let second_deriv_map = chol.solve(&d);

        let mut penalty = d.transpose() * &second_deriv_map;
        // symmetrize away solver rounding
        let pt = penalty.transpose();
        penalty = (penalty + pt) * 0.5;

        Ok(Self { knots, second_deriv_map, penalty })
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Roughness penalty matrix `S` with `beta' S beta = integral f''^2`.
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Basis row at one position in [0, 1).
    pub fn eval_one(&self, u: f64) -> Result<DVector<f64>> {
        let dim = self.dim();
        if !(0.0..1.0).contains(&u) {
            return Err(Error::domain(
                "CyclicBasis::eval",
                format!("position must lie in [0,1), got {u}"),
            ));
        }
        let j = ((u * dim as f64) as usize).min(dim - 1);
        let x_j = self.knots[j];
        let x_next = if j + 1 < dim { self.knots[j + 1] } else { 1.0 };
        let h = x_next - x_j;
        let a = (x_next - u) / h;
        let bw = (u - x_j) / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (bw * bw * bw - bw) * h * h / 6.0;
        let next = (j + 1) % dim;

        let mut row = DVector::zeros(dim);
        row[j] += a;
        row[next] += bw;
        for c in 0..dim {
            row[c] += ca * self.second_deriv_map[(j, c)] + cb * self.second_deriv_map[(next, c)];
        }
        Ok(row)
    }

    /// Basis matrix with one row per position.
    pub fn eval(&self, positions: &[f64]) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        let mut out = DMatrix::zeros(positions.len(), dim);
        for (i, &u) in positions.iter().enumerate() {
            let row = self.eval_one(u)?;
            out.row_mut(i).copy_from(&row.transpose());
        }
        Ok(out)
    }
}

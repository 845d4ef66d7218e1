//! Seasonal zero-augmented gamma regression and the classical per-bin fit.
//!
//! The seasonal model puts a cyclic-spline linear predictor on each ZAGA
//! parameter,
//!
//! ```text
//! logit(pi_t)  = alpha1 + f1(u_t)
//! log(mu_t)    = alpha2 + f2(u_t)
//! log(sigma_t) = alpha3 + f3(u_t)
//! ```
//!
//! with `u_t` the seasonal position of the timestamp. The log-likelihood
//! separates into a Bernoulli part on the zero indicator (`eta1`) and a
//! gamma part on the positives (`eta2`, `eta3`); each part is maximized
//! independently by penalized Fisher scoring with a halving line search,
//! which keeps the penalized log-likelihood monotone across iterations.
//!
//! Identifiability: the cyclic basis spans the constants, so each spline
//! block is reparameterized through an orthonormal basis of the zero-sum
//! coefficient subspace; the constant direction is carried by the
//! intercept alone and the fitted seasonal curves integrate to zero.

mod newton;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::special::{digamma, ln_gamma, trigamma};
use crate::distributions::zaga::{gamma_logpdf, zaga_mle, ZagaParams};
use crate::error::{Error, Result};
use crate::splines::CyclicBasis;
use crate::timeseries::{seasonal_bin, seasonal_position, split_by_season, MaSeries};

use newton::{edf, lambda_for_edf, maximize, Objective};

/// Smoothing-weight selection policy.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSelect {
    /// Use the given weights for (pi, mu, sigma) as-is.
    Fixed([f64; 3]),
    /// Solve each curve's weight so its effective degrees of freedom hit
    /// the target (computed with the warm-start weights). The default,
    /// with target 4.
    TargetEdf(f64),
    /// Grid search minimizing AIC = -2 loglik + 2 EDF, per part.
    GridAic(Vec<f64>),
}

impl Default for LambdaSelect {
    fn default() -> Self {
        LambdaSelect::TargetEdf(4.0)
    }
}

/// Configuration for [`fit_seasonal_zaga`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Basis dimensions for the pi, mu and sigma curves.
    pub dims: [usize; 3],
    pub lambda: LambdaSelect,
    /// Stop when the penalized log-likelihood changes by less than this.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Force pi = 0 (no zero augmentation). Rejected when the data does
    /// contain zeros. Data without zeros switches this on automatically.
    pub fix_pi_zero: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            dims: [10, 10, 10],
            lambda: LambdaSelect::default(),
            tolerance: 1e-8,
            max_iter: 200,
            fix_pi_zero: false,
        }
    }
}

/// Convergence bookkeeping of a seasonal fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitStats {
    pub penalized_loglik: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Total penalized log-likelihood after every accepted optimizer step.
    pub trajectory: Vec<f64>,
}

impl Default for FitStats {
    fn default() -> Self {
        Self {
            penalized_loglik: f64::NAN,
            loglik: f64::NAN,
            iterations: 0,
            converged: false,
            trajectory: Vec::new(),
        }
    }
}

/// Fitted seasonal zero-augmented gamma model.
#[derive(Debug, Clone)]
pub struct SeasonalZagaModel {
    basis_pi: CyclicBasis,
    basis_mu: CyclicBasis,
    basis_sigma: CyclicBasis,
    alpha: [f64; 3],
    beta_pi: DVector<f64>,
    beta_mu: DVector<f64>,
    beta_sigma: DVector<f64>,
    lambda: [f64; 3],
    pi_fixed_zero: bool,
    fitted_scale: usize,
    fit_stats: FitStats,
}

const MODEL_FORMAT: &str = "hydroindex-seasonal-zaga";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    fitted_scale: usize,
    pi_fixed_zero: bool,
    dims: [usize; 3],
    alpha: [f64; 3],
    beta_pi: Vec<f64>,
    beta_mu: Vec<f64>,
    beta_sigma: Vec<f64>,
    lambda: [f64; 3],
    fit_stats: FitStats,
}

impl SeasonalZagaModel {
    /// Assembles a model from raw parts (used by deserialization and by
    /// tests that need a model with known coefficients).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dims: [usize; 3],
        alpha: [f64; 3],
        beta_pi: Vec<f64>,
        beta_mu: Vec<f64>,
        beta_sigma: Vec<f64>,
        lambda: [f64; 3],
        pi_fixed_zero: bool,
        fitted_scale: usize,
    ) -> Result<Self> {
        if beta_pi.len() != dims[0] || beta_mu.len() != dims[1] || beta_sigma.len() != dims[2] {
            return Err(Error::ModelFormat {
                msg: format!(
                    "coefficient lengths ({}, {}, {}) do not match basis dims {:?}",
                    beta_pi.len(),
                    beta_mu.len(),
                    beta_sigma.len(),
                    dims
                ),
            });
        }
        Ok(Self {
            basis_pi: CyclicBasis::new(dims[0])?,
            basis_mu: CyclicBasis::new(dims[1])?,
            basis_sigma: CyclicBasis::new(dims[2])?,
            alpha,
            beta_pi: DVector::from_vec(beta_pi),
            beta_mu: DVector::from_vec(beta_mu),
            beta_sigma: DVector::from_vec(beta_sigma),
            lambda,
            pi_fixed_zero,
            fitted_scale,
            fit_stats: FitStats::default(),
        })
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    pub fn lambda(&self) -> [f64; 3] {
        self.lambda
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.basis_pi.dim(), self.basis_mu.dim(), self.basis_sigma.dim()]
    }

    pub fn pi_fixed_zero(&self) -> bool {
        self.pi_fixed_zero
    }

    /// Moving-average scale of the series the model was fitted on.
    pub fn fitted_scale(&self) -> usize {
        self.fitted_scale
    }

    pub fn fit_stats(&self) -> &FitStats {
        &self.fit_stats
    }

    /// Parameters at one seasonal position in [0, 1).
    pub fn predict_at(&self, u: f64) -> Result<ZagaParams> {
        let pi = if self.pi_fixed_zero {
            0.0
        } else {
            let eta = self.alpha[0] + self.basis_pi.eval_one(u)?.dot(&self.beta_pi);
            sigmoid(eta).clamp(1e-12, 1.0 - 1e-12)
        };
        let eta_mu = self.alpha[1] + self.basis_mu.eval_one(u)?.dot(&self.beta_mu);
        let eta_sigma = self.alpha[2] + self.basis_sigma.eval_one(u)?.dot(&self.beta_sigma);
        let mu = eta_mu.clamp(-200.0, 200.0).exp();
        let sigma = eta_sigma.clamp(-200.0, 200.0).exp();
        ZagaParams::new(pi, mu, sigma)
    }

    /// Parameters at each timestamp via its seasonal position.
    pub fn predict(&self, dates: &[NaiveDate]) -> Vec<ZagaParams> {
        dates
            .iter()
            .map(|&d| {
                self.predict_at(seasonal_position(d))
                    .expect("seasonal position lies in [0,1) and links keep parameters valid")
            })
            .collect()
    }

    /// Versioned JSON document for `fit` / `index` round-trips.
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            fitted_scale: self.fitted_scale,
            pi_fixed_zero: self.pi_fixed_zero,
            dims: self.dims(),
            alpha: self.alpha,
            beta_pi: self.beta_pi.iter().copied().collect(),
            beta_mu: self.beta_mu.iter().copied().collect(),
            beta_sigma: self.beta_sigma.iter().copied().collect(),
            lambda: self.lambda,
            fit_stats: self.fit_stats.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::ModelFormat {
            msg: format!("not a model document: {e}"),
        })?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::ModelFormat { msg: format!("unknown format `{}`", doc.format) });
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::ModelFormat {
                msg: format!("unsupported version {} (expected {MODEL_VERSION})", doc.version),
            });
        }
        let mut model = Self::from_parts(
            doc.dims,
            doc.alpha,
            doc.beta_pi,
            doc.beta_mu,
            doc.beta_sigma,
            doc.lambda,
            doc.pi_fixed_zero,
            doc.fitted_scale,
        )?;
        model.fit_stats = doc.fit_stats;
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Classical per-bin model: one independent ZAGA MLE per seasonal bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedZagaModel {
    params: Vec<ZagaParams>,
}

impl BinnedZagaModel {
    pub fn bins(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ZagaParams] {
        &self.params
    }

    /// Parameters of the bin a date falls into.
    pub fn params_for(&self, date: NaiveDate) -> &ZagaParams {
        &self.params[seasonal_bin(date, self.params.len())]
    }
}

/// Independent maximum-likelihood fit per seasonal bin.
pub fn fit_binned_zaga(ma: &MaSeries, bins: usize) -> Result<BinnedZagaModel> {
    if bins < 1 {
        return Err(Error::domain("fit_binned_zaga", "bins must be >= 1"));
    }
    let groups = split_by_season(ma, bins);
    let params = groups
        .iter()
        .enumerate()
        .map(|(j, values)| {
            zaga_mle(values).map_err(|e| Error::Bin { bin: j, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinnedZagaModel { params })
}

/// ZAGA log-likelihood of the defined entries of `data` under `model`.
pub fn loglik(model: &SeasonalZagaModel, data: &MaSeries) -> f64 {
    data.entries()
        .iter()
        .filter_map(|(d, v)| v.map(|x| (*d, x)))
        .map(|(d, x)| {
            let p = model
                .predict_at(seasonal_position(d))
                .expect("seasonal position lies in [0,1)");
            if x == 0.0 {
                p.pi().ln()
            } else {
                (1.0 - p.pi()).ln()
                    + gamma_logpdf(x, p.mu(), p.sigma()).expect("positive observation")
            }
        })
        .sum()
}

/// Fits the seasonal zero-augmented gamma model to the defined entries of
/// a (moving-average) series.
pub fn fit_seasonal_zaga(data: &MaSeries, config: &FitConfig) -> Result<SeasonalZagaModel> {
    let defined: Vec<(f64, f64)> = data
        .entries()
        .iter()
        .filter_map(|(d, v)| v.map(|x| (seasonal_position(*d), x)))
        .collect();
    for &(_, x) in &defined {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::domain("fit_seasonal_zaga", format!("bad observation {x}")));
        }
    }

    let n_def = defined.len();
    let zeros: usize = defined.iter().filter(|&&(_, x)| x == 0.0).count();
    let positives: Vec<(f64, f64)> =
        defined.iter().copied().filter(|&(_, x)| x > 0.0).collect();

    if positives.is_empty() {
        return Err(Error::AllZero);
    }
    if config.fix_pi_zero && zeros > 0 {
        return Err(Error::ZerosWithPiFixed);
    }
    let fit_pi = !config.fix_pi_zero && zeros > 0;

    let [dim_pi, dim_mu, dim_sigma] = config.dims;
    let active_dims =
        if fit_pi { dim_pi + dim_mu + dim_sigma } else { dim_mu + dim_sigma };
    let need = 3 * active_dims;
    if n_def < need {
        return Err(Error::InsufficientData { got: n_def, coeffs: active_dims, need });
    }
    if positives.len() < dim_mu + dim_sigma {
        return Err(Error::InsufficientData {
            got: positives.len(),
            coeffs: dim_mu + dim_sigma,
            need: dim_mu + dim_sigma,
        });
    }
    {
        let mut distinct: Vec<f64> = positives.iter().map(|&(_, x)| x).collect();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::TooFewDistinctPositives { got: distinct.len() });
        }
    }

    let basis_pi = CyclicBasis::new(dim_pi)?;
    let basis_mu = CyclicBasis::new(dim_mu)?;
    let basis_sigma = CyclicBasis::new(dim_sigma)?;

    // Warm start from the global (season-free) estimates.
    let pi0 = ((zeros as f64) / (n_def as f64)).clamp(1e-4, 1.0 - 1e-4);
    let pos_vals: Vec<f64> = positives.iter().map(|&(_, x)| x).collect();
    let np = pos_vals.len() as f64;
    let mu0 = pos_vals.iter().sum::<f64>() / np;
    let var0 = pos_vals.iter().map(|v| (v - mu0) * (v - mu0)).sum::<f64>() / (np - 1.0).max(1.0);
    let sigma0 = (mu0 * mu0 / var0.max(1e-12)).clamp(1e-3, 1e6);

    // Bernoulli part (zero indicator) over all defined entries.
    let zero_flags: DVector<f64> =
        DVector::from_iterator(n_def, defined.iter().map(|&(_, x)| if x == 0.0 { 1.0 } else { 0.0 }));
    let pos_u: Vec<f64> = positives.iter().map(|&(u, _)| u).collect();
    let all_u: Vec<f64> = defined.iter().map(|&(u, _)| u).collect();

    let x_pi = design(&basis_pi, &all_u)?;
    let x_mu = design(&basis_mu, &pos_u)?;
    let x_sigma = design(&basis_sigma, &pos_u)?;

    let pen_pi = padded_penalty(&basis_pi);
    let pen_mu = padded_penalty(&basis_mu);
    let pen_sigma = padded_penalty(&basis_sigma);

    let x_vals = DVector::from_iterator(pos_vals.len(), pos_vals.iter().copied());
    let ln_x = x_vals.map(|v| v.ln());

    let theta_pi0 = {
        let mut t = DVector::zeros(x_pi.ncols());
        t[0] = (pi0 / (1.0 - pi0)).ln();
        t
    };
    let theta_gamma0 = {
        let mut t = DVector::zeros(x_mu.ncols() + x_sigma.ncols());
        t[0] = mu0.ln();
        t[x_mu.ncols()] = sigma0.ln();
        t
    };

    // Resolve smoothing weights.
    let (lam_pi, lam_mu, lam_sigma, pre_fit) = match &config.lambda {
        LambdaSelect::Fixed(l) => (l[0], l[1], l[2], None),
        LambdaSelect::TargetEdf(target) => {
            let w_pi0 = (pi0 * (1.0 - pi0)).max(1e-6);
            let w_mu0 = sigma0;
            let w_sg0 = (sigma0 * sigma0 * trigamma(sigma0) - sigma0).max(1e-6);
            let lam_pi = if fit_pi {
                lambda_for_edf(&(xtx(&x_pi) * w_pi0), &pen_pi, *target)
            } else {
                0.0
            };
            let lam_mu = lambda_for_edf(&(xtx(&x_mu) * w_mu0), &pen_mu, *target);
            let lam_sg = lambda_for_edf(&(xtx(&x_sigma) * w_sg0), &pen_sigma, *target);
            (lam_pi, lam_mu, lam_sg, None)
        }
        LambdaSelect::GridAic(grid) => {
            let grid: Vec<f64> = if grid.is_empty() {
                (-4..=4).map(|e| 10f64.powi(e)).collect()
            } else {
                grid.clone()
            };
            let sel = select_by_aic(
                fit_pi,
                &grid,
                &x_pi,
                &zero_flags,
                &pen_pi,
                &x_mu,
                &x_sigma,
                &x_vals,
                &ln_x,
                &pen_mu,
                &pen_sigma,
                &theta_pi0,
                &theta_gamma0,
                config,
            );
            (sel.0, sel.1, sel.2, Some((sel.3, sel.4)))
        }
    };

    // Fit both parts (reusing grid-search results when available).
    let bernoulli = BernoulliProblem {
        x: x_pi.clone(),
        y: zero_flags.clone(),
        pen: &pen_pi * lam_pi,
    };
    let gamma = GammaProblem {
        x_mu: x_mu.clone(),
        x_sigma: x_sigma.clone(),
        x_vals: x_vals.clone(),
        ln_x: ln_x.clone(),
        pen_mu: &pen_mu * lam_mu,
        pen_sigma: &pen_sigma * lam_sigma,
    };

    let (part_pi, part_gamma) = match pre_fit {
        Some(parts) => parts,
        None => {
            let a = fit_pi.then(|| {
                maximize(&bernoulli, theta_pi0.clone(), config.tolerance, config.max_iter)
            });
            let b = maximize(&gamma, theta_gamma0.clone(), config.tolerance, config.max_iter);
            (a, b)
        }
    };

    // Assemble coefficients back in basis coordinates.
    let (alpha1, beta1, ll_pi, traj_pi, conv_pi, iters_pi) = match &part_pi {
        Some(a) => {
            let (alpha, beta) = unpack(&basis_pi, &a.theta);
            let ll = bernoulli.loglik(&a.theta);
            (alpha, beta, ll, a.trajectory.clone(), a.converged, a.iterations)
        }
        None => (0.0, DVector::zeros(dim_pi), 0.0, Vec::new(), true, 0),
    };
    let (theta_mu, theta_sg) = split_gamma_theta(&part_gamma.theta, x_mu.ncols());
    let (alpha2, beta2) = unpack(&basis_mu, &theta_mu);
    let (alpha3, beta3) = unpack(&basis_sigma, &theta_sg);
    let ll_gamma = gamma.loglik(&part_gamma.theta);

    // Combined monotone trajectory: Bernoulli sweep at the gamma start
    // value, then the gamma sweep at the final Bernoulli value.
    let pen_value_pi = part_pi.as_ref().map(|a| a.value).unwrap_or(0.0);
    let gamma_start = part_gamma.trajectory.first().copied().unwrap_or(part_gamma.value);
    let mut trajectory: Vec<f64> = traj_pi.iter().map(|v| v + gamma_start).collect();
    trajectory.extend(part_gamma.trajectory.iter().skip(1).map(|v| v + pen_value_pi));
    if trajectory.is_empty() {
        trajectory.push(pen_value_pi + part_gamma.value);
    }

    let fit_stats = FitStats {
        penalized_loglik: pen_value_pi + part_gamma.value,
        loglik: ll_pi + ll_gamma,
        iterations: iters_pi + part_gamma.iterations,
        converged: conv_pi && part_gamma.converged,
        trajectory,
    };

    Ok(SeasonalZagaModel {
        basis_pi,
        basis_mu,
        basis_sigma,
        alpha: [alpha1, alpha2, alpha3],
        beta_pi: beta1,
        beta_mu: beta2,
        beta_sigma: beta3,
        lambda: [lam_pi, lam_mu, lam_sigma],
        pi_fixed_zero: !fit_pi,
        fitted_scale: data.scale(),
        fit_stats,
    })
}

// ---------------------------------------------------------------------------
// internals

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Orthonormal basis of the zero-sum coefficient subspace (Helmert
/// columns), `dim x (dim-1)`.
fn helmert_null_of_ones(dim: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(dim, dim - 1);
    for j in 1..dim {
        let scale = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for i in 0..j {
            z[(i, j - 1)] = scale;
        }
        z[(j, j - 1)] = -(j as f64) * scale;
    }
    z
}

/// Design matrix `[1 | B(u) Z]` for one curve.
fn design(basis: &CyclicBasis, positions: &[f64]) -> Result<DMatrix<f64>> {
    let raw = basis.eval(positions)?;
    let z = helmert_null_of_ones(basis.dim());
    let reduced = raw * z;
    let n = positions.len();
    let mut x = DMatrix::zeros(n, reduced.ncols() + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for c in 0..reduced.ncols() {
            x[(i, c + 1)] = reduced[(i, c)];
        }
    }
    Ok(x)
}

/// Penalty in reduced coordinates, padded with a zero row/column for the
/// intercept: `blockdiag(0, Z' S Z)`.
fn padded_penalty(basis: &CyclicBasis) -> DMatrix<f64> {
    let z = helmert_null_of_ones(basis.dim());
    let inner = z.transpose() * basis.penalty() * &z;
    let p = inner.nrows() + 1;
    let mut out = DMatrix::zeros(p, p);
    for i in 0..inner.nrows() {
        for j in 0..inner.ncols() {
            out[(i + 1, j + 1)] = inner[(i, j)];
        }
    }
    out
}

/// Back-transforms a reduced coefficient vector to (intercept, full-basis
/// coefficients with zero sum).
fn unpack(basis: &CyclicBasis, theta: &DVector<f64>) -> (f64, DVector<f64>) {
    let z = helmert_null_of_ones(basis.dim());
    let gamma = theta.rows(1, theta.len() - 1).into_owned();
    (theta[0], z * gamma)
}

fn split_gamma_theta(theta: &DVector<f64>, p_mu: usize) -> (DVector<f64>, DVector<f64>) {
    (theta.rows(0, p_mu).into_owned(), theta.rows(p_mu, theta.len() - p_mu).into_owned())
}

fn xtx(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * x
}

fn xtwx(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xs = x.clone();
    for i in 0..x.nrows() {
        let wi = w[i];
        for c in 0..x.ncols() {
            xs[(i, c)] *= wi;
        }
    }
    x.transpose() * xs
}

fn quad(theta: &DVector<f64>, pen: &DMatrix<f64>) -> f64 {
    (theta.transpose() * pen * theta)[(0, 0)]
}

/// Bernoulli (zero-indicator) part with logit link. `pen` is already
/// lambda-scaled; the objective is `loglik - theta' pen theta`.
struct BernoulliProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    pen: DMatrix<f64>,
}

impl BernoulliProblem {
    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.x * theta;
        let mut ll = 0.0;
        for i in 0..eta.len() {
            ll += self.y[i] * eta[i] - softplus(eta[i]);
        }
        ll
    }
}

impl Objective for BernoulliProblem {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.loglik(theta) - quad(theta, &self.pen)
    }

    fn grad(&self, theta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * theta;
        let resid = DVector::from_fn(eta.len(), |i, _| self.y[i] - sigmoid(eta[i]));
        self.x.transpose() * resid - &self.pen * theta * 2.0
    }

    fn neg_hess(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let eta = &self.x * theta;
        let w = DVector::from_fn(eta.len(), |i, _| {
            let p = sigmoid(eta[i]);
            (p * (1.0 - p)).max(1e-10)
        });
        xtwx(&self.x, &w) + &self.pen * 2.0
    }
}

/// Gamma part on the positives, joint over the mu and sigma predictors
/// with log links. Fisher scoring: the expected information is block
/// diagonal with weights `sigma` (mu block) and
/// `sigma^2 trigamma(sigma) - sigma` (sigma block).
struct GammaProblem {
    x_mu: DMatrix<f64>,
    x_sigma: DMatrix<f64>,
    x_vals: DVector<f64>,
    ln_x: DVector<f64>,
    pen_mu: DMatrix<f64>,
    pen_sigma: DMatrix<f64>,
}

impl GammaProblem {
    fn params(&self, theta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let p_mu = self.x_mu.ncols();
        let (t_mu, t_sg) = split_gamma_theta(theta, p_mu);
        let mu = (&self.x_mu * t_mu).map(|e| e.clamp(-200.0, 200.0).exp());
        let sigma = (&self.x_sigma * t_sg).map(|e| e.clamp(-200.0, 200.0).exp());
        (mu, sigma)
    }

    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let (mu, sigma) = self.params(theta);
        let mut ll = 0.0;
        for i in 0..self.x_vals.len() {
            let (x, lx, m, s) = (self.x_vals[i], self.ln_x[i], mu[i], sigma[i]);
            ll += s * (s.ln() - m.ln()) - ln_gamma(s) + (s - 1.0) * lx - s * x / m;
        }
        ll
    }

    fn penalty(&self, theta: &DVector<f64>) -> f64 {
        let p_mu = self.x_mu.ncols();
        let (t_mu, t_sg) = split_gamma_theta(theta, p_mu);
        quad(&t_mu, &self.pen_mu) + quad(&t_sg, &self.pen_sigma)
    }
}

impl Objective for GammaProblem {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.loglik(theta) - self.penalty(theta)
    }

    fn grad(&self, theta: &DVector<f64>) -> DVector<f64> {
        let p_mu = self.x_mu.ncols();
        let (t_mu, t_sg) = split_gamma_theta(theta, p_mu);
        let (mu, sigma) = self.params(theta);
        let n = self.x_vals.len();
        let g_mu = DVector::from_fn(n, |i, _| sigma[i] * (self.x_vals[i] / mu[i] - 1.0));
        let g_sg = DVector::from_fn(n, |i, _| {
            let (x, lx, m, s) = (self.x_vals[i], self.ln_x[i], mu[i], sigma[i]);
            s * (s.ln() - m.ln() + lx - digamma(s) + 1.0 - x / m)
        });
        let top = self.x_mu.transpose() * g_mu - &self.pen_mu * t_mu * 2.0;
        let bottom = self.x_sigma.transpose() * g_sg - &self.pen_sigma * t_sg * 2.0;
        let mut out = DVector::zeros(top.len() + bottom.len());
        out.rows_mut(0, top.len()).copy_from(&top);
        out.rows_mut(top.len(), bottom.len()).copy_from(&bottom);
        out
    }

    fn neg_hess(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (_, sigma) = self.params(theta);
        let n = self.x_vals.len();
        let w_mu = sigma.clone();
        let w_sg = DVector::from_fn(n, |i, _| {
            let s = sigma[i];
            (s * s * trigamma(s) - s).max(1e-10)
        });
        let a = xtwx(&self.x_mu, &w_mu) + &self.pen_mu * 2.0;
        let b = xtwx(&self.x_sigma, &w_sg) + &self.pen_sigma * 2.0;
        let (pa, pb) = (a.nrows(), b.nrows());
        let mut out = DMatrix::zeros(pa + pb, pa + pb);
        out.view_mut((0, 0), (pa, pa)).copy_from(&a);
        out.view_mut((pa, pa), (pb, pb)).copy_from(&b);
        out
    }
}

/// Grid search over smoothing weights minimizing AIC per part. Returns the
/// chosen weights together with the winning fitted parts so the caller
/// does not refit.
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn select_by_aic(
    fit_pi: bool,
    grid: &[f64],
    x_pi: &DMatrix<f64>,
    zero_flags: &DVector<f64>,
    pen_pi: &DMatrix<f64>,
    x_mu: &DMatrix<f64>,
    x_sigma: &DMatrix<f64>,
    x_vals: &DVector<f64>,
    ln_x: &DVector<f64>,
    pen_mu: &DMatrix<f64>,
    pen_sigma: &DMatrix<f64>,
    theta_pi0: &DVector<f64>,
    theta_gamma0: &DVector<f64>,
    config: &FitConfig,
) -> (f64, f64, f64, Option<newton::Ascent>, newton::Ascent) {
    let mut best_pi: Option<(f64, f64, newton::Ascent)> = None;
    if fit_pi {
        for &lam in grid {
            let prob = BernoulliProblem {
                x: x_pi.clone(),
                y: zero_flags.clone(),
                pen: pen_pi * lam,
            };
            let fitted = maximize(&prob, theta_pi0.clone(), config.tolerance, config.max_iter);
            let eta = x_pi * &fitted.theta;
            let w = DVector::from_fn(eta.len(), |i, _| {
                let p = sigmoid(eta[i]);
                (p * (1.0 - p)).max(1e-10)
            });
            let aic = -2.0 * prob.loglik(&fitted.theta) + 2.0 * edf(&xtwx(x_pi, &w), pen_pi, lam);
            if best_pi.as_ref().map_or(true, |b| aic < b.0) {
                best_pi = Some((aic, lam, fitted));
            }
        }
    }

    let mut best_gamma: Option<(f64, f64, f64, newton::Ascent)> = None;
    for &lam_mu in grid {
        for &lam_sg in grid {
            let prob = GammaProblem {
                x_mu: x_mu.clone(),
                x_sigma: x_sigma.clone(),
                x_vals: x_vals.clone(),
                ln_x: ln_x.clone(),
                pen_mu: pen_mu * lam_mu,
                pen_sigma: pen_sigma * lam_sg,
            };
            let fitted = maximize(&prob, theta_gamma0.clone(), config.tolerance, config.max_iter);
            let (_, sigma) = prob.params(&fitted.theta);
            let n = x_vals.len();
            let w_mu = sigma.clone();
            let w_sg = DVector::from_fn(n, |i, _| {
                let s = sigma[i];
                (s * s * trigamma(s) - s).max(1e-10)
            });
            let edf_total = edf(&xtwx(x_mu, &w_mu), pen_mu, lam_mu)
                + edf(&xtwx(x_sigma, &w_sg), pen_sigma, lam_sg);
            let aic = -2.0 * prob.loglik(&fitted.theta) + 2.0 * edf_total;
            if best_gamma.as_ref().map_or(true, |b| aic < b.0) {
                best_gamma = Some((aic, lam_mu, lam_sg, fitted));
            }
        }
    }

    let (lam_pi, part_pi) = match best_pi {
        Some((_, lam, fitted)) => (lam, Some(fitted)),
        None => (0.0, None),
    };
    let (_, lam_mu, lam_sg, part_gamma) = best_gamma.expect("non-empty grid");
    (lam_pi, lam_mu, lam_sg, part_pi, part_gamma)
}

#[cfg(test)]
mod tests;

//! Qini-driven variable selection for the interaction estimator.
//!
//! An L1-penalized logistic regression path is computed over the full
//! interaction design, each path point is scored by its Qini coefficient,
//! and the terms active at the best point are refitted without penalty.

use rayon::prelude::*;

use crate::data::{split_uplift, SplitConfig, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::estimators::{inter_predict, inter_uplift_fit, InterInput, InteractionFit};
use crate::glm::{build_design, deviance, logistic, DesignMatrix, FittedLogistic};
use crate::qini::{qini_area, qini_table};

pub const DEFAULT_NB_LAMBDA: usize = 100;
pub const DEFAULT_LAMBDA_MIN_RATIO: f64 = 1e-4;

const OUTER_MAX_ITER: usize = 100;
const OUTER_TOL: f64 = 1e-10;
const INNER_MAX_PASSES: usize = 100_000;
const INNER_TOL: f64 = 1e-13;

/// The penalized problem
///
/// ```text
/// minimize  -loglik(b) / n + lambda * sum_{j >= 1} |b_j|
/// ```
///
/// over the interaction design with every non-intercept column centered
/// and scaled to unit (population) variance. Constant columns are held at
/// zero.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub column_names: Vec<String>,
    /// Column means; 0 for the intercept.
    pub centers: Vec<f64>,
    /// Column standard deviations; 1 for the intercept, 0 for constant
    /// columns.
    pub scales: Vec<f64>,
    n: usize,
    /// Standardized design, column-major.
    x: Vec<f64>,
    y: Vec<u8>,
    design: DesignMatrix,
}

/// One path point on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub lambda: f64,
    pub standardized: Vec<f64>,
    pub converged: bool,
}

impl LassoProblem {
    pub fn new(train: &UpliftDataset, predictors: &[&str]) -> Result<Self> {
        let design = build_design(train, predictors, true)?;
        Self::from_design(design, train.outcome())
    }

    pub fn from_design(design: DesignMatrix, y: &[u8]) -> Result<Self> {
        let n = design.n_rows();
        let p = design.n_cols();
        if y.len() != n {
            return Err(UpliftError::invalid("outcome length does not match design"));
        }
        let responders = y.iter().filter(|&&v| v == 1).count();
        if responders == 0 || responders == n {
            return Err(UpliftError::invalid(
                "outcome is constant; the lasso path is undefined",
            ));
        }
        let mut centers = vec![0.0; p];
        let mut scales = vec![1.0; p];
        let mut x = Vec::with_capacity(n * p);
        x.extend(std::iter::repeat(1.0).take(n));
        for j in 1..p {
            let col = design.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            centers[j] = mean;
            if sd <= 1e-12 * (1.0 + mean.abs()) {
                scales[j] = 0.0;
                x.extend(std::iter::repeat(0.0).take(n));
            } else {
                scales[j] = sd;
                x.extend(col.iter().map(|v| (v - mean) / sd));
            }
        }
        Ok(LassoProblem {
            column_names: design.column_names.clone(),
            centers,
            scales,
            n,
            x,
            y: y.to_vec(),
            design,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    fn mean_y(&self) -> f64 {
        self.y.iter().filter(|&&v| v == 1).count() as f64 / self.n as f64
    }

    fn null_solution(&self, lambda: f64) -> LassoSolution {
        let m = self.mean_y();
        let mut b = vec![0.0; self.n_cols()];
        b[0] = (m / (1.0 - m)).ln();
        LassoSolution {
            lambda,
            standardized: b,
            converged: true,
        }
    }

    /// Score of the standardized problem, `X~' (y - p) / n`.
    pub fn standardized_score(&self, standardized: &[f64]) -> Vec<f64> {
        let eta = self.eta(standardized);
        let resid: Vec<f64> = eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &yi)| f64::from(yi) - logistic(e))
            .collect();
        (0..self.n_cols())
            .map(|j| {
                self.col(j)
                    .iter()
                    .zip(&resid)
                    .map(|(x, r)| x * r)
                    .sum::<f64>()
                    / self.n as f64
            })
            .collect()
    }

    /// Smallest penalty at which every penalized coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        let null = self.null_solution(0.0);
        self.standardized_score(&null.standardized)[1..]
            .iter()
            .fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Log-spaced grid from `lambda_max` down to `lambda_max * min_ratio`.
    pub fn lambda_grid(&self, nb_lambda: usize, min_ratio: f64) -> Result<Vec<f64>> {
        if nb_lambda < 2 {
            return Err(UpliftError::invalid("nb_lambda must be at least 2"));
        }
        if !(min_ratio > 0.0 && min_ratio < 1.0) {
            return Err(UpliftError::invalid("lambda ratio must lie in (0, 1)"));
        }
        let top = self.lambda_max();
        if top <= 0.0 {
            return Err(UpliftError::invalid(
                "no penalized column is correlated with the outcome",
            ));
        }
        let step = min_ratio.ln() / (nb_lambda - 1) as f64;
        Ok((0..nb_lambda)
            .map(|k| if k == 0 { top } else { top * (step * k as f64).exp() })
            .collect())
    }

    fn eta(&self, b: &[f64]) -> Vec<f64> {
        let mut eta = vec![0.0; self.n];
        for (j, &bj) in b.iter().enumerate() {
            if bj == 0.0 {
                continue;
            }
            for (e, v) in eta.iter_mut().zip(self.col(j)) {
                *e += bj * v;
            }
        }
        eta
    }

    fn objective(&self, b: &[f64], lambda: f64) -> f64 {
        let nll = deviance(&self.eta(b), &self.y) / (2.0 * self.n as f64);
        nll + lambda * b[1..].iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Solves the penalized problem at `lambda` by proximal Newton steps:
    /// each outer step builds the quadratic IRLS approximation and
    /// minimizes it by cyclic coordinate descent with soft-thresholding.
    pub fn solve(&self, lambda: f64, start: Option<&[f64]>) -> LassoSolution {
        if lambda >= self.lambda_max() {
            return self.null_solution(lambda);
        }
        let n = self.n as f64;
        let p = self.n_cols();
        let mut b = match start {
            Some(s) => s.to_vec(),
            None => self.null_solution(lambda).standardized,
        };
        for j in 1..p {
            if self.scales[j] == 0.0 {
                b[j] = 0.0;
            }
        }
        let free: Vec<usize> = (0..p).filter(|&j| j == 0 || self.scales[j] > 0.0).collect();
        let mut obj = self.objective(&b, lambda);
        let mut converged = false;

        for _ in 0..OUTER_MAX_ITER {
            let eta = self.eta(&b);
            let mut w = vec![0.0; self.n];
            let mut z = vec![0.0; self.n];
            for i in 0..self.n {
                let pi = logistic(eta[i]);
                let qi = logistic(-eta[i]);
                let wi = (pi * qi).max(1e-10);
                let resid = if self.y[i] == 1 { qi } else { -pi };
                w[i] = wi;
                z[i] = eta[i] + resid / wi;
            }
            // weighted Gram matrix and right-hand side of the quadratic model
            let mut gram = vec![0.0; p * p];
            let mut rhs = vec![0.0; p];
            for (a, &j) in free.iter().enumerate() {
                let xj = self.col(j);
                rhs[j] = xj.iter().zip(&w).zip(&z).map(|((x, w), z)| x * w * z).sum::<f64>() / n;
                for &k in &free[a..] {
                    let xk = self.col(k);
                    let g = xj
                        .iter()
                        .zip(xk)
                        .zip(&w)
                        .map(|((a, b), w)| a * b * w)
                        .sum::<f64>()
                        / n;
                    gram[j * p + k] = g;
                    gram[k * p + j] = g;
                }
            }

            let mut nb = b.clone();
            let mut gb: Vec<f64> = (0..p)
                .map(|j| (0..p).map(|k| gram[j * p + k] * nb[k]).sum())
                .collect();
            for _ in 0..INNER_MAX_PASSES {
                let mut max_move = 0.0_f64;
                for &j in &free {
                    let gjj = gram[j * p + j];
                    if gjj <= 0.0 {
                        continue;
                    }
                    let u = rhs[j] - (gb[j] - gjj * nb[j]);
                    let new = if j == 0 {
                        u / gjj
                    } else {
                        soft_threshold(u, lambda) / gjj
                    };
                    let d = new - nb[j];
                    if d != 0.0 {
                        nb[j] = new;
                        for k in 0..p {
                            gb[k] += d * gram[k * p + j];
                        }
                        max_move = max_move.max(d.abs() * gjj.sqrt());
                    }
                }
                if max_move < INNER_TOL {
                    break;
                }
            }

            // backtrack along the proximal Newton direction if needed
            let mut t = 1.0;
            let mut cand = nb.clone();
            let mut cand_obj = self.objective(&cand, lambda);
            while cand_obj > obj + 1e-14 * obj.abs().max(1.0) && t > 1e-8 {
                t *= 0.5;
                cand = b.iter().zip(&nb).map(|(o, c)| o + t * (c - o)).collect();
                cand_obj = self.objective(&cand, lambda);
            }
            let change = b
                .iter()
                .zip(&cand)
                .fold(0.0_f64, |m, (o, c)| m.max((o - c).abs()));
            b = cand;
            obj = cand_obj;
            if change < OUTER_TOL {
                converged = true;
                break;
            }
        }
        LassoSolution {
            lambda,
            standardized: b,
            converged,
        }
    }

    /// Coefficients on the scale of the original design columns.
    pub fn unstandardize(&self, standardized: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        let mut intercept = standardized[0];
        for j in 1..self.n_cols() {
            if self.scales[j] > 0.0 {
                out[j] = standardized[j] / self.scales[j];
                intercept -= out[j] * self.centers[j];
            }
        }
        out[0] = intercept;
        out
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn outcome(&self) -> &[u8] {
        &self.y
    }

    pub fn path(&self, lambdas: &[f64]) -> LassoPath {
        let mut warnings = Vec::new();
        let mut solutions = Vec::with_capacity(lambdas.len());
        let mut warm: Option<Vec<f64>> = None;
        for &lambda in lambdas {
            let sol = self.solve(lambda, warm.as_deref());
            if !sol.converged {
                warnings.push(format!("lasso did not converge at lambda = {lambda:e}"));
            }
            warm = Some(sol.standardized.clone());
            solutions.push(sol);
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        let coefficient_sets: Vec<Vec<f64>> = solutions
            .iter()
            .map(|s| self.unstandardize(&s.standardized))
            .collect();
        let active_sets = solutions
            .iter()
            .map(|s| {
                (1..self.n_cols())
                    .filter(|&j| s.standardized[j] != 0.0)
                    .map(|j| self.column_names[j].clone())
                    .collect()
            })
            .collect();
        LassoPath {
            lambdas: lambdas.to_vec(),
            column_names: self.column_names.clone(),
            treat_name: self.design.treat_name.clone(),
            coefficient_sets,
            standardized_sets: solutions.into_iter().map(|s| s.standardized).collect(),
            active_sets,
            warnings,
        }
    }
}

#[inline]
pub fn soft_threshold(u: f64, lambda: f64) -> f64 {
    if u > lambda {
        u - lambda
    } else if u < -lambda {
        u + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Decreasing penalty grid.
    pub lambdas: Vec<f64>,
    pub column_names: Vec<String>,
    pub treat_name: String,
    /// Per-lambda coefficients on the original column scale, intercept
    /// first.
    pub coefficient_sets: Vec<Vec<f64>>,
    pub standardized_sets: Vec<Vec<f64>>,
    /// Per-lambda names of the nonzero penalized terms, in design order.
    pub active_sets: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

impl LassoPath {
    /// The penalized fit at grid index `k` as an interaction model.
    pub fn fit_at(&self, k: usize) -> InteractionFit {
        InteractionFit {
            model: FittedLogistic {
                columns: self.column_names.clone(),
                coefficients: self.coefficient_sets[k].clone(),
                converged: true,
                deviance: f64::NAN,
                iterations: 0,
                null_deviance: f64::NAN,
                n_obs: 0,
                warnings: vec![],
                deviance_trace: vec![],
            },
            treat_name: self.treat_name.clone(),
        }
    }
}

/// Path over the interaction design of `predictors` on the default grid.
pub fn lasso_path(train: &UpliftDataset, predictors: &[&str], nb_lambda: usize) -> Result<LassoPath> {
    let problem = LassoProblem::new(train, predictors)?;
    let grid = problem.lambda_grid(nb_lambda, DEFAULT_LAMBDA_MIN_RATIO)?;
    Ok(problem.path(&grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestFeaturesConfig {
    pub nb_lambda: usize,
    pub nb_group: usize,
    /// Score on a held-out part instead of the fitting data.
    pub validation: bool,
    /// Held-out fraction when `validation` is set.
    pub p: f64,
    pub seed: u64,
    pub lambda_min_ratio: f64,
    /// Explicit grid, overriding `nb_lambda` and `lambda_min_ratio`.
    pub lambdas: Option<Vec<f64>>,
}

impl Default for BestFeaturesConfig {
    fn default() -> Self {
        BestFeaturesConfig {
            nb_lambda: DEFAULT_NB_LAMBDA,
            nb_group: 10,
            validation: false,
            p: 0.3,
            seed: 0,
            lambda_min_ratio: DEFAULT_LAMBDA_MIN_RATIO,
            lambdas: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QiniScan {
    pub path: LassoPath,
    /// Qini coefficient of every path point.
    pub q_values: Vec<f64>,
    pub best_index: usize,
    pub best_lambda: f64,
    pub best_q: f64,
    /// Nonzero terms at the best penalty, intercept excluded.
    pub selected_terms: Vec<String>,
    /// Rows of the input dataset used for fitting the path.
    pub fit_rows: Vec<usize>,
    /// Rows of the input dataset the Qini coefficients were computed on.
    pub scoring_rows: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Qini coefficient of the penalized fit at grid index `k` on `scoring`.
pub fn path_point_qini(
    path: &LassoPath,
    k: usize,
    scoring: &UpliftDataset,
    nb_group: usize,
) -> Result<f64> {
    let predictions = inter_predict(&path.fit_at(k), scoring)?;
    let table = qini_table(scoring, &predictions, nb_group)?;
    Ok(qini_area(&table).q)
}

/// Fits the lasso path, scores every penalty by the Qini coefficient and
/// returns the terms active at the maximizing penalty. Ties go to the
/// earlier (larger) penalty.
pub fn best_features(
    ds: &UpliftDataset,
    predictors: &[&str],
    cfg: &BestFeaturesConfig,
) -> Result<QiniScan> {
    let all_rows: Vec<usize> = (0..ds.n()).collect();
    let (fit_ds, score_ds, fit_rows, scoring_rows) = if cfg.validation {
        if !(cfg.p > 0.0 && cfg.p < 1.0) {
            return Err(UpliftError::invalid("validation fraction must lie in (0, 1)"));
        }
        let split = split_uplift(ds, &SplitConfig::new(ds, 1.0 - cfg.p, cfg.seed))?;
        (split.train, split.valid, split.train_rows, split.valid_rows)
    } else {
        (ds.clone(), ds.clone(), all_rows.clone(), all_rows)
    };

    let problem = LassoProblem::new(&fit_ds, predictors)?;
    let grid = match &cfg.lambdas {
        Some(g) => {
            if g.is_empty() {
                return Err(UpliftError::invalid("empty lambda grid"));
            }
            g.clone()
        }
        None => problem.lambda_grid(cfg.nb_lambda, cfg.lambda_min_ratio)?,
    };
    let path = problem.path(&grid);

    let q_values = (0..grid.len())
        .into_par_iter()
        .map(|k| path_point_qini(&path, k, &score_ds, cfg.nb_group))
        .collect::<Result<Vec<f64>>>()?;

    let mut best_index = 0;
    for (k, &q) in q_values.iter().enumerate() {
        if q > q_values[best_index] {
            best_index = k;
        }
    }
    let mut warnings = path.warnings.clone();
    if path.active_sets.iter().all(|a| a.is_empty()) {
        warnings.push("every path point has an empty active set; nothing selected".into());
    } else if path.active_sets[best_index].is_empty() {
        warnings.push("the best path point has an empty active set".into());
    }
    for w in &warnings[path.warnings.len()..] {
        log::warn!("{w}");
    }
    Ok(QiniScan {
        best_lambda: grid[best_index],
        best_q: q_values[best_index],
        selected_terms: path.active_sets[best_index].clone(),
        path,
        q_values,
        best_index,
        fit_rows,
        scoring_rows,
        warnings,
    })
}

/// Unpenalized interaction fit over the selected terms.
pub fn refit_selected(train: &UpliftDataset, selected_terms: &[String]) -> Result<InteractionFit> {
    inter_uplift_fit(train, InterInput::Best(selected_terms))
}

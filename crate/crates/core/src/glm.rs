//! Binary logistic regression fitted by iteratively reweighted least squares.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::data::UpliftDataset;
use crate::error::{Result, UpliftError};
use crate::linalg;

pub const INTERCEPT: &str = "(Intercept)";

/// Largest coefficient change accepted as convergence.
pub const IRLS_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;
/// Coefficient magnitude treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e10;

/// How each design column relates to the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "feature", rename_all = "lowercase")]
pub enum Term {
    Intercept,
    Main(String),
    Treat,
    Interaction(String),
}

impl Term {
    pub fn name(&self, treat_name: &str) -> String {
        match self {
            Term::Intercept => INTERCEPT.to_string(),
            Term::Main(f) => f.clone(),
            Term::Treat => treat_name.to_string(),
            Term::Interaction(f) => format!("{treat_name}:{f}"),
        }
    }

    /// Parses a design column name back into a term. Anything that is not
    /// the intercept, the treatment or `<treat>:<feature>` is a main effect.
    pub fn parse(name: &str, treat_name: &str) -> Term {
        if name == INTERCEPT {
            Term::Intercept
        } else if name == treat_name {
            Term::Treat
        } else if let Some(f) = name
            .strip_prefix(treat_name)
            .and_then(|rest| rest.strip_prefix(':'))
        {
            Term::Interaction(f.to_string())
        } else {
            Term::Main(name.to_string())
        }
    }
}

/// Column-major `n x p` design with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub terms: Vec<Term>,
    pub treat_name: String,
    n: usize,
    values: Vec<f64>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|j| self.column(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols()).map(|j| self.values[j * self.n + i]).collect()
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    /// Builds the design for an explicit list of terms. The intercept is
    /// always placed first.
    pub fn from_terms(ds: &UpliftDataset, terms: &[Term]) -> Result<Self> {
        let treat_name = ds.treat_name().to_string();
        let mut all = vec![Term::Intercept];
        all.extend(terms.iter().filter(|t| **t != Term::Intercept).cloned());

        let names: Vec<String> = all.iter().map(|t| t.name(&treat_name)).collect();
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(UpliftError::invalid(format!("duplicate design term `{name}`")));
            }
        }

        let n = ds.n();
        let treat: Vec<f64> = ds.treat().iter().map(|&t| f64::from(t)).collect();
        let mut values = Vec::with_capacity(n * all.len());
        for term in &all {
            match term {
                Term::Intercept => values.extend(std::iter::repeat(1.0).take(n)),
                Term::Treat => values.extend_from_slice(&treat),
                Term::Main(f) => values.extend_from_slice(feature(ds, f)?),
                Term::Interaction(f) => {
                    let x = feature(ds, f)?;
                    values.extend(x.iter().zip(&treat).map(|(a, b)| a * b));
                }
            }
        }
        Ok(DesignMatrix {
            column_names: names,
            terms: all,
            treat_name,
            n,
            values,
        })
    }
}

fn feature<'a>(ds: &'a UpliftDataset, name: &str) -> Result<&'a [f64]> {
    if name == ds.outcome_name() {
        return Err(UpliftError::invalid(format!(
            "outcome `{name}` cannot be used as a predictor"
        )));
    }
    ds.numeric(name)
}

/// Intercept, then `predictors` in order; with `with_treat_interactions`
/// also the treatment column and `<treat>:<p>` for every predictor.
pub fn build_design(
    ds: &UpliftDataset,
    predictors: &[&str],
    with_treat_interactions: bool,
) -> Result<DesignMatrix> {
    let mut seen = HashSet::new();
    for p in predictors {
        if !seen.insert(*p) {
            return Err(UpliftError::invalid(format!("duplicate predictor `{p}`")));
        }
        if with_treat_interactions && *p == ds.treat_name() {
            return Err(UpliftError::invalid(format!(
                "predictor `{p}` is the treatment column"
            )));
        }
    }
    let mut terms: Vec<Term> = predictors
        .iter()
        .map(|p| {
            if *p == ds.treat_name() {
                Term::Treat
            } else {
                Term::Main(p.to_string())
            }
        })
        .collect();
    if with_treat_interactions {
        terms.push(Term::Treat);
        terms.extend(predictors.iter().map(|p| Term::Interaction(p.to_string())));
    }
    DesignMatrix::from_terms(ds, &terms)
}

#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli deviance `-2 * loglik` for linear predictors `eta`.
pub fn deviance(eta: &[f64], y: &[u8]) -> f64 {
    2.0 * eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| if yi == 1 { softplus(-e) } else { softplus(e) })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLogistic {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub deviance: f64,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub null_deviance: f64,
    #[serde(default)]
    pub n_obs: usize,
    #[serde(skip)]
    pub warnings: Vec<String>,
    /// Deviance after each accepted IRLS step, starting with the initial
    /// point.
    #[serde(skip)]
    pub deviance_trace: Vec<f64>,
}

impl FittedLogistic {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|j| self.coefficients[j])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fit: FittedLogistic = serde_json::from_str(text)?;
        if fit.columns.len() != fit.coefficients.len() {
            return Err(UpliftError::schema(
                "columns and coefficients differ in length",
            ));
        }
        Ok(fit)
    }

    /// Linear predictor for every row of `x`, matching columns by name.
    pub fn linear_predictor(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        check_columns(&self.columns, &x.column_names)?;
        let mut eta = vec![0.0; x.n_rows()];
        for (name, &b) in self.columns.iter().zip(&self.coefficients) {
            let col = x.column_by_name(name).expect("checked above");
            for (e, v) in eta.iter_mut().zip(col) {
                *e += b * v;
            }
        }
        Ok(eta)
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        Ok(self
            .linear_predictor(x)?
            .into_iter()
            .map(logistic)
            .collect())
    }

    /// Probability for one design row given as parallel name/value slices.
    pub fn predict_prob(&self, names: &[String], row: &[f64]) -> Result<f64> {
        if names.len() != row.len() {
            return Err(UpliftError::invalid("row names and values differ in length"));
        }
        check_columns(&self.columns, names)?;
        let eta: f64 = self
            .columns
            .iter()
            .zip(&self.coefficients)
            .map(|(c, b)| {
                let j = names.iter().position(|n| n == c).expect("checked above");
                b * row[j]
            })
            .sum();
        Ok(logistic(eta))
    }
}

fn check_columns(expected: &[String], got: &[String]) -> Result<()> {
    let got_set: HashSet<&str> = got.iter().map(String::as_str).collect();
    let exp_set: HashSet<&str> = expected.iter().map(String::as_str).collect();
    let missing: Vec<String> = expected
        .iter()
        .filter(|c| !got_set.contains(c.as_str()))
        .cloned()
        .collect();
    let extra: Vec<String> = got
        .iter()
        .filter(|c| !exp_set.contains(c.as_str()))
        .cloned()
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        Err(UpliftError::ColumnMismatch { missing, extra })
    }
}

/// Maximum-likelihood logistic fit.
///
/// Each IRLS step solves the weighted least-squares problem
/// `sqrt(W) X d = (y - p) / sqrt(W)` by QR and halves the step while the
/// deviance goes up. Iteration stops once the largest coefficient change is
/// below [`IRLS_TOL`], after [`IRLS_MAX_ITER`] steps, or when a coefficient
/// exceeds [`DIVERGENCE_BOUND`] in magnitude; the latter two return the last
/// iterate with `converged = false` and a warning.
pub fn fit_logistic(x: &DesignMatrix, y: &[u8]) -> Result<FittedLogistic> {
    let n = x.n_rows();
    let p = x.n_cols();
    if y.len() != n {
        return Err(UpliftError::invalid(format!(
            "outcome has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= p {
        return Err(UpliftError::invalid(format!(
            "need more observations ({n}) than design columns ({p})"
        )));
    }
    if let Some(i) = y.iter().position(|&v| v > 1) {
        return Err(UpliftError::Validation {
            row: i + 1,
            message: "outcome must be 0 or 1".into(),
        });
    }
    // structural collinearity, independent of the weights
    if let Err(j) = linalg::least_squares(x.values(), n, p, &vec![0.0; n]) {
        return Err(UpliftError::RankDeficient {
            column: x.column_names[j].clone(),
        });
    }

    let has_intercept = x.terms.first() == Some(&Term::Intercept);
    let mean_y = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let null_deviance = if has_intercept {
        deviance(&vec![logit_clamped(mean_y); n], y)
    } else {
        deviance(&vec![0.0; n], y)
    };

    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    let mut dev = deviance(&eta, y);
    let mut trace = vec![dev];
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut a = vec![0.0; n * p];
    let mut rhs = vec![0.0; n];
    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        for i in 0..n {
            let pi = logistic(eta[i]);
            let qi = logistic(-eta[i]);
            let w = (pi * qi).max(f64::MIN_POSITIVE);
            let sw = w.sqrt();
            let resid = if y[i] == 1 { qi } else { -pi };
            rhs[i] = resid / sw;
            for j in 0..p {
                a[j * n + i] = sw * x.values[j * n + i];
            }
        }
        let delta = linalg::least_squares(&a, n, p, &rhs).map_err(|j| {
            UpliftError::RankDeficient {
                column: x.column_names[j].clone(),
            }
        })?;

        let mut step = 1.0;
        let (new_beta, new_eta, new_dev) = loop {
            let cand: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
            let cand_eta = eta_of(x, &cand);
            let cand_dev = deviance(&cand_eta, y);
            if cand_dev <= dev * (1.0 + 1e-12) + 1e-12 || step < 1e-10 {
                break (cand, cand_eta, cand_dev);
            }
            step *= 0.5;
        };
        let change = beta
            .iter()
            .zip(&new_beta)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let too_big = new_beta.iter().any(|b| b.abs() > DIVERGENCE_BOUND);
        beta = new_beta;
        eta = new_eta;
        dev = new_dev;
        trace.push(new_dev);
        if too_big {
            warnings.push(format!(
                "coefficients diverged beyond {DIVERGENCE_BOUND:e} (quasi-separation)"
            ));
            break;
        }
        if change < IRLS_TOL {
            converged = true;
            break;
        }
    }
    if !converged && warnings.is_empty() {
        warnings.push(format!(
            "IRLS did not converge in {IRLS_MAX_ITER} iterations; the data may be separated"
        ));
    }
    if eta.iter().any(|e| e.abs() > 30.0) {
        warnings.push("fitted probabilities numerically 0 or 1 occurred".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(FittedLogistic {
        columns: x.column_names.clone(),
        coefficients: beta,
        converged,
        deviance: deviance(&eta, y),
        iterations,
        null_deviance,
        n_obs: n,
        warnings,
        deviance_trace: trace,
    })
}

fn eta_of(x: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    let n = x.n_rows();
    let mut eta = vec![0.0; n];
    for (j, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (e, v) in eta.iter_mut().zip(x.column(j)) {
            *e += b * v;
        }
    }
    eta
}

fn logit_clamped(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

//! The two-model and interaction uplift estimators.

use serde::{Deserialize, Serialize};

use crate::data::UpliftDataset;
use crate::error::{Result, UpliftError};
use crate::glm::{build_design, fit_logistic, DesignMatrix, FittedLogistic, Term};

/// Separate logistic fits on the control and treated arms; the uplift is
/// the difference of their predicted probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModelFit {
    pub model_control: FittedLogistic,
    pub model_treated: FittedLogistic,
    pub predictors: Vec<String>,
}

/// A single logistic fit over main effects, the treatment indicator and
/// treatment interactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionFit {
    pub model: FittedLogistic,
    pub treat_name: String,
}

impl InteractionFit {
    /// Design terms, recovered from the coefficient names.
    pub fn terms(&self) -> Vec<Term> {
        self.model
            .columns
            .iter()
            .map(|c| Term::parse(c, &self.treat_name))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UpliftModel {
    Dual(TwoModelFit),
    Interaction(InteractionFit),
}

impl UpliftModel {
    pub fn predict(&self, ds: &UpliftDataset) -> Result<Vec<f64>> {
        match self {
            UpliftModel::Dual(fit) => dual_predict(fit, ds),
            UpliftModel::Interaction(fit) => inter_predict(fit, ds),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UpliftModel::Dual(_) => "dual",
            UpliftModel::Interaction(_) => "interaction",
        }
    }
}

pub fn dual_uplift_fit(train: &UpliftDataset, predictors: &[&str]) -> Result<TwoModelFit> {
    let n_cols = predictors.len() + 1;
    let mut fits = Vec::with_capacity(2);
    for (arm, label) in [(0u8, "control"), (1u8, "treated")] {
        let group = train.arm(arm)?;
        if group.n() <= n_cols {
            return Err(UpliftError::EmptyGroup(format!(
                "{label} group has {} rows, fewer than needed for {n_cols} coefficients",
                group.n()
            )));
        }
        let x = build_design(&group, predictors, false)?;
        fits.push(fit_logistic(&x, group.outcome())?);
    }
    let model_treated = fits.pop().expect("two fits");
    let model_control = fits.pop().expect("two fits");
    Ok(TwoModelFit {
        model_control,
        model_treated,
        predictors: predictors.iter().map(|s| s.to_string()).collect(),
    })
}

pub fn dual_predict(fit: &TwoModelFit, ds: &UpliftDataset) -> Result<Vec<f64>> {
    let predictors: Vec<&str> = fit.predictors.iter().map(String::as_str).collect();
    let x = build_design(ds, &predictors, false)?;
    let p1 = fit.model_treated.predict(&x)?;
    let p0 = fit.model_control.predict(&x)?;
    Ok(p1.iter().zip(&p0).map(|(a, b)| a - b).collect())
}

/// Which design the interaction estimator is fitted on.
#[derive(Debug, Clone, PartialEq)]
pub enum InterInput<'a> {
    /// Main effects, treatment, and one interaction per predictor.
    All(&'a [&'a str]),
    /// Exactly the named design terms, e.g. the output of feature
    /// selection. The intercept is always added.
    Best(&'a [String]),
}

pub fn inter_uplift_fit(train: &UpliftDataset, input: InterInput<'_>) -> Result<InteractionFit> {
    if train.n_treated() == 0 || train.n_control() == 0 {
        return Err(UpliftError::EmptyGroup(
            "interaction fit needs treated and control rows".into(),
        ));
    }
    let x = match input {
        InterInput::All(predictors) => build_design(train, predictors, true)?,
        InterInput::Best(terms) => {
            let parsed: Vec<Term> = terms
                .iter()
                .map(|t| Term::parse(t, train.treat_name()))
                .collect();
            for (t, name) in parsed.iter().zip(terms) {
                let feature = match t {
                    Term::Main(f) | Term::Interaction(f) => f,
                    _ => continue,
                };
                if train.numeric(feature).is_err() {
                    return Err(UpliftError::schema(format!(
                        "selected term `{name}` refers to unknown numeric column `{feature}`"
                    )));
                }
            }
            DesignMatrix::from_terms(train, &parsed)?
        }
    };
    let model = fit_logistic(&x, train.outcome())?;
    Ok(InteractionFit {
        model,
        treat_name: train.treat_name().to_string(),
    })
}

/// Uplift as `p(x, treat = 1) - p(x, treat = 0)`; the observed treatment of
/// each row is ignored.
pub fn inter_predict(fit: &InteractionFit, ds: &UpliftDataset) -> Result<Vec<f64>> {
    let terms = fit.terms();
    let treated = DesignMatrix::from_terms(&ds.with_treatment(1)?, &terms)?;
    let control = DesignMatrix::from_terms(&ds.with_treatment(0)?, &terms)?;
    let p1 = fit.model.predict(&treated)?;
    let p0 = fit.model.predict(&control)?;
    Ok(p1.iter().zip(&p0).map(|(a, b)| a - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::glm::{logistic, INTERCEPT};

    fn fitted(columns: &[&str], coefficients: &[f64]) -> FittedLogistic {
        FittedLogistic {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            coefficients: coefficients.to_vec(),
            converged: true,
            deviance: 0.0,
            iterations: 0,
            null_deviance: 0.0,
            n_obs: 0,
            warnings: vec![],
            deviance_trace: vec![],
        }
    }

    fn rows(n: usize) -> UpliftDataset {
        UpliftDataset::new(
            "y",
            vec![0; n],
            "treat",
            (0..n).map(|i| (i % 2) as u8).collect(),
            vec![Column::numeric("a", vec![0.0; n])],
        )
        .unwrap()
    }

    #[test]
    fn dual_predict_from_campaign_intercepts() {
        let fit = TwoModelFit {
            model_control: fitted(&[INTERCEPT, "a"], &[-2.1557961, 0.3]),
            model_treated: fitted(&[INTERCEPT, "a"], &[-2.0427178, -0.1]),
            predictors: vec!["a".into()],
        };
        let u = dual_predict(&fit, &rows(3)).unwrap();
        let expected = logistic(-2.0427178) - logistic(-2.1557961);
        assert!((expected - 0.0110).abs() < 1e-4);
        for v in u {
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_with_only_treat_effect() {
        let fit = InteractionFit {
            model: fitted(&[INTERCEPT, "treat"], &[0.0, 0.5]),
            treat_name: "treat".into(),
        };
        let u = inter_predict(&fit, &rows(4)).unwrap();
        for v in u {
            assert!((v - 0.12245933120185459).abs() < 1e-12);
        }
    }

    #[test]
    fn no_treatment_terms_means_zero_uplift() {
        let fit = InteractionFit {
            model: fitted(&[INTERCEPT, "a", "treat", "treat:a"], &[0.3, 1.0, 0.0, 0.0]),
            treat_name: "treat".into(),
        };
        assert!(inter_predict(&fit, &rows(5)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_predictor_is_an_error() {
        let fit = TwoModelFit {
            model_control: fitted(&[INTERCEPT, "b"], &[0.0, 0.0]),
            model_treated: fitted(&[INTERCEPT, "b"], &[0.0, 0.0]),
            predictors: vec!["b".into()],
        };
        assert!(dual_predict(&fit, &rows(2)).is_err());
    }

    #[test]
    fn all_mode_design_columns() {
        let ds = UpliftDataset::new(
            "y",
            vec![0, 1, 0, 1, 1, 0, 0, 1],
            "treat",
            vec![0, 0, 0, 0, 1, 1, 1, 1],
            vec![Column::numeric(
                "a",
                vec![0.1, 0.5, 0.2, 0.9, 0.7, 0.3, 0.4, 0.8],
            )],
        )
        .unwrap();
        let fit = inter_uplift_fit(&ds, InterInput::All(&["a"])).unwrap();
        assert_eq!(fit.model.columns, vec![INTERCEPT, "a", "treat", "treat:a"]);
    }

    #[test]
    fn best_mode_rejects_unknown_terms() {
        let ds = rows(10);
        let terms = vec!["treat".to_string(), "treat:zzz".to_string()];
        assert!(inter_uplift_fit(&ds, InterInput::Best(&terms)).is_err());
    }

    #[test]
    fn dual_fit_needs_both_arms() {
        let ds = UpliftDataset::new(
            "y",
            vec![0, 1, 0, 1],
            "treat",
            vec![1; 4],
            vec![Column::numeric("a", vec![1.0, 2.0, 3.0, 4.0])],
        )
        .unwrap();
        assert!(matches!(
            dual_uplift_fit(&ds, &["a"]),
            Err(UpliftError::EmptyGroup(_))
        ));
    }

    #[test]
    fn model_envelope_json() {
        let model = UpliftModel::Interaction(InteractionFit {
            model: fitted(&[INTERCEPT, "treat"], &[0.1, 0.2]),
            treat_name: "treat".into(),
        });
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"kind\":\"interaction\""));
        let back: UpliftModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
}

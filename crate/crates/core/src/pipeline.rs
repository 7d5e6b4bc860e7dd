//! End-to-end model comparison: quantize, split, fit baselines, select
//! features for each variable version and score everything on the
//! held-out part.

use serde::{Deserialize, Serialize};

use crate::data::{split_uplift, DummyEncoding, ReferenceLevel, SplitConfig, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::estimators::{dual_uplift_fit, inter_uplift_fit, InterInput, UpliftModel};
use crate::qini::{overall_uplift, qini_area, qini_table, QiniTable};
use crate::quantize::{bin_uplift_enhanced, square_uplift, BinRequest, BinTraceEntry, SquareParams};
use crate::select::{best_features, refit_selected, BestFeaturesConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SquareRequest {
    pub var1: String,
    pub var2: String,
    pub params: SquareParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub predictors: Vec<String>,
    /// Training fraction of the stratified split.
    pub train_fraction: f64,
    pub seed: u64,
    /// Qini panels, used both for selection and for evaluation.
    pub nb_group: usize,
    pub nb_lambda: usize,
    /// Univariate quantizations, run on the full data before splitting.
    pub quantize: Vec<BinRequest>,
    pub square: Option<SquareRequest>,
}

impl PipelineConfig {
    pub fn new(predictors: &[&str]) -> Self {
        PipelineConfig {
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            train_fraction: 0.7,
            seed: 0,
            nb_group: 5,
            nb_lambda: 100,
            quantize: Vec::new(),
            square: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub feature_selection: bool,
    pub qini: f64,
    pub qini_raw: f64,
    pub predictors: Vec<String>,
    pub selected_terms: Option<Vec<String>>,
    pub best_lambda: Option<f64>,
    pub selection_q: Option<f64>,
    #[serde(skip)]
    pub model: Option<UpliftModel>,
    #[serde(skip)]
    pub table: Option<QiniTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_valid: usize,
    pub overall_uplift_train: f64,
    pub overall_uplift_valid: f64,
    pub quantization: Vec<BinTraceEntry>,
    pub encodings: Vec<DummyEncoding>,
    pub models: Vec<ModelReport>,
    pub warnings: Vec<String>,
}

impl PipelineReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }
}

pub const BASELINE_DUAL: &str = "Baseline (two-model)";
pub const BASELINE_INTER: &str = "Baseline (interaction)";
pub const NO_QUANTIZATION: &str = "No quantization";

/// `predictors` with each of `replaced` removed; `insert` goes where the
/// first replaced predictor was.
fn substitute(predictors: &[String], replaced: &[&str], insert: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut inserted = false;
    for p in predictors {
        if replaced.contains(&p.as_str()) {
            if !inserted {
                out.extend_from_slice(insert);
                inserted = true;
            }
        } else {
            out.push(p.clone());
        }
    }
    if !inserted {
        out.extend_from_slice(insert);
    }
    out
}

fn score(valid: &UpliftDataset, model: &UpliftModel, nb_group: usize) -> Result<(QiniTable, f64, f64)> {
    let table = qini_table(valid, &model.predict(valid)?, nb_group)?;
    let area = qini_area(&table);
    Ok((table, area.q, area.q_raw))
}

pub fn run_pipeline(ds: &UpliftDataset, cfg: &PipelineConfig) -> Result<PipelineReport> {
    if cfg.predictors.is_empty() {
        return Err(UpliftError::invalid("no predictors given"));
    }
    let mut warnings = Vec::new();

    // quantized versions of the variables, as categorical columns
    let (mut data, quantization) = bin_uplift_enhanced(ds, &cfg.quantize)?;
    let mut bivariate = None;
    if let Some(sq) = &cfg.square {
        let (_, augmented) = square_uplift(&data, &sq.var1, &sq.var2, sq.params)?;
        data = augmented;
        bivariate = Some(format!("Cat_{}_{}", sq.var1, sq.var2));
    }

    let mut variants: Vec<(String, Vec<String>)> = vec![(NO_QUANTIZATION.into(), cfg.predictors.clone())];
    let mut encodings = Vec::new();
    let mut quantized = Vec::new();
    for entry in &quantization {
        if !matches!(entry.status, crate::quantize::BinTraceStatus::Quantized { .. }) {
            warnings.push(format!("{} was not quantized", entry.variable));
            continue;
        }
        let enc = DummyEncoding::fit(&data, &format!("{}_quantized", entry.variable), ReferenceLevel::First)?;
        data = enc.apply(&data)?;
        quantized.push((entry.variable.clone(), enc.indicator_names()));
        encodings.push(enc);
    }
    for (var, names) in &quantized {
        variants.push((
            format!("Categorical {var} only"),
            substitute(&cfg.predictors, &[var], names),
        ));
    }
    if quantized.len() >= 2 {
        let mut preds = cfg.predictors.clone();
        for (var, names) in &quantized {
            preds = substitute(&preds, &[var], names);
        }
        let vars: Vec<&str> = quantized.iter().map(|(v, _)| v.as_str()).collect();
        variants.push((format!("Univariate categorical {}", vars.join(" and ")), preds));
    }
    if let (Some(cat), Some(sq)) = (&bivariate, &cfg.square) {
        match DummyEncoding::fit(&data, cat, ReferenceLevel::First) {
            Ok(enc) => {
                data = enc.apply(&data)?;
                variants.push((
                    format!("Bivariate categorical {} and {}", sq.var1, sq.var2),
                    substitute(&cfg.predictors, &[&sq.var1, &sq.var2], &enc.indicator_names()),
                ));
                encodings.push(enc);
            }
            Err(e) => warnings.push(format!("bivariate categories unusable: {e}")),
        }
    }

    let split = split_uplift(&data, &SplitConfig::new(&data, cfg.train_fraction, cfg.seed))?;
    warnings.extend(split.warnings.iter().cloned());
    let (train, valid) = (&split.train, &split.valid);

    let base: Vec<&str> = cfg.predictors.iter().map(String::as_str).collect();
    let mut models = Vec::new();
    for (name, model) in [
        (BASELINE_DUAL, UpliftModel::Dual(dual_uplift_fit(train, &base)?)),
        (
            BASELINE_INTER,
            UpliftModel::Interaction(inter_uplift_fit(train, InterInput::All(&base))?),
        ),
    ] {
        let (table, q, q_raw) = score(valid, &model, cfg.nb_group)?;
        models.push(ModelReport {
            name: name.into(),
            feature_selection: false,
            qini: q,
            qini_raw: q_raw,
            predictors: cfg.predictors.clone(),
            selected_terms: None,
            best_lambda: None,
            selection_q: None,
            model: Some(model),
            table: Some(table),
        });
    }

    let select_cfg = BestFeaturesConfig {
        nb_lambda: cfg.nb_lambda,
        nb_group: cfg.nb_group,
        seed: cfg.seed,
        ..Default::default()
    };
    for (name, predictors) in variants {
        let preds: Vec<&str> = predictors.iter().map(String::as_str).collect();
        let scan = best_features(train, &preds, &select_cfg)?;
        warnings.extend(scan.warnings.iter().map(|w| format!("{name}: {w}")));
        let model = UpliftModel::Interaction(refit_selected(train, &scan.selected_terms)?);
        let (table, q, q_raw) = score(valid, &model, cfg.nb_group)?;
        models.push(ModelReport {
            name,
            feature_selection: true,
            qini: q,
            qini_raw: q_raw,
            predictors,
            selected_terms: Some(scan.selected_terms),
            best_lambda: Some(scan.best_lambda),
            selection_q: Some(scan.best_q),
            model: Some(model),
            table: Some(table),
        });
    }

    Ok(PipelineReport {
        seed: cfg.seed,
        n_train: train.n(),
        n_valid: valid.n(),
        overall_uplift_train: overall_uplift(train)?,
        overall_uplift_valid: overall_uplift(valid)?,
        quantization,
        encodings,
        models,
        warnings,
    })
}

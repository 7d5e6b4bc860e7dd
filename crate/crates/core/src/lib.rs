//! Regression-based uplift modeling.
//!
//! The crate covers the usual workflow for a randomized campaign with a
//! binary outcome: ingest and split the data ([`data`]), fit the two-model
//! or interaction logistic estimators ([`estimators`]), validate them with
//! Qini curves ([`qini`]), choose interaction terms by maximizing the Qini
//! coefficient along a lasso path ([`select`]), and quantize continuous
//! predictors by their observed uplift ([`quantize`]).

pub mod cli;
pub mod data;
pub mod error;
pub mod estimators;
pub mod glm;
mod linalg;
pub mod pipeline;
pub mod plot;
pub mod qini;
pub mod quantize;
pub mod select;
pub mod synth;

pub use data::{
    encode_dummies, load_csv, read_csv, split_uplift, Column, ColumnData, Split, SplitConfig,
    UpliftDataset,
};
pub use error::{Result, UpliftError};
pub use estimators::{
    dual_predict, dual_uplift_fit, inter_predict, inter_uplift_fit, InterInput, InteractionFit,
    TwoModelFit, UpliftModel,
};
pub use glm::{build_design, fit_logistic, DesignMatrix, FittedLogistic, Term};
pub use qini::{overall_uplift, qini_area, qini_table, QiniResult, QiniTable};
pub use quantize::{bin_uplift, square_uplift, BinOutcome, BinParams, QuantizationTree, RectGrid};
pub use select::{best_features, BestFeaturesConfig, LassoPath, QiniScan};

//! Command-line front end.
//!
//! Every subcommand reads one CSV file and writes its artifacts under
//! `--out` as `models/*.json`, `tables/*.csv`, `plots/*.svg` and a
//! `report.json` summary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{
    load_csv, load_hillstrom, split_uplift, DummyEncoding, ReferenceLevel, SplitConfig,
    UpliftDataset, HILLSTROM_PREDICTORS,
};
use crate::estimators::{dual_uplift_fit, inter_uplift_fit, InterInput, UpliftModel};
use crate::pipeline::{run_pipeline, PipelineConfig, SquareRequest};
use crate::plot;
use crate::qini::{overall_uplift, qini_area, qini_table};
use crate::quantize::{
    bin_uplift, bin_uplift_categorical, bin_uplift_enhanced, square_cv, square_uplift, BinOutcome,
    BinParams, BinRequest, SquareParams,
};
use crate::select::{best_features, refit_selected, BestFeaturesConfig};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "UPLIFTKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "upliftkit", version, about = "Uplift modeling for randomized campaigns")]
pub struct Cli {
    /// Directory receiving models/, tables/, plots/ and report.json.
    #[arg(long, global = true, default_value = "upliftkit-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified train/validation split.
    Split(SplitArgs),
    /// Fit a two-model or interaction estimator.
    Fit(FitArgs),
    /// Predict uplift with a saved model.
    Predict(PredictArgs),
    /// Qini table, curve, bars and coefficient.
    Eval(EvalArgs),
    /// Qini-maximizing lasso feature selection.
    Select(SelectArgs),
    /// Univariate supervised quantization.
    Bin(BinArgs),
    /// Bivariate quantization on a rectangle grid.
    Square(SquareArgs),
    /// Choose the grid size and category count by held-out Qini.
    Squarecv(SquareCvArgs),
    /// Split, fit baselines, quantize, select and compare.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Reference {
    First,
    Last,
}

impl From<Reference> for ReferenceLevel {
    fn from(r: Reference) -> Self {
        match r {
            Reference::First => ReferenceLevel::First,
            Reference::Last => ReferenceLevel::Last,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, required_unless_present = "hillstrom")]
    pub outcome: Option<String>,
    #[arg(long, required_unless_present = "hillstrom")]
    pub treat: Option<String>,
    /// Read the raw Hillstrom e-mail file: women's e-mail vs. no e-mail,
    /// outcome `visit`, categorical columns already expanded.
    #[arg(long)]
    pub hillstrom: bool,
    /// Categorical columns to expand into indicators.
    #[arg(long, value_delimiter = ',')]
    pub dummies: Vec<String>,
    /// Level left out of each indicator set.
    #[arg(long, value_enum, default_value = "first")]
    pub reference: Reference,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Training fraction.
    #[arg(long, default_value_t = 0.7)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Estimator {
    Dual,
    Inter,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "dual")]
    pub estimator: Estimator,
    /// Predictors; defaults to every numeric feature.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    /// Exact design terms for the interaction estimator, e.g. the output
    /// of `select`. Accepts a comma list or a selected_terms.json path.
    #[arg(long, conflicts_with = "predictors")]
    pub terms: Option<String>,
    #[arg(long, default_value = "model")]
    pub name: String,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "predictions")]
    pub name: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub model: Option<PathBuf>,
    /// CSV with one prediction per data row.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value = "uplift")]
    pub column: String,
    #[arg(long, default_value_t = 10)]
    pub nb_group: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub nb_lambda: usize,
    #[arg(long, default_value_t = 10)]
    pub nb_group: usize,
    #[arg(long)]
    pub validation: bool,
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the best penalty and its Qini coefficient.
    #[arg(long)]
    pub value: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BinArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Variables to quantize.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub n_split: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 30)]
    pub n_min: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SquareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub var1: String,
    #[arg(long)]
    pub var2: String,
    #[arg(long, default_value_t = 10)]
    pub n_split: usize,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 3)]
    pub nb_group: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SquareCvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub var1: String,
    #[arg(long)]
    pub var2: String,
    /// Grid sizes `b` to try.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    pub b_grid: Vec<usize>,
    /// Category counts `c` to try.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub c_grid: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    /// Qini panels for scoring.
    #[arg(long, default_value_t = 10)]
    pub nb_group: usize,
    /// Held-out fraction.
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Defaults to the Hillstrom predictors with --hillstrom, otherwise
    /// every numeric feature.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    #[arg(long, default_value_t = 0.7)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub nb_group: usize,
    #[arg(long, default_value_t = 100)]
    pub nb_lambda: usize,
    /// Univariate quantization as `var:n_split:alpha[:n_min]`; repeatable.
    #[arg(long)]
    pub quantize: Vec<String>,
    /// Bivariate quantization as `var1,var2:b:c[:n_min]`.
    #[arg(long)]
    pub square: Option<String>,
}

/// A saved estimator plus the indicator encodings its inputs need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: UpliftModel,
    #[serde(default)]
    pub encodings: Vec<DummyEncoding>,
}

struct Output {
    root: PathBuf,
}

impl Output {
    fn new(root: &Path) -> anyhow::Result<Self> {
        for sub in ["models", "tables", "plots"] {
            fs::create_dir_all(root.join(sub))
                .with_context(|| format!("creating {}", root.join(sub).display()))?;
        }
        Ok(Output {
            root: root.to_path_buf(),
        })
    }

    fn path(&self, sub: &str, file: &str) -> PathBuf {
        self.root.join(sub).join(file)
    }

    fn write(&self, sub: &str, file: &str, text: &str) -> anyhow::Result<PathBuf> {
        let path = if sub.is_empty() {
            self.root.join(file)
        } else {
            self.path(sub, file)
        };
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn json<T: Serialize>(&self, sub: &str, file: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(sub, file, &text)
    }

    fn report(&self, value: &serde_json::Value) -> anyhow::Result<PathBuf> {
        self.json("", "report.json", value)
    }
}

fn load(args: &DataArgs) -> anyhow::Result<(UpliftDataset, Vec<DummyEncoding>)> {
    let mut ds = if args.hillstrom {
        load_hillstrom(&args.data)
    } else {
        load_csv(
            &args.data,
            args.outcome.as_deref().unwrap_or_default(),
            args.treat.as_deref().unwrap_or_default(),
        )
    }
    .with_context(|| format!("data: loading {}", args.data.display()))?;
    let mut encodings = Vec::new();
    for col in &args.dummies {
        let enc = DummyEncoding::fit(&ds, col, args.reference.into()).context("data")?;
        ds = enc.apply(&ds).context("data")?;
        encodings.push(enc);
    }
    Ok((ds, encodings))
}

fn numeric_features(ds: &UpliftDataset) -> Vec<String> {
    ds.columns()
        .iter()
        .filter(|c| matches!(c.data, crate::data::ColumnData::Numeric(_)))
        .map(|c| c.name.clone())
        .collect()
}

fn predictors_or_default(given: &[String], ds: &UpliftDataset, hillstrom: bool) -> Vec<String> {
    if !given.is_empty() {
        given.to_vec()
    } else if hillstrom {
        HILLSTROM_PREDICTORS.iter().map(|s| s.to_string()).collect()
    } else {
        numeric_features(ds)
    }
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn write_predictions(out: &Output, file: &str, predictions: &[f64]) -> anyhow::Result<PathBuf> {
    let path = out.path("tables", file);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["row", "uplift"])?;
    for (i, p) in predictions.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

fn read_predictions(path: &Path, column: &str) -> anyhow::Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("reading predictions {}", path.display()))?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("predictions file has no `{column}` column"))?;
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec[idx]
            .trim()
            .parse()
            .with_context(|| format!("predictions row {}: not a number", r + 1))?;
        out.push(v);
    }
    Ok(out)
}

fn load_model(path: &Path) -> anyhow::Result<ModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("estimators: parsing {}", path.display()))
}

/// Applies the model's encodings unless the data already has them.
fn prepare_for_model(mut ds: UpliftDataset, file: &ModelFile) -> anyhow::Result<UpliftDataset> {
    for enc in &file.encodings {
        if ds.has_column(&enc.column) {
            ds = enc.apply(&ds).context("data")?;
        }
    }
    Ok(ds)
}

fn parse_terms(arg: &str) -> anyhow::Result<Vec<String>> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") && path.exists() {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let terms = value
            .get("selected_terms")
            .unwrap_or(&value)
            .as_array()
            .context("terms file must hold a list or a `selected_terms` list")?;
        return terms
            .iter()
            .map(|t| t.as_str().map(str::to_string).context("terms must be strings"))
            .collect();
    }
    Ok(arg.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
}

fn parse_bin_request(arg: &str) -> anyhow::Result<BinRequest> {
    let parts: Vec<&str> = arg.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        bail!("--quantize expects var:n_split:alpha[:n_min], got `{arg}`");
    }
    Ok(BinRequest {
        variable: parts[0].to_string(),
        params: BinParams {
            n_split: parts[1].parse().context("n_split")?,
            alpha: parts[2].parse().context("alpha")?,
            n_min: parts.get(3).map_or(Ok(30), |s| s.parse()).context("n_min")?,
        },
    })
}

fn parse_square_request(arg: &str) -> anyhow::Result<SquareRequest> {
    let parts: Vec<&str> = arg.split(':').collect();
    let vars: Vec<&str> = parts[0].split(',').collect();
    if vars.len() != 2 || !(3..=4).contains(&parts.len()) {
        bail!("--square expects var1,var2:b:c[:n_min], got `{arg}`");
    }
    Ok(SquareRequest {
        var1: vars[0].to_string(),
        var2: vars[1].to_string(),
        params: SquareParams {
            n_split: parts[1].parse().context("b")?,
            nb_group: parts[2].parse().context("c")?,
            n_min: parts.get(3).map_or(Ok(1), |s| s.parse()).context("n_min")?,
        },
    })
}

fn slug(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

fn cmd_split(a: &SplitArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let split = split_uplift(&ds, &SplitConfig::new(&ds, a.p, a.seed)).context("data")?;
    split.train.save_csv(out.path("tables", "train.csv"))?;
    split.valid.save_csv(out.path("tables", "valid.csv"))?;
    writeln!(w, "train: {} rows, valid: {} rows", split.train.n(), split.valid.n())?;
    out.report(&json!({
        "n_train": split.train.n(),
        "n_valid": split.valid.n(),
        "overall_uplift_train": overall_uplift(&split.train)?,
        "overall_uplift_valid": overall_uplift(&split.valid)?,
        "warnings": split.warnings,
    }))?;
    Ok(())
}

fn cmd_fit(a: &FitArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, encodings) = load(&a.data)?;
    let model = match (a.estimator, &a.terms) {
        (Estimator::Dual, Some(_)) => bail!("--terms needs --estimator inter"),
        (Estimator::Dual, None) => {
            let preds = predictors_or_default(&a.predictors, &ds, a.data.hillstrom);
            UpliftModel::Dual(dual_uplift_fit(&ds, &as_strs(&preds)).context("estimators")?)
        }
        (Estimator::Inter, Some(terms)) => {
            let terms = parse_terms(terms)?;
            UpliftModel::Interaction(
                inter_uplift_fit(&ds, InterInput::Best(&terms)).context("estimators")?,
            )
        }
        (Estimator::Inter, None) => {
            let preds = predictors_or_default(&a.predictors, &ds, a.data.hillstrom);
            UpliftModel::Interaction(
                inter_uplift_fit(&ds, InterInput::All(&as_strs(&preds))).context("estimators")?,
            )
        }
    };
    let fits = match &model {
        UpliftModel::Dual(f) => vec![&f.model_control, &f.model_treated],
        UpliftModel::Interaction(f) => vec![&f.model],
    };
    let converged = fits.iter().all(|f| f.converged);
    let deviance: Vec<f64> = fits.iter().map(|f| f.deviance).collect();
    let warnings: Vec<String> = fits.iter().flat_map(|f| f.warnings.clone()).collect();
    for warning in &warnings {
        writeln!(w, "warning: {warning}")?;
    }
    let file = ModelFile { model, encodings };
    let path = out.json("models", &format!("{}.json", a.name), &file)?;
    writeln!(w, "model written to {}", path.display())?;
    out.report(&json!({
        "kind": file.model.kind(),
        "converged": converged,
        "deviance": deviance,
        "warnings": warnings,
    }))?;
    Ok(())
}

fn cmd_predict(a: &PredictArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let file = load_model(&a.model)?;
    let (ds, _) = load(&a.data)?;
    let ds = prepare_for_model(ds, &file)?;
    let predictions = file.model.predict(&ds).context("estimators")?;
    let path = write_predictions(out, &format!("{}.csv", a.name), &predictions)?;
    writeln!(w, "{} predictions written to {}", predictions.len(), path.display())?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let (ds, predictions) = match (&a.model, &a.predictions) {
        (Some(m), _) => {
            let file = load_model(m)?;
            let ds = prepare_for_model(ds, &file)?;
            let p = file.model.predict(&ds).context("estimators")?;
            (ds, p)
        }
        (None, Some(p)) => (ds, read_predictions(p, &a.column)?),
        (None, None) => bail!("eval needs --model or --predictions"),
    };
    if predictions.len() != ds.n() {
        bail!(
            "qini: {} predictions for {} data rows",
            predictions.len(),
            ds.n()
        );
    }
    let table = qini_table(&ds, &predictions, a.nb_group).context("qini")?;
    let area = qini_area(&table);
    let u = overall_uplift(&ds)?;
    let mut f = fs::File::create(out.path("tables", "qini_table.csv"))?;
    table.write_csv(&mut f)?;
    out.write("plots", "qini_curve.svg", &plot::qini_curve_svg(&[("model", &table)]))?;
    out.write("plots", "qini_bars.svg", &plot::qini_bars_svg(&table))?;
    writeln!(w, "Qini coefficient: {}", area.q)?;
    out.report(&json!({
        "qini": area.q,
        "qini_raw": area.q_raw,
        "overall_uplift": u,
        "warnings": table.warnings,
    }))?;
    Ok(())
}

fn cmd_select(a: &SelectArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, encodings) = load(&a.data)?;
    let preds = predictors_or_default(&a.predictors, &ds, a.data.hillstrom);
    let cfg = BestFeaturesConfig {
        nb_lambda: a.nb_lambda,
        nb_group: a.nb_group,
        validation: a.validation,
        p: a.p,
        seed: a.seed,
        ..Default::default()
    };
    let scan = best_features(&ds, &as_strs(&preds), &cfg).context("feature_select")?;
    let path = out.path("tables", "lambda_scan.csv");
    let mut csv_out = csv::Writer::from_path(&path)?;
    csv_out.write_record(["lambda", "active", "q"])?;
    for (k, (&lambda, &q)) in scan.path.lambdas.iter().zip(&scan.q_values).enumerate() {
        csv_out.write_record([
            lambda.to_string(),
            scan.path.active_sets[k].len().to_string(),
            q.to_string(),
        ])?;
    }
    csv_out.flush()?;
    out.json(
        "models",
        "selected_terms.json",
        &json!({
            "selected_terms": scan.selected_terms,
            "best_lambda": scan.best_lambda,
            "best_q": scan.best_q,
        }),
    )?;
    let fit_ds = ds.subset(&scan.fit_rows)?;
    let refit = refit_selected(&fit_ds, &scan.selected_terms).context("estimators")?;
    out.json(
        "models",
        "selected.json",
        &ModelFile {
            model: UpliftModel::Interaction(refit),
            encodings,
        },
    )?;
    for t in &scan.selected_terms {
        writeln!(w, "{t}")?;
    }
    if a.value {
        writeln!(w, "lambda: {}", scan.best_lambda)?;
        writeln!(w, "q: {}", scan.best_q)?;
    }
    let mut report = json!({
        "selected_terms": scan.selected_terms,
        "warnings": scan.warnings,
    });
    if a.value {
        report["best_lambda"] = json!(scan.best_lambda);
        report["best_q"] = json!(scan.best_q);
    }
    out.report(&report)?;
    Ok(())
}

fn cmd_bin(a: &BinArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let params = BinParams {
        n_split: a.n_split,
        alpha: a.alpha,
        n_min: a.n_min,
    };
    let mut numeric = Vec::new();
    let mut outcomes = Vec::new();
    for x in &a.x {
        let (outcome, ranks) = if ds.categorical(x).is_ok() {
            let (o, r) = bin_uplift_categorical(&ds, x, a.alpha, a.n_min).context("quantize")?;
            (o, Some(r))
        } else {
            numeric.push(BinRequest {
                variable: x.clone(),
                params,
            });
            (bin_uplift(&ds, x, params).context("quantize")?, None)
        };
        for line in outcome.transcript() {
            writeln!(w, "{line}")?;
        }
        if let BinOutcome::Tree(tree) = &outcome {
            out.write("plots", &format!("bins_{}.svg", slug(x)), &plot::bin_barplot_svg(tree))?;
        }
        out.json(
            "models",
            &format!("bins_{}.json", slug(x)),
            &json!({ "result": outcome, "level_ranks": ranks }),
        )?;
        outcomes.push(json!({
            "variable": x,
            "cut_points": outcome.cut_points(),
            "quantized": matches!(outcome, BinOutcome::Tree(_)),
        }));
    }
    let (augmented, trace) = bin_uplift_enhanced(&ds, &numeric).context("quantize")?;
    augmented.save_csv(out.path("tables", "quantized.csv"))?;
    out.report(&json!({ "variables": outcomes, "trace": trace }))?;
    Ok(())
}

fn cmd_square(a: &SquareArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let params = SquareParams {
        n_split: a.n_split,
        n_min: a.n_min,
        nb_group: a.nb_group,
    };
    let (grid, augmented) = square_uplift(&ds, &a.var1, &a.var2, params).context("quantize")?;
    let stem = format!("{}_{}", slug(&a.var1), slug(&a.var2));
    out.write("plots", &format!("heatmap_{stem}.svg"), &plot::heatmap_svg(&grid))?;
    augmented.save_csv(out.path("tables", "augmented.csv"))?;
    out.json("models", &format!("grid_{stem}.json"), &grid)?;
    let invalid = grid.cells.iter().filter(|c| c.uplift.is_none()).count();
    writeln!(
        w,
        "{} rectangles, {invalid} below n_min; columns Uplift_{v1}_{v2} and Cat_{v1}_{v2} added",
        grid.cells.len(),
        v1 = a.var1,
        v2 = a.var2
    )?;
    out.report(&json!({
        "rectangles": grid.cells.len(),
        "invalid_rectangles": invalid,
        "fallback_uplift": grid.fallback_uplift,
        "category_uplift": grid.category_uplift,
    }))?;
    Ok(())
}

fn cmd_squarecv(a: &SquareCvArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let split = split_uplift(&ds, &SplitConfig::new(&ds, 1.0 - a.p, a.seed)).context("data")?;
    let (points, best) = square_cv(
        &split.train,
        &split.valid,
        &a.var1,
        &a.var2,
        &a.b_grid,
        &a.c_grid,
        a.n_min,
        a.nb_group,
    )
    .context("quantize")?;
    let path = out.path("tables", "squarecv.csv");
    let mut csv_out = csv::Writer::from_path(&path)?;
    csv_out.write_record(["b", "c", "q"])?;
    for p in &points {
        csv_out.write_record([p.n_split.to_string(), p.nb_group.to_string(), p.q.to_string()])?;
    }
    csv_out.flush()?;
    let b = &points[best];
    writeln!(w, "best: b = {}, c = {}, q = {}", b.n_split, b.nb_group, b.q)?;
    out.report(&json!({ "points": points, "best": b }))?;
    Ok(())
}

fn cmd_pipeline(a: &PipelineArgs, out: &Output, w: &mut dyn Write) -> anyhow::Result<()> {
    let (ds, _) = load(&a.data)?;
    let preds = predictors_or_default(&a.predictors, &ds, a.data.hillstrom);
    let mut cfg = PipelineConfig::new(&as_strs(&preds));
    cfg.train_fraction = a.p;
    cfg.seed = a.seed;
    cfg.nb_group = a.nb_group;
    cfg.nb_lambda = a.nb_lambda;
    cfg.quantize = a
        .quantize
        .iter()
        .map(|s| parse_bin_request(s))
        .collect::<anyhow::Result<_>>()?;
    cfg.square = a.square.as_deref().map(parse_square_request).transpose()?;
    let report = run_pipeline(&ds, &cfg).context("pipeline")?;

    let mut csv_out = csv::Writer::from_path(out.path("tables", "comparison.csv"))?;
    csv_out.write_record(["model", "feature_selection", "qini", "qini_raw"])?;
    let mut tables = Vec::new();
    writeln!(w, "{:<48} {:<18} {:>8}", "Model", "Feature selection", "Qini")?;
    for m in &report.models {
        let s = slug(&m.name);
        csv_out.write_record([
            m.name.clone(),
            if m.feature_selection { "yes" } else { "no" }.to_string(),
            m.qini.to_string(),
            m.qini_raw.to_string(),
        ])?;
        writeln!(
            w,
            "{:<48} {:<18} {:>8.4}",
            m.name,
            if m.feature_selection { "Yes" } else { "No" },
            m.qini
        )?;
        if let Some(model) = &m.model {
            out.json(
                "models",
                &format!("{s}.json"),
                &ModelFile {
                    model: model.clone(),
                    encodings: report.encodings.clone(),
                },
            )?;
        }
        if let Some(table) = &m.table {
            let mut f = fs::File::create(out.path("tables", &format!("qini_{s}.csv")))?;
            table.write_csv(&mut f)?;
            out.write("plots", &format!("qini_{s}.svg"), &plot::qini_curve_svg(&[(&m.name, table)]))?;
            out.write("plots", &format!("bars_{s}.svg"), &plot::qini_bars_svg(table))?;
            tables.push((m.name.as_str(), table));
        }
    }
    csv_out.flush()?;
    out.write("plots", "qini_comparison.svg", &plot::qini_curve_svg(&tables))?;
    out.report(&serde_json::to_value(&report)?)?;
    Ok(())
}

fn dispatch(cli: &Cli, w: &mut dyn Write) -> anyhow::Result<()> {
    let out = Output::new(&cli.out)?;
    match &cli.command {
        Command::Split(a) => cmd_split(a, &out, w),
        Command::Fit(a) => cmd_fit(a, &out, w),
        Command::Predict(a) => cmd_predict(a, &out, w),
        Command::Eval(a) => cmd_eval(a, &out, w),
        Command::Select(a) => cmd_select(a, &out, w),
        Command::Bin(a) => cmd_bin(a, &out, w),
        Command::Square(a) => cmd_square(a, &out, w),
        Command::Squarecv(a) => cmd_squarecv(a, &out, w),
        Command::Pipeline(a) => cmd_pipeline(a, &out, w),
    }
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?)
}

/// Runs the command line `argv` (program name first), writing transcripts
/// to `stdout` and diagnostics to stderr. Returns the exit status.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut buffer = Vec::new();
    let result = thread_pool().and_then(|pool| pool.install(|| dispatch(&cli, &mut buffer)));
    let _ = stdout.write_all(&buffer);
    let _ = stdout.flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("upliftkit: {e:#}");
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock())
}

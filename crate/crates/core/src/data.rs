//! Tabular uplift data: a binary outcome, a binary treatment indicator and
//! any number of numeric or categorical feature columns.
//!
//! Datasets are immutable once built; every transformation returns a new
//! value.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UpliftError};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            ColumnData::Numeric(v) => format_number(v[row]),
            ColumnData::Categorical(v) => v[row].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Categorical(values),
        }
    }
}

/// Observed units `(y_i, x_i, tau_i)`.
///
/// The outcome and treatment columns are kept apart from the features and
/// are guaranteed to hold only 0/1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct UpliftDataset {
    outcome_name: String,
    treat_name: String,
    outcome: Vec<u8>,
    treat: Vec<u8>,
    columns: Vec<Column>,
}

impl UpliftDataset {
    pub fn new(
        outcome_name: impl Into<String>,
        outcome: Vec<u8>,
        treat_name: impl Into<String>,
        treat: Vec<u8>,
        columns: Vec<Column>,
    ) -> Result<Self> {
        let outcome_name = outcome_name.into();
        let treat_name = treat_name.into();
        let n = outcome.len();
        if n == 0 {
            return Err(UpliftError::schema("dataset has no rows"));
        }
        if treat.len() != n {
            return Err(UpliftError::schema(format!(
                "treatment column has {} rows, outcome has {}",
                treat.len(),
                n
            )));
        }
        if outcome_name == treat_name {
            return Err(UpliftError::schema("outcome and treatment must be distinct columns"));
        }
        for (i, (&y, &t)) in outcome.iter().zip(&treat).enumerate() {
            if y > 1 {
                return Err(UpliftError::Validation {
                    row: i + 1,
                    message: format!("outcome `{outcome_name}` must be 0 or 1, got {y}"),
                });
            }
            if t > 1 {
                return Err(UpliftError::Validation {
                    row: i + 1,
                    message: format!("treatment `{treat_name}` must be 0 or 1, got {t}"),
                });
            }
        }
        let mut seen = BTreeSet::new();
        seen.insert(outcome_name.as_str());
        seen.insert(treat_name.as_str());
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(UpliftError::schema(format!("duplicate column `{}`", c.name)));
            }
            if c.data.len() != n {
                return Err(UpliftError::schema(format!(
                    "column `{}` has {} rows, expected {}",
                    c.name,
                    c.data.len(),
                    n
                )));
            }
            if let ColumnData::Numeric(v) = &c.data {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(UpliftError::Validation {
                        row: i + 1,
                        message: format!("column `{}` holds a non-finite value", c.name),
                    });
                }
            }
        }
        Ok(UpliftDataset {
            outcome_name,
            treat_name,
            outcome,
            treat,
            columns,
        })
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn treat_name(&self) -> &str {
        &self.treat_name
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn treat(&self) -> &[u8] {
        &self.treat
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn n_treated(&self) -> usize {
        self.treat.iter().filter(|&&t| t == 1).count()
    }

    pub fn n_control(&self) -> usize {
        self.n() - self.n_treated()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        name == self.outcome_name || name == self.treat_name || self.column(name).is_some()
    }

    /// Numeric feature column by name. The treatment and outcome columns are
    /// not features and are not returned here.
    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(Column {
                data: ColumnData::Numeric(v),
                ..
            }) => Ok(v),
            Some(_) => Err(UpliftError::schema(format!("column `{name}` is not numeric"))),
            None => Err(UpliftError::schema(format!("missing column `{name}`"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.column(name) {
            Some(Column {
                data: ColumnData::Categorical(v),
                ..
            }) => Ok(v),
            Some(_) => Err(UpliftError::schema(format!(
                "column `{name}` is not categorical"
            ))),
            None => Err(UpliftError::schema(format!("missing column `{name}`"))),
        }
    }

    /// Returns a copy with `column` appended, or replacing an existing
    /// feature column of the same name in place.
    pub fn with_column(&self, column: Column) -> Result<Self> {
        if column.name == self.outcome_name || column.name == self.treat_name {
            return Err(UpliftError::schema(format!(
                "cannot overwrite outcome/treatment column `{}`",
                column.name
            )));
        }
        if column.data.len() != self.n() {
            return Err(UpliftError::schema(format!(
                "column `{}` has {} rows, expected {}",
                column.name,
                column.data.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        match out.columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => out.columns.push(column),
        }
        Ok(out)
    }

    /// Returns a copy with the treatment indicator replaced by `value` on
    /// every row.
    pub fn with_treatment(&self, value: u8) -> Result<Self> {
        if value > 1 {
            return Err(UpliftError::invalid("treatment value must be 0 or 1"));
        }
        let mut out = self.clone();
        out.treat.iter_mut().for_each(|t| *t = value);
        Ok(out)
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(UpliftError::schema("row subset is empty"));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(UpliftError::invalid(format!("row index {bad} out of range")));
        }
        Ok(UpliftDataset {
            outcome_name: self.outcome_name.clone(),
            treat_name: self.treat_name.clone(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            treat: rows.iter().map(|&i| self.treat[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.subset(rows),
                })
                .collect(),
        })
    }

    /// Rows with the given treatment value, in their original order.
    pub fn arm(&self, treat_value: u8) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n()).filter(|&i| self.treat[i] == treat_value).collect();
        if rows.is_empty() {
            return Err(UpliftError::EmptyGroup(format!(
                "no rows with {} = {treat_value}",
                self.treat_name
            )));
        }
        self.subset(&rows)
    }

    /// Values of a stratification column rendered as strings. The outcome,
    /// the treatment, categorical columns and 0/1 numeric columns qualify.
    fn stratum_values(&self, name: &str) -> Result<Vec<String>> {
        if name == self.outcome_name {
            return Ok(self.outcome.iter().map(|v| v.to_string()).collect());
        }
        if name == self.treat_name {
            return Ok(self.treat.iter().map(|v| v.to_string()).collect());
        }
        match self.column(name) {
            Some(Column {
                data: ColumnData::Categorical(v),
                ..
            }) => Ok(v.clone()),
            Some(Column {
                data: ColumnData::Numeric(v),
                ..
            }) => {
                if v.iter().all(|&x| x == 0.0 || x == 1.0) {
                    Ok(v.iter().map(|&x| format_number(x)).collect())
                } else {
                    Err(UpliftError::schema(format!(
                        "stratification column `{name}` must be binary or categorical"
                    )))
                }
            }
            None => Err(UpliftError::schema(format!(
                "missing stratification column `{name}`"
            ))),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.treat_name);
        header.push(&self.outcome_name);
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut record: Vec<String> = self.columns.iter().map(|c| c.data.cell(i)).collect();
            record.push(self.treat[i].to_string());
            record.push(self.outcome[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn format_number(x: f64) -> String {
    format!("{x}")
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA" || t == "NaN"
}

fn parse_binary(cell: &str, row: usize, column: &str) -> Result<u8> {
    let t = cell.trim();
    let value: f64 = t.parse().map_err(|_| UpliftError::Parse {
        row,
        column: column.to_string(),
        message: format!("`{t}` is not a number"),
    })?;
    if value == 0.0 {
        Ok(0)
    } else if value == 1.0 {
        Ok(1)
    } else {
        Err(UpliftError::Validation {
            row,
            message: format!("column `{column}` must be 0 or 1, got `{t}`"),
        })
    }
}

/// Reads a header-first CSV document. Columns whose every cell parses as a
/// finite number become numeric features; the rest are categorical.
pub fn read_csv<R: Read>(reader: R, outcome: &str, treat: &str) -> Result<UpliftDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UpliftError::schema(format!("missing column `{name}`")))
    };
    let y_idx = find(outcome)?;
    let t_idx = find(treat)?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(UpliftError::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                return Err(UpliftError::Validation {
                    row,
                    message: format!("missing value in column `{}`", header[j]),
                });
            }
            cells[j].push(cell.trim().to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(UpliftError::schema("file has a header but no rows"));
    }

    let y = cells[y_idx]
        .iter()
        .enumerate()
        .map(|(i, c)| parse_binary(c, i + 1, outcome))
        .collect::<Result<Vec<_>>>()?;
    let t = cells[t_idx]
        .iter()
        .enumerate()
        .map(|(i, c)| parse_binary(c, i + 1, treat))
        .collect::<Result<Vec<_>>>()?;

    let mut columns = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == y_idx || j == t_idx {
            continue;
        }
        let raw = std::mem::take(&mut cells[j]);
        let parsed: Option<Vec<f64>> = raw
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        columns.push(match parsed {
            Some(v) => Column::numeric(name.clone(), v),
            None => Column::categorical(name.clone(), raw),
        });
    }
    UpliftDataset::new(outcome, y, treat, t, columns)
}

pub fn load_csv(path: impl AsRef<Path>, outcome: &str, treat: &str) -> Result<UpliftDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(std::io::BufReader::new(file), outcome, treat)
}

/// Which level of a categorical column is left out of the indicator set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceLevel {
    /// Lexicographically first level.
    #[default]
    First,
    /// Lexicographically last level.
    Last,
}

/// A fitted K-1 indicator encoding of one categorical column. Storing it
/// lets the same encoding be replayed on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DummyEncoding {
    pub column: String,
    pub reference: String,
    /// Levels that get an indicator column, in lexicographic order.
    pub levels: Vec<String>,
}

impl DummyEncoding {
    pub fn fit(ds: &UpliftDataset, column: &str, reference: ReferenceLevel) -> Result<Self> {
        let values = ds.categorical(column)?;
        let mut levels: Vec<String> = values
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if levels.len() < 2 {
            return Err(UpliftError::DegenerateColumn {
                column: column.to_string(),
                message: format!("needs at least 2 levels, found {}", levels.len()),
            });
        }
        let reference = match reference {
            ReferenceLevel::First => levels.remove(0),
            ReferenceLevel::Last => levels.pop().expect("at least two levels"),
        };
        Ok(DummyEncoding {
            column: column.to_string(),
            reference,
            levels,
        })
    }

    pub fn indicator_names(&self) -> Vec<String> {
        self.levels
            .iter()
            .map(|l| format!("{}_{}", self.column, l))
            .collect()
    }

    /// Replaces the categorical column by its indicators, inserted at the
    /// column's position. Levels unseen at fit time encode as all zeros.
    pub fn apply(&self, ds: &UpliftDataset) -> Result<UpliftDataset> {
        let values = ds.categorical(&self.column)?;
        let pos = ds
            .columns
            .iter()
            .position(|c| c.name == self.column)
            .expect("column exists");
        let indicators: Vec<Column> = self
            .levels
            .iter()
            .zip(self.indicator_names())
            .map(|(level, name)| {
                Column::numeric(
                    name,
                    values
                        .iter()
                        .map(|v| if v == level { 1.0 } else { 0.0 })
                        .collect(),
                )
            })
            .collect();
        let mut columns = ds.columns.clone();
        columns.splice(pos..pos + 1, indicators);
        UpliftDataset::new(
            ds.outcome_name.clone(),
            ds.outcome.clone(),
            ds.treat_name.clone(),
            ds.treat.clone(),
            columns,
        )
    }
}

/// Replaces a categorical column by K-1 indicators `<column>_<level>`,
/// leaving out the lexicographically first level.
pub fn encode_dummies(ds: &UpliftDataset, column: &str) -> Result<UpliftDataset> {
    encode_dummies_with(ds, column, ReferenceLevel::First)
}

pub fn encode_dummies_with(
    ds: &UpliftDataset,
    column: &str,
    reference: ReferenceLevel,
) -> Result<UpliftDataset> {
    DummyEncoding::fit(ds, column, reference)?.apply(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    /// Fraction of each stratum assigned to the training part.
    pub p: f64,
    pub strata: Vec<String>,
    pub seed: u64,
}

impl SplitConfig {
    /// Stratifies on treatment and outcome jointly.
    pub fn new(ds: &UpliftDataset, p: f64, seed: u64) -> Self {
        SplitConfig {
            p,
            strata: vec![ds.treat_name().to_string(), ds.outcome_name().to_string()],
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: UpliftDataset,
    pub valid: UpliftDataset,
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Stratified train/validation partition.
///
/// Strata are visited in sorted key order; within a stratum of size `m` the
/// rows are shuffled by a ChaCha8 stream seeded from `cfg.seed` and the first
/// `round_half_up(p * m)` go to training. A single-row stratum always goes to
/// training. Both parts keep the original row order.
pub fn split_uplift(ds: &UpliftDataset, cfg: &SplitConfig) -> Result<Split> {
    if !(cfg.p > 0.0 && cfg.p < 1.0) {
        return Err(UpliftError::invalid(format!(
            "split fraction must lie in (0, 1), got {}",
            cfg.p
        )));
    }
    let keys: Vec<Vec<String>> = cfg
        .strata
        .iter()
        .map(|s| ds.stratum_values(s))
        .collect::<Result<_>>()?;

    let mut strata: BTreeMap<Vec<&str>, Vec<usize>> = BTreeMap::new();
    for i in 0..ds.n() {
        let key: Vec<&str> = keys.iter().map(|k| k[i].as_str()).collect();
        strata.entry(key).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut warnings = Vec::new();
    let mut train_rows = Vec::new();
    let mut valid_rows = Vec::new();
    for (key, mut rows) in strata {
        let m = rows.len();
        rows.shuffle(&mut rng);
        let take = if m == 1 {
            warnings.push(format!(
                "stratum {key:?} has a single row; assigned to training"
            ));
            1
        } else {
            ((cfg.p * m as f64 + 0.5).floor() as usize).min(m)
        };
        train_rows.extend_from_slice(&rows[..take]);
        valid_rows.extend_from_slice(&rows[take..]);
    }
    train_rows.sort_unstable();
    valid_rows.sort_unstable();
    for w in &warnings {
        log::warn!("{w}");
    }
    if valid_rows.is_empty() {
        return Err(UpliftError::invalid("split left the validation part empty"));
    }
    Ok(Split {
        train: ds.subset(&train_rows)?,
        valid: ds.subset(&valid_rows)?,
        train_rows,
        valid_rows,
        warnings,
    })
}

/// Predictor list for the women's e-mail vs. no e-mail subset of the
/// Hillstrom campaign, after [`load_hillstrom`] expands the categorical
/// columns.
pub const HILLSTROM_PREDICTORS: [&str; 9] = [
    "recency",
    "history",
    "mens",
    "womens",
    "zip_code_Rural",
    "zip_code_Surburban",
    "newbie",
    "channel_Multichannel",
    "channel_Phone",
];

/// Loads the public Hillstrom e-mail campaign file, keeps the
/// `Womens E-Mail` (treat = 1) and `No E-Mail` (treat = 0) segments and uses
/// `visit` as the outcome.
///
/// `zip_code` and `channel` are expanded with the last level as reference so
/// the indicator names match [`HILLSTROM_PREDICTORS`]. Columns not used by
/// the workflow (`history_segment`, `conversion`, `spend`) are dropped.
pub fn load_hillstrom(path: impl AsRef<Path>) -> Result<UpliftDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_hillstrom(std::io::BufReader::new(file))
}

pub fn read_hillstrom<R: Read>(reader: R) -> Result<UpliftDataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let idx = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| UpliftError::schema(format!("missing column `{name}`")))
    };
    let numeric_cols = ["recency", "history", "mens", "womens", "newbie"];
    let text_cols = ["zip_code", "channel"];
    let num_idx: Vec<usize> = numeric_cols.iter().map(|c| idx(c)).collect::<Result<_>>()?;
    let txt_idx: Vec<usize> = text_cols.iter().map(|c| idx(c)).collect::<Result<_>>()?;
    let seg_idx = idx("segment")?;
    let visit_idx = idx("visit")?;

    let mut num: Vec<Vec<f64>> = vec![Vec::new(); numeric_cols.len()];
    let mut txt: Vec<Vec<String>> = vec![Vec::new(); text_cols.len()];
    let mut treat = Vec::new();
    let mut visit = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let t = match record[seg_idx].trim() {
            "Womens E-Mail" => 1,
            "No E-Mail" => 0,
            _ => continue,
        };
        treat.push(t);
        visit.push(parse_binary(&record[visit_idx], row, "visit")?);
        for (k, &j) in num_idx.iter().enumerate() {
            let cell = record[j].trim();
            num[k].push(cell.parse().map_err(|_| UpliftError::Parse {
                row,
                column: numeric_cols[k].to_string(),
                message: format!("`{cell}` is not a number"),
            })?);
        }
        for (k, &j) in txt_idx.iter().enumerate() {
            txt[k].push(record[j].trim().to_string());
        }
    }
    let mut num = num.into_iter();
    let mut txt = txt.into_iter();
    let recency = num.next().unwrap();
    let history = num.next().unwrap();
    let mens = num.next().unwrap();
    let womens = num.next().unwrap();
    let newbie = num.next().unwrap();
    let columns = vec![
        Column::numeric("recency", recency),
        Column::numeric("history", history),
        Column::numeric("mens", mens),
        Column::numeric("womens", womens),
        Column::categorical("zip_code", txt.next().unwrap()),
        Column::numeric("newbie", newbie),
        Column::categorical("channel", txt.next().unwrap()),
    ];
    let ds = UpliftDataset::new("visit", visit, "treat", treat, columns)?;
    let ds = encode_dummies_with(&ds, "zip_code", ReferenceLevel::Last)?;
    encode_dummies_with(&ds, "channel", ReferenceLevel::Last)
}

//! Qini-based validation of uplift predictions.
//!
//! Rows are ranked by predicted uplift (descending, ties in input order) and
//! cut into `J` panels. For the top fraction `phi` of the ranking, with
//! cumulative treated/control counts `n_t`, `n_c` and responders `r_t`,
//! `r_c`:
//!
//! ```text
//! h(phi) = r_t - r_c * n_t / n_c        (h(0) = 0)
//! g(phi) = h(phi) / N_t                 (N_t = treated rows overall)
//! ```
//!
//! so that `g(1)` is the overall observed uplift. The Qini coefficient is the
//! trapezoid area under `100 * g` over the grid `0, 1/J, ..., 1`, minus the
//! area `100 * g(1) / 2` under the random-targeting diagonal.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::UpliftDataset;
use crate::error::{Result, UpliftError};

/// Treated response rate minus control response rate.
pub fn overall_uplift(ds: &UpliftDataset) -> Result<f64> {
    uplift_of(ds.outcome(), ds.treat())
}

pub(crate) fn uplift_of(y: &[u8], t: &[u8]) -> Result<f64> {
    let mut counts = ArmCounts::default();
    for (&yi, &ti) in y.iter().zip(t) {
        counts.add(yi, ti);
    }
    counts
        .uplift()
        .ok_or_else(|| UpliftError::EmptyGroup("uplift needs treated and control rows".into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    pub treated: usize,
    pub treated_responders: usize,
    pub control: usize,
    pub control_responders: usize,
}

impl ArmCounts {
    #[inline]
    pub fn add(&mut self, y: u8, t: u8) {
        if t == 1 {
            self.treated += 1;
            self.treated_responders += y as usize;
        } else {
            self.control += 1;
            self.control_responders += y as usize;
        }
    }

    pub fn uplift(&self) -> Option<f64> {
        if self.treated == 0 || self.control == 0 {
            return None;
        }
        Some(
            self.treated_responders as f64 / self.treated as f64
                - self.control_responders as f64 / self.control as f64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiniRow {
    /// Grid point `j / J`.
    pub fraction: f64,
    /// Rows ranked into the top `ceil(j n / J)`.
    pub n_rows: usize,
    pub cum_treated: usize,
    pub cum_treated_responders: usize,
    pub cum_control: usize,
    pub cum_control_responders: usize,
    pub incremental_uplift: f64,
    pub relative_incremental_uplift: f64,
    /// Observed uplift of the rows between grid points `j - 1` and `j`.
    pub group_uplift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiniTable {
    pub nb_group: usize,
    pub n: usize,
    pub total_treated: usize,
    pub rows: Vec<QiniRow>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl QiniTable {
    /// `g` at the last grid point.
    pub fn g_last(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.relative_incremental_uplift)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "cum_per",
            "n_rows",
            "T_n",
            "T_r",
            "C_n",
            "C_r",
            "incremental_uplift",
            "relative_incremental_uplift",
            "uplift",
        ])?;
        for r in &self.rows {
            w.write_record(&[
                r.fraction.to_string(),
                r.n_rows.to_string(),
                r.cum_treated.to_string(),
                r.cum_treated_responders.to_string(),
                r.cum_control.to_string(),
                r.cum_control_responders.to_string(),
                r.incremental_uplift.to_string(),
                r.relative_incremental_uplift.to_string(),
                r.group_uplift.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Row order by descending prediction; equal predictions keep input order.
pub fn ranking(predictions: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[b].total_cmp(&predictions[a]));
    order
}

pub fn qini_table(ds: &UpliftDataset, predictions: &[f64], nb_group: usize) -> Result<QiniTable> {
    let n = ds.n();
    if predictions.len() != n {
        return Err(UpliftError::invalid(format!(
            "{} predictions for {n} rows",
            predictions.len()
        )));
    }
    if nb_group < 2 {
        return Err(UpliftError::invalid("nb_group must be at least 2"));
    }
    if n < nb_group {
        return Err(UpliftError::invalid(format!(
            "{n} rows cannot fill {nb_group} groups"
        )));
    }
    if let Some(i) = predictions.iter().position(|p| !p.is_finite()) {
        return Err(UpliftError::Validation {
            row: i + 1,
            message: "prediction is not finite".into(),
        });
    }
    let total_treated = ds.n_treated();
    if total_treated == 0 || total_treated == n {
        return Err(UpliftError::EmptyGroup(
            "Qini table needs treated and control rows".into(),
        ));
    }

    let order = ranking(predictions);
    let (y, t) = (ds.outcome(), ds.treat());
    let mut cum = ArmCounts::default();
    let mut start = 0;
    let mut rows = Vec::with_capacity(nb_group);
    let mut warnings = Vec::new();
    for j in 1..=nb_group {
        let end = (j * n).div_ceil(nb_group);
        let mut group = ArmCounts::default();
        for &i in &order[start..end] {
            group.add(y[i], t[i]);
            cum.add(y[i], t[i]);
        }
        let ratio = if cum.control == 0 {
            warnings.push(format!("no control rows in the top {end}; rescaling set to 0"));
            0.0
        } else {
            cum.treated as f64 / cum.control as f64
        };
        let h = cum.treated_responders as f64 - cum.control_responders as f64 * ratio;
        let group_uplift = group.uplift().unwrap_or_else(|| {
            warnings.push(format!("group {j} lacks treated or control rows; uplift set to 0"));
            0.0
        });
        rows.push(QiniRow {
            fraction: j as f64 / nb_group as f64,
            n_rows: end,
            cum_treated: cum.treated,
            cum_treated_responders: cum.treated_responders,
            cum_control: cum.control,
            cum_control_responders: cum.control_responders,
            incremental_uplift: h,
            relative_incremental_uplift: h / total_treated as f64,
            group_uplift,
        });
        start = end;
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(QiniTable {
        nb_group,
        n,
        total_treated,
        rows,
        warnings,
    })
}

/// Qini table from a numeric prediction column of `ds`.
pub fn qini_table_for_column(ds: &UpliftDataset, column: &str, nb_group: usize) -> Result<QiniTable> {
    let predictions = ds.numeric(column)?.to_vec();
    qini_table(ds, &predictions, nb_group)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiniResult {
    pub q: f64,
    pub q_raw: f64,
    /// `(phi, 100 g(phi))`, starting at the origin.
    pub curve_points: Vec<(f64, f64)>,
    /// Per-panel observed uplift, in percent.
    pub bar_values: Vec<f64>,
}

/// Trapezoid area under `(0, 0), (phi_j, G_j)` and the same area minus the
/// random-targeting triangle `G_last / 2`.
pub fn trapezoid_qini(fractions: &[f64], curve: &[f64]) -> (f64, f64) {
    let mut area = 0.0;
    let (mut prev_x, mut prev_y) = (0.0, 0.0);
    for (&x, &y) in fractions.iter().zip(curve) {
        area += 0.5 * (x - prev_x) * (y + prev_y);
        prev_x = x;
        prev_y = y;
    }
    (area - prev_y / 2.0, area)
}

pub fn qini_area(table: &QiniTable) -> QiniResult {
    let fractions: Vec<f64> = table.rows.iter().map(|r| r.fraction).collect();
    let curve: Vec<f64> = table
        .rows
        .iter()
        .map(|r| 100.0 * r.relative_incremental_uplift)
        .collect();
    let (q, q_raw) = trapezoid_qini(&fractions, &curve);
    let mut curve_points = vec![(0.0, 0.0)];
    curve_points.extend(fractions.iter().copied().zip(curve.iter().copied()));
    QiniResult {
        q,
        q_raw,
        curve_points,
        bar_values: qini_bar_data(table),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiniCurve {
    /// `(100 phi, 100 g(phi))`, starting at the origin.
    pub points: Vec<(f64, f64)>,
    /// Random targeting: from `(0, 0)` to `(100, 100 g(1))`.
    pub benchmark: [(f64, f64); 2],
}

pub fn qini_curve_points(table: &QiniTable) -> QiniCurve {
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        table
            .rows
            .iter()
            .map(|r| (100.0 * r.fraction, 100.0 * r.relative_incremental_uplift)),
    );
    QiniCurve {
        points,
        benchmark: [(0.0, 0.0), (100.0, 100.0 * table.g_last())],
    }
}

/// Observed uplift inside each panel, in percent.
pub fn qini_bar_data(table: &QiniTable) -> Vec<f64> {
    table.rows.iter().map(|r| 100.0 * r.group_uplift).collect()
}

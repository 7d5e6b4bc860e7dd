//! Supervised quantization guided by observed uplift.
//!
//! The univariate procedure grows a binary tree over one numeric variable:
//! at every node it tries `m` equally spaced cut points across the node's
//! range, keeps the one whose uplift-difference test has the smallest
//! p-value, and accepts it when the p-value is at most `alpha` and both
//! children hold at least `n_min` treated and `n_min` control rows.
//!
//! The bivariate procedure tiles the plane of two variables with a `b x b`
//! grid, predicts each row's uplift by the observed uplift of its rectangle
//! and groups the rows into `c` categories by that prediction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Column, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::qini::{qini_area, qini_table, uplift_of, ArmCounts};

/// Message reported when the root node admits no significant split.
pub const NO_SPLIT_MESSAGE: &str = "oups..no significant split";

/// Two-sided standard normal tail probability `2 (1 - Phi(|z|))`.
pub fn two_sided_p_value(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Treated and control counts on each side of a candidate split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub left: ArmCounts,
    pub right: ArmCounts,
}

impl GroupCounts {
    /// Treated rows in the node, `N_T`.
    pub fn total_treated(&self) -> usize {
        self.left.treated + self.right.treated
    }

    pub fn total_control(&self) -> usize {
        self.left.control + self.right.control
    }

    /// Node response rate among treated rows, `p_T`.
    pub fn treated_rate(&self) -> f64 {
        (self.left.treated_responders + self.right.treated_responders) as f64
            / self.total_treated() as f64
    }

    pub fn control_rate(&self) -> f64 {
        (self.left.control_responders + self.right.control_responders) as f64
            / self.total_control() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTest {
    pub z: f64,
    pub p_value: f64,
}

/// Variance of `p1_hat - p3_hat` when `left` of `total` units fall in the
/// left child and the success count is hypergeometric with rate `rate`.
fn split_variance(total: usize, left: usize, rate: f64) -> f64 {
    let (nn, nl) = (total as f64, left as f64);
    nn * nn * rate * (1.0 - rate) / (nl * (nn - nl) * (nn - 1.0))
}

/// Tests equality of the left and right child uplifts.
///
/// Returns `None` when the statistic is undefined: a child holds no
/// treated or no control rows, an arm has fewer than two rows, or an arm's
/// response rate is 0 or 1 (zero variance).
pub fn uplift_split_test(counts: &GroupCounts) -> Option<SplitTest> {
    let (l, r) = (&counts.left, &counts.right);
    if l.treated == 0 || r.treated == 0 || l.control == 0 || r.control == 0 {
        return None;
    }
    let nt = counts.total_treated();
    let nc = counts.total_control();
    let pt = counts.treated_rate();
    let pc = counts.control_rate();
    if pt <= 0.0 || pt >= 1.0 || pc <= 0.0 || pc >= 1.0 {
        return None;
    }
    let rate = |resp: usize, n: usize| resp as f64 / n as f64;
    let p1 = rate(l.treated_responders, l.treated);
    let p2 = rate(l.control_responders, l.control);
    let p3 = rate(r.treated_responders, r.treated);
    let p4 = rate(r.control_responders, r.control);
    let var = split_variance(nt, l.treated, pt) + split_variance(nc, l.control, pc);
    let z = ((p1 - p2) - (p3 - p4)) / var.sqrt();
    Some(SplitTest {
        z,
        p_value: two_sided_p_value(z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinParams {
    /// Candidate cut points per node, `m`.
    pub n_split: usize,
    pub alpha: f64,
    /// Minimum treated and minimum control rows in each child.
    pub n_min: usize,
}

impl Default for BinParams {
    fn default() -> Self {
        BinParams {
            n_split: 10,
            alpha: 0.05,
            n_min: 30,
        }
    }
}

/// What happened at one tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub depth: usize,
    pub node_min: f64,
    pub node_max: f64,
    pub n_rows: usize,
    /// Best admissible candidate, if any candidate passed the size and
    /// variance checks.
    pub best_cut: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Inclusive lower cut; `None` for the leftmost leaf.
    pub lower: Option<f64>,
    /// Exclusive upper cut; `None` for the rightmost leaf.
    pub upper: Option<f64>,
    pub counts: ArmCounts,
    pub uplift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationTree {
    pub variable: String,
    pub params: BinParams,
    /// Strictly increasing.
    pub cut_points: Vec<f64>,
    /// Cuts in the order they were accepted during the recursion.
    pub accepted_order: Vec<f64>,
    pub leaves: Vec<Leaf>,
    pub trace: Vec<NodeTrace>,
}

impl QuantizationTree {
    /// Lines in the style `The variable <x> has been cut at:` / `<value>`.
    pub fn transcript(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.accepted_order {
            out.push(format!("The variable {} has been cut at:", self.variable));
            out.push(format_significant(*c, 7));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BinOutcome {
    NoSplit {
        variable: String,
        trace: Vec<NodeTrace>,
    },
    Tree(QuantizationTree),
}

impl BinOutcome {
    pub fn cut_points(&self) -> &[f64] {
        match self {
            BinOutcome::NoSplit { .. } => &[],
            BinOutcome::Tree(t) => &t.cut_points,
        }
    }

    pub fn transcript(&self) -> Vec<String> {
        match self {
            BinOutcome::NoSplit { .. } => vec![NO_SPLIT_MESSAGE.to_string()],
            BinOutcome::Tree(t) => t.transcript(),
        }
    }
}

/// Formats like R's default `print` of a double: `digits` significant
/// digits with trailing zeros dropped.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

struct Grower<'a> {
    x: &'a [f64],
    order: &'a [usize],
    prefix: Vec<ArmCounts>,
    params: BinParams,
    cuts: Vec<f64>,
    trace: Vec<NodeTrace>,
}

fn diff(a: &ArmCounts, b: &ArmCounts) -> ArmCounts {
    ArmCounts {
        treated: a.treated - b.treated,
        treated_responders: a.treated_responders - b.treated_responders,
        control: a.control - b.control,
        control_responders: a.control_responders - b.control_responders,
    }
}

impl Grower<'_> {
    fn value(&self, pos: usize) -> f64 {
        self.x[self.order[pos]]
    }

    /// Counts for sorted positions `lo..hi`.
    fn counts(&self, lo: usize, hi: usize) -> ArmCounts {
        diff(&self.prefix[hi], &self.prefix[lo])
    }

    /// Split of positions `lo..hi` at `cut`, if admissible.
    fn candidate(&self, lo: usize, hi: usize, cut: f64) -> Option<(f64, usize, SplitTest)> {
        let pos = lo + self.order[lo..hi].partition_point(|&i| self.x[i] < cut);
        if pos == lo || pos == hi {
            return None;
        }
        let counts = GroupCounts {
            left: self.counts(lo, pos),
            right: self.counts(pos, hi),
        };
        let n_min = self.params.n_min;
        if counts.left.treated < n_min
            || counts.left.control < n_min
            || counts.right.treated < n_min
            || counts.right.control < n_min
        {
            return None;
        }
        uplift_split_test(&counts).map(|t| (cut, pos, t))
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) {
        let node_min = self.value(lo);
        let node_max = self.value(hi - 1);
        let mut best: Option<(f64, usize, SplitTest)> = None;
        if node_max > node_min {
            let range = node_max - node_min;
            let m = self.params.n_split;
            let evaluated: Vec<Option<(f64, usize, SplitTest)>> = (1..=m)
                .into_par_iter()
                .map(|j| self.candidate(lo, hi, node_min + j as f64 * range / m as f64))
                .collect();
            for (cut, pos, test) in evaluated.into_iter().flatten() {
                if best.map_or(true, |(_, _, b)| test.p_value < b.p_value) {
                    best = Some((cut, pos, test));
                }
            }
        }
        let accepted = best.is_some_and(|(_, _, t)| t.p_value <= self.params.alpha);
        self.trace.push(NodeTrace {
            depth,
            node_min,
            node_max,
            n_rows: hi - lo,
            best_cut: best.map(|b| b.0),
            z: best.map(|b| b.2.z),
            p_value: best.map(|b| b.2.p_value),
            accepted,
        });
        if let (true, Some((cut, pos, _))) = (accepted, best) {
            self.cuts.push(cut);
            self.grow(lo, pos, depth + 1);
            self.grow(pos, hi, depth + 1);
        }
    }
}

/// Univariate supervised quantization of the numeric column `x`.
pub fn bin_uplift(ds: &UpliftDataset, x: &str, params: BinParams) -> Result<BinOutcome> {
    if params.n_split < 2 {
        return Err(UpliftError::invalid("n_split must be greater than 1"));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(UpliftError::invalid("alpha must lie in (0, 1)"));
    }
    if params.n_min < 1 {
        return Err(UpliftError::invalid("n_min must be at least 1"));
    }
    let values = ds.numeric(x)?;
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let (y, t) = (ds.outcome(), ds.treat());
    let mut prefix = Vec::with_capacity(ds.n() + 1);
    let mut acc = ArmCounts::default();
    prefix.push(acc);
    for &i in &order {
        acc.add(y[i], t[i]);
        prefix.push(acc);
    }

    let mut grower = Grower {
        x: values,
        order: &order,
        prefix,
        params,
        cuts: Vec::new(),
        trace: Vec::new(),
    };
    grower.grow(0, ds.n(), 0);

    if grower.cuts.is_empty() {
        return Ok(BinOutcome::NoSplit {
            variable: x.to_string(),
            trace: grower.trace,
        });
    }
    let accepted_order = grower.cuts.clone();
    let mut cut_points = grower.cuts;
    cut_points.sort_by(f64::total_cmp);

    let codes = codes_for(&cut_points, values);
    let mut counts = vec![ArmCounts::default(); cut_points.len() + 1];
    for i in 0..ds.n() {
        counts[codes[i]].add(y[i], t[i]);
    }
    let leaves = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| Leaf {
            lower: (k > 0).then(|| cut_points[k - 1]),
            upper: cut_points.get(k).copied(),
            uplift: c.uplift().unwrap_or(0.0),
            counts: c,
        })
        .collect();
    Ok(BinOutcome::Tree(QuantizationTree {
        variable: x.to_string(),
        params,
        cut_points,
        accepted_order,
        leaves,
        trace: grower.trace,
    }))
}

fn codes_for(cuts: &[f64], values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|&v| cuts.partition_point(|&c| c <= v))
        .collect()
}

/// Leaf index of each value: values below a cut go left, values equal to
/// or above it go right. Values outside the training range land in the
/// extreme leaves.
pub fn apply_bins(tree: &QuantizationTree, values: &[f64]) -> Vec<usize> {
    codes_for(&tree.cut_points, values)
}

fn code_label(code: usize, n_codes: usize) -> String {
    let width = (n_codes.max(1) - 1).to_string().len();
    format!("{code:0width$}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRequest {
    pub variable: String,
    pub params: BinParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BinTraceStatus {
    Quantized { cut_points: Vec<f64> },
    NoSplit,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTraceEntry {
    pub variable: String,
    #[serde(flatten)]
    pub status: BinTraceStatus,
}

/// Quantizes several variables. Each success appends a categorical column
/// `<var>_quantized` holding zero-padded leaf codes; failures are recorded
/// in the trace only.
pub fn bin_uplift_enhanced(
    ds: &UpliftDataset,
    requests: &[BinRequest],
) -> Result<(UpliftDataset, Vec<BinTraceEntry>)> {
    let mut out = ds.clone();
    let mut trace = Vec::with_capacity(requests.len());
    for req in requests {
        let status = match bin_uplift(ds, &req.variable, req.params) {
            Ok(BinOutcome::Tree(tree)) => {
                let codes = apply_bins(&tree, ds.numeric(&req.variable)?);
                let n_codes = tree.leaves.len();
                out = out.with_column(Column::categorical(
                    format!("{}_quantized", req.variable),
                    codes.into_iter().map(|c| code_label(c, n_codes)).collect(),
                ))?;
                BinTraceStatus::Quantized {
                    cut_points: tree.cut_points,
                }
            }
            Ok(BinOutcome::NoSplit { .. }) => BinTraceStatus::NoSplit,
            Err(e) => BinTraceStatus::Failed {
                reason: e.to_string(),
            },
        };
        trace.push(BinTraceEntry {
            variable: req.variable.clone(),
            status,
        });
    }
    Ok((out, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRank {
    pub level: String,
    pub uplift: f64,
    pub rank: usize,
}

/// Replaces a categorical column by the rank (1 = lowest) of each level's
/// observed uplift. Equal uplifts are ranked in lexicographic level order.
pub fn categorical_to_ordinal(
    ds: &UpliftDataset,
    x: &str,
) -> Result<(UpliftDataset, Vec<LevelRank>)> {
    let values = ds.categorical(x)?;
    let mut per_level: BTreeMap<&str, ArmCounts> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        per_level
            .entry(v.as_str())
            .or_default()
            .add(ds.outcome()[i], ds.treat()[i]);
    }
    if per_level.len() < 2 {
        return Err(UpliftError::DegenerateColumn {
            column: x.to_string(),
            message: "needs at least 2 levels".into(),
        });
    }
    let mut levels = Vec::with_capacity(per_level.len());
    for (level, counts) in &per_level {
        let uplift = counts.uplift().ok_or_else(|| {
            UpliftError::EmptyGroup(format!(
                "level `{level}` of `{x}` lacks treated or control rows"
            ))
        })?;
        levels.push((level.to_string(), uplift));
    }
    // BTreeMap order is lexicographic, and the sort is stable
    levels.sort_by(|a, b| a.1.total_cmp(&b.1));
    let ranks: Vec<LevelRank> = levels
        .into_iter()
        .enumerate()
        .map(|(k, (level, uplift))| LevelRank {
            level,
            uplift,
            rank: k + 1,
        })
        .collect();
    let lookup: BTreeMap<&str, usize> = ranks.iter().map(|r| (r.level.as_str(), r.rank)).collect();
    let numeric = values.iter().map(|v| lookup[v.as_str()] as f64).collect();
    Ok((ds.with_column(Column::numeric(x, numeric))?, ranks))
}

/// Quantizes a categorical column through its uplift ranking with
/// `m = K - 1` candidate cuts.
pub fn bin_uplift_categorical(
    ds: &UpliftDataset,
    x: &str,
    alpha: f64,
    n_min: usize,
) -> Result<(BinOutcome, Vec<LevelRank>)> {
    let (ordinal, ranks) = categorical_to_ordinal(ds, x)?;
    let params = BinParams {
        n_split: (ranks.len() - 1).max(2),
        alpha,
        n_min,
    };
    Ok((bin_uplift(&ordinal, x, params)?, ranks))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareParams {
    /// Intervals per axis, `b`.
    pub n_split: usize,
    /// Minimum treated and minimum control rows for a rectangle's own
    /// uplift to be used.
    pub n_min: usize,
    /// Number of categories, `c`.
    pub nb_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectCell {
    /// Interval index along the first variable.
    pub i: usize,
    /// Interval index along the second variable.
    pub j: usize,
    pub counts: ArmCounts,
    /// Observed uplift when both arms reach `n_min`.
    pub uplift: Option<f64>,
    /// Uplift assigned to rows of this rectangle.
    pub prediction: f64,
    pub category: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    pub var1: String,
    pub var2: String,
    pub params: SquareParams,
    pub bounds1: Vec<f64>,
    pub bounds2: Vec<f64>,
    /// Row-major over `(i, j)`: index `i * b + j`.
    pub cells: Vec<RectCell>,
    /// Overall uplift of the fitting data; used for sparse rectangles.
    pub fallback_uplift: f64,
    /// Smallest training prediction in each category, category 1 first.
    pub category_floors: Vec<f64>,
    /// Pooled observed uplift of the training rows in each category.
    pub category_uplift: Vec<f64>,
}

fn axis_bin(v: f64, bounds: &[f64]) -> usize {
    let b = bounds.len() - 1;
    let (lo, hi) = (bounds[0], bounds[b]);
    let k = ((v - lo) / (hi - lo) * b as f64).floor();
    if k.is_nan() || k < 0.0 {
        0
    } else {
        (k as usize).min(b - 1)
    }
}

impl RectGrid {
    pub fn cell_of(&self, v1: f64, v2: f64) -> usize {
        let b = self.params.n_split;
        axis_bin(v1, &self.bounds1) * b + axis_bin(v2, &self.bounds2)
    }

    /// Rectangle uplift for every row of `ds`.
    pub fn predict(&self, ds: &UpliftDataset) -> Result<Vec<f64>> {
        let (x1, x2) = (ds.numeric(&self.var1)?, ds.numeric(&self.var2)?);
        Ok(x1
            .iter()
            .zip(x2)
            .map(|(&a, &b)| self.cells[self.cell_of(a, b)].prediction)
            .collect())
    }

    /// Category (1 = highest uplift) of a predicted uplift value.
    pub fn category_of(&self, prediction: f64) -> usize {
        self.category_floors
            .iter()
            .position(|&f| prediction >= f)
            .map_or(self.category_floors.len(), |k| k + 1)
    }

    pub fn categorize(&self, ds: &UpliftDataset) -> Result<Vec<usize>> {
        Ok(self
            .predict(ds)?
            .into_iter()
            .map(|p| self.category_of(p))
            .collect())
    }
}

/// Bivariate quantization over an equal-width `b x b` grid.
///
/// Rectangles with fewer than `n_min` treated or control rows predict the
/// overall uplift. Categories are formed over the rows sorted by predicted
/// uplift (descending): a block of equal predictions starting at sorted
/// position `s` gets category `1 + floor(s c / n)`. The augmented dataset
/// gains `Uplift_<var1>_<var2>` and `Cat_<var1>_<var2>`.
pub fn square_uplift(
    ds: &UpliftDataset,
    var1: &str,
    var2: &str,
    params: SquareParams,
) -> Result<(RectGrid, UpliftDataset)> {
    if params.n_split < 2 {
        return Err(UpliftError::invalid("n_split must be greater than 1"));
    }
    if params.nb_group < 2 {
        return Err(UpliftError::invalid("nb_group must be at least 2"));
    }
    if var1 == var2 {
        return Err(UpliftError::invalid("the two variables must differ"));
    }
    let x1 = ds.numeric(var1)?;
    let x2 = ds.numeric(var2)?;
    let b = params.n_split;
    let bounds = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return Err(UpliftError::DegenerateColumn {
                column: name.to_string(),
                message: "range is empty".into(),
            });
        }
        Ok((0..=b)
            .map(|k| if k == b { hi } else { lo + k as f64 * (hi - lo) / b as f64 })
            .collect())
    };
    let bounds1 = bounds(var1, x1)?;
    let bounds2 = bounds(var2, x2)?;
    let fallback_uplift = uplift_of(ds.outcome(), ds.treat())?;

    let mut counts = vec![ArmCounts::default(); b * b];
    let mut row_cell = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let c = axis_bin(x1[i], &bounds1) * b + axis_bin(x2[i], &bounds2);
        counts[c].add(ds.outcome()[i], ds.treat()[i]);
        row_cell.push(c);
    }
    let mut cells: Vec<RectCell> = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let uplift = if c.treated >= params.n_min.max(1) && c.control >= params.n_min.max(1) {
                c.uplift()
            } else {
                None
            };
            RectCell {
                i: k / b,
                j: k % b,
                counts: c,
                uplift,
                prediction: uplift.unwrap_or(fallback_uplift),
                category: 0,
            }
        })
        .collect();

    let predictions: Vec<f64> = row_cell.iter().map(|&c| cells[c].prediction).collect();
    let (row_category, category_floors) = categories(&predictions, params.nb_group);
    let mut pooled = vec![ArmCounts::default(); category_floors.len()];
    for i in 0..ds.n() {
        pooled[row_category[i] - 1].add(ds.outcome()[i], ds.treat()[i]);
    }
    let category_uplift = pooled
        .iter()
        .map(|c| c.uplift().unwrap_or(fallback_uplift))
        .collect();

    let mut grid = RectGrid {
        var1: var1.to_string(),
        var2: var2.to_string(),
        params,
        bounds1,
        bounds2,
        cells: Vec::new(),
        fallback_uplift,
        category_floors,
        category_uplift,
    };
    for cell in &mut cells {
        cell.category = grid.category_of(cell.prediction);
    }
    grid.cells = cells;

    let width = params.nb_group.to_string().len();
    let augmented = ds
        .with_column(Column::numeric(format!("Uplift_{var1}_{var2}"), predictions))?
        .with_column(Column::categorical(
            format!("Cat_{var1}_{var2}"),
            row_category
                .iter()
                .map(|c| format!("{c:0width$}"))
                .collect(),
        ))?;
    Ok((grid, augmented))
}

/// Category per row and the smallest prediction in each category.
fn categories(predictions: &[f64], nb_group: usize) -> (Vec<usize>, Vec<f64>) {
    let n = predictions.len();
    let order = crate::qini::ranking(predictions);
    let mut row_category = vec![0; n];
    let mut floors: Vec<f64> = Vec::new();
    let mut s = 0;
    while s < n {
        let value = predictions[order[s]];
        let mut e = s;
        while e < n && predictions[order[e]] == value {
            e += 1;
        }
        let category = (1 + s * nb_group / n).min(nb_group);
        for &i in &order[s..e] {
            row_category[i] = category;
        }
        if floors.len() < category {
            floors.resize(category, value);
        }
        floors[category - 1] = value;
        s = e;
    }
    (row_category, floors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareCvPoint {
    pub n_split: usize,
    pub nb_group: usize,
    pub q: f64,
}

/// Scores every `(b, c)` pair: the grid is built on `train`, each
/// validation row is predicted by the pooled training uplift of its
/// category, and the Qini coefficient on `valid` is recorded. Returns all
/// points and the index of the best one (first on ties).
pub fn square_cv(
    train: &UpliftDataset,
    valid: &UpliftDataset,
    var1: &str,
    var2: &str,
    b_grid: &[usize],
    c_grid: &[usize],
    n_min: usize,
    nb_group: usize,
) -> Result<(Vec<SquareCvPoint>, usize)> {
    if b_grid.is_empty() || c_grid.is_empty() {
        return Err(UpliftError::invalid("empty (b, c) grid"));
    }
    let mut points = Vec::new();
    for &b in b_grid {
        for &c in c_grid {
            let (grid, _) = square_uplift(
                train,
                var1,
                var2,
                SquareParams {
                    n_split: b,
                    n_min,
                    nb_group: c,
                },
            )?;
            let predictions: Vec<f64> = grid
                .categorize(valid)?
                .into_iter()
                .map(|k| grid.category_uplift[k - 1])
                .collect();
            let q = qini_area(&qini_table(valid, &predictions, nb_group)?).q;
            points.push(SquareCvPoint {
                n_split: b,
                nb_group: c,
                q,
            });
        }
    }
    let mut best = 0;
    for (k, p) in points.iter().enumerate() {
        if p.q > points[best].q {
            best = k;
        }
    }
    Ok((points, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(lt: (usize, usize), lc: (usize, usize), rt: (usize, usize), rc: (usize, usize)) -> GroupCounts {
        GroupCounts {
            left: ArmCounts {
                treated: lt.0,
                treated_responders: lt.1,
                control: lc.0,
                control_responders: lc.1,
            },
            right: ArmCounts {
                treated: rt.0,
                treated_responders: rt.1,
                control: rc.0,
                control_responders: rc.1,
            },
        }
    }

    #[test]
    fn symmetric_split_has_zero_statistic() {
        let c = counts((10, 5), (10, 5), (10, 5), (10, 5));
        let t = uplift_split_test(&c).unwrap();
        assert_eq!(t.z, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn degenerate_variance_is_skipped() {
        assert!(uplift_split_test(&counts((10, 10), (10, 5), (10, 10), (10, 5))).is_none());
        assert!(uplift_split_test(&counts((10, 3), (0, 0), (10, 5), (10, 5))).is_none());
    }

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(11.083333333333334, 7), "11.08333");
        assert_eq!(format_significant(527.38100000001, 7), "527.381");
        assert_eq!(format_significant(1641.7149, 7), "1641.715");
    }

    #[test]
    fn bins_follow_strict_less_rule() {
        let tree = QuantizationTree {
            variable: "x".into(),
            params: BinParams::default(),
            cut_points: vec![527.381, 1641.715],
            accepted_order: vec![527.381, 1641.715],
            leaves: vec![],
            trace: vec![],
        };
        assert_eq!(apply_bins(&tree, &[5.0, 527.381, 1000.0, 5000.0]), vec![0, 1, 1, 2]);
        let single = QuantizationTree {
            cut_points: vec![11.08],
            ..tree
        };
        assert_eq!(apply_bins(&single, &[5.0, 12.0, 11.08]), vec![0, 1, 1]);
    }

    #[test]
    fn code_labels_are_zero_padded() {
        assert_eq!(code_label(3, 12), "03");
        assert_eq!(code_label(1, 3), "1");
    }

    #[test]
    fn categories_keep_ties_together() {
        let preds = [0.3, 0.1, 0.3, -0.2, 0.1, 0.0];
        let (cat, floors) = categories(&preds, 2);
        assert_eq!(cat, vec![1, 1, 1, 2, 1, 2]);
        assert_eq!(floors, vec![0.1, -0.2]);
    }
}

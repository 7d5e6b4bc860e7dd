//! Standalone SVG charts with a fixed 800x500 viewport.

use std::fmt::Write;

use crate::qini::{qini_bar_data, qini_curve_points, QiniTable};
use crate::quantize::{format_significant, QuantizationTree, RectGrid};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;

const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const INVALID_FILL: &str = "#bdbdbd";

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

/// Linear map from data range to the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 1.0, a + 1.0) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str, x_ticks: bool) {
        let (l, r) = (LEFT, WIDTH - RIGHT);
        let (t, b) = (TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            "<rect x=\"{l:.2}\" y=\"{t:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            r - l,
            b - t
        );
        for k in 0..=4 {
            let v = self.y0 + k as f64 * (self.y1 - self.y0) / 4.0;
            let y = self.py(v);
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                l - 6.0,
                y + 4.0,
                format_significant(v, 3)
            );
            if x_ticks {
                let v = self.x0 + k as f64 * (self.x1 - self.x0) / 4.0;
                let _ = writeln!(
                    s,
                    "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
                    self.px(v),
                    b + 16.0,
                    format_significant(v, 3)
                );
            }
        }
        if self.y0 < 0.0 && self.y1 > 0.0 {
            let y = self.py(0.0);
            let _ = writeln!(
                s,
                "<line x1=\"{l:.2}\" y1=\"{y:.2}\" x2=\"{r:.2}\" y2=\"{y:.2}\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>"
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            (l + r) / 2.0,
            HEIGHT - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (y0, y1) = (y0.min(0.0), y1.max(0.0));
    let frame = Frame::new(x0.min(0.0), x1, y0, y1);
    let mut s = header(title);
    frame.axes(&mut s, xlabel, ylabel, true);
    for (k, line) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let dash = if line.dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"{dash}/>",
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{colour}\">{}</text>",
            LEFT + 10.0,
            TOP + 16.0 + 16.0 * k as f64,
            escape(&line.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn bar_chart(title: &str, xlabel: &str, ylabel: &str, labels: &[String], values: &[f64]) -> String {
    let (y0, y1) = bounds(values.iter().copied());
    let frame = Frame::new(0.0, values.len().max(1) as f64, y0.min(0.0), y1.max(0.0));
    let mut s = header(title);
    frame.axes(&mut s, xlabel, ylabel, false);
    let slot = frame.px(1.0) - frame.px(0.0);
    for (k, &v) in values.iter().enumerate() {
        let x = frame.px(k as f64) + 0.15 * slot;
        let (top, bottom) = (frame.py(v.max(0.0)), frame.py(v.min(0.0)));
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            0.7 * slot,
            bottom - top,
            PALETTE[0]
        );
        if let Some(label) = labels.get(k) {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
                x + 0.35 * slot,
                HEIGHT - BOTTOM + 16.0,
                escape(label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Qini curves of one or more models with the random-targeting line of
/// the first.
pub fn qini_curve_svg(models: &[(&str, &QiniTable)]) -> String {
    let mut series = Vec::new();
    for (name, table) in models {
        series.push(Series {
            name: name.to_string(),
            points: qini_curve_points(table).points,
            dashed: false,
        });
    }
    if let Some((_, table)) = models.first() {
        series.push(Series {
            name: "random".into(),
            points: qini_curve_points(table).benchmark.to_vec(),
            dashed: true,
        });
    }
    line_chart(
        "Qini curve",
        "Proportion of population targeted (%)",
        "Cumulative incremental gains (pc pt)",
        &series,
    )
}

pub fn qini_bars_svg(table: &QiniTable) -> String {
    let labels: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{}", (100.0 * r.fraction).round()))
        .collect();
    bar_chart(
        "Observed uplift per group",
        "Proportion of population targeted (%)",
        "Uplift (%)",
        &labels,
        &qini_bar_data(table),
    )
}

pub fn bin_barplot_svg(tree: &QuantizationTree) -> String {
    let labels: Vec<String> = tree
        .leaves
        .iter()
        .map(|l| match (l.lower, l.upper) {
            (None, Some(u)) => format!("< {}", format_significant(u, 4)),
            (Some(lo), None) => format!(">= {}", format_significant(lo, 4)),
            (Some(lo), Some(u)) => {
                format!("[{}, {})", format_significant(lo, 4), format_significant(u, 4))
            }
            (None, None) => "all".into(),
        })
        .collect();
    let values: Vec<f64> = tree.leaves.iter().map(|l| 100.0 * l.uplift).collect();
    bar_chart(
        &format!("Uplift by {} bin", tree.variable),
        &tree.variable,
        "Uplift (%)",
        &labels,
        &values,
    )
}

/// Red for the lowest uplift through to blue for the highest.
fn heat_colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (215.0 + t * (33.0 - 215.0)).round() as u8;
    let g = (48.0 + t * (102.0 - 48.0)).round() as u8;
    let b = (39.0 + t * (172.0 - 39.0)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Rectangle uplifts; rectangles without enough rows in either arm are grey.
pub fn heatmap_svg(grid: &RectGrid) -> String {
    let b = grid.params.n_split;
    let valid: Vec<f64> = grid.cells.iter().filter_map(|c| c.uplift).collect();
    let (lo, hi) = bounds(valid.iter().copied());
    let frame = Frame::new(
        grid.bounds1[0],
        grid.bounds1[b],
        grid.bounds2[0],
        grid.bounds2[b],
    );
    let mut s = header(&format!("Uplift by {} and {}", grid.var1, grid.var2));
    for cell in &grid.cells {
        let x = frame.px(grid.bounds1[cell.i]);
        let w = frame.px(grid.bounds1[cell.i + 1]) - x;
        let y = frame.py(grid.bounds2[cell.j + 1]);
        let h = frame.py(grid.bounds2[cell.j]) - y;
        let fill = match cell.uplift {
            Some(u) if hi > lo => heat_colour((u - lo) / (hi - lo)),
            Some(_) => heat_colour(0.5),
            None => INVALID_FILL.to_string(),
        };
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\" stroke=\"white\"/>"
        );
        if let Some(u) = cell.uplift {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\"white\">{:.1}%</text>",
                x + w / 2.0,
                y + h / 2.0 + 4.0,
                100.0 * u
            );
        }
    }
    frame.axes(&mut s, &grid.var1, &grid.var2, true);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_have_fixed_viewport() {
        let svg = bar_chart("t", "x", "y", &["a".into(), "b".into()], &[1.0, -2.0]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox=\"0 0 800 500\""));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn heat_scale_ends() {
        assert_eq!(heat_colour(0.0), "#d73027");
        assert_eq!(heat_colour(1.0), "#2166ac");
    }

    #[test]
    fn labels_are_escaped() {
        let svg = line_chart(
            "a < b & c",
            "x",
            "y",
            &[Series {
                name: "m".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
                dashed: false,
            }],
        );
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}

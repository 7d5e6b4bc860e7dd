// Qini table, coefficient and SVG plots for a fitted model on held-out
// data.

use upliftkit::data::{split_uplift, SplitConfig};
use upliftkit::estimators::{inter_predict, inter_uplift_fit, InterInput};
use upliftkit::plot::{qini_bars_svg, qini_curve_svg};
use upliftkit::qini::{qini_area, qini_table};
use upliftkit::synth::{planted_uplift, PlantedConfig};

pub fn run_example() -> upliftkit::Result<f64> {
    let ds = planted_uplift(&PlantedConfig::default());
    let split = split_uplift(&ds, &SplitConfig::new(&ds, 0.7, 1))?;
    let fit = inter_uplift_fit(&split.train, InterInput::All(&["x1", "x2", "x3", "x4", "x5"]))?;
    let table = qini_table(&split.valid, &inter_predict(&fit, &split.valid)?, 10)?;
    println!("{:>6} {:>7} {:>7} {:>10}", "phi", "T_n", "C_n", "g(phi)");
    for r in &table.rows {
        println!(
            "{:>6.1} {:>7} {:>7} {:>10.4}",
            r.fraction, r.cum_treated, r.cum_control, r.relative_incremental_uplift
        );
    }
    let area = qini_area(&table);
    println!("Qini coefficient: {:.4} (raw area {:.4})", area.q, area.q_raw);

    let dir = std::env::temp_dir().join("upliftkit-qini-example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("qini_curve.svg"), qini_curve_svg(&[("interaction", &table)]))?;
    std::fs::write(dir.join("qini_bars.svg"), qini_bars_svg(&table))?;
    println!("plots in {}", dir.display());
    Ok(area.q)
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

// Interaction estimator: a single logistic regression with treatment
// interactions, predicted with the treatment switched on and off.

use upliftkit::estimators::{inter_predict, inter_uplift_fit, InterInput};
use upliftkit::synth::{planted_uplift, PlantedConfig};

pub fn run_example() -> upliftkit::Result<f64> {
    let ds = planted_uplift(&PlantedConfig {
        n: 3000,
        seed: 5,
        ..Default::default()
    });
    let fit = inter_uplift_fit(&ds, InterInput::All(&["x1", "x2", "x3"]))?;
    for (name, b) in fit.model.columns.iter().zip(&fit.model.coefficients) {
        println!("{name:<12} {b:>9.4}");
    }
    let uplift = inter_predict(&fit, &ds)?;
    // the planted uplift grows with x1
    let x1 = ds.numeric("x1")?;
    let (mut hi, mut lo, mut n_hi, mut n_lo) = (0.0, 0.0, 0, 0);
    for (u, x) in uplift.iter().zip(x1) {
        if *x > 0.0 {
            hi += u;
            n_hi += 1;
        } else {
            lo += u;
            n_lo += 1;
        }
    }
    let gap = hi / n_hi as f64 - lo / n_lo as f64;
    println!("mean uplift for x1 > 0 minus x1 <= 0: {gap:.4}");
    Ok(gap)
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

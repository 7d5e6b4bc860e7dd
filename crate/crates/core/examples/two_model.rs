// Two-model estimator: one logistic regression per arm, uplift as the
// difference of the two predicted probabilities.

use upliftkit::data::encode_dummies;
use upliftkit::estimators::{dual_predict, dual_uplift_fit};
use upliftkit::synth::campaign;

pub fn run_example() -> upliftkit::Result<Vec<f64>> {
    let ds = encode_dummies(&encode_dummies(&campaign(4000, 11), "zip_code")?, "channel")?;
    let predictors = [
        "recency",
        "history",
        "womens",
        "newbie",
        "zip_code_Surburban",
        "zip_code_Urban",
        "channel_Phone",
        "channel_Web",
    ];
    let fit = dual_uplift_fit(&ds, &predictors)?;
    for (label, model) in [("control", &fit.model_control), ("treated", &fit.model_treated)] {
        println!("{label} model (converged: {}):", model.converged);
        for (name, b) in model.columns.iter().zip(&model.coefficients) {
            println!("  {name:<20} {b:>10.5}");
        }
    }
    let uplift = dual_predict(&fit, &ds)?;
    let mean = uplift.iter().sum::<f64>() / uplift.len() as f64;
    println!("mean predicted uplift: {mean:.4}");
    Ok(uplift)
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

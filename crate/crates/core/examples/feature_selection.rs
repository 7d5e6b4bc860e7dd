// Lasso path over the interaction design, scored by the Qini
// coefficient; the best penalty's active terms are refitted without
// penalty.

use upliftkit::select::{best_features, refit_selected, BestFeaturesConfig};
use upliftkit::synth::{planted_uplift, PlantedConfig};

pub fn run_example() -> upliftkit::Result<Vec<String>> {
    let ds = planted_uplift(&PlantedConfig {
        n: 2000,
        seed: 3,
        ..Default::default()
    });
    let cfg = BestFeaturesConfig {
        nb_lambda: 40,
        validation: true,
        seed: 9,
        ..Default::default()
    };
    let scan = best_features(&ds, &["x1", "x2", "x3", "x4", "x5"], &cfg)?;
    println!("best lambda {:.5} with q = {:.4}", scan.best_lambda, scan.best_q);
    println!("selected: {}", scan.selected_terms.join(", "));
    let refit = refit_selected(&ds.subset(&scan.fit_rows)?, &scan.selected_terms)?;
    for (name, b) in refit.model.columns.iter().zip(&refit.model.coefficients) {
        println!("  {name:<10} {b:>9.4}");
    }
    Ok(scan.selected_terms)
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

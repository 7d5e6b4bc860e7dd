// Whole workflow on an e-mail campaign: quantize recency and history,
// split, fit the baselines, select features for every variable version
// and compare Qini coefficients on the validation part.
//
// Uses the Hillstrom file named by `HILLSTROM_CSV` when set, otherwise a
// simulated campaign of the same shape.

use upliftkit::data::{encode_dummies_with, load_hillstrom, ReferenceLevel, HILLSTROM_PREDICTORS};
use upliftkit::pipeline::{run_pipeline, PipelineConfig, SquareRequest};
use upliftkit::quantize::{BinParams, BinRequest, SquareParams};
use upliftkit::synth::campaign;

pub fn run_example() -> upliftkit::Result<Vec<(String, f64)>> {
    let ds = match std::env::var("HILLSTROM_CSV") {
        Ok(path) => load_hillstrom(path)?,
        Err(_) => {
            let ds = campaign(12000, 1988);
            let ds = encode_dummies_with(&ds, "zip_code", ReferenceLevel::Last)?;
            encode_dummies_with(&ds, "channel", ReferenceLevel::Last)?
        }
    };
    let mut cfg = PipelineConfig::new(&HILLSTROM_PREDICTORS);
    cfg.seed = 1988;
    cfg.nb_lambda = 30;
    cfg.quantize = vec![
        BinRequest {
            variable: "recency".into(),
            params: BinParams {
                n_split: 12,
                alpha: 0.10,
                n_min: 30,
            },
        },
        BinRequest {
            variable: "history".into(),
            params: BinParams {
                n_split: 100,
                alpha: 0.05,
                n_min: 30,
            },
        },
    ];
    cfg.square = Some(SquareRequest {
        var1: "recency".into(),
        var2: "history".into(),
        params: SquareParams {
            n_split: 3,
            n_min: 1,
            nb_group: 2,
        },
    });
    let report = run_pipeline(&ds, &cfg)?;
    println!("train {} rows, valid {} rows", report.n_train, report.n_valid);
    println!("{:<48} {:<10} {:>8}", "Model", "Selection", "Qini");
    for m in &report.models {
        println!(
            "{:<48} {:<10} {:>8.4}",
            m.name,
            if m.feature_selection { "Yes" } else { "No" },
            m.qini
        );
    }
    Ok(report.models.iter().map(|m| (m.name.clone(), m.qini)).collect())
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

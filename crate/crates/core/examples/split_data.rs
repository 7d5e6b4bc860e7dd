// Stratified 70/30 split that keeps the treated/control and
// responder/non-responder mix of every part.

use upliftkit::data::{split_uplift, SplitConfig};
use upliftkit::qini::overall_uplift;
use upliftkit::synth::campaign;

pub fn run_example() -> upliftkit::Result<(usize, usize)> {
    let ds = campaign(5000, 7);
    let split = split_uplift(&ds, &SplitConfig::new(&ds, 0.7, 42))?;
    for (label, part) in [("all", &ds), ("train", &split.train), ("valid", &split.valid)] {
        println!(
            "{label:>5}: n = {:>5}, treated share = {:.3}, uplift = {:+.4}",
            part.n(),
            part.n_treated() as f64 / part.n() as f64,
            overall_uplift(part)?
        );
    }
    Ok((split.train.n(), split.valid.n()))
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

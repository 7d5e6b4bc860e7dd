// Writes a simulated campaign to CSV for trying the command line tool:
//
// ```text
// cargo run --example write_campaign_csv -- campaign.csv
// upliftkit --out out bin --data campaign.csv --outcome visit --treat treat --x recency --n-split 12
// ```

use upliftkit::synth::campaign;

pub fn run_example(path: &std::path::Path, n: usize) -> upliftkit::Result<()> {
    campaign(n, 1).save_csv(path)?;
    println!("wrote {n} rows to {}", path.display());
    Ok(())
}

fn main() -> upliftkit::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "campaign.csv".into());
    run_example(std::path::Path::new(&path), 20000)
}

// Supervised quantization of continuous and categorical variables by the
// uplift-difference test.

use upliftkit::quantize::{
    bin_uplift, bin_uplift_categorical, bin_uplift_enhanced, BinOutcome, BinParams, BinRequest,
};
use upliftkit::synth::campaign;

pub fn run_example() -> upliftkit::Result<Vec<f64>> {
    let ds = campaign(20000, 21);
    let params = BinParams {
        n_split: 12,
        alpha: 0.05,
        n_min: 30,
    };
    let recency = bin_uplift(&ds, "recency", params)?;
    for line in recency.transcript() {
        println!("{line}");
    }
    if let BinOutcome::Tree(tree) = &recency {
        for leaf in &tree.leaves {
            println!(
                "  [{:?}, {:?}): uplift {:+.4} ({} treated, {} control)",
                leaf.lower, leaf.upper, leaf.uplift, leaf.counts.treated, leaf.counts.control
            );
        }
    }

    let (channel, ranks) = bin_uplift_categorical(&ds, "channel", 0.05, 30)?;
    for r in &ranks {
        println!("channel {:<13} uplift {:+.4} rank {}", r.level, r.uplift, r.rank);
    }
    println!("channel cuts on the rank scale: {:?}", channel.cut_points());

    let requests = ["recency", "history", "newbie"].map(|v| BinRequest {
        variable: v.to_string(),
        params: BinParams {
            n_split: 20,
            ..params
        },
    });
    let (augmented, trace) = bin_uplift_enhanced(&ds, &requests)?;
    for t in &trace {
        println!("{}: {:?}", t.variable, t.status);
    }
    println!("columns: {}", augmented.feature_names().join(", "));
    Ok(recency.cut_points().to_vec())
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

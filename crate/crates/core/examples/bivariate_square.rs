// Bivariate quantization: a b x b grid of observed uplifts, a heatmap
// and a new categorical variable grouping rows by rectangle uplift.

use upliftkit::data::{split_uplift, SplitConfig};
use upliftkit::plot::heatmap_svg;
use upliftkit::quantize::{square_cv, square_uplift, SquareParams};
use upliftkit::synth::campaign;

pub fn run_example() -> upliftkit::Result<usize> {
    let ds = campaign(20000, 4);
    let params = SquareParams {
        n_split: 3,
        n_min: 30,
        nb_group: 2,
    };
    let (grid, augmented) = square_uplift(&ds, "recency", "history", params)?;
    for cell in &grid.cells {
        println!(
            "rect ({}, {}): n = {:>5}, uplift {:>8}, category {}",
            cell.i,
            cell.j,
            cell.counts.treated + cell.counts.control,
            cell.uplift.map_or("n/a".into(), |u| format!("{u:+.4}")),
            cell.category
        );
    }
    println!("new columns: Uplift_recency_history, Cat_recency_history");
    let path = std::env::temp_dir().join("upliftkit-heatmap.svg");
    std::fs::write(&path, heatmap_svg(&grid))?;
    println!("heatmap in {}", path.display());

    let split = split_uplift(&ds, &SplitConfig::new(&ds, 0.7, 2))?;
    let (points, best) = square_cv(&split.train, &split.valid, "recency", "history", &[2, 3, 4], &[2, 3], 30, 10)?;
    for p in &points {
        println!("b = {}, c = {}: q = {:.4}", p.n_split, p.nb_group, p.q);
    }
    println!("chosen: b = {}, c = {}", points[best].n_split, points[best].nb_group);
    Ok(augmented.n())
}

fn main() -> upliftkit::Result<()> {
    run_example().map(|_| ())
}

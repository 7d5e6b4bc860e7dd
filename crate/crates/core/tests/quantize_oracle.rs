mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use upliftkit::data::{Column, UpliftDataset};
use upliftkit::qini::ArmCounts;
use upliftkit::quantize::*;

#[test]
fn hypergeometric_moments_match_enumeration() {
    let mut checked = 0;
    for total in 2..=30u64 {
        for successes in 0..=total {
            for n in 1..total {
                let p = successes as f64 / total as f64;
                let (mean, var) = enumerate_moments(total, successes, n);
                let e = n as f64 * p;
                let v = n as f64 * p * (1.0 - p) * (total - n) as f64 / (total - 1) as f64;
                assert!((mean - e).abs() <= 1e-12 * e.max(1.0), "E: {total} {successes} {n}");
                assert!((var - v).abs() <= 1e-12 * v.max(1.0), "V: {total} {successes} {n}");
                checked += 1;
            }
        }
    }
    assert!(checked > 4000);
}

fn arm(treated: usize, tr: usize, control: usize, cr: usize) -> ArmCounts {
    ArmCounts {
        treated,
        treated_responders: tr,
        control,
        control_responders: cr,
    }
}

#[test]
fn statistic_uses_the_enumerated_variance() {
    // control arm held fixed: 20 units, 10 successes, 10 drawn left, 5 left successes
    let (_, vz_c) = enumerate_moments(20, 10, 10);
    let var_c = vz_c * (20.0f64 / 100.0).powi(2);
    for total in 2..=30u64 {
        for successes in 1..total {
            for n in 1..total {
                let lo = n.saturating_sub(total - successes);
                let z1 = (lo + successes.min(n)) / 2;
                let (_, vz) = enumerate_moments(total, successes, n);
                let scale = total as f64 / (n as f64 * (total - n) as f64);
                let var_t = vz * scale * scale;
                let p1 = z1 as f64 / n as f64;
                let p3 = (successes - z1) as f64 / (total - n) as f64;
                let expected = ((p1 - 0.5) - (p3 - 0.5)) / (var_t + var_c).sqrt();
                let counts = GroupCounts {
                    left: arm(n as usize, z1 as usize, 10, 5),
                    right: arm((total - n) as usize, (successes - z1) as usize, 10, 5),
                };
                let got = uplift_split_test(&counts).unwrap();
                assert!(
                    (got.z - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "{total} {successes} {n}: {} vs {expected}",
                    got.z
                );
            }
        }
    }
}

#[test]
fn worked_example() {
    let counts = GroupCounts {
        left: arm(10, 7, 10, 5),
        right: arm(10, 3, 10, 5),
    };
    let t = uplift_split_test(&counts).unwrap();
    // scipy.stats.norm.sf reference values
    assert!((t.z - 1.2328828005937953).abs() < 1e-12);
    assert!((t.p_value - 0.21761949324671492).abs() < 1e-12);
    assert!((two_sided_p_value(1.96) - 0.04999579029644087).abs() < 1e-12);
    assert!((two_sided_p_value(-3.0) - 0.0026997960632601866).abs() < 1e-12);
    assert!((two_sided_p_value(6.0) / 1.973175290075389e-09 - 1.0).abs() < 1e-9);
}

#[test]
fn null_rejection_rate_is_nominal() {
    let mut r = rng(2024);
    let n = 400;
    let x: Vec<f64> = (0..n).map(|_| r.gen()).collect();
    let y: Vec<u8> = x
        .iter()
        .map(|&v| u8::from(r.gen::<f64>() < if v < 0.5 { 0.3 } else { 0.5 }))
        .collect();
    let mut t: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let mut rejected = 0;
    let runs = 2000;
    for _ in 0..runs {
        t.shuffle(&mut r);
        let mut c = GroupCounts::default();
        for i in 0..n {
            if x[i] < 0.5 {
                c.left.add(y[i], t[i]);
            } else {
                c.right.add(y[i], t[i]);
            }
        }
        if uplift_split_test(&c).unwrap().p_value <= 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / runs as f64;
    assert!((rate - 0.05).abs() <= 0.02, "rejection rate {rate}");
}

/// Uplift is 0.3 below x = 0.3 and 0 above; outcome also depends on x.
fn step_data(seed: u64, n: usize) -> UpliftDataset {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut t = Vec::new();
    for _ in 0..n {
        let v: f64 = r.gen::<f64>() * 10.0;
        let ti = u8::from(r.gen::<f64>() < 0.5);
        let p = 0.2 + 0.02 * v + if v < 3.0 && ti == 1 { 0.3 } else { 0.0 };
        x.push(v);
        t.push(ti);
        y.push(u8::from(r.gen::<f64>() < p));
    }
    UpliftDataset::new(
        "y",
        y,
        "treat",
        t,
        vec![Column::numeric("x", x), Column::numeric("flat", vec![2.5; n])],
    )
    .unwrap()
}

#[test]
fn tree_invariants_on_a_step_effect() {
    let ds = step_data(1, 4000);
    let params = BinParams {
        n_split: 20,
        alpha: 0.05,
        n_min: 30,
    };
    let out = bin_uplift(&ds, "x", params).unwrap();
    let BinOutcome::Tree(tree) = &out else {
        panic!("expected a split");
    };
    assert!(tree.cut_points.windows(2).all(|w| w[0] < w[1]));
    assert!(tree.cut_points.iter().any(|c| (c - 3.0).abs() < 0.6), "{:?}", tree.cut_points);
    // recount leaves from scratch
    let codes = apply_bins(tree, ds.numeric("x").unwrap());
    let mut counts = vec![ArmCounts::default(); tree.leaves.len()];
    for (i, &c) in codes.iter().enumerate() {
        counts[c].add(ds.outcome()[i], ds.treat()[i]);
    }
    for (leaf, c) in tree.leaves.iter().zip(&counts) {
        assert_eq!(&leaf.counts, c);
        assert!(c.treated >= 30 && c.control >= 30);
    }
    for node in tree.trace.iter().filter(|n| n.accepted) {
        assert!(node.p_value.unwrap() <= 0.05);
    }
    assert_eq!(tree.trace.iter().filter(|n| n.accepted).count(), tree.cut_points.len());
    assert_eq!(bin_uplift(&ds, "x", params).unwrap(), out);
    assert!(out.transcript()[0].starts_with("The variable x has been cut at:"));
}

#[test]
fn constant_and_missing_columns() {
    let ds = step_data(2, 500);
    let out = bin_uplift(&ds, "flat", BinParams::default()).unwrap();
    assert!(matches!(out, BinOutcome::NoSplit { .. }));
    assert_eq!(out.transcript(), vec![NO_SPLIT_MESSAGE.to_string()]);
    assert!(bin_uplift(&ds, "nope", BinParams::default()).is_err());

    let requests = ["x", "flat", "nope"].map(|v| BinRequest {
        variable: v.into(),
        params: BinParams {
            n_split: 10,
            alpha: 0.05,
            n_min: 20,
        },
    });
    let (aug, trace) = bin_uplift_enhanced(&ds, &requests).unwrap();
    assert!(matches!(trace[1].status, BinTraceStatus::NoSplit));
    assert!(matches!(trace[2].status, BinTraceStatus::Failed { .. }));
    assert!(!aug.has_column("flat_quantized"));
    let quantized = matches!(trace[0].status, BinTraceStatus::Quantized { .. });
    assert_eq!(aug.has_column("x_quantized"), quantized);

    let (same, empty) = bin_uplift_enhanced(&ds, &[]).unwrap();
    assert_eq!(same, ds);
    assert!(empty.is_empty());
}

fn categorical_data(levels: &[(&str, [usize; 4])]) -> UpliftDataset {
    let (mut y, mut t, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for (name, [nt, rt, nc, rc]) in levels {
        for i in 0..*nt {
            y.push(u8::from(i < *rt));
            t.push(1);
            c.push(name.to_string());
        }
        for i in 0..*nc {
            y.push(u8::from(i < *rc));
            t.push(0);
            c.push(name.to_string());
        }
    }
    UpliftDataset::new("y", y, "treat", t, vec![Column::categorical("g", c)]).unwrap()
}

#[test]
fn categorical_levels_ranked_by_uplift() {
    let ds = categorical_data(&[("A", [20, 4, 20, 2]), ("B", [20, 1, 20, 2])]);
    let (ord, ranks) = categorical_to_ordinal(&ds, "g").unwrap();
    assert!((ranks[0].uplift + 0.05).abs() < 1e-12 && ranks[0].level == "B");
    assert_eq!((ranks[1].level.as_str(), ranks[1].rank), ("A", 2));
    let values = ord.numeric("g").unwrap();
    assert_eq!(values[0], 2.0);
    assert_eq!(values[45], 1.0);

    let tied = categorical_data(&[("c", [10, 5, 10, 5]), ("a", [10, 5, 10, 5]), ("b", [10, 5, 10, 5])]);
    let (_, ranks) = categorical_to_ordinal(&tied, "g").unwrap();
    let order: Vec<&str> = ranks.iter().map(|r| r.level.as_str()).collect();
    assert_eq!(order, ["a", "b", "c"]);

    let empty_arm = categorical_data(&[("A", [10, 5, 10, 5]), ("B", [10, 5, 0, 0])]);
    let err = categorical_to_ordinal(&empty_arm, "g").unwrap_err().to_string();
    assert!(err.contains("`B`"), "{err}");
}

#[test]
fn categorical_binning_uses_k_minus_one_candidates() {
    let ds = categorical_data(&[
        ("A", [200, 120, 200, 40]),
        ("B", [200, 60, 200, 58]),
        ("C", [200, 50, 200, 52]),
    ]);
    let (out, _) = bin_uplift_categorical(&ds, "g", 0.05, 30).unwrap();
    let (ord, _) = categorical_to_ordinal(&ds, "g").unwrap();
    let direct = bin_uplift(
        &ord,
        "g",
        BinParams {
            n_split: 2,
            alpha: 0.05,
            n_min: 30,
        },
    )
    .unwrap();
    assert_eq!(out, direct);
    assert_eq!(out.cut_points(), &[3.0]);
}

/// Four rectangles of four rows (two treated, two control) each.
fn grid_data() -> UpliftDataset {
    // (x1, x2, treated responders, control responders)
    let cells = [(0.0, 0.0, 2, 0), (0.0, 1.0, 1, 0), (1.0, 0.0, 1, 1), (1.0, 1.0, 0, 1)];
    let (mut x1, mut x2, mut y, mut t) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (a, b, rt, rc) in cells {
        for k in 0..4 {
            x1.push(a);
            x2.push(b);
            let treated = k < 2;
            t.push(u8::from(treated));
            y.push(u8::from(if treated { k < rt } else { k - 2 < rc }));
        }
    }
    UpliftDataset::new(
        "y",
        y,
        "treat",
        t,
        vec![Column::numeric("a", x1), Column::numeric("b", x2)],
    )
    .unwrap()
}

#[test]
fn two_by_two_grid_by_hand() {
    let ds = grid_data();
    let params = SquareParams {
        n_split: 2,
        n_min: 1,
        nb_group: 2,
    };
    let (grid, aug) = square_uplift(&ds, "a", "b", params).unwrap();
    let expected = [1.0, 0.5, 0.0, -0.5];
    for (cell, e) in grid.cells.iter().zip(expected) {
        assert_eq!(cell.uplift, Some(e));
        assert_eq!(cell.counts.treated + cell.counts.control, 4);
    }
    let cats = aug.categorical("Cat_a_b").unwrap();
    assert_eq!(cats.iter().filter(|c| *c == "1").count(), 8);
    assert_eq!(cats.iter().filter(|c| *c == "2").count(), 8);
    assert_eq!(cats[0], "1");
    assert_eq!(cats[15], "2");
    assert_eq!(aug.numeric("Uplift_a_b").unwrap()[4], 0.5);

    let four = SquareParams {
        nb_group: 4,
        ..params
    };
    let (grid, _) = square_uplift(&ds, "a", "b", four).unwrap();
    let cats: Vec<usize> = grid.cells.iter().map(|c| c.category).collect();
    assert_eq!(cats, vec![1, 2, 3, 4]);
    assert_eq!(grid.categorize(&ds).unwrap().iter().filter(|&&c| c == 3).count(), 4);
}

#[test]
fn sparse_rectangles_fall_back_to_overall_uplift() {
    let ds = grid_data();
    let params = SquareParams {
        n_split: 2,
        n_min: 3,
        nb_group: 2,
    };
    let (grid, aug) = square_uplift(&ds, "a", "b", params).unwrap();
    assert!(grid.cells.iter().all(|c| c.uplift.is_none()));
    let overall = upliftkit::qini::overall_uplift(&ds).unwrap();
    assert!(aug.numeric("Uplift_a_b").unwrap().iter().all(|&u| u == overall));
}

#[test]
fn grid_partitions_rows() {
    let ds = step_data(5, 3000);
    let ds = ds
        .with_column(Column::numeric(
            "z",
            (0..3000).map(|i| ((i * 37) % 101) as f64).collect(),
        ))
        .unwrap();
    let (grid, aug) = square_uplift(
        &ds,
        "x",
        "z",
        SquareParams {
            n_split: 15,
            n_min: 5,
            nb_group: 3,
        },
    )
    .unwrap();
    assert_eq!(grid.cells.len(), 225);
    let total: usize = grid.cells.iter().map(|c| c.counts.treated + c.counts.control).sum();
    assert_eq!(total, ds.n());
    let cats = grid.categorize(&ds).unwrap();
    let from_aug: Vec<usize> = aug
        .categorical("Cat_x_z")
        .unwrap()
        .iter()
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(cats, from_aug);
    assert!(square_uplift(&ds, "x", "flat", SquareParams { n_split: 3, n_min: 1, nb_group: 2 }).is_err());
}

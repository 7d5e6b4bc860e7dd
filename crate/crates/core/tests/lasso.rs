mod common;

use common::*;
use rand::Rng;
use upliftkit::glm::{build_design, fit_logistic};
use upliftkit::qini::{qini_area, qini_table};
use upliftkit::estimators::inter_predict;
use upliftkit::select::{best_features, path_point_qini, BestFeaturesConfig, LassoProblem};
use upliftkit::synth::{planted_uplift, PlantedConfig};

/// Largest KKT violation of a path point, measured on the standardized
/// scale from the original-scale coefficients.
fn kkt_violation(problem: &LassoProblem, coefs: &[f64], lambda: f64) -> f64 {
    let x = problem.design();
    let y = problem.outcome();
    let n = x.n_rows();
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(coefs).map(|(a, b)| a * b).sum();
            f64::from(y[i]) - sigmoid(eta)
        })
        .collect();
    let mut worst = (resid.iter().sum::<f64>() / n as f64).abs();
    for j in 1..x.n_cols() {
        let s = problem.scales[j];
        if s == 0.0 {
            continue;
        }
        let c = problem.centers[j];
        let g: f64 = x
            .column(j)
            .iter()
            .zip(&resid)
            .map(|(v, r)| (v - c) / s * r)
            .sum::<f64>()
            / n as f64;
        let b = coefs[j];
        let v = if b == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g - lambda * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[test]
fn every_path_point_satisfies_kkt() {
    for inst in 0..20u64 {
        let d = 2 + (inst % 4) as usize;
        let mut r = rng(500 + inst);
        let main: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let inter: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let ds = random_dataset(inst, 300, d, |x, t| {
            -0.3 + x.iter().enumerate().map(|(j, v)| (main[j] + f64::from(t) * inter[j]) * v).sum::<f64>()
                + 0.2 * f64::from(t)
        });
        let names = feature_names(d);
        let preds: Vec<&str> = names.iter().map(String::as_str).collect();
        let problem = LassoProblem::new(&ds, &preds).unwrap();
        let grid = problem.lambda_grid(30, 1e-4).unwrap();
        let path = problem.path(&grid);
        for (k, &lambda) in grid.iter().enumerate() {
            let v = kkt_violation(&problem, &path.coefficient_sets[k], lambda);
            assert!(v < 1e-6, "instance {inst}, lambda index {k}: violation {v:e}");
        }
        // first grid point is lambda_max: everything penalized is exactly zero
        assert!(path.coefficient_sets[0][1..].iter().all(|&b| b == 0.0));
        assert!(path.active_sets[0].is_empty());
    }
}

#[test]
fn lambda_max_is_the_smallest_all_zero_penalty() {
    let ds = random_dataset(3, 400, 3, |x, t| x[0] + f64::from(t) * x[1]);
    let problem = LassoProblem::new(&ds, &["x1", "x2", "x3"]).unwrap();
    let lmax = problem.lambda_max();
    let at = problem.solve(lmax, None);
    assert!(at.standardized[1..].iter().all(|&b| b == 0.0));
    let below = problem.solve(lmax * 0.99, None);
    assert!(below.standardized[1..].iter().any(|&b| b != 0.0));
}

#[test]
fn warm_and_cold_starts_agree() {
    let ds = random_dataset(4, 300, 3, |x, t| 0.5 * x[0] - x[2] + f64::from(t) * (0.5 + x[1]));
    let problem = LassoProblem::new(&ds, &["x1", "x2", "x3"]).unwrap();
    let grid = problem.lambda_grid(20, 1e-3).unwrap();
    let path = problem.path(&grid);
    for (k, &lambda) in grid.iter().enumerate() {
        let cold = problem.solve(lambda, None);
        for (a, b) in cold.standardized.iter().zip(&path.standardized_sets[k]) {
            assert!((a - b).abs() < 1e-6, "lambda {lambda}: {a} vs {b}");
        }
    }
}

#[test]
fn smallest_penalty_approaches_the_mle() {
    let ds = random_dataset(6, 200, 2, |x, t| -0.2 + 0.6 * x[0] + f64::from(t) * (0.3 - 0.5 * x[1]));
    let problem = LassoProblem::new(&ds, &["x1", "x2"]).unwrap();
    let grid = problem.lambda_grid(100, 1e-4).unwrap();
    let path = problem.path(&grid);
    let x = build_design(&ds, &["x1", "x2"], true).unwrap();
    let mle = fit_logistic(&x, ds.outcome()).unwrap();
    for (a, b) in path.coefficient_sets.last().unwrap().iter().zip(&mle.coefficients) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn rescaling_a_column_rescales_its_coefficient() {
    let ds = random_dataset(10, 300, 2, |x, t| x[0] + f64::from(t) * x[1]);
    let scaled = ds
        .with_column(upliftkit::data::Column::numeric(
            "x2",
            ds.numeric("x2").unwrap().iter().map(|v| 10.0 * v).collect(),
        ))
        .unwrap();
    let p1 = LassoProblem::new(&ds, &["x1", "x2"]).unwrap();
    let p2 = LassoProblem::new(&scaled, &["x1", "x2"]).unwrap();
    assert!((p1.lambda_max() - p2.lambda_max()).abs() < 1e-12);
    let lambda = p1.lambda_max() / 10.0;
    let (b1, b2) = (p1.solve(lambda, None), p2.solve(lambda, None));
    for (a, b) in b1.standardized.iter().zip(&b2.standardized) {
        assert!((a - b).abs() < 1e-8);
    }
    let (o1, o2) = (p1.unstandardize(&b1.standardized), p2.unstandardize(&b2.standardized));
    let j = p1.column_names.iter().position(|c| c == "x2").unwrap();
    assert!((o1[j] - 10.0 * o2[j]).abs() < 1e-6);
}

#[test]
fn planted_interaction_is_selected() {
    let ds = planted_uplift(&PlantedConfig {
        n: 2000,
        main: vec![],
        treat_effect: 0.0,
        interaction: vec![2.0],
        seed: 12,
        ..Default::default()
    });
    let preds = ["x1", "x2", "x3", "x4", "x5"];
    let cfg = BestFeaturesConfig {
        nb_lambda: 50,
        ..Default::default()
    };
    let scan = best_features(&ds, &preds, &cfg).unwrap();
    assert!(scan.selected_terms.iter().any(|t| t == "treat:x1"), "{:?}", scan.selected_terms);
    assert!(scan.best_q > scan.q_values[0]);
}

#[test]
fn best_q_is_the_grid_maximum_recomputed() {
    let ds = planted_uplift(&PlantedConfig {
        n: 1500,
        seed: 2,
        ..Default::default()
    });
    let preds = ["x1", "x2", "x3"];
    let cfg = BestFeaturesConfig {
        nb_lambda: 25,
        nb_group: 5,
        validation: true,
        seed: 4,
        ..Default::default()
    };
    let scan = best_features(&ds, &preds, &cfg).unwrap();
    let scoring = ds.subset(&scan.scoring_rows).unwrap();
    let fit = ds.subset(&scan.fit_rows).unwrap();
    // refit the path independently on the fitting rows
    let problem = LassoProblem::new(&fit, &preds).unwrap();
    let path = problem.path(&problem.lambda_grid(25, 1e-4).unwrap());
    let mut recomputed = Vec::new();
    for k in 0..path.lambdas.len() {
        let q = qini_area(&qini_table(&scoring, &inter_predict(&path.fit_at(k), &scoring).unwrap(), 5).unwrap()).q;
        assert_eq!(q, path_point_qini(&path, k, &scoring, 5).unwrap());
        recomputed.push(q);
    }
    let max = recomputed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(scan.best_q, max);
    assert_eq!(scan.q_values, recomputed);
}

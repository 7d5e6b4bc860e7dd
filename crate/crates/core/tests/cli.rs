use std::fs;
use std::path::{Path, PathBuf};

use upliftkit::cli::{run_with, ModelFile};
use upliftkit::synth::campaign;

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["upliftkit"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn campaign_csv(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("campaign.csv");
    campaign(n, 1).save_csv(&path).unwrap();
    path
}

/// Every file under `root` with its bytes, sorted by path.
fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["", "models", "tables", "plots"] {
        let dir = root.join(sub);
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn subcommands_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = campaign_csv(tmp.path(), 3000);
    let data = data.to_str().unwrap();
    let common = ["--outcome", "visit", "--treat", "treat", "--dummies", "zip_code,channel"];
    let commands: Vec<Vec<&str>> = vec![
        vec!["split", "--data", data, "--seed", "3"],
        vec!["fit", "--data", data, "--estimator", "inter", "--predictors", "recency,history,womens"],
        vec!["select", "--data", data, "--predictors", "recency,history,womens,newbie", "--nb-lambda", "15", "--validation", "--seed", "5", "--value"],
        vec!["bin", "--data", data, "--x", "recency,history", "--n-split", "12"],
        vec!["square", "--data", data, "--var1", "recency", "--var2", "history", "--n-split", "3", "--nb-group", "2"],
        vec!["squarecv", "--data", data, "--var1", "recency", "--var2", "history", "--b-grid", "2,3", "--c-grid", "2"],
        vec!["pipeline", "--data", data, "--predictors", "recency,history,womens,newbie", "--nb-lambda", "10", "--quantize", "recency:12:0.1", "--square", "recency,history:3:2"],
    ];
    for cmd in commands {
        let mut snaps = Vec::new();
        let mut transcripts = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{}-{k}", cmd[0]));
            let mut args = vec!["--out", out.to_str().unwrap()];
            args.extend_from_slice(&cmd);
            args.extend_from_slice(&common);
            let (code, text) = run(&args);
            assert_eq!(code, 0, "{cmd:?} failed: {text}");
            snaps.push(snapshot(&out));
            transcripts.push(text.replace(&format!("{}-{k}", cmd[0]), ""));
        }
        assert!(!snaps[0].is_empty());
        assert_eq!(snaps[0], snaps[1], "{cmd:?} not deterministic");
        assert_eq!(transcripts[0], transcripts[1]);
    }
}

#[test]
fn bin_prints_the_no_split_message() {
    let tmp = tempfile::tempdir().unwrap();
    let data = campaign_csv(tmp.path(), 2000);
    let out = tmp.path().join("o");
    let (code, text) = run(&[
        "--out", out.to_str().unwrap(), "bin", "--data", data.to_str().unwrap(), "--outcome", "visit",
        "--treat", "treat", "--x", "mens", "--n-split", "12", "--alpha", "0.000001", "--n-min", "30",
    ]);
    assert_eq!(code, 0);
    assert_eq!(text.trim(), "oups..no significant split");
}

#[test]
fn eval_with_constant_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let data = campaign_csv(tmp.path(), 4000);
    let preds = tmp.path().join("p.csv");
    let mut body = String::from("row,uplift\n");
    for i in 0..4000 {
        body.push_str(&format!("{},0.25\n", i + 1));
    }
    fs::write(&preds, body).unwrap();
    let out = tmp.path().join("o");
    let (code, _) = run(&[
        "--out", out.to_str().unwrap(), "eval", "--data", data.to_str().unwrap(), "--outcome", "visit",
        "--treat", "treat", "--predictions", preds.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["qini"].as_f64().unwrap().abs() < 2.0);
    for f in ["tables/qini_table.csv", "plots/qini_curve.svg", "plots/qini_bars.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let table = fs::read_to_string(out.join("tables/qini_table.csv")).unwrap();
    assert!(table.starts_with("cum_per,n_rows,T_n,T_r,C_n,C_r,"));
}

#[test]
fn fit_predict_and_eval_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let data = campaign_csv(tmp.path(), 3000);
    let data = data.to_str().unwrap();
    let out = tmp.path().join("o");
    let out_s = out.to_str().unwrap();
    let base = ["--outcome", "visit", "--treat", "treat", "--dummies", "channel"];
    let mut fit = vec!["--out", out_s, "fit", "--data", data, "--estimator", "dual", "--predictors", "recency,history,channel_Phone,channel_Web"];
    fit.extend_from_slice(&base);
    assert_eq!(run(&fit).0, 0);
    let model_path = out.join("models/model.json");
    let text = fs::read_to_string(&model_path).unwrap();
    let file: ModelFile = serde_json::from_str(&text).unwrap();
    assert_eq!(file.model.kind(), "dual");
    assert_eq!(file.encodings[0].column, "channel");

    // predict on the raw file: the stored encoding is replayed
    let predict = ["--out", out_s, "predict", "--data", data, "--outcome", "visit", "--treat", "treat", "--model", model_path.to_str().unwrap()];
    assert_eq!(run(&predict).0, 0);
    let pred_file = out.join("tables/predictions.csv");
    let eval_model = ["--out", out_s, "eval", "--data", data, "--outcome", "visit", "--treat", "treat", "--model", model_path.to_str().unwrap()];
    assert_eq!(run(&eval_model).0, 0);
    let a = fs::read_to_string(out.join("report.json")).unwrap();
    let eval_preds = ["--out", out_s, "eval", "--data", data, "--outcome", "visit", "--treat", "treat", "--predictions", pred_file.to_str().unwrap()];
    assert_eq!(run(&eval_preds).0, 0);
    let b = fs::read_to_string(out.join("report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pipeline_matches_individual_stages() {
    use upliftkit::data::{encode_dummies, split_uplift, SplitConfig};
    use upliftkit::estimators::{dual_uplift_fit, UpliftModel};
    use upliftkit::qini::{qini_area, qini_table};
    use upliftkit::select::{best_features, refit_selected, BestFeaturesConfig};

    let tmp = tempfile::tempdir().unwrap();
    let data = campaign_csv(tmp.path(), 3000);
    let out = tmp.path().join("o");
    let preds = "recency,history,womens,channel_Phone,channel_Web";
    let (code, _) = run(&[
        "--out", out.to_str().unwrap(), "pipeline", "--data", data.to_str().unwrap(), "--outcome", "visit",
        "--treat", "treat", "--dummies", "channel", "--predictors", preds, "--nb-lambda", "12", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();

    let ds = encode_dummies(&upliftkit::load_csv(&data, "visit", "treat").unwrap(), "channel").unwrap();
    let split = split_uplift(&ds, &SplitConfig::new(&ds, 0.7, 7)).unwrap();
    let p: Vec<&str> = preds.split(',').collect();
    let dual = UpliftModel::Dual(dual_uplift_fit(&split.train, &p).unwrap());
    let q_dual = qini_area(&qini_table(&split.valid, &dual.predict(&split.valid).unwrap(), 5).unwrap()).q;
    let scan = best_features(&split.train, &p, &BestFeaturesConfig { nb_lambda: 12, nb_group: 5, seed: 7, ..Default::default() }).unwrap();
    let sel = UpliftModel::Interaction(refit_selected(&split.train, &scan.selected_terms).unwrap());
    let q_sel = qini_area(&qini_table(&split.valid, &sel.predict(&split.valid).unwrap(), 5).unwrap()).q;

    let models = report["models"].as_array().unwrap();
    assert_eq!(models[0]["qini"].as_f64().unwrap(), q_dual);
    assert_eq!(models[2]["name"], "No quantization");
    assert_eq!(models[2]["qini"].as_f64().unwrap(), q_sel);
    assert!(out.join("tables/comparison.csv").exists());
    assert!(out.join("plots/qini_comparison.svg").exists());
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let (code, _) = run(&["--out", out.to_str().unwrap(), "bin", "--data", "/nonexistent.csv", "--outcome", "y", "--treat", "t", "--x", "a"]);
    assert_ne!(code, 0);
    let (code, _) = run(&["--out", out.to_str().unwrap(), "fit", "--bogus-flag"]);
    assert_ne!(code, 0);
}

//! Simulated randomized campaigns with a known uplift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Column, UpliftDataset};
use crate::glm::logistic;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Settings for [`planted_uplift`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub n_features: usize,
    pub intercept: f64,
    /// Main-effect slopes, padded with zeros to `n_features`.
    pub main: Vec<f64>,
    pub treat_effect: f64,
    /// Treatment-interaction slopes, padded with zeros.
    pub interaction: Vec<f64>,
    pub treat_prob: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n: 2000,
            n_features: 5,
            intercept: -0.5,
            main: vec![0.0, 0.5],
            treat_effect: 0.1,
            interaction: vec![1.5],
            treat_prob: 0.5,
            seed: 1,
        }
    }
}

/// Standard normal features `x1..xd`, Bernoulli treatment and a logistic
/// outcome whose log-odds are
/// `intercept + main . x + treat (treat_effect + interaction . x)`.
pub fn planted_uplift(cfg: &PlantedConfig) -> UpliftDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.n_features;
    let coef = |v: &[f64], j: usize| v.get(j).copied().unwrap_or(0.0);
    let mut features = vec![Vec::with_capacity(cfg.n); d];
    let mut treat = Vec::with_capacity(cfg.n);
    let mut outcome = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let t = u8::from(rng.gen::<f64>() < cfg.treat_prob);
        let mut eta = cfg.intercept + f64::from(t) * cfg.treat_effect;
        for (j, &xj) in x.iter().enumerate() {
            eta += coef(&cfg.main, j) * xj + f64::from(t) * coef(&cfg.interaction, j) * xj;
        }
        outcome.push(u8::from(rng.gen::<f64>() < logistic(eta)));
        treat.push(t);
        for (j, xj) in x.into_iter().enumerate() {
            features[j].push(xj);
        }
    }
    let columns = features
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::numeric(format!("x{}", j + 1), v))
        .collect();
    UpliftDataset::new("y", outcome, "treat", treat, columns).expect("valid synthetic data")
}

/// An e-mail campaign shaped like the public retail benchmark: months
/// since last purchase (`recency`, 1..12), past spend (`history`), gender
/// flags, a new-customer flag, and `zip_code` / `channel` categories. The
/// outcome is `visit`. Treatment helps recent customers and hurts
/// heavy spenders.
pub fn campaign(n: usize, seed: u64) -> UpliftDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zips = ["Rural", "Surburban", "Urban"];
    let channels = ["Multichannel", "Phone", "Web"];
    let mut recency = Vec::with_capacity(n);
    let mut history = Vec::with_capacity(n);
    let mut mens = Vec::with_capacity(n);
    let mut womens = Vec::with_capacity(n);
    let mut newbie = Vec::with_capacity(n);
    let mut zip = Vec::with_capacity(n);
    let mut channel = Vec::with_capacity(n);
    let mut treat = Vec::with_capacity(n);
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen_range(1..=12) as f64;
        let spend: f64 = 29.99 + (-(1.0 - rng.gen::<f64>()).ln() * 220.0).min(3300.0);
        let spend = (spend * 100.0).round() / 100.0;
        let m = u8::from(rng.gen::<f64>() < 0.55);
        let w = if m == 1 { u8::from(rng.gen::<f64>() < 0.2) } else { 1 };
        let nb = u8::from(rng.gen::<f64>() < 0.5);
        let z = zips[rng.gen_range(0..3)];
        let c = channels[rng.gen_range(0..3)];
        let t = u8::from(rng.gen::<f64>() < 0.5);

        let base = -2.0 - 0.08 * r + 0.0004 * spend - 0.5 * f64::from(nb) + 0.2 * f64::from(w);
        let lift = 0.9 - 0.06 * r - if spend > 1000.0 { 0.6 } else { 0.0 } + 0.3 * f64::from(w);
        let eta = base + f64::from(t) * lift;
        visit.push(u8::from(rng.gen::<f64>() < logistic(eta)));
        treat.push(t);
        recency.push(r);
        history.push(spend);
        mens.push(f64::from(m));
        womens.push(f64::from(w));
        newbie.push(f64::from(nb));
        zip.push(z.to_string());
        channel.push(c.to_string());
    }
    UpliftDataset::new(
        "visit",
        visit,
        "treat",
        treat,
        vec![
            Column::numeric("recency", recency),
            Column::numeric("history", history),
            Column::numeric("mens", mens),
            Column::numeric("womens", womens),
            Column::numeric("newbie", newbie),
            Column::categorical("zip_code", zip),
            Column::categorical("channel", channel),
        ],
    )
    .expect("valid synthetic data")
}

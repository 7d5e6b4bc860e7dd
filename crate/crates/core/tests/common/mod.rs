#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use upliftkit::data::{Column, UpliftDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Rows of a design with a leading intercept.
pub fn loglik(rows: &[Vec<f64>], y: &[u8], beta: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(r, &yi)| {
            let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            let log1pexp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            f64::from(yi) * eta - log1pexp
        })
        .sum()
}

pub fn score(rows: &[Vec<f64>], y: &[u8], beta: &[f64]) -> Vec<f64> {
    let d = beta.len();
    let mut g = vec![0.0; d];
    for (r, &yi) in rows.iter().zip(y) {
        let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
        let resid = f64::from(yi) - sigmoid(eta);
        for j in 0..d {
            g[j] += r[j] * resid;
        }
    }
    g
}

/// Maximum likelihood by plain Newton steps on the dense Hessian with
/// step halving on the log-likelihood.
pub fn newton_mle(rows: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let d = rows[0].len();
    let mut beta = vec![0.0; d];
    let mut ll = loglik(rows, y, &beta);
    for _ in 0..200 {
        let g = score(rows, y, &beta);
        let mut h = vec![vec![0.0; d]; d];
        for r in rows {
            let eta: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = sigmoid(eta);
            let w = p * (1.0 - p);
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += w * r[i] * r[j];
                }
            }
        }
        let step = gauss_solve(h, g);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cl = loglik(rows, y, &cand);
            if cl >= ll - 1e-12 || t < 1e-8 {
                beta = cand;
                ll = cl;
                break;
            }
            t *= 0.5;
        }
        if step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
    }
    beta
}

/// Features `x1..xd` ~ N(0, 1), random treatment, logistic outcome with
/// the given log-odds function of (features, treat).
pub fn random_dataset(
    seed: u64,
    n: usize,
    d: usize,
    logit: impl Fn(&[f64], u8) -> f64,
) -> UpliftDataset {
    let mut r = rng(seed);
    let mut cols = vec![Vec::with_capacity(n); d];
    let mut t = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
        let ti = u8::from(r.gen::<f64>() < 0.5);
        y.push(u8::from(r.gen::<f64>() < sigmoid(logit(&x, ti))));
        t.push(ti);
        for (j, v) in x.into_iter().enumerate() {
            cols[j].push(v);
        }
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::numeric(format!("x{}", j + 1), v))
        .collect();
    UpliftDataset::new("y", y, "treat", t, columns).unwrap()
}

pub fn feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

pub fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c
}

/// Exact mean and variance of the left-child success count when `n` of
/// `total` units, `successes` of them successes, are drawn for the left
/// child.
pub fn enumerate_moments(total: u64, successes: u64, n: u64) -> (f64, f64) {
    let all = binom(total, n);
    let lo = n.saturating_sub(total - successes);
    let hi = successes.min(n);
    let (mut s1, mut s2) = (0u128, 0u128);
    for z in lo..=hi {
        let w = binom(successes, z) * binom(total - successes, n - z);
        s1 += u128::from(z) * w;
        s2 += u128::from(z * z) * w;
    }
    let mean = s1 as f64 / all as f64;
    // all^2 var = all s2 - s1^2, exact in integers
    let var = (all * s2 - s1 * s1) as f64 / (all as f64 * all as f64);
    (mean, var)
}


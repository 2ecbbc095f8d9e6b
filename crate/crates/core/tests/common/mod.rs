#![allow(dead_code)]

use charges_core::{Rational, Scalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shortest-path closure of random symmetric edge weights in `[lo, hi]`.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = rng.gen_range(lo..=hi);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    floyd(&mut d);
    d
}

/// Same construction with integer weights in `1..=hi`, as exact rationals.
pub fn random_int_metric(rng: &mut ChaCha8Rng, n: usize, hi: i64) -> Vec<Vec<Rational>> {
    let mut d = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = rng.gen_range(1..=hi);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d.into_iter()
        .map(|r| r.into_iter().map(Rational::from_int).collect())
        .collect()
}

fn floyd(d: &mut [Vec<f64>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
}

/// Probability vector of length `n` with `support` random nonzero entries.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, support: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..support.min(n) {
        let j = rng.gen_range(k..n);
        idx.swap(k, j);
        w[idx[k]] = rng.gen_range(0.05..1.0);
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Rational probability vector with small integer numerators.
pub fn random_rational_weights(rng: &mut ChaCha8Rng, n: usize, support: usize) -> Vec<Rational> {
    let mut num = vec![0i64; n];
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..support.min(n) {
        let j = rng.gen_range(k..n);
        idx.swap(k, j);
        num[idx[k]] = rng.gen_range(1..=9);
    }
    let total: i64 = num.iter().sum();
    num.into_iter().map(|a| Rational::from_ratio(a, total)).collect()
}

/// Random points in the unit square.
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
        .collect()
}

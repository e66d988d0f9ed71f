//! Brute-force reference implementations, written independently of the
//! library's single-pass code. Shared with the acceptance suite.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Tri-state label in the oracle's own vocabulary: Some(true)=relevant.
pub type Label = Option<bool>;

fn precision_at(labels: &[Label], k: usize) -> f64 {
    labels[..k].iter().filter(|l| **l == Some(true)).count() as f64 / k as f64
}

pub fn ap(labels: &[Label], r: usize) -> Option<f64> {
    if r == 0 {
        return None;
    }
    let total: f64 = (1..=labels.len())
        .filter(|k| labels[k - 1] == Some(true))
        .map(|k| precision_at(labels, k))
        .sum();
    Some(total / r as f64)
}

pub fn rr(labels: &[Label], r: usize) -> Option<f64> {
    if r == 0 {
        return None;
    }
    for (i, l) in labels.iter().enumerate() {
        if *l == Some(true) {
            return Some(1.0 / (i as f64 + 1.0));
        }
    }
    Some(0.0)
}

/// (base, residual) straight from the series definition.
pub fn rbp(labels: &[Label], p: f64, depth: usize) -> (f64, f64) {
    let d = depth.min(labels.len());
    let mut base = 0.0;
    let mut unjudged = 0.0;
    for i in 1..=d {
        let w = (1.0 - p) * p.powf((i - 1) as f64);
        match labels[i - 1] {
            Some(true) => base += w,
            None => unjudged += w,
            Some(false) => {}
        }
    }
    (base, unjudged + p.powf(d as f64))
}

/// b-pref by explicitly counting judged nonrelevant items ranked above each relevant one.
pub fn bpref(labels: &[Label], r: usize, n: usize) -> Option<f64> {
    if r == 0 {
        return None;
    }
    let m = r.min(n);
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        if *l != Some(true) {
            continue;
        }
        let above = labels[..i].iter().filter(|x| **x == Some(false)).count();
        total += if m == 0 { 1.0 } else { 1.0 - (above.min(m) as f64) / m as f64 };
    }
    Some(total / r as f64)
}

fn choose(n: u64, k: u64) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// Exact two-sided binomial sign-test p-value at p = 1/2 via integer arithmetic.
pub fn binomial_two_sided_exact(a: u64, b: u64) -> f64 {
    let n = a + b;
    if n == 0 {
        return 1.0;
    }
    let lo = a.min(b);
    let mut tail = BigUint::zero();
    for k in 0..=lo {
        tail += choose(n, k);
    }
    let num = tail * 2u32;
    let den = BigUint::one() << n as usize;
    if num >= den {
        return 1.0;
    }
    // Scale to keep 60 significant bits before converting.
    let scaled = (num << 64usize) / den;
    scaled.to_f64().unwrap() / 2f64.powi(64)
}

/// Exact one-sided P(X >= a) for X ~ Bin(a+b, 1/2).
pub fn binomial_upper_exact(a: u64, b: u64) -> f64 {
    let n = a + b;
    let mut tail = BigUint::zero();
    for k in a..=n {
        tail += choose(n, k);
    }
    let den = BigUint::one() << n as usize;
    ((tail << 64usize) / den).to_f64().unwrap() / 2f64.powi(64)
}

/// Cohen's kappa from an explicit contingency table.
pub fn kappa_from_table(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let k = table.len();
    let po: f64 = (0..k).map(|i| table[i][i]).sum::<f64>() / n;
    let pe: f64 = (0..k)
        .map(|i| {
            let row: f64 = table[i].iter().sum();
            let col: f64 = table.iter().map(|r| r[i]).sum();
            row * col
        })
        .sum::<f64>()
        / (n * n);
    (po - pe) / (1.0 - pe)
}

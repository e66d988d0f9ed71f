//! Significance tests over paired preferences and inter-annotator agreement.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Alternative hypothesis. `Greater` means "A is preferred over B".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Exact binomial probabilities P(X = k) for X ~ Bin(n, 1/2).
fn binomial_half_pmf(n: u64) -> Vec<f64> {
    if n <= 1000 {
        let mut pmf = Vec::with_capacity(n as usize + 1);
        let mut p = 0.5f64.powi(n as i32);
        for k in 0..=n {
            pmf.push(p);
            p = p * (n - k) as f64 / (k + 1) as f64;
        }
        pmf
    } else {
        let ln_fact: Vec<f64> = std::iter::once(0.0)
            .chain((1..=n).scan(0.0, |acc, i| {
                *acc += (i as f64).ln();
                Some(*acc)
            }))
            .collect();
        (0..=n)
            .map(|k| {
                (ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
                    - n as f64 * std::f64::consts::LN_2)
                    .exp()
            })
            .collect()
    }
}

/// Exact sign test: `wins_a` successes out of `wins_a + wins_b` trials at
/// p = 0.5. Ties are discarded.
pub fn sign_test_binomial(wins_a: u64, wins_b: u64, _ties: u64, sided: Sidedness) -> f64 {
    let n = wins_a + wins_b;
    if n == 0 {
        return 1.0;
    }
    let pmf = binomial_half_pmf(n);
    let upper = |k: u64| pmf[k as usize..].iter().sum::<f64>();
    let lower = |k: u64| pmf[..=k as usize].iter().sum::<f64>();
    let p = match sided {
        Sidedness::Greater => upper(wins_a),
        Sidedness::Less => lower(wins_a),
        Sidedness::TwoSided => 2.0 * lower(wins_a.min(wins_b)),
    };
    p.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
    /// Every difference was zero.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    pub nonzero: usize,
    pub zeros: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Largest number of nonzero differences evaluated by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Average ranks of `values` (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon signed-rank test with Pratt's zero handling: zero differences
/// take part in ranking |d| and are then dropped from the statistic.
/// Exact enumeration for up to [`WILCOXON_EXACT_MAX`] nonzero differences,
/// otherwise the normal approximation with continuity correction and
/// tie-corrected variance.
pub fn sign_test_wilcoxon(differences: &[f64], sided: Sidedness) -> WilcoxonResult {
    let abs: Vec<f64> = differences.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let mut nonzero: Vec<(f64, bool)> = Vec::new();
    for (d, r) in differences.iter().zip(&ranks) {
        if *d != 0.0 {
            nonzero.push((*r, *d > 0.0));
        }
    }
    let zeros = differences.len() - nonzero.len();
    let w_plus: f64 = nonzero.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let w_minus: f64 = nonzero.iter().filter(|(_, pos)| !*pos).map(|(r, _)| r).sum();
    let mut result = WilcoxonResult {
        nonzero: nonzero.len(),
        zeros,
        w_plus,
        w_minus,
        p_value: 1.0,
        method: WilcoxonMethod::Degenerate,
    };
    if nonzero.is_empty() {
        return result;
    }

    if nonzero.len() <= WILCOXON_EXACT_MAX {
        // Average ranks are multiples of 1/2; work in doubled integer units.
        let scaled: Vec<usize> = nonzero.iter().map(|(r, _)| (r * 2.0).round() as usize).collect();
        let total: usize = scaled.iter().sum();
        let mut counts = vec![0f64; total + 1];
        counts[0] = 1.0;
        for s in &scaled {
            for x in (*s..=total).rev() {
                counts[x] += counts[x - s];
            }
        }
        let all = 2f64.powi(nonzero.len() as i32);
        let w = (w_plus * 2.0).round() as usize;
        let lower = counts[..=w].iter().sum::<f64>() / all;
        let upper = counts[w..].iter().sum::<f64>() / all;
        result.p_value = match sided {
            Sidedness::Greater => upper,
            Sidedness::Less => lower,
            Sidedness::TwoSided => 2.0 * lower.min(upper),
        }
        .min(1.0);
        result.method = WilcoxonMethod::Exact;
    } else {
        let mean: f64 = nonzero.iter().map(|(r, _)| r).sum::<f64>() / 2.0;
        let var: f64 = nonzero.iter().map(|(r, _)| r * r).sum::<f64>() / 4.0;
        let sd = var.sqrt();
        let upper_tail = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
        result.p_value = match sided {
            Sidedness::Greater => upper_tail((w_plus - mean - 0.5) / sd),
            Sidedness::Less => upper_tail((mean - w_plus - 0.5) / sd),
            Sidedness::TwoSided => {
                let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
                2.0 * upper_tail(z)
            }
        }
        .min(1.0);
        result.method = WilcoxonMethod::Normal;
    }
    result
}

/// Wilcoxon over preference counts: +1 per A win, -1 per B win, 0 per tie.
pub fn wilcoxon_from_counts(wins_a: u64, wins_b: u64, ties: u64, sided: Sidedness) -> WilcoxonResult {
    let diffs: Vec<f64> = std::iter::repeat_n(1.0, wins_a as usize)
        .chain(std::iter::repeat_n(-1.0, wins_b as usize))
        .chain(std::iter::repeat_n(0.0, ties as usize))
        .collect();
    sign_test_wilcoxon(&diffs, sided)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    /// `None` when chance agreement is 1 (both judges used one shared category).
    pub kappa: Option<f64>,
    pub observed: f64,
    pub expected: f64,
}

/// Cohen's κ between two judges labelling the same items in the same order.
pub fn cohens_kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("no items to compare".into()));
    }
    let n = a.len() as f64;
    let mut margin_a: BTreeMap<T, f64> = BTreeMap::new();
    let mut margin_b: BTreeMap<T, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (x, y) in a.iter().zip(b) {
        *margin_a.entry(x.clone()).or_default() += 1.0;
        *margin_b.entry(y.clone()).or_default() += 1.0;
        if x == y {
            agree += 1.0;
        }
    }
    let observed = agree / n;
    let expected: f64 = margin_a
        .iter()
        .map(|(c, na)| na * margin_b.get(c).copied().unwrap_or(0.0))
        .sum::<f64>()
        / (n * n);
    let kappa = if (1.0 - expected).abs() < 1e-15 {
        None
    } else {
        Some((observed - expected) / (1.0 - expected))
    };
    Ok(Kappa { kappa, observed, expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(sign_test_binomial(5, 5, 0, Sidedness::TwoSided), 1.0);
        assert_eq!(sign_test_binomial(0, 0, 10, Sidedness::TwoSided), 1.0);
        // n=3, all A: P(X>=3)=1/8.
        assert_eq!(sign_test_binomial(3, 0, 0, Sidedness::Greater), 0.125);
        assert_eq!(sign_test_binomial(3, 0, 0, Sidedness::TwoSided), 0.25);
        assert!(sign_test_binomial(39, 18, 43, Sidedness::TwoSided) < 0.05);
        // Log-space branch agrees with the recurrence at the boundary.
        let a = sign_test_binomial(520, 480, 0, Sidedness::TwoSided);
        let b = sign_test_binomial(521, 480, 0, Sidedness::TwoSided);
        assert!(a > b && b > 0.0);
    }

    #[test]
    fn wilcoxon_examples() {
        let all_ties = wilcoxon_from_counts(0, 0, 7, Sidedness::TwoSided);
        assert_eq!((all_ties.p_value, all_ties.method), (1.0, WilcoxonMethod::Degenerate));
        let one = wilcoxon_from_counts(1, 0, 0, Sidedness::TwoSided);
        assert_eq!((one.p_value, one.method), (1.0, WilcoxonMethod::Exact));
        // Pratt ranks: 3 zeros take ranks 1..3, the 4 nonzero share rank 5.5.
        let r = wilcoxon_from_counts(3, 1, 3, Sidedness::TwoSided);
        assert_eq!((r.w_plus, r.w_minus), (16.5, 5.5));
        assert_eq!(r.p_value, 2.0 * 5.0 / 16.0);
        let big = wilcoxon_from_counts(30, 17, 53, Sidedness::TwoSided);
        assert_eq!(big.method, WilcoxonMethod::Normal);
    }

    #[test]
    fn kappa_examples() {
        let a = [0, 1, 2, 3, 0];
        assert_eq!(cohens_kappa(&a, &a).unwrap().kappa, Some(1.0));
        let k = cohens_kappa(&[0, 1, 2, 3], &[1, 2, 3, 0]).unwrap();
        assert_eq!((k.observed, k.expected), (0.0, 0.25));
        assert!((k.kappa.unwrap() + 1.0 / 3.0).abs() < 1e-15);
        let k = cohens_kappa(&[2, 2, 2], &[2, 2, 2]).unwrap();
        assert_eq!((k.kappa, k.observed), (None, 1.0));
        assert!(cohens_kappa(&[1], &[1, 2]).is_err());
    }
}

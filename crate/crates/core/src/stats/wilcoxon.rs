use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_finite, normal_cdf, normal_sf, Method, StatsError, TestResult};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// The first sample tends to be smaller.
    Less,
    /// The first sample tends to be larger.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMode {
    /// Exact when the pooled size is within the cap, normal otherwise.
    Auto { cap: usize },
    Exact { cap: usize },
    Normal,
}

impl Default for WilcoxonMode {
    fn default() -> Self {
        WilcoxonMode::Auto { cap: 20 }
    }
}

/// Midranks (ties share the mean of their ranks), 1-based, in input order.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Counts of subsets of size `k` by sum of doubled ranks: `counts[s]` is the
/// number of `k`-subsets of `doubled` summing to `s`.
pub fn exact_rank_sum_distribution(doubled: &[u64], k: usize) -> Vec<u64> {
    let total: u64 = doubled.iter().sum();
    let width = total as usize + 1;
    // table[j][s]: subsets of size j with sum s among the items seen so far.
    let mut table = vec![vec![0u64; width]; k + 1];
    table[0][0] = 1;
    for (seen, &r) in doubled.iter().enumerate() {
        let r = r as usize;
        let top = k.min(seen + 1);
        for j in (1..=top).rev() {
            let (lower, upper) = table.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..width).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    table.swap_remove(k)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Wilcoxon rank-sum test. The statistic is the rank sum of `a`.
pub fn wilcoxon_rank_sum(
    a: &[f64],
    b: &[f64],
    mode: WilcoxonMode,
    alternative: Alternative,
) -> Result<TestResult, StatsError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::TooFewObservations {
            needed: 1,
            got: n1.min(n2),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let n = n1 + n2;
    let exact = match mode {
        WilcoxonMode::Exact { cap } if n > cap => {
            return Err(StatsError::ExactTooLarge { n, cap });
        }
        WilcoxonMode::Exact { .. } => true,
        WilcoxonMode::Auto { cap } => n <= cap,
        WilcoxonMode::Normal => false,
    };

    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let statistic: f64 = ranks[..n1].iter().sum();

    let p = if exact {
        exact_p(&ranks, n1, statistic, alternative)
    } else {
        normal_p(&pooled, n1, n2, statistic, alternative)
    };
    Ok(TestResult {
        method: if exact {
            Method::WilcoxonRankSumExact
        } else {
            Method::WilcoxonRankSumNormal
        },
        statistic,
        p_value: p.clamp(0.0, 1.0),
        two_sided: alternative == Alternative::TwoSided,
        n1,
        n2,
    })
}

fn exact_p(ranks: &[f64], n1: usize, statistic: f64, alternative: Alternative) -> f64 {
    let doubled: Vec<u64> = ranks.iter().map(|r| math::round(2.0 * r) as u64).collect();
    let observed = math::round(2.0 * statistic) as usize;
    let counts = exact_rank_sum_distribution(&doubled, n1);
    let total = binomial(ranks.len(), n1);
    let lower: u64 = counts[..=observed].iter().sum();
    let upper: u64 = counts[observed..].iter().sum();
    let total = total as f64;
    match alternative {
        Alternative::Less => lower as f64 / total,
        Alternative::Greater => upper as f64 / total,
        Alternative::TwoSided => (2.0 * lower.min(upper) as f64 / total).min(1.0),
    }
}

fn normal_p(pooled: &[f64], n1: usize, n2: usize, statistic: f64, alternative: Alternative) -> f64 {
    let n = (n1 + n2) as f64;
    let mean = n1 as f64 * (n + 1.0) / 2.0;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n1 as f64 * n2 as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = math::sqrt(var);
    let diff = statistic - mean;
    match alternative {
        Alternative::TwoSided => (2.0 * normal_sf((diff.abs() - 0.5) / sd)).min(1.0),
        Alternative::Greater => normal_sf((diff - 0.5) / sd),
        Alternative::Less => normal_cdf((diff + 0.5) / sd),
    }
}

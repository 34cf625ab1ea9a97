use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

const MIN_N: usize = 4;
const MILD: f64 = 1.5;
const EXTREME: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierTag {
    Inlier,
    Mild,
    Extreme,
}

/// Five-number box-plot summary with outliers split out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    /// Most extreme inliers.
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub mild: Vec<f64>,
    pub extreme: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierLabeling {
    /// One tag per input value, in input order.
    pub tags: Vec<OutlierTag>,
    pub stats: BoxStats,
}

impl OutlierLabeling {
    pub fn inliers<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        values
            .iter()
            .zip(&self.tags)
            .filter(|(_, t)| **t == OutlierTag::Inlier)
            .map(|(v, _)| *v)
    }
}

fn median_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        (x[n / 2 - 1] + x[n / 2]) / 2.0
    }
}

/// `(lower hinge, median, upper hinge)`. For odd `n` the median belongs to
/// both halves.
pub fn tukey_hinges(sample: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::TooFewObservations { needed: 1, got: 0 });
    }
    check_finite(sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let (lower, upper) = if n % 2 == 1 {
        (&x[..=n / 2], &x[n / 2..])
    } else {
        (&x[..n / 2], &x[n / 2..])
    };
    Ok((median_sorted(lower), median_sorted(&x), median_sorted(upper)))
}

/// Labels each value by its distance beyond the nearer hinge: mild in
/// `(1.5, 3] x IQR`, extreme beyond `3 x IQR`. A zero IQR flags nothing.
pub fn iqr_outliers(sample: &[f64]) -> Result<OutlierLabeling, StatsError> {
    if sample.len() < MIN_N {
        return Err(StatsError::TooFewObservations {
            needed: MIN_N,
            got: sample.len(),
        });
    }
    let (q1, median, q3) = tukey_hinges(sample)?;
    let iqr = q3 - q1;
    let tags: Vec<OutlierTag> = sample
        .iter()
        .map(|&v| {
            if iqr <= 0.0 {
                return OutlierTag::Inlier;
            }
            let dist = if v < q1 {
                q1 - v
            } else if v > q3 {
                v - q3
            } else {
                0.0
            };
            if dist > EXTREME * iqr {
                OutlierTag::Extreme
            } else if dist > MILD * iqr {
                OutlierTag::Mild
            } else {
                OutlierTag::Inlier
            }
        })
        .collect();

    let pick = |tag: OutlierTag| -> Vec<f64> {
        let mut v: Vec<f64> = sample
            .iter()
            .zip(&tags)
            .filter(|(_, t)| **t == tag)
            .map(|(v, _)| *v)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let inliers = pick(OutlierTag::Inlier);
    let stats = BoxStats {
        q1,
        median,
        q3,
        iqr,
        lower_whisker: inliers.first().copied().unwrap_or(q1),
        upper_whisker: inliers.last().copied().unwrap_or(q3),
        mild: pick(OutlierTag::Mild),
        extreme: pick(OutlierTag::Extreme),
    };
    Ok(OutlierLabeling { tags, stats })
}

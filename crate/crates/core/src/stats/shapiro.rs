use alloc::vec::Vec;

use super::{check_finite, normal_quantile, normal_sf, Method, StatsError, TestResult};
use crate::math;

const MIN_N: usize = 3;
const MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

/// Royston's approximation to the Shapiro-Wilk coefficients for the upper
/// half of the order statistics, largest first.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return alloc::vec![core::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let m: Vec<f64> = (1..=half)
        .map(|i| -normal_quantile((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = math::sqrt(summ2);
    let rsn = 1.0 / math::sqrt(an);
    let a1 = poly(&C1, rsn) + m[0] / ssumm2;

    let mut a = alloc::vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = poly(&C2, rsn) + m[1] / ssumm2;
        a[1] = a2;
        let fac = math::sqrt(
            (summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2),
        );
        (2, fac)
    } else {
        let fac = math::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        (1, fac)
    };
    for i in first..half {
        a[i] = m[i] / fac;
    }
    a
}

/// Shapiro-Wilk W test with Royston's (1995) p-value approximation.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult, StatsError> {
    let n = sample.len();
    if n < MIN_N {
        return Err(StatsError::TooFewObservations { needed: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(StatsError::TooManyObservations { limit: MAX_N, got: n });
    }
    check_finite(sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }

    let mean = x.iter().sum::<f64>() / n as f64;
    let ssq: f64 = x.iter().map(|v| (v - mean) / range).map(|v| v * v).sum();
    let a = coefficients(n);
    let num: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]) / range)
        .sum();
    let w = (num * num / ssq).min(1.0);

    let p = if n == 3 {
        let stqr = core::f64::consts::FRAC_PI_3;
        let w3 = w.max(0.75);
        (6.0 / core::f64::consts::PI * (math::asin(math::sqrt(w3)) - stqr)).clamp(0.0, 1.0)
    } else {
        let an = n as f64;
        let y = math::ln(1.0 - w);
        let (z, m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(result(w, 0.0, n));
            }
            (-math::ln(gamma - y), poly(&C3, an), math::exp(poly(&C4, an)))
        } else {
            let xx = math::ln(an);
            (y, poly(&C5, xx), math::exp(poly(&C6, xx)))
        };
        normal_sf((z - m) / s).clamp(0.0, 1.0)
    };
    Ok(result(w, p, n))
}

fn result(w: f64, p: f64, n: usize) -> TestResult {
    TestResult {
        method: Method::ShapiroWilk,
        statistic: w,
        p_value: p,
        two_sided: false,
        n1: n,
        n2: 0,
    }
}

use statrs::distribution::{ContinuousCDF, Normal};

use super::ranks::{doubled_midranks, tie_groups};
use super::{Method, StatsError, TestResult};

/// Largest combined sample size tested by full enumeration.
pub const EXACT_LIMIT: usize = 12;

/// `first` values of +1 followed by `second` values of -1.
pub fn encode_split(first: usize, second: usize) -> Vec<f64> {
    let mut v = vec![1.0; first];
    v.extend(std::iter::repeat(-1.0).take(second));
    v
}

fn pooled(x: &[f64], y: &[f64]) -> Result<Vec<f64>, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(x.iter().chain(y).copied().collect())
}

/// Two-sided rank-sum test: exact enumeration for small samples, the
/// tie-corrected normal approximation otherwise.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() + y.len() <= EXACT_LIMIT {
        wilcoxon_exact(x, y)
    } else {
        wilcoxon_normal(x, y)
    }
}

/// Normal approximation with midranks, tie-corrected variance and a 0.5
/// continuity correction.
pub fn wilcoxon_normal(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    let all = pooled(x, y)?;
    let (nx, ny) = (x.len() as i64, y.len() as i64);
    let n = nx + ny;
    let ranks2 = doubled_midranks(&all);
    let w2: i64 = ranks2[..x.len()].iter().sum();
    // Distance from the null mean, doubled so both orderings give the same integer.
    let dev2 = (w2 - nx * (n + 1)).abs();

    let ties: f64 = tie_groups(&all).iter().map(|&t| (t * t * t - t) as f64).sum();
    let (nxf, nyf, nf) = (nx as f64, ny as f64, n as f64);
    let variance = nxf * nyf / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    let p = if variance <= 0.0 || !variance.is_finite() {
        1.0
    } else {
        let z = ((dev2 as f64 / 2.0) - 0.5).max(0.0) / variance.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).clamp(0.0, 1.0)
    };
    Ok(TestResult { statistic: w2 as f64 / 2.0, p_value: p, method: Method::NormalApproxTieCorrected })
}

/// Exact permutation distribution of the rank sum over every assignment
/// of the pooled midranks to the first sample.
pub fn wilcoxon_exact(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    let all = pooled(x, y)?;
    let n = all.len();
    if n > 24 {
        return Err(StatsError::TooLargeForExact(n));
    }
    let nx = x.len();
    let ranks2 = doubled_midranks(&all);
    let mean2 = nx as i64 * (n as i64 + 1);
    let w2: i64 = ranks2[..nx].iter().sum();
    let observed = (w2 - mean2).abs();

    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != nx {
            continue;
        }
        let s: i64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks2[i]).sum();
        total += 1;
        if (s - mean2).abs() >= observed {
            extreme += 1;
        }
    }
    Ok(TestResult {
        statistic: w2 as f64 / 2.0,
        p_value: extreme as f64 / total as f64,
        method: Method::ExactPermutation,
    })
}

//! Summary statistics for campaign outputs.

use rand::Rng;

use crate::error::{Result, SimError};

/// Empirical CDF as `(value, F(value))` steps, one per distinct value, sorted.
/// `F` is right-continuous: the fraction of samples `<= value`.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(SimError::EmptyInput("ecdf"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = f,
            _ => out.push((*x, f)),
        }
    }
    Ok(out)
}

/// Smallest `x` with `F(x) >= q`.
pub fn ecdf_quantile(table: &[(f64, f64)], q: f64) -> f64 {
    table
        .iter()
        .find(|(_, f)| *f >= q - 1e-12)
        .or(table.last())
        .map(|p| p.0)
        .unwrap_or(f64::NAN)
}

/// Median as read off the ECDF (the lower median for even counts).
pub fn median(values: &[f64]) -> Result<f64> {
    Ok(ecdf_quantile(&ecdf(values)?, 0.5))
}

/// `(mean, standard error of the mean)`.
pub fn mean_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(SimError::EmptyInput("mean"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Percentile bootstrap interval of `statistic` at the given confidence level.
pub fn bootstrap_ci<R, F>(values: &[f64], resamples: usize, level: f64, rng: &mut R, statistic: F) -> Result<(f64, f64)>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    if values.is_empty() {
        return Err(SimError::EmptyInput("bootstrap"));
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(SimError::InvalidConfig("bootstrap needs resamples >= 1 and level in (0, 1)".into()));
    }
    let mut buf = vec![0.0; values.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.gen_range(0..values.len())];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| stats[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok((pick(alpha), pick(1.0 - alpha)))
}

/// Bootstrap interval of the median.
pub fn bootstrap_median_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, level: f64, rng: &mut R) -> Result<(f64, f64)> {
    bootstrap_ci(values, resamples, level, rng, |s| median(s).unwrap_or(f64::NAN))
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(SimError::DimensionMismatch(format!("spearman on {} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(SimError::EmptyInput("spearman needs two points"));
    }
    Ok(pearson(&ranks(x), &ranks(y)))
}

/// Number of sign changes in the discrete differences, zero steps skipped.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(|d| d > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Rises then falls (or is monotone): at most one sign change, and if there
/// is one it goes from increasing to decreasing.
pub fn is_unimodal(values: &[f64]) -> bool {
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    match sign_changes(values) {
        0 => true,
        1 => d.first().is_some_and(|x| *x > 0.0),
        _ => false,
    }
}

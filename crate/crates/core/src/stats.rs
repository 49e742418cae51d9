//! Goodness-of-fit statistics for the Monte Carlo checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `|estimate - target| / se`. A difference at rounding level counts as
/// an exact match: degenerate samples have a standard error that is
/// itself rounding noise.
pub fn z_score(estimate: f64, se: f64, target: f64) -> f64 {
    let d = (estimate - target).abs();
    if d <= 1e-12 * target.abs() {
        0.0
    } else if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn chi_sf(statistic: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Ok(1.0);
    }
    let d = ChiSquared::new(df as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(d.sf(statistic))
}

/// Pearson goodness of fit of `counts` to `probs`. Cells with expected
/// count below `min_expected` are pooled into one cell.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if counts.len() != probs.len() {
        return Err(invalid("counts and probabilities differ in length"));
    }
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n;
        if e < min_expected {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            cells.push((c as f64, e));
        }
    }
    if pooled_exp > 0.0 || pooled_obs > 0.0 {
        cells.push((pooled_obs, pooled_exp));
    }
    let mut statistic = 0.0;
    for &(o, e) in &cells {
        if e == 0.0 {
            if o > 0.0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        statistic += (o - e).powi(2) / e;
    }
    let df = cells.len().saturating_sub(1);
    Ok(ChiSquareTest {
        statistic,
        df,
        p_value: if statistic.is_finite() { chi_sf(statistic, df)? } else { 0.0 },
    })
}

/// Pearson test of homogeneity between two count vectors over the same
/// cells. Cells where the pooled count is below `min_pooled` are merged.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_pooled: u64) -> Result<ChiSquareTest> {
    if a.len() != b.len() {
        return Err(invalid("count vectors differ in length"));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut ra, mut rb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y < min_pooled {
            ra += x as f64;
            rb += y as f64;
        } else {
            cells.push((x as f64, y as f64));
        }
    }
    if ra + rb > 0.0 {
        cells.push((ra, rb));
    }
    let na: f64 = cells.iter().map(|c| c.0).sum();
    let nb: f64 = cells.iter().map(|c| c.1).sum();
    let n = na + nb;
    let mut statistic = 0.0;
    for &(x, y) in &cells {
        let col = x + y;
        let ea = na * col / n;
        let eb = nb * col / n;
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = cells.len().saturating_sub(1);
    Ok(ChiSquareTest {
        statistic,
        df,
        p_value: chi_sf(statistic, df)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsTest {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsTest {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsTest {
        statistic: d,
        p_value: ks_p(d, na * nb / (na + nb)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_known_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.010
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 5e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let t = chi_square_gof(&[50, 30, 20], &[0.5, 0.3, 0.2], 5.0).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.df, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let t = chi_square_gof(&[90, 8, 1, 1], &[0.9, 0.08, 0.01, 0.01], 5.0).unwrap();
        assert_eq!(t.df, 2);
    }

    #[test]
    fn two_sample_identical() {
        let t = chi_square_two_sample(&[10, 20, 30], &[10, 20, 30], 5).unwrap();
        assert_eq!(t.statistic, 0.0);
        let k = ks_two_sample(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]);
        assert_eq!(k.statistic, 0.0);
    }

    #[test]
    fn ks_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let t = ks_one_sample(&xs, |x| x);
        assert!(t.statistic <= 0.0005 + 1e-12);
        assert!(t.p_value > 0.99);
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(z_score(1.0, 0.0, 1.0), 0.0);
    }
}

//! Exact laws of Gibbs partitions: EPPF, sampling formulas, record-index
//! laws and their conditionals, block counts, moments and Mellin
//! transforms of the age-ordered frequencies, and the Dirichlet-mixture
//! density of the first `k` frequencies given `W_k` and `i_k`.
//!
//! Conditional laws return zero for incompatible `(n, i)` pairs instead of
//! an error.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::combin::{
    compositions, enumerate_compatible_compositions, joint_factor, ln_binomial_product, ln_factorial,
    ln_gamma, ln_multinomial, log_falling, log_rising, psi, sbp_factor, FrequencyComposition,
    RecordIndexVector,
};
use crate::error::{invalid, out_of_range, GibbsError, Result};
use crate::logprob::LogProb;
use crate::model::{pk_half_structural_mellin, Family, GibbsModel};

pub use crate::model::structural_density_pk_half;

/// `prod_j (1 - alpha)_(n_j - 1)`.
fn block_weight(alpha: f64, comp: &FrequencyComposition) -> Result<LogProb> {
    comp.parts()
        .iter()
        .map(|&nj| log_rising(1.0 - alpha, (nj - 1) as f64))
        .product()
}

/// Probability of one partition realization whose age-ordered block sizes
/// are `comp`.
pub fn eppf(model: &GibbsModel, comp: &FrequencyComposition) -> Result<LogProb> {
    Ok(model.v(comp.total(), comp.len())? * block_weight(model.alpha(), comp)?)
}

/// Law of the age-ordered frequency vector.
pub fn ordered_pmf(model: &GibbsModel, comp: &FrequencyComposition) -> Result<LogProb> {
    Ok(LogProb::from_ln(ln_multinomial(comp)) * sbp_factor(comp) * eppf(model, comp)?)
}

/// Law of the unordered multiset of block sizes; `comp` may be listed in
/// any order.
pub fn unordered_pmf(model: &GibbsModel, comp: &FrequencyComposition) -> Result<LogProb> {
    let ln_b: f64 = comp.multiplicities().iter().map(|&b| ln_factorial(b)).sum();
    Ok(LogProb::from_ln(ln_multinomial(comp) - ln_b) * eppf(model, comp)?)
}

/// Joint law of frequencies and record indices.
pub fn joint_pmf(model: &GibbsModel, comp: &FrequencyComposition, rec: &RecordIndexVector) -> Result<LogProb> {
    if !rec.is_compatible(comp) {
        return Ok(LogProb::ZERO);
    }
    Ok(LogProb::from_ln(ln_binomial_product(comp, rec)) * eppf(model, comp)?)
}

/// Law of the record indices given the age-ordered frequencies. Does not
/// depend on the model.
pub fn cond_records_given_freq(comp: &FrequencyComposition, rec: &RecordIndexVector) -> LogProb {
    if !rec.is_compatible(comp) {
        return LogProb::ZERO;
    }
    joint_factor(comp, rec) / sbp_factor(comp)
}

/// Law of the record indices of the partition of `[n]`.
pub fn record_marginal(model: &GibbsModel, n: usize, rec: &RecordIndexVector) -> Result<LogProb> {
    if rec.last() > n {
        return Err(out_of_range(format!("last record {} exceeds n = {n}", rec.last())));
    }
    Ok(model.v(n, rec.len())? / psi(model.alpha(), n, rec)?)
}

fn conditioning_weight(model: &GibbsModel, n: usize, k: usize) -> Result<LogProb> {
    if k == 0 || k > n {
        return Err(out_of_range(format!("record state needs 1 <= k <= n, got ({n}, {k})")));
    }
    let v = model.v(n, k)?;
    if v.is_zero() {
        return Err(out_of_range(format!(
            "conditioning on the {k}-th record at {n} is conditioning on a null event"
        )));
    }
    Ok(v)
}

/// `P(i_{j+1} = next | i_j = current)`.
pub fn record_transition(model: &GibbsModel, j: usize, current: usize, next: usize) -> Result<LogProb> {
    if !(next > current && current >= j && j >= 1) {
        return Err(out_of_range(format!(
            "transition needs next > current >= j >= 1, got j={j}, current={current}, next={next}"
        )));
    }
    let base = conditioning_weight(model, current, j)?;
    let a = current as f64 - model.alpha() * j as f64;
    Ok(log_rising(a, (next - current - 1) as f64)? * model.v(next, j + 1)? / base)
}

/// `P(i_{j+1} > t | i_j = current)` for `t >= current`.
pub fn record_survival(model: &GibbsModel, j: usize, current: usize, t: usize) -> Result<LogProb> {
    if !(t >= current && current >= j && j >= 1) {
        return Err(out_of_range(format!(
            "survival needs t >= current >= j >= 1, got j={j}, current={current}, t={t}"
        )));
    }
    let base = conditioning_weight(model, current, j)?;
    let a = current as f64 - model.alpha() * j as f64;
    Ok(log_rising(a, (t - current) as f64)? * model.v(t, j)? / base)
}

/// Law of the age-ordered frequencies of `[n]` given the record indices;
/// depends on the model only through `alpha`.
pub fn cond_freq_given_records(alpha: f64, comp: &FrequencyComposition, rec: &RecordIndexVector) -> Result<LogProb> {
    if !rec.is_compatible(comp) {
        return Ok(LogProb::ZERO);
    }
    Ok(psi(alpha, comp.total(), rec)?
        * LogProb::from_ln(ln_binomial_product(comp, rec))
        * block_weight(alpha, comp)?)
}

/// `P(K_n = k)`.
pub fn kn_pmf(model: &GibbsModel, n: usize, k: usize) -> Result<LogProb> {
    if k == 0 || k > n {
        return Err(out_of_range(format!("K_n law needs 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(model.v(n, k)? * model.stirling(n, k)?)
}

/// `P(i_k = i)` through generalized Stirling numbers.
pub fn ik_marginal(model: &GibbsModel, k: usize, i: usize) -> Result<LogProb> {
    if k == 0 || i < k {
        return Err(out_of_range(format!("i_k marginal needs i >= k >= 1, got k={k}, i={i}")));
    }
    if k == 1 {
        return Ok(if i == 1 { LogProb::ONE } else { LogProb::ZERO });
    }
    Ok(model.v(i, k)? * model.stirling(i - 1, k - 1)?)
}

/// `P(i_k = i)` through the alternating sum
/// `alpha^{-(k-1)} sum_j (-1)^{j+i-1} (alpha j)_[i-1] / (j! (k-1-j)!)`,
/// which suffers cancellation and needs `alpha != 0`.
pub fn ik_marginal_alternating(model: &GibbsModel, k: usize, i: usize) -> Result<LogProb> {
    let alpha = model.alpha();
    if alpha == 0.0 {
        return Err(invalid("alternating form of the i_k marginal needs alpha != 0"));
    }
    if k == 0 || i < k {
        return Err(out_of_range(format!("i_k marginal needs i >= k >= 1, got k={k}, i={i}")));
    }
    // linear space with compensated summation; the terms alternate
    let mut acc = crate::logprob::Neumaier::default();
    for j in 0..k {
        let sign = if (j + i - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let t = log_falling(alpha * j as f64, i - 1) * LogProb::from_ln(-ln_factorial(j) - ln_factorial(k - 1 - j));
        acc.add(sign * t.value());
    }
    let scale = alpha.powi(-((k - 1) as i32));
    Ok(model.v(i, k)? * LogProb::from_f64(scale * acc.total()))
}

/// `E(W_m^n | i_m)`.
pub fn cond_moment_w(model: &GibbsModel, m: usize, i_m: usize, n: usize) -> Result<LogProb> {
    check_record(m, i_m)?;
    let base = conditioning_weight(model, i_m, m)?;
    let a = i_m as f64 - model.alpha() * m as f64;
    Ok(log_rising(a, n as f64)? * model.v(i_m + n, m)? / base)
}

/// `E(X_m^n | i_m)`.
pub fn cond_moment_x(model: &GibbsModel, m: usize, i_m: usize, n: usize) -> Result<LogProb> {
    check_record(m, i_m)?;
    let base = conditioning_weight(model, i_m, m)?;
    Ok(log_rising(1.0 - model.alpha(), n as f64)? * model.v(i_m + n, m)? / base)
}

fn check_record(m: usize, i_m: usize) -> Result<()> {
    if m == 0 || i_m < m {
        Err(out_of_range(format!("record index needs i_m >= m >= 1, got m={m}, i_m={i_m}")))
    } else {
        Ok(())
    }
}

/// Which frequency a Mellin transform refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    /// The cumulative frequency `W_m`.
    W,
    /// The single frequency `X_m`.
    X,
}

impl std::str::FromStr for Which {
    type Err = GibbsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" | "w" => Ok(Which::W),
            "X" | "x" => Ok(Which::X),
            _ => Err(invalid(format!("expected W or X, got '{s}'"))),
        }
    }
}

/// Real-order moments `V_{n,k}[phi]` of a model, built from the structural
/// Mellin transform `E(X_1^phi)`.
///
/// `M_m(phi) = E(W_m^phi | i_m = m)` satisfies
/// `M_{m+1}(phi) = (M_m(phi) - M_m(phi+1)) ((m+1)(1-alpha))_(phi) / (m(1-alpha))_(phi) * V_{m,m} / V_{m+1,m+1}`
/// and `V_{n,m}[phi] = V_{m,m} M_m(phi + n - m) / (m(1-alpha))_(n + phi - m)`.
#[derive(Clone, Copy, Debug)]
pub struct MellinTable<'a> {
    model: &'a GibbsModel,
}

impl<'a> MellinTable<'a> {
    pub fn new(model: &'a GibbsModel) -> Self {
        MellinTable { model }
    }

    /// `E(X_1^phi)`, the Mellin transform of the structural distribution.
    pub fn structural(&self, phi: f64) -> Result<LogProb> {
        check_phi(phi)?;
        let alpha = self.model.alpha();
        match self.model.family() {
            Family::Ewens { theta } | Family::TwoParameter { theta } => {
                // X_1 ~ Beta(1 - alpha, theta + alpha)
                Ok(log_rising(1.0 - alpha, phi)? / log_rising(1.0 + theta, phi)?)
            }
            Family::PoissonKingmanHalf { s } => Ok(LogProb::from_f64(pk_half_structural_mellin(*s, phi)?)),
            Family::ExplicitTable { .. } => {
                if phi.fract() != 0.0 {
                    return Err(GibbsError::Unsupported(format!(
                        "explicit-table models have no structural density; non-integer phi = {phi}"
                    )));
                }
                let n = phi as usize;
                Ok(log_rising(1.0 - alpha, phi)? * self.model.v(1 + n, 1)?)
            }
        }
    }

    /// `M_m(phi) = E(W_m^phi | i_m = m)`.
    pub fn front(&self, m: usize, phi: f64) -> Result<LogProb> {
        check_phi(phi)?;
        if m == 0 {
            return Err(out_of_range("front Mellin transform needs m >= 1"));
        }
        if m == 1 {
            return self.structural(phi);
        }
        let alpha = self.model.alpha();
        let prev = m - 1;
        let diff = self.front(prev, phi)? - self.front(prev, phi + 1.0)?;
        let top = conditioning_weight(self.model, m, m)?;
        let c = 1.0 - alpha;
        Ok(diff * log_rising(m as f64 * c, phi)? / log_rising(prev as f64 * c, phi)? * self.model.v(prev, prev)?
            / top)
    }

    /// `V_{n,k}[phi]`.
    pub fn v_phi(&self, n: usize, k: usize, phi: f64) -> Result<LogProb> {
        check_record(k, n)?;
        let c = k as f64 * (1.0 - self.model.alpha());
        let shift = phi + (n - k) as f64;
        Ok(self.model.v(k, k)? * self.front(k, shift)? / log_rising(c, shift)?)
    }

    /// `E(W_m^phi | i_m)` or `E(X_m^phi | i_m)`.
    pub fn moment(&self, m: usize, i_m: usize, phi: f64, which: Which) -> Result<f64> {
        check_record(m, i_m)?;
        if phi == 0.0 {
            return Ok(1.0);
        }
        let base = conditioning_weight(self.model, i_m, m)?;
        let a = match which {
            Which::W => i_m as f64 - self.model.alpha() * m as f64,
            Which::X => 1.0 - self.model.alpha(),
        };
        let r = log_rising(a, phi)? * self.v_phi(i_m, m, phi)? / base;
        Ok(r.value().max(0.0))
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi >= 0.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("Mellin argument must be finite and >= 0, got {phi}")))
    }
}

/// `E(W_m^phi | i_m)` or `E(X_m^phi | i_m)` for real `phi >= 0`.
pub fn mellin(model: &GibbsModel, m: usize, i_m: usize, phi: f64, which: Which) -> Result<f64> {
    MellinTable::new(model).moment(m, i_m, phi, which)
}

/// Mixture weights over compositions `c` of `i_k - 1` into `k - 1` parts:
/// the age-ordered sampling formula of `[i_k - 1]` given `k - 1` blocks,
/// normalized. The model enters only through `alpha`.
pub fn front_mixture(alpha: f64, k: usize, i_k: usize) -> Result<Vec<(FrequencyComposition, f64)>> {
    if k < 2 || i_k < k {
        return Err(out_of_range(format!("mixture needs i_k >= k >= 2, got k={k}, i_k={i_k}")));
    }
    let mut out = Vec::new();
    for comp in compositions(i_k - 1, k - 1) {
        let w = LogProb::from_ln(ln_multinomial(&comp)) * sbp_factor(&comp) * block_weight(alpha, &comp)?;
        out.push((comp, w));
    }
    let total: LogProb = out.iter().map(|(_, w)| *w).sum();
    Ok(out.into_iter().map(|(c, w)| (c, (w / total).value())).collect())
}

/// Density of `(X_1, ..., X_k)` given `W_k = w` and `i_k`, with respect to
/// Lebesgue measure on `(x_1, ..., x_{k-1})`. For `k = 1` the law is the
/// point mass `X_1 = w` and 1 is returned.
pub fn front_density(model: &GibbsModel, k: usize, i_k: usize, w: f64, x: &[f64]) -> Result<f64> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(invalid(format!("w must lie in (0, 1], got {w}")));
    }
    if x.len() != k {
        return Err(invalid(format!("x has {} coordinates, expected k = {k}", x.len())));
    }
    let sum: f64 = x.iter().sum();
    if x.iter().any(|&v| !(v > 0.0)) || (sum - w).abs() > 1e-9 * w {
        return Err(invalid(format!("x must be positive and sum to w = {w}, sums to {sum}")));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let alpha = model.alpha();
    let ln_y: Vec<f64> = x.iter().map(|v| (v / w).ln()).collect();
    let mut dens = 0.0;
    for (comp, weight) in front_mixture(alpha, k, i_k)? {
        let mut params: Vec<f64> = comp.parts().iter().map(|&m| m as f64 - alpha).collect();
        params.push(1.0 - alpha);
        dens += weight * ln_dirichlet(&params, &ln_y).exp();
    }
    Ok(dens * w.powi(-((k - 1) as i32)))
}

fn ln_dirichlet(params: &[f64], ln_y: &[f64]) -> f64 {
    let total: f64 = params.iter().sum();
    ln_gamma(total) + params.iter().zip(ln_y).map(|(a, ly)| (a - 1.0) * ly - ln_gamma(*a)).sum::<f64>()
}

/// `P(X_1 / W_k <= y | i_k)`: the first marginal of the Dirichlet mixture.
pub fn front_ratio_cdf(alpha: f64, k: usize, i_k: usize, y: f64) -> Result<f64> {
    if k == 1 {
        return Ok(if y >= 1.0 { 1.0 } else { 0.0 });
    }
    let mut acc = 0.0;
    for (comp, weight) in front_mixture(alpha, k, i_k)? {
        let a = comp.parts()[0] as f64 - alpha;
        let b = (i_k - 1 - comp.parts()[0]) as f64 - (k as f64 - 2.0) * alpha + 1.0 - alpha;
        let beta = Beta::new(a, b).map_err(|e| invalid(e.to_string()))?;
        acc += weight * beta.cdf(y.clamp(0.0, 1.0));
    }
    Ok(acc)
}

/// `P(X_1 / W_k > 1 - c | i_k)`, accurate for small `c` where
/// `1 - front_ratio_cdf(.., 1 - c)` would lose every digit.
pub fn front_ratio_sf_near_one(alpha: f64, k: usize, i_k: usize, c: f64) -> Result<f64> {
    if k == 1 {
        return Ok(if c > 0.0 { 1.0 } else { 0.0 });
    }
    let mut acc = 0.0;
    for (comp, weight) in front_mixture(alpha, k, i_k)? {
        let a = comp.parts()[0] as f64 - alpha;
        let b = (i_k - 1 - comp.parts()[0]) as f64 - (k as f64 - 2.0) * alpha + 1.0 - alpha;
        // 1 - Y ~ Beta(b, a)
        let beta = Beta::new(b, a).map_err(|e| invalid(e.to_string()))?;
        acc += weight * beta.cdf(c.clamp(0.0, 1.0));
    }
    Ok(acc)
}

/// Both sides of the identity
/// `prod_{j<k} w_j^{i_{j+1}-i_j-1} * w_k^{n-i_k} = sum_{B_n(i)} prod_j C(S_j - i_j, n_j - 1) x_j^{n_j - 1}`
/// for `n >= i_k`.
pub fn nacu_check(rec: &RecordIndexVector, x: &[f64], n: usize) -> Result<(f64, f64)> {
    let k = rec.len();
    if x.len() < k {
        return Err(invalid(format!("need at least k = {k} frequencies, got {}", x.len())));
    }
    if x.iter().any(|&v| !(v > 0.0)) || x.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(invalid("frequencies must be positive with sum <= 1"));
    }
    if n < rec.last() {
        return Err(out_of_range(format!("n = {n} is below the last record {}", rec.last())));
    }
    let idx = rec.indices();
    let mut w = 0.0;
    let mut lhs = 1.0;
    for j in 0..k {
        w += x[j];
        let gap = if j + 1 < k { idx[j + 1] - idx[j] - 1 } else { n - idx[k - 1] };
        lhs *= w.powi(gap as i32);
    }
    let mut rhs = 0.0;
    for comp in enumerate_compatible_compositions(rec, n) {
        let ln = ln_binomial_product(&comp, rec)
            + comp
                .parts()
                .iter()
                .zip(x)
                .map(|(&nj, xj)| (nj - 1) as f64 * xj.ln())
                .sum::<f64>();
        rhs += ln.exp();
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combin::compatible_records;

    fn fc(v: &[usize]) -> FrequencyComposition {
        FrequencyComposition::new(v.to_vec()).unwrap()
    }
    fn rv(v: &[usize]) -> RecordIndexVector {
        RecordIndexVector::new(v.to_vec()).unwrap()
    }
    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }
    fn ewens1() -> GibbsModel {
        GibbsModel::ewens(1.0, 16).unwrap()
    }
    fn tp_half() -> GibbsModel {
        GibbsModel::two_parameter(0.5, 0.5, 16).unwrap()
    }

    #[test]
    fn eppf_examples() {
        assert!(close(eppf(&ewens1(), &fc(&[2, 1])).unwrap().value(), 1.0 / 6.0, 1e-14));
        assert!(close(eppf(&ewens1(), &fc(&[3])).unwrap().value(), 1.0 / 3.0, 1e-14));
        assert!(close(eppf(&tp_half(), &fc(&[2, 1])).unwrap().value(), 2.0 / 15.0, 1e-14));
        // symmetric in parts
        let m = tp_half();
        let a = eppf(&m, &fc(&[3, 1, 2])).unwrap();
        let b = eppf(&m, &fc(&[1, 2, 3])).unwrap();
        assert!(close(a.value(), b.value(), 1e-14));
    }

    #[test]
    fn sampling_formula_examples() {
        let m = ewens1();
        assert!(close(ordered_pmf(&m, &fc(&[2, 1])).unwrap().value(), 1.0 / 3.0, 1e-14));
        assert!(close(unordered_pmf(&m, &fc(&[2, 1])).unwrap().value(), 0.5, 1e-14));
        for n in 1..6 {
            let c = fc(&[n]);
            assert!(close(ordered_pmf(&m, &c).unwrap().value(), eppf(&m, &c).unwrap().value(), 1e-14));
        }
    }

    #[test]
    fn joint_examples() {
        let m = ewens1();
        assert!(close(joint_pmf(&m, &fc(&[2, 1]), &rv(&[1, 2])).unwrap().value(), 1.0 / 6.0, 1e-14));
        assert!(close(joint_pmf(&m, &fc(&[2, 1]), &rv(&[1, 3])).unwrap().value(), 1.0 / 6.0, 1e-14));
        assert!(joint_pmf(&m, &fc(&[3]), &rv(&[1, 2])).unwrap().is_zero());
    }

    #[test]
    fn records_given_freq_examples() {
        assert!(close(cond_records_given_freq(&fc(&[2, 1]), &rv(&[1, 2])).value(), 0.5, 1e-14));
        for k in 1..7 {
            let ones = fc(&vec![1; k]);
            let r = RecordIndexVector::consecutive(k);
            assert!(close(cond_records_given_freq(&ones, &r).value(), 1.0, 1e-14));
        }
    }

    #[test]
    fn record_marginal_examples() {
        let m = ewens1();
        assert!(close(record_marginal(&m, 3, &rv(&[1, 2])).unwrap().value(), 1.0 / 3.0, 1e-14));
        for theta in [0.3, 1.0, 2.5] {
            let m = GibbsModel::ewens(theta, 6).unwrap();
            let a = record_marginal(&m, 2, &rv(&[1])).unwrap().value();
            let b = record_marginal(&m, 2, &rv(&[1, 2])).unwrap().value();
            assert!(close(a, 1.0 / (theta + 1.0), 1e-14));
            assert!(close(b, theta / (theta + 1.0), 1e-14));
        }
        assert!(record_marginal(&m, 2, &rv(&[1, 3])).is_err());
    }

    #[test]
    fn transition_examples() {
        for theta in [0.5, 1.0, 3.0] {
            let m = GibbsModel::ewens(theta, 6).unwrap();
            let p = record_transition(&m, 1, 1, 2).unwrap().value();
            assert!(close(p, theta / (theta + 1.0), 1e-14));
        }
        let m = GibbsModel::ewens(1.0, 8).unwrap();
        let mut total = 0.0;
        for j in 2..=200 {
            let p = record_transition(&m, 1, 1, j).unwrap().value();
            assert!(close(p, 1.0 / (j * (j - 1)) as f64, 1e-12));
            total += p;
        }
        // telescoping: sum_{j=2}^{J} 1/(j(j-1)) = 1 - 1/J
        assert!(close(total, 1.0 - 1.0 / 200.0, 1e-12));
    }

    #[test]
    fn survival_telescopes() {
        let m = GibbsModel::two_parameter(0.3, 1.2, 20).unwrap();
        for (j, cur) in [(1, 1), (2, 3), (3, 5)] {
            let mut acc = LogProb::ZERO;
            for t in cur + 1..=18 {
                acc = acc + record_transition(&m, j, cur, t).unwrap();
                let s = record_survival(&m, j, cur, t).unwrap();
                assert!(close((acc + s).value(), 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn cond_freq_examples() {
        assert!(close(cond_freq_given_records(0.0, &fc(&[2, 1]), &rv(&[1, 2])).unwrap().value(), 0.5, 1e-14));
        let total: f64 = enumerate_compatible_compositions(&rv(&[1, 2]), 3)
            .map(|c| cond_freq_given_records(0.3, &c, &rv(&[1, 2])).unwrap().value())
            .sum();
        assert!(close(total, 1.0, 1e-14));
        // alpha = 1/2: psi * C(1,1)(1/2) * C(1,0)
        let m = tp_half();
        let (c, r) = (fc(&[2, 1]), rv(&[1, 2]));
        let direct = psi(0.5, 3, &r).unwrap().value() * 0.5;
        let bayes = joint_pmf(&m, &c, &r).unwrap() / record_marginal(&m, 3, &r).unwrap();
        let got = cond_freq_given_records(0.5, &c, &r).unwrap().value();
        assert!(close(got, direct, 1e-14));
        assert!(close(got, bayes.value(), 1e-13));
    }

    #[test]
    fn kn_examples() {
        let m = tp_half();
        let want = [0.2, 0.4, 0.4];
        for k in 1..=3 {
            assert!(close(kn_pmf(&m, 3, k).unwrap().value(), want[k - 1], 1e-13));
        }
        let m = ewens1();
        let want = [1.0 / 3.0, 0.5, 1.0 / 6.0];
        for k in 1..=3 {
            assert!(close(kn_pmf(&m, 3, k).unwrap().value(), want[k - 1], 1e-13));
        }
        for n in 1..10 {
            assert_eq!(kn_pmf(&m, n, n).unwrap(), m.v(n, n).unwrap());
        }
    }

    #[test]
    fn ik_examples() {
        let m = ewens1();
        for j in 2..12 {
            let p = ik_marginal(&m, 2, j).unwrap().value();
            assert!(close(p, 1.0 / (j * (j - 1)) as f64, 1e-13));
        }
        assert_eq!(ik_marginal(&m, 1, 1).unwrap(), LogProb::ONE);
        assert!(ik_marginal(&m, 1, 2).unwrap().is_zero());
    }

    #[test]
    fn ik_alternating_small_case() {
        // alpha = 1/2, k = 2, i_k = 3: S_{1/2}(2, 1) = 1/2
        let m = tp_half();
        let a = ik_marginal_alternating(&m, 2, 3).unwrap();
        let s = ik_marginal(&m, 2, 3).unwrap();
        assert!(close(a.value(), s.value(), 1e-13));
        assert!(close((s / m.v(3, 2).unwrap()).value(), 0.5, 1e-13));
        let neg = GibbsModel::two_parameter(-0.5, 2.0, 16).unwrap();
        for (k, i) in [(2, 4), (3, 5), (4, 9)] {
            let a = ik_marginal_alternating(&neg, k, i).unwrap();
            let s = ik_marginal(&neg, k, i).unwrap();
            assert!(close(a.value(), s.value(), 1e-9), "k={k} i={i}");
        }
    }

    #[test]
    fn moment_examples() {
        let m = ewens1();
        assert!(close(cond_moment_w(&m, 1, 1, 1).unwrap().value(), 0.5, 1e-14));
        assert!(close(cond_moment_w(&m, 1, 1, 2).unwrap().value(), 1.0 / 3.0, 1e-14));
        assert_eq!(cond_moment_w(&m, 2, 4, 0).unwrap(), LogProb::ONE);
        assert_eq!(cond_moment_x(&m, 2, 4, 0).unwrap(), LogProb::ONE);
        for (alpha, theta) in [(0.5, 0.5), (0.2, 3.0), (-0.5, 1.5)] {
            let tp = GibbsModel::two_parameter(alpha, theta, 16).unwrap();
            for mm in 1..=3 {
                for n in 0..=3 {
                    let got = cond_moment_w(&tp, mm, mm, n).unwrap().value();
                    let c = mm as f64 * (1.0 - alpha);
                    let want = log_rising(c, n as f64).unwrap() / log_rising(theta + mm as f64, n as f64).unwrap();
                    assert!(close(got, want.value(), 1e-12));
                }
            }
        }
    }

    #[test]
    fn mellin_examples() {
        for theta in [0.5, 1.0, 2.0] {
            let m = GibbsModel::ewens(theta, 16).unwrap();
            let t = MellinTable::new(&m);
            for phi in [0.5, 1.5, std::f64::consts::PI] {
                let got = t.v_phi(1, 1, phi).unwrap().value();
                let want = 1.0 / log_rising(theta + 1.0, phi).unwrap().value();
                assert!(close(got, want, 1e-12));
            }
        }
        let m = ewens1();
        assert!(close(mellin(&m, 1, 1, 0.5, Which::X).unwrap(), 2.0 / 3.0, 1e-13));
        assert!(close(mellin(&m, 2, 4, 0.0, Which::W).unwrap(), 1.0, 1e-13));
    }

    #[test]
    fn mellin_matches_integer_moments() {
        for m in [tp_half(), GibbsModel::two_parameter(-0.5, 1.5, 16).unwrap(), GibbsModel::pk_half(1.0, 12).unwrap()] {
            let tol = if matches!(m.family(), Family::PoissonKingmanHalf { .. }) { 1e-6 } else { 1e-9 };
            for mm in 1..=3 {
                for i_m in mm..=5 {
                    for n in 0..=3 {
                        let w = mellin(&m, mm, i_m, n as f64, Which::W).unwrap();
                        let x = mellin(&m, mm, i_m, n as f64, Which::X).unwrap();
                        assert!(close(w, cond_moment_w(&m, mm, i_m, n).unwrap().value(), tol), "W m={mm} i={i_m} n={n}");
                        assert!(close(x, cond_moment_x(&m, mm, i_m, n).unwrap().value(), tol), "X m={mm} i={i_m} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn mellin_on_tables_needs_integer_phi() {
        let t = ewens1().to_table(10).unwrap();
        assert!(mellin(&t, 1, 1, 2.0, Which::X).is_ok());
        assert!(matches!(mellin(&t, 1, 1, 0.5, Which::X), Err(GibbsError::Unsupported(_))));
        assert!(mellin(&t, 1, 1, -1.0, Which::X).is_err());
    }

    #[test]
    fn front_density_examples() {
        let m = tp_half();
        assert_eq!(front_density(&m, 1, 1, 0.4, &[0.4]).unwrap(), 1.0);
        // k = 2, i_2 = 2: Dirichlet(1 - alpha, 1 - alpha) on (x_1/w, x_2/w)
        let (w, x1) = (0.8, 0.3);
        let got = front_density(&m, 2, 2, w, &[x1, w - x1]).unwrap();
        let y = x1 / w;
        let want = (ln_gamma(1.0) - 2.0 * ln_gamma(0.5) - 0.5 * y.ln() - 0.5 * (1.0 - y).ln()).exp() / w;
        assert!(close(got, want, 1e-13));
        assert!(front_density(&m, 2, 3, 0.5, &[0.3, 0.3]).is_err());
    }

    #[test]
    fn front_mixture_matches_stick_breaking_mean() {
        // E(X_1/W_3 | i_3) through the mixture and through the record chain
        let alpha = 0.3;
        let m = GibbsModel::two_parameter(alpha, 1.0, 16).unwrap();
        for i3 in 3..=8 {
            let mix: f64 = front_mixture(alpha, 3, i3)
                .unwrap()
                .iter()
                .map(|(c, w)| w * (c.parts()[0] as f64 - alpha) / (i3 as f64 - 1.0 - 3.0 * alpha + 1.0))
                .sum();
            let mut num = 0.0;
            let mut den = 0.0;
            for i2 in 2..i3 {
                let p = (record_transition(&m, 1, 1, i2).unwrap() * record_transition(&m, 2, i2, i3).unwrap()).value();
                let e1 = (i2 as f64 - alpha - 1.0) / (i2 as f64 - 2.0 * alpha);
                let e2 = (i3 as f64 - 2.0 * alpha - 1.0) / (i3 as f64 - 3.0 * alpha);
                num += p * e1 * e2;
                den += p;
            }
            assert!(close(mix, num / den, 1e-12), "i3={i3}");
        }
    }

    #[test]
    fn front_ratio_cdf_k2_is_beta() {
        let alpha = 0.0;
        let b = Beta::new(3.0 - 1.0 - alpha, 1.0 - alpha).unwrap();
        for y in [0.1, 0.5, 0.9] {
            assert!(close(front_ratio_cdf(alpha, 2, 3, y).unwrap(), b.cdf(y), 1e-13));
        }
    }

    #[test]
    fn front_ratio_tails_agree() {
        for alpha in [-0.5, 0.3, 0.9] {
            for (k, i) in [(2, 4), (3, 6)] {
                for c in [0.2, 0.5, 0.8] {
                    let sf = front_ratio_sf_near_one(alpha, k, i, c).unwrap();
                    let cdf = front_ratio_cdf(alpha, k, i, 1.0 - c).unwrap();
                    assert!(close(sf, 1.0 - cdf, 1e-12));
                }
            }
        }
    }

    #[test]
    fn nacu_examples() {
        let (l, r) = nacu_check(&rv(&[1, 2]), &[0.4, 0.3], 2).unwrap();
        assert!(close(l, 1.0, 1e-15) && close(r, 1.0, 1e-15));
        let (l, r) = nacu_check(&rv(&[1, 3]), &[0.5, 0.3], 4).unwrap();
        assert!(close(l, 0.5 * 0.8, 1e-14));
        assert!(close(r, l, 1e-14));
        let (l, r) = nacu_check(&rv(&[1, 3, 4]), &[0.2, 0.3, 0.1], 4).unwrap();
        assert!(close(l, 0.2, 1e-14) && close(r, l, 1e-14));
    }

    #[test]
    fn bayes_consistency_small() {
        let m = GibbsModel::two_parameter(0.4, 0.7, 10).unwrap();
        for n in 1..=7 {
            for k in 1..=n {
                for c in compositions(n, k) {
                    for r in compatible_records(&c) {
                        let j = joint_pmf(&m, &c, &r).unwrap();
                        let a = ordered_pmf(&m, &c).unwrap() * cond_records_given_freq(&c, &r);
                        let b = record_marginal(&m, n, &r).unwrap() * cond_freq_given_records(0.4, &c, &r).unwrap();
                        assert!(j.rel_err(a) < 1e-12 && j.rel_err(b) < 1e-12);
                    }
                }
            }
        }
    }
}

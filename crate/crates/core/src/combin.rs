//! Combinatorial kernel: Gamma-ratio arithmetic, generalized Stirling
//! numbers, the counting factors that turn an EPPF into sampling formulas,
//! and lazy enumeration of compositions and record vectors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, out_of_range, GibbsError, Result};
use crate::logprob::{LogProb, Neumaier};

// Integer-length rising factorials up to this length are evaluated as
// explicit products; longer ones go through log-Gamma.
const PRODUCT_CUTOFF: f64 = 4096.0;

/// Signed `ln |Gamma(x)|`.
pub fn ln_gamma_signed(x: f64) -> Result<LogProb> {
    if x <= 0.0 && x == x.floor() {
        return Err(GibbsError::GammaPole(x));
    }
    let (lg, sign) = libm::lgamma_r(x);
    Ok(LogProb::from_parts(lg, if sign < 0 { -1 } else { 1 }))
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    libm::lgamma(x)
}

pub fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `ln C(a, b)`; `-inf` when `b > a`.
pub fn ln_binomial(a: usize, b: usize) -> f64 {
    if b > a {
        return f64::NEG_INFINITY;
    }
    ln_factorial(a) - ln_factorial(b) - ln_factorial(a - b)
}

/// Generalized rising factorial `a_(x) = Gamma(a + x) / Gamma(a)`, signed.
///
/// Integer `x` is evaluated as the product `a (a+1) ... (a+x-1)`, which is
/// defined (possibly zero) for every real `a`.
pub fn log_rising(a: f64, x: f64) -> Result<LogProb> {
    if !(x >= 0.0) || !a.is_finite() || !x.is_finite() {
        return Err(invalid(format!("rising factorial needs x >= 0, got a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok(LogProb::ONE);
    }
    if x == x.floor() && (x <= PRODUCT_CUTOFF || a <= 0.0) {
        let r = x as usize;
        let mut acc = Neumaier::default();
        let mut sign = 1i8;
        for l in 0..r {
            let t = a + l as f64;
            if t == 0.0 {
                return Ok(LogProb::ZERO);
            }
            if t < 0.0 {
                sign = -sign;
            }
            acc.add(t.abs().ln());
        }
        return Ok(LogProb::from_parts(acc.total(), sign));
    }
    let num = ln_gamma_signed(a + x)?;
    let den = ln_gamma_signed(a)?;
    Ok(num / den)
}

/// Falling factorial `a_[r] = a (a-1) ... (a-r+1)`, signed.
pub fn log_falling(a: f64, r: usize) -> LogProb {
    let mut acc = Neumaier::default();
    let mut sign = 1i8;
    for l in 0..r {
        let t = a - l as f64;
        if t == 0.0 {
            return LogProb::ZERO;
        }
        if t < 0.0 {
            sign = -sign;
        }
        acc.add(t.abs().ln());
    }
    LogProb::from_parts(acc.total(), sign)
}

/// Triangular table of generalized Stirling numbers `S_alpha(n, k)`.
///
/// Filled by `S(n+1, k) = S(n, k-1) + (n - k alpha) S(n, k)` with
/// `S(1, 1) = 1`; every entry with `1 <= k <= n` is strictly positive for
/// `alpha < 1`, so the table is kept as plain logs.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    alpha: f64,
    n_max: usize,
    ln: Vec<Vec<f64>>,
}

impl StirlingTable {
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        if !(alpha < 1.0) || !alpha.is_finite() {
            return Err(invalid(format!("Stirling numbers need alpha < 1, got {alpha}")));
        }
        if n_max == 0 {
            return Err(out_of_range("Stirling table needs n_max >= 1"));
        }
        let mut ln = vec![vec![0.0]];
        for n in 1..n_max {
            let prev = &ln[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            for k in 1..=n + 1 {
                let carry = if k >= 2 { LogProb::from_ln(prev[k - 2]) } else { LogProb::ZERO };
                let stay = if k <= n {
                    LogProb::from_ln(prev[k - 1]) * LogProb::from_f64(n as f64 - k as f64 * alpha)
                } else {
                    LogProb::ZERO
                };
                row.push((carry + stay).ln());
            }
            ln.push(row);
        }
        Ok(StirlingTable { alpha, n_max, ln })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `S_alpha(n, k)`; zero outside `1 <= k <= n`.
    pub fn get(&self, n: usize, k: usize) -> Result<LogProb> {
        if n > self.n_max {
            return Err(out_of_range(format!(
                "Stirling table holds n <= {}, asked for n = {n}",
                self.n_max
            )));
        }
        if n == 0 {
            return Ok(if k == 0 { LogProb::ONE } else { LogProb::ZERO });
        }
        if k == 0 || k > n {
            return Ok(LogProb::ZERO);
        }
        Ok(LogProb::from_ln(self.ln[n - 1][k - 1]))
    }
}

/// One-off `S_alpha(n, k)`.
pub fn gen_stirling(n: usize, k: usize, alpha: f64) -> Result<LogProb> {
    if n == 0 || k == 0 || k > n {
        return Err(out_of_range(format!("Stirling number needs 1 <= k <= n, got ({n}, {k})")));
    }
    StirlingTable::new(alpha, n)?.get(n, k)
}

/// `S_alpha(n, 1..=n)` by the same recursion in plain floating point:
/// exact for integer data while it fits, infinite once it overflows.
pub fn stirling_row(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha < 1.0) || !alpha.is_finite() {
        return Err(invalid(format!("Stirling numbers need alpha < 1, got {alpha}")));
    }
    if n == 0 {
        return Err(out_of_range("Stirling row needs n >= 1"));
    }
    let mut row = vec![1.0];
    for m in 1..n {
        let mut next = vec![0.0; m + 1];
        for k in 1..=m + 1 {
            let carry = if k >= 2 { row[k - 2] } else { 0.0 };
            let stay = if k <= m { row[k - 1] * (m as f64 - k as f64 * alpha) } else { 0.0 };
            next[k - 1] = carry + stay;
        }
        row = next;
    }
    Ok(row)
}

/// Block sizes in age order, `(n_1, ..., n_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequencyComposition(Vec<usize>);

impl FrequencyComposition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("composition needs at least one part"));
        }
        if parts.iter().any(|&p| p == 0) {
            return Err(invalid(format!("composition parts must be >= 1: {parts:?}")));
        }
        Ok(FrequencyComposition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// Number of blocks `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `S_0 = 0, S_1, ..., S_k`.
    pub fn partial_sums(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0);
        let mut s = 0;
        for &p in &self.0 {
            s += p;
            out.push(s);
        }
        out
    }

    /// `b_i` = number of parts equal to `i`, for `i = 1..=n` (index 0 unused).
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut b = vec![0; self.total() + 1];
        for &p in &self.0 {
            b[p] += 1;
        }
        b
    }

    /// Parts sorted decreasingly: the unordered frequency multiset.
    pub fn sorted_desc(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

impl fmt::Display for FrequencyComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(&self.0))
    }
}

/// Least elements of the blocks, `1 = i_1 < i_2 < ... < i_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordIndexVector(Vec<usize>);

impl RecordIndexVector {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.first() != Some(&1) {
            return Err(invalid(format!("record vector must start at 1: {indices:?}")));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(format!("record vector must be strictly increasing: {indices:?}")));
        }
        Ok(RecordIndexVector(indices))
    }

    /// `(1, 2, ..., k)`.
    pub fn consecutive(k: usize) -> Self {
        RecordIndexVector((1..=k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("record vectors are never empty")
    }

    /// Waiting times `T_j = i_j - i_{j-1} - 1` for `j = 2..=k`.
    pub fn waiting_times(&self) -> Vec<usize> {
        self.0.windows(2).map(|w| w[1] - w[0] - 1).collect()
    }

    /// Membership of the pair in `C(n)`: `i_j <= S_{j-1} + 1` for every `j`.
    pub fn is_compatible(&self, comp: &FrequencyComposition) -> bool {
        if self.len() != comp.len() {
            return false;
        }
        let s = comp.partial_sums();
        self.0.iter().enumerate().all(|(j, &i)| i <= s[j] + 1)
    }
}

impl fmt::Display for RecordIndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(&self.0))
    }
}

pub(crate) fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// A set partition of `[n]` with blocks ordered by least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgeOrderedPartition {
    blocks: Vec<Vec<usize>>,
}

impl AgeOrderedPartition {
    /// From block labels of `1..=n`, where label `j` is the `j`-th block
    /// to appear (a restricted growth string, 0-based).
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (pos, &lab) in labels.iter().enumerate() {
            if lab == blocks.len() {
                blocks.push(vec![pos + 1]);
            } else if lab < blocks.len() {
                blocks[lab].push(pos + 1);
            } else {
                return Err(invalid(format!("labels are not a restricted growth string: {labels:?}")));
            }
        }
        if blocks.is_empty() {
            return Err(invalid("partition of the empty set"));
        }
        Ok(AgeOrderedPartition { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn frequencies(&self) -> FrequencyComposition {
        FrequencyComposition(self.blocks.iter().map(Vec::len).collect())
    }

    pub fn records(&self) -> RecordIndexVector {
        RecordIndexVector(self.blocks.iter().map(|b| b[0]).collect())
    }
}

impl fmt::Display for AgeOrderedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| join(b)).collect();
        write!(f, "{}", parts.join("|"))
    }
}

/// `a(n) = prod_j n_j / (n - S_{j-1})`: the law of a size-biased
/// permutation of `n`.
pub fn sbp_factor(comp: &FrequencyComposition) -> LogProb {
    let n = comp.total() as f64;
    let s = comp.partial_sums();
    comp.parts()
        .iter()
        .enumerate()
        .map(|(j, &nj)| LogProb::from_f64(nj as f64 / (n - s[j] as f64)))
        .product()
}

/// `ln (|n| choose n) = ln n! - sum ln n_j!`.
pub fn ln_multinomial(comp: &FrequencyComposition) -> f64 {
    ln_factorial(comp.total()) - comp.parts().iter().map(|&p| ln_factorial(p)).sum::<f64>()
}

/// `a(n, i) = prod_j C(S_j - i_j, n_j - 1) / (|n| choose n)`; zero when
/// `i` is not in `C(n)`.
pub fn joint_factor(comp: &FrequencyComposition, rec: &RecordIndexVector) -> LogProb {
    if !rec.is_compatible(comp) {
        return LogProb::ZERO;
    }
    LogProb::from_ln(ln_binomial_product(comp, rec) - ln_multinomial(comp))
}

/// `ln prod_j C(S_j - i_j, n_j - 1)` for a compatible pair: the number of
/// labelled arrangements with these sizes and least elements.
pub(crate) fn ln_binomial_product(comp: &FrequencyComposition, rec: &RecordIndexVector) -> f64 {
    let s = comp.partial_sums();
    comp.parts()
        .iter()
        .zip(rec.indices())
        .enumerate()
        .map(|(j, (&nj, &ij))| ln_binomial(s[j + 1] - ij, nj - 1))
        .sum()
}

/// `psi_{alpha,n,k}(i) = Gamma(1-alpha)/Gamma(n - alpha k) *
///   prod_{j=2}^k Gamma(i_j - j alpha) / Gamma(i_j - j alpha - (1 - alpha))`.
pub fn psi(alpha: f64, n: usize, rec: &RecordIndexVector) -> Result<LogProb> {
    if !(alpha < 1.0) {
        return Err(invalid(format!("psi needs alpha < 1, got {alpha}")));
    }
    let k = rec.len();
    if rec.last() > n {
        return Err(out_of_range(format!("last record {} exceeds n = {n}", rec.last())));
    }
    let mut acc = ln_gamma(1.0 - alpha) - ln_gamma(n as f64 - alpha * k as f64);
    for (j0, &i) in rec.indices().iter().enumerate().skip(1) {
        let j = (j0 + 1) as f64;
        let top = i as f64 - j * alpha;
        acc += ln_gamma(top) - ln_gamma(top - (1.0 - alpha));
    }
    Ok(LogProb::from_ln(acc))
}

/// Lazy lexicographic enumeration of compositions of `n` into `k` parts
/// whose partial sums satisfy `S_j >= lower[j-1]` for `j < k`.
#[derive(Clone, Debug)]
pub struct Compositions {
    n: usize,
    lower: Vec<usize>,
    parts: Vec<usize>,
    started: bool,
    done: bool,
}

impl Compositions {
    fn with_lower(n: usize, k: usize, lower: Vec<usize>) -> Self {
        debug_assert!(k == 0 || lower.len() == k - 1);
        let done = k == 0 || k > n;
        Compositions {
            n,
            lower,
            parts: vec![0; k],
            started: false,
            done,
        }
    }

    /// Fill `parts[from..]` minimally given the prefix; false if infeasible.
    fn fill_from(&mut self, from: usize) -> bool {
        let k = self.parts.len();
        let mut s: usize = self.parts[..from].iter().sum();
        for j in from..k - 1 {
            let need = self.lower[j].saturating_sub(s).max(1);
            s += need;
            if s > self.n - (k - 1 - j) {
                return false;
            }
            self.parts[j] = need;
        }
        if s >= self.n {
            return false;
        }
        self.parts[k - 1] = self.n - s;
        true
    }
}

impl Iterator for Compositions {
    type Item = FrequencyComposition;

    fn next(&mut self) -> Option<FrequencyComposition> {
        if self.done {
            return None;
        }
        let k = self.parts.len();
        if !self.started {
            self.started = true;
            if !self.fill_from(0) {
                self.done = true;
                return None;
            }
            return Some(FrequencyComposition(self.parts.clone()));
        }
        // Bump the rightmost free part (the last one is determined).
        let mut j = k.saturating_sub(1);
        while j > 0 {
            j -= 1;
            let prefix: usize = self.parts[..=j].iter().sum();
            if prefix < self.n - (k - 1 - j) {
                self.parts[j] += 1;
                if self.fill_from(j + 1) {
                    return Some(FrequencyComposition(self.parts.clone()));
                }
            }
        }
        self.done = true;
        None
    }
}

/// All compositions of `n` into exactly `k` positive parts.
pub fn compositions(n: usize, k: usize) -> Compositions {
    Compositions::with_lower(n, k, vec![0; k.saturating_sub(1)])
}

/// The set `B_n(i)`: compositions of `n` into `k = |i|` parts compatible
/// with the record vector, i.e. `S_{j-1} >= i_j - 1`.
pub fn enumerate_compatible_compositions(rec: &RecordIndexVector, n: usize) -> Compositions {
    let k = rec.len();
    if rec.last() > n {
        return Compositions::with_lower(0, 0, Vec::new());
    }
    let lower = rec.indices()[1..].iter().map(|&i| i - 1).collect();
    Compositions::with_lower(n, k, lower)
}

/// Lazy lexicographic enumeration of `C(n)`: record vectors with
/// `i_j <= S_{j-1} + 1`.
#[derive(Clone, Debug)]
pub struct CompatibleRecords {
    upper: Vec<usize>,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl Iterator for CompatibleRecords {
    type Item = RecordIndexVector;

    fn next(&mut self) -> Option<RecordIndexVector> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(RecordIndexVector(self.current.clone()));
        }
        let k = self.current.len();
        let mut j = k;
        while j > 1 {
            j -= 1;
            if self.current[j] < self.upper[j] {
                self.current[j] += 1;
                let mut ok = true;
                for t in j + 1..k {
                    self.current[t] = self.current[t - 1] + 1;
                    if self.current[t] > self.upper[t] {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Some(RecordIndexVector(self.current.clone()));
                }
            }
        }
        self.done = true;
        None
    }
}

pub fn compatible_records(comp: &FrequencyComposition) -> CompatibleRecords {
    let s = comp.partial_sums();
    let k = comp.len();
    CompatibleRecords {
        upper: (0..k).map(|j| s[j] + 1).collect(),
        current: (1..=k).collect(),
        started: false,
        done: false,
    }
}

/// All record vectors of length `k` with last element `<= n`, in
/// lexicographic order.
pub fn record_vectors(n: usize, k: usize) -> impl Iterator<Item = RecordIndexVector> {
    // Every such vector is compatible with (n - k + 1, 1, ..., 1), whose
    // upper bounds are exactly i_j <= n - k + j.
    let valid = k >= 1 && k <= n;
    let mut parts = vec![1; k.max(1)];
    parts[0] = n.saturating_sub(k) + 1;
    let it = compatible_records(&FrequencyComposition(parts));
    it.take_while(move |_| valid)
}

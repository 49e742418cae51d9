//! Brute-force ground truth. Every set partition of `[n]` is enumerated,
//! weighted by the EPPF, and pushed forward to the statistic of interest.
//! The resulting tables are compared against the closed-form laws and
//! against Monte Carlo counts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::combin::{
    compatible_records, compositions, enumerate_compatible_compositions, join, ln_factorial,
    record_vectors, AgeOrderedPartition, FrequencyComposition, RecordIndexVector,
};
use crate::error::{invalid, out_of_range, GibbsError, Result};
use crate::laws;
use crate::logprob::{log_sum, LogProb};
use crate::model::GibbsModel;
use crate::stats::{chi_square_gof, ChiSquareTest};

/// Largest `n` the enumeration accepts.
pub const MAX_N: usize = 10;

/// Restricted-growth-string enumeration of the set partitions of `[n]`.
#[derive(Clone, Debug)]
pub struct Partitions {
    labels: Vec<usize>,
    // running maximum of labels[..=i]
    maxes: Vec<usize>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = AgeOrderedPartition;

    fn next(&mut self) -> Option<AgeOrderedPartition> {
        if self.done {
            return None;
        }
        let out = AgeOrderedPartition::from_labels(&self.labels).expect("restricted growth string");
        let n = self.labels.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxes[i - 1] {
                self.labels[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.labels[i]);
                for t in i + 1..n {
                    self.labels[t] = 0;
                    self.maxes[t] = self.maxes[t - 1];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every set partition of `[n]` exactly once, blocks ordered by least
/// element.
pub fn enumerate_partitions(n: usize) -> Result<Partitions> {
    if n == 0 || n > MAX_N {
        return Err(out_of_range(format!("enumeration needs 1 <= n <= {MAX_N}, got {n}")));
    }
    Ok(Partitions {
        labels: vec![0; n],
        maxes: vec![0; n],
        done: false,
    })
}

/// A statistic of the partition of `[n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Partition,
    FreqOrdered,
    FreqUnordered,
    Records,
    Joint,
    #[serde(rename = "K")]
    K,
    /// Records given the age-ordered frequencies; keyed like `Joint`.
    RecordsGivenFreq,
    /// Age-ordered frequencies given the records; keyed like `Joint`.
    FreqGivenRecords,
}

impl Statistic {
    pub const ALL: [Statistic; 8] = [
        Statistic::Partition,
        Statistic::FreqOrdered,
        Statistic::FreqUnordered,
        Statistic::Records,
        Statistic::Joint,
        Statistic::K,
        Statistic::RecordsGivenFreq,
        Statistic::FreqGivenRecords,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Partition => "partition",
            Statistic::FreqOrdered => "freq_ordered",
            Statistic::FreqUnordered => "freq_unordered",
            Statistic::Records => "records",
            Statistic::Joint => "joint",
            Statistic::K => "K",
            Statistic::RecordsGivenFreq => "records_given_freq",
            Statistic::FreqGivenRecords => "freq_given_records",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = GibbsError;
    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| invalid(format!("unknown statistic '{s}'")))
    }
}

/// Canonical key of a frequency vector.
pub fn freq_key(c: &FrequencyComposition) -> String {
    c.to_string()
}

/// Canonical key of an unordered multiset of block sizes.
pub fn unordered_key(c: &FrequencyComposition) -> String {
    join(&c.sorted_desc())
}

/// Canonical key of a (frequencies, records) pair.
pub fn joint_key(c: &FrequencyComposition, r: &RecordIndexVector) -> String {
    format!("{c}|{r}")
}

/// A finite law with canonical string support, sorted by key.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLawTable {
    pub statistic: Statistic,
    pub n: usize,
    /// JSON descriptor of the model the law belongs to.
    pub model: String,
    pub support: Vec<String>,
    pub probs: Vec<LogProb>,
}

impl ExactLawTable {
    fn from_map(statistic: Statistic, n: usize, model: &GibbsModel, map: BTreeMap<String, Vec<LogProb>>) -> Self {
        let (support, probs) = map.into_iter().map(|(k, v)| (k, log_sum(&v))).unzip();
        ExactLawTable {
            statistic,
            n,
            model: model.spec().to_json(),
            support,
            probs,
        }
    }

    pub fn get(&self, key: &str) -> Option<LogProb> {
        self.support
            .binary_search_by(|k| k.as_str().cmp(key))
            .ok()
            .map(|i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> LogProb {
        log_sum(&self.probs)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, LogProb)> {
        self.support.iter().map(String::as_str).zip(self.probs.iter().copied())
    }
}

fn check_n(model: &GibbsModel, n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(out_of_range(format!("exact laws need 1 <= n <= {MAX_N}, got {n}")));
    }
    if n > model.n_max() && !model.is_closed_form() {
        return Err(out_of_range(format!("n = {n} exceeds the model's n_max = {}", model.n_max())));
    }
    Ok(())
}

/// Pushforward of the partition law of `[n]` by enumeration.
pub fn exact_law(model: &GibbsModel, n: usize, statistic: Statistic) -> Result<ExactLawTable> {
    check_n(model, n)?;
    let mut map: BTreeMap<String, Vec<LogProb>> = BTreeMap::new();
    let mut marg: BTreeMap<String, Vec<LogProb>> = BTreeMap::new();
    for p in enumerate_partitions(n)? {
        let c = p.frequencies();
        let r = p.records();
        let w = laws::eppf(model, &c)?;
        let key = match statistic {
            Statistic::Partition => p.to_string(),
            Statistic::FreqOrdered => freq_key(&c),
            Statistic::FreqUnordered => unordered_key(&c),
            Statistic::Records => r.to_string(),
            Statistic::Joint | Statistic::RecordsGivenFreq | Statistic::FreqGivenRecords => joint_key(&c, &r),
            Statistic::K => c.len().to_string(),
        };
        map.entry(key).or_default().push(w);
        match statistic {
            Statistic::RecordsGivenFreq => marg.entry(freq_key(&c)).or_default().push(w),
            Statistic::FreqGivenRecords => marg.entry(r.to_string()).or_default().push(w),
            _ => {}
        }
    }
    if matches!(statistic, Statistic::RecordsGivenFreq | Statistic::FreqGivenRecords) {
        let marg: BTreeMap<String, LogProb> = marg.into_iter().map(|(k, v)| (k, log_sum(&v))).collect();
        let mut cond = BTreeMap::new();
        for (key, ws) in map {
            let (c, r) = key.split_once('|').expect("joint key");
            let given = if statistic == Statistic::RecordsGivenFreq { c } else { r };
            let den = marg[given];
            if den.is_zero() {
                continue;
            }
            cond.insert(key, vec![log_sum(&ws) / den]);
        }
        return Ok(ExactLawTable::from_map(statistic, n, model, cond));
    }
    Ok(ExactLawTable::from_map(statistic, n, model, map))
}

/// The same law built from the closed-form expressions of [`laws`].
pub fn law_from_formulas(model: &GibbsModel, n: usize, statistic: Statistic) -> Result<ExactLawTable> {
    check_n(model, n)?;
    let alpha = model.alpha();
    let mut map: BTreeMap<String, Vec<LogProb>> = BTreeMap::new();
    let all_comps = || (1..=n).flat_map(move |k| compositions(n, k));
    match statistic {
        Statistic::Partition => {
            for p in enumerate_partitions(n)? {
                map.insert(p.to_string(), vec![laws::eppf(model, &p.frequencies())?]);
            }
        }
        Statistic::FreqOrdered => {
            for c in all_comps() {
                map.insert(freq_key(&c), vec![laws::ordered_pmf(model, &c)?]);
            }
        }
        Statistic::FreqUnordered => {
            for c in all_comps().filter(|c| c.parts().windows(2).all(|w| w[0] >= w[1])) {
                map.insert(unordered_key(&c), vec![laws::unordered_pmf(model, &c)?]);
            }
        }
        Statistic::Records => {
            for k in 1..=n {
                for r in record_vectors(n, k) {
                    map.insert(r.to_string(), vec![laws::record_marginal(model, n, &r)?]);
                }
            }
        }
        Statistic::Joint => {
            for c in all_comps() {
                for r in compatible_records(&c) {
                    map.insert(joint_key(&c, &r), vec![laws::joint_pmf(model, &c, &r)?]);
                }
            }
        }
        Statistic::K => {
            for k in 1..=n {
                map.insert(k.to_string(), vec![laws::kn_pmf(model, n, k)?]);
            }
        }
        Statistic::RecordsGivenFreq => {
            for c in all_comps() {
                if laws::ordered_pmf(model, &c)?.is_zero() {
                    continue;
                }
                for r in compatible_records(&c) {
                    map.insert(joint_key(&c, &r), vec![laws::cond_records_given_freq(&c, &r)]);
                }
            }
        }
        Statistic::FreqGivenRecords => {
            for k in 1..=n {
                for r in record_vectors(n, k) {
                    if laws::record_marginal(model, n, &r)?.is_zero() {
                        continue;
                    }
                    for c in enumerate_compatible_compositions(&r, n) {
                        map.insert(joint_key(&c, &r), vec![laws::cond_freq_given_records(alpha, &c, &r)?]);
                    }
                }
            }
        }
    }
    Ok(ExactLawTable::from_map(statistic, n, model, map))
}

/// Result of comparing two exact tables point by point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawComparison {
    pub statistic: String,
    pub n: usize,
    pub model: serde_json::Value,
    pub max_rel_err: f64,
    pub worst_point: Option<String>,
    pub pass: bool,
    /// Support points with positive mass in only one of the tables.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mismatched_support: Vec<String>,
}

/// Relative error of `a` against the reference `b` at every support point.
/// Points absent from one table count as zero there; a positive mass
/// facing zero is a support mismatch and fails the comparison.
pub fn compare_laws(a: &ExactLawTable, b: &ExactLawTable, rel_tol: f64) -> LawComparison {
    let mut keys: Vec<&str> = a.support.iter().chain(&b.support).map(String::as_str).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut max_rel_err: f64 = 0.0;
    let mut worst_point = None;
    let mut mismatched = Vec::new();
    for key in keys {
        let pa = a.get(key).unwrap_or(LogProb::ZERO);
        let pb = b.get(key).unwrap_or(LogProb::ZERO);
        if pa.is_zero() != pb.is_zero() {
            mismatched.push(key.to_string());
            continue;
        }
        let e = pa.rel_err(pb);
        if e > max_rel_err || e.is_nan() {
            max_rel_err = if e.is_nan() { f64::INFINITY } else { e };
            worst_point = Some(key.to_string());
        }
    }
    let model = serde_json::from_str(&b.model).unwrap_or(serde_json::Value::String(b.model.clone()));
    LawComparison {
        statistic: b.statistic.to_string(),
        n: b.n,
        model,
        max_rel_err,
        worst_point,
        pass: max_rel_err <= rel_tol && mismatched.is_empty(),
        mismatched_support: mismatched,
    }
}

/// Pearson test of Monte Carlo counts against an exact table. Keys outside
/// the support make the statistic infinite.
pub fn compare_counts(exact: &ExactLawTable, counts: &BTreeMap<String, u64>, min_expected: f64) -> Result<ChiSquareTest> {
    let mut obs = Vec::with_capacity(exact.len());
    let mut probs = Vec::with_capacity(exact.len());
    for (key, p) in exact.iter() {
        obs.push(counts.get(key).copied().unwrap_or(0));
        probs.push(p.value());
    }
    let stray: u64 = counts
        .iter()
        .filter(|(k, _)| exact.get(k).is_none())
        .map(|(_, c)| *c)
        .sum();
    if stray > 0 {
        return Ok(ChiSquareTest {
            statistic: f64::INFINITY,
            df: exact.len().saturating_sub(1),
            p_value: 0.0,
        });
    }
    chi_square_gof(&obs, &probs, min_expected)
}

/// Pointwise mixture `lambda a + (1 - lambda) b` of two models with the
/// same `alpha`, as an explicit table up to `n_max`.
pub fn mix_models(a: &GibbsModel, b: &GibbsModel, lambda: f64, n_max: usize) -> Result<GibbsModel> {
    if a.alpha() != b.alpha() {
        return Err(invalid("mixed models must share alpha"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("mixing weight must lie in [0, 1], got {lambda}")));
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let row = (1..=n)
            .map(|k| Ok(lambda * a.v(n, k)?.value() + (1.0 - lambda) * b.v(n, k)?.value()))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows[0][0] = 1.0;
    GibbsModel::from_table(a.alpha(), rows)
}

/// Pointwise mixture of two tables over the same statistic.
pub fn mix_tables(a: &ExactLawTable, b: &ExactLawTable, lambda: f64) -> ExactLawTable {
    let mut map: BTreeMap<String, Vec<LogProb>> = BTreeMap::new();
    for (k, p) in a.iter() {
        map.entry(k.to_string()).or_default().push(LogProb::from_f64(lambda) * p);
    }
    for (k, p) in b.iter() {
        map.entry(k.to_string()).or_default().push(LogProb::from_f64(1.0 - lambda) * p);
    }
    let (support, probs) = map.into_iter().map(|(k, v)| (k, log_sum(&v))).unzip();
    ExactLawTable {
        statistic: a.statistic,
        n: a.n,
        model: "mixture".into(),
        support,
        probs,
    }
}

/// `S_alpha(n, k)` as `n!/k! [x^n] g(x)^k` with
/// `g(x) = (1 - (1 - x)^alpha) / alpha = sum_r g_r x^r`,
/// `g_1 = 1`, `g_{r+1} = g_r (r - alpha) / (r + 1)`.
pub fn stirling_by_series(n: usize, k: usize, alpha: f64) -> f64 {
    if k == 0 || k > n {
        return 0.0;
    }
    let mut g = vec![0.0; n + 1];
    g[1] = 1.0;
    for r in 1..n {
        g[r + 1] = g[r] * (r as f64 - alpha) / (r + 1) as f64;
    }
    let mut pow = vec![0.0; n + 1];
    pow[0] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; n + 1];
        for (i, &pi) in pow.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for r in 1..=n - i {
                next[i + r] += pi * g[r];
            }
        }
        pow = next;
    }
    pow[n] * (ln_factorial(n) - ln_factorial(k)).exp()
}

/// Bell numbers by the Bell triangle.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..n {
        let mut next = vec![*row.last().unwrap()];
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    *row.last().unwrap()
}

/// Record indices of an i.i.d. sample from the categories `1..=k` with
/// probabilities `x` (summing to 1), kept only when the categories first
/// appear in the order `1, 2, ..., k`. Returns `None` for a rejected run.
pub fn records_by_iid_sampling<R: rand::Rng + ?Sized>(x: &[f64], rng: &mut R) -> Result<Option<RecordIndexVector>> {
    let total: f64 = x.iter().sum();
    if x.is_empty() || x.iter().any(|&v| !(v > 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(invalid("x must be positive and sum to 1"));
    }
    let k = x.len();
    let mut seen = 0;
    let mut out = Vec::with_capacity(k);
    let mut pos = 0;
    while seen < k {
        pos += 1;
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut cat = k - 1;
        for (j, &v) in x.iter().enumerate() {
            acc += v;
            if u < acc {
                cat = j;
                break;
            }
        }
        if cat == seen {
            out.push(pos);
            seen += 1;
        } else if cat > seen {
            return Ok(None);
        }
    }
    Ok(Some(RecordIndexVector::new(out)?))
}

/// `E(prod_j X_j^{n_j})` under the two-parameter GEM law:
/// `(theta)_(n)^{-1} prod_j (1-alpha)_(n_j) (theta + alpha(j-1)) / (theta + alpha(j-1) + n - S_{j-1})`.
pub fn gem_joint_moment(alpha: f64, theta: f64, ns: &[usize]) -> Result<f64> {
    let n: usize = ns.iter().sum();
    let mut acc = crate::combin::log_rising(theta, n as f64)?.recip();
    let mut s = 0;
    for (j, &nj) in ns.iter().enumerate() {
        let t = theta + alpha * j as f64;
        acc = acc
            * crate::combin::log_rising(1.0 - alpha, nj as f64)?
            * LogProb::from_f64(t / (t + (n - s) as f64));
        s += nj;
    }
    Ok(acc.value())
}

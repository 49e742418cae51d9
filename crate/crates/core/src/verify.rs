//! Self-checks shared by the command line and the acceptance tests. Each
//! suite returns a report of named checks, each a value compared against a
//! threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::combin::{gen_stirling, log_rising, RecordIndexVector};
use crate::error::{invalid, GibbsError, Result};
use crate::laws::{self, MellinTable, Which};
use crate::logprob::LogProb;
use crate::model::{Family, GibbsModel};
use crate::oracle::{self, Statistic};
use crate::quad::{integrate, QuadOptions};
use crate::sim::{self, par_draws, RngStream, TailLaw, Truncation};
use crate::stats::{chi_square_gof, chi_square_two_sample, ks_one_sample, ks_two_sample, mean_se, z_score};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// Passes when `value <= threshold` (errors, z-scores).
    #[serde(rename = "<=")]
    AtMost,
    /// Passes when `value > threshold` (p-values).
    #[serde(rename = ">")]
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            threshold,
            pass: value <= threshold,
            detail: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            value,
            relation: Relation::Above,
            threshold,
            pass: value > threshold,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub model: serde_json::Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, model: &GibbsModel) -> Self {
        SuiteReport {
            suite: suite.name().to_string(),
            model: serde_json::from_str(&model.spec().to_json()).unwrap_or(serde_json::Value::Null),
            pass: true,
            skipped: None,
            checks: Vec::new(),
        }
    }

    fn skip(mut self, why: impl Into<String>) -> Self {
        self.skipped = Some(why.into());
        self
    }

    fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// The check furthest past (or closest to) its threshold.
    pub fn worst(&self) -> Option<&Check> {
        let badness = |c: &Check| match c.relation {
            Relation::AtMost => c.value / c.threshold.max(f64::MIN_POSITIVE),
            Relation::Above => c.threshold / c.value.max(f64::MIN_POSITIVE),
        };
        self.checks.iter().max_by(|a, b| badness(a).total_cmp(&badness(b)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Oracle,
    Recursion,
    Stirling,
    Mellin,
    Nacu,
    Conditional,
    Geometric,
    LogDecomp,
    Mixture,
    UrnGem,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Oracle,
        Suite::Recursion,
        Suite::Stirling,
        Suite::Conditional,
        Suite::Mellin,
        Suite::Geometric,
        Suite::Nacu,
        Suite::LogDecomp,
        Suite::Mixture,
        Suite::UrnGem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Recursion => "recursion",
            Suite::Stirling => "stirling",
            Suite::Mellin => "mellin",
            Suite::Nacu => "nacu",
            Suite::Conditional => "conditional",
            Suite::Geometric => "geometric",
            Suite::LogDecomp => "logdecomp",
            Suite::Mixture => "mixture",
            Suite::UrnGem => "urn-gem",
        }
    }

    /// Suites selected by a name, `all` giving every suite.
    pub fn parse_selection(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            Ok(Suite::ALL.to_vec())
        } else {
            Ok(vec![s.parse()?])
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = GibbsError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite '{s}'")))
    }
}

/// Run-wide settings. `mc_scale` multiplies every Monte Carlo size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub max_n: usize,
    pub mc_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 0,
            max_n: 8,
            mc_scale: 1.0,
        }
    }
}

impl RunConfig {
    fn size(&self, base: usize) -> usize {
        ((base as f64 * self.mc_scale).round() as usize).max(200)
    }
}

/// Runs `suite` with its default parameters.
pub fn run_suite(suite: Suite, model: &GibbsModel, cfg: &RunConfig) -> Result<SuiteReport> {
    let seed = cfg.seed;
    let jobs = cfg.jobs;
    match suite {
        Suite::Oracle => oracle_suite(model, &OracleParams { max_n: cfg.max_n, ..Default::default() }),
        Suite::Recursion => recursion_suite(model, &RecursionParams::for_model(model)),
        Suite::Stirling => stirling_suite(model, &StirlingParams::default()),
        Suite::Mellin => mellin_suite(model, &MellinParams::for_model(model)),
        Suite::Nacu => nacu_suite(model, &NacuParams { seed, ..Default::default() }),
        Suite::Conditional => {
            let d = ConditionalParams::default();
            conditional_suite(model, &ConditionalParams { draws: cfg.size(d.draws), seed, jobs, ..d })
        }
        Suite::Geometric => {
            let d = GeometricParams::default();
            geometric_suite(model, &GeometricParams { draws: cfg.size(d.draws), seed, jobs, ..d })
        }
        Suite::LogDecomp => {
            let d = LogDecompParams::default();
            logdecomp_suite(model, &LogDecompParams { draws: cfg.size(d.draws), seed, jobs, ..d })
        }
        Suite::Mixture => {
            let d = MixtureParams::default();
            mixture_suite(model, &MixtureParams { accepted: cfg.size(d.accepted), seed, jobs, ..d })
        }
        Suite::UrnGem => {
            let d = UrnGemParams::default();
            urn_gem_suite(
                model,
                &UrnGemParams {
                    gem_draws: cfg.size(d.gem_draws),
                    urn_draws: cfg.size(d.urn_draws),
                    seed,
                    jobs,
                    ..d
                },
            )
        }
    }
}

// Monte Carlo suites use distinct seeds derived from the run seed so that
// suites run together stay independent.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

fn with_n_max(model: &GibbsModel, n_max: usize) -> Result<GibbsModel> {
    if model.n_max() >= n_max {
        return Ok(model.clone());
    }
    model.spec().clone().with_n_max(n_max).build()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn is_ewens(model: &GibbsModel) -> Option<f64> {
    match model.family() {
        Family::Ewens { theta } => Some(*theta),
        Family::TwoParameter { theta } if model.alpha() == 0.0 => Some(*theta),
        _ => None,
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct OracleParams {
    pub max_n: usize,
    pub rel_tol: f64,
    pub chain_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            max_n: 8,
            rel_tol: 1e-10,
            chain_tol: 1e-12,
        }
    }
}

/// Closed-form laws against enumeration of all set partitions, plus the
/// product-of-transitions identity for the record marginal.
pub fn oracle_suite(model: &GibbsModel, p: &OracleParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Oracle, model);
    for st in Statistic::ALL {
        let mut worst: f64 = 0.0;
        let mut at = String::new();
        let mut support_ok = true;
        for n in 1..=p.max_n {
            let exact = oracle::exact_law(model, n, st)?;
            let formula = oracle::law_from_formulas(model, n, st)?;
            let cmp = oracle::compare_laws(&formula, &exact, p.rel_tol);
            support_ok &= cmp.mismatched_support.is_empty();
            if cmp.max_rel_err >= worst {
                worst = cmp.max_rel_err;
                at = format!("n={n} at {}", cmp.worst_point.unwrap_or_default());
            }
        }
        let value = if support_ok { worst } else { f64::INFINITY };
        rep.push(Check::at_most(format!("{st} n<={}", p.max_n), value, p.rel_tol).with_detail(at));
    }
    let mut worst: f64 = 0.0;
    for n in 1..=p.max_n {
        for k in 1..=n {
            for rec in crate::combin::record_vectors(n, k) {
                let direct = laws::record_marginal(model, rec.last(), &rec)?;
                if direct.is_zero() {
                    // later transitions would condition on a null event
                    continue;
                }
                let idx = rec.indices();
                let mut chain = LogProb::ONE;
                for j in 1..k {
                    chain = chain * laws::record_transition(model, j, idx[j - 1], idx[j])?;
                }
                worst = worst.max(chain.rel_err(direct));
            }
        }
    }
    rep.push(Check::at_most("record chain product", worst, p.chain_tol));
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct RecursionParams {
    pub n_hi: usize,
    pub tol: f64,
    pub norm_tol: f64,
}

impl RecursionParams {
    /// Quadrature-backed families get a looser residual tolerance.
    pub fn for_model(model: &GibbsModel) -> Self {
        let tol = match model.family() {
            Family::PoissonKingmanHalf { .. } => 1e-6,
            _ => 1e-9,
        };
        RecursionParams { n_hi: 12, tol, norm_tol: 1e-9 }
    }
}

pub fn recursion_suite(model: &GibbsModel, p: &RecursionParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Recursion, model);
    let model = with_n_max(model, p.n_hi + 1)?;
    rep.push(Check::at_most(format!("triangle residual n<={}", p.n_hi), model.recursion_residual(p.n_hi)?, p.tol));
    let v11 = model.v(1, 1)?;
    rep.push(
        Check::at_most("V(1,1) == 1", if v11 == LogProb::ONE { 0.0 } else { 1.0 }, 0.0)
            .with_detail(format!("{}", v11.value())),
    );
    let mut worst: f64 = 0.0;
    for n in 1..=p.n_hi {
        let total: LogProb = (1..=n).map(|k| laws::kn_pmf(&model, n, k)).collect::<Result<Vec<_>>>()?.iter().sum();
        worst = worst.max((total.value() - 1.0).abs());
    }
    rep.push(Check::at_most(format!("sum_k P(K_n=k) = 1, n<={}", p.n_hi), worst, p.norm_tol));
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct StirlingParams {
    pub alphas: Vec<f64>,
    pub series_max_n: usize,
    pub series_tol: f64,
    /// Alternating form checked for `k + i <= alt_max_sum`.
    pub alt_max_sum: usize,
    pub alt_tol: f64,
}

impl Default for StirlingParams {
    fn default() -> Self {
        StirlingParams {
            alphas: vec![-1.0, -0.5, 0.0, 0.25, 0.5, 0.9],
            series_max_n: 8,
            series_tol: 1e-10,
            alt_max_sum: 20,
            alt_tol: 1e-6,
        }
    }
}

/// Generalized Stirling numbers by the triangular recursion against the
/// power-series definition, and the alternating form of the `i_k` law
/// against the Stirling form. The model contributes its own `alpha`.
pub fn stirling_suite(model: &GibbsModel, p: &StirlingParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Stirling, model);
    let mut alphas = p.alphas.clone();
    if !alphas.contains(&model.alpha()) {
        alphas.push(model.alpha());
    }
    for &a in &alphas {
        let mut worst: f64 = 0.0;
        for n in 1..=p.series_max_n {
            for k in 1..=n {
                let rec = gen_stirling(n, k, a)?.value();
                let ser = oracle::stirling_by_series(n, k, a);
                worst = worst.max(rel(rec, ser));
            }
        }
        rep.push(Check::at_most(format!("series alpha={a}"), worst, p.series_tol));
    }
    for &a in alphas.iter().filter(|&&a| a != 0.0) {
        // V cancels from the comparison, so any model with this alpha will do
        let m = if a == model.alpha() {
            with_n_max(model, p.alt_max_sum + 1)?
        } else if a < 0.0 {
            GibbsModel::two_parameter(a, -a * p.alt_max_sum as f64, p.alt_max_sum + 1)?
        } else {
            GibbsModel::two_parameter(a, 1.0, p.alt_max_sum + 1)?
        };
        let mut worst: f64 = 0.0;
        let mut at = String::new();
        for k in 1..=p.alt_max_sum / 2 {
            for i in k..=p.alt_max_sum - k {
                let s = laws::ik_marginal(&m, k, i)?;
                let alt = laws::ik_marginal_alternating(&m, k, i)?;
                if s.is_zero() && alt.value().abs() < 1e-300 {
                    continue;
                }
                let e = rel(alt.value(), s.value());
                if e >= worst {
                    worst = e;
                    at = format!("k={k}, i={i}");
                }
            }
        }
        rep.push(Check::at_most(format!("alternating i_k law alpha={a}"), worst, p.alt_tol).with_detail(at));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct MellinParams {
    pub max_m: usize,
    pub max_i: usize,
    pub max_moment: usize,
    pub tol: f64,
    pub ewens_tol: f64,
    pub phis: Vec<f64>,
}

impl MellinParams {
    pub fn for_model(model: &GibbsModel) -> Self {
        let tol = match model.family() {
            Family::PoissonKingmanHalf { .. } => 1e-6,
            _ => 1e-9,
        };
        MellinParams {
            max_m: 3,
            max_i: 6,
            max_moment: 3,
            tol,
            ewens_tol: 1e-12,
            phis: vec![0.5, 1.5, std::f64::consts::PI],
        }
    }
}

/// Mellin transforms at integer order against the moment formulas, the
/// shift identity at real order, monotonicity in the order, and the Ewens
/// closed form.
pub fn mellin_suite(model: &GibbsModel, p: &MellinParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Mellin, model);
    let model = with_n_max(model, p.max_i + p.max_moment + 2)?;
    let table = MellinTable::new(&model);
    let cells: Vec<(usize, usize)> = (1..=p.max_m)
        .flat_map(|m| (m..=p.max_i).map(move |i| (m, i)))
        .filter(|&(m, i)| laws::ik_marginal(&model, m, i).map(|q| q.is_positive()).unwrap_or(false))
        .collect();
    let mut worst: f64 = 0.0;
    for &(m, i) in &cells {
        for n in 0..=p.max_moment {
            let mw = table.moment(m, i, n as f64, Which::W)?;
            let mx = table.moment(m, i, n as f64, Which::X)?;
            worst = worst.max(rel(mw, laws::cond_moment_w(&model, m, i, n)?.value()));
            worst = worst.max(rel(mx, laws::cond_moment_x(&model, m, i, n)?.value()));
        }
    }
    rep.push(Check::at_most("integer order vs moments", worst, p.tol));

    let real_ok = !matches!(model.family(), Family::ExplicitTable { .. });
    if !real_ok {
        rep.push(
            Check::at_most("real order", 0.0, 0.0).with_detail("explicit tables support integer orders only"),
        );
        return Ok(rep);
    }
    // E(W_m^{phi+n-m} | i_m = m) = E(W_m^phi | i_m = n) E(W_m^{n-m} | i_m = m)
    let mut worst: f64 = 0.0;
    for m in 1..=p.max_m {
        if !cells.contains(&(m, m)) {
            continue;
        }
        for n in m..=p.max_i {
            if !cells.contains(&(m, n)) {
                continue;
            }
            for &phi in &p.phis {
                let lhs = table.moment(m, m, phi + (n - m) as f64, Which::W)?;
                let rhs = table.moment(m, n, phi, Which::W)? * table.moment(m, m, (n - m) as f64, Which::W)?;
                worst = worst.max(rel(rhs, lhs));
            }
        }
    }
    rep.push(Check::at_most("shift identity", worst, p.tol));

    let mut violations = 0usize;
    for &(m, i) in &cells {
        let mut prev = f64::INFINITY;
        for step in 0..=16 {
            let v = table.moment(m, i, step as f64 * 0.25, Which::W)?;
            if v > prev * (1.0 + 1e-12) {
                violations += 1;
            }
            prev = v;
        }
    }
    rep.push(Check::at_most("E(W^phi) nonincreasing in phi", violations as f64, 0.0));

    if let Some(theta) = is_ewens(&model) {
        let mut worst: f64 = 0.0;
        for &phi in &p.phis {
            let got = table.v_phi(1, 1, phi)?.value();
            let want = log_rising(theta + 1.0, phi)?.recip().value();
            worst = worst.max(rel(got, want));
        }
        rep.push(Check::at_most("V(1,1)[phi] = 1/(theta+1)_phi", worst, p.ewens_tol));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct NacuParams {
    pub cases: usize,
    pub max_n: usize,
    pub max_k: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NacuParams {
    fn default() -> Self {
        NacuParams {
            cases: 50,
            max_n: 9,
            max_k: 4,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// A random record vector with `k` entries and last entry at most `n`,
/// and random positive frequencies of total below 1.
pub fn random_nacu_case<R: Rng + ?Sized>(max_n: usize, max_k: usize, rng: &mut R) -> (RecordIndexVector, Vec<f64>, usize) {
    let k = rng.random_range(1..=max_k.min(max_n));
    let n = rng.random_range(k.max(1)..=max_n);
    let mut pool: Vec<usize> = (2..=n).collect();
    let mut idx = vec![1];
    for _ in 1..k {
        let p = rng.random_range(0..pool.len());
        idx.push(pool.swap_remove(p));
    }
    idx.sort_unstable();
    let e: Vec<f64> = (0..=k).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let total: f64 = e.iter().sum();
    let x = e[..k].iter().map(|v| v / total).collect();
    (RecordIndexVector::new(idx).expect("increasing from 1"), x, n)
}

pub fn nacu_suite(model: &GibbsModel, p: &NacuParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Nacu, model);
    let mut rng = RngStream::new(sub_seed(p.seed, 7), 0);
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for _ in 0..p.cases {
        let (rec, x, n) = random_nacu_case(p.max_n, p.max_k, &mut rng);
        let (lhs, rhs) = laws::nacu_check(&rec, &x, n)?;
        let e = rel(rhs, lhs);
        if e >= worst {
            worst = e;
            at = format!("records {rec}, n={n}");
        }
    }
    rep.push(Check::at_most(format!("{} random cases", p.cases), worst, p.tol).with_detail(at));
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalParams {
    pub max_m: usize,
    pub max_i: usize,
    pub max_moment: usize,
    pub draws: usize,
    pub horizon: usize,
    pub z: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for ConditionalParams {
    fn default() -> Self {
        ConditionalParams {
            max_m: 3,
            max_i: 6,
            max_moment: 3,
            draws: 200_000,
            horizon: 30,
            z: 4.0,
            seed: 0,
            jobs: 0,
        }
    }
}

/// `(X_m, W_m)` given `i_m`: record prefix given `i_m`, continuation to
/// the horizon, exact tail, stick. Needs the two-parameter tail law.
pub fn sample_front_given_record(
    model: &GibbsModel,
    m: usize,
    i_m: usize,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    let prefix = sim::sample_record_prefix(model, m, i_m, rng)?;
    let chain = sim::continue_records(model, &prefix, horizon.max(i_m), rng)?;
    let tail = TailLaw::for_chain(model, &chain);
    let trunc = Truncation { depth: m, eps: 0.0 };
    let out = sim::sample_freqs_given_records(model.alpha(), &chain.indices, trunc, tail, rng)?;
    Ok((out.x[m - 1], out.w[m - 1]))
}

pub fn conditional_suite(model: &GibbsModel, p: &ConditionalParams) -> Result<SuiteReport> {
    let rep = SuiteReport::new(Suite::Conditional, model);
    if !model.is_closed_form() {
        return Ok(rep.skip("needs the two-parameter tail law"));
    }
    let mut rep = rep;
    let model = with_n_max(model, p.horizon + 2)?;
    let mut tag = 0;
    for m in 1..=p.max_m {
        for i in m..=p.max_i {
            if !laws::ik_marginal(&model, m, i)?.is_positive() {
                continue;
            }
            tag += 1;
            let draws = par_draws(sub_seed(p.seed, 100 + tag), p.draws, p.jobs, |rng| {
                sample_front_given_record(&model, m, i, p.horizon, rng)
            })?;
            for n in 1..=p.max_moment {
                for which in [Which::X, Which::W] {
                    let xs: Vec<f64> = draws
                        .iter()
                        .map(|&(x, w)| if which == Which::X { x } else { w }.powi(n as i32))
                        .collect();
                    let (mean, se) = mean_se(&xs);
                    let target = match which {
                        Which::X => laws::cond_moment_x(&model, m, i, n)?,
                        Which::W => laws::cond_moment_w(&model, m, i, n)?,
                    }
                    .value();
                    let name = format!("E({}_{m}^{n} | i_{m}={i})", if which == Which::X { "X" } else { "W" });
                    rep.push(
                        Check::at_most(name, z_score(mean, se, target), p.z)
                            .with_detail(format!("mc {mean:.6e}, exact {target:.6e}")),
                    );
                }
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricParams {
    pub x: Vec<f64>,
    pub draws: usize,
    pub significance: f64,
    pub z: f64,
    pub min_expected: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for GeometricParams {
    fn default() -> Self {
        GeometricParams {
            x: vec![0.5, 0.3, 0.2],
            draws: 100_000,
            significance: 1e-3,
            z: 4.0,
            min_expected: 10.0,
            seed: 0,
            jobs: 0,
        }
    }
}

/// Records given the frequencies: waiting times against their geometric
/// laws, and the joint law against i.i.d. sampling conditioned on the
/// order of first appearance. Model-free.
pub fn geometric_suite(model: &GibbsModel, p: &GeometricParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Geometric, model);
    let k = p.x.len();
    let sampled = par_draws(sub_seed(p.seed, 200), p.draws, p.jobs, |rng| {
        sim::sample_records_given_freqs(&p.x, k, rng)
    })?;
    let mut w = 0.0;
    for j in 1..k {
        w += p.x[j - 1];
        let gaps: Vec<usize> = sampled.iter().map(|r| r.waiting_times()[j - 1]).collect();
        let t_max = gaps.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0u64; t_max + 2];
        for &g in &gaps {
            counts[g] += 1;
        }
        let probs: Vec<f64> = (0..=t_max + 1)
            .map(|t| if t <= t_max { w.powi(t as i32) * (1.0 - w) } else { w.powi(t as i32) })
            .collect();
        let chi = chi_square_gof(&counts, &probs, p.min_expected)?;
        rep.push(
            Check::above(format!("T_{} ~ Geometric(1 - {w:.3})", j + 1), chi.p_value, p.significance)
                .with_detail(format!("chi2 {:.3}, df {}", chi.statistic, chi.df)),
        );
        let xs: Vec<f64> = gaps.iter().map(|&g| g as f64).collect();
        let (mean, se) = mean_se(&xs);
        rep.push(Check::at_most(format!("E(T_{})", j + 1), z_score(mean, se, w / (1.0 - w)), p.z));
    }
    let direct = par_draws(sub_seed(p.seed, 201), p.draws, p.jobs, |rng| loop {
        if let Some(r) = oracle::records_by_iid_sampling(&p.x, rng)? {
            return Ok(r);
        }
    })?;
    let mut table: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in &sampled {
        table.entry(r.to_string()).or_default().0 += 1;
    }
    for r in &direct {
        table.entry(r.to_string()).or_default().1 += 1;
    }
    let a: Vec<u64> = table.values().map(|c| c.0).collect();
    let b: Vec<u64> = table.values().map(|c| c.1).collect();
    let chi = chi_square_two_sample(&a, &b, (2.0 * p.min_expected) as u64)?;
    rep.push(
        Check::above("joint records vs i.i.d. sampling", chi.p_value, p.significance)
            .with_detail(format!("chi2 {:.3}, df {}", chi.statistic, chi.df)),
    );
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct LogDecompParams {
    pub max_m: usize,
    pub max_i: usize,
    pub draws: usize,
    pub horizon: usize,
    pub significance: f64,
    pub z: f64,
    pub atom_lags: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for LogDecompParams {
    fn default() -> Self {
        LogDecompParams {
            max_m: 2,
            max_i: 4,
            draws: 10_000,
            horizon: 60,
            significance: 1e-3,
            z: 4.0,
            atom_lags: 8,
            seed: 0,
            jobs: 0,
        }
    }
}

/// `exp(-(-log X_m))` from the sum of independent pieces against `X_m` from
/// the stick construction; for Ewens models also the atom of `Z_l` at 0.
pub fn logdecomp_suite(model: &GibbsModel, p: &LogDecompParams) -> Result<SuiteReport> {
    let rep = SuiteReport::new(Suite::LogDecomp, model);
    if !model.is_closed_form() {
        return Ok(rep.skip("needs the two-parameter tail law"));
    }
    let mut rep = rep;
    let model = with_n_max(model, p.horizon + 2)?;
    let mut tag = 0;
    for m in 1..=p.max_m {
        for i in m..=p.max_i {
            if !laws::ik_marginal(&model, m, i)?.is_positive() {
                continue;
            }
            tag += 1;
            let a = par_draws(sub_seed(p.seed, 300 + tag), p.draws, p.jobs, |rng| {
                Ok((-sim::sample_neg_log_xm(&model, m, i, p.horizon, rng)?.value).exp())
            })?;
            let b = par_draws(sub_seed(p.seed, 400 + tag), p.draws, p.jobs, |rng| {
                Ok(sample_front_given_record(&model, m, i, p.horizon, rng)?.0)
            })?;
            let ks = ks_two_sample(&a, &b);
            rep.push(
                Check::above(format!("X_{m} | i_{m}={i}: log sum vs stick"), ks.p_value, p.significance)
                    .with_detail(format!("D {:.5}", ks.statistic)),
            );
            if let Some(theta) = is_ewens(&model) {
                let horizon = i + p.atom_lags;
                let paths = par_draws(sub_seed(p.seed, 500 + tag), p.draws, p.jobs, |rng| {
                    sim::sample_z_path(&model, m, i, horizon, rng)
                })?;
                let mut worst: f64 = 0.0;
                for (off, l) in (i + 1..=horizon).enumerate() {
                    let xs: Vec<f64> =
                        paths.iter().map(|z| if z.z[off] == 0.0 { 1.0 } else { 0.0 }).collect();
                    let (mean, se) = mean_se(&xs);
                    let target = (l as f64 - 1.0) / (l as f64 + theta - 1.0);
                    worst = worst.max(z_score(mean, se, target));
                }
                rep.push(Check::at_most(format!("P(Z_l = 0) | i_{m}={i}"), worst, p.z));
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureParams {
    pub ks: Vec<usize>,
    pub max_i: usize,
    pub quad_tol: f64,
    pub urn_n: usize,
    pub target_i2: usize,
    pub accepted: usize,
    pub significance: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            ks: vec![2, 3],
            max_i: 6,
            quad_tol: 1e-6,
            urn_n: 200,
            target_i2: 3,
            accepted: 50_000,
            significance: 1e-3,
            seed: 0,
            jobs: 0,
        }
    }
}

/// `int_0^1 f(y, 1 - y) dy` for `f` with integrable power singularities of
/// order at least `-alpha` at both ends. Each half is mapped by
/// `y = u^p / 2` with `p = 2 / (1 - alpha)`, which turns such a singularity
/// into a smooth factor; `f` also receives the complement, computed without
/// cancellation.
fn integrate_unit<F: Fn(f64, f64) -> f64>(f: F, alpha: f64, opts: &QuadOptions) -> Result<f64> {
    let p = 2.0 / (1.0 - alpha.max(0.0));
    let edge = |u: f64| 0.5 * u.powf(p);
    let jac = |u: f64| 0.5 * p * u.powf(p - 1.0);
    let left = integrate(
        |u| {
            let y = edge(u);
            if y == 0.0 { 0.0 } else { f(y, 1.0 - y) * jac(u) }
        },
        0.0,
        1.0,
        opts,
    )?;
    let right = integrate(
        |u| {
            let c = edge(u);
            if c == 0.0 { 0.0 } else { f(1.0 - c, c) * jac(u) }
        },
        0.0,
        1.0,
        opts,
    )?;
    Ok(left.value + right.value)
}

/// Total mass of the front density on the simplex `{x_1 + .. + x_k = w}`.
pub fn front_density_mass(model: &GibbsModel, k: usize, i_k: usize, w: f64, tol: f64) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: tol * 1e-3,
        rel_tol: tol * 1e-3,
        max_intervals: 4000,
    };
    let alpha = model.alpha();
    let dens = |x: &[f64]| laws::front_density(model, k, i_k, w, x).unwrap_or(f64::NAN);
    match k {
        1 => Ok(1.0),
        // x_1 = w y
        2 => Ok(w * integrate_unit(|y, c| dens(&[w * y, w * c]), alpha, &opts)?),
        // x_1 = w y, x_2 = w (1 - y) t
        3 => {
            let inner = |y: f64, c: f64| -> f64 {
                let r = w * c;
                integrate_unit(|t, d| dens(&[w * y, r * t, r * d]), alpha, &opts)
                    .map(|v| r * v)
                    .unwrap_or(f64::NAN)
            };
            Ok(w * integrate_unit(inner, alpha, &opts)?)
        }
        _ => Err(invalid(format!("front density mass is implemented for k <= 3, got {k}"))),
    }
}

/// Normalization of the Dirichlet-mixture density, and the law of
/// `X_1 / W_2` given `i_2` against urn output.
pub fn mixture_suite(model: &GibbsModel, p: &MixtureParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Mixture, model);
    for &k in &p.ks {
        let mut worst: f64 = 0.0;
        for i in k..=p.max_i {
            for w in [0.35, 1.0] {
                let mass = front_density_mass(model, k, i, w, p.quad_tol)?;
                worst = worst.max((mass - 1.0).abs());
            }
        }
        rep.push(Check::at_most(format!("density mass k={k}, i_k<={}", p.max_i), worst, p.quad_tol));
    }

    let t = p.target_i2;
    let model = with_n_max(model, p.urn_n + 1)?;
    let hit = laws::ik_marginal(&model, 2, t)?.value();
    if !(hit > 0.0) {
        return Ok(rep.skip(format!("P(i_2 = {t}) = 0")));
    }
    let mean = p.accepted as f64 / hit;
    let draws = (mean + 6.0 * (mean * (1.0 - hit)).sqrt() / hit.sqrt() + 100.0).ceil() as usize;
    let alpha = model.alpha();
    // KS runs on the probability-integral transform: for alpha near 1 a
    // visible share of draws lies within one ulp of 1, so the upper half is
    // evaluated from the complement 1 - y, which the Beta sampler returns
    // without cancellation.
    let us = par_draws(sub_seed(p.seed, 600), draws, p.jobs, |rng| {
        let u = sim::sample_urn(&model, p.urn_n, rng)?;
        let idx = u.records.indices();
        if idx.len() < 2 || idx[1] != t {
            return Ok(None);
        }
        let parts = u.partition.frequencies();
        let (n1, n2) = (parts.parts()[0] as f64, parts.parts()[1] as f64);
        let (y, c) = sim::beta_pair(n1 - alpha, n2 - alpha, rng)?;
        let pit = if y <= 0.5 {
            laws::front_ratio_cdf(alpha, 2, t, y)?
        } else {
            1.0 - laws::front_ratio_sf_near_one(alpha, 2, t, c)?
        };
        Ok(Some(pit))
    })?;
    let us: Vec<f64> = us.into_iter().flatten().take(p.accepted).collect();
    rep.push(Check::at_most("accepted urn runs short of target", (p.accepted - us.len()) as f64, 0.0));
    let ks = ks_one_sample(&us, |u| u.clamp(0.0, 1.0));
    rep.push(
        Check::above(format!("X_1/W_2 | i_2={t}, urn n={}", p.urn_n), ks.p_value, p.significance)
            .with_detail(format!("D {:.5}, N {}", ks.statistic, us.len())),
    );
    Ok(rep)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct UrnGemParams {
    pub gem_draws: usize,
    pub moments: Vec<Vec<usize>>,
    pub urn_n: usize,
    pub urn_draws: usize,
    pub significance: f64,
    pub z: f64,
    pub min_expected: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for UrnGemParams {
    fn default() -> Self {
        UrnGemParams {
            gem_draws: 100_000,
            moments: vec![vec![1], vec![2], vec![0, 1], vec![1, 1], vec![2, 1], vec![1, 2], vec![0, 0, 1], vec![1, 1, 1]],
            urn_n: 6,
            urn_draws: 500_000,
            significance: 1e-3,
            z: 4.0,
            min_expected: 10.0,
            seed: 0,
            jobs: 0,
        }
    }
}

/// GEM joint moments against their closed form; urn block counts and
/// partitions against the exact laws.
pub fn urn_gem_suite(model: &GibbsModel, p: &UrnGemParams) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::UrnGem, model);
    if let (true, Some(theta)) = (model.is_closed_form(), model.theta()) {
        let depth = p.moments.iter().map(Vec::len).max().unwrap_or(1);
        let alpha = model.alpha();
        let sticks = par_draws(sub_seed(p.seed, 700), p.gem_draws, p.jobs, |rng| {
            let out = sim::sample_gem(alpha, theta, Truncation { depth, eps: 0.0 }, rng)?;
            let mut x = out.x;
            x.resize(depth, 0.0);
            Ok(x)
        })?;
        for ns in &p.moments {
            let xs: Vec<f64> = sticks
                .iter()
                .map(|x| ns.iter().zip(x).map(|(&n, v)| v.powi(n as i32)).product())
                .collect();
            let (mean, se) = mean_se(&xs);
            let target = oracle::gem_joint_moment(alpha, theta, ns)?;
            rep.push(
                Check::at_most(format!("GEM E(prod X^n), n=({})", crate::combin::join(ns)), z_score(mean, se, target), p.z)
                    .with_detail(format!("mc {mean:.6e}, exact {target:.6e}")),
            );
        }
    }
    let n = p.urn_n;
    let model = with_n_max(model, n + 1)?;
    let parts = par_draws(sub_seed(p.seed, 800), p.urn_draws, p.jobs, |rng| {
        Ok(sim::sample_urn(&model, n, rng)?.partition.to_string())
    })?;
    let mut k_counts = vec![0u64; n];
    let mut p_counts: BTreeMap<String, u64> = BTreeMap::new();
    for s in &parts {
        k_counts[s.split('|').count() - 1] += 1;
        *p_counts.entry(s.clone()).or_default() += 1;
    }
    let kn: Vec<f64> = (1..=n).map(|k| laws::kn_pmf(&model, n, k).map(|q| q.value())).collect::<Result<_>>()?;
    let chi = chi_square_gof(&k_counts, &kn, p.min_expected)?;
    rep.push(
        Check::above(format!("urn K_{n} law"), chi.p_value, p.significance)
            .with_detail(format!("chi2 {:.3}, df {}", chi.statistic, chi.df)),
    );
    if n <= oracle::MAX_N {
        let exact = oracle::exact_law(&model, n, Statistic::Partition)?;
        let chi = oracle::compare_counts(&exact, &p_counts, p.min_expected)?;
        rep.push(
            Check::above(format!("urn partition law n={n}"), chi.p_value, p.significance)
                .with_detail(format!("chi2 {:.3}, df {}", chi.statistic, chi.df)),
        );
    }
    Ok(rep)
}

//! Seeded samplers for Gibbs partitions: the sequential urn, the record
//! chain, conditional stick-breaking given records, GEM, geometric waiting
//! times given frequencies, the log decomposition of `-log X_m`, and
//! size-biased permutation.
//!
//! Every sampler takes an explicit [`RngStream`]; identical seeds, stream
//! ids and arguments give bit-identical output.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Gamma, Geometric};
use rayon::prelude::*;

use crate::combin::{AgeOrderedPartition, RecordIndexVector};
use crate::error::{invalid, out_of_range, Result};
use crate::laws::record_survival;
use crate::logprob::LogProb;
use crate::model::{Family, GibbsModel};

/// Generator name recorded in sample metadata.
pub const GENERATOR: &str = "chacha20";

/// Default residual-mass threshold for stick truncation.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Draws per stream in the parallel harness. Fixed so that output does
/// not depend on the number of worker threads.
pub const DRAWS_PER_STREAM: usize = 4096;

/// A reproducible random stream: ChaCha20 keyed by `seed`, with
/// `stream_id` selecting an independent keystream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Runs `draws` independent draws of `f`, `DRAWS_PER_STREAM` per stream,
/// stream ids `0, 1, ...`, on up to `jobs` threads. Results are ordered by
/// stream then draw index.
pub fn par_draws<T, F>(seed: u64, draws: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let streams = draws.div_ceil(DRAWS_PER_STREAM);
    let run = || {
        (0..streams)
            .into_par_iter()
            .map(|s| {
                let mut rng = RngStream::new(seed, s as u64);
                let len = DRAWS_PER_STREAM.min(draws - s * DRAWS_PER_STREAM);
                (0..len).map(|_| f(&mut rng)).collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<Vec<T>>>>()
    };
    let chunks = if jobs == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| invalid(e.to_string()))?
            .install(run)?
    };
    Ok(chunks.into_iter().flatten().collect())
}

/// `(B, 1 - B)` for `B ~ Beta(a, b)`, both computed from the Gamma pair so
/// that neither loses precision near 0 or 1.
pub fn beta_pair<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("Beta parameters must be positive, got ({a}, {b})")));
    }
    let ga = Gamma::new(a, 1.0).map_err(|e| invalid(e.to_string()))?.sample(rng);
    let gb = Gamma::new(b, 1.0).map_err(|e| invalid(e.to_string()))?.sample(rng);
    let s = ga + gb;
    if s == 0.0 {
        // both underflowed (tiny shapes); fall back to a fair coin
        return Ok(if rng.random::<bool>() { (1.0, 0.0) } else { (0.0, 1.0) });
    }
    Ok((ga / s, gb / s))
}

/// `-ln B` for `B ~ Beta(a, b)`.
fn neg_ln_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let ga = Gamma::new(a, 1.0).map_err(|e| invalid(e.to_string()))?.sample(rng);
    let gb = Gamma::new(b, 1.0).map_err(|e| invalid(e.to_string()))?.sample(rng);
    Ok((gb / ga).ln_1p())
}

/// One realization of the urn up to size `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnTrajectory {
    pub partition: AgeOrderedPartition,
    /// `K_1, ..., K_n`.
    pub k_path: Vec<usize>,
    pub records: RecordIndexVector,
}

/// Sequential urn: item `l + 1` opens a new block with probability
/// `V_{l+1,k+1}/V_{l,k}`, else joins block `j` with probability
/// proportional to `n_j - alpha`.
///
/// Each step consumes exactly one uniform `u`; the new-block decision is
/// `u < p_new`, which is what [`sample_record_chain`] uses too.
pub fn sample_urn(model: &GibbsModel, n: usize, rng: &mut RngStream) -> Result<UrnTrajectory> {
    if n == 0 {
        return Err(out_of_range("urn needs n >= 1"));
    }
    let alpha = model.alpha();
    let mut labels = Vec::with_capacity(n);
    let mut counts: Vec<usize> = vec![1];
    let mut k_path = Vec::with_capacity(n);
    labels.push(0);
    k_path.push(1);
    for l in 1..n {
        let k = counts.len();
        let p_new = model.new_block_prob(l, k)?;
        let u = rng.uniform();
        if u < p_new {
            labels.push(k);
            counts.push(1);
        } else {
            // u is uniform on [p_new, 1) given this branch
            let target = (u - p_new) / (1.0 - p_new) * (l as f64 - alpha * k as f64);
            let mut acc = 0.0;
            let mut pick = k - 1;
            for (j, &c) in counts.iter().enumerate() {
                acc += c as f64 - alpha;
                if target < acc {
                    pick = j;
                    break;
                }
            }
            labels.push(pick);
            counts[pick] += 1;
        }
        k_path.push(counts.len());
    }
    let partition = AgeOrderedPartition::from_labels(&labels)?;
    let records = partition.records();
    Ok(UrnTrajectory {
        partition,
        k_path,
        records,
    })
}

/// Record indices observed up to `horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordChain {
    pub indices: Vec<usize>,
    pub horizon: usize,
    /// No record can occur after the last one (a finite number of blocks
    /// was reached); later indices are infinite.
    pub terminated: bool,
}

impl RecordChain {
    pub fn records(&self) -> RecordIndexVector {
        RecordIndexVector::new(self.indices.clone()).expect("chain records are valid")
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn blocks_exhausted(model: &GibbsModel, k: usize) -> bool {
    model.max_blocks().is_some_and(|m| k >= m)
}

/// Record chain up to `horizon`, stepping the block-count chain `K` with
/// one uniform per step.
pub fn sample_record_chain(model: &GibbsModel, horizon: usize, rng: &mut RngStream) -> Result<RecordChain> {
    if horizon == 0 {
        return Err(out_of_range("record chain needs horizon >= 1"));
    }
    let mut indices = vec![1];
    for l in 1..horizon {
        let p_new = model.new_block_prob(l, indices.len())?;
        if rng.uniform() < p_new {
            indices.push(l + 1);
        }
    }
    let terminated = blocks_exhausted(model, indices.len());
    Ok(RecordChain {
        indices,
        horizon,
        terminated,
    })
}

/// Draws `i_{j+1}` given `i_j = current` by inverting the survival function
/// `P(i_{j+1} > t | i_j)`. `None` means no record up to `horizon`.
fn next_record(model: &GibbsModel, j: usize, current: usize, horizon: usize, rng: &mut RngStream) -> Result<Option<usize>> {
    let u = LogProb::from_f64(rng.uniform());
    if current >= horizon || record_survival(model, j, current, horizon)? >= u {
        return Ok(None);
    }
    // smallest t with survival(t) < u; survival is nonincreasing in t
    let (mut lo, mut hi) = (current, horizon);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if record_survival(model, j, current, mid)? < u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Continues a chain from its last record up to `horizon`.
pub fn continue_records(model: &GibbsModel, prefix: &[usize], horizon: usize, rng: &mut RngStream) -> Result<RecordChain> {
    RecordIndexVector::new(prefix.to_vec())?;
    let mut indices = prefix.to_vec();
    loop {
        let k = indices.len();
        if blocks_exhausted(model, k) {
            return Ok(RecordChain {
                indices,
                horizon,
                terminated: true,
            });
        }
        match next_record(model, k, indices[k - 1], horizon, rng)? {
            Some(t) => indices.push(t),
            None => {
                return Ok(RecordChain {
                    indices,
                    horizon,
                    terminated: false,
                })
            }
        }
    }
}

/// Draws `(i_1, ..., i_m)` from the law of the records given `i_m`.
///
/// Walks backward: given `i_j = b`, `i_{j-1} = a` has weight
/// `S_alpha(a-1, j-2) (a - alpha (j-1))_(b-a-1)`.
pub fn sample_record_prefix(model: &GibbsModel, m: usize, i_m: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if m == 0 || i_m < m {
        return Err(out_of_range(format!("record prefix needs i_m >= m >= 1, got m={m}, i_m={i_m}")));
    }
    let alpha = model.alpha();
    let mut out = vec![0; m];
    out[m - 1] = i_m;
    for j in (2..=m).rev() {
        let b = out[j - 1];
        let lo = j - 1;
        let weights: Vec<LogProb> = (lo..b)
            .map(|a| {
                let s = if j == 2 {
                    if a == 1 { LogProb::ONE } else { LogProb::ZERO }
                } else {
                    model.stirling(a - 1, j - 2)?
                };
                Ok(s * crate::combin::log_rising(a as f64 - alpha * (j - 1) as f64, (b - a - 1) as f64)?)
            })
            .collect::<Result<_>>()?;
        let total: LogProb = weights.iter().sum();
        if total.is_zero() {
            return Err(out_of_range(format!("i_{j} = {b} has probability zero")));
        }
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut pick = b - 1;
        for (off, w) in weights.iter().enumerate() {
            acc += (*w / total).value();
            if u < acc {
                pick = lo + off;
                break;
            }
        }
        out[j - 2] = pick;
    }
    Ok(out)
}

/// Law of the mass `W_K` not yet split among later blocks, given the
/// record chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailLaw {
    /// No further blocks: `W_K = 1`.
    Terminated,
    /// `W_K ~ Beta(a, b)`.
    Beta { a: f64, b: f64 },
    /// Unknown; the output is normalized by `W_K`, i.e. `W_K := 1`.
    Normalized,
}

impl TailLaw {
    /// Exact tail law at state `(horizon, K)` of a chain drawn from
    /// `model`: `Beta(H - alpha K, theta + alpha K)` for the two-parameter
    /// family. Other families give [`TailLaw::Normalized`].
    pub fn for_chain(model: &GibbsModel, chain: &RecordChain) -> TailLaw {
        if chain.terminated {
            return TailLaw::Terminated;
        }
        TailLaw::at_state(model, chain.horizon, chain.len())
    }

    /// Tail law when `K` blocks have been seen among the first `h` items.
    pub fn at_state(model: &GibbsModel, h: usize, k: usize) -> TailLaw {
        if blocks_exhausted(model, k) {
            return TailLaw::Terminated;
        }
        let alpha = model.alpha();
        match model.family() {
            Family::Ewens { theta } | Family::TwoParameter { theta } => {
                let b = theta + alpha * k as f64;
                if b <= 1e-12 {
                    TailLaw::Terminated
                } else {
                    TailLaw::Beta { a: h as f64 - alpha * k as f64, b }
                }
            }
            _ => TailLaw::Normalized,
        }
    }
}

/// Depth and residual-mass threshold of a truncated stick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub depth: usize,
    pub eps: f64,
}

impl Truncation {
    pub fn depth(depth: usize) -> Self {
        Truncation { depth, eps: DEFAULT_EPS }
    }
}

/// A truncated sequence of age-ordered frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct StickOutput {
    /// Relative increments `xi_j = X_{j+1} / W_{j+1}`, for every `j <= d`
    /// the construction determines.
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    /// Left-to-right partial sums of `x`.
    pub w: Vec<f64>,
    /// `1 - W_d`.
    pub truncation_mass: f64,
}

impl StickOutput {
    /// Cuts `x` at `depth` or at the first `j` with `1 - W_j < eps`.
    fn assemble(mut xi: Vec<f64>, x: &[f64], trunc: Truncation) -> StickOutput {
        let mut out_x = Vec::new();
        let mut w = Vec::new();
        let mut acc = 0.0;
        for &v in x.iter().take(trunc.depth) {
            // rounding in the products can overshoot the unit mass by an ulp
            let v = v.min(1.0 - acc).max(0.0);
            acc += v;
            out_x.push(v);
            w.push(acc);
            if 1.0 - acc < trunc.eps {
                break;
            }
        }
        xi.truncate(out_x.len());
        StickOutput {
            xi,
            truncation_mass: 1.0 - acc,
            x: out_x,
            w,
        }
    }

    pub fn depth(&self) -> usize {
        self.x.len()
    }
}

/// Age-ordered frequencies given the record indices `i_1..i_K`:
/// `xi_j ~ Beta(1 - alpha, i_{j+1} - j alpha - 1)` independently,
/// `W_j = W_K prod_{j <= l < K} (1 - xi_l)` and `X_j = xi_{j-1} W_j`.
pub fn sample_freqs_given_records(
    alpha: f64,
    records: &[usize],
    trunc: Truncation,
    tail: TailLaw,
    rng: &mut RngStream,
) -> Result<StickOutput> {
    RecordIndexVector::new(records.to_vec())?;
    if !(alpha < 1.0) {
        return Err(invalid(format!("alpha must be < 1, got {alpha}")));
    }
    if trunc.depth == 0 {
        return Err(invalid("depth must be >= 1"));
    }
    let k = records.len();
    if trunc.depth > k {
        return Err(out_of_range(format!(
            "depth {} needs at least {} records, got {k}",
            trunc.depth, trunc.depth
        )));
    }
    // (xi_j, 1 - xi_j) for j = 1..K-1
    let mut pairs = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let b = records[j] as f64 - j as f64 * alpha - 1.0;
        pairs.push(beta_pair(1.0 - alpha, b, rng)?);
    }
    let w_k = match tail {
        TailLaw::Terminated | TailLaw::Normalized => 1.0,
        TailLaw::Beta { a, b } => beta_pair(a, b, rng)?.0,
    };
    let mut w_prod = vec![0.0; k];
    w_prod[k - 1] = w_k;
    for j in (0..k - 1).rev() {
        w_prod[j] = w_prod[j + 1] * pairs[j].1;
    }
    let mut x: Vec<f64> = (0..k)
        .map(|j| if j == 0 { w_prod[0] } else { pairs[j - 1].0 * w_prod[j] })
        .collect();
    if w_k == 1.0 && k > 1 {
        // close the stick so that rounding cannot push W_K past 1
        let front: f64 = x[..k - 1].iter().sum();
        x[k - 1] = (1.0 - front).max(0.0);
    }
    let xi = pairs.iter().map(|p| p.0).collect();
    Ok(StickOutput::assemble(xi, &x, trunc))
}

/// Two-parameter GEM: `X_j = B_j prod_{i<j} (1 - B_i)` with
/// `B_j ~ Beta(1 - alpha, theta + j alpha)`.
pub fn sample_gem(alpha: f64, theta: f64, trunc: Truncation, rng: &mut RngStream) -> Result<StickOutput> {
    crate::model::ModelSpec::two_parameter(alpha, theta).build()?;
    if trunc.depth == 0 {
        return Err(invalid("depth must be >= 1"));
    }
    let mut x = Vec::with_capacity(trunc.depth + 1);
    let mut rest = 1.0;
    for j in 1..=trunc.depth + 1 {
        let b = theta + j as f64 * alpha;
        if b <= 1e-12 {
            // last block takes the rest; closing by subtraction keeps W <= 1
            x.push((1.0 - x.iter().sum::<f64>()).max(0.0));
            break;
        }
        let (bj, cj) = beta_pair(1.0 - alpha, b, rng)?;
        x.push(bj * rest);
        rest *= cj;
        if rest == 0.0 {
            break;
        }
    }
    let mut acc = 0.0;
    let mut xi = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        acc += x[j];
        if j > 0 {
            xi.push(x[j] / acc);
        }
    }
    Ok(StickOutput::assemble(xi, &x, trunc))
}

/// Record indices of a sample from `x`: `T_j = i_j - i_{j-1} - 1` are
/// independent `Geometric(1 - W_{j-1})` counts of failures, `T_1 = 0`.
pub fn sample_records_given_freqs<R: Rng + ?Sized>(x: &[f64], k: usize, rng: &mut R) -> Result<RecordIndexVector> {
    if k == 0 || k > x.len() {
        return Err(out_of_range(format!("need 1 <= k <= {} frequencies, got k = {k}", x.len())));
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid("frequencies must be positive"));
    }
    let mut out = vec![1];
    let mut w = 0.0;
    for j in 1..k {
        w += x[j - 1];
        if w >= 1.0 {
            return Err(invalid(format!(
                "W_{j} = {w} leaves no mass for block {}; its waiting time is infinite",
                j + 1
            )));
        }
        let t = Geometric::new(1.0 - w).map_err(|e| invalid(e.to_string()))?.sample(rng);
        out.push(out[j - 1] + 1 + t as usize);
    }
    RecordIndexVector::new(out)
}

/// `Z_l`, `l = i_m + 1 ..= horizon`, driven by the block-count chain
/// started from `K_{i_m} = m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZPath {
    pub start: usize,
    pub z: Vec<f64>,
    /// `K_horizon`.
    pub k_end: usize,
}

/// Shape of the Beta variable behind a jump of `K` at `l`, written in terms
/// of the count after the jump: `l - alpha K_l - (1 - alpha)`. Equals
/// `l - 1 - alpha K_{l-1}`.
pub fn jump_beta_shape(alpha: f64, l: usize, k_after: usize) -> f64 {
    l as f64 - alpha * k_after as f64 - (1.0 - alpha)
}

pub fn sample_z_path(model: &GibbsModel, m: usize, i_m: usize, horizon: usize, rng: &mut RngStream) -> Result<ZPath> {
    if m == 0 || i_m < m {
        return Err(out_of_range(format!("need i_m >= m >= 1, got m={m}, i_m={i_m}")));
    }
    if horizon < i_m {
        return Err(out_of_range(format!("horizon {horizon} is below i_m = {i_m}")));
    }
    let alpha = model.alpha();
    let mut k = m;
    let mut z = Vec::with_capacity(horizon - i_m);
    for l in i_m + 1..=horizon {
        let p = model.new_block_prob(l - 1, k)?;
        if rng.uniform() < p {
            k += 1;
            z.push(neg_ln_beta(jump_beta_shape(alpha, l, k), 1.0 - alpha, rng)?);
        } else {
            z.push(0.0);
        }
    }
    Ok(ZPath { start: i_m + 1, z, k_end: k })
}

/// One draw of `-log X_m` given `i_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NegLogDraw {
    pub value: f64,
    /// Upper bound on `E(1 - W_K)` for the part beyond the horizon that was
    /// dropped; zero when that part was drawn exactly.
    pub tail_bound: f64,
}

/// `-log X_m = sum_{j=2}^m Y*_j + sum_{i=m+1}^{i_m} Y_i + sum_{l>i_m} Z_l`,
/// with `Y*_j = -log Beta(j-1-alpha(j-1), 1-alpha)`,
/// `Y_i ~ Exp(i - 1 - alpha m)` and the `Z_l` of [`sample_z_path`] up to
/// `horizon`. The rest, `-log W_K` at state `(horizon, K)`, is drawn
/// exactly for the two-parameter family and dropped otherwise.
pub fn sample_neg_log_xm(model: &GibbsModel, m: usize, i_m: usize, horizon: usize, rng: &mut RngStream) -> Result<NegLogDraw> {
    let alpha = model.alpha();
    let mut value = 0.0;
    for j in 2..=m {
        let a = (j - 1) as f64 * (1.0 - alpha);
        value += neg_ln_beta(a, 1.0 - alpha, rng)?;
    }
    for i in m + 1..=i_m {
        let rate = i as f64 - 1.0 - alpha * m as f64;
        value += Exp::new(rate).map_err(|e| invalid(e.to_string()))?.sample(rng);
    }
    let path = sample_z_path(model, m, i_m, horizon, rng)?;
    value += path.z.iter().sum::<f64>();
    let k = path.k_end;
    let tail = TailLaw::at_state(model, horizon, k);
    let tail_bound = match tail {
        TailLaw::Terminated => 0.0,
        TailLaw::Beta { a, b } => {
            let (_, rest) = beta_pair(a, b, rng)?;
            value -= (-rest).ln_1p();
            0.0
        }
        TailLaw::Normalized => {
            // E(W_K | H, K) = (H - alpha K) V_{H+1,K} / V_{H,K}
            let h = horizon;
            let mean = LogProb::from_f64(h as f64 - alpha * k as f64) * model.v(h + 1, k)? / model.v(h, k)?;
            1.0 - mean.value()
        }
    };
    Ok(NegLogDraw { value, tail_bound })
}

/// Size-biased random permutation: repeatedly picks a remaining index with
/// probability proportional to its weight. Zero weights come last, in
/// their original order.
pub fn size_biased_permute<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    let mut left: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let zeros: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] == 0.0).collect();
    let mut out = Vec::with_capacity(weights.len());
    while !left.is_empty() {
        let total: f64 = left.iter().map(|&i| weights[i]).sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pos = left.len() - 1;
        for (p, &i) in left.iter().enumerate() {
            acc += weights[i];
            if target < acc {
                pos = p;
                break;
            }
        }
        out.push(left.remove(pos));
    }
    out.extend(zeros);
    Ok(out)
}

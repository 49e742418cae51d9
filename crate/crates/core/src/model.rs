//! Gibbs models `(alpha, V)` and their `V_{n,k}` coefficients.
//!
//! Four families are supported: Ewens, Pitman's two-parameter family, the
//! Poisson-Kingman family at `alpha = 1/2` (where the stable density is
//! elementary), and an explicit user-supplied triangular table. Every
//! model precomputes `V_{n,k}` for `k <= n <= n_max` at construction and is
//! immutable afterwards.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combin::{ln_gamma, log_rising, StirlingTable};
use crate::error::{out_of_range, GibbsError, Result};
use crate::logprob::LogProb;
use crate::quad::{integrate_with_breaks, QuadOptions};

pub const DEFAULT_N_MAX: usize = 32;

/// Relative tolerance for the recursion check on explicit tables.
pub const TABLE_RECURSION_TOL: f64 = 1e-9;

/// The `V`-provider of a Gibbs model.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Ewens { theta: f64 },
    TwoParameter { theta: f64 },
    PoissonKingmanHalf { s: f64 },
    ExplicitTable { rows: Vec<Vec<f64>> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ewens { .. } => "ewens",
            Family::TwoParameter { .. } => "two_parameter",
            Family::PoissonKingmanHalf { .. } => "pk_half",
            Family::ExplicitTable { .. } => "table",
        }
    }
}

/// Serialized model descriptor, as read from JSON or the `family:k=v`
/// command-line syntax. Nothing is checked until [`ModelSpec::build`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl ModelSpec {
    pub fn ewens(theta: f64) -> Self {
        ModelSpec {
            family: "ewens".into(),
            theta: Some(theta),
            ..Default::default()
        }
    }

    pub fn two_parameter(alpha: f64, theta: f64) -> Self {
        ModelSpec {
            family: "two_parameter".into(),
            alpha: Some(alpha),
            theta: Some(theta),
            ..Default::default()
        }
    }

    pub fn pk_half(s: f64) -> Self {
        ModelSpec {
            family: "pk_half".into(),
            s: Some(s),
            ..Default::default()
        }
    }

    pub fn table(alpha: f64, rows: Vec<Vec<f64>>) -> Self {
        ModelSpec {
            family: "table".into(),
            alpha: Some(alpha),
            table: Some(rows),
            ..Default::default()
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GibbsError::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serializes")
    }

    /// Resolves the descriptor into `(alpha, family)` and checks every
    /// parameter constraint except the table recursion.
    fn resolve(&self) -> Result<(f64, Family)> {
        let bad = |m: String| GibbsError::InvalidModel(m);
        let require = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| bad(format!("family '{}' requires '{name}'", self.family)))
        };
        let forbid = |name: &str, present: bool| {
            if present {
                Err(bad(format!("family '{}' does not take '{name}'", self.family)))
            } else {
                Ok(())
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("'{name}' must be finite")))
            }
        };
        match self.family.as_str() {
            "ewens" => {
                forbid("s", self.s.is_some())?;
                forbid("table", self.table.is_some())?;
                if let Some(a) = self.alpha {
                    if a != 0.0 {
                        return Err(bad(format!("Ewens family forces alpha = 0, got {a}")));
                    }
                }
                let theta = finite("theta", require("theta", self.theta)?)?;
                if theta <= 0.0 {
                    return Err(bad(format!("Ewens family needs theta > 0, got {theta}")));
                }
                Ok((0.0, Family::Ewens { theta }))
            }
            "two_parameter" => {
                forbid("s", self.s.is_some())?;
                forbid("table", self.table.is_some())?;
                let alpha = finite("alpha", require("alpha", self.alpha)?)?;
                let theta = finite("theta", require("theta", self.theta)?)?;
                check_two_parameter(alpha, theta)?;
                Ok((alpha, Family::TwoParameter { theta }))
            }
            "pk_half" => {
                forbid("theta", self.theta.is_some())?;
                forbid("table", self.table.is_some())?;
                if let Some(a) = self.alpha {
                    if a != 0.5 {
                        return Err(bad(format!("pk_half family forces alpha = 1/2, got {a}")));
                    }
                }
                let s = finite("s", require("s", self.s)?)?;
                if s <= 0.0 {
                    return Err(bad(format!("pk_half family needs s > 0, got {s}")));
                }
                Ok((0.5, Family::PoissonKingmanHalf { s }))
            }
            "table" => {
                forbid("theta", self.theta.is_some())?;
                forbid("s", self.s.is_some())?;
                let alpha = finite("alpha", require("alpha", self.alpha)?)?;
                check_alpha(alpha)?;
                let rows = self
                    .table
                    .clone()
                    .ok_or_else(|| bad("family 'table' requires 'table'".into()))?;
                check_table_shape(&rows)?;
                if let Some(n) = self.n_max {
                    if n > rows.len() {
                        return Err(bad(format!(
                            "n_max = {n} exceeds the {} stored table rows",
                            rows.len()
                        )));
                    }
                }
                Ok((alpha, Family::ExplicitTable { rows }))
            }
            other => Err(bad(format!(
                "unknown family '{other}' (expected ewens, two_parameter, pk_half or table)"
            ))),
        }
    }

    pub fn build(&self) -> Result<GibbsModel> {
        let (alpha, family) = self.resolve()?;
        let n_max = match (&family, self.n_max) {
            (Family::ExplicitTable { rows }, None) => rows.len(),
            (_, Some(n)) => n,
            (_, None) => DEFAULT_N_MAX,
        };
        if n_max == 0 {
            return Err(GibbsError::InvalidModel("n_max must be >= 1".into()));
        }
        GibbsModel::assemble(alpha, family, n_max, self.clone())
    }
}

/// Accepts iff the descriptor satisfies every model invariant (for tables
/// this includes the `V` recursion).
pub fn validate_model(spec: &ModelSpec) -> Result<()> {
    let (alpha, family) = spec.resolve()?;
    if let Family::ExplicitTable { rows } = &family {
        check_table_recursion(alpha, rows)?;
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha < 1.0 {
        Ok(())
    } else {
        Err(GibbsError::InvalidModel(format!("alpha must be < 1, got {alpha}")))
    }
}

fn check_two_parameter(alpha: f64, theta: f64) -> Result<()> {
    check_alpha(alpha)?;
    if alpha >= 0.0 {
        if theta > -alpha {
            Ok(())
        } else {
            Err(GibbsError::InvalidModel(format!(
                "two-parameter family with alpha in [0,1) needs theta > -alpha, got alpha={alpha}, theta={theta}"
            )))
        }
    } else {
        let m = theta / alpha.abs();
        if m >= 0.5 && (m - m.round()).abs() <= 1e-9 * m.max(1.0) {
            Ok(())
        } else {
            Err(GibbsError::InvalidModel(format!(
                "two-parameter family with alpha < 0 needs theta = m|alpha| for a positive integer m, got theta/|alpha| = {m}"
            )))
        }
    }
}

fn check_table_shape(rows: &[Vec<f64>]) -> Result<()> {
    let bad = |m: String| Err(GibbsError::InvalidModel(m));
    if rows.is_empty() {
        return bad("table must have at least one row".into());
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != i + 1 {
            return bad(format!("table row {} must have {} entries, has {}", i + 1, i + 1, row.len()));
        }
        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("table row {} has a negative or non-finite entry", i + 1));
        }
    }
    if (rows[0][0] - 1.0).abs() > 1e-12 {
        return bad(format!("table needs V[1][1] = 1, got {}", rows[0][0]));
    }
    Ok(())
}

fn check_table_recursion(alpha: f64, rows: &[Vec<f64>]) -> Result<()> {
    for n in 1..rows.len() {
        for k in 1..=n {
            let lhs = rows[n - 1][k - 1];
            let rhs = (n as f64 - alpha * k as f64) * rows[n][k - 1] + rows[n][k];
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 && (lhs - rhs).abs() > TABLE_RECURSION_TOL * scale {
                return Err(GibbsError::InvalidModel(format!(
                    "table violates V[n][k] = (n - alpha k) V[n+1][k] + V[n+1][k+1] at (n,k)=({n},{k}): {lhs} vs {rhs}"
                )));
            }
        }
    }
    Ok(())
}

/// A validated Gibbs model with its precomputed `V` table.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    alpha: f64,
    family: Family,
    n_max: usize,
    v: Vec<Vec<LogProb>>,
    stirling: StirlingTable,
    spec: ModelSpec,
}

impl GibbsModel {
    pub fn ewens(theta: f64, n_max: usize) -> Result<Self> {
        ModelSpec::ewens(theta).with_n_max(n_max).build()
    }

    pub fn two_parameter(alpha: f64, theta: f64, n_max: usize) -> Result<Self> {
        ModelSpec::two_parameter(alpha, theta).with_n_max(n_max).build()
    }

    pub fn pk_half(s: f64, n_max: usize) -> Result<Self> {
        ModelSpec::pk_half(s).with_n_max(n_max).build()
    }

    pub fn from_table(alpha: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        ModelSpec::table(alpha, rows).build()
    }

    /// Copies `V_{n,k}` for `n <= n_max` into an explicit-table model.
    pub fn to_table(&self, n_max: usize) -> Result<GibbsModel> {
        let mut rows = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            rows.push((1..=n).map(|k| self.v(n, k).map(LogProb::value)).collect::<Result<Vec<_>>>()?);
        }
        GibbsModel::from_table(self.alpha, rows)
    }

    fn assemble(alpha: f64, family: Family, n_max: usize, spec: ModelSpec) -> Result<Self> {
        if let Family::ExplicitTable { rows } = &family {
            check_table_recursion(alpha, rows)?;
        }
        let mut v = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let mut row = Vec::with_capacity(n);
            for k in 1..=n {
                row.push(if n == 1 {
                    LogProb::ONE
                } else {
                    compute_v(alpha, &family, n, k)?
                });
            }
            v.push(row);
        }
        let stirling = StirlingTable::new(alpha, n_max)?;
        let mut spec = spec;
        spec.n_max = Some(n_max);
        if spec.family != "table" {
            spec.alpha = Some(alpha);
        }
        Ok(GibbsModel {
            alpha,
            family,
            n_max,
            v,
            stirling,
            spec,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// `theta` for the Ewens and two-parameter families.
    pub fn theta(&self) -> Option<f64> {
        match self.family {
            Family::Ewens { theta } | Family::TwoParameter { theta } => Some(theta),
            _ => None,
        }
    }

    /// Whether `V_{n,k}` has a closed form, so it is available beyond `n_max`.
    pub fn is_closed_form(&self) -> bool {
        self.theta().is_some()
    }

    /// Upper bound on the number of blocks (`alpha < 0` two-parameter models).
    pub fn max_blocks(&self) -> Option<usize> {
        match self.family {
            Family::TwoParameter { theta } if self.alpha < 0.0 => Some((theta / -self.alpha).round() as usize),
            _ => None,
        }
    }

    /// `V_{n,k}` for `1 <= k <= n`.
    pub fn v(&self, n: usize, k: usize) -> Result<LogProb> {
        if n == 0 || k == 0 || k > n {
            return Err(out_of_range(format!("V_(n,k) needs 1 <= k <= n, got ({n}, {k})")));
        }
        if n <= self.n_max {
            return Ok(self.v[n - 1][k - 1]);
        }
        if self.is_closed_form() {
            return compute_v(self.alpha, &self.family, n, k);
        }
        Err(out_of_range(format!(
            "V_({n},{k}) is beyond the precomputed n_max = {} of this {} model",
            self.n_max,
            self.family.name()
        )))
    }

    /// `V_{n,k}`, taken as zero for `k > n` (the natural extension used by
    /// the recursion).
    pub fn v_or_zero(&self, n: usize, k: usize) -> Result<LogProb> {
        if k > n {
            Ok(LogProb::ZERO)
        } else {
            self.v(n, k)
        }
    }

    /// Probability that `n + 1` starts a new block given `k` blocks in `[n]`.
    pub fn new_block_prob(&self, n: usize, k: usize) -> Result<f64> {
        let den = self.v(n, k)?;
        if den.is_zero() {
            return Err(out_of_range(format!("state (n,k)=({n},{k}) has probability zero")));
        }
        Ok((self.v(n + 1, k + 1)? / den).value().clamp(0.0, 1.0))
    }

    /// `S_alpha(n, k)` from the table precomputed up to `n_max`, extended on
    /// demand.
    pub fn stirling(&self, n: usize, k: usize) -> Result<LogProb> {
        if n <= self.n_max {
            self.stirling.get(n, k)
        } else {
            StirlingTable::new(self.alpha, n)?.get(n, k)
        }
    }

    /// Largest relative residual of `V_{n,k} = (n - alpha k) V_{n+1,k} + V_{n+1,k+1}`
    /// over `1 <= k <= n <= n_hi`.
    pub fn recursion_residual(&self, n_hi: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for n in 1..=n_hi {
            for k in 1..=n {
                let lhs = self.v(n, k)?;
                let rhs = LogProb::from_f64(n as f64 - self.alpha * k as f64) * self.v(n + 1, k)? + self.v(n + 1, k + 1)?;
                if lhs.is_zero() && rhs.is_zero() {
                    continue;
                }
                worst = worst.max(rhs.rel_err(lhs));
            }
        }
        Ok(worst)
    }
}

impl fmt::Display for GibbsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec.to_json())
    }
}

fn compute_v(alpha: f64, family: &Family, n: usize, k: usize) -> Result<LogProb> {
    match family {
        Family::Ewens { theta } => {
            Ok(LogProb::from_ln(k as f64 * theta.ln()) / log_rising(*theta, n as f64)?)
        }
        Family::TwoParameter { theta } => {
            let num: LogProb = (0..k)
                .map(|j| LogProb::from_f64(theta + alpha * j as f64))
                .product();
            Ok(num / log_rising(*theta, n as f64)?)
        }
        Family::PoissonKingmanHalf { s } => pk_half_v(*s, n, k),
        Family::ExplicitTable { rows } => Ok(LogProb::from_f64(rows[n - 1][k - 1])),
    }
}

/// `ln f(u)` for the positive 1/2-stable density
/// `f(u) = u^{-3/2} exp(-1/(4u)) / (2 sqrt(pi))`.
pub fn ln_stable_half_density(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -1.5 * u.ln() - 0.25 / u - (2.0 * PI.sqrt()).ln()
}

pub fn stable_half_density(u: f64) -> f64 {
    ln_stable_half_density(u).exp()
}

/// Quadrature accuracy demanded of `G_{1/2}`.
const G_ABS_TOL: f64 = 1e-8;

fn g_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

/// `ln G_{1/2}(q, t)` where
/// `G(q, t) = (Gamma(q) f(t))^{-1} int_0^t f(t - v) v^{q-1} dv`.
///
/// The integrand is scaled by its interior maximum; the `v -> 0` end is
/// integrated in `r = v^q` when `q < 1`, which removes the singularity.
pub fn ln_g_alpha_half(q: f64, t: f64) -> Result<LogProb> {
    if !(q > 0.0 && t > 0.0 && q.is_finite() && t.is_finite()) {
        return Err(GibbsError::InvalidArgument(format!(
            "G_(1/2)(q, t) needs q > 0 and t > 0, got q={q}, t={t}"
        )));
    }
    // log integrand in u = t - v
    // q = 1 drops the power; otherwise 0 * ln(0) at a node that rounds onto t is NaN
    let h = |u: f64| ln_stable_half_density(u) + if q == 1.0 { 0.0 } else { (q - 1.0) * (t - u).ln() };
    let peak = integrand_peak(q, t, &h);
    let scale = h(peak);
    let opts = g_quad_options();

    let left = integrate_with_breaks(|u| (h(u) - scale).exp(), &[0.0, 0.5 * peak, peak], &opts)?;
    let right = if q < 1.0 {
        let r_hi = (t - peak).powf(q);
        let inner = integrate_with_breaks(
            |r: f64| (ln_stable_half_density(t - r.powf(1.0 / q)) - scale).exp() / q,
            &[0.0, 0.5 * r_hi, r_hi],
            &opts,
        )?;
        inner
    } else {
        integrate_with_breaks(|u| (h(u) - scale).exp(), &[peak, 0.5 * (peak + t), t], &opts)?
    };
    let total = left.value + right.value;
    let rel_err = (left.error_estimate + right.error_estimate) / total;
    let ln_g = scale + total.ln() - ln_gamma(q) - ln_stable_half_density(t);
    let g = ln_g.exp();
    if !ln_g.is_finite() || rel_err * g.max(1.0) > G_ABS_TOL * g.max(1.0) || rel_err > 1e-9 {
        return Err(GibbsError::Quadrature {
            error_estimate: rel_err * g,
            evaluations: left.evaluations + right.evaluations,
        });
    }
    Ok(LogProb::from_ln(ln_g))
}

/// `G_{1/2}(q, t)` in linear scale.
pub fn g_alpha_half(q: f64, t: f64) -> Result<f64> {
    ln_g_alpha_half(q, t).map(LogProb::value)
}

/// Interior maximizer of `ln f(u) + (q-1) ln(t-u)` on `(0, t)`: a root of
/// `(10 - 4q) u^2 - (6t + 1) u + t = 0`.
fn integrand_peak(q: f64, t: f64, h: &dyn Fn(f64) -> f64) -> f64 {
    let a = 10.0 - 4.0 * q;
    let b = -(6.0 * t + 1.0);
    let c = t;
    let mut cands = Vec::new();
    if a.abs() < 1e-14 {
        cands.push(-c / b);
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair of roots
            let qq = -0.5 * (b + b.signum() * sq);
            cands.push(qq / a);
            if qq != 0.0 {
                cands.push(c / qq);
            }
        }
    }
    cands
        .into_iter()
        .filter(|u| *u > 0.0 && *u < t)
        .max_by(|x, y| h(*x).total_cmp(&h(*y)))
        .unwrap_or(0.5 * t)
}

/// `V_{n,k}(s) = alpha^k s^{n/alpha} G_alpha(n - alpha k, s^{-1/alpha})` at
/// `alpha = 1/2`.
pub fn pk_half_v(s: f64, n: usize, k: usize) -> Result<LogProb> {
    let q = n as f64 - 0.5 * k as f64;
    let t = s.powi(-2);
    let g = ln_g_alpha_half(q, t)?;
    Ok(LogProb::from_ln(k as f64 * 0.5f64.ln() + 2.0 * n as f64 * s.ln()) * g)
}

/// Structural density of `X_1` for the Poisson-Kingman(1/2, s) partition:
/// `alpha s x^{-alpha} / Gamma(1-alpha) * f((1-x) s^{-1/alpha}) / f(s^{-1/alpha})`.
pub fn structural_density_pk_half(s: f64, x: f64) -> f64 {
    if !(x > 0.0 && x < 1.0 && s > 0.0) {
        return 0.0;
    }
    let t = s.powi(-2);
    let ln = (0.5 * s).ln() - 0.5 * x.ln() - 0.5 * PI.ln() + ln_stable_half_density((1.0 - x) * t)
        - ln_stable_half_density(t);
    ln.exp()
}

/// `E(X_1^phi)` under the Poisson-Kingman(1/2, s) structural density, in
/// `x = y^2` so the `x^{-1/2}` factor disappears.
pub fn pk_half_structural_mellin(s: f64, phi: f64) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(GibbsError::InvalidArgument(format!("Mellin argument must be >= 0, got {phi}")));
    }
    let t = s.powi(-2);
    let ln_ft = ln_stable_half_density(t);
    let c = s / PI.sqrt();
    let f = |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let ln = 2.0 * phi * y.ln() + ln_stable_half_density((1.0 - y * y) * t) - ln_ft;
        c * ln.exp()
    };
    let r = integrate_with_breaks(f, &[0.0, 0.5, 0.9, 1.0], &g_quad_options())?;
    if r.error_estimate > 1e-10 * r.value.max(1e-300) + 1e-14 {
        return Err(GibbsError::Quadrature {
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
        });
    }
    Ok(r.value)
}

/// Parses the `family:key=val,...` command-line syntax.
impl FromStr for ModelSpec {
    type Err = GibbsError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return ModelSpec::from_json(text);
        }
        let (family, rest) = match text.split_once(':') {
            Some((f, r)) => (f.trim(), r.trim()),
            None => (text, ""),
        };
        let mut spec = ModelSpec {
            family: family.to_string(),
            ..Default::default()
        };
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| GibbsError::InvalidModel(format!("expected key=value, got '{item}'")))?;
            let key = key.trim();
            let val = val.trim();
            let num = || {
                val.parse::<f64>()
                    .map_err(|_| GibbsError::InvalidModel(format!("'{key}' is not a number: '{val}'")))
            };
            match key {
                "alpha" => spec.alpha = Some(num()?),
                "theta" => spec.theta = Some(num()?),
                "s" => spec.s = Some(num()?),
                "n_max" => {
                    spec.n_max = Some(
                        val.parse()
                            .map_err(|_| GibbsError::InvalidModel(format!("'n_max' is not an integer: '{val}'")))?,
                    )
                }
                other => return Err(GibbsError::InvalidModel(format!("unknown model key '{other}'"))),
            }
        }
        Ok(spec)
    }
}

//! Acceptance gate: one PASS/FAIL line per criterion. Every tolerance and
//! Monte Carlo size is pinned here rather than taken from library defaults.
//!
//! Run with `cargo test -p gibbs-core --release --test acceptance -- --nocapture`
//! to see the lines.

use std::time::Instant;

use gibbs_core::verify::*;
use gibbs_core::{GibbsModel, Result};

const SEED: u64 = 20_240_611;

struct Outcome {
    id: usize,
    title: &'static str,
    reports: Vec<SuiteReport>,
    secs: f64,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    fn line(&self) -> String {
        let worst = self
            .reports
            .iter()
            .flat_map(|r| r.failures().next().or_else(|| r.worst()).map(|c| (r, c)))
            .find(|(_, c)| !c.pass)
            .or_else(|| self.reports.iter().flat_map(|r| r.worst().map(|c| (r, c))).next());
        let detail = match worst {
            Some((r, c)) => format!(
                "[{} {}: {} = {:.3e} {} {:.1e}]",
                r.model, r.suite, c.name, c.value,
                if c.relation == Relation::AtMost { "<=" } else { ">" },
                c.threshold
            ),
            None => String::new(),
        };
        format!(
            "criterion {:>2} {}: {} ({:.1}s) {}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            self.secs,
            detail
        )
    }
}

fn run(id: usize, title: &'static str, f: impl FnOnce() -> Result<Vec<SuiteReport>>) -> Outcome {
    let t = Instant::now();
    let reports = f().unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    Outcome { id, title, reports, secs: t.elapsed().as_secs_f64() }
}

fn ewens(theta: f64) -> GibbsModel {
    GibbsModel::ewens(theta, 32).unwrap()
}

fn tp(alpha: f64, theta: f64) -> GibbsModel {
    GibbsModel::two_parameter(alpha, theta, 32).unwrap()
}

fn pk(s: f64) -> GibbsModel {
    GibbsModel::pk_half(s, 32).unwrap()
}

fn exact_models() -> Vec<(GibbsModel, f64)> {
    vec![
        (ewens(0.5), 1e-10),
        (ewens(1.0), 1e-10),
        (ewens(2.0), 1e-10),
        (tp(0.5, 0.5), 1e-10),
        (tp(-0.5, 1.0), 1e-10),
        (pk(1.0), 1e-6),
    ]
}

fn criterion_1() -> Result<Vec<SuiteReport>> {
    exact_models()
        .iter()
        .map(|(m, tol)| oracle_suite(m, &OracleParams { max_n: 8, rel_tol: *tol, chain_tol: 1e-12 }))
        .collect()
}

fn criterion_2() -> Result<Vec<SuiteReport>> {
    exact_models()
        .iter()
        .map(|(m, tol)| {
            let tol = if *tol < 1e-9 { 1e-9 } else { *tol };
            recursion_suite(m, &RecursionParams { n_hi: 12, tol, norm_tol: 1e-9 })
        })
        .collect()
}

fn criterion_3() -> Result<Vec<SuiteReport>> {
    let p = StirlingParams {
        alphas: vec![-1.0, -0.5, 0.0, 0.25, 0.5, 0.9],
        series_max_n: 8,
        series_tol: 1e-10,
        alt_max_sum: 20,
        alt_tol: 1e-6,
    };
    Ok(vec![stirling_suite(&tp(0.5, 1.0), &p)?])
}

fn criterion_4() -> Result<Vec<SuiteReport>> {
    [ewens(1.0), tp(0.5, 0.5), tp(-0.5, 1.0)]
        .iter()
        .enumerate()
        .map(|(i, m)| {
            conditional_suite(
                m,
                &ConditionalParams {
                    max_m: 3,
                    max_i: 6,
                    max_moment: 3,
                    draws: 200_000,
                    horizon: 30,
                    z: 4.0,
                    seed: SEED + i as u64,
                    jobs: 0,
                },
            )
        })
        .collect()
}

fn criterion_5() -> Result<Vec<SuiteReport>> {
    [ewens(1.0), ewens(2.5), tp(0.5, 0.5), tp(-0.5, 1.0), pk(1.0)]
        .iter()
        .map(|m| {
            let tol = if matches!(m.family(), gibbs_core::Family::PoissonKingmanHalf { .. }) { 1e-6 } else { 1e-9 };
            mellin_suite(
                m,
                &MellinParams {
                    max_m: 3,
                    max_i: 6,
                    max_moment: 3,
                    tol,
                    ewens_tol: 1e-12,
                    phis: vec![0.5, 1.5, std::f64::consts::PI],
                },
            )
        })
        .collect()
}

fn criterion_6() -> Result<Vec<SuiteReport>> {
    Ok(vec![geometric_suite(
        &ewens(1.0),
        &GeometricParams {
            x: vec![0.5, 0.3, 0.2],
            draws: 100_000,
            significance: 1e-3,
            z: 4.0,
            min_expected: 10.0,
            seed: SEED,
            jobs: 0,
        },
    )?])
}

fn criterion_7() -> Result<Vec<SuiteReport>> {
    Ok(vec![nacu_suite(
        &ewens(1.0),
        &NacuParams { cases: 50, max_n: 9, max_k: 4, tol: 1e-10, seed: SEED },
    )?])
}

fn criterion_8() -> Result<Vec<SuiteReport>> {
    Ok(vec![logdecomp_suite(
        &ewens(1.0),
        &LogDecompParams {
            max_m: 2,
            max_i: 4,
            draws: 10_000,
            horizon: 60,
            significance: 1e-3,
            z: 4.0,
            atom_lags: 8,
            seed: SEED,
            jobs: 0,
        },
    )?])
}

fn criterion_9() -> Result<Vec<SuiteReport>> {
    Ok(vec![mixture_suite(
        &ewens(1.0),
        &MixtureParams {
            ks: vec![2, 3],
            max_i: 6,
            quad_tol: 1e-6,
            urn_n: 200,
            target_i2: 3,
            accepted: 50_000,
            significance: 1e-3,
            seed: SEED,
            jobs: 0,
        },
    )?])
}

fn criterion_10() -> Result<Vec<SuiteReport>> {
    [tp(0.5, 0.5), tp(0.3, 2.0), ewens(1.0)]
        .iter()
        .enumerate()
        .map(|(i, m)| {
            urn_gem_suite(
                m,
                &UrnGemParams {
                    gem_draws: 100_000,
                    moments: vec![vec![1], vec![2], vec![0, 1], vec![1, 1], vec![2, 1], vec![1, 2], vec![0, 0, 1], vec![1, 1, 1]],
                    urn_n: 6,
                    urn_draws: 500_000,
                    significance: 1e-3,
                    z: 4.0,
                    min_expected: 10.0,
                    seed: SEED + i as u64,
                    jobs: 0,
                },
            )
        })
        .collect()
}

#[test]
fn acceptance() {
    let outcomes = vec![
        run(1, "exact laws vs enumeration, n <= 8", criterion_1),
        run(2, "V triangle recursion and normalization", criterion_2),
        run(3, "Stirling series and alternating i_k law", criterion_3),
        run(4, "conditional moments of X_m, W_m given i_m", criterion_4),
        run(5, "Mellin transforms", criterion_5),
        run(6, "records given frequencies are geometric", criterion_6),
        run(7, "record/frequency identity on random cases", criterion_7),
        run(8, "log decomposition of X_m", criterion_8),
        run(9, "Dirichlet mixture given i_k", criterion_9),
        run(10, "GEM moments and urn block counts", criterion_10),
    ];
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass()).map(|o| o.id).collect();
    for o in outcomes.iter().filter(|o| !o.pass()) {
        for r in &o.reports {
            for c in r.failures() {
                println!("  criterion {} {} {}: {} = {:e} (threshold {:e}) {:?}", o.id, r.model, r.suite, c.name, c.value, c.threshold, c.detail);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

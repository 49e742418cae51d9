//! `gibbs`: exact tables, samplers and self-checks for exchangeable Gibbs
//! partitions.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use gibbs_core::combin::{enumerate_compatible_compositions, gen_stirling, stirling_row};
use gibbs_core::laws::{self, MellinTable, Which};
use gibbs_core::sim::{self, par_draws, TailLaw, Truncation, DEFAULT_EPS, GENERATOR};
use gibbs_core::verify::{run_suite, RunConfig, Suite};
use gibbs_core::{FrequencyComposition, GibbsError, GibbsModel, ModelSpec, RecordIndexVector};

const DEFAULT_MODEL: &str = "ewens:theta=1";

#[derive(Parser, Debug)]
#[command(name = "gibbs", version, about = "Exact laws, samplers and checks for exchangeable Gibbs partitions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Model as `family:key=val,...` or inline JSON (default `ewens:theta=1`).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Model as a JSON file.
    #[arg(long, global = true)]
    model_file: Option<PathBuf>,
    /// RNG seed; falls back to GIBBS_SEED.
    #[arg(long, global = true, env = "GIBBS_SEED")]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo draws (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path (default stdout).
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum WhichArg {
    W,
    X,
    Both,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Cmd {
    /// EPPF, ordered and unordered laws of one frequency vector.
    Eppf {
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<usize>,
    },
    /// Law of the number of blocks K_n.
    Kn {
        #[arg(long)]
        n: usize,
    },
    /// Probability that the partition of [n] has exactly these record indices.
    RecordMarginal {
        #[arg(long, value_delimiter = ',', required = true)]
        records: Vec<usize>,
        /// Defaults to the last record.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Law of the k-th record index.
    IkMarginal {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        max_i: usize,
        /// Add the alternating-sum form as a second column.
        #[arg(long)]
        alternating: bool,
    },
    /// P(i_{j+1} = next | i_j = current) and P(i_{j+1} > next | i_j = current).
    Transition {
        #[arg(long)]
        j: usize,
        #[arg(long)]
        current: usize,
        #[arg(long)]
        max_next: usize,
    },
    /// Law of the age-ordered frequencies of [n] given the record indices.
    CondFreq {
        #[arg(long, value_delimiter = ',', required = true)]
        records: Vec<usize>,
        #[arg(long)]
        n: usize,
    },
    /// E(X_m^n | i_m) and E(W_m^n | i_m) for n = 0..max-n.
    Moments {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        i_m: usize,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
    },
    /// E(W_m^phi | i_m), E(X_m^phi | i_m) at real phi >= 0.
    Mellin {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        i_m: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<f64>,
        #[arg(long, value_enum, default_value_t = WhichArg::Both)]
        which: WhichArg,
    },
    /// Generalized Stirling numbers S_alpha(n, k).
    Stirling {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        /// Single k; default all k = 1..n.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Urn draws of the partition of [n].
    Urn {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
    },
    /// Record index chains up to a horizon.
    Records {
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
    },
    /// Two-parameter GEM sticks.
    Gem {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Frequencies given record indices. Without --theta the output is
    /// relative to W_K (the mass of the first K blocks).
    Ntl {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        records: Vec<usize>,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
        /// Two-parameter theta: draws W_K from its exact law.
        #[arg(long)]
        theta: Option<f64>,
        /// Items observed so far (no record in last+1..=horizon); default the last record.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Draws of -log X_m given i_m through the sum of independent pieces.
    Neglog {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        i_m: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        draws: usize,
    },
    /// Self-checks; exit status 1 if any check fails.
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        /// Multiplier on every Monte Carlo size.
        #[arg(long, default_value_t = 1.0)]
        mc_scale: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
    ChecksFailed,
}

impl From<GibbsError> for Failure {
    fn from(e: GibbsError) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Clone, Debug)]
enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as usize)
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Cell::from($x)),*] };
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn open_output(path: &Option<PathBuf>) -> Res<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_table(common: &Common, header: &Value, table: &Table) -> Res<()> {
    let mut out = open_output(&common.output)?;
    match common.format {
        Format::Csv => {
            writeln!(out, "# {header}")?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns)?;
            for r in &table.rows {
                w.write_record(r.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Vec<Value>> = table.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect();
            let doc = json!({ "header": header, "columns": table.columns, "rows": rows });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Failure::Config(e.to_string()))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn load_spec(common: &Common) -> Res<ModelSpec> {
    match (&common.model, &common.model_file) {
        (Some(_), Some(_)) => Err(Failure::Config("give either --model or --model-file, not both".into())),
        (Some(s), None) => Ok(s.parse()?),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            Ok(ModelSpec::from_json(&text)?)
        }
        (None, None) => Ok(DEFAULT_MODEL.parse()?),
    }
}

/// Builds the model with a table covering at least `need` items.
fn load_model(common: &Common, need: usize) -> Res<GibbsModel> {
    let spec = load_spec(common)?;
    let n_max = spec.n_max.unwrap_or(gibbs_core::model::DEFAULT_N_MAX);
    let spec = if n_max < need { spec.with_n_max(need) } else { spec };
    Ok(spec.build()?)
}

fn require_seed(common: &Common) -> Res<u64> {
    common
        .seed
        .ok_or_else(|| Failure::Config("a seed is required: pass --seed or set GIBBS_SEED".into()))
}

fn header(cmd: &Cmd, model: Option<&GibbsModel>, seed: Option<u64>, extra: Value) -> Value {
    let mut h = json!({
        "tool": "gibbs",
        "version": env!("CARGO_PKG_VERSION"),
        "args": cmd,
        "model": model.map(|m| serde_json::from_str::<Value>(&m.spec().to_json()).unwrap_or(Value::Null)),
    });
    if let Some(s) = seed {
        h["seed"] = json!(s);
        h["generator"] = json!(GENERATOR);
        h["streams"] = json!(format!("stream_id = draw / {}", sim::DRAWS_PER_STREAM));
    }
    if let Value::Object(map) = extra {
        for (k, v) in map {
            h[k] = v;
        }
    }
    h
}

fn records_arg(v: &[usize]) -> Res<RecordIndexVector> {
    Ok(RecordIndexVector::new(v.to_vec())?)
}

fn run(cli: Cli) -> Res<()> {
    let c = &cli.common;
    let cmd = &cli.cmd;
    match cmd {
        Cmd::Eppf { freqs } => {
            let comp = FrequencyComposition::new(freqs.clone())?;
            let model = load_model(c, comp.total())?;
            let mut t = Table::new(["freqs", "eppf", "ordered_pmf", "unordered_pmf"]);
            t.push(row![
                comp.to_string(),
                laws::eppf(&model, &comp)?.value(),
                laws::ordered_pmf(&model, &comp)?.value(),
                laws::unordered_pmf(&model, &comp)?.value(),
            ]);
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::Kn { n } => {
            let model = load_model(c, *n)?;
            let mut t = Table::new(["k", "prob"]);
            for k in 1..=*n {
                t.push(row![k, laws::kn_pmf(&model, *n, k)?.value()]);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::RecordMarginal { records, n } => {
            let rec = records_arg(records)?;
            let n = n.unwrap_or(rec.last());
            let model = load_model(c, n)?;
            let mut t = Table::new(["records", "n", "prob"]);
            t.push(row![rec.to_string(), n, laws::record_marginal(&model, n, &rec)?.value()]);
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::IkMarginal { k, max_i, alternating } => {
            let model = load_model(c, *max_i)?;
            let mut cols = vec!["i", "prob"];
            if *alternating {
                cols.push("prob_alternating");
            }
            let mut t = Table::new(cols);
            for i in *k..=*max_i {
                let mut r = row![i, laws::ik_marginal(&model, *k, i)?.value()];
                if *alternating {
                    r.push(Cell::Num(laws::ik_marginal_alternating(&model, *k, i)?.value()));
                }
                t.push(r);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::Transition { j, current, max_next } => {
            let model = load_model(c, *max_next)?;
            let mut t = Table::new(["next", "prob", "survival"]);
            for next in current + 1..=*max_next {
                t.push(row![
                    next,
                    laws::record_transition(&model, *j, *current, next)?.value(),
                    laws::record_survival(&model, *j, *current, next)?.value(),
                ]);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::CondFreq { records, n } => {
            let rec = records_arg(records)?;
            let model = load_model(c, *n)?;
            if rec.last() > *n {
                return Err(Failure::Config(format!("last record {} exceeds n = {n}", rec.last())));
            }
            let mut t = Table::new(["freqs", "prob"]);
            for comp in enumerate_compatible_compositions(&rec, *n) {
                let p = laws::cond_freq_given_records(model.alpha(), &comp, &rec)?;
                t.push(row![comp.to_string(), p.value()]);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::Moments { m, i_m, max_n } => {
            let model = load_model(c, i_m + max_n + 1)?;
            let mut t = Table::new(["n", "E_X", "E_W"]);
            for n in 0..=*max_n {
                t.push(row![
                    n,
                    laws::cond_moment_x(&model, *m, *i_m, n)?.value(),
                    laws::cond_moment_w(&model, *m, *i_m, n)?.value(),
                ]);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::Mellin { m, i_m, phi, which } => {
            let top = phi.iter().cloned().fold(0.0, f64::max).ceil() as usize;
            let model = load_model(c, i_m + top + 2)?;
            let table = MellinTable::new(&model);
            let mut cols = vec!["phi"];
            let (w, x) = match which {
                WhichArg::W => (true, false),
                WhichArg::X => (false, true),
                WhichArg::Both => (true, true),
            };
            if w {
                cols.push("E_W");
            }
            if x {
                cols.push("E_X");
            }
            let mut t = Table::new(cols);
            for &p in phi {
                let mut r = row![p];
                if w {
                    r.push(Cell::Num(table.moment(*m, *i_m, p, Which::W)?));
                }
                if x {
                    r.push(Cell::Num(table.moment(*m, *i_m, p, Which::X)?));
                }
                t.push(r);
            }
            write_table(c, &header(cmd, Some(&model), None, json!({})), &t)
        }
        Cmd::Stirling { alpha, n, k } => {
            let ks: Vec<usize> = match k {
                Some(k) => vec![*k],
                None => (1..=*n).collect(),
            };
            let linear = stirling_row(*n, *alpha)?;
            let mut t = Table::new(["n", "k", "value"]);
            for k in ks {
                if k == 0 || k > *n {
                    return Err(Failure::Config(format!("need 1 <= k <= n, got k = {k}")));
                }
                let v = linear[k - 1];
                t.push(row![*n, k, if v.is_finite() { v } else { gen_stirling(*n, k, *alpha)?.value() }]);
            }
            write_table(c, &header(cmd, None, None, json!({})), &t)
        }
        Cmd::Urn { n, draws } => {
            let seed = require_seed(c)?;
            let model = load_model(c, n + 1)?;
            let out = par_draws(seed, *draws, c.jobs, |rng| sim::sample_urn(&model, *n, rng))?;
            let mut t = Table::new(["draw", "partition", "freqs", "records", "K"]);
            for (d, u) in out.iter().enumerate() {
                t.push(row![
                    d,
                    u.partition.to_string(),
                    u.partition.frequencies().to_string(),
                    u.records.to_string(),
                    u.records.len(),
                ]);
            }
            write_table(c, &header(cmd, Some(&model), Some(seed), json!({})), &t)
        }
        Cmd::Records { horizon, draws } => {
            let seed = require_seed(c)?;
            let model = load_model(c, horizon + 1)?;
            let out = par_draws(seed, *draws, c.jobs, |rng| sim::sample_record_chain(&model, *horizon, rng))?;
            let mut t = Table::new(["draw", "records", "K", "terminated"]);
            for (d, r) in out.iter().enumerate() {
                t.push(row![d, join(&r.indices), r.len(), r.terminated]);
            }
            write_table(c, &header(cmd, Some(&model), Some(seed), json!({})), &t)
        }
        Cmd::Gem { alpha, theta, depth, draws, eps } => {
            let seed = require_seed(c)?;
            let model = ModelSpec::two_parameter(*alpha, *theta).build()?;
            let trunc = Truncation { depth: *depth, eps: *eps };
            let out = par_draws(seed, *draws, c.jobs, |rng| sim::sample_gem(*alpha, *theta, trunc, rng))?;
            let mut cols = vec!["draw".to_string()];
            cols.extend((1..=*depth).map(|j| format!("X_{j}")));
            cols.push("truncation_mass".into());
            let mut t = Table::new(cols);
            for (d, s) in out.iter().enumerate() {
                let mut r = row![d];
                r.extend((0..*depth).map(|j| s.x.get(j).map_or(Cell::Empty, |&v| Cell::Num(v))));
                r.push(Cell::Num(s.truncation_mass));
                t.push(r);
            }
            write_table(c, &header(cmd, Some(&model), Some(seed), json!({ "eps": eps })), &t)
        }
        Cmd::Ntl { alpha, records, depth, draws, theta, horizon, eps } => {
            let seed = require_seed(c)?;
            let rec = records_arg(records)?;
            let h = horizon.unwrap_or(rec.last());
            if h < rec.last() {
                return Err(Failure::Config(format!("horizon {h} is below the last record {}", rec.last())));
            }
            let model = match theta {
                Some(th) => Some(ModelSpec::two_parameter(*alpha, *th).build()?),
                None => None,
            };
            let tail = match &model {
                Some(m) => TailLaw::at_state(m, h, rec.len()),
                None => TailLaw::Normalized,
            };
            let trunc = Truncation { depth: *depth, eps: *eps };
            let out = par_draws(seed, *draws, c.jobs, |rng| {
                sim::sample_freqs_given_records(*alpha, rec.indices(), trunc, tail, rng)
            })?;
            let mut cols = vec!["draw".to_string()];
            cols.extend((1..*depth).map(|j| format!("xi_{j}")));
            for name in ["X", "W"] {
                cols.extend((1..=*depth).map(|j| format!("{name}_{j}")));
            }
            cols.push("truncation_mass".into());
            let mut t = Table::new(cols);
            let cell = |v: &Vec<f64>, j: usize| v.get(j).map_or(Cell::Empty, |&x| Cell::Num(x));
            for (d, s) in out.iter().enumerate() {
                let mut r = row![d];
                // xi_j = X_{j+1} / W_{j+1}
                r.extend((1..*depth).map(|j| cell(&s.xi, j - 1)));
                r.extend((0..*depth).map(|j| cell(&s.x, j)));
                r.extend((0..*depth).map(|j| cell(&s.w, j)));
                r.push(Cell::Num(s.truncation_mass));
                t.push(r);
            }
            let tail_name = match tail {
                TailLaw::Terminated => "terminated",
                TailLaw::Beta { .. } => "beta",
                TailLaw::Normalized => "normalized",
            };
            let extra = json!({ "alpha": alpha, "eps": eps, "tail": tail_name, "horizon": h });
            write_table(c, &header(cmd, model.as_ref(), Some(seed), extra), &t)
        }
        Cmd::Neglog { m, i_m, horizon, draws } => {
            let seed = require_seed(c)?;
            let model = load_model(c, horizon + 2)?;
            let out = par_draws(seed, *draws, c.jobs, |rng| sim::sample_neg_log_xm(&model, *m, *i_m, *horizon, rng))?;
            let mut t = Table::new(["draw", "neg_log_x", "tail_bound"]);
            for (d, v) in out.iter().enumerate() {
                t.push(row![d, v.value, v.tail_bound]);
            }
            write_table(c, &header(cmd, Some(&model), Some(seed), json!({})), &t)
        }
        Cmd::Verify { suite, max_n, mc_scale } => {
            let suites = Suite::parse_selection(suite)?;
            if !(*mc_scale > 0.0) {
                return Err(Failure::Config(format!("--mc-scale must be positive, got {mc_scale}")));
            }
            let model = load_model(c, *max_n)?;
            let seed = c.seed.unwrap_or(0);
            let cfg = RunConfig { seed, jobs: c.jobs, max_n: *max_n, mc_scale: *mc_scale };
            let mut reports = Vec::new();
            for s in suites {
                reports.push(run_suite(s, &model, &cfg)?);
            }
            let pass = reports.iter().all(|r| r.pass);
            let head = header(cmd, Some(&model), Some(seed), json!({}));
            match c.format {
                Format::Json => {
                    let mut out = open_output(&c.output)?;
                    let doc = json!({ "header": head, "pass": pass, "suites": reports });
                    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Failure::Config(e.to_string()))?;
                    writeln!(out)?;
                    out.flush()?;
                }
                Format::Csv => {
                    let mut t = Table::new(["suite", "check", "value", "relation", "threshold", "pass", "detail"]);
                    for r in &reports {
                        if let Some(why) = &r.skipped {
                            t.push(row![r.suite.clone(), "skipped".to_string(), Cell::Empty, Cell::Empty, Cell::Empty, true, why.clone()]);
                        }
                        for ch in &r.checks {
                            let rel = serde_json::to_value(ch.relation).ok().and_then(|v| v.as_str().map(String::from));
                            t.push(row![
                                r.suite.clone(),
                                ch.name.clone(),
                                ch.value,
                                rel.unwrap_or_default(),
                                ch.threshold,
                                ch.pass,
                                ch.detail.clone().unwrap_or_default(),
                            ]);
                        }
                    }
                    write_table(c, &head, &t)?;
                }
            }
            if pass {
                Ok(())
            } else {
                Err(Failure::ChecksFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed) => {
            eprintln!("gibbs: verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("gibbs: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("gibbs: numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

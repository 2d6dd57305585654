//! `mspc` subcommands. Every run prints one JSON `RunRecord`.

use std::ffi::OsString;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mspc_core::align::{
    alignment_full_group, alignment_gram_oracle, alignment_semidirect, alignment_subgroup, SubgroupSpec,
};
use mspc_core::arith::{sieve_with_limits, FunctionKind};
use mspc_core::error::Error;
use mspc_core::group::{char_stats, CharacterIndex, GroupShape};
use mspc_core::learn::covariance::{binary_mult_covariance, CovarianceMode};
use mspc_core::learn::csq::{csq_bad_event_rate, FixedFeatureLearner};
use mspc_core::learn::ngd::{ngd_experiment, NgdConfig};
use mspc_core::limits::Limits;
use mspc_core::primes::{count_primes_digit_condition_with, lambda_balanced_correlation_with, LinearDigitMap};
use mspc_core::spectral::katai::{katai_witness, DEFAULT_BUDGET};
use mspc_core::spectral::kernel::{ap_l1_sum, char_l1_norm, interval_l1_sum, linf_bound_check};
use mspc_core::spectral::transform::{correlation, group_spectrum_with, Spectrum};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "mspc", version, about = "Digital-character spectra of arithmetic functions")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Group shape, e.g. `2^10` or `2^2*3^2*5`.
    #[arg(long, global = true)]
    pub shape: Option<String>,
    /// Arithmetic function: mobius, liouville or von-mangoldt.
    #[arg(long, global = true, default_value = "mobius")]
    pub function: String,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON record here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write CSV plot data here.
    #[arg(long, global = true)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Memory cap in bytes; overrides MSPC_MEM_CAP.
    #[arg(long, global = true)]
    pub mem_cap: Option<u64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sieve an arithmetic function below a limit.
    Sieve {
        /// Table length; defaults to the shape order.
        #[arg(long)]
        limit: Option<usize>,
        /// Write the binary table here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Full spectrum of the function on the shape.
    Spectrum {
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// CSV dump of every coefficient.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
        /// Binary dump of every coefficient.
        #[arg(long)]
        dump_bin: Option<PathBuf>,
    },
    /// One coefficient f̂(a).
    Correlate {
        /// Character digits, e.g. `1,0,2` or `102`.
        #[arg(long)]
        a: String,
    },
    /// Alignment for a translation group, its digit-permutation extension or a subgroup.
    Align {
        #[arg(long, value_enum, default_value_t = GroupKind::Full)]
        group: GroupKind,
        /// Subgroup generators as integers, comma separated.
        #[arg(long, value_delimiter = ',')]
        generators: Vec<u64>,
    },
    /// Alignment from the Gram operator of the orbit, by power iteration.
    GramOracle {
        /// Group elements as integers; defaults to the whole group.
        #[arg(long, value_delimiter = ',')]
        elements: Vec<u64>,
    },
    /// Search for a large additive coefficient at a sparse p-adic rational.
    Katai {
        /// Character digits; defaults to the spectral argmax.
        #[arg(long)]
        a: Option<String>,
        /// Defaults to |f̂(a)|/2.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// ℓ∞, ℓ¹, progression and interval sums of character spectra.
    BoundsCheck {
        #[arg(long, value_enum, default_value_t = BoundKind::Linf)]
        kind: BoundKind,
        /// Character digits; linf scans every character when absent.
        #[arg(long)]
        a: Option<String>,
        #[arg(long, value_delimiter = ',')]
        gamma: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        b: Vec<u64>,
        #[arg(long)]
        lo: Option<u64>,
        #[arg(long)]
        hi: Option<u64>,
    },
    /// Count primes whose base-p digits satisfy L(x) = b.
    DigitalPnt {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: u32,
        /// Rows as digit strings separated by `;`, e.g. `102;011`.
        #[arg(long = "L")]
        l: String,
        /// Target vector, digits or comma separated.
        #[arg(long)]
        b: String,
    },
    /// Σ (Λ(n) − ν_p(n)) χ_a(n) over n < X.
    LambdaBalance {
        /// Character digits; defaults to the trivial character.
        #[arg(long)]
        a: Option<String>,
    },
    /// Spectrum of the binary-multiplicative covariance operator.
    Covariance {
        #[arg(long)]
        x: usize,
        #[arg(long, value_enum, default_value_t = CovMode::Formula)]
        mode: CovMode,
        /// Number of largest eigenvalues to list.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Noisy gradient descent trials against the NGD bound.
    Ngd {
        /// JSON config {shape, target, arch, T, R, tau, eta, eps, trials, seed}; overrides flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        /// Defaults to ‖h‖²/4.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Hidden widths, comma separated; input and output sizes are added.
        #[arg(long, value_delimiter = ',', default_value = "8")]
        hidden: Vec<usize>,
        /// Append the record to this JSON-lines log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Bad-event rate of the adversarial CSQ oracle over random translates.
    Csq {
        #[arg(long, default_value_t = 10)]
        q: usize,
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// max |f̂(a)| over all characters for a range of exponents.
    DecayTable {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, value_delimiter = ',', default_value = "10,14,18")]
        d: Vec<u32>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Full,
    Semidirect,
    Subgroup,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Linf,
    L1,
    Ap,
    Interval,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovMode {
    Formula,
    Explicit,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: Value,
    pub result: Value,
    pub seed: u64,
    pub wall_time: f64,
    pub version: String,
}

/// Exit status for a failed run.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::Resource { .. }) => 3,
            Failure::Core(Error::Io(_)) => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses argv, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Sieve { .. } => "sieve",
        Command::Spectrum { .. } => "spectrum",
        Command::Correlate { .. } => "correlate",
        Command::Align { .. } => "align",
        Command::GramOracle { .. } => "gram-oracle",
        Command::Katai { .. } => "katai",
        Command::BoundsCheck { .. } => "bounds-check",
        Command::DigitalPnt { .. } => "digital-pnt",
        Command::LambdaBalance { .. } => "lambda-balance",
        Command::Covariance { .. } => "covariance",
        Command::Ngd { .. } => "ngd",
        Command::Csq { .. } => "csq",
        Command::DecayTable { .. } => "decay-table",
    }
}

pub fn execute(cli: &Cli) -> Outcome<()> {
    if let Some(n) = cli.global.threads {
        // Ignored when a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let limits = match cli.global.mem_cap {
        Some(b) => Limits::from_mem_cap(b),
        None => Limits::from_env(),
    };
    let ctx = Ctx { global: &cli.global, limits };
    let start = Instant::now();
    let (params, result, plot) = dispatch(&ctx, &cli.command)?;
    let record = RunRecord {
        command: command_name(&cli.command).into(),
        params,
        result,
        seed: cli.global.seed,
        wall_time: start.elapsed().as_secs_f64(),
        version: VERSION.into(),
    };
    let text = serde_json::to_string_pretty(&record).expect("records serialize");
    if let (Some(path), Some(plot)) = (&cli.global.plot_data, plot) {
        plot.write(path)?;
    }
    match &cli.global.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        },
    }
    if let Command::Ngd { log: Some(path), .. } = &cli.command {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", serde_json::to_string(&record).expect("records serialize"))?;
    }
    Ok(())
}

struct Ctx<'a> {
    global: &'a Global,
    limits: Limits,
}

/// Numeric CSV with a header row.
pub struct PlotData {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl PlotData {
    fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }
}

impl Ctx<'_> {
    fn shape(&self) -> Outcome<GroupShape> {
        let s = self.global.shape.as_deref().ok_or_else(|| usage("--shape is required"))?;
        Ok(s.parse()?)
    }

    fn kind(&self) -> Outcome<FunctionKind> {
        let k: FunctionKind = self.global.function.parse()?;
        if k == FunctionKind::SquareIndicator {
            return Err(usage("--function must be mobius, liouville or von-mangoldt"));
        }
        Ok(k)
    }

    fn table(&self, len: usize) -> Outcome<Vec<f64>> {
        Ok(sieve_with_limits(self.kind()?, len, &self.limits)?.to_f64())
    }

    fn spectrum(&self, shape: &GroupShape) -> Outcome<(Vec<f64>, Spectrum)> {
        let f = self.table(shape.len())?;
        let sp = group_spectrum_with(&f, shape, &self.limits)?;
        Ok((f, sp))
    }
}

/// Accepts `1,0,2` or `102`.
fn parse_digits(s: &str) -> Outcome<Vec<u32>> {
    let s = s.trim();
    let parts: Vec<&str> = if s.contains(',') { s.split(',').collect() } else { s.split("").filter(|t| !t.is_empty()).collect() };
    parts
        .iter()
        .map(|t| t.trim().parse::<u32>().map_err(|_| usage(format!("bad digit {t:?} in {s:?}"))))
        .collect()
}

fn parse_char(s: &str, shape: &GroupShape) -> Outcome<CharacterIndex> {
    Ok(CharacterIndex::new(parse_digits(s)?, shape)?)
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im, "magnitude": z.norm() })
}

type Dispatched = (Value, Value, Option<PlotData>);

fn dispatch(ctx: &Ctx, cmd: &Command) -> Outcome<Dispatched> {
    let params = json!({
        "shape": ctx.global.shape,
        "function": ctx.global.function,
        "args": serde_json::to_value(cmd).expect("args serialize"),
    });
    let (result, plot) = match cmd {
        Command::Sieve { limit, dump } => sieve_cmd(ctx, *limit, dump.as_deref())?,
        Command::Spectrum { top, dump_csv, dump_bin } => spectrum_cmd(ctx, *top, dump_csv.as_deref(), dump_bin.as_deref())?,
        Command::Correlate { a } => {
            let shape = ctx.shape()?;
            let a = parse_char(a, &shape)?;
            let f = ctx.table(shape.len())?;
            (json!({ "a": a.digits(), "weight": a.weight(), "coefficient": complex(correlation(&f, &a, &shape)?) }), None)
        }
        Command::Align { group, generators } => align_cmd(ctx, *group, generators)?,
        Command::GramOracle { elements } => {
            let shape = ctx.shape()?;
            let f = ctx.table(shape.len())?;
            let elems: Vec<u64> = if elements.is_empty() { (0..shape.order()).collect() } else { elements.clone() };
            let value = alignment_gram_oracle(&f, &shape, &elems)?;
            (json!({ "value": value, "elements": elems.len() }), None)
        }
        Command::Katai { a, delta, budget } => katai_cmd(ctx, a.as_deref(), *delta, *budget)?,
        Command::BoundsCheck { kind, a, gamma, b, lo, hi } => bounds_cmd(ctx, *kind, a.as_deref(), gamma, b, *lo, *hi)?,
        Command::DigitalPnt { p, d, l, b } => pnt_cmd(ctx, *p, *d, l, b)?,
        Command::LambdaBalance { a } => {
            let shape = ctx.shape()?;
            let a = match a {
                Some(s) => parse_char(s, &shape)?,
                None => CharacterIndex::zero(&shape),
            };
            let r = lambda_balanced_correlation_with(&a, &shape, &ctx.limits)?;
            (json!({ "a": a.digits(), "raw": complex(r.raw), "normalized": complex(r.normalized) }), None)
        }
        Command::Covariance { x, mode, top } => covariance_cmd(*x, *mode, *top)?,
        Command::Ngd { config, steps, eta, r, tau, eps, trials, hidden, .. } => {
            let flags = NgdFlags { steps: *steps, eta: *eta, r: *r, tau: *tau, eps: *eps, trials: *trials, hidden: hidden.clone() };
            return ngd_cmd(ctx, config.as_deref(), flags);
        }
        Command::Csq { q, tau, samples } => {
            let shape = ctx.shape()?;
            let f = ctx.table(shape.len())?;
            let learner = FixedFeatureLearner::new(&shape, *q, ctx.global.seed)?;
            let r = csq_bad_event_rate(&f, &shape, &learner, *tau, *q, *samples, ctx.global.seed)?;
            (serde_json::to_value(r).expect("serializable"), None)
        }
        Command::DecayTable { p, d } => decay_cmd(ctx, *p, d)?,
    };
    Ok((params, result, plot))
}

fn sieve_cmd(ctx: &Ctx, limit: Option<usize>, dump: Option<&Path>) -> Outcome<(Value, Option<PlotData>)> {
    let len = match limit {
        Some(l) => l,
        None => ctx.shape()?.len(),
    };
    let t = sieve_with_limits(ctx.kind()?, len, &ctx.limits)?;
    if let Some(p) = dump {
        t.write_to(BufWriter::new(File::create(p)?))?;
    }
    let v = t.to_f64();
    let mut partial = 0.0;
    let mut rows = Vec::with_capacity(v.len());
    for (n, x) in v.iter().enumerate() {
        partial += x;
        rows.push(vec![n as f64, *x, partial]);
    }
    let result = json!({
        "kind": t.kind().name(),
        "limit": len,
        "sum": partial,
        "nonzero": v.iter().filter(|x| **x != 0.0).count(),
        "head": &v[..v.len().min(16)],
    });
    Ok((result, Some(PlotData { header: vec!["n", "value", "partial_sum"], rows })))
}

fn char_entry(shape: &GroupShape, flat: usize, c: Complex64) -> Value {
    let digits = shape.digits_of_flat(flat);
    let weight = digits.iter().filter(|&&v| v != 0).count();
    json!({ "flat": flat, "digits": digits, "weight": weight, "re": c.re, "im": c.im, "magnitude": c.norm() })
}

fn spectrum_cmd(ctx: &Ctx, top: usize, csv: Option<&Path>, bin: Option<&Path>) -> Outcome<(Value, Option<PlotData>)> {
    let shape = ctx.shape()?;
    let (_, sp) = ctx.spectrum(&shape)?;
    if let Some(p) = csv {
        sp.write_csv(BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = bin {
        sp.write_binary(BufWriter::new(File::create(p)?))?;
    }
    let entries: Vec<Value> = sp.top(top).into_iter().map(|(f, c)| char_entry(&shape, f, c)).collect();
    let rows = sp.coeffs().iter().enumerate().map(|(i, c)| vec![i as f64, c.norm()]).collect();
    Ok((
        json!({ "order": shape.order(), "mass": sp.mass(), "top": entries }),
        Some(PlotData { header: vec!["flat_index", "magnitude"], rows }),
    ))
}

fn align_cmd(ctx: &Ctx, group: GroupKind, generators: &[u64]) -> Outcome<(Value, Option<PlotData>)> {
    let shape = ctx.shape()?;
    let (_, sp) = ctx.spectrum(&shape)?;
    let r = match group {
        GroupKind::Full => alignment_full_group(&sp),
        GroupKind::Semidirect => alignment_semidirect(&sp)?,
        GroupKind::Subgroup => {
            let sub = SubgroupSpec::new(&shape, generators)?;
            let r = alignment_subgroup(&sp, &sub);
            let mut v = serde_json::to_value(&r).expect("serializable");
            v["subgroup_order"] = json!(sub.order);
            v["annihilator_order"] = json!(sub.annihilator_order);
            v["shape"] = json!(shape.to_string());
            return Ok((v, None));
        }
    };
    let mut v = serde_json::to_value(&r).expect("serializable");
    v["shape"] = json!(shape.to_string());
    Ok((v, None))
}

fn katai_cmd(ctx: &Ctx, a: Option<&str>, delta: Option<f64>, budget: u64) -> Outcome<(Value, Option<PlotData>)> {
    let shape = ctx.shape()?;
    let (f, sp) = ctx.spectrum(&shape)?;
    let a = match a {
        Some(s) => parse_char(s, &shape)?,
        None => CharacterIndex::from_flat(sp.argmax().0, &shape)?,
    };
    let coeff = sp.get(&a).norm();
    let delta = delta.unwrap_or(coeff / 2.0);
    let out = katai_witness(&f, &a, &shape, delta, budget)?;
    let mut v = serde_json::to_value(&out).expect("serializable");
    v["a"] = json!(a.digits());
    v["delta"] = json!(delta);
    v["coefficient"] = json!(coeff);
    Ok((v, None))
}

fn bounds_cmd(
    ctx: &Ctx,
    kind: BoundKind,
    a: Option<&str>,
    gamma: &[u32],
    b: &[u64],
    lo: Option<u64>,
    hi: Option<u64>,
) -> Outcome<(Value, Option<PlotData>)> {
    let shape = ctx.shape()?;
    let single = |a: Option<&str>| -> Outcome<CharacterIndex> {
        parse_char(a.ok_or_else(|| usage("--a is required for this kind"))?, &shape)
    };
    let v = match kind {
        BoundKind::Linf => match a {
            Some(s) => {
                let a = parse_char(s, &shape)?;
                serde_json::to_value(linf_bound_check(&a, &shape)?).expect("serializable")
            }
            None => return linf_scan(&shape),
        },
        BoundKind::L1 => {
            let a = single(a)?;
            json!({ "a": a.digits(), "l1": char_l1_norm(&a, &shape)? })
        }
        BoundKind::Ap => {
            let a = single(a)?;
            let r = shape.num_blocks();
            let gamma = if gamma.is_empty() { vec![0; r] } else { gamma.to_vec() };
            let b = if b.is_empty() { vec![0; r] } else { b.to_vec() };
            serde_json::to_value(ap_l1_sum(&a, &shape, &gamma, &b)?).expect("serializable")
        }
        BoundKind::Interval => {
            let a = single(a)?;
            let (lo, hi) = (lo.unwrap_or(0), hi.unwrap_or(shape.order()));
            serde_json::to_value(interval_l1_sum(&a, &shape, lo, hi)?).expect("serializable")
        }
    };
    Ok((v, None))
}

const LINF_SCAN_CAP: usize = 1 << 16;

fn linf_scan(shape: &GroupShape) -> Outcome<(Value, Option<PlotData>)> {
    if shape.len() > LINF_SCAN_CAP {
        return Err(Failure::Core(Error::Resource {
            what: "characters to scan",
            requested: shape.order(),
            cap: LINF_SCAN_CAP as u64,
        }));
    }
    let (mut violations, mut edges) = (Vec::new(), 0usize);
    let mut rows = Vec::with_capacity(shape.len());
    for flat in 0..shape.len() {
        let a = CharacterIndex::from_flat(flat, shape)?;
        let c = linf_bound_check(&a, shape)?;
        if !c.ok {
            violations.push(flat);
        }
        edges += c.equality as usize;
        rows.push(vec![flat as f64, a.weight() as f64, c.measured, c.bound]);
    }
    Ok((
        json!({ "characters": shape.len(), "violations": violations, "equality_edges": edges }),
        Some(PlotData { header: vec!["flat_index", "weight", "measured", "bound"], rows }),
    ))
}

fn pnt_cmd(ctx: &Ctx, p: u64, d: u32, l: &str, b: &str) -> Outcome<(Value, Option<PlotData>)> {
    let shape = GroupShape::prime_power(p, d)?;
    let map = LinearDigitMap::parse(p, d as usize, l)?;
    let b: Vec<u64> = parse_digits(b)?.into_iter().map(u64::from).collect();
    let r = count_primes_digit_condition_with(&map, &b, &shape, &ctx.limits)?;
    let mut v = serde_json::to_value(&r).expect("serializable");
    v["series"] = json!(format!("{}/{}", r.series.value.numer(), r.series.value.denom()));
    v["series_numerator"] = json!(r.series.value.numer());
    v["series_denominator"] = json!(r.series.value.denom());
    v["main_term"] = json!(six_significant(r.main_term));
    v["case"] = serde_json::to_value(r.series.case).expect("serializable");
    v["m"] = json!(map.m());
    Ok((v, None))
}

fn six_significant(x: f64) -> f64 {
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn covariance_cmd(x: usize, mode: CovMode, top: usize) -> Outcome<(Value, Option<PlotData>)> {
    let mode = match mode {
        CovMode::Formula => CovarianceMode::Formula,
        CovMode::Explicit => CovarianceMode::Explicit,
    };
    let s = binary_mult_covariance(x, mode)?;
    let mut eigen = s.eigen.clone();
    eigen.sort_by(|a, b| b.lambda.total_cmp(&a.lambda).then(a.a.cmp(&b.a)));
    let max_residual = s.eigen.iter().filter_map(|e| e.residual).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let rows = s.eigen.iter().map(|e| vec![e.a as f64, e.lambda]).collect();
    Ok((
        json!({
            "x": x,
            "mode": s.mode,
            "op_norm": s.op_norm,
            "eigenvalues": s.eigen.len(),
            "top": &eigen[..eigen.len().min(top)],
            "max_residual": max_residual,
            "trace_gap": s.trace_gap,
        }),
        Some(PlotData { header: vec!["a", "lambda"], rows }),
    ))
}

struct NgdFlags {
    steps: usize,
    eta: f64,
    r: f64,
    tau: f64,
    eps: Option<f64>,
    trials: usize,
    hidden: Vec<usize>,
}

/// Experiment config file.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub shape: String,
    pub target: String,
    /// Full layer sizes, input through output.
    pub arch: Vec<usize>,
    #[serde(rename = "T")]
    pub steps: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub tau: f64,
    pub eta: f64,
    pub eps: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

fn ngd_cmd(ctx: &Ctx, config: Option<&Path>, flags: NgdFlags) -> Outcome<Dispatched> {
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| usage(format!("bad config: {e}")))?
        }
        None => {
            let shape = ctx.shape()?;
            let mut arch = vec![2 * shape.dim()];
            arch.extend(&flags.hidden);
            arch.push(1);
            ExperimentConfig {
                shape: shape.to_string(),
                target: ctx.global.function.clone(),
                arch,
                steps: flags.steps,
                r: flags.r,
                tau: flags.tau,
                eta: flags.eta,
                eps: flags.eps,
                trials: flags.trials,
                seed: ctx.global.seed,
            }
        }
    };
    let shape: GroupShape = cfg.shape.parse()?;
    let kind: FunctionKind = cfg.target.parse()?;
    let target = sieve_with_limits(kind, shape.len(), &ctx.limits)?.to_f64();
    let norm2 = target.iter().map(|v| v * v).sum::<f64>() / target.len() as f64;
    let eps = cfg.eps.unwrap_or(norm2 / 4.0);
    let ngd = NgdConfig { steps: cfg.steps, eta: cfg.eta, r: cfg.r, tau: cfg.tau, seed: cfg.seed, eps, baseline: None };
    let e = ngd_experiment(&target, &shape, &ngd, cfg.trials, &cfg.arch)?;
    let rows = e.final_losses.iter().enumerate().map(|(i, l)| vec![i as f64, *l]).collect();
    let mut v = serde_json::to_value(&e).expect("serializable");
    v["eps"] = json!(eps);
    let params = json!({ "config": cfg });
    Ok((params, v, Some(PlotData { header: vec!["trial", "final_loss"], rows })))
}

fn decay_cmd(ctx: &Ctx, p: u64, ds: &[u32]) -> Outcome<(Value, Option<PlotData>)> {
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for &d in ds {
        let shape = GroupShape::prime_power(p, d)?;
        let (_, sp) = ctx.spectrum(&shape)?;
        let (flat, m) = sp.argmax();
        let a = CharacterIndex::from_flat(flat, &shape)?;
        let stats = char_stats(&a, &shape)?;
        out.push(json!({
            "d": d,
            "order": shape.order(),
            "max_abs": m,
            "argmax": flat,
            "weight": stats.weight,
            "class_size": stats.class_size.to_string(),
        }));
        rows.push(vec![d as f64, shape.order() as f64, m]);
    }
    Ok((json!({ "p": p, "rows": out }), Some(PlotData { header: vec!["d", "order", "max_abs"], rows })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_strings() {
        assert_eq!(parse_digits("102").unwrap(), vec![1, 0, 2]);
        assert_eq!(parse_digits("1, 0,12").unwrap(), vec![1, 0, 12]);
        assert!(parse_digits("1x").is_err());
    }

    #[test]
    fn six_digits() {
        assert_eq!(six_significant(4886.246917553465), 4886.25);
        assert_eq!(six_significant(0.000123456789), 0.000123457);
    }

    #[test]
    fn in_process_run_exit_codes() {
        assert_eq!(run(["mspc", "--help"]), 0);
        assert_eq!(run(["mspc", "nope"]), 2);
    }
}

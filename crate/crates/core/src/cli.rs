//! Command-line front end.
//!
//! Every command writes one JSON report (to `--out`, or stdout) that embeds
//! the command line configuration, the seed and the library version, and an
//! optional CSV summary (`--csv`). Exit codes: 0 on success, 2 when a search
//! finds nothing or a constant is unbounded, 1 on input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::equivalence::{distribution_compare, generate_family, moment_criterion, FamilyKind};
use crate::error::{LacunaError, Result};
use crate::exact::{parse_rational, QSqrt2};
use crate::extension::{check_extension_condition, extend_multiplicative, verify_multiplicative};
use crate::kfunctional::{holmstedt, k_exact, kappa, CoefficientVector};
use crate::qnorm::{q_norm_exact, q_norm_heuristic, EXACT_LIMIT};
use crate::selection::{greedy_select, kashin_select, EpsilonSchedule};
use crate::systems::{Polynomial, StepFunction, SystemSpec, Weight};
use crate::tails::build_envelope;

pub const SEED_ENV: &str = "LACUNA_SEED";

#[derive(Parser, Debug, Serialize)]
#[command(name = "lacuna", version, about = "K-functionals, partition norms, tail envelopes and subsystem selection")]
pub struct Cli {
    /// JSON report path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV summary path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Seed for searches and generated families; LACUNA_SEED takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact K-functional, Holmstedt expression and κ(t) = K(√t).
    Kfunc(KfuncArgs),
    /// Partition norm Q(t) with its optimal blocks.
    Qnorm(QnormArgs),
    /// Tail envelope against the exact (or enclosed) tail.
    Tails(TailsArgs),
    /// Randomized search for an index set with vanishing pattern sums.
    SelectKashin(KashinArgs),
    /// Greedy selection under a tolerance schedule.
    SelectGreedy(GreedyArgs),
    /// Multiplicative extension of step functions on [0,1] to [0,2].
    Extend(ExtendArgs),
    /// Distribution equivalence constant between two systems.
    VerifyEquiv(EquivArgs),
    /// Multiplicativity of a set of step functions or of system members.
    CheckMult(CheckMultArgs),
    /// Band of ‖P‖_t / κ(t, a) over a family.
    MomentBand(BandArgs),
}

#[derive(Args, Debug, Serialize, Default)]
pub struct CoeffArgs {
    /// Inline coefficients, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// JSON file holding one vector or an array of vectors.
    #[arg(long)]
    pub a_file: Option<PathBuf>,
    /// Generated family `kind:m:count` with kind one of sparse, flat,
    /// geometric, uniform, mixed.
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct KfuncArgs {
    #[command(flatten)]
    pub coeffs: CoeffArgs,
    /// Comma separated t values.
    #[arg(long)]
    pub t: String,
}

#[derive(Args, Debug, Serialize)]
pub struct QnormArgs {
    #[command(flatten)]
    pub coeffs: CoeffArgs,
    /// Number of blocks.
    #[arg(long)]
    pub t: usize,
    /// Use the greedy heuristic instead of the exact search.
    #[arg(long)]
    pub heuristic: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TailsArgs {
    #[arg(long)]
    pub system: String,
    /// Indices (1-based, `1,3,5-8`); defaults to the initial segment.
    #[arg(long)]
    pub indices: Option<String>,
    #[command(flatten)]
    pub coeffs: CoeffArgs,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Rademacher constant; defaults to `beta`.
    #[arg(long)]
    pub beta_prime: Option<f64>,
    /// Comma separated levels; defaults to the atoms of the exact law.
    #[arg(long)]
    pub z_grid: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct KashinArgs {
    #[arg(long)]
    pub system: String,
    /// Candidates are 1..=n (defaults to the system size).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s: usize,
    /// Uniform bound, e.g. `1`, `3/2`, `sqrt2`; defaults to the system's.
    #[arg(long = "D")]
    pub d: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct GreedyArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Explicit schedule, comma separated.
    #[arg(long)]
    pub eps: Option<String>,
    /// Geometric schedule `len:first:ratio`.
    #[arg(long)]
    pub eps_geometric: Option<String>,
    /// Constant weight h (rational), default 1.
    #[arg(long)]
    pub h: Option<String>,
    /// Step-function weight h as JSON.
    #[arg(long)]
    pub h_file: Option<PathBuf>,
    #[arg(long = "D")]
    pub d: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtendArgs {
    /// JSON array of step functions on [0,1] (or `{"functions": [...]}`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "D")]
    pub d: String,
    /// Where the extended functions are written.
    #[arg(long, default_value = "h.json")]
    pub output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EquivArgs {
    #[arg(long = "sysF")]
    pub sys_f: String,
    #[arg(long = "sysG")]
    pub sys_g: String,
    #[arg(long = "indicesF")]
    pub indices_f: Option<String>,
    #[arg(long = "indicesG")]
    pub indices_g: Option<String>,
    #[command(flatten)]
    pub coeffs: CoeffArgs,
    #[arg(long)]
    pub z_grid: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct CheckMultArgs {
    /// JSON array of step functions.
    pub file: Option<PathBuf>,
    /// Check members of a system instead.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub indices: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct BandArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long)]
    pub indices: Option<String>,
    #[command(flatten)]
    pub coeffs: CoeffArgs,
    #[arg(long, default_value = "1,2,4,8,16,32")]
    pub t_grid: String,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    status: &'a str,
    config: &'a Cli,
    result: T,
}

/// Summary written with `--csv`.
enum Table {
    Rows { header: Vec<&'static str>, rows: Vec<Vec<String>> },
    Raw(String),
}

struct Outcome {
    status: &'static str,
    result: Value,
    table: Table,
    code: i32,
}

impl Outcome {
    fn ok(result: Value, table: Table) -> Self {
        Self { status: "ok", result, table, code: 0 }
    }
}

fn bad(msg: impl Into<String>) -> LacunaError {
    LacunaError::InvalidInput(msg.into())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<T>().map_err(|_| bad(format!("{what}: cannot parse {:?}", x.trim()))))
        .collect()
}

/// `1,3,5-8` → `[1, 3, 5, 6, 7, 8]`.
pub fn parse_indices(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(format!("indices: bad range {part:?}")))?;
                let b: usize = b.trim().parse().map_err(|_| bad(format!("indices: bad range {part:?}")))?;
                if a > b {
                    return Err(bad(format!("indices: empty range {part:?}")));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad(format!("indices: cannot parse {part:?}")))?),
        }
    }
    if out.is_empty() {
        return Err(bad("indices: empty list"));
    }
    Ok(out)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| bad(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))
}

fn from_json<T: serde::de::DeserializeOwned>(v: Value, path: &Path, field: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| bad(format!("{}: field {field}: {e}", path.display())))
}

fn load_family(args: &CoeffArgs, seed: u64) -> Result<Vec<CoefficientVector>> {
    let given = [args.a.is_some(), args.a_file.is_some(), args.family.is_some()].iter().filter(|x| **x).count();
    if given != 1 {
        return Err(bad("give exactly one of --a, --a-file, --family"));
    }
    if let Some(a) = &args.a {
        return Ok(vec![CoefficientVector::new(parse_list(a, "--a")?)?]);
    }
    if let Some(path) = &args.a_file {
        let v = read_json(path)?;
        let rows: Vec<Vec<f64>> = match &v {
            Value::Array(items) if items.iter().all(Value::is_number) => vec![from_json(v, path, "coefficients")?],
            _ => from_json(v, path, "coefficients")?,
        };
        if rows.is_empty() {
            return Err(bad(format!("{}: no vectors", path.display())));
        }
        return rows.into_iter().map(CoefficientVector::new).collect();
    }
    let spec = args.family.as_deref().unwrap();
    let parts: Vec<&str> = spec.split(':').collect();
    let [kind, m, count] = parts[..] else {
        return Err(bad(format!("--family {spec:?}: expected kind:m:count")));
    };
    let kind = FamilyKind::from_str(kind)?;
    let m = m.parse().map_err(|_| bad(format!("--family {spec:?}: bad length")))?;
    let count = count.parse().map_err(|_| bad(format!("--family {spec:?}: bad count")))?;
    generate_family(kind, m, count, seed)
}

fn load_step_functions(path: &Path) -> Result<Vec<StepFunction>> {
    let v = read_json(path)?;
    let list = match v {
        Value::Object(mut map) => map.remove("functions").ok_or_else(|| {
            bad(format!("{}: expected an array or an object with \"functions\"", path.display()))
        })?,
        other => other,
    };
    from_json(list, path, "functions")
}

fn bound(arg: &Option<String>, system: &SystemSpec) -> Result<QSqrt2> {
    match arg {
        Some(d) => QSqrt2::parse(d),
        None => Ok(system.bound().clone()),
    }
}

fn indices_or_initial(arg: &Option<String>, m: usize) -> Result<Vec<usize>> {
    match arg {
        Some(s) => parse_indices(s),
        None => Ok((1..=m).collect()),
    }
}

fn common_len(family: &[CoefficientVector]) -> Result<usize> {
    let m = family[0].len();
    if family.iter().any(|a| a.len() != m) {
        return Err(bad("all coefficient vectors must have the same length"));
    }
    Ok(m)
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn kfunc(args: &KfuncArgs, seed: u64) -> Result<Outcome> {
    let family = load_family(&args.coeffs, seed)?;
    let ts: Vec<f64> = parse_list(&args.t, "--t")?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (k, a) in family.iter().enumerate() {
        for &t in &ts {
            let split = k_exact(a, t)?;
            let h = holmstedt(a, t);
            let kap = kappa(a, t)?;
            rows.push(vec![k.to_string(), t.to_string(), split.value.to_string(), h.to_string()]);
            results.push(json!({ "vector": k, "t": t, "k": split, "holmstedt": h, "kappa": kap }));
        }
    }
    Ok(Outcome::ok(Value::Array(results), Table::Rows { header: vec!["vector", "t", "k", "holmstedt"], rows }))
}

fn qnorm(args: &QnormArgs, seed: u64) -> Result<Outcome> {
    let family = load_family(&args.coeffs, seed)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (k, a) in family.iter().enumerate() {
        let exact = !args.heuristic && a.len() <= EXACT_LIMIT;
        let r = if exact { q_norm_exact(a, args.t)? } else { q_norm_heuristic(a, args.t)? };
        let blocks: Vec<String> =
            r.blocks.iter().map(|b| b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")).collect();
        rows.push(vec![k.to_string(), r.value.to_string(), blocks.join("|")]);
        results.push(json!({ "vector": k, "exact": exact, "value": r.value, "blocks": r.blocks }));
    }
    Ok(Outcome::ok(Value::Array(results), Table::Rows { header: vec!["vector", "value", "blocks"], rows }))
}

fn tails(args: &TailsArgs, seed: u64) -> Result<Outcome> {
    let system: SystemSpec = args.system.parse()?;
    let family = load_family(&args.coeffs, seed)?;
    let m = common_len(&family)?;
    let indices = indices_or_initial(&args.indices, m)?;
    let explicit: Option<Vec<f64>> = args.z_grid.as_deref().map(|z| parse_list(z, "--z-grid")).transpose()?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (k, a) in family.iter().enumerate() {
        let env = build_envelope(a, args.beta, args.alpha, args.beta_prime.unwrap_or(args.beta))?;
        let poly = Polynomial::with_indices(&system, &indices, a)?;
        let law = poly.law()?;
        let grid = match &explicit {
            Some(z) => z.clone(),
            None => match law.as_exact() {
                Some(d) => d.magnitudes().iter().copied().filter(|z| *z > 0.0).collect(),
                None => (1..=32).map(|j| law.sup().hi * j as f64 / 32.0).collect(),
            },
        };
        let mut points = Vec::new();
        let mut violations = 0;
        for z in grid {
            let tail = law.tail(z);
            let (lo, hi) = (env.lower(z)?, env.upper(z)?);
            let inside = lo <= tail.hi && tail.lo <= hi;
            violations += usize::from(!inside);
            rows.push(vec![k.to_string(), z.to_string(), tail.mid().to_string(), lo.to_string(), hi.to_string()]);
            points.push(json!({ "z": z, "tail": tail, "lower": lo, "upper": hi, "inside": inside }));
        }
        results.push(json!({
            "vector": k,
            "envelope": env,
            "lower_cutoff": env.lower_cutoff(),
            "upper_cutoff": env.upper_cutoff(),
            "violations": violations,
            "points": points,
        }));
    }
    Ok(Outcome::ok(Value::Array(results), Table::Rows { header: vec!["vector", "z", "tail", "lower", "upper"], rows }))
}

fn select_kashin(args: &KashinArgs, seed: u64) -> Result<Outcome> {
    let system: SystemSpec = args.system.parse()?;
    let d = bound(&args.d, &system)?;
    let n = args.n.unwrap_or(system.len());
    let header = vec!["status", "indices", "condition_sum", "threshold"];
    match kashin_select(&system, n, args.s, &d, args.budget, seed) {
        Ok(cert) => {
            let row = vec![
                "ok".into(),
                cert.indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                cert.condition_sum.to_string(),
                cert.threshold.to_string(),
            ];
            Ok(Outcome::ok(to_value(&cert), Table::Rows { header, rows: vec![row] }))
        }
        Err(LacunaError::NotFound { best_sum, best_indices }) => {
            let row = vec![
                "not_found".into(),
                best_indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                best_sum.to_string(),
                format!("1e-{}", args.s),
            ];
            Ok(Outcome {
                status: "not_found",
                result: json!({ "best_sum": best_sum, "best_indices": best_indices, "budget": args.budget }),
                table: Table::Rows { header, rows: vec![row] },
                code: 2,
            })
        }
        Err(e) => Err(e),
    }
}

fn select_greedy(args: &GreedyArgs) -> Result<Outcome> {
    let system: SystemSpec = args.system.parse()?;
    let d = bound(&args.d, &system)?;
    let schedule = match (&args.eps, &args.eps_geometric) {
        (Some(e), None) => EpsilonSchedule::new(parse_list(e, "--eps")?, &d)?,
        (None, Some(g)) => {
            let p: Vec<&str> = g.split(':').collect();
            let [len, first, ratio] = p[..] else {
                return Err(bad(format!("--eps-geometric {g:?}: expected len:first:ratio")));
            };
            let len = len.parse().map_err(|_| bad("--eps-geometric: bad length"))?;
            let first = first.parse().map_err(|_| bad("--eps-geometric: bad first term"))?;
            let ratio = ratio.parse().map_err(|_| bad("--eps-geometric: bad ratio"))?;
            EpsilonSchedule::geometric(len, first, ratio, &d)?
        }
        _ => return Err(bad("give exactly one of --eps, --eps-geometric")),
    };
    let h = match (&args.h, &args.h_file) {
        (None, None) => Weight::one(),
        (Some(c), None) => Weight::Constant(parse_rational(c)?),
        (None, Some(p)) => Weight::Step(from_json(read_json(p)?, p, "h")?),
        _ => return Err(bad("give at most one of --h, --h-file")),
    };
    let horizon = args.horizon.unwrap_or(system.len());
    let header = vec!["position", "index", "sum", "threshold"];
    match greedy_select(&system, horizon, &schedule, &h, &d) {
        Ok(cert) => {
            let rows = cert
                .steps
                .iter()
                .map(|s| vec![s.position.to_string(), s.index.to_string(), s.sum.to_string(), s.threshold.to_string()])
                .collect();
            Ok(Outcome::ok(to_value(&cert), Table::Rows { header, rows }))
        }
        Err(LacunaError::HorizonExhausted { accepted, requested }) => Ok(Outcome {
            status: "not_found",
            result: json!({ "accepted": accepted, "requested": requested, "horizon": horizon }),
            table: Table::Rows { header, rows: Vec::new() },
            code: 2,
        }),
        Err(e) => Err(e),
    }
}

fn extend(args: &ExtendArgs) -> Result<Outcome> {
    let g = load_step_functions(&args.input)?;
    let d = QSqrt2::parse(&args.d)?;
    let check = check_extension_condition(&g, &d)?;
    let ext = extend_multiplicative(&g, &d)?;
    let text = serde_json::to_string_pretty(&ext.functions).expect("step functions serialize");
    fs::write(&args.output, text + "\n").map_err(|e| bad(format!("{}: {e}", args.output.display())))?;
    let verify = verify_multiplicative(&ext.functions)?;
    let rows = ext
        .plan
        .intervals
        .iter()
        .map(|iv| {
            vec![
                iv.k.to_string(),
                iv.support.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                crate::exact::format_rational(&iv.alpha),
                crate::exact::format_rational(&iv.mean),
            ]
        })
        .collect();
    Ok(Outcome::ok(
        json!({ "condition": check, "plan": ext.plan, "verification": verify, "output": args.output }),
        Table::Rows { header: vec!["k", "support", "alpha", "mean"], rows },
    ))
}

fn verify_equiv(args: &EquivArgs, seed: u64) -> Result<Outcome> {
    let sys_f: SystemSpec = args.sys_f.parse()?;
    let sys_g: SystemSpec = args.sys_g.parse()?;
    let family = load_family(&args.coeffs, seed)?;
    let m = common_len(&family)?;
    let indices_f = indices_or_initial(&args.indices_f, m)?;
    let indices_g = indices_or_initial(&args.indices_g, m)?;
    let z: Option<Vec<f64>> = args.z_grid.as_deref().map(|z| parse_list(z, "--z-grid")).transpose()?;
    match distribution_compare(&sys_f, &sys_g, &indices_f, &indices_g, &family, z.as_deref()) {
        Ok(rep) => {
            let mut buf = Vec::new();
            rep.write_csv(&mut buf)?;
            Ok(Outcome::ok(to_value(&rep), Table::Raw(String::from_utf8(buf).expect("utf-8"))))
        }
        Err(LacunaError::Unbounded(c)) => Ok(Outcome {
            status: "unbounded",
            result: json!({ "c_max": c, "family_size": family.len() }),
            table: Table::Rows { header: vec!["status", "c_max"], rows: vec![vec!["unbounded".into(), c.to_string()]] },
            code: 2,
        }),
        Err(e) => Err(e),
    }
}

fn check_mult(args: &CheckMultArgs) -> Result<Outcome> {
    let header = vec!["ok", "worst_subset", "worst_value"];
    match (&args.file, &args.system) {
        (Some(path), None) => {
            let h = load_step_functions(path)?;
            let rep = verify_multiplicative(&h)?;
            let row = vec![
                rep.ok.to_string(),
                rep.worst_subset.as_ref().map(|s| fmt_usize(s)).unwrap_or_default(),
                rep.worst_value.as_ref().map(crate::exact::format_rational).unwrap_or_default(),
            ];
            Ok(Outcome::ok(to_value(&rep), Table::Rows { header, rows: vec![row] }))
        }
        (None, Some(sys)) => {
            let system: SystemSpec = sys.parse()?;
            let indices = indices_or_initial(&args.indices, system.len())?;
            let (ok, worst) = system.is_multiplicative(&indices)?;
            let (strong, strong_worst) = system.is_strongly_multiplicative(&indices)?;
            let row = vec![
                ok.to_string(),
                worst.as_ref().map(|w| format!("{:?}", w.0.entries())).unwrap_or_default(),
                worst.as_ref().map(|w| w.1.to_string()).unwrap_or_default(),
            ];
            Ok(Outcome::ok(
                json!({
                    "ok": ok,
                    "worst": worst,
                    "strongly_multiplicative": strong,
                    "strong_worst": strong_worst,
                }),
                Table::Rows { header, rows: vec![row] },
            ))
        }
        _ => Err(bad("give either a file or --system")),
    }
}

fn fmt_usize(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn band(args: &BandArgs, seed: u64) -> Result<Outcome> {
    let system: SystemSpec = args.system.parse()?;
    let family = load_family(&args.coeffs, seed)?;
    let m = common_len(&family)?;
    let indices = indices_or_initial(&args.indices, m)?;
    let t_grid: Vec<f64> = parse_list(&args.t_grid, "--t-grid")?;
    let band = moment_criterion(&system, &indices, &family, &t_grid)?;
    let rows = band
        .ratios
        .iter()
        .enumerate()
        .map(|(k, r)| vec![k.to_string(), fmt_vec(family[k].entries()), fmt_vec(r)])
        .collect();
    Ok(Outcome::ok(to_value(&band), Table::Rows { header: vec!["vector", "coefficients", "ratios"], rows }))
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let io = |e: std::io::Error| bad(format!("{}: {e}", path.display()));
    let (header, rows) = match table {
        Table::Raw(text) => return fs::write(path, text).map_err(io),
        Table::Rows { header, rows } => (header, rows),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| bad(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Seed in effect: `LACUNA_SEED` if set, else `--seed`.
pub fn effective_seed(cli: &Cli) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| bad(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(cli.seed),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Kfunc(_) => "kfunc",
        Command::Qnorm(_) => "qnorm",
        Command::Tails(_) => "tails",
        Command::SelectKashin(_) => "select-kashin",
        Command::SelectGreedy(_) => "select-greedy",
        Command::Extend(_) => "extend",
        Command::VerifyEquiv(_) => "verify-equiv",
        Command::CheckMult(_) => "check-mult",
        Command::MomentBand(_) => "moment-band",
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let seed = effective_seed(cli)?;
    let outcome = match &cli.command {
        Command::Kfunc(a) => kfunc(a, seed)?,
        Command::Qnorm(a) => qnorm(a, seed)?,
        Command::Tails(a) => tails(a, seed)?,
        Command::SelectKashin(a) => select_kashin(a, seed)?,
        Command::SelectGreedy(a) => select_greedy(a)?,
        Command::Extend(a) => extend(a)?,
        Command::VerifyEquiv(a) => verify_equiv(a, seed)?,
        Command::CheckMult(a) => check_mult(a)?,
        Command::MomentBand(a) => band(a, seed)?,
    };
    let report = Report {
        command: command_name(&cli.command),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        status: outcome.status,
        config: cli,
        result: outcome.result,
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| bad(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(path) = &cli.csv {
        write_csv(path, &outcome.table)?;
    }
    Ok(outcome.code)
}

/// Entry point shared by the binary: parses `args`, runs, maps errors to
/// exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e @ (LacunaError::NotFound { .. } | LacunaError::Unbounded(_) | LacunaError::HorizonExhausted { .. })) => {
            eprintln!("lacuna: {e}");
            2
        }
        Err(e) => {
            eprintln!("lacuna: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists() {
        assert_eq!(parse_indices("1,3,5-7").unwrap(), vec![1, 3, 5, 6, 7]);
        assert!(parse_indices("4-2").is_err());
        assert!(parse_indices("").is_err());
    }

    #[test]
    fn family_sources() {
        let inline = CoeffArgs { a: Some("1, -2,3".into()), ..Default::default() };
        assert_eq!(load_family(&inline, 0).unwrap()[0].entries(), &[1.0, -2.0, 3.0]);
        let generated = CoeffArgs { family: Some("flat:4:3".into()), ..Default::default() };
        assert_eq!(load_family(&generated, 1).unwrap().len(), 3);
        assert!(load_family(&CoeffArgs::default(), 0).is_err());
        let bad_spec = CoeffArgs { family: Some("flat:4".into()), ..Default::default() };
        assert!(load_family(&bad_spec, 0).is_err());
    }

    #[test]
    fn json_diagnostics_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.json");
        fs::write(&p, "[\n  {\"breakpoints\": [\"0\", \"1\"],\n   \"values\": [1,]}\n]").unwrap();
        let err = load_step_functions(&p).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}

//! Argument handling for the `hlgauge` binary.
//!
//! Every flag is validated before any computation starts, and every
//! subcommand that takes `--seed` is byte-reproducible. Exit codes: 0 pass,
//! 1 confirmed violation, 2 usage or config error, 3 inconclusive after
//! escalation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hlgauge::experiments::{
    compare_schedules, hl_verify, inclusion_demo, load_tensor_file, regularity_probe,
    ExperimentConfig, ExperimentError, ExperimentKind, ExperimentReport, ReportFormat,
    ScheduleComparison, TabulatedKernel,
};
use hlgauge::exponents::{Exponent, ExponentVector};
use hlgauge::mform::{norm_alternating, AscentOptions, MultilinearForm};
use hlgauge::mixed::mixed_norm;
use hlgauge::numfmt::{g17, g6};
use hlgauge::scalar::ScalarField;
use hlgauge::schedules::{
    anps_min_schedule, bhhl_admissible, dsp_exponent, schedule_bayart, schedule_hl,
    schedule_inclusion, schedule_pellegrino, Condition,
};
use hlgauge::tensor::TensorData;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "hlgauge",
    version,
    about = "Mixed-norm schedules and multilinear norm verification",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a summing-exponent schedule as exact fractions.
    Schedule(ScheduleArgs),
    /// Mixed norm of a tensor file under per-axis exponents.
    MixedNorm(MixedNormArgs),
    /// Estimate a form's operator norm on the product of unit balls.
    MformNorm(MformNormArgs),
    /// Check the mixed-norm coefficient bound on sampled tensors.
    HlVerify(RunArgs),
    /// Compare the two summing-norm probes linked by an inclusion.
    InclusionDemo(RunArgs),
    /// Sample hypothesis and conclusion quotients of a tabulated kernel.
    RegularityProbe(RunArgs),
    /// Tabulate competing schedules side by side.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Theorem {
    Inclusion,
    Bayart,
    Pellegrino,
    Hl,
    Dsp,
    Anps,
    Bhhl,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    /// Number of slots; defaults to the length of --p.
    #[arg(long)]
    m: Option<usize>,
    /// Input exponents, e.g. `4,4,4` or `3` with --m (fractions and `inf`).
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// Candidate schedule; only `--theorem bhhl` reads it.
    #[arg(long)]
    s: Option<String>,
    /// Add a decimal rendering (6 significant digits) under the exact one.
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct MixedNormArgs {
    /// Tensor file (JSON, or binary starting with the HLGT magic).
    #[arg(long)]
    tensor: PathBuf,
    /// Per-axis exponents, outermost first.
    #[arg(long)]
    p: String,
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct MformNormArgs {
    /// Tensor file with the form's coefficients.
    #[arg(long)]
    tensor: PathBuf,
    /// Domain exponents, one per slot.
    #[arg(long)]
    p: String,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; explicit flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Per-slot dimensions, e.g. `4,4`.
    #[arg(long)]
    dims: Option<String>,
    /// Tensor family: rademacher, gaussian, rank_one, or custom.
    #[arg(long)]
    family: Option<String>,
    /// Scalar field: real or complex.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Tensor file for `--family custom`.
    #[arg(long)]
    tensor: Option<PathBuf>,
    /// Tabulated kernel JSON (regularity-probe only).
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// Report destination; without it the report prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct CompareArgs {
    /// Slot count for isotropic shorthand, e.g. `--m 3 --p 4`.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: String,
    #[arg(long)]
    float: bool,
}

/// Runs the CLI against real stdout/stderr and returns the process exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Same as [`run`] but with injected streams, for tests.
pub fn run_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_OK;
        }
    };
    if let Err(msg) = init_thread_pool() {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    let result = match cli.command {
        Command::Schedule(args) => cmd_schedule(&args, out, err),
        Command::MixedNorm(args) => cmd_mixed_norm(&args, out),
        Command::MformNorm(args) => cmd_mform_norm(&args, out),
        Command::HlVerify(args) => cmd_run(ExperimentKind::HlVerify, &args, out),
        Command::InclusionDemo(args) => cmd_run(ExperimentKind::InclusionDemo, &args, out),
        Command::RegularityProbe(args) => cmd_run(ExperimentKind::RegularityProbe, &args, out),
        Command::Compare(args) => cmd_compare(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Applies `HLGAUGE_THREADS` to the global worker pool, once per process.
fn init_thread_pool() -> Result<(), String> {
    static DONE: OnceLock<Result<(), String>> = OnceLock::new();
    DONE.get_or_init(|| {
        let Some(raw) = std::env::var_os("HLGAUGE_THREADS") else {
            return Ok(());
        };
        let n: usize = raw
            .to_str()
            .and_then(|s| s.parse().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                format!("HLGAUGE_THREADS must be a positive integer, got {raw:?}")
            })?;
        // A second init in the same process keeps the first pool; that is
        // fine, the cap already applies.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        Ok(())
    })
    .clone()
}

fn parse_exponent(flag: &str, value: Option<&String>) -> Result<Exponent, String> {
    let raw = value.ok_or_else(|| format!("--{flag} is required for this theorem"))?;
    raw.parse()
        .map_err(|e| format!("--{flag} {raw}: {e}"))
}

/// Parses an exponent list; a single entry replicates to `m` slots when
/// `--m` asks for more.
fn parse_exponent_vector(
    flag: &str,
    value: Option<&String>,
    m: Option<usize>,
) -> Result<ExponentVector, String> {
    let raw = value.ok_or_else(|| format!("--{flag} is required for this theorem"))?;
    let v: ExponentVector = raw.parse().map_err(|e| format!("--{flag} {raw}: {e}"))?;
    match m {
        Some(m) if v.len() == 1 && m > 1 => {
            Ok(ExponentVector::constant(v.get(1).expect("len 1").clone(), m)
                .expect("m checked positive"))
        }
        Some(m) if v.len() != m => Err(format!(
            "--{flag} has {} entries but --m is {m}",
            v.len()
        )),
        _ => Ok(v),
    }
}

fn parse_dims(raw: &str) -> Result<Vec<usize>, String> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| format!("--dims {raw}: {e}"))
        })
        .collect()
}

fn write_conditions(err: &mut dyn Write, conditions: &[Condition]) {
    for c in conditions.iter().filter(|c| !c.holds) {
        let _ = writeln!(err, "hypothesis failed: {} ({})", c.name, c.detail);
    }
}

fn print_schedule(
    out: &mut dyn Write,
    err: &mut dyn Write,
    schedule: Option<&ExponentVector>,
    conditions: &[Condition],
    float: bool,
) -> Result<i32, String> {
    let ok = conditions.iter().all(|c| c.holds);
    match schedule {
        Some(s) if ok => {
            let _ = writeln!(out, "{}", s.display_list());
            if float {
                let floats: Vec<String> = s.iter().map(|e| g6(e.as_f64())).collect();
                let _ = writeln!(out, "{}", floats.join(", "));
            }
            Ok(EXIT_OK)
        }
        _ => {
            write_conditions(err, conditions);
            Ok(EXIT_USAGE)
        }
    }
}

fn print_scalar_schedule(
    out: &mut dyn Write,
    err: &mut dyn Write,
    value: Option<&Exponent>,
    conditions: &[Condition],
    float: bool,
) -> Result<i32, String> {
    let ok = conditions.iter().all(|c| c.holds);
    match value {
        Some(e) if ok => {
            let _ = writeln!(out, "{e}");
            if float {
                let _ = writeln!(out, "{}", g6(e.as_f64()));
            }
            Ok(EXIT_OK)
        }
        _ => {
            write_conditions(err, conditions);
            Ok(EXIT_USAGE)
        }
    }
}

fn cmd_schedule(
    args: &ScheduleArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    match args.theorem {
        Theorem::Inclusion => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let q = parse_exponent_vector("q", args.q.as_ref(), Some(p.len()))?;
            let r = parse_exponent("r", args.r.as_ref())?;
            let res = schedule_inclusion(&r, &p, &q).map_err(|e| e.to_string())?;
            print_schedule(out, err, res.schedule.as_ref(), &res.conditions, args.float)
        }
        Theorem::Bayart => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let q = parse_exponent_vector("q", args.q.as_ref(), Some(p.len()))?;
            let r = parse_exponent("r", args.r.as_ref())?;
            let res = schedule_bayart(&r, &p, &q).map_err(|e| e.to_string())?;
            print_scalar_schedule(out, err, res.value.as_ref(), &res.conditions, args.float)
        }
        Theorem::Pellegrino => {
            let m = args.m.ok_or("--m is required for this theorem")?;
            let p = parse_exponent("p", args.p.as_ref())?;
            let q = parse_exponent("q", args.q.as_ref())?;
            let r = parse_exponent("r", args.r.as_ref())?;
            let res = schedule_pellegrino(&r, &p, &q, m).map_err(|e| e.to_string())?;
            print_scalar_schedule(out, err, res.value.as_ref(), &res.conditions, args.float)
        }
        Theorem::Hl => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let res = schedule_hl(args.m.unwrap_or(p.len()), &p).map_err(|e| e.to_string())?;
            print_schedule(out, err, res.schedule.as_ref(), &res.conditions, args.float)
        }
        Theorem::Dsp => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let res = dsp_exponent(&p);
            print_scalar_schedule(out, err, res.value.as_ref(), &res.conditions, args.float)
        }
        Theorem::Anps => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let res = anps_min_schedule(&p);
            print_schedule(out, err, res.schedule.as_ref(), &res.conditions, args.float)
        }
        Theorem::Bhhl => {
            let p = parse_exponent_vector("p", args.p.as_ref(), args.m)?;
            let s = parse_exponent_vector("s", args.s.as_ref(), Some(p.len()))?;
            let res = bhhl_admissible(&p, &s).map_err(|e| e.to_string())?;
            let _ = writeln!(
                out,
                "{}",
                if res.admissible { "admissible" } else { "not admissible" }
            );
            for c in &res.conditions {
                let _ = writeln!(
                    out,
                    "  {} {} ({})",
                    if c.holds { "ok " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_mixed_norm(args: &MixedNormArgs, out: &mut dyn Write) -> Result<i32, String> {
    let p: ExponentVector = args
        .p
        .parse()
        .map_err(|e| format!("--p {}: {e}", args.p))?;
    let data = load_tensor_file(&args.tensor.display().to_string()).map_err(|e| e.to_string())?;
    let value = match &data {
        TensorData::Real(t) => mixed_norm(t, &p),
        TensorData::Complex(t) => mixed_norm(t, &p),
    }
    .map_err(|e| e.to_string())?;
    let _ = writeln!(out, "{}", if args.float { g6(value) } else { g17(value) });
    Ok(EXIT_OK)
}

fn cmd_mform_norm(args: &MformNormArgs, out: &mut dyn Write) -> Result<i32, String> {
    let p: ExponentVector = args
        .p
        .parse()
        .map_err(|e| format!("--p {}: {e}", args.p))?;
    let data = load_tensor_file(&args.tensor.display().to_string()).map_err(|e| e.to_string())?;
    let opts = AscentOptions {
        restarts: args.restarts,
        max_iters: 500,
        tol: args.tol,
        seed: args.seed,
    };
    let (value, method, degenerate) = match data {
        TensorData::Real(t) => {
            let form = MultilinearForm::new(t, p).map_err(|e| e.to_string())?;
            let est = norm_alternating(&form, &opts);
            (est.value, est.method, est.degenerate)
        }
        TensorData::Complex(t) => {
            let form = MultilinearForm::new(t, p).map_err(|e| e.to_string())?;
            let est = norm_alternating(&form, &opts);
            (est.value, est.method, est.degenerate)
        }
    };
    let _ = writeln!(out, "{}", if args.float { g6(value) } else { g17(value) });
    if degenerate {
        let _ = writeln!(out, "note: some restarts hit a degenerate slot ({method})");
    }
    Ok(EXIT_OK)
}

/// Builds the effective config: file first, then flags on top.
fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let config: ExperimentConfig =
                serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
            if config.kind != kind {
                return Err(format!(
                    "config file is for {}, but the subcommand is {}",
                    config.kind, kind
                ));
            }
            config
        }
        None => {
            let m = args.m.ok_or("--m or --config is required")?;
            ExperimentConfig::new(kind, m)
        }
    };
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(raw) = &args.r {
        config.r = Some(raw.parse().map_err(|e| format!("--r {raw}: {e}"))?);
    }
    if let Some(raw) = &args.p {
        config.p = Some(parse_exponent_vector("p", Some(raw), Some(config.m))?);
    }
    if let Some(raw) = &args.q {
        config.q = Some(parse_exponent_vector("q", Some(raw), Some(config.m))?);
    }
    if let Some(raw) = &args.dims {
        config.dims = parse_dims(raw)?;
    }
    if let Some(raw) = &args.family {
        config.tensor_family = raw.parse().map_err(|e: ExperimentError| e.to_string())?;
    }
    if let Some(raw) = &args.field {
        config.scalar_field = match raw.as_str() {
            "real" => ScalarField::Real,
            "complex" => ScalarField::Complex,
            other => return Err(format!("--field must be real or complex, got {other}")),
        };
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(restarts) = args.restarts {
        config.restarts = restarts;
    }
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if let Some(path) = &args.tensor {
        config.tensor_path = Some(path.display().to_string());
    }
    Ok(config)
}

fn cmd_run(kind: ExperimentKind, args: &RunArgs, out: &mut dyn Write) -> Result<i32, String> {
    let format: ReportFormat = args
        .format
        .parse()
        .map_err(|e: ExperimentError| e.to_string())?;
    let config = build_config(kind, args)?;
    let report = match kind {
        ExperimentKind::HlVerify => hl_verify(&config),
        ExperimentKind::InclusionDemo => inclusion_demo(&config),
        ExperimentKind::RegularityProbe => {
            let path = args
                .kernel
                .as_ref()
                .ok_or("--kernel is required for regularity-probe")?;
            let bytes = std::fs::read(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let kernel = TabulatedKernel::from_json_bytes(&bytes).map_err(|e| e.to_string())?;
            regularity_probe(&kernel, &config)
        }
        ExperimentKind::ExponentTable => unreachable!("no subcommand maps to exponent_table"),
    }
    .map_err(|e| e.to_string())?;
    emit_report(&report, args.out.as_deref(), format, out)
}

fn emit_report(
    report: &ExperimentReport,
    out_path: Option<&std::path::Path>,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<i32, String> {
    match out_path {
        Some(path) => {
            hlgauge::experiments::write_report(report, path, format).map_err(|e| e.to_string())?;
            let _ = writeln!(out, "{}", summary_line(report));
        }
        None => {
            report.validate().map_err(|e| e.to_string())?;
            match format {
                ReportFormat::Json => {
                    let _ = writeln!(out, "{}", report.to_canonical_json());
                }
                ReportFormat::Csv => {
                    let _ = write!(out, "{}", report.to_csv_string());
                }
            }
        }
    }
    Ok(report.exit_code())
}

fn summary_line(report: &ExperimentReport) -> String {
    let s = &report.summary;
    let verdict = match report.exit_code() {
        0 => "pass",
        1 => "violation",
        _ => "inconclusive",
    };
    let mut line = format!(
        "{} verdict={} schedule=\"{}\" max_ratio={} bound={} trials={} violations={} \
         findings={} inconclusive={} skipped={}",
        report.config.kind,
        verdict,
        report.schedule.display_list(),
        g17(s.max_ratio),
        g17(s.bound),
        report.records.len(),
        s.violations,
        s.findings,
        s.inconclusive,
        s.skipped,
    );
    if let Some(c) = s.c_hyp {
        line.push_str(&format!(" c_hyp={}", g17(c)));
    }
    line
}

/// Right-pads cells into aligned columns, two spaces between them.
fn print_table(out: &mut dyn Write, headers: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let render = |cells: Vec<String>| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < cells.len() {
                for _ in cell.len()..widths[i] {
                    line.push(' ');
                }
            }
        }
        line
    };
    let _ = writeln!(
        out,
        "{}",
        render(headers.iter().map(|h| h.to_string()).collect())
    );
    for row in rows {
        let _ = writeln!(out, "{}", render(row.clone()));
    }
}

fn exponent_cell(e: Option<&Exponent>, ok: bool, float: bool) -> String {
    match e {
        Some(e) if ok => {
            if float {
                format!("{e} ({})", g6(e.as_f64()))
            } else {
                e.to_string()
            }
        }
        _ => "-".to_string(),
    }
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32, String> {
    let p = parse_exponent_vector("p", Some(&args.p), args.m)?;
    let cmp: ScheduleComparison = compare_schedules(&p);
    let hl_ok = cmp.hl.hypothesis_ok();
    let dsp_ok = cmp.dsp.hypothesis_ok();
    let anps_ok = cmp.anps.hypothesis_ok();
    let rows: Vec<Vec<String>> = (0..p.len())
        .map(|i| {
            let hl = cmp
                .hl
                .schedule
                .as_ref()
                .map(|s| s.get(i + 1).expect("in range"));
            let anps = cmp
                .anps
                .schedule
                .as_ref()
                .map(|s| s.get(i + 1).expect("in range"));
            let vs = match cmp.hl_vs_dsp[i] {
                Some(std::cmp::Ordering::Less) => "<",
                Some(std::cmp::Ordering::Equal) => "=",
                Some(std::cmp::Ordering::Greater) => ">",
                None => "-",
            };
            vec![
                format!("{}", i + 1),
                format!("{}", p.get(i + 1).expect("in range")),
                exponent_cell(hl, hl_ok, args.float),
                exponent_cell(cmp.dsp.value.as_ref(), dsp_ok, args.float),
                vs.to_string(),
                exponent_cell(anps, anps_ok, args.float),
            ]
        })
        .collect();
    print_table(out, &["k", "p", "hl", "dsp", "vs", "anps"], &rows);
    for (label, conditions) in [
        ("hl", &cmp.hl.conditions),
        ("dsp", &cmp.dsp.conditions),
        ("anps", &cmp.anps.conditions),
    ] {
        for c in conditions.iter().filter(|c| !c.holds) {
            let _ = writeln!(out, "{label}: hypothesis failed: {} ({})", c.name, c.detail);
        }
    }
    Ok(EXIT_OK)
}

//! Command-line front end over the core library: exact CDF tables, Monte
//! Carlo depth histograms, DKW-gated comparison, regularity reports, atom
//! queries and the embedded acceptance checks.
//!
//! Exit codes: 0 success, 2 validation error, 3 gate failure (compare and
//! selftest only). Output is byte-deterministic for a fixed flag set modulo
//! the timestamp metadata field, which --no-timestamp removes.

use clap::{Args, Parser, Subcommand, ValueEnum};
use derham_core::analysis::{atom_jump_extrapolated, atom_mass, regularity_report};
use derham_core::cdf::{build_table, delta0_table, DeRhamModel};
use derham_core::empirics::{cross_level_distance, dkw_epsilon, ecdf, ks_against_exact};
use derham_core::selftest::{library_criteria, CriterionOutcome};
use derham_core::walk::{simulate_ranges_budgeted, DepthHistogram, DEFAULT_BUDGET};
use derham_core::Dyadic;
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "derham-range", version, disable_help_subcommand = true)]
#[command(about = "Scaled-range distribution of a self-interacting walk: \
exact CDF tables, Monte Carlo, and regularity analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the exact CDF table at a dyadic grid (CSV or JSON)
    Cdf(Flags),
    /// Sample excursion depths at level N and print the histogram
    Simulate(Flags),
    /// Gate a Monte Carlo run against the exact table (exit 3 on failure)
    Compare(Flags),
    /// Regularity report: classification, residuals, dimensions, atoms
    Analyze(Flags),
    /// Atom mass at a dyadic point, with a finite-depth cross-check
    Atoms(Flags),
    /// Run the embedded acceptance checks (exit 3 on any failure)
    Selftest(Flags),
}

/// One flat flag set shared by every subcommand; each command consumes its
/// own subset and rejects the rest when explicitly supplied.
#[derive(Args)]
struct Flags {
    /// Interaction parameter u > 0 (u = 0 admitted by cdf and analyze)
    #[arg(long)]
    u: Option<f64>,
    /// Dyadic refinement level N
    #[arg(long)]
    level: Option<u32>,
    /// Monte Carlo sample count
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed (surfaced in the output)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (histograms do not depend on it)
    #[arg(long)]
    workers: Option<usize>,
    /// Comparison grid level (must not exceed --level)
    #[arg(long)]
    grid_level: Option<u32>,
    /// Recorded agreement tolerance between mass and finite_n_check
    #[arg(long)]
    tol: Option<f64>,
    /// Output format (csv applies to cdf only)
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dyadic point "k/2^n" (atoms)
    #[arg(long)]
    x: Option<String>,
    /// Omit the timestamp field for byte-reproducible output
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

pub fn run_from_args() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(code) => code,
            Err(msg) => {
                eprintln!("error: {msg}");
                2
            }
        },
        // clap reserves stdout (exit 0) for --help/--version and stderr for
        // genuine parse errors, which share the validation exit code
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.cmd {
        Cmd::Cdf(f) => cmd_cdf(f),
        Cmd::Simulate(f) => cmd_simulate(f),
        Cmd::Compare(f) => cmd_compare(f),
        Cmd::Analyze(f) => cmd_analyze(f),
        Cmd::Atoms(f) => cmd_atoms(f),
        Cmd::Selftest(f) => cmd_selftest(f),
    }
}

// ---------------------------------------------------------------- plumbing

fn core_err(e: derham_core::Error) -> String {
    e.to_string()
}

fn require_u(f: &Flags) -> Result<f64, String> {
    let u = f.u.ok_or("--u is required")?;
    if !u.is_finite() || u < 0.0 {
        return Err(format!("--u must be a finite value >= 0, got {u}"));
    }
    Ok(u)
}

fn require_positive_u(f: &Flags, cmd: &str) -> Result<f64, String> {
    let u = require_u(f)?;
    if u == 0.0 {
        return Err(format!(
            "u = 0 is the deterministic walk (point mass at 0); {cmd} needs u > 0"
        ));
    }
    Ok(u)
}

/// Rejects flags that were explicitly supplied but have no meaning for the
/// running command, naming the offender.
fn reject_unused(f: &Flags, cmd: &str, allowed: &[&str]) -> Result<(), String> {
    let supplied: [(&str, bool); 9] = [
        ("--u", f.u.is_some()),
        ("--level", f.level.is_some()),
        ("--samples", f.samples.is_some()),
        ("--grid-level", f.grid_level.is_some()),
        ("--tol", f.tol.is_some()),
        ("--format", f.format.is_some()),
        ("--x", f.x.is_some()),
        ("--seed", f.seed.is_some()),
        ("--workers", f.workers.is_some()),
    ];
    for (name, given) in supplied {
        if given && !allowed.contains(&name) {
            return Err(format!("{name} does not apply to {cmd}"));
        }
    }
    Ok(())
}

fn budget_from_env() -> Result<f64, String> {
    match std::env::var("DERHAM_RANGE_BUDGET") {
        Err(_) => Ok(DEFAULT_BUDGET),
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(|v| v as f64)
            .map_err(|_| format!("DERHAM_RANGE_BUDGET must be a positive integer, got {s:?}")),
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The (u, level, seed, workers, version) header every command embeds.
fn meta_value(u: f64, level: u32, seed: u64, workers: usize, no_ts: bool) -> Value {
    let mut m = Map::new();
    m.insert("u".into(), json!(u));
    m.insert("level".into(), json!(level));
    m.insert("seed".into(), json!(seed));
    m.insert("workers".into(), json!(workers));
    m.insert("version".into(), json!(VERSION));
    if !no_ts {
        m.insert("timestamp".into(), json!(timestamp()));
    }
    Value::Object(m)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// A float with 17 significant digits (enough to round-trip f64 exactly),
/// printed as a plain decimal; trailing zeros trimmed, endpoints bare.
fn fmt_sig17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v == 1.0 {
        return "1".into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1; // value = 0.<digits> * 10^point
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    if point <= 0 {
        s.push_str("0.");
        s.extend(std::iter::repeat_n('0', -point as usize));
        s.push_str(digits.trim_end_matches('0'));
    } else if point as usize >= digits.len() {
        s.push_str(&digits);
        s.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        s.push_str(&digits[..point as usize]);
        let frac = digits[point as usize..].trim_end_matches('0');
        if !frac.is_empty() {
            s.push('.');
            s.push_str(frac);
        }
    }
    s
}

// ---------------------------------------------------------------- commands

fn cmd_cdf(f: Flags) -> Result<i32, String> {
    reject_unused(
        &f,
        "cdf",
        &["--u", "--level", "--format", "--seed", "--workers"],
    )?;
    let u = require_u(&f)?;
    let level = f.level.unwrap_or(10);
    let seed = f.seed.unwrap_or(42);
    let workers = f.workers.unwrap_or(1);
    let table = if u == 0.0 {
        delta0_table(level).map_err(core_err)?
    } else {
        build_table(&DeRhamModel::new(u).map_err(core_err)?, level).map_err(core_err)?
    };
    let content = match f.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = format!("# u={u} level={level} seed={seed} workers={workers} version={VERSION}\n");
            if !f.no_timestamp {
                let _ = writeln!(s, "# timestamp={}", timestamp());
            }
            s.push_str("x,cdf\n");
            for (j, v) in table.values.iter().enumerate() {
                let x = Dyadic::new(j as u64, level).expect("grid point");
                let _ = writeln!(s, "{},{}", x.exact_decimal(), fmt_sig17(*v));
            }
            s
        }
        Format::Json => {
            let points: Vec<Value> = table
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let x = Dyadic::new(j as u64, level).expect("grid point");
                    json!({"x": x.exact_decimal(), "cdf": v})
                })
                .collect();
            let mut m = Map::new();
            m.insert("meta".into(), meta_value(u, level, seed, workers, f.no_timestamp));
            m.insert("level".into(), json!(level));
            m.insert("points".into(), Value::Array(points));
            render_json(&Value::Object(m))
        }
    };
    emit(&f.out, &content)?;
    Ok(0)
}

/// Shared by the simulate command and the determinism acceptance check:
/// the exact bytes `simulate` prints for this configuration.
pub fn render_simulate(
    u: f64,
    level: u32,
    samples: u64,
    seed: u64,
    workers: usize,
    budget: f64,
    no_timestamp: bool,
) -> Result<String, String> {
    let hist = simulate_ranges_budgeted(u, level, samples, seed, workers, budget)
        .map_err(core_err)?;
    Ok(render_histogram(u, &hist, samples, workers, no_timestamp))
}

fn render_histogram(
    u: f64,
    hist: &DepthHistogram,
    samples: u64,
    workers: usize,
    no_timestamp: bool,
) -> String {
    let mut counts = Map::new();
    for (depth, count) in &hist.counts {
        counts.insert(depth.to_string(), json!(count));
    }
    let mut m = Map::new();
    m.insert(
        "meta".into(),
        meta_value(u, hist.level, hist.seed, workers, no_timestamp),
    );
    m.insert("level".into(), json!(hist.level));
    m.insert("samples".into(), json!(samples));
    m.insert("seed".into(), json!(hist.seed));
    m.insert("workers".into(), json!(workers));
    m.insert("counts".into(), Value::Object(counts));
    render_json(&Value::Object(m))
}

fn cmd_simulate(f: Flags) -> Result<i32, String> {
    reject_unused(
        &f,
        "simulate",
        &["--u", "--level", "--samples", "--seed", "--workers"],
    )?;
    let u = require_positive_u(&f, "simulate")?;
    let level = f.level.unwrap_or(10);
    let samples = f.samples.unwrap_or(100_000);
    let seed = f.seed.unwrap_or(42);
    let workers = f.workers.unwrap_or(1).max(1);
    let content = render_simulate(u, level, samples, seed, workers, budget_from_env()?, f.no_timestamp)?;
    emit(&f.out, &content)?;
    Ok(0)
}

fn cmd_compare(f: Flags) -> Result<i32, String> {
    reject_unused(
        &f,
        "compare",
        &["--u", "--level", "--samples", "--seed", "--workers", "--grid-level"],
    )?;
    let u = require_positive_u(&f, "compare")?;
    let level = f.level.unwrap_or(10);
    let samples = f.samples.unwrap_or(100_000);
    let seed = f.seed.unwrap_or(42);
    let workers = f.workers.unwrap_or(1).max(1);
    let grid_level = f.grid_level.unwrap_or(6);
    let model = DeRhamModel::new(u).map_err(core_err)?;
    let hist = simulate_ranges_budgeted(u, level, samples, seed, workers, budget_from_env()?)
        .map_err(core_err)?;
    let e = ecdf(&hist).map_err(core_err)?;
    let ks = ks_against_exact(&e, &model, grid_level).map_err(core_err)?;
    let dkw99 = dkw_epsilon(samples, 0.99).map_err(core_err)?;
    let pass = ks <= dkw99;
    let mut m = Map::new();
    let mut meta = meta_value(u, level, seed, workers, f.no_timestamp);
    let obj = meta.as_object_mut().expect("object");
    obj.insert("samples".into(), json!(samples));
    obj.insert("grid_level".into(), json!(grid_level));
    m.insert("meta".into(), meta);
    m.insert("ks".into(), json!(ks));
    m.insert("dkw99".into(), json!(dkw99));
    m.insert("pass".into(), json!(pass));
    emit(&f.out, &render_json(&Value::Object(m)))?;
    Ok(if pass { 0 } else { 3 })
}

fn cmd_analyze(f: Flags) -> Result<i32, String> {
    reject_unused(&f, "analyze", &["--u", "--seed", "--workers"])?;
    let u = require_u(&f)?;
    let report = regularity_report(u).map_err(core_err)?;
    let payload = serde_json::to_value(&report).expect("report serializes");
    let mut m = Map::new();
    // no grid is involved: level 0 in the header
    m.insert(
        "meta".into(),
        meta_value(u, 0, f.seed.unwrap_or(42), f.workers.unwrap_or(1), f.no_timestamp),
    );
    for (k, v) in payload.as_object().expect("object").iter() {
        m.insert(k.clone(), v.clone());
    }
    emit(&f.out, &render_json(&Value::Object(m)))?;
    Ok(0)
}

fn cmd_atoms(f: Flags) -> Result<i32, String> {
    reject_unused(&f, "atoms", &["--u", "--x", "--tol", "--seed", "--workers"])?;
    let u = require_positive_u(&f, "atoms")?;
    let xs = f.x.as_deref().ok_or("--x is required (dyadic, \"k/2^n\")")?;
    let x = Dyadic::parse(xs).map_err(core_err)?;
    let tol = f.tol.unwrap_or(1e-8);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(format!("--tol must be a positive value, got {tol}"));
    }
    // mass 0 in the continuous regimes (u ≤ √3): the jump is genuinely zero
    let mass = atom_mass(u, &x).map_err(core_err)?.unwrap_or(0.0);
    let finite_n_check = atom_jump_extrapolated(u, &x).map_err(core_err)?;
    let mut meta = meta_value(u, x.level(), f.seed.unwrap_or(42), f.workers.unwrap_or(1), f.no_timestamp);
    let obj = meta.as_object_mut().expect("object");
    obj.insert("tol".into(), json!(tol));
    obj.insert("agrees_within_tol".into(), json!((mass - finite_n_check).abs() <= tol));
    let mut m = Map::new();
    m.insert("meta".into(), meta);
    m.insert("x".into(), json!(x.to_string()));
    m.insert("m".into(), json!(x.level()));
    m.insert("mass".into(), json!(mass));
    m.insert("finite_n_check".into(), json!(finite_n_check));
    emit(&f.out, &render_json(&Value::Object(m)))?;
    Ok(0)
}

// ---------------------------------------------------------------- selftest

/// Determinism and cross-level consistency: (a) the simulate command's bytes
/// for a fixed configuration are reproducible and worker-count invariant;
/// (b) depth laws sampled at levels 7 and 9 (u = 0.7, seeds 42 and 4242)
/// agree on the level-5 grid within the sum of their 99% DKW bands.
pub fn criterion_10() -> CriterionOutcome {
    let run = || -> Result<(bool, String), String> {
        let once = render_simulate(0.7, 6, 20_000, 9, 1, DEFAULT_BUDGET, true)?;
        let again = render_simulate(0.7, 6, 20_000, 9, 1, DEFAULT_BUDGET, true)?;
        let identical = once == again;
        // the histogram itself (not the rendered document, which embeds the
        // worker count) must not depend on how the samples were partitioned
        let h1 = derham_core::walk::simulate_ranges(0.7, 6, 20_000, 9, 1).map_err(core_err)?;
        let h3 = derham_core::walk::simulate_ranges(0.7, 6, 20_000, 9, 3).map_err(core_err)?;
        let invariant = h1.counts == h3.counts;

        let coarse = derham_core::walk::simulate_ranges(0.7, 7, 100_000, 42, 2)
            .map_err(core_err)?;
        let fine = derham_core::walk::simulate_ranges(0.7, 9, 100_000, 4242, 2)
            .map_err(core_err)?;
        let d = cross_level_distance(
            &ecdf(&coarse).map_err(core_err)?,
            &ecdf(&fine).map_err(core_err)?,
            5,
        )
        .map_err(core_err)?;
        let band = 2.0 * dkw_epsilon(100_000, 0.99).map_err(core_err)?;
        let pass = identical && invariant && d <= band;
        Ok((
            pass,
            format!(
                "bytes reproducible: {identical}, worker-invariant: {invariant}; \
                 cross-level sup-diff {d:.3e} vs band sum {band:.3e} \
                 (u=0.7, N=7 seed 42 vs N=9 seed 4242, grid level 5)"
            ),
        ))
    };
    match run() {
        Ok((passed, detail)) => CriterionOutcome {
            id: 10,
            name: "determinism-and-cross-level",
            passed,
            detail,
        },
        Err(e) => CriterionOutcome {
            id: 10,
            name: "determinism-and-cross-level",
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}

/// All acceptance checks in order, the nine library criteria plus the
/// CLI-level determinism criterion.
pub fn all_criteria() -> Vec<CriterionOutcome> {
    let mut cs = library_criteria();
    cs.push(criterion_10());
    cs
}

fn cmd_selftest(f: Flags) -> Result<i32, String> {
    reject_unused(&f, "selftest", &["--workers"])?;
    let criteria = all_criteria();
    let mut s = format!("acceptance checks, version {VERSION}\n");
    if !f.no_timestamp {
        let _ = writeln!(s, "timestamp {}", timestamp());
    }
    let mut failed = 0usize;
    for c in &criteria {
        let _ = writeln!(
            s,
            "{:>2}  {:<34} {}  {}",
            c.id,
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail
        );
        if !c.passed {
            failed += 1;
        }
    }
    let _ = writeln!(
        s,
        "{} of {} criteria pass{}",
        criteria.len() - failed,
        criteria.len(),
        if failed > 0 { "" } else { "; all green" }
    );
    emit(&f.out, &s)?;
    Ok(if failed == 0 { 0 } else { 3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_named_values() {
        assert_eq!(fmt_sig17(0.0), "0");
        assert_eq!(fmt_sig17(1.0), "1");
        assert_eq!(fmt_sig17(0.5), "0.5");
        assert_eq!(fmt_sig17(0.25), "0.25");
        // 17 significant digits of the f64 nearest to 2/3 and 0.4
        assert_eq!(fmt_sig17(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(fmt_sig17(0.4), "0.40000000000000002");
        assert_eq!(fmt_sig17(123.0), "123");
    }

    #[test]
    fn sig17_round_trips() {
        for v in [1e-9, 0.1234567890123, 0.9999999999999999, 6.0 / 7.0] {
            let s = fmt_sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}

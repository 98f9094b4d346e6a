//! `drm` command line: argument parsing, level resolution and JSON/table
//! output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::dr_monoid::DrLevel;
use crate::error::{Error, Result};
use crate::field_core::{Bounds, FieldData, IdealHNF};
use crate::reconstruction;
use crate::suites::{self, Suite};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "drm", version, about = "Finite levels of Deligne-Ribet monoids of Q and imaginary quadratic fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the tower of levels below a conductor and dump it as JSON.
    Build(LevelArgs),
    /// List the idempotents of each level with their prime sets.
    Idempotents(LevelArgs),
    /// Run verification suites over the tower.
    Verify(VerifyArgs),
    /// Compare monoid invariants of two fields at common conductor norms.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// Largest number of raw (rho, s) pairs a level may have.
    #[arg(long)]
    pub orbit_cap: Option<u64>,
    /// Largest conductor norm.
    #[arg(long)]
    pub norm_cap: Option<i64>,
}

#[derive(Debug, Args)]
pub struct LevelArgs {
    /// `Q` or a negative fundamental discriminant.
    #[arg(long, allow_hyphen_values = true)]
    pub field: String,
    /// Conductor: an integer n for the ideal (n), or an HNF basis `a:b:c`.
    #[arg(long, conflicts_with = "conductor_norm")]
    pub conductor: Option<String>,
    /// Conductor by norm: (n) when the norm is n^[K:Q], otherwise the least
    /// ideal of that norm.
    #[arg(long)]
    pub conductor_norm: Option<i64>,
    /// Explicit comma-separated list of conductors, replacing the divisor tower.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<String>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Seed for sampled checks on levels too large for exhaustive runs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled tuples per sampled check.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Norm bound for the prime powers checked by the u1 suite.
    #[arg(long, default_value_t = 1000)]
    pub u1_norm: i64,
    /// Norm bound of the box of global elements in the reciprocity suite.
    #[arg(long, default_value_t = 100)]
    pub box_norm: i64,
    /// Every conductor up to this norm joins the reciprocity levels.
    #[arg(long, default_value_t = 64)]
    pub reciprocity_norm: i64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// The two fields, `--field K --field L`.
    #[arg(long = "field", required = true, num_args = 1, allow_hyphen_values = true)]
    pub fields: Vec<String>,
    /// Conductor norms to compare at (all ideals of each norm).
    #[arg(long = "conductor-norm", required = true, value_delimiter = ',')]
    pub norms: Vec<i64>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_field(s: &str, caps: &CapArgs) -> Result<FieldData> {
    let mut bounds = Bounds::default();
    if let Some(c) = caps.orbit_cap {
        bounds.orbit_cap = c;
    }
    if let Some(c) = caps.norm_cap {
        bounds.conductor_norm_cap = c;
    }
    let k = match s.trim() {
        "Q" | "q" | "1" => FieldData::rational(),
        d => FieldData::new(
            d.parse().map_err(|_| Error::Invalid(format!("field must be Q or a negative discriminant, got {d:?}")))?,
        )?,
    };
    Ok(k.with_bounds(bounds))
}

pub fn parse_conductor(k: &FieldData, s: &str) -> Result<IdealHNF> {
    let s = s.trim();
    let parts: Vec<&str> = s.trim_start_matches('[').trim_end_matches(']').split([':', ',']).collect();
    let num = |t: &str| t.trim().parse::<i64>().map_err(|_| Error::Invalid(format!("bad conductor {s:?}")));
    match parts.as_slice() {
        [n] => {
            let n = num(n)?;
            if n < 1 {
                return Err(Error::Invalid(format!("conductor must be positive, got {n}")));
            }
            Ok(k.int_ideal(n))
        }
        [a, b, c] => {
            let i = IdealHNF { a: num(a)?, b: num(b)?, c: num(c)? };
            if !k.is_ideal(&i) {
                return Err(Error::Invalid(format!("{i} is not an ideal in HNF")));
            }
            Ok(i)
        }
        _ => Err(Error::Invalid(format!("bad conductor {s:?}"))),
    }
}

pub fn conductor_of_norm(k: &FieldData, n: i64) -> Result<IdealHNF> {
    if n < 1 {
        return Err(Error::Invalid(format!("conductor norm must be positive, got {n}")));
    }
    let r = crate::arith::isqrt(n);
    if k.is_rational() {
        return Ok(k.int_ideal(n));
    }
    if r * r == n {
        return Ok(k.int_ideal(r));
    }
    k.ideals_of_norm(n)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Invalid(format!("no ideal of norm {n} in {}", k.label())))
}

/// The conductors a command works on: `--levels` if given, else every
/// divisor of the conductor.
pub fn resolve_levels(k: &FieldData, args: &LevelArgs) -> Result<Vec<IdealHNF>> {
    if !args.levels.is_empty() {
        let set: BTreeSet<IdealHNF> = args.levels.iter().map(|s| parse_conductor(k, s)).collect::<Result<_>>()?;
        return Ok(set.into_iter().collect());
    }
    let top = match (&args.conductor, args.conductor_norm) {
        (Some(c), _) => parse_conductor(k, c)?,
        (None, Some(n)) => conductor_of_norm(k, n)?,
        (None, None) => return Err(Error::Invalid("one of --conductor, --conductor-norm, --levels is required".into())),
    };
    k.ideal_divisors(&top)
}

fn build_levels(k: &FieldData, conductors: &[IdealHNF]) -> Result<Vec<DrLevel>> {
    conductors.iter().map(|&c| DrLevel::build(k, c)).collect()
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({"schema_version": SCHEMA_VERSION, "command": command});
    if let (Some(map), Value::Object(b)) = (v.as_object_mut(), body) {
        map.extend(b);
    }
    v
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn cmd_build(args: &LevelArgs) -> Result<(Value, bool)> {
    let k = parse_field(&args.field, &args.caps)?;
    let levels = build_levels(&k, &resolve_levels(&k, args)?)?;
    let dumps: Vec<Value> = levels.iter().map(|m| to_value(&m.to_json())).collect();
    Ok((envelope("build", json!({"field": k.label(), "levels": dumps})), true))
}

pub fn cmd_idempotents(args: &LevelArgs) -> Result<(Value, bool)> {
    let k = parse_field(&args.field, &args.caps)?;
    let mut conductors = resolve_levels(&k, args)?;
    if args.levels.is_empty() {
        conductors = conductors.split_off(conductors.len() - 1);
    }
    let mut ok = true;
    let mut out = Vec::new();
    for m in build_levels(&k, &conductors)? {
        let supp = m.supp();
        let rows: Vec<Value> = m
            .all_idempotents()
            .into_iter()
            .map(|r| {
                let primes: Vec<String> = r.subset.iter().map(|&i| supp[i].to_string()).collect();
                let label = (0..supp.len()).find(|i| !r.subset.contains(i)).filter(|_| r.maximal);
                json!({
                    "element": m.display(r.element),
                    "subset": primes,
                    "maximal": r.maximal,
                    "label": label.map(|i| supp[i].to_string()),
                })
            })
            .collect();
        let expected = 1usize << supp.len();
        ok &= rows.len() == expected;
        out.push(json!({
            "conductor": m.conductor,
            "supp": supp.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "count": rows.len(),
            "expected": expected,
            "idempotents": rows,
        }));
    }
    Ok((envelope("idempotents", json!({"field": k.label(), "levels": out})), ok))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(Value, bool)> {
    let k = parse_field(&args.level.field, &args.level.caps)?;
    let conductors = resolve_levels(&k, &args.level)?;
    let tower = build_levels(&k, &conductors)?;
    let ctx = suites::Context {
        field: &k,
        tower: &tower,
        seed: args.seed,
        samples: args.samples,
        u1_norm: args.u1_norm,
        box_norm: args.box_norm,
        reciprocity_norm: args.reciprocity_norm,
    };
    let reports = args.suite.expand().into_iter().map(|s| suites::run(&ctx, s)).collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let body = json!({
        "field": k.label(),
        "levels": conductors,
        "seed": args.seed,
        "passed": passed,
        "suites": to_value(&reports),
    });
    Ok((envelope("verify", body), passed))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(Value, bool)> {
    let [a, b] = args.fields.as_slice() else {
        return Err(Error::Invalid("compare takes exactly two --field values".into()));
    };
    let k = parse_field(a, &args.caps)?;
    let l = parse_field(b, &args.caps)?;
    let report = reconstruction::compare_fields(&k, &l, &args.norms)?;
    Ok((envelope("compare", to_value(&report)), true))
}

/// Render a JSON document as aligned text: scalars as `key: value`, arrays
/// of objects as tables, nested objects recursively.
pub fn render_table(v: &Value) -> String {
    let mut out = String::new();
    render_into(&mut out, v, 0);
    out
}

/// Objects and arrays that get their own block instead of a single cell.
fn is_block(v: &Value) -> bool {
    match v {
        Value::Object(m) => m.values().any(|x| x.is_object() || x.is_array()),
        Value::Array(a) => a.iter().any(is_block) || a.iter().any(|i| i.is_object()),
        _ => false,
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn render_into(out: &mut String, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (key, val) in map {
                if is_block(val) {
                    let _ = writeln!(out, "{pad}{key}:");
                    render_into(out, val, indent + 2);
                } else {
                    let _ = writeln!(out, "{pad}{key}: {}", cell(val));
                }
            }
        }
        Value::Array(items) => {
            let mut cols: Vec<String> = Vec::new();
            for item in items {
                if let Value::Object(m) = item {
                    for (k, val) in m {
                        if !is_block(val) && !cols.contains(k) {
                            cols.push(k.clone());
                        }
                    }
                }
            }
            let rows: Vec<Vec<String>> = items
                .iter()
                .map(|item| cols.iter().map(|c| item.get(c).map_or(String::new(), cell)).collect())
                .collect();
            let widths: Vec<usize> = cols
                .iter()
                .enumerate()
                .map(|(i, c)| rows.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| -> String {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ")
            };
            if !cols.is_empty() {
                let _ = writeln!(out, "{pad}{}", line(&cols).trim_end());
                for r in &rows {
                    let _ = writeln!(out, "{pad}{}", line(r).trim_end());
                }
            }
            for (i, item) in items.iter().enumerate() {
                if let Value::Object(m) = item {
                    let nested: serde_json::Map<String, Value> = m
                        .iter()
                        .filter(|(_, val)| is_block(val))
                        .map(|(k, v)| (k.clone(), v.clone()))
                        .collect();
                    if !nested.is_empty() {
                        let _ = writeln!(out, "{pad}[{i}]");
                        render_into(out, &Value::Object(nested), indent + 2);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", cell(other));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } | Error::NormTooLarge { .. } | Error::SearchBound(_) => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (result, output) = match &cli.command {
        Command::Build(a) => (cmd_build(a), &a.output),
        Command::Idempotents(a) => (cmd_idempotents(a), &a.output),
        Command::Verify(a) => (cmd_verify(a), &a.level.output),
        Command::Compare(a) => (cmd_compare(a), &a.output),
    };
    let (doc, passed) = match result {
        Ok(r) => r,
        Err(e) => {
            let code = exit_code(&e);
            let diag = json!({"schema_version": SCHEMA_VERSION, "error": e.to_string(), "exit_code": code});
            eprintln!("{}", serde_json::to_string_pretty(&diag).expect("serializable"));
            return code;
        }
    };
    let text = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
        Format::Table => render_table(&doc),
    };
    match &output.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

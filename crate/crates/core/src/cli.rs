//! Command-line front end. Every command produces an [`OutputRecord`] (CSV) or
//! plain text; nothing depends on locale, time or environment.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::compat::{
    compat_prob, compat_prob_normalized, same_age_prob, CompatQuery, Reference, Window,
};
use crate::error::{Error, Result};
use crate::expect::{
    at_least_k_exact, at_least_k_normal, expected_pairs, expected_with_at_least_one,
    mean_counterparts,
};
use crate::model::{scope_upper_t, AgeProfile};
use crate::policy::{
    audit_hyaps, chrono_limit, mental_limit_from_chrono, solve_m, AgeLimitSpec, LimitKind,
};
use crate::special_fn::UnitProb;
use crate::verify::{error_propagation, mc_oracle, ErrorBudget};
use crate::{BENCHMARK_T, DEFAULT_S};

/// Values above this are not exactly representable as integers in f64.
const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Parser)]
#[command(
    name = "agecompat",
    version,
    about = "Mental-age compatibility between age groups"
)]
pub struct Cli {
    /// Significant digits for numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    pub digits: usize,
    /// Seed for Monte-Carlo estimates.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compatibility probability between two ages.
    Compat(CompatArgs),
    /// Pair and membership expectations for two cohorts.
    Expect(ExpectArgs),
    /// Convert between mental and chronological age limits.
    Limits(LimitsArgs),
    /// Audit the half-your-age-plus-seven rule or solve for m in Δ = mμ.
    Rule(RuleArgs),
    /// Print the same-age table and the m-value table.
    Tables,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("window").args(["d", "t"])))]
pub struct PairArgs {
    #[arg(long)]
    pub age1: f64,
    #[arg(long)]
    pub age2: f64,
    #[arg(long, default_value_t = DEFAULT_S)]
    pub s1: f64,
    #[arg(long, default_value_t = DEFAULT_S)]
    pub s2: f64,
    /// Allowed mental-age difference in years.
    #[arg(long)]
    pub d: Option<f64>,
    /// Allowed difference as a multiple of min(σ1, σ2) [default: 2/√π].
    #[arg(long)]
    pub t: Option<f64>,
}

impl PairArgs {
    fn query(&self) -> Result<CompatQuery> {
        let first = AgeProfile::new(self.age1, self.s1)?.gaussian();
        let second = AgeProfile::new(self.age2, self.s2)?.gaussian();
        let window = match (self.d, self.t) {
            (Some(d), _) => Window::Absolute(d),
            (None, Some(t)) => Window::Relative(t),
            (None, None) => Window::Relative(BENCHMARK_T),
        };
        CompatQuery::new(first, second, window)
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompatArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Also report p divided by the younger group's same-age probability.
    #[arg(long)]
    pub normalized: bool,
    /// First-order uncertainty for errors Δd,Δσ1,Δσ2.
    #[arg(long, value_delimiter = ',', value_name = "DD,DS1,DS2")]
    pub error_budget: Option<Vec<f64>>,
    /// Add a seeded Monte-Carlo estimate with this many samples.
    #[arg(long, value_name = "SAMPLES")]
    pub mc: Option<u64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("tail").args(["exact", "normal"])))]
pub struct ExpectArgs {
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub n2: u64,
    /// Pairwise compatibility probability; computed from the ages when absent.
    #[arg(long, conflicts_with_all = ["age1", "age2", "s1", "s2", "d", "t"])]
    pub p: Option<f64>,
    #[arg(long, requires = "age2")]
    pub age1: Option<f64>,
    #[arg(long, requires = "age1")]
    pub age2: Option<f64>,
    #[arg(long)]
    pub s1: Option<f64>,
    #[arg(long)]
    pub s2: Option<f64>,
    #[arg(long, conflicts_with = "t")]
    pub d: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Probability of having at least K compatible counterparts.
    #[arg(long, value_name = "K")]
    pub at_least_k: Option<u64>,
    /// Only the exact binomial tail.
    #[arg(long, requires = "at_least_k")]
    pub exact: bool,
    /// Only the normal approximation.
    #[arg(long, requires = "at_least_k")]
    pub normal: bool,
}

impl ExpectArgs {
    fn probability(&self) -> Result<UnitProb> {
        if let Some(p) = self.p {
            return UnitProb::new(p);
        }
        match (self.age1, self.age2) {
            (Some(age1), Some(age2)) => {
                let pair = PairArgs {
                    age1,
                    age2,
                    s1: self.s1.unwrap_or(DEFAULT_S),
                    s2: self.s2.unwrap_or(DEFAULT_S),
                    d: self.d,
                    t: self.t,
                };
                Ok(compat_prob(&pair.query()?))
            }
            _ => Err(Error::domain("give either --p or --age1 and --age2")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Min,
    Max,
}

impl From<KindArg> for LimitKind {
    fn from(k: KindArg) -> LimitKind {
        match k {
            KindArg::Min => LimitKind::Min,
            KindArg::Max => LimitKind::Max,
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("given").args(["mental", "chrono"]).required(true)))]
#[command(group(ArgGroup::new("prob").args(["p", "sweep"]).required(true)))]
pub struct LimitsArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Mental-age limit; the chronological limit is computed.
    #[arg(long)]
    pub mental: Option<f64>,
    /// Chronological limit; the mental-age limit is computed.
    #[arg(long)]
    pub chrono: Option<f64>,
    /// Limit probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// σ/μ ratio; a comma-separated list gives one curve per value.
    #[arg(long, value_delimiter = ',', default_value = "0.15")]
    pub s: Vec<f64>,
    /// Sweep the limit probability, `lo:hi:step`.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub sweep: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("mode").args(["mu_grid", "solve_m"]).required(true)))]
pub struct RuleArgs {
    /// Ages to audit, `lo:hi:step`.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub mu_grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_S)]
    pub s1: f64,
    #[arg(long, default_value_t = DEFAULT_S)]
    pub s2: f64,
    /// Window multiple of σ1 [default: 2/√π].
    #[arg(long)]
    pub t: Option<f64>,
    /// Solve for the proportionality constant m instead of auditing.
    #[arg(long, requires = "p")]
    pub solve_m: bool,
    /// Target minimum probability for --solve-m.
    #[arg(long)]
    pub p: Option<f64>,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

/// A header row plus data rows, rendered as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputRecord {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl OutputRecord {
    pub fn new(columns: &[&str]) -> Self {
        OutputRecord {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::new();
        write_csv_line(&mut out, self.columns.iter().map(String::as_str));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Num(x) => format_number(*x, digits),
                    Value::Int(n) => n.to_string(),
                    Value::Text(s) => s.clone(),
                    Value::Bool(b) => b.to_string(),
                })
                .collect();
            write_csv_line(&mut out, cells.iter().map(String::as_str));
        }
        out
    }
}

fn write_csv_line<'a>(out: &mut String, fields: impl Iterator<Item = &'a str>) {
    for (i, field) in fields.enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
}

/// Formats `x` to `digits` significant digits, `%g`-style: fixed notation for
/// exponents in `[-4, digits)`, scientific otherwise, trailing zeros removed.
pub fn format_number(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.clamp(1, 17);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses `lo:hi:step` into the inclusive list `lo, lo+step, …, hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(Error::domain(format!("expected lo:hi:step, got `{spec}`")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::domain(format!("bad number `{s}` in `{spec}`: {e}")))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(Error::domain(format!(
            "grid `{spec}` needs lo <= hi and step > 0"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::domain(format!("grid `{spec}` has too many points")));
    }
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// The result of a command: what goes to stdout and any diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub stdout: String,
    pub notes: Vec<String>,
}

pub fn run(cli: &Cli) -> Result<Report> {
    let digits = cli.digits;
    match &cli.command {
        Command::Compat(args) => cmd_compat(args, cli.seed).map(|r| csv_report(r, digits)),
        Command::Expect(args) => cmd_expect(args).map(|(r, notes)| Report {
            stdout: r.to_csv(digits),
            notes,
        }),
        Command::Limits(args) => cmd_limits(args).map(|(r, notes)| Report {
            stdout: r.to_csv(digits),
            notes,
        }),
        Command::Rule(args) => cmd_rule(args).map(|(r, notes)| Report {
            stdout: r.to_csv(digits),
            notes,
        }),
        Command::Tables => cmd_tables().map(|stdout| Report {
            stdout,
            notes: Vec::new(),
        }),
    }
}

fn csv_report(record: OutputRecord, digits: usize) -> Report {
    Report {
        stdout: record.to_csv(digits),
        notes: Vec::new(),
    }
}

pub fn cmd_compat(args: &CompatArgs, seed: u64) -> Result<OutputRecord> {
    let q = args.pair.query()?;
    let p = compat_prob(&q);
    let mut columns = vec!["age1", "age2", "s1", "s2", "d", "p"];
    let mut row: Vec<Value> = vec![
        args.pair.age1.into(),
        args.pair.age2.into(),
        args.pair.s1.into(),
        args.pair.s2.into(),
        q.d().into(),
        p.value().into(),
    ];
    if args.normalized {
        let n = compat_prob_normalized(&q)?;
        columns.extend(["p0", "reference"]);
        let reference = match n.reference {
            Reference::Second => "age2",
            Reference::First => "age1",
        };
        row.extend([n.p0.into(), reference.into()]);
    }
    if let Some(budget) = &args.error_budget {
        let [dd, ds1, ds2] = budget.as_slice() else {
            return Err(Error::domain(
                "--error-budget takes three values: dd,ds1,ds2",
            ));
        };
        let budget = ErrorBudget::new(*dd, *ds1, *ds2)?;
        columns.push("dp");
        row.push(error_propagation(&q, &budget).into());
    }
    if let Some(samples) = args.mc {
        let est = mc_oracle(&q, samples, seed)?;
        columns.extend(["mc_estimate", "mc_stderr"]);
        row.extend([est.estimate.value().into(), est.stderr.into()]);
    }
    let mut record = OutputRecord::new(&columns);
    record.push(row);
    Ok(record)
}

pub fn cmd_expect(args: &ExpectArgs) -> Result<(OutputRecord, Vec<String>)> {
    let p = args.probability()?;
    let (n1, n2) = (args.n1, args.n2);
    let pairs = expected_pairs(n1, n2, p);
    let mut notes = Vec::new();
    if pairs > EXACT_INTEGER_LIMIT {
        notes.push(format!(
            "note: expected pair count {pairs:e} exceeds 2^53 and is shown as a floating-point value"
        ));
    }
    let mut columns = vec![
        "n1",
        "n2",
        "p",
        "pairs",
        "mean_1_to_2",
        "mean_2_to_1",
        "at_least_one_1",
        "at_least_one_2",
    ];
    let mut row: Vec<Value> = vec![
        n1.into(),
        n2.into(),
        p.value().into(),
        pairs.into(),
        mean_counterparts(n1, p).into(),
        mean_counterparts(n2, p).into(),
        expected_with_at_least_one(n1, n2, p).into(),
        expected_with_at_least_one(n2, n1, p).into(),
    ];
    if let Some(k) = args.at_least_k {
        let show_exact = !args.normal;
        let show_normal = !args.exact;
        columns.push("k");
        row.push(k.into());
        // a member of group 1 draws counterparts from group 2 and vice versa
        for (side, n_other) in [("1", n2), ("2", n1)] {
            if show_exact {
                columns.push(if side == "1" {
                    "tail_exact_1"
                } else {
                    "tail_exact_2"
                });
                row.push(at_least_k_exact(k, n_other, p)?.value().into());
            }
            if show_normal {
                let tail = at_least_k_normal(k, n_other, p)?;
                if !tail.valid {
                    notes.push(format!(
                        "warning: normal approximation for group {side} fails N > 9 max(p/(1-p), (1-p)/p) with N = {n_other}"
                    ));
                }
                if side == "1" {
                    columns.extend(["tail_normal_1", "normal_valid_1"]);
                } else {
                    columns.extend(["tail_normal_2", "normal_valid_2"]);
                }
                row.extend([tail.prob.value().into(), tail.valid.into()]);
            }
        }
    }
    let mut record = OutputRecord::new(&columns);
    record.push(row);
    Ok((record, notes))
}

pub fn cmd_limits(args: &LimitsArgs) -> Result<(OutputRecord, Vec<String>)> {
    let kind: LimitKind = args.kind.into();
    let kind_name = match kind {
        LimitKind::Min => "min",
        LimitKind::Max => "max",
    };
    let mut notes = Vec::new();
    let convert = |p: f64, s: f64| -> Result<f64> {
        let p = UnitProb::new(p)?;
        match (args.mental, args.chrono) {
            (Some(x), _) => chrono_limit(&AgeLimitSpec::new(kind, x, p, s)?),
            (None, Some(mu)) => mental_limit_from_chrono(mu, s, p, kind),
            (None, None) => Err(Error::domain("give --mental or --chrono")),
        }
    };
    let output_name = if args.mental.is_some() {
        "chrono_limit"
    } else {
        "mental_limit"
    };

    if let Some(sweep) = &args.sweep {
        let mut record = OutputRecord::new(&["p_limit", "s", output_name]);
        let grid = parse_grid(sweep)?;
        for &s in &args.s {
            for &p in &grid {
                match convert(p, s) {
                    Ok(v) => record.push(vec![p.into(), s.into(), v.into()]),
                    Err(e) => notes.push(format!("skipped p_limit = {p}, s = {s}: {e}")),
                }
            }
        }
        return Ok((record, notes));
    }

    let p = args.p.ok_or_else(|| Error::domain("give --p or --sweep"))?;
    let (given_name, given) = match (args.mental, args.chrono) {
        (Some(x), _) => ("mental_limit", x),
        (None, Some(mu)) => ("chrono_limit", mu),
        (None, None) => return Err(Error::domain("give --mental or --chrono")),
    };
    let mut record = OutputRecord::new(&["kind", given_name, "p_limit", "s", output_name]);
    for &s in &args.s {
        record.push(vec![
            kind_name.into(),
            given.into(),
            p.into(),
            s.into(),
            convert(p, s)?.into(),
        ]);
    }
    Ok((record, notes))
}

pub fn cmd_rule(args: &RuleArgs) -> Result<(OutputRecord, Vec<String>)> {
    let t = args.t.unwrap_or(BENCHMARK_T);
    if args.solve_m {
        let p = args.p.ok_or_else(|| Error::domain("--solve-m needs --p"))?;
        let m = solve_m(UnitProb::new(p)?, args.s1, args.s2, t)?;
        let mut record = OutputRecord::new(&["p_min", "s1", "s2", "t", "m"]);
        record.push(vec![
            p.into(),
            args.s1.into(),
            args.s2.into(),
            t.into(),
            m.into(),
        ]);
        return Ok((record, Vec::new()));
    }
    let grid_spec = args
        .mu_grid
        .as_deref()
        .ok_or_else(|| Error::domain("give --mu-grid or --solve-m"))?;
    let audit = audit_hyaps(&parse_grid(grid_spec)?, args.s1, args.s2, t)?;
    let mut record = OutputRecord::new(&[
        "mu",
        "delta",
        "delta_over_mu",
        "p_min",
        "error_term",
        "far_from_proportional",
    ]);
    for pt in &audit.points {
        record.push(vec![
            pt.mu.into(),
            pt.delta.into(),
            pt.ratio().into(),
            pt.p_min.value().into(),
            pt.error_term().into(),
            pt.far_from_proportional().into(),
        ]);
    }
    let notes = audit
        .skipped
        .iter()
        .map(|s| format!("skipped mu = {}: {}", s.mu, s.reason))
        .collect();
    Ok((record, notes))
}

/// Column values of the same-age table: `t` for σ, (2/√π)σ, √2σ and ⟨d⟩+σ̂_d.
pub fn table_one_ts() -> [(&'static str, f64); 4] {
    [
        ("sigma", 1.0),
        ("2/sqrt(pi)*sigma", BENCHMARK_T),
        ("sqrt(2)*sigma", std::f64::consts::SQRT_2),
        ("<d>+disp_d", scope_upper_t()),
    ]
}

pub const TABLE_TWO_S: [f64; 3] = [0.1, 0.15, 0.2];
pub const TABLE_TWO_P: [f64; 3] = [0.05, 0.1, 0.15];

pub fn cmd_tables() -> Result<String> {
    let mut out = String::new();
    out.push_str("Table 1: same-age compatibility p for d = t*sigma\n");
    let cols = table_one_ts();
    let widths: Vec<usize> = cols.iter().map(|(name, _)| name.len().max(4)).collect();
    let _ = write!(out, "{:<4}", "d");
    for ((name, _), w) in cols.iter().zip(&widths) {
        let _ = write!(out, "  {name:<w$}");
    }
    out.push('\n');
    let _ = write!(out, "{:<4}", "p");
    for ((_, t), w) in cols.iter().zip(&widths) {
        let p = same_age_prob(*t)?.value();
        let _ = write!(out, "  {:<w$}", format!("{p:.2}"));
    }
    out.push_str("\n\n");

    out.push_str("Table 2: m-values (delta = m*mu) for p_min vs. s, t = 2/sqrt(pi)\n");
    let _ = write!(out, "{:<8}", "");
    for p in TABLE_TWO_P {
        let _ = write!(out, "  {:<11}", format!("p_min={p}"));
    }
    out.push('\n');
    for s in TABLE_TWO_S {
        let _ = write!(out, "{:<8}", format!("s={s}"));
        for p in TABLE_TWO_P {
            let m = solve_m(UnitProb::new(p)?, s, s, BENCHMARK_T)?;
            let _ = write!(out, "  {:<11}", format!("{m:.2}"));
        }
        out.push('\n');
    }
    Ok(out
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
        + "\n")
}

/// Exit status for a library error: 2 for bad input, 3 for numerical failure.
pub fn exit_status(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::NoRoot(_) => 2,
        Error::Numerical(_) => 3,
    }
}

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("{note}");
            }
            print!("{}", report.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

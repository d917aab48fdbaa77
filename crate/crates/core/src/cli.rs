//! Command-line front end: argument parsing, configuration layering and the
//! text/CSV/JSON writers. Results go to stdout, diagnostics to stderr.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::charfun::PsiEvaluator;
use crate::checks::{run_suite, Suite};
use crate::density::{density_significant, parse_sigma, DensityKind, DensityOptions, DensityResult, RhoTilde};
use crate::error::{Error, Result};
use crate::ifunc::{i_asymptotic, i_quadrature, i_rational, i_series, log_i_series, log_i_series_terms};
use crate::mcverify::{estimate_densities, histogram_vs_rho, McConfig};
use crate::numerics::{parse_float, PrecisionContext};
use crate::primes::{prime_zeta, sigma0, sigma1};
use crate::qpoly::{check_diagonal_bessel, QTable};

/// Environment variable holding the default precision cap in digits.
pub const MAX_DIGITS_ENV: &str = "ZETASIGN_MAX_DIGITS";

/// Table 2 rows computed by default.
pub const TABLE2_ROWS: [&str; 8] = ["0.5+1e-11", "0.5+1e-5", "0.6", "0.7", "0.8", "0.9", "1.0", "1.1"];

/// Rows with `d < 1e-100`, requested explicitly.
pub const TABLE2_DEEP_ROWS: [&str; 3] = ["1.15", "1.16", "1.165"];

pub const TABLE3_ROWS: [&str; 4] = ["0.5+1e-11", "0.6", "0.7", "0.8"];

pub const CSV_HEADER: &str = "sigma,kind,value,error,method";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "zetasign", version, about = "Densities of the sign of Re zeta(sigma+it) and the characteristic function of arg zeta")]
struct Cli {
    /// key=value file with defaults (max_digits, prime_limit, digits, format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on working precision in decimal digits.
    #[arg(long, global = true)]
    max_digits: Option<u32>,
    /// Largest prime any command may sieve to.
    #[arg(long, global = true)]
    prime_limit: Option<u64>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// psi_sigma(x)
    Psi {
        #[arg(long)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        digits: Option<u32>,
        #[arg(long, default_value_t = crate::charfun::DEFAULT_KAPPA)]
        kappa: f64,
    },
    /// I(b, x) by a chosen method
    Ifactor {
        /// b, or b^2 as p/q for the rational method
        #[arg(long)]
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, value_enum, default_value_t = IMethod::Series)]
        method: IMethod,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Coefficients q_{n,k}
    Qcoeff(QArgs),
    /// Prime zeta P(s)
    Primezeta {
        #[arg(long)]
        s: String,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// d, d_-, d_+ or a_k at one sigma
    Density {
        #[arg(long)]
        sigma: String,
        #[arg(long, default_value = "d")]
        kind: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// d(sigma) over the table rows
    Table2 {
        /// Comma-separated sigmas; "all" adds the deep rows.
        #[arg(long)]
        rows: Option<String>,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// d(sigma) - d_-(sigma) over the table rows
    Table3 {
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Root of L(sigma) = pi/2, or of 3 pi / 2 with --which 1
    Sigma0 {
        #[arg(long, default_value_t = 0)]
        which: u32,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Samples of the periodized density
    Rho {
        #[arg(long)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Half period; defaults to 1.1 L(sigma).
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Monte Carlo estimates of d and d_-
    Mc {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 10_000)]
        cutoff: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also compare a histogram with rho~ (sigma > 1).
        #[arg(long)]
        bins: Option<usize>,
        /// Write the histogram as CSV here.
        #[arg(long)]
        histogram_out: Option<PathBuf>,
    },
    /// Invariant suites; nonzero exit on any violation
    Checks {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IMethod {
    Series,
    Quadrature,
    Log,
    Asymptotic,
    Rational,
}

#[derive(Debug, Args)]
struct QArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, group = "what")]
    row: bool,
    #[arg(long, group = "what")]
    diagonal: bool,
    #[arg(long, group = "what")]
    sum_check: bool,
}

/// One result line; the JSON form is this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub value: String,
    pub error_budget: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

/// Settings after layering defaults, environment, config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub max_digits: u32,
    pub prime_limit: u64,
    pub digits: u32,
    pub format: Format,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_digits: PrecisionContext::DEFAULT_MAX_DIGITS,
            prime_limit: crate::primes::MAX_SIEVE_LIMIT,
            digits: 20,
            format: Format::Text,
        }
    }
}

impl Settings {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidArgument(format!("config {key} = {value}: {e}"));
        match key {
            "max_digits" => self.max_digits = value.parse().map_err(|e| bad(&e))?,
            "prime_limit" => self.prime_limit = value.parse().map_err(|e| bad(&e))?,
            "digits" => self.digits = value.parse().map_err(|e| bad(&e))?,
            "format" => self.format = Format::from_str(value, true).map_err(|e| bad(&e))?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn load_file(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line without '=': {line}")))?;
            self.apply(k.trim(), v.trim())?;
        }
        Ok(())
    }

    fn ctx(&self, digits: u32) -> PrecisionContext {
        PrecisionContext::with_digits_capped(digits, self.max_digits)
    }

    fn check_cap(&self, digits: u32) -> Result<()> {
        if digits + 10 > self.max_digits {
            return Err(Error::PrecisionOverflow { needed: digits + 10, cap: self.max_digits });
        }
        Ok(())
    }
}

/// `v` to `digits` significant digits, round to nearest; scientific with an
/// explicit exponent when `|v| < 1e-4` or `|v| >= 1e5`.
pub fn format_value(v: &Float, digits: u32) -> String {
    let digits = digits.max(1) as usize;
    if v.is_zero() {
        return if digits > 1 { format!("0.{}", "0".repeat(digits - 1)) } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let (neg, mant, exp) = v.to_sign_string_exp(10, Some(digits));
    // v = 0.mant * 10^exp
    let exp = exp.expect("finite nonzero values carry an exponent");
    let sign = if neg { "-" } else { "" };
    let sci = exp - 1;
    // The notation follows the unrounded magnitude.
    let a = Float::with_val(v.prec(), v.abs_ref());
    let lo = Float::with_val(v.prec(), Float::parse("1e-4").expect("literal"));
    if a < lo || a >= 1e5 {
        let (head, tail) = mant.split_at(1);
        return if tail.is_empty() { format!("{sign}{head}e{sci}") } else { format!("{sign}{head}.{tail}e{sci}") };
    }
    if exp <= 0 {
        format!("{sign}0.{}{mant}", "0".repeat((-exp) as usize))
    } else {
        let e = exp as usize;
        if e >= mant.len() {
            format!("{sign}{mant}{}", "0".repeat(e - mant.len()))
        } else {
            format!("{sign}{}.{}", &mant[..e], &mant[e..])
        }
    }
}

/// Error budgets are shown to three digits.
pub fn format_error(e: &Float) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let (_, mant, exp) = e.to_sign_string_exp(10, Some(3));
    let exp = exp.expect("nonzero");
    format!("{}.{}e{}", &mant[..1], &mant[1..], exp - 1)
}

struct Writer<'a> {
    out: &'a mut dyn Write,
    format: Format,
    records: Vec<OutputRecord>,
    csv: Option<csv::Writer<Vec<u8>>>,
}

impl<'a> Writer<'a> {
    fn new(out: &'a mut dyn Write, format: Format) -> Self {
        Self { out, format, records: Vec::new(), csv: None }
    }

    fn io(e: impl std::fmt::Display) -> Error {
        Error::InvalidArgument(format!("output error: {e}"))
    }

    fn text(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}").map_err(Self::io)
    }

    fn record(&mut self, rec: OutputRecord, text: &str) -> Result<()> {
        match self.format {
            Format::Text => self.text(text)?,
            Format::Json => self.records.push(rec),
            Format::Csv => {
                let w = self.csv.get_or_insert_with(|| {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["command", "inputs", "value", "error", "method"]).expect("in-memory write");
                    w
                });
                let inputs: Vec<String> = rec.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                w.write_record([
                    rec.command.as_str(),
                    &inputs.join(";"),
                    &rec.value,
                    &rec.error_budget,
                    rec.method.as_deref().unwrap_or(""),
                ])
                .map_err(Self::io)?;
            }
        }
        Ok(())
    }

    /// Density rows use the fixed `sigma,kind,value,error,method` schema.
    fn density_row(&mut self, command: &str, sigma: &str, r: &DensityResult, digits: u32) -> Result<()> {
        let value = format_value(&r.value, digits);
        let error = format_error(&r.budget.total());
        match self.format {
            Format::Csv => {
                let w = self.csv.get_or_insert_with(|| {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
                    w
                });
                let kind = r.kind.to_string();
                let method = r.method.to_string();
                w.write_record([sigma, kind.as_str(), &value, &error, &method]).map_err(Self::io)?;
                Ok(())
            }
            _ => {
                let mut inputs = BTreeMap::new();
                inputs.insert("sigma".into(), sigma.to_string());
                inputs.insert("kind".into(), r.kind.to_string());
                inputs.insert("digits".into(), digits.to_string());
                let text = if command == "density" { value.clone() } else { format!("{sigma:<12} {value}") };
                self.record(
                    OutputRecord { command: command.into(), inputs, value, error_budget: error, method: Some(r.method.to_string()) },
                    &text,
                )
            }
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(w) = self.csv.take() {
            let bytes = w.into_inner().map_err(Self::io)?;
            self.out.write_all(&bytes).map_err(Self::io)?;
        }
        if self.format == Format::Json {
            let text = serde_json::to_string_pretty(&self.records).map_err(Self::io)?;
            writeln!(self.out, "{text}").map_err(Self::io)?;
        }
        Ok(())
    }
}

fn inputs(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn parse_real(text: &str, bits: u32) -> Result<Float> {
    parse_sigma(text, bits)
}

/// Runs one command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "zetasign: {e}");
            e.exit_code()
        }
    }
}

fn settings_for(cli: &Cli) -> Result<Settings> {
    let mut s = Settings::default();
    if let Ok(v) = std::env::var(MAX_DIGITS_ENV) {
        s.apply("max_digits", &v)?;
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        s.load_file(&text)?;
    }
    if let Some(v) = cli.max_digits {
        s.max_digits = v;
    }
    if let Some(v) = cli.prime_limit {
        s.prime_limit = v;
    }
    if let Some(v) = cli.format {
        s.format = v;
    }
    Ok(s)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let settings = settings_for(&cli)?;
    let mut w = Writer::new(out, settings.format);
    let code = match cli.command {
        Command::Psi { sigma, x, digits, kappa } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let ctx = settings.ctx(digits);
            let bits = ctx.working_bits();
            let s = parse_real(&sigma, bits)?;
            let xv = parse_real(&x, bits)?;
            let xf = xv.to_f64().abs();
            let p0 = ((kappa * xf).powf(1.0 / s.to_f64())).ceil();
            if p0 > settings.prime_limit as f64 {
                return Err(Error::Capacity(format!("x = {xf} needs primes to {p0}, limit is {}", settings.prime_limit)));
            }
            let ev = PsiEvaluator::with_kappa(&s, xf, kappa, &ctx)?;
            let v = ev.psi_with_budget(&xv)?;
            let value = format_value(&v.value, digits);
            w.record(
                OutputRecord {
                    command: "psi".into(),
                    inputs: inputs(&[("sigma", sigma), ("x", x), ("kappa", kappa.to_string())]),
                    value: value.clone(),
                    error_budget: format_error(&v.budget.total()),
                    method: None,
                },
                &value,
            )?;
            0
        }
        Command::Ifactor { b, x, method, digits } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let ctx = settings.ctx(digits);
            let bits = ctx.working_bits();
            let (value, exact) = if method == IMethod::Rational {
                let b2: Rational = b
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("rational method needs b^2 as p/q, got '{b}'")))?;
                let xi: i64 = x
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("rational method needs an even integer x, got '{x}'")))?;
                let r = i_rational(&b2, xi)?;
                (Float::with_val(bits, &r), Some(r.to_string()))
            } else {
                let bv = parse_real(&b, bits)?;
                let xv = parse_real(&x, bits)?;
                let v = match method {
                    IMethod::Series => i_series(&bv, &xv, &ctx)?,
                    IMethod::Quadrature => i_quadrature(&bv, &xv, &ctx)?,
                    IMethod::Log => {
                        let n = log_i_series_terms(&bv, &xv, &ctx)?;
                        let table = QTable::build(n.max(1))?;
                        log_i_series(&bv, &xv, &table, &ctx)?.exp()
                    }
                    IMethod::Asymptotic => i_asymptotic(&bv, &xv, 3, &ctx)?,
                    IMethod::Rational => unreachable!("handled above"),
                };
                (v, None)
            };
            let text = format_value(&value, digits);
            let shown = match &exact {
                Some(r) => format!("{r} = {text}"),
                None => text.clone(),
            };
            w.record(
                OutputRecord {
                    command: "ifactor".into(),
                    inputs: inputs(&[("b", b), ("x", x), ("method", format!("{method:?}").to_lowercase())]),
                    value: exact.unwrap_or(text),
                    error_budget: format_error(ctx.target_abs_error()),
                    method: None,
                },
                &shown,
            )?;
            0
        }
        Command::Qcoeff(q) => {
            if q.n == 0 {
                return Err(Error::InvalidArgument("n must be positive".into()));
            }
            let table = QTable::build(q.n)?;
            if q.diagonal {
                for n in 1..=q.n {
                    let v = table.q(n, n).to_string();
                    w.record(
                        OutputRecord { command: "qcoeff".into(), inputs: inputs(&[("n", n.to_string()), ("k", n.to_string())]), value: v.clone(), error_budget: "0".into(), method: None },
                        &format!("{n} {v}"),
                    )?;
                }
                if q.n <= 10 {
                    let rep = check_diagonal_bessel(&table, q.n, 40, &settings.ctx(40))?;
                    writeln!(err, "Bessel-zero sums: max relative error {:.3e}", rep.max_rel_error_corrected()).ok();
                }
                0
            } else if q.sum_check {
                let mut code = 0;
                for n in 1..=q.n {
                    let sum: Integer = table.row(n).expect("row built").iter().sum();
                    let want = Integer::from(Integer::factorial(n as u32)) * Integer::from(Integer::factorial(n as u32 - 1));
                    let ok = sum == want;
                    if !ok {
                        code = 5;
                    }
                    w.record(
                        OutputRecord { command: "qcoeff".into(), inputs: inputs(&[("n", n.to_string())]), value: sum.to_string(), error_budget: "0".into(), method: None },
                        &format!("{n} {sum} {}", if ok { "ok" } else { "MISMATCH" }),
                    )?;
                }
                code
            } else {
                let row: Vec<String> = table.row(q.n).expect("row built").iter().map(|c| c.to_string()).collect();
                let text = row.join(" ");
                w.record(
                    OutputRecord { command: "qcoeff".into(), inputs: inputs(&[("n", q.n.to_string())]), value: text.clone(), error_budget: "0".into(), method: None },
                    &text,
                )?;
                0
            }
        }
        Command::Primezeta { s, digits } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let ctx = settings.ctx(digits);
            let sv = parse_real(&s, ctx.working_bits())?;
            let v = prime_zeta(&sv, &ctx)?;
            let text = format_value(&v, digits);
            w.record(
                OutputRecord { command: "primezeta".into(), inputs: inputs(&[("s", s)]), value: text.clone(), error_budget: format_error(ctx.target_abs_error()), method: None },
                &text,
            )?;
            0
        }
        Command::Density { sigma, kind, k, m, digits } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let kind = DensityKind::parse(&kind, k)?;
            let s = parse_real(&sigma, 256)?;
            let opts = DensityOptions { m, ..DensityOptions::default() };
            let r = density_significant(&s, kind, digits, &settings.ctx(30), &opts)?;
            w.density_row("density", &sigma, &r, digits)?;
            0
        }
        Command::Table2 { rows, digits } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let list: Vec<String> = match rows.as_deref() {
                None => TABLE2_ROWS.iter().map(|s| s.to_string()).collect(),
                Some("all") => TABLE2_ROWS.iter().chain(&TABLE2_DEEP_ROWS).map(|s| s.to_string()).collect(),
                Some(text) => text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            };
            for sigma in list {
                let s = parse_real(&sigma, 256)?;
                let r = density_significant(&s, DensityKind::D, digits, &settings.ctx(30), &DensityOptions::default())?;
                w.density_row("table2", &sigma, &r, digits)?;
            }
            0
        }
        Command::Table3 { digits } => {
            let digits = digits.unwrap_or(10);
            settings.check_cap(digits)?;
            for sigma in TABLE3_ROWS {
                let s = parse_real(sigma, 256)?;
                let r = density_significant(&s, DensityKind::Gap, digits, &settings.ctx(30), &DensityOptions::default())?;
                w.density_row("table3", sigma, &r, digits)?;
            }
            0
        }
        Command::Sigma0 { which, digits } => {
            let digits = digits.unwrap_or(settings.digits);
            settings.check_cap(digits)?;
            let ctx = settings.ctx(digits);
            let v = match which {
                0 => sigma0(&ctx)?,
                1 => sigma1(&ctx)?,
                _ => return Err(Error::InvalidArgument(format!("--which takes 0 or 1, got {which}"))),
            };
            let text = format_value(&v, digits);
            w.record(
                OutputRecord { command: "sigma0".into(), inputs: inputs(&[("which", which.to_string())]), value: text.clone(), error_budget: format_error(ctx.target_abs_error()), method: None },
                &text,
            )?;
            0
        }
        Command::Rho { sigma, from, to, points, ell, digits } => {
            let digits = digits.unwrap_or(15);
            settings.check_cap(digits)?;
            if points < 2 || !(to > from) {
                return Err(Error::InvalidArgument("need --points >= 2 and --to > --from".into()));
            }
            let ctx = settings.ctx(digits);
            let s = parse_real(&sigma, ctx.working_bits())?;
            let ell = match ell {
                Some(l) => l,
                None => 1.1 * crate::primes::support_length(&s, &PrecisionContext::with_digits(20))?.to_f64(),
            };
            let rho = RhoTilde::new(&s, ell, &ctx)?;
            if !rho.is_exact() {
                writeln!(err, "note: l = {ell} does not exceed L(sigma); values approximate the density").ok();
            }
            let budget = format_error(&Float::with_val(64, rho.budget()));
            if w.format == Format::Text {
                w.text("x,rho")?;
            }
            for i in 0..points {
                let x = from + (to - from) * i as f64 / (points - 1) as f64;
                let v = format_value(&rho.value(x), digits);
                w.record(
                    OutputRecord { command: "rho".into(), inputs: inputs(&[("sigma", sigma.clone()), ("x", x.to_string()), ("ell", ell.to_string())]), value: v.clone(), error_budget: budget.clone(), method: None },
                    &format!("{x},{v}"),
                )?;
            }
            0
        }
        Command::Mc { sigma, samples, cutoff, seed, bins, histogram_out } => {
            if cutoff > settings.prime_limit {
                return Err(Error::Capacity(format!("cutoff {cutoff} exceeds the prime limit {}", settings.prime_limit)));
            }
            let cfg = McConfig::new(sigma, samples, cutoff, seed)?;
            let est = estimate_densities(&cfg)?;
            let base = [("sigma", sigma.to_string()), ("samples", samples.to_string()), ("cutoff", cutoff.to_string()), ("seed", seed.to_string())];
            for (name, e, bias) in [("d", est.d, est.bias.d), ("d_minus", est.d_minus, est.bias.d_minus)] {
                let mut inp = inputs(&base);
                inp.insert("kind".into(), name.into());
                inp.insert("events".into(), e.events.to_string());
                inp.insert("bias_bound".into(), format!("{bias:.3e}"));
                let value = format!("{:.6e}", e.estimate);
                let text = format!("{name} = {value} +- {:.3e} (events {}, truncation bias <= {bias:.3e})", e.std_error, e.events);
                w.record(
                    OutputRecord { command: "mc".into(), inputs: inp, value, error_budget: format!("{:.3e}", e.std_error), method: Some("monte-carlo".into()) },
                    &text,
                )?;
            }
            if let Some(bins) = bins {
                let rep = histogram_vs_rho(&cfg, bins, &PrecisionContext::with_digits(15))?;
                writeln!(
                    err,
                    "histogram vs rho~: chi2 = {:.3} on {} dof, 99.9% critical {:.3}: {}",
                    rep.statistic,
                    rep.dof,
                    rep.critical,
                    if rep.pass { "pass" } else { "FAIL" }
                )
                .ok();
                if let Some(path) = histogram_out {
                    let mut csvw = csv::Writer::from_path(&path).map_err(Writer::io)?;
                    csvw.write_record(["lo", "hi", "count", "expected"]).map_err(Writer::io)?;
                    for (i, c) in rep.counts.iter().enumerate() {
                        csvw.write_record([
                            rep.edges[i].to_string(),
                            rep.edges[i + 1].to_string(),
                            c.to_string(),
                            format!("{:.3}", rep.expected[i]),
                        ])
                        .map_err(Writer::io)?;
                    }
                    csvw.flush().map_err(Writer::io)?;
                }
                if !rep.pass {
                    w.finish()?;
                    return Ok(5);
                }
            }
            0
        }
        Command::Checks { suite } => {
            let suite = Suite::parse(&suite)?;
            let results = run_suite(suite)?;
            let mut code = 0;
            for r in &results {
                if !r.pass {
                    code = 5;
                }
                w.record(
                    OutputRecord {
                        command: "checks".into(),
                        inputs: inputs(&[("suite", r.suite.to_string()), ("name", r.name.clone())]),
                        value: if r.pass { "pass".into() } else { "fail".into() },
                        error_budget: r.detail.clone(),
                        method: None,
                    },
                    &r.to_string(),
                )?;
            }
            code
        }
    };
    w.finish()?;
    Ok(code)
}

/// Reads a density CSV produced by the writer back into
/// `(sigma, kind, value, error, method)` rows.
pub fn parse_density_csv(text: &str) -> Result<Vec<HashMap<String, String>>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(Writer::io)?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected header {headers:?}")));
    }
    rdr.records()
        .map(|r| {
            let r = r.map_err(Writer::io)?;
            Ok(headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}

/// Parses a formatted value back at `bits` of precision.
pub fn reparse_value(text: &str, bits: u32) -> Result<Float> {
    parse_float(text, bits)
}

//! Invariant suites behind `zetasign checks`: cheap re-derivations of the
//! bounds, exact identities and cross-method agreements.

use std::fmt;

use rug::Float;

use crate::charfun::PsiEvaluator;
use crate::density::{density, density_d_integral, DensityKind, DensityOptions};
use crate::error::{Error, Result};
use crate::ifunc::{check_bounds, i_quadrature, i_series, log_i_series};
use crate::numerics::PrecisionContext;
use crate::qpoly::{check_diagonal_bessel, QTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Bounds,
    Identities,
    Oracles,
    All,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bounds" => Ok(Self::Bounds),
            "identities" => Ok(Self::Identities),
            "oracles" => Ok(Self::Oracles),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidArgument(format!("unknown suite '{name}'"))),
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

fn outcome(suite: &'static str, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome { suite, name: name.into(), pass, detail: detail.into() }
}

fn fl(v: f64) -> Float {
    Float::with_val(192, v)
}

fn diff(a: &Float, b: &Float) -> f64 {
    Float::with_val(a.prec().max(b.prec()), a - b).abs().to_f64()
}

pub fn run_suite(suite: Suite) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if suite.includes(Suite::Bounds) {
        bounds(&mut out)?;
    }
    if suite.includes(Suite::Identities) {
        identities(&mut out)?;
    }
    if suite.includes(Suite::Oracles) {
        oracles(&mut out)?;
    }
    Ok(out)
}

fn bounds(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let ctx = PrecisionContext::with_digits(20);
    let mut worst = f64::INFINITY;
    let mut failed = Vec::new();
    for b in [1.1f64, 1.5, 2.0, 4.0, 10.0, 50.0] {
        for x in [0.3f64, 1.0, 2.5, 5.0, 12.0, 40.0, 150.0] {
            for c in check_bounds(&fl(b), &fl(x), &ctx)? {
                worst = worst.min(c.margin());
                if !c.holds() {
                    failed.push(format!("{} at b={b}, x={x}", c.name));
                }
            }
        }
    }
    out.push(outcome(
        "bounds",
        "I bounds on grid",
        failed.is_empty(),
        if failed.is_empty() { format!("smallest margin {worst:.3e}") } else { failed.join("; ") },
    ));

    let ctx = PrecisionContext::with_digits(18);
    for sigma in [0.6f64, 1.0, 1.5] {
        let ev = PsiEvaluator::new(&fl(sigma), 50.0, &ctx)?;
        let mut top = 0.0f64;
        for i in 1..=100 {
            let x = 0.5 * f64::from(i);
            top = top.max(ev.psi(&fl(x))?.to_f64().abs());
        }
        out.push(outcome("bounds", format!("|psi| <= 1 at sigma={sigma}"), top <= 1.0, format!("max {top:.6}")));
    }
    for sigma in [0.7f64, 1.0] {
        let digits = (-(crate::charfun::decay_envelope(sigma, 50.0)).log10()).ceil() as u32 + 5;
        let ev = PsiEvaluator::new(&fl(sigma), 50.0, &PrecisionContext::with_digits(digits))?;
        let mut least = f64::INFINITY;
        let mut ok = true;
        for x in [5.0, 10.0, 20.0, 35.0, 50.0] {
            match ev.psi_decay_check(x) {
                Ok(r) => least = least.min(r.margin),
                Err(_) => ok = false,
            }
        }
        out.push(outcome("bounds", format!("decay envelope at sigma={sigma}"), ok, format!("smallest margin {least:.3e}")));
    }
    Ok(())
}

fn identities(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let table = QTable::build(50)?;
    let ok = table.verify_identities().is_ok();
    out.push(outcome("identities", "row sums and first column to n=50", ok, "exact integers"));

    let report = check_diagonal_bessel(&table, 10, 40, &PrecisionContext::with_digits(40))?;
    let err = report.max_rel_error_corrected();
    out.push(outcome("identities", "diagonal vs Bessel zeros", err < 1e-20, format!("max relative error {err:.3e}")));

    let ctx = PrecisionContext::with_digits(12);
    let opts = DensityOptions::default();
    let sigma = fl(0.9);
    let dp = density(&sigma, DensityKind::DPlus, &ctx, &opts)?;
    let dm = density(&sigma, DensityKind::DMinus, &ctx, &opts)?;
    let gap = (Float::with_val(192, &dp.value + &dm.value) - 1u32).abs().to_f64();
    let slack = Float::with_val(64, dp.budget.total() + dm.budget.total()).to_f64();
    out.push(outcome("identities", "d_plus + d_minus = 1", gap <= slack, format!("|sum - 1| = {gap:.3e}")));
    Ok(())
}

fn oracles(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let ctx = PrecisionContext::with_digits(25);
    let table = QTable::build(180)?;
    let log_ctx = PrecisionContext::with_digits(16);
    let mut worst = 0.0f64;
    for b in [1.5f64, 2.0, 5.0, 31.0] {
        for x in [0.5f64, 1.0, 3.0, 10.0] {
            let s = i_series(&fl(b), &fl(x), &ctx)?;
            let q = i_quadrature(&fl(b), &fl(x), &ctx)?;
            worst = worst.max(diff(&s, &q) / 2e-25);
            if b > (x / 2.0).max(1.0) {
                let l = log_i_series(&fl(b), &fl(x), &table, &log_ctx)?.exp();
                worst = worst.max(diff(&s, &l) / (1e-16 + 1e-25));
            }
        }
    }
    out.push(outcome("oracles", "I series / quadrature / log series", worst <= 1.0, format!("worst error / budget {worst:.3e}")));

    let sigma = fl(1.15);
    let pctx = PrecisionContext::with_digits(40);
    let a = PsiEvaluator::with_kappa(&sigma, 20.0, 4.0, &pctx)?;
    let b = PsiEvaluator::with_kappa(&sigma, 20.0, 8.0, &pctx)?;
    let mut ratio = 0.0f64;
    for x in [0.5, 3.0, 10.0, 19.0] {
        let (va, vb) = (a.psi_with_budget(&fl(x))?, b.psi_with_budget(&fl(x))?);
        let slack = Float::with_val(64, va.budget.total() + vb.budget.total()).to_f64();
        ratio = ratio.max(diff(&va.value, &vb.value) / slack);
    }
    out.push(outcome("oracles", "psi independent of kappa", ratio <= 1.0, format!("worst difference / budget {ratio:.3e}")));

    let dctx = PrecisionContext::with_digits(15);
    let s = fl(1.05);
    let sum = density(&s, DensityKind::D, &dctx, &DensityOptions::default())?;
    let int = density_d_integral(&s, &dctx)?;
    let slack = Float::with_val(64, sum.budget.total() + int.budget.total()).to_f64();
    let d = diff(&sum.value, &int.value);
    out.push(outcome("oracles", "d by sum and by integral", d <= slack, format!("difference {d:.3e}, budget {slack:.3e}")));
    Ok(())
}

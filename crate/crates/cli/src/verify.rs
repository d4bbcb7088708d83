use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use sieve_core::Verdict;

use crate::output::num;
use crate::suites::{
    asymptotic_suite, identity_suite, simulation_suite, stationary_suite, CheckRow, Plan,
    SimulationPlan,
};
use crate::tolerances::Tolerances;
use crate::{Format, RunContext};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Exact suites and the asymptotic suite at moderate horizons (default).
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    /// Adds the Monte Carlo suite and longer horizons.
    #[arg(long)]
    pub full: bool,
}

#[derive(Serialize)]
struct Counts {
    pass: usize,
    fail: usize,
    inconclusive: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    mode: &'static str,
    plan: Plan,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation_plan: Option<SimulationPlan>,
    tolerances: &'a Tolerances,
    counts: Counts,
    checks: &'a [CheckRow],
}

/// Every check for `ctx`'s measure under `plan`.
pub fn run_checks(ctx: &RunContext, plan: &Plan, sim: Option<&SimulationPlan>) -> Vec<CheckRow> {
    let kernel = ctx.kernel();
    let tol = &ctx.tolerances;
    let mut rows = identity_suite(&kernel, plan, tol);
    rows.extend(stationary_suite(&kernel, plan, tol, ctx.seed));
    rows.extend(asymptotic_suite(&kernel, plan, tol));
    if let Some(sim) = sim {
        rows.extend(simulation_suite(&kernel, sim, tol, ctx.seed));
    }
    rows
}

fn short(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else if x == 0.0 || (1e-3..1e5).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

fn print_table(rows: &[CheckRow]) {
    let width = rows
        .iter()
        .map(|r| r.check.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    println!(
        "{:<10}  {:<width$}  {:<12}  {:>12}  {:>12}  {:>12}  note",
        "suite", "check", "verdict", "predicted", "observed", "tolerance"
    );
    for r in rows {
        println!(
            "{:<10}  {:<width$}  {:<12}  {:>12}  {:>12}  {:>12}  {}",
            r.suite.as_str(),
            r.check,
            r.verdict.as_str(),
            short(r.predicted),
            short(r.observed),
            short(r.tolerance),
            r.note
        );
    }
}

pub fn run(ctx: &RunContext, args: &VerifyArgs) -> Result<ExitCode> {
    ctx.warn_if_lattice();
    let (mode, plan) = if args.full {
        ("full", Plan::full())
    } else {
        ("quick", Plan::quick())
    };
    let sim = plan.simulate.then(SimulationPlan::default);
    let rows = run_checks(ctx, &plan, sim.as_ref());
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let counts = Counts {
        pass: count(Verdict::Pass),
        fail: count(Verdict::Fail),
        inconclusive: count(Verdict::Inconclusive),
    };
    print_table(&rows);
    println!(
        "{}: {} pass, {} fail, {} inconclusive",
        ctx.measure.descriptor(),
        counts.pass,
        counts.fail,
        counts.inconclusive
    );
    let failed = rows.iter().any(CheckRow::is_failure);
    let out = ctx.out_dir()?;
    let path = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => out.write_json(
            "verify_report.json",
            &ctx.provenance,
            &Report {
                mode,
                plan,
                simulation_plan: sim,
                tolerances: &ctx.tolerances,
                counts,
                checks: &rows,
            },
        )?,
        Format::Csv => out.write_csv(
            "verify_report.csv",
            &ctx.provenance,
            &[
                "suite",
                "check",
                "verdict",
                "predicted",
                "observed",
                "tolerance",
                "note",
            ],
            rows.iter().map(|r| {
                [
                    r.suite.as_str().to_string(),
                    r.check.clone(),
                    r.verdict.as_str().to_string(),
                    num(r.predicted),
                    num(r.observed),
                    num(r.tolerance),
                    r.note.clone(),
                ]
            }),
        )?,
    };
    eprintln!("wrote {}", path.display());
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use sieve_core::StationaryKernel;

use crate::output::num;
use crate::{Format, RunContext};

#[derive(Debug, Args)]
pub struct StationaryArgs {
    /// Number of balls n.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
}

#[derive(Serialize)]
struct StationaryColumns {
    stationary: bool,
    n: usize,
    m: Vec<usize>,
    initial_occupancy: Vec<f64>,
    first_part: Vec<f64>,
    visit_probability: Vec<f64>,
    limit_potential: Vec<Option<f64>>,
}

/// Writes `stationary.csv` (or `.json`) with, for each m ≤ n, the initial occupancy
/// w₀(n, m), the first-part law q₀(n, m), the visit probability of m by the
/// chain started at n, and the limit potential W(m)/(μm).
pub fn run(ctx: &RunContext, args: &StationaryArgs) -> Result<()> {
    let n = args.n;
    if n == 0 {
        bail!("--n must be at least 1");
    }
    ctx.warn_if_lattice();
    let st = StationaryKernel::new(ctx.kernel()).context("stationary chain unavailable")?;
    let w0 = st.initial_occupancy_row(n)?;
    let q0 = st.first_part_row(n)?;
    let visits = st.stationary_visit_probabilities(n)?;
    let limit: Vec<Option<f64>> = (0..=n)
        .map(|m| (m > 0).then(|| st.stationary_potential(m)))
        .collect();
    let out = ctx.out_dir()?;
    let path = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => out.write_csv(
            "stationary.csv",
            &ctx.provenance,
            &[
                "m",
                "initial_occupancy",
                "first_part",
                "visit_probability",
                "limit_potential",
                "stationary",
            ],
            (0..=n).map(|m| {
                [
                    m.to_string(),
                    num(w0[m]),
                    num(q0[m]),
                    num(visits[m]),
                    limit[m].map(num).unwrap_or_default(),
                    "true".to_string(),
                ]
            }),
        )?,
        Format::Json => out.write_json(
            "stationary.json",
            &ctx.provenance,
            &StationaryColumns {
                stationary: true,
                n,
                m: (0..=n).collect(),
                initial_occupancy: w0,
                first_part: q0,
                visit_probability: visits,
                limit_potential: limit,
            },
        )?,
    };
    eprintln!("wrote {}", path.display());
    println!(
        "mu = {}, stationary mean parts at n = {n}: {}",
        num(st.mu()),
        num(st.stationary_mean_parts(n))
    );
    Ok(())
}

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use crate::output::num;
use crate::{Format, RunContext};

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Horizon N of the moment series.
    #[arg(long = "N", default_value_t = 100)]
    pub horizon: usize,
    /// Also write the exact law of K_N to `kdist.json`.
    #[arg(long)]
    pub kdist: bool,
    /// Also write the visit probabilities g(N, m) to `potential.csv`.
    #[arg(long)]
    pub potential: bool,
}

#[derive(Serialize)]
struct MomentColumns<'a> {
    horizon: usize,
    n: Vec<usize>,
    a: &'a [f64],
    v: &'a [f64],
}

pub fn run(ctx: &RunContext, args: &ExactArgs) -> Result<()> {
    if args.horizon == 0 {
        bail!("--N must be at least 1");
    }
    ctx.warn_if_lattice();
    let kernel = ctx.kernel();
    let out = ctx.out_dir()?;
    let series = kernel.moment_series(args.horizon);
    let n = args.horizon;
    let path = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => out.write_csv(
            "moments.csv",
            &ctx.provenance,
            &["n", "a_n", "v_n"],
            (1..=n).map(|m| [m.to_string(), num(series.a[m]), num(series.v[m])]),
        )?,
        Format::Json => out.write_json(
            "moments.json",
            &ctx.provenance,
            &MomentColumns {
                horizon: n,
                n: (1..=n).collect(),
                a: &series.a[1..],
                v: &series.v[1..],
            },
        )?,
    };
    eprintln!("wrote {}", path.display());
    if args.kdist {
        let law = kernel.parts_distribution(n)?;
        let path = out.write_json("kdist.json", &ctx.provenance, &law)?;
        eprintln!("wrote {}", path.display());
    }
    if args.potential {
        let table = kernel.potential_table(n)?;
        let path = out.write_csv(
            "potential.csv",
            &ctx.provenance,
            &["m", "g"],
            (0..=n).map(|m| [m.to_string(), num(table.g[m])]),
        )?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

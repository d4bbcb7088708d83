use anyhow::{Context, Result};
use clap::Args;
use sieve_core::sampler::run_monte_carlo;
use sieve_core::{MonteCarloConfig, Sampler};

use crate::output::num;
use crate::{parse_sampler, Format, RunContext};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of balls n.
    #[arg(long)]
    pub n: usize,
    /// Number of independent replicates.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// game, stickbreak, renewal or stationary.
    #[arg(long, default_value = "game", value_parser = parse_sampler)]
    pub sampler: Sampler,
    /// Add the KS distances of normalized K_n from N(0, 1).
    #[arg(long)]
    pub clt: bool,
    /// Also write every K_n to `samples.csv`.
    #[arg(long)]
    pub samples: bool,
}

pub fn run(ctx: &RunContext, args: &SimulateArgs) -> Result<()> {
    let mut config = MonteCarloConfig::new(args.n, args.reps as usize, ctx.seed, args.sampler);
    if args.clt {
        config = config.with_clt();
    }
    if args.samples {
        config = config.with_samples();
    }
    let mut summary = run_monte_carlo(&ctx.measure, &config).context("simulation failed")?;
    let samples = summary.k_samples.take();
    let out = ctx.out_dir()?;
    let path = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => out.write_json("mc_summary.json", &ctx.provenance, &summary)?,
        Format::Csv => {
            let value = serde_json::to_value(&summary)?;
            let rows: Vec<[String; 2]> = value
                .as_object()
                .expect("summary serializes to an object")
                .iter()
                .map(|(k, v)| {
                    [
                        k.clone(),
                        v.as_str().map_or_else(|| v.to_string(), str::to_string),
                    ]
                })
                .collect();
            out.write_csv("mc_summary.csv", &ctx.provenance, &["key", "value"], rows)?
        }
    };
    eprintln!("wrote {}", path.display());
    if let Some(k) = samples {
        let path = out.write_csv(
            "samples.csv",
            &ctx.provenance,
            &["rep", "k"],
            k.iter()
                .enumerate()
                .map(|(i, k)| [i.to_string(), k.to_string()]),
        )?;
        eprintln!("wrote {}", path.display());
    }
    println!(
        "{} n={} reps={} sampler={}: mean K = {} (se {}), var K = {}",
        summary.measure,
        summary.n,
        summary.reps,
        summary.sampler,
        num(summary.mean_k),
        num(summary.se_k),
        num(summary.var_k)
    );
    Ok(())
}

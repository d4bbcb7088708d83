use anyhow::Result;
use clap::Args;

use crate::output::json_string;
use crate::suites::bernstein_residuals;
use crate::{Format, RunContext};

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    /// Largest degree checked in floating point.
    #[arg(long, default_value_t = 500)]
    pub n_max: usize,
    /// Largest degree checked in rational arithmetic.
    #[arg(long, default_value_t = 30)]
    pub exact_n_max: usize,
}

pub fn run(ctx: &RunContext, args: &IdentitiesArgs) -> Result<()> {
    let r = bernstein_residuals(args.n_max, args.exact_n_max)?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Json => print!("{}", json_string(&ctx.provenance, &r)?),
        Format::Csv => {
            println!("identity,arithmetic,n_max,max_residual,nonzero_cases");
            println!("first,float,{},{:e},", r.n_max, r.first_max);
            println!("second,float,{},{:e},", r.n_max, r.second_max);
            println!(
                "first,rational,{},{:e},{}",
                r.exact_n_max, r.exact_first_max, r.exact_first_nonzero
            );
            println!(
                "second,rational,{},{:e},{}",
                r.exact_n_max, r.exact_second_max, r.exact_second_nonzero
            );
            println!(
                "harmonic_square,rational,{},,{}",
                r.exact_n_max, r.exact_square_nonzero
            );
        }
    }
    Ok(())
}

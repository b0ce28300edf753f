//! Multi-start comparison of the quasi-Newton and steepest-descent methods.

use setopt::bench::{format_table, run_bench, BenchConfig};
use setopt::problem::builtin;

fn main() -> setopt::error::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ex3".into());
    let ps = builtin(&name)?;
    let cfg = BenchConfig {
        starts: 50,
        seed: 7,
        jobs: 4,
        ..BenchConfig::default()
    };
    let out = run_bench(&ps, &cfg)?;
    print!("{}", format_table(&out.stats, Some(&out.timing)));
    Ok(())
}

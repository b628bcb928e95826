//! Penalized paths X_{H,T} against the limit law at a single horizon.

use penfbm::limitlaw::sample_limit_law_with;
use penfbm::penalize::{sample_penalized_with, steps_for, DEFAULT_ESS_FLOOR};
use penfbm::stats::ks_distance;
use penfbm::{HurstParam, Seed};

fn main() -> penfbm::Result<()> {
    let hurst = HurstParam::brownian();
    let horizon = 32.0;
    let pen = sample_penalized_with(
        hurst,
        horizon,
        steps_for(horizon, 32)?,
        20_000,
        Seed::new(3),
        DEFAULT_ESS_FLOOR,
        |p| p.last(),
    )?;
    let lim = sample_limit_law_with(hurst, 1024, 20_000, Seed::new(4), DEFAULT_ESS_FLOOR, |p| p.last())?;
    let (a, b) = (pen.marginal(|x| *x)?, lim.marginal(|x| *x)?);
    println!("penalized: ess {:.0}, E X(1) = {:.4}", pen.ess, a.mean());
    println!("limit law: ess {:.0}, E X(1) = {:.4}", lim.ess, b.mean());
    println!("KS distance {:.4}", ks_distance(&a, &b));
    Ok(())
}

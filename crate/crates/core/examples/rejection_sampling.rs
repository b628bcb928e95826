//! Brownian paths conditioned to stay above -1 on [0, T], by rejection.

use penfbm::penalize::sample_conditioned_rejection;
use penfbm::{HurstParam, Seed};

fn main() -> penfbm::Result<()> {
    let out = sample_conditioned_rejection(HurstParam::brownian(), 4.0, 1024, 2000, 100_000, Seed::new(5))?;
    let exact = 2.0 * 0.5 * (1.0 + libm::erf(0.5 / std::f64::consts::SQRT_2)) - 1.0;
    println!(
        "accepted {} of {} draws: rate {:.4} ± {:.4} (continuous-time value {exact:.4})",
        out.ensemble.len(),
        out.draws,
        out.acceptance.value,
        out.acceptance.stderr
    );
    println!("mean endpoint {:.4}", out.ensemble.expectation(|p| p.last()));
    Ok(())
}

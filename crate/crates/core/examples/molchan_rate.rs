//! Decay of I(T) = E[(∫_0^T e^{-B_H})^{-1}] and of the persistence
//! probability, with log-log slopes.

use penfbm::penalize::rate_study;
use penfbm::{HurstParam, Seed};

fn main() -> penfbm::Result<()> {
    let hurst = HurstParam::new(0.75)?;
    let study = rate_study(hurst, &[4.0, 16.0, 64.0], 32, 4000, Seed::new(11))?;
    println!("{:>6} {:>12} {:>10} {:>12}", "T", "I(T)", "ess", "P(min>=-1)");
    for r in &study.rows {
        println!(
            "{:>6} {:>12.5} {:>10.0} {:>12.4}",
            r.horizon, r.i_hat.value, r.ess, r.persistence.value
        );
    }
    println!(
        "slope {:.3} ± {:.3} (H - 1 = {:.2})",
        study.fit.slope,
        study.fit.slope_stderr,
        hurst.value() - 1.0
    );
    if let Some(fit) = &study.persistence_fit {
        println!("persistence slope {:.3} ± {:.3}", fit.slope, fit.slope_stderr);
    }
    Ok(())
}

//! The limit law Q: normalizer E[-M_H(1)] and the sign asymmetry of X_H(1).

use penfbm::limitlaw::{asymmetry, normalizer_brownian_bridge, normalizer_policy, sample_limit_law_with};
use penfbm::penalize::DEFAULT_ESS_FLOOR;
use penfbm::{HurstParam, Seed};

fn main() -> penfbm::Result<()> {
    let bm = normalizer_brownian_bridge(256, 100_000, Seed::new(1))?;
    println!(
        "H=0.5: bridge {:.5} ± {:.5}, grid {:.5}, closed form {:.5}",
        bm.bridge.value,
        bm.bridge.stderr,
        bm.grid.value,
        (2.0 / std::f64::consts::PI).sqrt()
    );
    for h in [0.3, 0.5, 0.8] {
        let hurst = HurstParam::new(h)?;
        let norm = normalizer_policy(hurst, 512, 20_000, Seed::new(2))?;
        let ens = sample_limit_law_with(hurst, 512, 20_000, Seed::new(3), DEFAULT_ESS_FLOOR, |p| p.last())?;
        let rep = asymmetry(&ens.marginal(|x| *x)?, 200, 0.99, Seed::new(4))?;
        println!(
            "H={h}: E[-M(1)] = {:.4} ± {:.4}, P(X>0) - P(X<0) = {:.4}, 99% lower bound {:.4}",
            norm.value(),
            norm.stderr(),
            rep.difference,
            rep.lower_bound
        );
    }
    Ok(())
}

//! Weighted empirical distributions: KS and W1 distances with a bootstrap
//! interval.

use penfbm::stats::{two_sample_test, wasserstein1, TwoSampleStat};
use penfbm::{Seed, WeightedSample};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> penfbm::Result<()> {
    let mut rng = Seed::new(21).rng();
    let xs: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
    // Reweighting N(0,1) by e^{x/2} gives N(1/2, 1).
    let tilted = WeightedSample::new(xs.clone(), xs.iter().map(|x| (0.5 * x).exp()).collect())?;
    let shifted = WeightedSample::uniform((0..5000).map(|_| 0.5 + rng.sample::<f64, _>(StandardNormal)).collect())?;
    let report = two_sample_test(&tilted, &shifted, TwoSampleStat::Ks, 0.05, 200, Seed::new(22))?;
    println!("ess of tilted sample {:.0}", tilted.ess());
    println!(
        "KS {:.4} (95% CI {:.4}..{:.4}), W1 {:.4}",
        report.statistic,
        report.ci_low,
        report.ci_high,
        wasserstein1(&tilted, &shifted)
    );
    Ok(())
}

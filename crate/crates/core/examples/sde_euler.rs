//! Euler-Maruyama for the three drifts, with endpoint summaries.

use penfbm::sde::{euler_endpoints, DriftKind, DriftSpec};
use penfbm::Seed;

fn main() -> penfbm::Result<()> {
    let n_steps = 2000;
    for kind in [DriftKind::Penalized, DriftKind::Meander, DriftKind::Bessel] {
        let spec = DriftSpec::with_default_start(kind, n_steps);
        let ends = euler_endpoints(spec, n_steps, 5000, Seed::new(9), false)?;
        let n = ends.len() as f64;
        let mean_x1 = ends.iter().map(|e| e.x1).sum::<f64>() / n;
        let mean_gap = ends.iter().map(|e| e.x1 - e.min).sum::<f64>() / n;
        let redrawn: u32 = ends.iter().map(|e| e.rejections).sum();
        println!("{kind:?}: E X(1) = {mean_x1:.4}, E[X(1) - min] = {mean_gap:.4}, redrawn {redrawn}");
    }
    Ok(())
}

//! Sample fBM on [0, 1] with both exact samplers and compare the variance of
//! B_H(1) with its target of 1.

use penfbm::{FbmGenerator, HurstParam, Method, Seed, TimeGrid};

fn main() -> penfbm::Result<()> {
    let grid = TimeGrid::unit(512)?;
    for h in [0.3, 0.5, 0.8] {
        let hurst = HurstParam::new(h)?;
        for method in [Method::Cholesky, Method::Circulant] {
            let gen = FbmGenerator::new(hurst, grid, method)?;
            let ends = gen.map_paths(Seed::new(7), 20_000, |p, _| p.last());
            let var = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
            println!("H={h:.1} {method:?}: Var B_H(1) = {var:.4}");
        }
    }
    Ok(())
}

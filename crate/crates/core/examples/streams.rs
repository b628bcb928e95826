//! Per-path random streams: the same seed gives the same paths on any
//! number of threads.

use penfbm::{FbmGenerator, HurstParam, Method, Seed, TimeGrid};

fn main() -> penfbm::Result<()> {
    let gen = FbmGenerator::new(HurstParam::new(0.4)?, TimeGrid::unit(256)?, Method::Circulant)?;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| gen.map_paths(Seed::new(99), 1000, |p, _| p.last()))
    };
    let (one, four) = (run(1), run(4));
    println!("identical across thread counts: {}", one == four);
    let seed = Seed::new(99);
    println!("path 5 uses {:?}; stage 1 starts at {:?}", seed.child(5), seed.stage(1));
    Ok(())
}

//! Write paths as CSV and as a binary block, then read the block back.

use std::io::BufWriter;

use penfbm::io::{load_block, save_block, write_paths_csv, PathBlock};
use penfbm::{FbmGenerator, HurstParam, Method, Seed, TimeGrid};

fn main() -> penfbm::Result<()> {
    let hurst = HurstParam::new(0.7)?;
    let gen = FbmGenerator::new(hurst, TimeGrid::new(2.0, 100)?, Method::Auto)?;
    let paths = gen.sample_many(Seed::new(1), 10);
    let dir = std::env::temp_dir().join("penfbm-path-io");
    std::fs::create_dir_all(&dir)?;
    write_paths_csv(BufWriter::new(std::fs::File::create(dir.join("paths.csv"))?), &paths)?;
    save_block(&dir.join("paths.bin"), &PathBlock::new(hurst, paths.clone())?)?;
    let back = load_block(&dir.join("paths.bin"))?;
    assert_eq!(back.paths, paths);
    println!("{} paths of {} points written to {}", back.paths.len(), back.grid.len(), dir.display());
    Ok(())
}

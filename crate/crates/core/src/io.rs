//! Path and weight serialization.
//!
//! * CSV paths: `path_id,t,value`, one row per grid point.
//! * Binary block: little-endian header `H: f64, T: f64, n_steps: u64,
//!   count: u64`, then `count × (n_steps + 1)` `f64` values row-major.
//! * Weights sidecar: CSV `path_id,weight`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::gaussgen::{HurstParam, Path, TimeGrid};

const HEADER_BYTES: usize = 32;

fn format_err(source_name: &str, reason: impl Into<String>) -> Error {
    Error::Format {
        source_name: source_name.to_string(),
        reason: reason.into(),
    }
}

fn csv_err(source_name: &str, e: csv::Error) -> Error {
    format_err(source_name, e.to_string())
}

pub fn write_paths_csv<W: Write>(out: W, paths: &[Path]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "t", "value"]).map_err(|e| csv_err("paths", e))?;
    for (id, p) in paths.iter().enumerate() {
        for (t, v) in p.grid.times().zip(&p.values) {
            w.serialize((id, t, v)).map_err(|e| csv_err("paths", e))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Paths sharing one grid, as stored in a binary block.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBlock {
    pub hurst: HurstParam,
    pub grid: TimeGrid,
    pub paths: Vec<Path>,
}

impl PathBlock {
    pub fn new(hurst: HurstParam, paths: Vec<Path>) -> Result<Self> {
        let grid = paths.first().ok_or(Error::EmptySample)?.grid;
        if paths.iter().any(|p| p.grid != grid) {
            return Err(Error::param("paths", "all paths in a block must share one grid"));
        }
        Ok(PathBlock { hurst, grid, paths })
    }
}

pub fn write_block<W: Write>(out: W, block: &PathBlock) -> Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(&block.hurst.value().to_le_bytes())?;
    w.write_all(&block.grid.horizon().to_le_bytes())?;
    w.write_all(&(block.grid.n_steps() as u64).to_le_bytes())?;
    w.write_all(&(block.paths.len() as u64).to_le_bytes())?;
    for p in &block.paths {
        for v in &p.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_block<R: Read>(input: R, source_name: &str) -> Result<PathBlock> {
    let mut bytes = Vec::new();
    BufReader::new(input).read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_BYTES {
        return Err(format_err(source_name, "truncated header"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let hurst = HurstParam::new(f64::from_le_bytes(word(0)))
        .map_err(|e| format_err(source_name, e.to_string()))?;
    let horizon = f64::from_le_bytes(word(1));
    let n_steps = u64::from_le_bytes(word(2)) as usize;
    let count = u64::from_le_bytes(word(3)) as usize;
    let grid = TimeGrid::new(horizon, n_steps).map_err(|e| format_err(source_name, e.to_string()))?;
    let row = n_steps + 1;
    let expected = count
        .checked_mul(row)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_BYTES));
    if expected != Some(bytes.len()) {
        return Err(format_err(
            source_name,
            format!("{count} paths of {row} points do not match {} bytes", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes[HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let paths = values
        .chunks_exact(row)
        .map(|c| Path::new(grid, c.to_vec()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| format_err(source_name, e.to_string()))?;
    Ok(PathBlock { hurst, grid, paths })
}

pub fn write_weights_csv<W: Write>(out: W, weights: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "weight"]).map_err(|e| csv_err("weights", e))?;
    for (id, weight) in weights.iter().enumerate() {
        w.serialize((id, weight)).map_err(|e| csv_err("weights", e))?;
    }
    w.flush()?;
    Ok(())
}

/// Weights in `path_id` order; ids must be `0, 1, 2, …`.
pub fn read_weights_csv<R: Read>(input: R, source_name: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let mut weights = Vec::new();
    for (expected, row) in r.deserialize::<(usize, f64)>().enumerate() {
        let (id, weight) = row.map_err(|e| csv_err(source_name, e))?;
        if id != expected {
            return Err(format_err(source_name, format!("expected path_id {expected}, found {id}")));
        }
        weights.push(weight);
    }
    Ok(weights)
}

pub fn save_block(path: &FsPath, block: &PathBlock) -> Result<()> {
    write_block(File::create(path)?, block)
}

pub fn load_block(path: &FsPath) -> Result<PathBlock> {
    read_block(File::open(path)?, &path.display().to_string())
}

/// `<name>.weights.csv` next to a binary block.
pub fn weights_sidecar(block: &FsPath) -> std::path::PathBuf {
    let mut name = block.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".weights.csv");
    block.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block() -> PathBlock {
        let g = TimeGrid::new(2.0, 3).unwrap();
        let paths = vec![
            Path::new(g, vec![0.0, 0.1, -0.25, 1e-300]).unwrap(),
            Path::new(g, vec![0.0, f64::MAX, -3.5, 7.0]).unwrap(),
        ];
        PathBlock::new(HurstParam::new(0.3).unwrap(), paths).unwrap()
    }

    #[test]
    fn binary_round_trip_is_lossless() {
        let b = block();
        let mut buf = Vec::new();
        write_block(&mut buf, &b).unwrap();
        assert_eq!(buf.len(), 32 + 2 * 4 * 8);
        assert_eq!(read_block(buf.as_slice(), "mem").unwrap(), b);
    }

    #[test]
    fn binary_rejects_truncation() {
        let mut buf = Vec::new();
        write_block(&mut buf, &block()).unwrap();
        buf.pop();
        assert!(matches!(read_block(buf.as_slice(), "mem"), Err(Error::Format { .. })));
        assert!(read_block(&buf[..10], "mem").is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &block().paths[..1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,t,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("0,2.0,"));
    }

    #[test]
    fn weights_round_trip() {
        let w = vec![0.5, 1.0 / 3.0, 2e-17];
        let mut buf = Vec::new();
        write_weights_csv(&mut buf, &w).unwrap();
        assert_eq!(read_weights_csv(buf.as_slice(), "mem").unwrap(), w);
        assert!(read_weights_csv("path_id,weight\n1,0.5\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn sidecar_name() {
        let p = weights_sidecar(FsPath::new("/tmp/run/ens.bin"));
        assert_eq!(p, FsPath::new("/tmp/run/ens.bin.weights.csv"));
    }
}

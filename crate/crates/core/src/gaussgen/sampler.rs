use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{build_cov_matrix, fgn_autocovariance, HurstParam, Path, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{par_map_streams, Seed};

const JITTER_RETRIES: usize = 3;
const JITTER_BASE: f64 = 1e-12;
const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dense Cholesky factor of the covariance matrix, O(n²) per path.
    Cholesky,
    /// Circulant embedding of the increment autocovariance, O(n log n) per path.
    Circulant,
    /// Independent increments when H = 1/2, otherwise circulant with a
    /// Cholesky fallback.
    Auto,
}

enum Kernel {
    White,
    Cholesky { packed: Vec<f64> },
    Circulant(Circulant),
}

struct Circulant {
    /// Per-frequency amplitudes for k = 0..=n.
    amplitude: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    size: usize,
}

/// Per-worker buffers reused across paths.
pub struct Scratch {
    normals: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
    path: Path,
}

/// A prepared exact sampler of fBM on one grid.
pub struct FbmGenerator {
    hurst: HurstParam,
    grid: TimeGrid,
    method: Method,
    kernel: Kernel,
}

impl FbmGenerator {
    pub fn new(hurst: HurstParam, grid: TimeGrid, method: Method) -> Result<Self> {
        let (method, kernel) = match method {
            Method::Cholesky => (Method::Cholesky, cholesky_kernel(hurst, &grid)?),
            Method::Circulant => (Method::Circulant, Kernel::Circulant(circulant(hurst, &grid)?)),
            Method::Auto if hurst.is_brownian() => (Method::Auto, Kernel::White),
            Method::Auto => match circulant(hurst, &grid) {
                Ok(c) => (Method::Circulant, Kernel::Circulant(c)),
                Err(Error::NegativeEigenvalue { .. }) => {
                    (Method::Cholesky, cholesky_kernel(hurst, &grid)?)
                }
                Err(e) => return Err(e),
            },
        };
        Ok(FbmGenerator {
            hurst,
            grid,
            method,
            kernel,
        })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// The method actually in use after any fallback.
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn scratch(&self) -> Scratch {
        let (spectrum, fft) = match &self.kernel {
            Kernel::Circulant(c) => (
                vec![Complex::default(); c.size],
                vec![Complex::default(); c.fft.get_inplace_scratch_len()],
            ),
            _ => (Vec::new(), Vec::new()),
        };
        Scratch {
            normals: vec![0.0; self.grid.n_steps()],
            spectrum,
            fft,
            path: Path::zeros(self.grid),
        }
    }

    /// Write one path into `out` (length `n_steps + 1`, `out[0] = 0`).
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, out: &mut [f64]) {
        let n = self.grid.n_steps();
        assert_eq!(out.len(), n + 1);
        out[0] = 0.0;
        match &self.kernel {
            Kernel::White => {
                let sd = self.grid.dt().sqrt();
                let mut acc = 0.0;
                for v in out[1..].iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    acc += sd * z;
                    *v = acc;
                }
            }
            Kernel::Cholesky { packed } => {
                let z = &mut scratch.normals;
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let mut offset = 0;
                for i in 0..n {
                    let row = &packed[offset..offset + i + 1];
                    out[i + 1] = row.iter().zip(z.iter()).map(|(l, z)| l * z).sum();
                    offset += i + 1;
                }
            }
            Kernel::Circulant(c) => {
                let m = c.size;
                let spec = &mut scratch.spectrum;
                for k in 0..=n {
                    let a = c.amplitude[k];
                    if k == 0 || k == n {
                        let z: f64 = rng.sample(StandardNormal);
                        spec[k] = Complex::new(a * z, 0.0);
                    } else {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        spec[k] = Complex::new(a * re, a * im);
                        spec[m - k] = Complex::new(a * re, -a * im);
                    }
                }
                c.fft.process_with_scratch(spec, &mut scratch.fft);
                let scale = self.grid.dt().powf(self.hurst.value());
                let mut acc = 0.0;
                for i in 0..n {
                    acc += scale * spec[i].re;
                    out[i + 1] = acc;
                }
            }
        }
    }

    pub fn sample(&self, seed: Seed) -> Path {
        let mut scratch = self.scratch();
        let mut path = Path::zeros(self.grid);
        self.fill(&mut seed.rng(), &mut scratch, &mut path.values);
        path
    }

    /// `count` paths from streams `seed.child(0..count)`.
    pub fn sample_many(&self, seed: Seed, count: usize) -> Vec<Path> {
        self.map_paths(seed, count, |p, _| p.clone())
    }

    /// Generate `count` paths in parallel and reduce each with `f`.
    ///
    /// `f` receives the path and its stream positioned after the path draws,
    /// for any auxiliary randomness tied to that path.
    pub fn map_paths<T, F>(&self, seed: Seed, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Path, &mut ChaCha8Rng) -> T + Sync + Send,
    {
        par_map_streams(
            seed,
            count,
            || self.scratch(),
            |scratch, _, rng| {
                let mut path = std::mem::replace(&mut scratch.path, Path::zeros(self.grid));
                self.fill(rng, scratch, &mut path.values);
                let out = f(&path, rng);
                scratch.path = path;
                out
            },
        )
    }
}

fn cholesky_kernel(hurst: HurstParam, grid: &TimeGrid) -> Result<Kernel> {
    let cov = build_cov_matrix(hurst, grid);
    let n = cov.nrows();
    let base = JITTER_BASE * cov.trace() / n as f64;
    for attempt in 0..=JITTER_RETRIES {
        let mut m = cov.clone();
        if attempt > 0 {
            let jitter = base * 10f64.powi(attempt as i32 - 1);
            for i in 0..n {
                m[(i, i)] += jitter;
            }
        }
        if let Some(chol) = m.cholesky() {
            let l = chol.l();
            let mut packed = Vec::with_capacity(n * (n + 1) / 2);
            for i in 0..n {
                for j in 0..=i {
                    packed.push(l[(i, j)]);
                }
            }
            return Ok(Kernel::Cholesky { packed });
        }
    }
    Err(Error::FactorizationFailure {
        attempts: JITTER_RETRIES + 1,
    })
}

fn circulant(hurst: HurstParam, grid: &TimeGrid) -> Result<Circulant> {
    let n = grid.n_steps();
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_TOLERANCE * max {
        return Err(Error::NegativeEigenvalue { min, max });
    }
    let mf = m as f64;
    let amplitude = (0..=n)
        .map(|k| {
            let lambda = eig[k].max(0.0);
            if k == 0 || k == n {
                (lambda / mf).sqrt()
            } else {
                (lambda / (2.0 * mf)).sqrt()
            }
        })
        .collect();
    Ok(Circulant {
        amplitude,
        fft,
        size: m,
    })
}

pub fn sample_fbm_cholesky(
    hurst: HurstParam,
    grid: TimeGrid,
    count: usize,
    seed: Seed,
) -> Result<Vec<Path>> {
    Ok(FbmGenerator::new(hurst, grid, Method::Cholesky)?.sample_many(seed, count))
}

/// Fails with [`Error::NegativeEigenvalue`] when the embedding is not
/// nonnegative definite; [`Method::Auto`] turns that into a Cholesky fallback.
pub fn sample_fbm_circulant(
    hurst: HurstParam,
    grid: TimeGrid,
    count: usize,
    seed: Seed,
) -> Result<Vec<Path>> {
    Ok(FbmGenerator::new(hurst, grid, Method::Circulant)?.sample_many(seed, count))
}

pub fn sample_fbm_auto(
    hurst: HurstParam,
    grid: TimeGrid,
    count: usize,
    seed: Seed,
) -> Result<Vec<Path>> {
    Ok(FbmGenerator::new(hurst, grid, Method::Auto)?.sample_many(seed, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn empty_batch() {
        let g = TimeGrid::unit(8).unwrap();
        assert!(sample_fbm_cholesky(h(0.3), g, 0, Seed::new(1)).unwrap().is_empty());
        assert!(sample_fbm_circulant(h(0.3), g, 0, Seed::new(1)).unwrap().is_empty());
    }

    #[test]
    fn paths_start_at_zero_and_are_deterministic() {
        let g = TimeGrid::new(2.0, 16).unwrap();
        for method in [Method::Cholesky, Method::Circulant, Method::Auto] {
            let gen = FbmGenerator::new(h(0.5), g, method).unwrap();
            let a = gen.sample_many(Seed::new(9), 5);
            let b = gen.sample_many(Seed::new(9), 5);
            assert_eq!(a, b);
            assert!(a.iter().all(|p| p.values[0] == 0.0 && p.values.len() == 17));
            assert_ne!(a[0], a[1]);
        }
    }

    #[test]
    fn circulant_eigenvalues_nonnegative_for_fgn() {
        for hv in [0.05, 0.3, 0.5, 0.75, 0.95] {
            for n in [1, 2, 7, 64, 1000] {
                let g = TimeGrid::unit(n).unwrap();
                assert!(circulant(h(hv), &g).is_ok(), "H={hv} n={n}");
            }
        }
    }

    #[test]
    fn single_step_has_exact_variance_structure() {
        // With one step the circulant amplitude must reproduce Var B(T) = T^{2H}.
        let g = TimeGrid::new(3.0, 1).unwrap();
        let c = circulant(h(0.7), &g).unwrap();
        let var: f64 = c.amplitude[0].powi(2) + c.amplitude[1].powi(2);
        assert!((var - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_factor_reproduces_covariance() {
        let g = TimeGrid::unit(20).unwrap();
        let hurst = h(0.9);
        let Kernel::Cholesky { packed } = cholesky_kernel(hurst, &g).unwrap() else {
            panic!("expected cholesky kernel");
        };
        let cov = build_cov_matrix(hurst, &g);
        let row = |i: usize| &packed[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
        for i in 0..20 {
            for j in 0..=i {
                let s: f64 = row(i).iter().zip(row(j)).map(|(a, b)| a * b).sum();
                assert!((s - cov[(i, j)]).abs() < 1e-12);
            }
        }
    }
}

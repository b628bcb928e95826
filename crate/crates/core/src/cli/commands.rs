use std::fs::File;
use std::io::BufWriter;
use std::path::Path as FsPath;

use serde::Serialize;

use super::config::{Experiment, ExperimentConfig as Cfg};
use super::manifest::{StreamRange, SCHEMA_VERSION};
use super::{EXIT_ACCEPTANCE, EXIT_OK};
use crate::acceptance::{run_suite, Profile};
use crate::error::{Error, Result};
use crate::gaussgen::{FbmGenerator, TimeGrid};
use crate::io::{load_block, read_weights_csv, save_block, weights_sidecar, write_paths_csv, write_weights_csv, PathBlock};
use crate::limitlaw::{asymmetry, sample_limit_law_with, NormalizerEstimate};
use crate::estimate::EstimateWithError;
use crate::penalize::{rate_study, RateStudy};
use crate::rng::{Seed, STAGE_STRIDE};
use crate::sde::{drift_table, euler_endpoints, euler_simulate, DriftKind, DriftSpec};
use crate::stats::{two_sample_test, WeightedSample};

pub const SCHEMA: &str = "\
sample-fbm   paths.csv            path_id,t,value
             paths.bin            binary block: LE f64 H, f64 T, u64 n_steps, u64 count, then count*(n_steps+1) f64 row-major
penalized    penalized.csv        T,estimator,value,stderr,ess   (estimator: I | x1_mean | prefactor)
             summary.json         hurst, rows, fit, persistence_fit
persistence  persistence.csv      T,n_steps,probability,stderr
             summary.json         hurst, rows, fit, persistence_fit
limit        limit.csv            statistic,value,stderr
             limit.bin            binary block of the ensemble (with --dump)
             limit.bin.weights.csv  path_id,weight (with --dump)
sde          sde_paths.csv        path_id,t,value
             sde_endpoints.csv    path_id,x1,min (with --endpoints)
drift-table  drift_table.csv      t,x,drift
compare      compare.json         stat, time, statistic, threshold, n_boot, ci_low, ci_high, pass
accept       report.json          profile, seed, pass, criteria[id, title, pass, checks, metrics]
every run    manifest.json        config, library_version, threads, wall_time_seconds, streams, outputs[file, bytes, sha256]
";

pub struct RunOutput {
    pub files: Vec<String>,
    pub streams: Vec<StreamRange>,
    pub code: i32,
}

pub fn run(cfg: &Cfg, dir: &FsPath) -> Result<RunOutput> {
    std::fs::create_dir_all(dir)?;
    let seed = Seed::new(Cfg::require("seed", &cfg.seed)?);
    match Cfg::require("experiment", &cfg.experiment)? {
        Experiment::SampleFbm => sample_fbm(cfg, dir, seed),
        Experiment::Penalized => penalized(cfg, dir, seed),
        Experiment::Persistence => persistence(cfg, dir, seed),
        Experiment::Limit => limit(cfg, dir, seed),
        Experiment::Sde => sde(cfg, dir, seed),
        Experiment::DriftTable => drift(cfg, dir),
        Experiment::Compare => compare(cfg, dir, seed),
        Experiment::Accept => accept(cfg, dir, seed),
    }
}

fn csv_writer(dir: &FsPath, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

fn csv_row<S: Serialize>(w: &mut csv::Writer<BufWriter<File>>, row: S) -> Result<()> {
    w.serialize(row).map_err(|e| Error::Format {
        source_name: "csv output".into(),
        reason: e.to_string(),
    })
}

fn write_json<S: Serialize>(dir: &FsPath, name: &str, value: &S) -> Result<()> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn sample_fbm(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let hurst = cfg.hurst_param()?;
    let grid = TimeGrid::new(
        Cfg::positive("horizon", &cfg.horizon)?,
        Cfg::at_least("steps", &cfg.steps, 1)?,
    )?;
    let count = Cfg::at_least("count", &cfg.count, 1)?;
    let gen = FbmGenerator::new(hurst, grid, Cfg::require("method", &cfg.method)?)?;
    let paths = gen.sample_many(seed, count);
    write_paths_csv(BufWriter::new(File::create(dir.join("paths.csv"))?), &paths)?;
    save_block(&dir.join("paths.bin"), &PathBlock::new(hurst, paths)?)?;
    println!("{count} paths, H={}, method {:?}", hurst.value(), gen.method());
    Ok(RunOutput {
        files: vec!["paths.csv".into(), "paths.bin".into()],
        streams: vec![StreamRange::new("paths", seed, count)],
        code: EXIT_OK,
    })
}

fn study(cfg: &Cfg, seed: Seed) -> Result<(RateStudy, Vec<StreamRange>)> {
    let hurst = cfg.hurst_param()?;
    let horizons = Cfg::require("horizons", &cfg.horizons)?;
    if horizons.len() < 3 {
        return Err(Error::config("horizons", "a rate fit needs at least three horizons"));
    }
    if let Some(t) = horizons.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::config("horizons", format!("horizon {t} is not positive")));
    }
    let spu = Cfg::at_least("steps_per_unit", &cfg.steps_per_unit, 1)?;
    let count = Cfg::at_least("count", &cfg.count, 2)?;
    let study = rate_study(hurst, &horizons, spu, count, seed)?;
    let streams = horizons
        .iter()
        .enumerate()
        .map(|(k, t)| StreamRange::new(format!("horizon {t}"), seed.stage(k as u64), count))
        .collect();
    Ok((study, streams))
}

#[derive(Serialize)]
struct StudySummary<'a> {
    schema_version: u32,
    #[serde(flatten)]
    study: &'a RateStudy,
}

fn penalized(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let (study, streams) = study(cfg, seed)?;
    let mut w = csv_writer(dir, "penalized.csv")?;
    csv_row(&mut w, ("T", "estimator", "value", "stderr", "ess"))?;
    for r in &study.rows {
        let scale = r.prefactor / r.i_hat.value;
        csv_row(&mut w, (r.horizon, "I", r.i_hat.value, r.i_hat.stderr, r.ess))?;
        csv_row(&mut w, (r.horizon, "x1_mean", r.x1_mean.value, r.x1_mean.stderr, r.ess))?;
        csv_row(&mut w, (r.horizon, "prefactor", r.prefactor, r.i_hat.stderr * scale, r.ess))?;
    }
    w.flush()?;
    write_json(dir, "summary.json", &StudySummary { schema_version: SCHEMA_VERSION, study: &study })?;
    println!("slope of log I(T): {:.4} ± {:.4}", study.fit.slope, study.fit.slope_stderr);
    Ok(RunOutput {
        files: vec!["penalized.csv".into(), "summary.json".into()],
        streams,
        code: EXIT_OK,
    })
}

fn persistence(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let (study, streams) = study(cfg, seed)?;
    let mut w = csv_writer(dir, "persistence.csv")?;
    csv_row(&mut w, ("T", "n_steps", "probability", "stderr"))?;
    for r in &study.rows {
        csv_row(&mut w, (r.horizon, r.n_steps, r.persistence.value, r.persistence.stderr))?;
    }
    w.flush()?;
    write_json(dir, "summary.json", &StudySummary { schema_version: SCHEMA_VERSION, study: &study })?;
    match &study.persistence_fit {
        Some(fit) => println!("slope of log P(T): {:.4} ± {:.4}", fit.slope, fit.slope_stderr),
        None => println!("no survivors at some horizon; persistence slope not fitted"),
    }
    println!("slope of log I(T): {:.4} ± {:.4}", study.fit.slope, study.fit.slope_stderr);
    Ok(RunOutput {
        files: vec!["persistence.csv".into(), "summary.json".into()],
        streams,
        code: EXIT_OK,
    })
}

fn limit(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let hurst = cfg.hurst_param()?;
    let steps = Cfg::at_least("steps", &cfg.steps, 1)?;
    let count = Cfg::at_least("count", &cfg.count, 2)?;
    let boot = Cfg::at_least("boot", &cfg.boot, 1)?;
    let floor = Cfg::require("ess_floor", &cfg.ess_floor)?;
    let dump = cfg.dump.unwrap_or(false);
    let ens = sample_limit_law_with(hurst, steps, count, seed, floor, |p| {
        (p.last(), p.min(), p.max(), dump.then(|| p.clone()))
    })?;
    let col = |f: fn(&(f64, f64, f64, Option<crate::gaussgen::Path>)) -> f64| -> Vec<f64> {
        ens.paths.iter().map(f).collect()
    };
    let neg_min = col(|r| -r.1);
    let max = col(|r| r.2);
    let gap = col(|r| r.0 - r.1);
    let diff = EstimateWithError::from_samples(&neg_min.iter().zip(&max).map(|(a, b)| a - b).collect::<Vec<_>>());
    let norm = NormalizerEstimate {
        neg_min: EstimateWithError::from_samples(&neg_min),
        max: EstimateWithError::from_samples(&max),
        endpoint_gap: EstimateWithError::from_samples(&gap),
        joint_stderr: diff.stderr,
        symmetric: diff.value.abs() <= 3.0 * diff.stderr,
    };
    let x1 = ens.marginal(|r| r.0)?;
    let boot_seed = seed.stage(1);
    let asym = asymmetry(&x1, boot, 0.99, boot_seed)?;

    let mut w = csv_writer(dir, "limit.csv")?;
    csv_row(&mut w, ("statistic", "value", "stderr"))?;
    let rows: [(&str, f64, Option<f64>); 8] = [
        ("e_neg_min", norm.neg_min.value, Some(norm.neg_min.stderr)),
        ("e_max", norm.max.value, Some(norm.max.stderr)),
        ("e_endpoint_gap", norm.endpoint_gap.value, Some(norm.endpoint_gap.stderr)),
        ("p_positive", asym.p_positive, None),
        ("p_negative", asym.p_negative, None),
        ("asymmetry", asym.difference, Some(asym.boot_stderr)),
        ("asymmetry_lower_99", asym.lower_bound, None),
        ("ess", ens.ess, None),
    ];
    for row in rows {
        csv_row(&mut w, row)?;
    }
    w.flush()?;
    let mut files = vec!["limit.csv".to_string()];
    if dump {
        let paths: Vec<_> = ens.paths.into_iter().filter_map(|r| r.3).collect();
        let bin = dir.join("limit.bin");
        save_block(&bin, &PathBlock::new(hurst, paths)?)?;
        write_weights_csv(BufWriter::new(File::create(weights_sidecar(&bin))?), &ens.weights)?;
        files.push("limit.bin".into());
        files.push("limit.bin.weights.csv".into());
    }
    println!(
        "E[-M(1)] = {:.5} ± {:.5}; P(X>0) - P(X<0) = {:.4} (99% lower bound {:.4})",
        norm.neg_min.value, norm.neg_min.stderr, asym.difference, asym.lower_bound
    );
    Ok(RunOutput {
        files,
        streams: vec![
            StreamRange::new("paths", seed, count),
            StreamRange::new("bootstrap", boot_seed, boot),
        ],
        code: EXIT_OK,
    })
}

fn sde(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let kind = Cfg::require("kind", &cfg.kind)?;
    let n_steps = cfg.euler_steps()?;
    let count = Cfg::at_least("count", &cfg.count, 1)?;
    let zero_noise = cfg.zero_noise.unwrap_or(false);
    let spec = DriftSpec::with_default_start(kind, n_steps);
    let file;
    let rejections: u64;
    if cfg.endpoints.unwrap_or(false) {
        let ends = euler_endpoints(spec, n_steps, count, seed, zero_noise)?;
        file = "sde_endpoints.csv";
        let mut w = csv_writer(dir, file)?;
        csv_row(&mut w, ("path_id", "x1", "min"))?;
        for (id, e) in ends.iter().enumerate() {
            csv_row(&mut w, (id, e.x1, e.min))?;
        }
        w.flush()?;
        rejections = ends.iter().map(|e| e.rejections as u64).sum();
    } else {
        let out = euler_simulate(spec, n_steps, count, seed, zero_noise)?;
        file = "sde_paths.csv";
        write_paths_csv(BufWriter::new(File::create(dir.join(file))?), &out.paths)?;
        rejections = out.step_rejections;
    }
    println!("{count} {kind:?} trajectories, {n_steps} steps, {rejections} redrawn increments");
    Ok(RunOutput {
        files: vec![file.into()],
        streams: vec![StreamRange::new("trajectories", seed, count)],
        code: EXIT_OK,
    })
}

fn drift(cfg: &Cfg, dir: &FsPath) -> Result<RunOutput> {
    let kind = Cfg::require("kind", &cfg.kind)?;
    let ts = Cfg::require("t_grid", &cfg.t_grid)?;
    let xs = Cfg::require("x_grid", &cfg.x_grid)?;
    if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::config("t_grid", format!("{t} outside [0, 1]")));
    }
    let valid = |x: f64| match kind {
        DriftKind::Penalized => x >= 0.0,
        DriftKind::Meander | DriftKind::Bessel => x > 0.0,
    };
    if let Some(x) = xs.iter().find(|x| !(x.is_finite() && valid(**x))) {
        return Err(Error::config("x_grid", format!("{x} outside the domain of the {kind:?} drift")));
    }
    let mut w = csv_writer(dir, "drift_table.csv")?;
    csv_row(&mut w, ("t", "x", "drift"))?;
    for row in drift_table(kind, &ts, &xs) {
        csv_row(&mut w, row)?;
    }
    w.flush()?;
    Ok(RunOutput {
        files: vec!["drift_table.csv".into()],
        streams: Vec::new(),
        code: EXIT_OK,
    })
}

fn load_marginal(path: &FsPath, field: &str, time: f64) -> Result<WeightedSample> {
    let block = load_block(path).map_err(|e| match e {
        Error::Io(io) => Error::config(field, format!("{}: {io}", path.display())),
        other => other,
    })?;
    let values: Vec<f64> = block.paths.iter().map(|p| p.at_fraction(time)).collect();
    let sidecar = weights_sidecar(path);
    if sidecar.exists() {
        let weights = read_weights_csv(File::open(&sidecar)?, &sidecar.display().to_string())?;
        if weights.len() != values.len() {
            return Err(Error::config(field, "weights sidecar and block differ in length"));
        }
        WeightedSample::new(values, weights)
    } else {
        WeightedSample::uniform(values)
    }
}

#[derive(Serialize)]
struct CompareSummary {
    schema_version: u32,
    stat: crate::stats::TwoSampleStat,
    time: f64,
    #[serde(flatten)]
    report: crate::stats::TestReport,
}

fn compare(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let time = Cfg::require("time", &cfg.time)?;
    if !(0.0..=1.0).contains(&time) {
        return Err(Error::config("time", format!("{time} outside [0, 1]")));
    }
    let a = load_marginal(&Cfg::require("a", &cfg.a)?, "a", time)?;
    let b = load_marginal(&Cfg::require("b", &cfg.b)?, "b", time)?;
    let stat = Cfg::require("stat", &cfg.stat)?;
    let boot = Cfg::at_least("boot", &cfg.boot, 1)?;
    let threshold = Cfg::require("threshold", &cfg.threshold)?;
    let report = two_sample_test(&a, &b, stat, threshold, boot, seed)?;
    write_json(dir, "compare.json", &CompareSummary { schema_version: SCHEMA_VERSION, stat, time, report })?;
    println!(
        "{stat:?} = {:.5} (95% CI {:.5}..{:.5}), threshold {threshold}: {}",
        report.statistic,
        report.ci_low,
        report.ci_high,
        if report.pass { "pass" } else { "fail" }
    );
    Ok(RunOutput {
        files: vec!["compare.json".into()],
        streams: vec![StreamRange::new("bootstrap", seed, boot)],
        code: EXIT_OK,
    })
}

fn accept(cfg: &Cfg, dir: &FsPath, seed: Seed) -> Result<RunOutput> {
    let profile: Profile = Cfg::require("profile", &cfg.profile)?;
    let report = run_suite(profile, seed, |r| println!("{}", r.summary_line()))?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    println!("acceptance {}", if report.pass { "PASS" } else { "FAIL" });
    let streams = crate::acceptance::CRITERIA
        .iter()
        .map(|&id| {
            let first = seed.stage(16 * id as u64);
            StreamRange {
                stage: format!("criterion {id}"),
                master: first.master,
                first_stream: first.stream,
                count: 16 * STAGE_STRIDE,
            }
        })
        .collect();
    Ok(RunOutput {
        files: vec!["report.json".into()],
        streams,
        code: if report.pass { EXIT_OK } else { EXIT_ACCEPTANCE },
    })
}

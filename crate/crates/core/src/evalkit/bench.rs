use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{compute_metrics, BenchmarkReport, SampleResult};
use super::noise::{stream_rng, NoiseModel};
use super::report::emit_report;
use super::sample::{make_sample_with, DegradationSpec, PatchSpec, COVERAGE_MARGIN_M};
use crate::correlation::FEATURE_STRIDE;
use crate::error::{Error, Result};
use crate::osm_map::{rasterize, GridSpec, VectorMap, ROAD};
use crate::par::{map_collect, with_workers, Execution};
use crate::pose::Pose3DoF;
use crate::refiner::{localize_from_prior, RefinerConfig, Timing};

pub const PROTOCOL: &str = "synthetic: poses drawn uniformly on road pixels with uniform heading; BEV and map crops of one vector map";

/// Everything that determines a benchmark run's data outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub bev: PatchSpec,
    pub map: PatchSpec,
    pub refiner: RefinerConfig,
    pub noise: NoiseModel,
    pub degradation: DegradationSpec,
    pub samples: usize,
    pub seed: u64,
    /// 0 means one worker per available core.
    pub workers: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            bev: PatchSpec::BEV,
            map: PatchSpec::MAP,
            refiner: RefinerConfig::default(),
            noise: NoiseModel::default(),
            degradation: DegradationSpec::default(),
            samples: 500,
            seed: 0,
            workers: 0,
        }
    }
}

impl BenchmarkConfig {
    /// Checks every section, including that both crops give the same
    /// feature grid.
    pub fn validate(&self) -> Result<()> {
        self.refiner.validate()?;
        self.noise.validate()?;
        self.degradation.validate()?;
        let bev = self.bev.grid(Pose3DoF::default())?;
        let map = self.map.grid(Pose3DoF::default())?;
        let feat = |g: &GridSpec| (g.width_px / FEATURE_STRIDE, g.height_px / FEATURE_STRIDE);
        if bev.width_px % FEATURE_STRIDE != 0 || map.width_px % FEATURE_STRIDE != 0 || feat(&bev) != feat(&map) {
            return Err(Error::BadShape(format!(
                "BEV {}x{} px and map {}x{} px must give equal feature grids at stride {FEATURE_STRIDE}",
                bev.width_px, bev.height_px, map.width_px, map.height_px
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be > 0".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding, ignoring `workers`.
    pub fn hash(&self) -> String {
        let canonical = BenchmarkConfig { workers: 0, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex_digest(&bytes)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Draws `n` ground-truth poses on road pixels that satisfy the coverage
/// margin, each with a uniform heading.
pub fn sample_road_poses(vm: &VectorMap, n: usize, seed: u64) -> Result<Vec<Pose3DoF>> {
    let b = vm.bounds().ok_or(Error::OutOfCoverage {
        x: 0.0,
        y: 0.0,
        margin_m: COVERAGE_MARGIN_M,
    })?;
    let (lo_x, lo_y) = (b[0] + COVERAGE_MARGIN_M, b[1] + COVERAGE_MARGIN_M);
    let (hi_x, hi_y) = (b[2] - COVERAGE_MARGIN_M, b[3] - COVERAGE_MARGIN_M);
    if !(hi_x > lo_x && hi_y > lo_y) {
        return Err(Error::OutOfCoverage {
            x: 0.5 * (b[0] + b[2]),
            y: 0.5 * (b[1] + b[3]),
            margin_m: COVERAGE_MARGIN_M,
        });
    }
    let res = 1.0;
    let w = ((hi_x - lo_x) / res).floor() as usize + 1;
    let h = ((hi_y - lo_y) / res).floor() as usize + 1;
    let center = Pose3DoF::new(0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y), 0.0);
    let spec = GridSpec::new(w, h, res, center)?;
    let grid = rasterize(vm, spec);
    let mut cells = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if grid.get(ROAD, r, c) > 0.5 {
                let p = spec.pixel_to_world([c as f64, r as f64]);
                if (lo_x..=hi_x).contains(&p[0]) && (lo_y..=hi_y).contains(&p[1]) {
                    cells.push(p);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no road pixels inside the covered area".into()));
    }
    let mut rng = stream_rng(seed, u64::MAX);
    Ok((0..n)
        .map(|_| {
            let p = cells[rng.random_range(0..cells.len())];
            let jitter = [rng.random_range(-0.5..0.5) * res, rng.random_range(-0.5..0.5) * res];
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            // Jitter stays inside the covered area.
            let x = (p[0] + jitter[0]).clamp(lo_x, hi_x);
            let y = (p[1] + jitter[1]).clamp(lo_y, hi_y);
            Pose3DoF::new(x, y, theta)
        })
        .collect())
}

/// Per-sample outcome kept in memory; timings never reach the JSONL.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub result: std::result::Result<SampleResult, String>,
    pub timing: Option<Timing>,
    pub volume_builds: u64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub outcomes: Vec<SampleOutcome>,
}

impl BenchmarkRun {
    pub fn results(&self) -> impl Iterator<Item = &SampleResult> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok())
    }
}

fn run_one(vm: &VectorMap, cfg: &BenchmarkConfig, id: u64, gt: &Pose3DoF) -> Result<(SampleResult, Timing, u64)> {
    let mut rng = stream_rng(cfg.seed, id);
    let nm = NoiseModel { seed: cfg.seed, ..cfg.noise };
    let s = make_sample_with(vm, gt, &nm, &cfg.degradation, cfg.bev, cfg.map, &mut rng)?;
    let res = localize_from_prior(&s.bev, &s.map_patch, &s.prior, &cfg.refiner)?;
    Ok((SampleResult::new(id, &res, s.gt, s.prior), res.timing, res.volume_builds))
}

/// Localizes every sample. Samples are independent and seeded per index, so
/// the outcomes do not depend on the worker count or execution mode.
pub fn run_samples(vm: &VectorMap, cfg: &BenchmarkConfig, exec: Execution) -> Result<Vec<SampleOutcome>> {
    cfg.validate()?;
    let poses = sample_road_poses(vm, cfg.samples, cfg.seed)?;
    let indexed: Vec<(u64, Pose3DoF)> = poses.into_iter().enumerate().map(|(i, p)| (i as u64, p)).collect();
    Ok(with_workers(cfg.workers, || {
        map_collect(&indexed, exec, |(id, gt)| match run_one(vm, cfg, *id, gt) {
            Ok((r, t, b)) => SampleOutcome {
                result: Ok(r),
                timing: Some(t),
                volume_builds: b,
            },
            Err(e) => {
                log::warn!("sample {id} failed: {e}");
                SampleOutcome {
                    result: Err(e.to_string()),
                    timing: None,
                    volume_builds: 0,
                }
            }
        })
    }))
}

/// Aggregates outcomes into a report stamped with the config hash.
pub fn summarize(cfg: &BenchmarkConfig, outcomes: &[SampleOutcome]) -> Result<BenchmarkReport> {
    let ok: Vec<SampleResult> = outcomes.iter().filter_map(|o| o.result.clone().ok()).collect();
    let mut report = compute_metrics(&ok)?;
    report.failed_samples = (outcomes.len() - ok.len()) as u64;
    report.config_hash = cfg.hash();
    report.protocol = PROTOCOL.to_string();
    Ok(report)
}

/// Runs the whole benchmark in memory.
pub fn run_benchmark_in_memory(vm: &VectorMap, cfg: &BenchmarkConfig, exec: Execution) -> Result<BenchmarkRun> {
    let outcomes = run_samples(vm, cfg, exec)?;
    let report = summarize(cfg, &outcomes)?;
    Ok(BenchmarkRun { report, outcomes })
}

#[derive(Serialize)]
struct FailedLine<'a> {
    sample_id: u64,
    error: &'a str,
}

/// Writes one JSON object per sample, in sample order.
pub fn write_results_jsonl(path: &Path, outcomes: &[SampleOutcome]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (id, o) in outcomes.iter().enumerate() {
        match &o.result {
            Ok(r) => serde_json::to_writer(&mut out, r)?,
            Err(e) => serde_json::to_writer(
                &mut out,
                &FailedLine {
                    sample_id: id as u64,
                    error: e,
                },
            )?,
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Paths written by [`run_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchmarkFiles {
    pub results: PathBuf,
    pub report_json: PathBuf,
    pub report_svg: PathBuf,
}

/// Runs the benchmark and writes `results.jsonl`, `report.json` and
/// `report.svg` into `out_dir`.
pub fn run_benchmark(vm: &VectorMap, cfg: &BenchmarkConfig, out_dir: &Path) -> Result<(BenchmarkRun, BenchmarkFiles)> {
    fs::create_dir_all(out_dir)?;
    let outcomes = run_samples(vm, cfg, Execution::Parallel)?;
    let results = out_dir.join("results.jsonl");
    // Per-sample lines go out first so failures still leave a record.
    write_results_jsonl(&results, &outcomes)?;
    let report = summarize(cfg, &outcomes)?;
    let (report_json, report_svg) = emit_report(&report, out_dir)?;
    let run = BenchmarkRun { report, outcomes };
    Ok((
        run,
        BenchmarkFiles {
            results,
            report_json,
            report_svg,
        },
    ))
}

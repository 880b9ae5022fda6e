use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use bevloc::evalkit::{compute_metrics, emit_report, hex_digest, run_benchmark, BenchmarkConfig, BenchmarkReport, SampleResult};
use bevloc::geodesy::EnuFrame;
use bevloc::homography::homography_from_pose;
use bevloc::osm_map::hgrd::{read_grid, write_grid, MAGIC};
use bevloc::osm_map::{crop_patch, parse_osm_xml, rasterize, BUILDING, ROAD};
use bevloc::refiner::localize;
use bevloc::{GridSpec, Pose3DoF, RasterGrid, VectorMap};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{Cli, Command, GridArgs, PriorArgs};

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let ctx = Ctx {
        cfg,
        config_path: cli.config,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Ingest { osm, frame, out } => ingest(&ctx, &osm, &frame, &out),
        Command::Rasterize {
            map,
            center_x,
            center_y,
            center_theta,
            grid,
            out,
        } => rasterize_cmd(&ctx, &map, Pose3DoF::new(center_x, center_y, center_theta), &grid, &out),
        Command::Localize {
            map,
            bev,
            prior,
            grid,
            out,
        } => localize_cmd(&ctx, &map, &bev, &prior, &grid, out.as_deref()),
        Command::Benchmark {
            map,
            frame,
            seed,
            workers,
            samples,
            out,
        } => {
            let mut cfg = ctx.cfg.clone();
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.workers = workers.unwrap_or(cfg.workers);
            cfg.samples = samples.unwrap_or(cfg.samples);
            cfg.validate().map_err(CliError::input("config"))?;
            benchmark(&ctx, &cfg, &map, frame.as_deref(), &out)
        }
        Command::Report { input, out } => report(&ctx, &input, &out),
    }
}

struct Ctx {
    cfg: BenchmarkConfig,
    config_path: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn manifest(&self, command: &str, cfg: &BenchmarkConfig, seed: Option<u64>) -> CliResult<RunManifest> {
        let mut m = RunManifest::new(command, cfg.hash(), seed);
        if let Some(p) = &self.config_path {
            m.add_input(p)?;
        }
        Ok(m)
    }
}

fn io_input(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::input(format!("reading {}", path.display()))(e.into())
}

fn io_output(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::runtime(format!("writing {}", path.display()))(e.into())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(io_input(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("parsing {}", path.display()))(e.into()))
}

fn load_config(path: Option<&Path>) -> CliResult<BenchmarkConfig> {
    let cfg: BenchmarkConfig = match path {
        Some(p) => read_json(p)?,
        None => BenchmarkConfig::default(),
    };
    cfg.validate().map_err(CliError::input("config"))?;
    Ok(cfg)
}

fn print_json(value: &impl Serialize) -> CliResult<()> {
    let s = serde_json::to_string(value).map_err(|e| CliError::runtime("serializing output")(e.into()))?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{s}").and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::runtime("writing stdout")(e.into())),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| CliError::runtime("serializing output")(e.into()))?;
    body.push(b'\n');
    fs::write(path, body).map_err(io_output(path))
}

/// `out.hgrd` -> `out.manifest.json`
fn manifest_path_for(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_output(dir)),
        _ => Ok(()),
    }
}

fn ingest(ctx: &Ctx, osm: &Path, frame_path: &Path, out: &Path) -> CliResult<()> {
    let frame: EnuFrame = read_json(frame_path)?;
    let bytes = fs::read(osm).map_err(io_input(osm))?;
    let vm = parse_osm_xml(&bytes, &frame).map_err(CliError::classify(format!("parsing {}", osm.display())))?;

    let frame_hash = hex_digest(&serde_json::to_vec(&frame).unwrap_or_default());
    let mut m = RunManifest::new("ingest", frame_hash, None);
    m.add_input(osm)?;
    m.add_input(frame_path)?;
    if let Some(p) = &ctx.config_path {
        m.add_input(p)?;
    }
    ensure_parent(out)?;
    m.write(&manifest_path_for(out))?;
    write_json(out, &vm)?;

    print_json(&json!({
        "roads": vm.roads.len(),
        "buildings": vm.buildings.len(),
        "road_vertices": vm.roads.iter().map(|r| r.points.len()).sum::<usize>(),
        "building_vertices": vm.buildings.iter().map(|b| b.ring.len()).sum::<usize>(),
    }))
}

fn grid_spec(ctx: &Ctx, grid: &GridArgs, center: Pose3DoF) -> CliResult<GridSpec> {
    let size = grid.size_m.unwrap_or(ctx.cfg.map.size_m);
    let res = grid.resolution_mpp.unwrap_or(ctx.cfg.map.resolution_mpp);
    GridSpec::square(size, res, center).map_err(CliError::classify("grid spec"))
}

fn rasterize_cmd(ctx: &Ctx, map: &Path, center: Pose3DoF, grid: &GridArgs, out: &Path) -> CliResult<()> {
    let spec = grid_spec(ctx, grid, center)?;
    let vm: VectorMap = read_json(map)?;
    let raster = rasterize(&vm, spec);

    let mut m = ctx.manifest("rasterize", &ctx.cfg, None)?;
    m.add_input(map)?;
    ensure_parent(out)?;
    m.write(&manifest_path_for(out))?;
    write_grid(out, &raster, &vm.frame).map_err(CliError::runtime(format!("writing {}", out.display())))?;

    print_json(&json!({
        "path": out.display().to_string(),
        "width": raster.width(),
        "height": raster.height(),
        "resolution_mpp": spec.resolution_mpp,
        "road_pixels": raster.count_nonzero(ROAD),
        "building_pixels": raster.count_nonzero(BUILDING),
    }))
}

fn is_hgrd(path: &Path) -> CliResult<bool> {
    let mut head = [0u8; 4];
    let mut f = fs::File::open(path).map_err(io_input(path))?;
    Ok(f.read_exact(&mut head).is_ok() && &head == MAGIC)
}

fn read_raster(path: &Path) -> CliResult<RasterGrid> {
    read_grid(path)
        .map(|(g, _)| g)
        .map_err(CliError::input(format!("reading {}", path.display())))
}

fn localize_cmd(ctx: &Ctx, map: &Path, bev_path: &Path, prior: &PriorArgs, grid: &GridArgs, out: Option<&Path>) -> CliResult<()> {
    let (map_patch, prior) = if is_hgrd(map)? {
        let patch = read_raster(map)?;
        let c = patch.spec.center;
        let p = Pose3DoF::new(
            prior.prior_x.unwrap_or(c.x_m),
            prior.prior_y.unwrap_or(c.y_m),
            prior.prior_theta.unwrap_or(c.theta_rad),
        );
        (patch, p)
    } else {
        let (Some(x), Some(y)) = (prior.prior_x, prior.prior_y) else {
            return Err(CliError::Usage(
                "--prior-x and --prior-y are required when the map is a vector map".into(),
            ));
        };
        let p = Pose3DoF::new(x, y, prior.prior_theta.unwrap_or(0.0));
        let vm: VectorMap = read_json(map)?;
        let spec = grid_spec(ctx, grid, p)?;
        let patch = crop_patch(&vm, p, spec.width_px as f64 * spec.resolution_mpp, spec.resolution_mpp)
            .map_err(CliError::classify("cropping map patch"))?;
        (patch, p)
    };
    let mut bev = read_raster(bev_path)?;
    bev.spec = bev.spec.with_center(Pose3DoF::default());

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_output(dir))?;
        let mut m = ctx.manifest("localize", &ctx.cfg, None)?;
        m.add_input(map)?;
        m.add_input(bev_path)?;
        m.write(&dir.join("manifest.json"))?;
    }
    let h0 = homography_from_pose(&prior, &bev.spec, &map_patch.spec);
    let result = localize(&bev, &map_patch, &h0, &ctx.cfg.refiner).map_err(CliError::classify("localize"))?;
    print_json(&result)
}

fn load_vector_map(map: &Path, frame: Option<&Path>) -> CliResult<VectorMap> {
    match frame {
        Some(f) => {
            let frame: EnuFrame = read_json(f)?;
            let bytes = fs::read(map).map_err(io_input(map))?;
            parse_osm_xml(&bytes, &frame).map_err(CliError::classify(format!("parsing {}", map.display())))
        }
        None => {
            let bytes = fs::read(map).map_err(io_input(map))?;
            if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'<') {
                return Err(CliError::Usage(format!(
                    "{} looks like OSM XML; pass --frame or ingest it first",
                    map.display()
                )));
            }
            serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("parsing {}", map.display()))(e.into()))
        }
    }
}

fn benchmark(ctx: &Ctx, cfg: &BenchmarkConfig, map: &Path, frame: Option<&Path>, out: &Path) -> CliResult<()> {
    let vm = load_vector_map(map, frame)?;
    fs::create_dir_all(out).map_err(io_output(out))?;
    let mut m = ctx.manifest("benchmark", cfg, Some(cfg.seed))?;
    m.add_input(map)?;
    if let Some(f) = frame {
        m.add_input(f)?;
    }
    m.write(&out.join("manifest.json"))?;

    let (run, _) = run_benchmark(&vm, cfg, out).map_err(CliError::classify("benchmark"))?;
    if !ctx.quiet {
        eprint!("{}", summary_table(&run.report));
    }
    print_json(&run.report)
}

fn read_results_jsonl(path: &Path) -> CliResult<(Vec<SampleResult>, u64)> {
    let text = fs::read_to_string(path).map_err(io_input(path))?;
    let mut ok = Vec::new();
    let mut failed = 0;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::input(format!("{} line {}", path.display(), n + 1))(e.into()))?;
        if value.get("error").is_some() {
            failed += 1;
            continue;
        }
        ok.push(
            serde_json::from_value(value)
                .map_err(|e| CliError::input(format!("{} line {}", path.display(), n + 1))(e.into()))?,
        );
    }
    Ok((ok, failed))
}

fn report(ctx: &Ctx, input: &Path, out: &Path) -> CliResult<()> {
    let report = if input.extension().is_some_and(|e| e == "jsonl") {
        let (results, failed) = read_results_jsonl(input)?;
        let mut r = compute_metrics(&results).map_err(CliError::input(format!("aggregating {}", input.display())))?;
        r.failed_samples = failed;
        r
    } else {
        read_json::<BenchmarkReport>(input)?
    };
    fs::create_dir_all(out).map_err(io_output(out))?;
    let mut m = ctx.manifest("report", &ctx.cfg, None)?;
    m.add_input(input)?;
    m.write(&out.join("manifest.json"))?;
    emit_report(&report, out).map_err(CliError::runtime(format!("writing report to {}", out.display())))?;
    if !ctx.quiet {
        eprint!("{}", summary_table(&report));
    }
    print_json(&report)
}

/// Recall percentages at 1/2/5/10 m and degrees, then APE and AOE means.
pub fn summary_table(r: &BenchmarkReport) -> String {
    let mut head = String::new();
    let mut row = String::new();
    for t in [1.0, 2.0, 5.0, 10.0] {
        head.push_str(&format!("{:>8}", format!("R@{t}m")));
        row.push_str(&format!("{:>8.2}", 100.0 * r.recall_at_m(t).unwrap_or(f64::NAN)));
    }
    for t in [1.0, 2.0, 5.0, 10.0] {
        head.push_str(&format!("{:>8}", format!("R@{t}°")));
        row.push_str(&format!("{:>8.2}", 100.0 * r.recall_at_deg(t).unwrap_or(f64::NAN)));
    }
    head.push_str(&format!("{:>9}{:>9}", "APE(m)", "AOE(°)"));
    row.push_str(&format!("{:>9.3}{:>9.3}", r.ape_mean_m, r.aoe_mean_deg));
    format!(
        "{head}\n{row}\nsamples: {}  failed: {}  median APE {:.3} m\n",
        r.samples, r.failed_samples, r.ape_median_m
    )
}

use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bevloc::correlation::{build_volume_with, FeatureGrid};
use bevloc::evalkit::{run_benchmark_in_memory, BenchmarkConfig};
use bevloc::geodesy::EnuFrame;
use bevloc::osm_map::{parse_osm_xml, VectorMap};
use bevloc::refiner::RefinerConfig;
use bevloc::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn features(seed: u32) -> FeatureGrid {
    let mut f = FeatureGrid::zeros(6, 64, 64);
    let mut state = seed;
    for v in f.values.iter_mut() {
        state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
        *v = (state >> 8) as f32 / (1u32 << 24) as f32;
    }
    f
}

fn town() -> VectorMap {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let frame: EnuFrame = serde_json::from_slice(&std::fs::read(data.join("frame.json")).unwrap()).unwrap();
    parse_osm_xml(&std::fs::read(data.join("town.osm")).unwrap(), &frame).unwrap()
}

fn volume(c: &mut Criterion) {
    let (a, b) = (features(1), features(2));
    let mut g = c.benchmark_group("build_volume");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, exec| {
            bench.iter(|| build_volume_with(&a, &b, *exec).unwrap())
        });
    }
    g.finish();
}

fn fan_out(c: &mut Criterion) {
    let vm = town();
    let cfg = BenchmarkConfig {
        samples: 8,
        refiner: RefinerConfig {
            iterations: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut g = c.benchmark_group("benchmark_8_samples");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bench, exec| {
            bench.iter(|| run_benchmark_in_memory(&vm, &cfg, *exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, volume, fan_out);
criterion_main!(benches);

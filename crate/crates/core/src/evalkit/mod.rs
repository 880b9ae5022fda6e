//! Synthetic samples, evaluation metrics, benchmark orchestration and
//! report emission.

mod bench;
mod metrics;
mod noise;
mod report;
mod sample;

pub use bench::{
    hex_digest, run_benchmark, run_benchmark_in_memory, run_samples, summarize, sample_road_poses, write_results_jsonl, BenchmarkConfig,
    BenchmarkFiles, BenchmarkRun, SampleOutcome, PROTOCOL,
};
pub use metrics::{
    compute_metrics, mean, median, recall_below, BenchmarkReport, HistogramBin, IterationAggregate, Recall,
    SampleResult, TraceEntry, ORIENTATION_THRESHOLDS_DEG, POSITION_THRESHOLDS_M,
};
pub use noise::{perturb_pose, stream_rng, NoiseModel};
pub use report::{emit_report, render_svg};
pub use sample::{
    check_coverage, make_sample, make_sample_with, DegradationSpec, OcclusionSector, PatchSpec, Sample,
    COVERAGE_MARGIN_M,
};

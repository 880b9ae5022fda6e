use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose3DoF;
use crate::refiner::LocalizationResult;

pub const POSITION_THRESHOLDS_M: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
pub const ORIENTATION_THRESHOLDS_DEG: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

/// Per-iteration summary stored with each sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub pose: Pose3DoF,
    pub ape_m: f64,
    pub aoe_deg: f64,
    pub mean_flow_px: f64,
    pub mean_confidence: f64,
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_id: u64,
    pub pose_est: Pose3DoF,
    pub pose_gt: Pose3DoF,
    pub pose_prior: Pose3DoF,
    pub ape_m: f64,
    pub aoe_deg: f64,
    pub trace: Vec<TraceEntry>,
    pub flags: Vec<String>,
}

impl SampleResult {
    pub fn new(sample_id: u64, result: &LocalizationResult, gt: Pose3DoF, prior: Pose3DoF) -> Self {
        let trace = result
            .trace
            .iter()
            .map(|r| TraceEntry {
                pose: r.pose,
                ape_m: r.pose.position_error(&gt),
                aoe_deg: r.pose.orientation_error_deg(&gt),
                mean_flow_px: r.mean_flow_px,
                mean_confidence: r.mean_confidence,
            })
            .collect();
        Self::from_poses(sample_id, result.pose, gt, prior, trace, result.flags.clone())
    }

    pub fn from_poses(
        sample_id: u64,
        est: Pose3DoF,
        gt: Pose3DoF,
        prior: Pose3DoF,
        trace: Vec<TraceEntry>,
        flags: Vec<String>,
    ) -> Self {
        Self {
            sample_id,
            pose_est: est,
            pose_gt: gt,
            pose_prior: prior,
            ape_m: est.position_error(&gt),
            aoe_deg: est.orientation_error_deg(&gt),
            trace,
            flags,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recall {
    pub threshold: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationAggregate {
    pub iteration: usize,
    pub ape_mean: f64,
    pub ape_median: f64,
    pub aoe_mean: f64,
    pub recall_1m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    /// `null` in JSON for the open last bin.
    #[serde(with = "open_edge")]
    pub hi: f64,
    pub count: u64,
}

mod open_edge {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub samples: u64,
    pub failed_samples: u64,
    pub recall_position: Vec<Recall>,
    pub recall_orientation: Vec<Recall>,
    pub ape_mean_m: f64,
    pub ape_median_m: f64,
    pub aoe_mean_deg: f64,
    pub aoe_median_deg: f64,
    pub per_iteration: Vec<IterationAggregate>,
    pub ape_histogram: Vec<HistogramBin>,
    pub config_hash: String,
    pub protocol: String,
}

impl BenchmarkReport {
    pub fn recall_at_m(&self, t: f64) -> Option<f64> {
        self.recall_position.iter().find(|r| r.threshold == t).map(|r| r.recall)
    }

    pub fn recall_at_deg(&self, t: f64) -> Option<f64> {
        self.recall_orientation.iter().find(|r| r.threshold == t).map(|r| r.recall)
    }
}

/// Fraction of `errors` strictly below `t`.
pub fn recall_below(errors: &[f64], t: f64) -> f64 {
    errors.iter().filter(|e| **e < t).count() as f64 / errors.len() as f64
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median with the usual midpoint rule for even counts.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

const HISTOGRAM_EDGES_M: [f64; 12] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, f64::INFINITY];

fn histogram(errors: &[f64]) -> Vec<HistogramBin> {
    HISTOGRAM_EDGES_M
        .windows(2)
        .map(|e| HistogramBin {
            lo: e[0],
            hi: e[1],
            count: errors.iter().filter(|v| **v >= e[0] && **v < e[1]).count() as u64,
        })
        .collect()
}

/// Aggregates sample results. Errors are recomputed from the poses.
pub fn compute_metrics(results: &[SampleResult]) -> Result<BenchmarkReport> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let ape: Vec<f64> = results.iter().map(|r| r.pose_est.position_error(&r.pose_gt)).collect();
    let aoe: Vec<f64> = results.iter().map(|r| r.pose_est.orientation_error_deg(&r.pose_gt)).collect();
    let iterations = results.iter().map(|r| r.trace.len()).min().unwrap_or(0);
    let per_iteration = (0..iterations)
        .map(|k| {
            let a: Vec<f64> = results.iter().map(|r| r.trace[k].pose.position_error(&r.pose_gt)).collect();
            let o: Vec<f64> = results
                .iter()
                .map(|r| r.trace[k].pose.orientation_error_deg(&r.pose_gt))
                .collect();
            IterationAggregate {
                iteration: k + 1,
                ape_mean: mean(&a),
                ape_median: median(&a),
                aoe_mean: mean(&o),
                recall_1m: recall_below(&a, 1.0),
            }
        })
        .collect();
    Ok(BenchmarkReport {
        samples: results.len() as u64,
        failed_samples: 0,
        recall_position: POSITION_THRESHOLDS_M
            .iter()
            .map(|t| Recall {
                threshold: *t,
                recall: recall_below(&ape, *t),
            })
            .collect(),
        recall_orientation: ORIENTATION_THRESHOLDS_DEG
            .iter()
            .map(|t| Recall {
                threshold: *t,
                recall: recall_below(&aoe, *t),
            })
            .collect(),
        ape_mean_m: mean(&ape),
        ape_median_m: median(&ape),
        aoe_mean_deg: mean(&aoe),
        aoe_median_deg: median(&aoe),
        per_iteration,
        ape_histogram: histogram(&ape),
        config_hash: String::new(),
        protocol: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, theta_deg: f64) -> Pose3DoF {
        Pose3DoF::new(x, 0.0, theta_deg.to_radians())
    }

    #[test]
    fn median_rules() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(compute_metrics(&[]), Err(Error::EmptyResults)));
    }

    #[test]
    fn threshold_is_strict() {
        let r = SampleResult::from_poses(0, at(1.0, 0.0), at(0.0, 0.0), at(0.0, 0.0), vec![], vec![]);
        let rep = compute_metrics(&[r]).unwrap();
        assert_eq!(rep.recall_at_m(1.0), Some(0.0));
        assert_eq!(rep.recall_at_m(2.0), Some(1.0));
    }
}

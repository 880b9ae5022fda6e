//! Deterministic semantic descriptors, the all-pairs correlation volume, and
//! fixed-radius window lookups into it.

mod edt;
mod features;
mod volume;
mod window;

pub use edt::squared_distance_to;
pub use features::{embed_features, EmbedConfig, FeatureGrid, FEATURE_STRIDE};
pub use volume::{build_volume, build_volume_with, volume_builds_on_this_thread, CorrelationVolume};
pub use window::{full_to_half, sample_windows, CorrelationWindow};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Execution;

    fn one_hot(h: usize, w: usize) -> FeatureGrid {
        let dim = h * w;
        let mut f = FeatureGrid::zeros(dim, h, w);
        for i in 0..h {
            for j in 0..w {
                f.cell_mut(i, j)[i * w + j] = 1.0;
            }
        }
        f
    }

    #[test]
    fn zero_map_gives_zero_volume() {
        let bev = one_hot(4, 4);
        let map = FeatureGrid::zeros(16, 4, 4);
        let vol = build_volume(&bev, &map).unwrap();
        assert!(vol.full.iter().chain(&vol.half).all(|v| *v == 0.0));
    }

    #[test]
    fn orthonormal_descriptors_give_identity_volume() {
        let f = one_hot(4, 6);
        let vol = build_volume(&f, &f).unwrap();
        for i in 0..4 {
            for j in 0..6 {
                for k in 0..4 {
                    for l in 0..6 {
                        let expect = if (i, j) == (k, l) { 1.0 } else { 0.0 };
                        assert_eq!(vol.full_at(i, j, k, l), expect);
                    }
                }
            }
        }
        assert_eq!(vol.half_at(0, 0, 0, 0), 0.25);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = FeatureGrid::zeros(6, 4, 4);
        assert!(build_volume(&a, &FeatureGrid::zeros(5, 4, 4)).is_err());
        assert!(build_volume(&a, &FeatureGrid::zeros(6, 4, 6)).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut f = FeatureGrid::zeros(3, 6, 6);
        for (n, v) in f.values.iter_mut().enumerate() {
            *v = ((n * 37 % 11) as f32 - 5.0) / 5.0;
        }
        let a = build_volume_with(&f, &f, Execution::Sequential).unwrap();
        let b = build_volume_with(&f, &f, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_counter_increments() {
        let f = FeatureGrid::zeros(2, 2, 2);
        let before = volume_builds_on_this_thread();
        build_volume(&f, &f).unwrap();
        assert_eq!(volume_builds_on_this_thread(), before + 1);
    }

    #[test]
    fn integer_windows_are_lookups() {
        let f = one_hot(4, 4);
        let vol = build_volume(&f, &f).unwrap();
        let coords: Vec<[f64; 2]> = (0..16).map(|c| [(c % 4) as f64, (c / 4) as f64]).collect();
        let win = sample_windows(&vol, &coords, 1).unwrap();
        for cell in 0..16 {
            let patch = win.full_patch(cell);
            assert_eq!(patch[4], 1.0);
            assert_eq!(patch.iter().sum::<f32>(), 1.0);
        }
    }

    #[test]
    fn far_outside_is_zero() {
        let f = one_hot(4, 4);
        let vol = build_volume(&f, &f).unwrap();
        let coords = vec![[100.0, -50.0]; 16];
        let win = sample_windows(&vol, &coords, 2).unwrap();
        assert!(win.full.iter().chain(&win.half).all(|v| *v == 0.0));
        assert!(sample_windows(&vol, &coords, 0).is_err());
    }
}

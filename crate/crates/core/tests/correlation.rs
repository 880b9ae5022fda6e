use bevloc::correlation::{
    build_volume, build_volume_with, embed_features, full_to_half, sample_windows, CorrelationVolume, EmbedConfig,
    FeatureGrid,
};
use bevloc::osm_map::{GridSpec, RasterGrid, BUILDING, ROAD};
use bevloc::{Execution, Pose3DoF};
use proptest::prelude::*;

const D: usize = 6;
const N: usize = 8;

/// Random per-cell unit descriptors, with about one cell in eight left empty.
fn grid() -> impl Strategy<Value = FeatureGrid> {
    prop::collection::vec((-1.0f32..1.0, 0u8..8), D * N * N).prop_map(|raw| {
        let mut g = FeatureGrid::zeros(D, N, N);
        for cell in 0..N * N {
            let chunk = &raw[cell * D..(cell + 1) * D];
            if chunk[0].1 == 0 {
                continue;
            }
            let norm = chunk.iter().map(|(v, _)| (*v as f64).powi(2)).sum::<f64>().sqrt();
            let out = g.cell_mut(cell / N, cell % N);
            for (o, (v, _)) in out.iter_mut().zip(chunk) {
                *o = (*v as f64 / norm) as f32;
            }
        }
        g
    })
}

fn brute_full(a: &FeatureGrid, b: &FeatureGrid, i: usize, j: usize, k: usize, l: usize) -> f32 {
    let mut acc = 0.0f64;
    for t in 0..D {
        acc += a.cell(i, j)[t] as f64 * b.cell(k, l)[t] as f64;
    }
    acc.max(0.0) as f32
}

/// Scalar four-tap bilinear sample with zero outside the plane.
fn bilinear(plane: &[f32], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let at = |xi: f64, yi: f64| {
        if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
            0.0
        } else {
            plane[yi as usize * w + xi as usize] as f64
        }
    };
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    at(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + at(x0 + 1.0, y0) * fx * (1.0 - fy)
        + at(x0, y0 + 1.0) * (1.0 - fx) * fy
        + at(x0 + 1.0, y0 + 1.0) * fx * fy
}

fn half_coords(vol: &CorrelationVolume, shift: (f64, f64)) -> Vec<[f64; 2]> {
    (0..vol.bev_cells())
        .map(|c| [(c % vol.bev_w) as f64 + shift.0 + 0.5, (c / vol.bev_w) as f64 + shift.1 + 0.5])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn volume_matches_quadruple_loop(a in grid(), b in grid()) {
        let vol = build_volume(&a, &b).unwrap();
        for i in 0..N { for j in 0..N { for k in 0..N { for l in 0..N {
            prop_assert_eq!(vol.full_at(i, j, k, l), brute_full(&a, &b, i, j, k, l));
        }}}}
        for i in 0..N { for j in 0..N { for k in 0..N / 2 { for l in 0..N / 2 {
            let mean = (vol.full_at(i, j, 2 * k, 2 * l) as f64
                + vol.full_at(i, j, 2 * k, 2 * l + 1) as f64
                + vol.full_at(i, j, 2 * k + 1, 2 * l) as f64
                + vol.full_at(i, j, 2 * k + 1, 2 * l + 1) as f64) / 4.0;
            prop_assert_eq!(vol.half_at(i, j, k, l), mean as f32);
        }}}}
        prop_assert!(vol.full.iter().chain(&vol.half).all(|v| *v >= 0.0));
    }

    #[test]
    fn self_volume_is_symmetric(a in grid()) {
        let vol = build_volume(&a, &a).unwrap();
        for i in 0..N { for j in 0..N { for k in 0..N { for l in 0..N {
            prop_assert_eq!(vol.full_at(i, j, k, l), vol.full_at(k, l, i, j));
        }}}}
    }

    #[test]
    fn execution_modes_agree(a in grid(), b in grid()) {
        let s = build_volume_with(&a, &b, Execution::Sequential).unwrap();
        let p = build_volume_with(&a, &b, Execution::Parallel).unwrap();
        prop_assert_eq!(s, p);
    }

    #[test]
    fn windows_match_scalar_bilinear(a in grid(), b in grid(), sx in -3.0f64..3.0, sy in -3.0f64..3.0, r in 1usize..4) {
        let vol = build_volume(&a, &b).unwrap();
        let coords = half_coords(&vol, (sx, sy));
        let win = sample_windows(&vol, &coords, r).unwrap();
        let side = 2 * r + 1;
        for (cell, c) in coords.iter().enumerate() {
            let full = vol.full_plane(cell);
            let half = vol.half_plane(cell);
            let (hx, hy) = (full_to_half(c[0]), full_to_half(c[1]));
            for oy in 0..side {
                for ox in 0..side {
                    let (dx, dy) = (ox as f64 - r as f64, oy as f64 - r as f64);
                    let f = bilinear(full, N, N, c[0] + dx, c[1] + dy);
                    let h = bilinear(half, N / 2, N / 2, hx + dx, hy + dy);
                    prop_assert!((win.full_patch(cell)[oy * side + ox] as f64 - f).abs() < 1e-6);
                    prop_assert!((win.half_patch(cell)[oy * side + ox] as f64 - h).abs() < 1e-6);
                    prop_assert!(win.full_patch(cell)[oy * side + ox] >= 0.0);
                }
            }
        }
    }
}

#[test]
fn integer_coords_are_exact_neighborhoods() {
    let mut a = FeatureGrid::zeros(D, N, N);
    for cell in 0..N * N {
        a.values[cell * D + cell % D] = 1.0;
    }
    let vol = build_volume(&a, &a).unwrap();
    let coords: Vec<[f64; 2]> = (0..N * N).map(|c| [(c % N) as f64, (c / N) as f64]).collect();
    let win = sample_windows(&vol, &coords, 1).unwrap();
    for (cell, c) in coords.iter().enumerate() {
        for oy in -1i64..=1 {
            for ox in -1i64..=1 {
                let (x, y) = (c[0] as i64 + ox, c[1] as i64 + oy);
                let want = if (0..N as i64).contains(&x) && (0..N as i64).contains(&y) {
                    vol.full_at(cell / N, cell % N, y as usize, x as usize)
                } else {
                    0.0
                };
                assert_eq!(win.full_patch(cell)[((oy + 1) * 3 + ox + 1) as usize], want);
            }
        }
    }
}

#[test]
fn coords_off_the_map_give_zero_windows() {
    let mut a = FeatureGrid::zeros(D, N, N);
    a.values.iter_mut().step_by(D).for_each(|v| *v = 1.0);
    let vol = build_volume(&a, &a).unwrap();
    for far in [[-50.0, 3.0], [3.0, 40.0], [1e9, -1e9]] {
        let win = sample_windows(&vol, &vec![far; N * N], 4).unwrap();
        assert!(win.full.iter().chain(&win.half).all(|v| *v == 0.0));
    }
}

#[test]
fn default_grids_give_equal_feature_lattices() {
    let bev = GridSpec::square(64.0, 0.25, Pose3DoF::default()).unwrap();
    let map = GridSpec::square(128.0, 0.5, Pose3DoF::default()).unwrap();
    let mut gb = RasterGrid::zeros(bev);
    let mut gm = RasterGrid::zeros(map);
    for r in 100..140 {
        for c in 0..256 {
            gb.set(ROAD, r, c, 1.0);
            gm.set(BUILDING, c, r, 1.0);
        }
    }
    let cfg = EmbedConfig::default();
    let fb = embed_features(&gb, &cfg).unwrap();
    let fm = embed_features(&gm, &cfg).unwrap();
    assert_eq!((fb.height, fb.width, fb.dim), (64, 64, 6));
    assert_eq!((fm.height, fm.width), (fb.height, fb.width));
    assert_eq!(fb, embed_features(&gb, &cfg).unwrap());
    let vol = build_volume(&fb, &fm).unwrap();
    assert_eq!(vol.full.len(), 64usize.pow(4));
    assert_eq!(vol.half.len(), 64 * 64 * 32 * 32);
}

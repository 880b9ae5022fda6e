//! Exact Euclidean distance transform (lower envelope of parabolas, applied
//! separably along columns then rows).

const INF: f64 = 1e20;

fn transform_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = -INF;
                    z[1] = INF;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Squared distance (pixels²) from each pixel center to the nearest pixel
/// where `seed` is true. Returns `None` when no pixel is seeded.
pub fn squared_distance_to(seed: &[bool], width: usize, height: usize) -> Option<Vec<f64>> {
    assert_eq!(seed.len(), width * height);
    if !seed.iter().any(|s| *s) {
        return None;
    }
    let mut grid: Vec<f64> = seed.iter().map(|s| if *s { 0.0 } else { INF }).collect();
    let n = width.max(height);
    let (mut f, mut d) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);

    for col in 0..width {
        for row in 0..height {
            f[row] = grid[row * width + col];
        }
        transform_1d(&f[..height], &mut d[..height], &mut v, &mut z);
        for row in 0..height {
            grid[row * width + col] = d[row];
        }
    }
    for row in 0..height {
        let line = &mut grid[row * width..(row + 1) * width];
        f[..width].copy_from_slice(line);
        transform_1d(&f[..width], &mut d[..width], &mut v, &mut z);
        line.copy_from_slice(&d[..width]);
    }
    Some(grid)
}

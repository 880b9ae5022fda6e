//! Exact rational reference for the 8x8 DLT system.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Solves the `h33 = 1` system in exact arithmetic and rounds each entry once.
pub fn exact_dlt(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> [f64; 9] {
    let q = |v: f64| BigRational::from_float(v).expect("finite");
    let one = || q(1.0);
    let zero = BigRational::zero;
    let mut m: Vec<Vec<BigRational>> = Vec::with_capacity(8);
    for k in 0..4 {
        let (x, y, u, v) = (q(src[k][0]), q(src[k][1]), q(dst[k][0]), q(dst[k][1]));
        m.push(vec![x.clone(), y.clone(), one(), zero(), zero(), zero(), -&u * &x, -&u * &y, u.clone()]);
        m.push(vec![zero(), zero(), zero(), x.clone(), y.clone(), one(), -&v * &x, -&v * &y, v.clone()]);
    }
    for col in 0..8 {
        let piv = (col..8).find(|&r| !m[r][col].is_zero()).expect("non-singular");
        m.swap(col, piv);
        for row in 0..8 {
            if row != col && !m[row][col].is_zero() {
                let f = &m[row][col] / &m[col][col];
                for k in col..9 {
                    let d = &f * &m[col][k];
                    m[row][k] -= d;
                }
            }
        }
    }
    let mut h = [1.0; 9];
    for (i, v) in h.iter_mut().take(8).enumerate() {
        *v = (&m[i][8] / &m[i][i]).to_f64().expect("representable");
    }
    h
}

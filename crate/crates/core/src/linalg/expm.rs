//! Matrix exponential by the degree-13 diagonal Padé approximant with
//! scaling and squaring (Higham 2005, fixed order 13).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(a)`, plus the number of squarings performed.
pub fn expm(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, u32)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow { norm });
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    if s > 1000 {
        return Err(Error::ExpOverflow { norm });
    }
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]);
    let u = &a * (inner_u + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &id * B[1]);
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]) + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &id * B[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::ExpOverflow { norm })?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExpOverflow { norm });
    }
    Ok((r, s.max(0) as u32))
}

//! Dense matrix arithmetic and all randomness (seeded) used by every other
//! module. 64-bit reals throughout; gradient checking needs the precision.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{lu_inverse, lu_solve, stationary_dense, stationary_distribution};
pub use matrix::Matrix;
pub use rng::Rng;

use crate::Result;

/// Matrix of i.i.d. N(0, sigma^2) entries. `sigma = 0` yields zeros.
pub fn gaussian_noise(rng: &mut Rng, rows: usize, cols: usize, sigma: f64) -> Result<Matrix> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(crate::Error::Param(format!(
            "gaussian_noise: sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let mut m = Matrix::zeros(rows, cols);
    if sigma > 0.0 {
        for v in m.data_mut() {
            *v = sigma * rng.next_gaussian();
        }
    }
    Ok(m)
}

/// Salt-and-pepper corruption: each entry independently, with probability
/// `p`, is replaced by 0 or 1 (equiprobable); otherwise left unchanged.
pub fn salt_and_pepper(rng: &mut Rng, x: &Matrix, p: f64) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::Error::Param(format!(
            "salt_and_pepper: p must lie in [0,1], got {p}"
        )));
    }
    let mut out = x.clone();
    for v in out.data_mut() {
        if rng.next_f64() < p {
            *v = if rng.next_f64() < 0.5 { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

use super::Matrix;
use crate::{Error, Result};

const POWER_ITERATION_CAP: usize = 100_000;

/// Stationary distribution of a row-stochastic matrix by power iteration.
///
/// Runs from two deterministic positive starts (uniform, and a skewed
/// ramp). If either fails to converge within the iteration cap the chain
/// is likely periodic; if both converge but to different fixed points the
/// stationary distribution is not unique (reducible chain). Both cases
/// are convergence errors; this routine refuses to answer rather than
/// return one of several stationary distributions.
pub fn stationary_distribution(k: &Matrix, tol: f64) -> Result<Matrix> {
    check_row_stochastic(k)?;
    let n = k.rows();
    let uniform = Matrix::from_vec(1, n, vec![1.0 / n as f64; n])?;
    let ramp = {
        let total: f64 = (1..=n).map(|i| i as f64).sum();
        Matrix::from_vec(1, n, (1..=n).map(|i| i as f64 / total).collect())?
    };
    let a = power_iterate(k, uniform, tol)?;
    let b = power_iterate(k, ramp, tol)?;
    let gap = a.l1_distance(&b)?;
    if gap > (10.0 * tol).max(1e-8) {
        return Err(Error::Convergence(format!(
            "stationary distribution is not unique (starts disagree by {gap:.3e}); chain is likely reducible"
        )));
    }
    Ok(a)
}

fn power_iterate(k: &Matrix, mut v: Matrix, tol: f64) -> Result<Matrix> {
    for _ in 0..POWER_ITERATION_CAP {
        let next = v.matmul(k)?;
        let diff = next.l1_distance(&v)?;
        v = next;
        if diff <= tol {
            // Renormalize away accumulated rounding.
            let s = v.sum();
            return Ok(v.scale(1.0 / s));
        }
    }
    Err(Error::Convergence(format!(
        "power iteration did not converge within {POWER_ITERATION_CAP} iterations; chain is likely periodic"
    )))
}

/// Stationary distribution by direct linear solve of the balance
/// equations (pi K = pi, sum pi = 1). Exact up to LU rounding; used where
/// power iteration would be slow or where the caller needs full accuracy
/// regardless of the spectral gap.
pub fn stationary_dense(k: &Matrix) -> Result<Matrix> {
    check_row_stochastic(k)?;
    let n = k.rows();
    // Rows of A are the equations; unknowns are pi as a column.
    // (K^T - I) pi = 0 with the last equation replaced by sum pi = 1.
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = k.get(j, i) - if i == j { 1.0 } else { 0.0 };
            a.set(i, j, v);
        }
    }
    for j in 0..n {
        a.set(n - 1, j, 1.0);
    }
    let mut b = Matrix::zeros(n, 1);
    b.set(n - 1, 0, 1.0);
    let pi = lu_solve(&a, &b)?;
    Ok(pi.transpose())
}

fn check_row_stochastic(k: &Matrix) -> Result<()> {
    if k.rows() != k.cols() {
        return Err(Error::Shape(format!(
            "stationary distribution needs a square matrix, got {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    for i in 0..k.rows() {
        let mut sum = 0.0;
        for &v in k.row(i) {
            if v < -1e-12 {
                return Err(Error::Param(format!("row {i} has negative entry {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("row {i} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

/// Solves `a x = b` for possibly multiple right-hand columns by LU
/// decomposition with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape(format!("lu_solve: matrix is {}x{}", a.rows(), a.cols())));
    }
    if b.rows() != n {
        return Err(Error::Shape(format!(
            "lu_solve: rhs has {} rows, expected {n}",
            b.rows()
        )));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu.get(col, col).abs();
        for r in col + 1..n {
            let v = lu.get(r, col).abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-13 {
            return Err(Error::Numerics(format!(
                "lu_solve: matrix is singular to working precision (pivot {best:.3e} at column {col})"
            )));
        }
        if pivot != col {
            perm.swap(pivot, col);
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(pivot, j));
                lu.set(pivot, j, tmp);
            }
        }
        let d = lu.get(col, col);
        for r in col + 1..n {
            let f = lu.get(r, col) / d;
            lu.set(r, col, f);
            for j in col + 1..n {
                lu.set(r, j, lu.get(r, j) - f * lu.get(col, j));
            }
        }
    }
    let m = b.cols();
    let mut x = Matrix::zeros(n, m);
    for rhs in 0..m {
        // Forward substitution on the permuted rhs.
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = b.get(perm[i], rhs);
            for j in 0..i {
                v -= lu.get(i, j) * y[j];
            }
            y[i] = v;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut v = y[i];
            for j in i + 1..n {
                v -= lu.get(i, j) * x.get(j, rhs);
            }
            x.set(i, rhs, v / lu.get(i, i));
        }
    }
    x.check_finite("lu_solve")?;
    Ok(x)
}

pub fn lu_inverse(a: &Matrix) -> Result<Matrix> {
    lu_solve(a, &Matrix::identity(a.rows()))
}

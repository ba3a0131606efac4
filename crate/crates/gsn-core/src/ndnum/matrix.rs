use crate::{Error, Result};

/// Dense row-major matrix of 64-bit reals, the sole numeric container.
///
/// Every public constructor and operation leaves the data finite; NaN/Inf
/// is rejected at the boundary so downstream numeric code never has to
/// re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "from_vec: {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = Matrix { rows, cols, data };
        m.check_finite("from_vec")?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    /// Single row as a 1xN matrix.
    pub fn row_matrix(v: Vec<f64>) -> Result<Matrix> {
        let n = v.len();
        Matrix::from_vec(1, n, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of row `i` as a 1xN matrix.
    pub fn extract_row(&self, i: usize) -> Matrix {
        Matrix { rows: 1, cols: self.cols, data: self.row(i).to_vec() }
    }

    /// New matrix from the given row indices (with repetition allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Standard product `self * b`.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.rows {
            return Err(Error::Shape(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        out.check_finite("matmul")?;
        Ok(out)
    }

    /// `self * b^T` without materializing the transpose.
    pub fn matmul_nt(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.cols {
            return Err(Error::Shape(format!(
                "matmul_nt: {}x{} * ({}x{})^T",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..b.rows {
                let brow = b.row(j);
                let mut s = 0.0;
                for (&x, &y) in arow.iter().zip(brow) {
                    s += x * y;
                }
                out.data[i * b.rows + j] = s;
            }
        }
        out.check_finite("matmul_nt")?;
        Ok(out)
    }

    /// `self^T * b` without materializing the transpose.
    pub fn matmul_tn(&self, b: &Matrix) -> Result<Matrix> {
        if self.rows != b.rows {
            return Err(Error::Shape(format!(
                "matmul_tn: ({}x{})^T * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = b.row(k);
            for (i, &aki) in arow.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aki * bkj;
                }
            }
        }
        out.check_finite("matmul_tn")?;
        Ok(out)
    }

    pub fn add(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, "add", |x, y| x + y)
    }

    pub fn sub(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, "sub", |x, y| x - y)
    }

    pub fn hadamard(&self, b: &Matrix) -> Result<Matrix> {
        self.zip_with(b, "hadamard", |x, y| x * y)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    /// Adds a 1xC row vector to every row.
    pub fn add_row_broadcast(&self, row: &Matrix) -> Result<Matrix> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(Error::Shape(format!(
                "add_row_broadcast: {}x{} + {}x{}",
                self.rows, self.cols, row.rows, row.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] += row.data[j];
            }
        }
        Ok(out)
    }

    /// Column sums as a 1xC matrix.
    pub fn sum_rows(&self) -> Matrix {
        let mut out = Matrix::zeros(1, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j] += self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Sum of absolute differences (entrywise L1 distance).
    pub fn l1_distance(&self, b: &Matrix) -> Result<f64> {
        if self.rows != b.rows || self.cols != b.cols {
            return Err(Error::Shape(format!(
                "l1_distance: {}x{} vs {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        Ok(self.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum())
    }

    /// Max absolute row sum (the operator infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn zip_with(&self, b: &Matrix, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != b.rows || self.cols != b.cols {
            return Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = self.clone();
        for (v, &y) in out.data.iter_mut().zip(&b.data) {
            *v = f(*v, y);
        }
        out.check_finite(what)?;
        Ok(out)
    }

    pub(crate) fn check_finite(&self, what: &str) -> Result<()> {
        for (i, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numerics(format!(
                    "{what}: non-finite value {v} at flat index {i} of {}x{} matrix",
                    self.rows, self.cols
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul_is_noop() {
        let m = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let i3 = Matrix::identity(3);
        assert_eq!(i3.matmul(&m).unwrap().data(), m.data());
    }

    #[test]
    fn matmul_hand_example() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = crate::ndnum::Rng::new(5);
        let a = crate::ndnum::gaussian_noise(&mut rng, 5, 7, 1.0).unwrap();
        let b = crate::ndnum::gaussian_noise(&mut rng, 7, 3, 1.0).unwrap();
        let c = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..7 {
                    s += a.get(i, k) * b.get(k, j);
                }
                assert!((c.get(i, j) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_mismatch_errors() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn matmul_associative_on_random_triples() {
        let mut rng = crate::ndnum::Rng::new(17);
        for _ in 0..5 {
            let a = crate::ndnum::gaussian_noise(&mut rng, 4, 6, 1.0).unwrap();
            let b = crate::ndnum::gaussian_noise(&mut rng, 6, 5, 1.0).unwrap();
            let c = crate::ndnum::gaussian_noise(&mut rng, 5, 3, 1.0).unwrap();
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            let scale: f64 = left.data().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            assert!(left.l1_distance(&right).unwrap() / scale < 1e-9);
        }
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let mut rng = crate::ndnum::Rng::new(23);
        let a = crate::ndnum::gaussian_noise(&mut rng, 4, 6, 1.0).unwrap();
        let b = crate::ndnum::gaussian_noise(&mut rng, 5, 6, 1.0).unwrap();
        let nt = a.matmul_nt(&b).unwrap();
        let explicit = a.matmul(&b.transpose()).unwrap();
        assert!(nt.l1_distance(&explicit).unwrap() < 1e-12);

        let c = crate::ndnum::gaussian_noise(&mut rng, 4, 3, 1.0).unwrap();
        let tn = a.matmul_tn(&c).unwrap();
        let explicit = a.transpose().matmul(&c).unwrap();
        assert!(tn.l1_distance(&explicit).unwrap() < 1e-12);
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn broadcast_and_reductions() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Matrix::row_matrix(vec![10.0, 20.0, 30.0]).unwrap();
        let s = m.add_row_broadcast(&b).unwrap();
        assert_eq!(s.row(1), &[14.0, 25.0, 36.0]);
        assert_eq!(m.sum_rows().data(), &[5.0, 7.0, 9.0]);
        assert_eq!(m.sum(), 21.0);
        assert_eq!(m.norm_inf(), 15.0);
    }
}

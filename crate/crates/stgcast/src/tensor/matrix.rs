use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of 64-bit floats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{}x{}", rows, cols),
                format!("{} values", values.len()),
            ));
        }
        Ok(DenseMatrix { rows, cols, values })
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("from_rows", format!("{} cols", c), format!("{} cols", row.len())));
            }
            values.extend_from_slice(row);
        }
        Ok(DenseMatrix { rows: r, cols: c, values })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// "RxC" string, used in shape-error messages.
    pub fn dims(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.values[i * self.cols + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape("matmul", self.dims(), other.dims()));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            let a_row = &self.values[i * k..(i + 1) * k];
            let out_row = &mut out.values[i * n..(i + 1) * n];
            for (p, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.values[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with("hadamard", other, |a, b| a * b)
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        self.map(|v| v * alpha)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, op: &'static str, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(op, self.dims(), other.dims()));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// self += alpha * other, in place.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape("axpy", self.dims(), other.dims()));
        }
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn sq_sum(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Rank-3 tensor (samples, time steps, detectors), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    t: usize,
    d: usize,
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize, t: usize, d: usize) -> Self {
        Tensor3 {
            n,
            t,
            d,
            values: vec![0.0; n * t * d],
        }
    }

    pub fn from_vec(n: usize, t: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * t * d {
            return Err(Error::shape(
                "tensor3_from_vec",
                format!("{}x{}x{}", n, t, d),
                format!("{} values", values.len()),
            ));
        }
        Ok(Tensor3 { n, t, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.t, self.d)
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize, d: usize) -> f64 {
        self.values[(i * self.t + t) * self.d + d]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, d: usize, v: f64) {
        self.values[(i * self.t + t) * self.d + d] = v;
    }

    /// The i-th sample as a (t x d) matrix.
    pub fn sample(&self, i: usize) -> DenseMatrix {
        let len = self.t * self.d;
        let slice = &self.values[i * len..(i + 1) * len];
        DenseMatrix::from_vec(self.t, self.d, slice.to_vec()).expect("consistent layout")
    }

    pub fn set_sample(&mut self, i: usize, m: &DenseMatrix) -> Result<()> {
        if m.shape() != (self.t, self.d) {
            return Err(Error::shape("set_sample", format!("{}x{}", self.t, self.d), m.dims()));
        }
        let len = self.t * self.d;
        self.values[i * len..(i + 1) * len].copy_from_slice(m.values());
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            n: self.n,
            t: self.t,
            d: self.d,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_hand_case() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![5.0], vec![6.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.values(), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_identity() {
        let m = DenseMatrix::from_rows(&[vec![3.0, -1.0], vec![0.5, 2.0]]).unwrap();
        let i = DenseMatrix::identity(2);
        assert_eq!(i.matmul(&m).unwrap(), m);
        assert_eq!(m.matmul(&i).unwrap(), m);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn matmul_associative_within_tolerance() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            // xorshift, good enough for test fixtures
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..20 {
            let a = DenseMatrix::from_vec(4, 4, (0..16).map(|_| next()).collect()).unwrap();
            let b = DenseMatrix::from_vec(4, 4, (0..16).map(|_| next()).collect()).unwrap();
            let c = DenseMatrix::from_vec(4, 4, (0..16).map(|_| next()).collect()).unwrap();
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            let diff = left.sub(&right).unwrap().max_abs();
            assert!(diff < 1e-9, "associativity violated: {diff}");
        }
    }

    #[test]
    fn tensor3_sample_layout() {
        let t = Tensor3::from_vec(2, 2, 3, (0..12).map(|v| v as f64).collect()).unwrap();
        let s1 = t.sample(1);
        assert_eq!(s1.shape(), (2, 3));
        assert_eq!(s1.values(), &[6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
        assert_eq!(s1.get(1, 2), t.get(1, 1, 2));
    }

    #[test]
    fn from_vec_length_mismatch() {
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0]).is_err());
        assert!(Tensor3::from_vec(1, 2, 3, vec![0.0; 5]).is_err());
    }
}

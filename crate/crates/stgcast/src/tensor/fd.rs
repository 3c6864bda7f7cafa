use crate::tensor::DenseMatrix;

/// Central-difference gradient of a scalar function of a matrix:
/// (f(x + h*e_ij) - f(x - h*e_ij)) / (2h) per entry. `f` must be pure.
pub fn finite_difference_gradient<F>(mut f: F, x: &DenseMatrix, h: f64) -> DenseMatrix
where
    F: FnMut(&DenseMatrix) -> f64,
{
    let mut grad = DenseMatrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe.get(i, j);
            probe.set(i, j, orig + h);
            let plus = f(&probe);
            probe.set(i, j, orig - h);
            let minus = f(&probe);
            probe.set(i, j, orig);
            grad.set(i, j, (plus - minus) / (2.0 * h));
        }
    }
    grad
}

/// |a - b| / max(|a|, |b|, 1e-8) — stable near zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest entrywise relative error between two same-shape matrices.
pub fn max_relative_error(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_relative_error shape mismatch");
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}

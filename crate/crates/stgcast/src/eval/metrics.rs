use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const MAPE_EPSILON: f64 = 1e-6;

fn check_dims(op: &'static str, y_true: &Tensor3, y_pred: &Tensor3) -> Result<()> {
    if y_true.dims() != y_pred.dims() {
        let (a, b, c) = y_true.dims();
        let (x, y, z) = y_pred.dims();
        return Err(Error::shape(op, format!("{a}x{b}x{c}"), format!("{x}x{y}x{z}")));
    }
    Ok(())
}

/// Mean absolute error over all cells.
pub fn mae(y_true: &Tensor3, y_pred: &Tensor3) -> Result<f64> {
    check_dims("mae", y_true, y_pred)?;
    Ok(mae_slice(y_true.values(), y_pred.values()))
}

/// Root mean squared error over all cells.
pub fn rmse(y_true: &Tensor3, y_pred: &Tensor3) -> Result<f64> {
    check_dims("rmse", y_true, y_pred)?;
    Ok(rmse_slice(y_true.values(), y_pred.values()))
}

pub(crate) fn mae_slice(y_true: &[f64], y_pred: &[f64]) -> f64 {
    let n = y_true.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = y_true.iter().zip(y_pred).map(|(&t, &p)| (t - p).abs()).sum();
    sum / n as f64
}

pub(crate) fn rmse_slice(y_true: &[f64], y_pred: &[f64]) -> f64 {
    let n = y_true.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = y_true.iter().zip(y_pred).map(|(&t, &p)| (t - p) * (t - p)).sum();
    (sum / n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapeResult {
    /// Mean of |y - y_hat| / |y| over included cells, as a percentage.
    pub percent: f64,
    /// Cells skipped because |y| <= epsilon (zero-filled missing targets
    /// land here).
    pub excluded: usize,
}

/// Mean absolute percentage error; targets with magnitude <= `epsilon` are
/// excluded and counted.
pub fn mape(y_true: &Tensor3, y_pred: &Tensor3, epsilon: f64) -> Result<MapeResult> {
    check_dims("mape", y_true, y_pred)?;
    mape_slice(y_true.values(), y_pred.values(), epsilon)
}

pub(crate) fn mape_slice(y_true: &[f64], y_pred: &[f64], epsilon: f64) -> Result<MapeResult> {
    let mut sum = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t.abs() <= epsilon {
            excluded += 1;
        } else {
            sum += (t - p).abs() / t.abs();
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::Degenerate(format!(
            "MAPE undefined: all {excluded} cells have |target| <= {epsilon}"
        )));
    }
    Ok(MapeResult {
        percent: sum / included as f64 * 100.0,
        excluded,
    })
}

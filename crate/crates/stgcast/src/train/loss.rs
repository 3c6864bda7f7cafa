use crate::error::{Error, Result};
use crate::tensor::{Tape, VarId};

/// Mean squared error over all cells plus lambda * sum|w| over the given
/// weight matrices:
///
///   L = (1/numel) * sum (y_true - y_pred)^2 + lambda * sum_i |w_i|
///
/// The L1 subgradient at zero is zero, so unused weights stay at rest.
pub fn regularized_loss(
    tape: &mut Tape,
    y_pred: VarId,
    y_true: VarId,
    weights: &[VarId],
    lambda: f64,
) -> Result<VarId> {
    let pred_shape = tape.value(y_pred).shape();
    let true_shape = tape.value(y_true).shape();
    if pred_shape != true_shape {
        return Err(Error::shape(
            "regularized_loss",
            format!("{}x{}", pred_shape.0, pred_shape.1),
            format!("{}x{}", true_shape.0, true_shape.1),
        ));
    }
    let numel = (pred_shape.0 * pred_shape.1) as f64;
    if numel == 0.0 {
        return Err(Error::Contract("regularized_loss over an empty prediction".into()));
    }

    let diff = tape.sub(y_true, y_pred)?;
    let sq = tape.hadamard(diff, diff)?;
    let total = tape.sum(sq);
    let mut loss = tape.scale(total, 1.0 / numel);

    if lambda != 0.0 {
        for &w in weights {
            let abs = tape.abs(w);
            let l1 = tape.sum(abs);
            let scaled = tape.scale(l1, lambda);
            loss = tape.add(loss, scaled)?;
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn loss_value(y_true: &DenseMatrix, y_pred: &DenseMatrix, weights: &[DenseMatrix], lambda: f64) -> f64 {
        let mut tape = Tape::new();
        let p = tape.leaf(y_pred.clone());
        let t = tape.constant(y_true.clone());
        let ws: Vec<_> = weights.iter().map(|w| tape.leaf(w.clone())).collect();
        let loss = regularized_loss(&mut tape, p, t, &ws, lambda).unwrap();
        tape.value(loss).get(0, 0)
    }

    #[test]
    fn perfect_prediction_and_zero_weights_is_zero() {
        let y = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = DenseMatrix::zeros(3, 3);
        assert_eq!(loss_value(&y, &y, &[w], 0.0015), 0.0);
    }

    #[test]
    fn uniform_half_error_gives_quarter() {
        let y_true = DenseMatrix::filled(2, 3, 1.0);
        let y_pred = DenseMatrix::filled(2, 3, 0.5);
        assert_eq!(loss_value(&y_true, &y_pred, &[], 0.0015), 0.25);
    }

    #[test]
    fn matches_scalar_loop_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..50 {
            let (r, c) = (rng.random_range(1..6), rng.random_range(1..6));
            let y_true = DenseMatrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let y_pred = DenseMatrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let w = DenseMatrix::from_vec(2, 3, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let lambda = 0.0015;

            let mut expect = 0.0;
            for i in 0..r {
                for j in 0..c {
                    let e = y_true.get(i, j) - y_pred.get(i, j);
                    expect += e * e;
                }
            }
            expect /= (r * c) as f64;
            let mut reg = 0.0;
            for &v in w.values() {
                reg += v.abs();
            }
            expect += lambda * reg;

            let got = loss_value(&y_true, &y_pred, &[w], lambda);
            assert!((got - expect).abs() < 1e-12, "got {got}, expected {expect}");
        }
    }

    #[test]
    fn lambda_scaling_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let y_true = DenseMatrix::from_vec(2, 2, (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let y_pred = DenseMatrix::from_vec(2, 2, (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let w = DenseMatrix::from_vec(3, 2, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let lambda = 0.0015;
        let l1 = loss_value(&y_true, &y_pred, &[w.clone()], lambda);
        let l10 = loss_value(&y_true, &y_pred, &[w.clone()], 10.0 * lambda);
        let abs_sum = w.abs_sum();
        assert!((l10 - l1 - 9.0 * lambda * abs_sum).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_reduces_to_mse_and_loss_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..20 {
            let y_true = DenseMatrix::from_vec(3, 3, (0..9).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
            let y_pred = DenseMatrix::from_vec(3, 3, (0..9).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
            let w = DenseMatrix::from_vec(2, 2, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let with_reg = loss_value(&y_true, &y_pred, &[w], 0.0);
            let mse = y_true.sub(&y_pred).unwrap().sq_sum() / 9.0;
            assert!((with_reg - mse).abs() < 1e-12);
            assert!(with_reg >= 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut tape = Tape::new();
        let p = tape.leaf(DenseMatrix::zeros(2, 2));
        let t = tape.constant(DenseMatrix::zeros(2, 3));
        assert!(regularized_loss(&mut tape, p, t, &[], 0.0).is_err());
    }
}

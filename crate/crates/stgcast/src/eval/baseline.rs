use crate::tensor::Tensor3;

/// Historical Average baseline: the per-window per-detector input mean,
/// repeated across the whole horizon. Training-free and leakage-free by
/// construction. Zero-filled missing inputs are averaged in as zeros,
/// matching the cleaning rule applied to the data.
pub fn historical_average_forecast(x: &Tensor3, t_out: usize) -> Tensor3 {
    let (n, t_in, d) = x.dims();
    let mut out = Tensor3::zeros(n, t_out, d);
    for i in 0..n {
        for j in 0..d {
            let mut sum = 0.0;
            for t in 0..t_in {
                sum += x.get(i, t, j);
            }
            let mean = if t_in > 0 { sum / t_in as f64 } else { 0.0 };
            for t in 0..t_out {
                out.set(i, t, j, mean);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_predicts_the_constant() {
        let x = Tensor3::from_vec(1, 4, 2, vec![7.0; 8]).unwrap();
        let out = historical_average_forecast(&x, 3);
        assert!(out.values().iter().all(|&v| v == 7.0));
        assert_eq!(out.dims(), (1, 3, 2));
    }

    #[test]
    fn linear_ramp_predicts_the_midpoint() {
        // 1..=36 per detector -> mean 18.5 at every horizon.
        let mut x = Tensor3::zeros(1, 36, 2);
        for t in 0..36 {
            for j in 0..2 {
                x.set(0, t, j, (t + 1) as f64);
            }
        }
        let out = historical_average_forecast(&x, 12);
        for t in 0..12 {
            for j in 0..2 {
                assert_eq!(out.get(0, t, j), 18.5);
            }
        }
    }

    #[test]
    fn zero_filled_missing_inputs_count_as_zeros() {
        let x = Tensor3::from_vec(1, 2, 1, vec![0.0, 10.0]).unwrap();
        let out = historical_average_forecast(&x, 1);
        assert_eq!(out.get(0, 0, 0), 5.0);
    }

    #[test]
    fn translation_equivariance() {
        let x = Tensor3::from_vec(2, 3, 2, (0..12).map(|v| v as f64).collect()).unwrap();
        let shifted = x.map(|v| v + 11.25);
        let a = historical_average_forecast(&x, 4);
        let b = historical_average_forecast(&shifted, 4);
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((v - u - 11.25).abs() < 1e-12);
        }
    }
}

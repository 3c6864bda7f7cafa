use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Global min/max over the training split; used to map speeds into [0,1]
/// and back. Never computed over held-out data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min_v: f64,
    pub max_v: f64,
}

impl NormStats {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for v in values {
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        if !(max_v > min_v) {
            return Err(Error::Degenerate(format!(
                "normalization stats need max > min, got min={min_v}, max={max_v}"
            )));
        }
        Ok(NormStats { min_v, max_v })
    }

    #[inline]
    pub fn normalize_value(&self, x: f64) -> f64 {
        (x - self.min_v) / (self.max_v - self.min_v)
    }

    #[inline]
    pub fn denormalize_value(&self, y: f64) -> f64 {
        y * (self.max_v - self.min_v) + self.min_v
    }

    /// Values outside [min, max] map outside [0,1] and are left unclipped.
    pub fn normalize(&self, x: &Tensor3) -> Tensor3 {
        x.map(|v| self.normalize_value(v))
    }

    pub fn denormalize(&self, y: &Tensor3) -> Tensor3 {
        y.map(|v| self.denormalize_value(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn midpoint_maps_to_half() {
        let stats = NormStats { min_v: 0.0, max_v: 100.0 };
        assert_eq!(stats.normalize_value(50.0), 0.5);
    }

    #[test]
    fn stats_from_toy_split() {
        let stats = NormStats::from_values([10.0, 20.0, 40.0]).unwrap();
        assert_eq!(stats.min_v, 10.0);
        assert_eq!(stats.max_v, 40.0);
        assert_eq!(stats.normalize_value(25.0), 0.5);
    }

    #[test]
    fn round_trip_on_random_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let stats = NormStats { min_v: 17.5, max_v: 71.25 };
        let x = Tensor3::from_vec(3, 4, 5, (0..60).map(|_| rng.random_range(0.0..100.0)).collect()).unwrap();
        let back = stats.denormalize(&stats.normalize(&x));
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_values_stay_unclipped() {
        let stats = NormStats { min_v: 10.0, max_v: 20.0 };
        assert!(stats.normalize_value(25.0) > 1.0);
        assert!(stats.normalize_value(5.0) < 0.0);
    }

    #[test]
    fn degenerate_stats_rejected() {
        assert!(NormStats::from_values([3.0, 3.0]).is_err());
        assert!(NormStats::from_values(std::iter::empty()).is_err());
    }
}

//! Two-layer graph convolution: layer one mixes node features through the
//! normalized adjacency and applies relu, layer two is linear.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::{DenseMatrix, Tape, VarId};

/// Weights of the 2-layer graph convolution. Shapes chain
/// input-features -> gc_hidden -> gc_out.
#[derive(Clone, Debug)]
pub struct GcParams {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

impl GcParams {
    pub fn init(f_in: usize, gc_hidden: usize, gc_out: usize, rng: &mut ChaCha8Rng) -> Self {
        GcParams {
            w0: glorot_uniform(f_in, gc_hidden, rng),
            w1: glorot_uniform(gc_hidden, gc_out, rng),
        }
    }
}

/// Tape handles for one GcParams instance.
#[derive(Clone, Copy, Debug)]
pub struct BoundGc {
    pub w0: VarId,
    pub w1: VarId,
}

impl GcParams {
    pub fn bind(&self, tape: &mut Tape) -> BoundGc {
        BoundGc {
            w0: tape.leaf(self.w0.clone()),
            w1: tape.leaf(self.w1.clone()),
        }
    }
}

/// gc(x) = A_hat * relu(A_hat * x * w0) * w1 for node features x (D x F_in).
pub fn gc_forward(tape: &mut Tape, x: VarId, a_hat: VarId, p: &BoundGc) -> Result<VarId> {
    let mixed = tape.matmul(a_hat, x)?;
    let pre = tape.matmul(mixed, p.w0)?;
    let layer1 = tape.relu(pre);
    let mixed2 = tape.matmul(a_hat, layer1)?;
    tape.matmul(mixed2, p.w1)
}

/// Uniform init in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let values = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    DenseMatrix::from_vec(fan_in, fan_out, values).expect("consistent init shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DetectorGraph, NormalizedAdjacency};
    use rand::SeedableRng;

    #[test]
    fn identity_weights_pass_nonnegative_input_through() {
        let mut tape = Tape::new();
        let a_hat = tape.constant(DenseMatrix::identity(3));
        let x0 = DenseMatrix::from_rows(&[vec![0.5], vec![0.0], vec![2.0]]).unwrap();
        let x = tape.constant(x0.clone());
        let p = GcParams {
            w0: DenseMatrix::identity(1),
            w1: DenseMatrix::identity(1),
        };
        let bound = p.bind(&mut tape);
        let out = gc_forward(&mut tape, x, a_hat, &bound).unwrap();
        assert_eq!(tape.value(out), &x0);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut tape = Tape::new();
        let a_hat = tape.constant(DenseMatrix::filled(2, 2, 0.5));
        let x = tape.constant(DenseMatrix::from_rows(&[vec![3.0], vec![-1.0]]).unwrap());
        let p = GcParams {
            w0: DenseMatrix::zeros(1, 4),
            w1: DenseMatrix::zeros(4, 2),
        };
        let bound = p.bind(&mut tape);
        let out = gc_forward(&mut tape, x, a_hat, &bound).unwrap();
        assert!(tape.value(out).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_brute_force_on_clipped_path() {
        // 3-node path, k = 1, random x and weights.
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let g = DetectorGraph::new(vec!["a".into(), "b".into(), "c".into()], a).unwrap();
        let norm = NormalizedAdjacency::build(&g, 1).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let x0 = glorot_uniform(3, 2, &mut rng);
        let p = GcParams::init(2, 4, 3, &mut rng);

        let mut tape = Tape::new();
        let a_hat = tape.constant(norm.matrix().clone());
        let x = tape.constant(x0.clone());
        let bound = p.bind(&mut tape);
        let out = gc_forward(&mut tape, x, a_hat, &bound).unwrap();

        // Independent scalar-loop route.
        let layer1 = norm
            .matrix()
            .matmul(&x0)
            .unwrap()
            .matmul(&p.w0)
            .unwrap()
            .map(|v| v.max(0.0));
        let oracle = norm.matrix().matmul(&layer1).unwrap().matmul(&p.w1).unwrap();
        assert!(tape.value(out).sub(&oracle).unwrap().max_abs() < 1e-14);
    }
}

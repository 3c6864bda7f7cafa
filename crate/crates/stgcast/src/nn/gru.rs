//! Gated recurrent unit over row-wise states:
//!   u_t = sigmoid([x_t, h_prev] w_u + b_u)
//!   r_t = sigmoid([x_t, h_prev] w_r + b_r)
//!   c_t = tanh([x_t, r_t*h_prev] w_c + b_c)
//!   h_t = (1 - u_t)*c_t + u_t*h_prev

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::gc::glorot_uniform;
use crate::tensor::{DenseMatrix, Tape, VarId};

/// Gate weights ((f_in + hidden) x hidden) and 1 x hidden biases.
#[derive(Clone, Debug)]
pub struct GruParams {
    pub w_u: DenseMatrix,
    pub w_r: DenseMatrix,
    pub w_c: DenseMatrix,
    pub b_u: DenseMatrix,
    pub b_r: DenseMatrix,
    pub b_c: DenseMatrix,
}

impl GruParams {
    pub fn init(f_in: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let joint = f_in + hidden;
        GruParams {
            w_u: glorot_uniform(joint, hidden, rng),
            w_r: glorot_uniform(joint, hidden, rng),
            w_c: glorot_uniform(joint, hidden, rng),
            b_u: DenseMatrix::zeros(1, hidden),
            b_r: DenseMatrix::zeros(1, hidden),
            b_c: DenseMatrix::zeros(1, hidden),
        }
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundGru {
        BoundGru {
            w_u: tape.leaf(self.w_u.clone()),
            w_r: tape.leaf(self.w_r.clone()),
            w_c: tape.leaf(self.w_c.clone()),
            b_u: tape.leaf(self.b_u.clone()),
            b_r: tape.leaf(self.b_r.clone()),
            b_c: tape.leaf(self.b_c.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundGru {
    pub w_u: VarId,
    pub w_r: VarId,
    pub w_c: VarId,
    pub b_u: VarId,
    pub b_r: VarId,
    pub b_c: VarId,
}

/// One recurrence step; rows of `x_t` and `h_prev` must match.
pub fn gru_step(tape: &mut Tape, x_t: VarId, h_prev: VarId, p: &BoundGru) -> Result<VarId> {
    let joint = tape.concat_cols(x_t, h_prev)?;

    let u_pre = tape.matmul(joint, p.w_u)?;
    let u_pre = tape.add_bias(u_pre, p.b_u)?;
    let u = tape.sigmoid(u_pre);

    let r_pre = tape.matmul(joint, p.w_r)?;
    let r_pre = tape.add_bias(r_pre, p.b_r)?;
    let r = tape.sigmoid(r_pre);

    let gated_prev = tape.hadamard(r, h_prev)?;
    let joint_reset = tape.concat_cols(x_t, gated_prev)?;
    let c_pre = tape.matmul(joint_reset, p.w_c)?;
    let c_pre = tape.add_bias(c_pre, p.b_c)?;
    let c = tape.tanh(c_pre);

    let keep = tape.one_minus(u);
    let new_part = tape.hadamard(keep, c)?;
    let old_part = tape.hadamard(u, h_prev)?;
    tape.add(new_part, old_part)
}

//! Standard LSTM cell:
//!   i = sigmoid([x,h] w_i + b_i)    f = sigmoid([x,h] w_f + b_f)
//!   o = sigmoid([x,h] w_o + b_o)    c_hat = tanh([x,h] w_c + b_c)
//!   c = f*c_prev + i*c_hat          h = o*tanh(c)

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::gc::glorot_uniform;
use crate::tensor::{DenseMatrix, Tape, VarId};

#[derive(Clone, Debug)]
pub struct LstmParams {
    pub w_i: DenseMatrix,
    pub w_f: DenseMatrix,
    pub w_o: DenseMatrix,
    pub w_c: DenseMatrix,
    pub b_i: DenseMatrix,
    pub b_f: DenseMatrix,
    pub b_o: DenseMatrix,
    pub b_c: DenseMatrix,
}

impl LstmParams {
    pub fn init(f_in: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let joint = f_in + hidden;
        LstmParams {
            w_i: glorot_uniform(joint, hidden, rng),
            w_f: glorot_uniform(joint, hidden, rng),
            w_o: glorot_uniform(joint, hidden, rng),
            w_c: glorot_uniform(joint, hidden, rng),
            b_i: DenseMatrix::zeros(1, hidden),
            b_f: DenseMatrix::zeros(1, hidden),
            b_o: DenseMatrix::zeros(1, hidden),
            b_c: DenseMatrix::zeros(1, hidden),
        }
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundLstm {
        BoundLstm {
            w_i: tape.leaf(self.w_i.clone()),
            w_f: tape.leaf(self.w_f.clone()),
            w_o: tape.leaf(self.w_o.clone()),
            w_c: tape.leaf(self.w_c.clone()),
            b_i: tape.leaf(self.b_i.clone()),
            b_f: tape.leaf(self.b_f.clone()),
            b_o: tape.leaf(self.b_o.clone()),
            b_c: tape.leaf(self.b_c.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundLstm {
    pub w_i: VarId,
    pub w_f: VarId,
    pub w_o: VarId,
    pub w_c: VarId,
    pub b_i: VarId,
    pub b_f: VarId,
    pub b_o: VarId,
    pub b_c: VarId,
}

/// One step; returns (h, c).
pub fn lstm_step(
    tape: &mut Tape,
    x_t: VarId,
    h_prev: VarId,
    c_prev: VarId,
    p: &BoundLstm,
) -> Result<(VarId, VarId)> {
    let joint = tape.concat_cols(x_t, h_prev)?;

    let gate = |tape: &mut Tape, w: VarId, b: VarId| -> Result<VarId> {
        let pre = tape.matmul(joint, w)?;
        tape.add_bias(pre, b)
    };

    let i_pre = gate(tape, p.w_i, p.b_i)?;
    let i = tape.sigmoid(i_pre);
    let f_pre = gate(tape, p.w_f, p.b_f)?;
    let f = tape.sigmoid(f_pre);
    let o_pre = gate(tape, p.w_o, p.b_o)?;
    let o = tape.sigmoid(o_pre);
    let c_hat_pre = gate(tape, p.w_c, p.b_c)?;
    let c_hat = tape.tanh(c_hat_pre);

    let kept = tape.hadamard(f, c_prev)?;
    let added = tape.hadamard(i, c_hat)?;
    let c = tape.add(kept, added)?;
    let c_act = tape.tanh(c);
    let h = tape.hadamard(o, c_act)?;
    Ok((h, c))
}

//! Encoder-decoder forecasting models. The graph-convolutional GRU keeps a
//! per-detector hidden state through the recurrence and pools it only at the
//! dense output head; the LSTM baseline runs a single row state over raw
//! frames with a linear head.

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::nn::gc::{gc_forward, glorot_uniform, BoundGc, GcParams};
use crate::nn::gru::{gru_step, BoundGru, GruParams};
use crate::nn::lstm::{lstm_step, BoundLstm, LstmParams};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{DenseMatrix, Tape, Tensor3, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub t_in: usize,
    pub t_out: usize,
    pub d: usize,
}

/// Common surface the trainer needs: named parameters, a way to register
/// them on a tape, and a differentiable per-sample forward pass producing a
/// (t_out x d) prediction.
pub trait ForecastModel: Clone {
    type Bound;

    fn kind(&self) -> &'static str;
    fn dims(&self) -> ModelDims;
    fn param_names(&self) -> &'static [&'static str];
    fn param(&self, name: &str) -> &DenseMatrix;
    fn param_mut(&mut self, name: &str) -> &mut DenseMatrix;
    /// Every parameter as a simultaneous mutable borrow, in
    /// `param_names()` order (the optimizer state is aligned with it).
    fn params_mut_all(&mut self) -> Vec<&mut DenseMatrix>;
    /// Biases are excluded from L1 regularization by default.
    fn is_bias(&self, name: &str) -> bool {
        name.contains("b_") || name == "b_out"
    }
    fn bind(&self, tape: &mut Tape) -> Self::Bound;
    fn bound_param(bound: &Self::Bound, name: &str) -> VarId;
    fn forward_sample(&self, tape: &mut Tape, bound: &Self::Bound, x: &DenseMatrix) -> Result<VarId>;
}

/// Batch inference: per-sample forward passes on throwaway tapes.
pub fn model_forward<M: ForecastModel>(model: &M, batch: &Tensor3) -> Result<Tensor3> {
    let dims = model.dims();
    if batch.n() > 0 && (batch.t() != dims.t_in || batch.d() != dims.d) {
        return Err(Error::shape(
            "model_forward",
            format!("{}x{}x{}", batch.n(), batch.t(), batch.d()),
            format!("Nx{}x{}", dims.t_in, dims.d),
        ));
    }
    let mut out = Tensor3::zeros(batch.n(), dims.t_out, dims.d);
    for i in 0..batch.n() {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let pred = model.forward_sample(&mut tape, &bound, &batch.sample(i))?;
        out.set_sample(i, tape.value(pred))?;
    }
    Ok(out)
}

// ── GC-GRU encoder-decoder ───────────────────────────────────────────

pub const GCGRU_PARAM_NAMES: [&str; 18] = [
    "enc_gc_w0",
    "enc_gc_w1",
    "dec_gc_w0",
    "dec_gc_w1",
    "enc_gru_w_u",
    "enc_gru_w_r",
    "enc_gru_w_c",
    "enc_gru_b_u",
    "enc_gru_b_r",
    "enc_gru_b_c",
    "dec_gru_w_u",
    "dec_gru_w_r",
    "dec_gru_w_c",
    "dec_gru_b_u",
    "dec_gru_b_r",
    "dec_gru_b_c",
    "w_out",
    "b_out",
];

#[derive(Clone, Debug)]
pub struct GcGruModel {
    a_hat: NormalizedAdjacency,
    pub enc_gc: GcParams,
    pub dec_gc: GcParams,
    pub enc_gru: GruParams,
    pub dec_gru: GruParams,
    pub w_out: DenseMatrix,
    pub b_out: DenseMatrix,
    t_in: usize,
    t_out: usize,
    hidden: usize,
    gc_hidden: usize,
    gc_out: usize,
}

pub struct BoundGcGru {
    a_hat: VarId,
    enc_gc: BoundGc,
    dec_gc: BoundGc,
    enc_gru: BoundGru,
    dec_gru: BoundGru,
    w_out: VarId,
    b_out: VarId,
}

impl BoundGcGru {
    pub fn a_hat_id(&self) -> VarId {
        self.a_hat
    }

    pub fn enc_gc_bound(&self) -> BoundGc {
        self.enc_gc
    }

    pub fn dec_gc_bound(&self) -> BoundGc {
        self.dec_gc
    }

    pub fn enc_gru_bound(&self) -> BoundGru {
        self.enc_gru
    }

    pub fn dec_gru_bound(&self) -> BoundGru {
        self.dec_gru
    }

    pub fn w_out_id(&self) -> VarId {
        self.w_out
    }

    pub fn b_out_id(&self) -> VarId {
        self.b_out
    }
}

impl GcGruModel {
    /// Per-frame node features are scalar speeds, so the first GC layer maps
    /// feature width 1 -> gc_hidden.
    pub fn new(
        a_hat: NormalizedAdjacency,
        t_in: usize,
        t_out: usize,
        hidden: usize,
        gc_hidden: usize,
        gc_out: usize,
        seed: u64,
    ) -> Self {
        let d = a_hat.side();
        let mut rng = stream_rng(seed, Stream::Init);
        GcGruModel {
            a_hat,
            enc_gc: GcParams::init(1, gc_hidden, gc_out, &mut rng),
            dec_gc: GcParams::init(1, gc_hidden, gc_out, &mut rng),
            enc_gru: GruParams::init(gc_out, hidden, &mut rng),
            dec_gru: GruParams::init(gc_out, hidden, &mut rng),
            w_out: glorot_uniform(t_out * hidden, t_out * d, &mut rng),
            b_out: DenseMatrix::zeros(1, t_out * d),
            t_in,
            t_out,
            hidden,
            gc_hidden,
            gc_out,
        }
    }

    pub fn a_hat(&self) -> &NormalizedAdjacency {
        &self.a_hat
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn gc_hidden(&self) -> usize {
        self.gc_hidden
    }

    pub fn gc_out(&self) -> usize {
        self.gc_out
    }

    fn d(&self) -> usize {
        self.a_hat.side()
    }

    fn frame_as_column(&self, tape: &mut Tape, x: &DenseMatrix, t: usize) -> VarId {
        let d = self.d();
        let mut col = DenseMatrix::zeros(d, 1);
        for j in 0..d {
            col.set(j, 0, x.get(t, j));
        }
        tape.constant(col)
    }

    /// Runs the encoder over a (t_in x d) window; returns the final (d x
    /// hidden) state.
    pub fn encode(&self, tape: &mut Tape, bound: &BoundGcGru, x: &DenseMatrix) -> Result<VarId> {
        if x.shape() != (self.t_in, self.d()) {
            return Err(Error::shape(
                "encode",
                x.dims(),
                format!("{}x{}", self.t_in, self.d()),
            ));
        }
        let mut h = tape.constant(DenseMatrix::zeros(self.d(), self.hidden));
        for t in 0..self.t_in {
            let frame = self.frame_as_column(tape, x, t);
            let g = gc_forward(tape, frame, bound.a_hat, &bound.enc_gc)?;
            h = gru_step(tape, g, h, &bound.enc_gru)?;
        }
        Ok(h)
    }

    /// Unrolls the decoder from the encoded state. The first decoder input
    /// is the last observed frame; later steps feed back the step's own
    /// preliminary prediction (the matching block of the output head), so
    /// training and inference behave identically. The final prediction comes
    /// from the full dense head over all pooled decoder states.
    pub fn decode(&self, tape: &mut Tape, bound: &BoundGcGru, h_enc: VarId, last_frame: VarId) -> Result<VarId> {
        let (d, hidden, t_out) = (self.d(), self.hidden, self.t_out);
        let mut h = h_enc;
        let mut feed = last_frame;
        let mut flat: Option<VarId> = None;
        for j in 0..t_out {
            let g = gc_forward(tape, feed, bound.a_hat, &bound.dec_gc)?;
            h = gru_step(tape, g, h, &bound.dec_gru)?;
            let pooled = tape.mean_rows(h);
            flat = Some(match flat {
                None => pooled,
                Some(acc) => tape.concat_cols(acc, pooled)?,
            });
            if j + 1 < t_out {
                let w_j = tape.slice_block(bound.w_out, j * hidden, j * d, hidden, d)?;
                let b_j = tape.slice_block(bound.b_out, 0, j * d, 1, d)?;
                let pre = tape.matmul(pooled, w_j)?;
                let pre = tape.add(pre, b_j)?;
                let frame = tape.sigmoid(pre);
                feed = tape.transpose(frame);
            }
        }
        let flat = flat.expect("t_out >= 1");
        let pre = tape.matmul(flat, bound.w_out)?;
        let pre = tape.add(pre, bound.b_out)?;
        let activated = tape.sigmoid(pre);
        tape.reshape(activated, t_out, d)
    }
}

impl ForecastModel for GcGruModel {
    type Bound = BoundGcGru;

    fn kind(&self) -> &'static str {
        "gc-gru-n"
    }

    fn dims(&self) -> ModelDims {
        ModelDims {
            t_in: self.t_in,
            t_out: self.t_out,
            d: self.d(),
        }
    }

    fn param_names(&self) -> &'static [&'static str] {
        &GCGRU_PARAM_NAMES
    }

    fn param(&self, name: &str) -> &DenseMatrix {
        match name {
            "enc_gc_w0" => &self.enc_gc.w0,
            "enc_gc_w1" => &self.enc_gc.w1,
            "dec_gc_w0" => &self.dec_gc.w0,
            "dec_gc_w1" => &self.dec_gc.w1,
            "enc_gru_w_u" => &self.enc_gru.w_u,
            "enc_gru_w_r" => &self.enc_gru.w_r,
            "enc_gru_w_c" => &self.enc_gru.w_c,
            "enc_gru_b_u" => &self.enc_gru.b_u,
            "enc_gru_b_r" => &self.enc_gru.b_r,
            "enc_gru_b_c" => &self.enc_gru.b_c,
            "dec_gru_w_u" => &self.dec_gru.w_u,
            "dec_gru_w_r" => &self.dec_gru.w_r,
            "dec_gru_w_c" => &self.dec_gru.w_c,
            "dec_gru_b_u" => &self.dec_gru.b_u,
            "dec_gru_b_r" => &self.dec_gru.b_r,
            "dec_gru_b_c" => &self.dec_gru.b_c,
            "w_out" => &self.w_out,
            "b_out" => &self.b_out,
            _ => panic!("unknown gc-gru parameter {name:?}"),
        }
    }

    fn param_mut(&mut self, name: &str) -> &mut DenseMatrix {
        match name {
            "enc_gc_w0" => &mut self.enc_gc.w0,
            "enc_gc_w1" => &mut self.enc_gc.w1,
            "dec_gc_w0" => &mut self.dec_gc.w0,
            "dec_gc_w1" => &mut self.dec_gc.w1,
            "enc_gru_w_u" => &mut self.enc_gru.w_u,
            "enc_gru_w_r" => &mut self.enc_gru.w_r,
            "enc_gru_w_c" => &mut self.enc_gru.w_c,
            "enc_gru_b_u" => &mut self.enc_gru.b_u,
            "enc_gru_b_r" => &mut self.enc_gru.b_r,
            "enc_gru_b_c" => &mut self.enc_gru.b_c,
            "dec_gru_w_u" => &mut self.dec_gru.w_u,
            "dec_gru_w_r" => &mut self.dec_gru.w_r,
            "dec_gru_w_c" => &mut self.dec_gru.w_c,
            "dec_gru_b_u" => &mut self.dec_gru.b_u,
            "dec_gru_b_r" => &mut self.dec_gru.b_r,
            "dec_gru_b_c" => &mut self.dec_gru.b_c,
            "w_out" => &mut self.w_out,
            "b_out" => &mut self.b_out,
            _ => panic!("unknown gc-gru parameter {name:?}"),
        }
    }

    fn params_mut_all(&mut self) -> Vec<&mut DenseMatrix> {
        vec![
            &mut self.enc_gc.w0,
            &mut self.enc_gc.w1,
            &mut self.dec_gc.w0,
            &mut self.dec_gc.w1,
            &mut self.enc_gru.w_u,
            &mut self.enc_gru.w_r,
            &mut self.enc_gru.w_c,
            &mut self.enc_gru.b_u,
            &mut self.enc_gru.b_r,
            &mut self.enc_gru.b_c,
            &mut self.dec_gru.w_u,
            &mut self.dec_gru.w_r,
            &mut self.dec_gru.w_c,
            &mut self.dec_gru.b_u,
            &mut self.dec_gru.b_r,
            &mut self.dec_gru.b_c,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    fn bind(&self, tape: &mut Tape) -> BoundGcGru {
        BoundGcGru {
            a_hat: tape.constant(self.a_hat.matrix().clone()),
            enc_gc: self.enc_gc.bind(tape),
            dec_gc: self.dec_gc.bind(tape),
            enc_gru: self.enc_gru.bind(tape),
            dec_gru: self.dec_gru.bind(tape),
            w_out: tape.leaf(self.w_out.clone()),
            b_out: tape.leaf(self.b_out.clone()),
        }
    }

    fn bound_param(bound: &BoundGcGru, name: &str) -> VarId {
        match name {
            "enc_gc_w0" => bound.enc_gc.w0,
            "enc_gc_w1" => bound.enc_gc.w1,
            "dec_gc_w0" => bound.dec_gc.w0,
            "dec_gc_w1" => bound.dec_gc.w1,
            "enc_gru_w_u" => bound.enc_gru.w_u,
            "enc_gru_w_r" => bound.enc_gru.w_r,
            "enc_gru_w_c" => bound.enc_gru.w_c,
            "enc_gru_b_u" => bound.enc_gru.b_u,
            "enc_gru_b_r" => bound.enc_gru.b_r,
            "enc_gru_b_c" => bound.enc_gru.b_c,
            "dec_gru_w_u" => bound.dec_gru.w_u,
            "dec_gru_w_r" => bound.dec_gru.w_r,
            "dec_gru_w_c" => bound.dec_gru.w_c,
            "dec_gru_b_u" => bound.dec_gru.b_u,
            "dec_gru_b_r" => bound.dec_gru.b_r,
            "dec_gru_b_c" => bound.dec_gru.b_c,
            "w_out" => bound.w_out,
            "b_out" => bound.b_out,
            _ => panic!("unknown gc-gru parameter {name:?}"),
        }
    }

    fn forward_sample(&self, tape: &mut Tape, bound: &BoundGcGru, x: &DenseMatrix) -> Result<VarId> {
        let h_enc = self.encode(tape, bound, x)?;
        let last_frame = self.frame_as_column(tape, x, self.t_in - 1);
        self.decode(tape, bound, h_enc, last_frame)
    }
}

// ── LSTM baseline ────────────────────────────────────────────────────

pub const LSTM_PARAM_NAMES: [&str; 10] = [
    "w_i", "w_f", "w_o", "w_c", "b_i", "b_f", "b_o", "b_c", "w_out", "b_out",
];

/// Sequence-to-sequence LSTM over raw frames. One cell is shared between
/// the encoding and decoding phases; the output head is linear, so
/// predictions are clipped to the normalized range only at metric time.
#[derive(Clone, Debug)]
pub struct LstmModel {
    pub cell: LstmParams,
    pub w_out: DenseMatrix,
    pub b_out: DenseMatrix,
    t_in: usize,
    t_out: usize,
    d: usize,
    hidden: usize,
}

pub struct BoundLstmModel {
    cell: BoundLstm,
    w_out: VarId,
    b_out: VarId,
}

impl LstmModel {
    pub fn new(d: usize, t_in: usize, t_out: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Init);
        LstmModel {
            cell: LstmParams::init(d, hidden, &mut rng),
            w_out: glorot_uniform(t_out * hidden, t_out * d, &mut rng),
            b_out: DenseMatrix::zeros(1, t_out * d),
            t_in,
            t_out,
            d,
            hidden,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }
}

impl ForecastModel for LstmModel {
    type Bound = BoundLstmModel;

    fn kind(&self) -> &'static str {
        "lstm"
    }

    fn dims(&self) -> ModelDims {
        ModelDims {
            t_in: self.t_in,
            t_out: self.t_out,
            d: self.d,
        }
    }

    fn param_names(&self) -> &'static [&'static str] {
        &LSTM_PARAM_NAMES
    }

    fn param(&self, name: &str) -> &DenseMatrix {
        match name {
            "w_i" => &self.cell.w_i,
            "w_f" => &self.cell.w_f,
            "w_o" => &self.cell.w_o,
            "w_c" => &self.cell.w_c,
            "b_i" => &self.cell.b_i,
            "b_f" => &self.cell.b_f,
            "b_o" => &self.cell.b_o,
            "b_c" => &self.cell.b_c,
            "w_out" => &self.w_out,
            "b_out" => &self.b_out,
            _ => panic!("unknown lstm parameter {name:?}"),
        }
    }

    fn param_mut(&mut self, name: &str) -> &mut DenseMatrix {
        match name {
            "w_i" => &mut self.cell.w_i,
            "w_f" => &mut self.cell.w_f,
            "w_o" => &mut self.cell.w_o,
            "w_c" => &mut self.cell.w_c,
            "b_i" => &mut self.cell.b_i,
            "b_f" => &mut self.cell.b_f,
            "b_o" => &mut self.cell.b_o,
            "b_c" => &mut self.cell.b_c,
            "w_out" => &mut self.w_out,
            "b_out" => &mut self.b_out,
            _ => panic!("unknown lstm parameter {name:?}"),
        }
    }

    fn params_mut_all(&mut self) -> Vec<&mut DenseMatrix> {
        vec![
            &mut self.cell.w_i,
            &mut self.cell.w_f,
            &mut self.cell.w_o,
            &mut self.cell.w_c,
            &mut self.cell.b_i,
            &mut self.cell.b_f,
            &mut self.cell.b_o,
            &mut self.cell.b_c,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    fn bind(&self, tape: &mut Tape) -> BoundLstmModel {
        BoundLstmModel {
            cell: self.cell.bind(tape),
            w_out: tape.leaf(self.w_out.clone()),
            b_out: tape.leaf(self.b_out.clone()),
        }
    }

    fn bound_param(bound: &BoundLstmModel, name: &str) -> VarId {
        match name {
            "w_i" => bound.cell.w_i,
            "w_f" => bound.cell.w_f,
            "w_o" => bound.cell.w_o,
            "w_c" => bound.cell.w_c,
            "b_i" => bound.cell.b_i,
            "b_f" => bound.cell.b_f,
            "b_o" => bound.cell.b_o,
            "b_c" => bound.cell.b_c,
            "w_out" => bound.w_out,
            "b_out" => bound.b_out,
            _ => panic!("unknown lstm parameter {name:?}"),
        }
    }

    fn forward_sample(&self, tape: &mut Tape, bound: &BoundLstmModel, x: &DenseMatrix) -> Result<VarId> {
        if x.shape() != (self.t_in, self.d) {
            return Err(Error::shape(
                "lstm_forward",
                x.dims(),
                format!("{}x{}", self.t_in, self.d),
            ));
        }
        let (d, hidden, t_out) = (self.d, self.hidden, self.t_out);
        let mut h = tape.constant(DenseMatrix::zeros(1, hidden));
        let mut c = tape.constant(DenseMatrix::zeros(1, hidden));
        for t in 0..self.t_in {
            let frame = tape.constant(DenseMatrix::from_vec(1, d, x.row(t).to_vec())?);
            let (nh, nc) = lstm_step(tape, frame, h, c, &bound.cell)?;
            h = nh;
            c = nc;
        }
        let mut feed = tape.constant(DenseMatrix::from_vec(1, d, x.row(self.t_in - 1).to_vec())?);
        let mut flat: Option<VarId> = None;
        for j in 0..t_out {
            let (nh, nc) = lstm_step(tape, feed, h, c, &bound.cell)?;
            h = nh;
            c = nc;
            flat = Some(match flat {
                None => h,
                Some(acc) => tape.concat_cols(acc, h)?,
            });
            if j + 1 < t_out {
                let w_j = tape.slice_block(bound.w_out, j * hidden, j * d, hidden, d)?;
                let b_j = tape.slice_block(bound.b_out, 0, j * d, 1, d)?;
                let pre = tape.matmul(h, w_j)?;
                feed = tape.add(pre, b_j)?;
            }
        }
        let flat = flat.expect("t_out >= 1");
        let pre = tape.matmul(flat, bound.w_out)?;
        let out = tape.add(pre, bound.b_out)?;
        tape.reshape(out, t_out, d)
    }
}

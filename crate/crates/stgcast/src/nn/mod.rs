//! The model zoo: 2-layer graph convolution, GC-GRU recurrent cell, a
//! standard LSTM cell, and the encoder-decoder sequence models built on
//! them.

pub mod checkpoint;
mod gc;
mod gru;
mod lstm;
mod model;

pub use checkpoint::{Checkpoint, NamedMatrix, CHECKPOINT_MAGIC};
pub use gc::{gc_forward, glorot_uniform, BoundGc, GcParams};
pub use gru::{gru_step, BoundGru, GruParams};
pub use lstm::{lstm_step, BoundLstm, LstmParams};
pub use model::{
    model_forward, BoundGcGru, BoundLstmModel, ForecastModel, GcGruModel, LstmModel, ModelDims,
    GCGRU_PARAM_NAMES, LSTM_PARAM_NAMES,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DetectorGraph, NormalizedAdjacency};
    use crate::tensor::{DenseMatrix, Tape, Tensor3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring_a_hat(d: usize) -> NormalizedAdjacency {
        NormalizedAdjacency::build(&DetectorGraph::ring(d).unwrap(), 1).unwrap()
    }

    fn toy_model(d: usize, t_in: usize, t_out: usize, hidden: usize, seed: u64) -> GcGruModel {
        GcGruModel::new(ring_a_hat(d), t_in, t_out, hidden, 3, 2, seed)
    }

    fn zeroed(mut model: GcGruModel) -> GcGruModel {
        for name in GCGRU_PARAM_NAMES {
            model.param_mut(name).fill(0.0);
        }
        model
    }

    fn random_window(rng: &mut ChaCha8Rng, t: usize, d: usize) -> DenseMatrix {
        DenseMatrix::from_vec(t, d, (0..t * d).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn encoder_of_zero_input_and_zero_weights_is_zero() {
        let model = zeroed(toy_model(4, 5, 2, 3, 1));
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let x = DenseMatrix::zeros(5, 4);
        let h = model.encode(&mut tape, &bound, &x).unwrap();
        assert!(tape.value(h).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_encoder_equals_one_cell_application() {
        let model = toy_model(4, 1, 2, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_window(&mut rng, 1, 4);

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let h = model.encode(&mut tape, &bound, &x).unwrap();

        // Manual composition: gc_forward on the frame, then one gru_step
        // from the zero state.
        let mut tape2 = Tape::new();
        let bound2 = model.bind(&mut tape2);
        let mut col = DenseMatrix::zeros(4, 1);
        for j in 0..4 {
            col.set(j, 0, x.get(0, j));
        }
        let frame = tape2.constant(col);
        let g = gc_forward(&mut tape2, frame, bound2.a_hat_id(), &bound2.enc_gc_bound()).unwrap();
        let h0 = tape2.constant(DenseMatrix::zeros(4, 3));
        let manual = gru_step(&mut tape2, g, h0, &bound2.enc_gru_bound()).unwrap();

        assert_eq!(tape.value(h), tape2.value(manual));
    }

    #[test]
    fn three_step_encoder_matches_manual_composition() {
        let model = toy_model(3, 3, 2, 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_window(&mut rng, 3, 3);

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let h = model.encode(&mut tape, &bound, &x).unwrap();

        let mut tape2 = Tape::new();
        let bound2 = model.bind(&mut tape2);
        let mut state = tape2.constant(DenseMatrix::zeros(3, 4));
        for t in 0..3 {
            let mut col = DenseMatrix::zeros(3, 1);
            for j in 0..3 {
                col.set(j, 0, x.get(t, j));
            }
            let frame = tape2.constant(col);
            let g = gc_forward(&mut tape2, frame, bound2.a_hat_id(), &bound2.enc_gc_bound()).unwrap();
            state = gru_step(&mut tape2, g, state, &bound2.enc_gru_bound()).unwrap();
        }
        assert_eq!(tape.value(h), tape2.value(state));
    }

    #[test]
    fn zero_weights_predict_one_half_everywhere() {
        let model = zeroed(toy_model(4, 3, 2, 3, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = Tensor3::from_vec(1, 3, 4, (0..12).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let out = model_forward(&model, &batch).unwrap();
        for &v in out.values() {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn paper_scale_output_shape() {
        let model = toy_model(87, 36, 12, 8, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let batch = Tensor3::from_vec(1, 36, 87, (0..36 * 87).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let out = model_forward(&model, &batch).unwrap();
        assert_eq!(out.dims(), (1, 12, 87));
    }

    #[test]
    fn single_step_decoder_is_one_dense_sigmoid_map() {
        // With t_out = 1 the prediction must equal
        // sigmoid(mean_rows(h_1) * w_out + b_out).
        let model = toy_model(4, 2, 1, 3, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_window(&mut rng, 2, 4);

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let pred = model.forward_sample(&mut tape, &bound, &x).unwrap();

        let mut tape2 = Tape::new();
        let bound2 = model.bind(&mut tape2);
        let h_enc = model.encode(&mut tape2, &bound2, &x).unwrap();
        let mut col = DenseMatrix::zeros(4, 1);
        for j in 0..4 {
            col.set(j, 0, x.get(1, j));
        }
        let last = tape2.constant(col);
        let g = gc_forward(&mut tape2, last, bound2.a_hat_id(), &bound2.dec_gc_bound()).unwrap();
        let h1 = gru_step(&mut tape2, g, h_enc, &bound2.dec_gru_bound()).unwrap();
        let pooled = tape2.mean_rows(h1);
        let w = bound2.w_out_id();
        let b = bound2.b_out_id();
        let pre = tape2.matmul(pooled, w).unwrap();
        let pre = tape2.add(pre, b).unwrap();
        let manual = tape2.sigmoid(pre);

        assert_eq!(tape.value(pred).values(), tape2.value(manual).values());
    }

    #[test]
    fn decoder_outputs_stay_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for seed in 0..5 {
            let model = toy_model(5, 4, 3, 4, seed);
            let batch = Tensor3::from_vec(2, 4, 5, (0..40).map(|_| rng.random_range(-1.0..2.0)).collect()).unwrap();
            let out = model_forward(&model, &batch).unwrap();
            for &v in out.values() {
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn empty_batch_yields_empty_output() {
        let model = toy_model(4, 3, 2, 3, 1);
        let batch = Tensor3::zeros(0, 3, 4);
        let out = model_forward(&model, &batch).unwrap();
        assert_eq!(out.dims(), (0, 2, 4));
    }

    #[test]
    fn batch_forward_equals_independent_single_forwards_and_permutes() {
        let model = toy_model(4, 3, 2, 3, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let batch = Tensor3::from_vec(2, 3, 4, (0..24).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let out = model_forward(&model, &batch).unwrap();

        let single0 = model_forward(&model, &Tensor3::from_vec(1, 3, 4, batch.sample(0).values().to_vec()).unwrap()).unwrap();
        let single1 = model_forward(&model, &Tensor3::from_vec(1, 3, 4, batch.sample(1).values().to_vec()).unwrap()).unwrap();
        assert_eq!(out.sample(0), single0.sample(0));
        assert_eq!(out.sample(1), single1.sample(0));

        // Swapping the samples swaps the outputs.
        let mut swapped_values = batch.sample(1).values().to_vec();
        swapped_values.extend_from_slice(batch.sample(0).values());
        let swapped = Tensor3::from_vec(2, 3, 4, swapped_values).unwrap();
        let out_swapped = model_forward(&model, &swapped).unwrap();
        assert_eq!(out_swapped.sample(0), out.sample(1));
        assert_eq!(out_swapped.sample(1), out.sample(0));
    }

    #[test]
    fn forward_is_deterministic() {
        let model = toy_model(4, 3, 2, 3, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let batch = Tensor3::from_vec(3, 3, 4, (0..36).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let a = model_forward(&model, &batch).unwrap();
        let b = model_forward(&model, &batch).unwrap();
        assert_eq!(a.values(), b.values());
    }

    // Relabeling detectors by a permutation (applied to the adjacency, the
    // input columns, and the detector-indexed blocks of the output head)
    // permutes the model output identically.
    #[test]
    fn detector_relabeling_equivariance() {
        let d = 5;
        let (t_in, t_out, hidden) = (4, 3, 4);
        let model = toy_model(d, t_in, t_out, hidden, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let x = random_window(&mut rng, t_in, d);
        let perm: Vec<usize> = vec![2, 0, 4, 1, 3];

        // Permute the graph and rebuild A_hat from it.
        let base = DetectorGraph::ring(d).unwrap();
        let mut padj = DenseMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                padj.set(i, j, base.adjacency().get(perm[i], perm[j]));
            }
        }
        let ids: Vec<String> = perm.iter().map(|&i| base.node_ids()[i].clone()).collect();
        let pgraph = DetectorGraph::new(ids, padj).unwrap();
        let pa_hat = NormalizedAdjacency::build(&pgraph, 1).unwrap();

        let mut pmodel = GcGruModel::new(pa_hat, t_in, t_out, hidden, 3, 2, 23);
        for name in GCGRU_PARAM_NAMES {
            *pmodel.param_mut(name) = model.param(name).clone();
        }
        // Output head columns are detector-indexed per t_out block.
        let w = model.param("w_out");
        let b = model.param("b_out");
        let mut pw = w.clone();
        let mut pb = b.clone();
        for block in 0..t_out {
            for col in 0..d {
                let src = block * d + perm[col];
                let dst = block * d + col;
                for row in 0..w.rows() {
                    pw.set(row, dst, w.get(row, src));
                }
                pb.set(0, dst, b.get(0, src));
            }
        }
        *pmodel.param_mut("w_out") = pw;
        *pmodel.param_mut("b_out") = pb;

        // Permute input columns.
        let mut px = DenseMatrix::zeros(t_in, d);
        for t in 0..t_in {
            for j in 0..d {
                px.set(t, j, x.get(t, perm[j]));
            }
        }

        let out = model_forward(&model, &Tensor3::from_vec(1, t_in, d, x.values().to_vec()).unwrap()).unwrap();
        let pout = model_forward(&pmodel, &Tensor3::from_vec(1, t_in, d, px.values().to_vec()).unwrap()).unwrap();

        for t in 0..t_out {
            for j in 0..d {
                let diff = (pout.get(0, t, j) - out.get(0, t, perm[j])).abs();
                assert!(diff < 1e-10, "equivariance violated at ({t},{j}): {diff}");
            }
        }
    }
}

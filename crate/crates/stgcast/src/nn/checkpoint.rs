//! Model checkpoint file: a single JSON document with a version magic,
//! config echo, normalization stats, and every parameter matrix under a
//! shape header.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::nn::model::{ForecastModel, GcGruModel, LstmModel};
use crate::tensor::DenseMatrix;
use crate::train::NormStats;

pub const CHECKPOINT_MAGIC: &str = "STGCAST-CKPT-1";

#[derive(Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: DenseMatrix,
}

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub magic: String,
    pub model_kind: String,
    pub t_in: usize,
    pub t_out: usize,
    pub d: usize,
    pub hidden: usize,
    pub gc_hidden: Option<usize>,
    pub gc_out: Option<usize>,
    pub k_hops: Option<usize>,
    pub seed: u64,
    pub norm: NormStats,
    pub detector_ids: Vec<String>,
    pub a_hat: Option<DenseMatrix>,
    pub params: Vec<NamedMatrix>,
}

fn collect_params<M: ForecastModel>(model: &M) -> Vec<NamedMatrix> {
    model
        .param_names()
        .iter()
        .map(|name| NamedMatrix {
            name: name.to_string(),
            matrix: model.param(name).clone(),
        })
        .collect()
}

impl Checkpoint {
    pub fn from_gcgru(model: &GcGruModel, norm: NormStats, seed: u64, detector_ids: Vec<String>) -> Self {
        let dims = model.dims();
        Checkpoint {
            magic: CHECKPOINT_MAGIC.to_string(),
            model_kind: model.kind().to_string(),
            t_in: dims.t_in,
            t_out: dims.t_out,
            d: dims.d,
            hidden: model.hidden(),
            gc_hidden: Some(model.gc_hidden()),
            gc_out: Some(model.gc_out()),
            k_hops: Some(model.a_hat().k_hops()),
            seed,
            norm,
            detector_ids,
            a_hat: Some(model.a_hat().matrix().clone()),
            params: collect_params(model),
        }
    }

    pub fn from_lstm(model: &LstmModel, norm: NormStats, seed: u64, detector_ids: Vec<String>) -> Self {
        let dims = model.dims();
        Checkpoint {
            magic: CHECKPOINT_MAGIC.to_string(),
            model_kind: model.kind().to_string(),
            t_in: dims.t_in,
            t_out: dims.t_out,
            d: dims.d,
            hidden: model.hidden(),
            gc_hidden: None,
            gc_out: None,
            k_hops: None,
            seed,
            norm,
            detector_ids,
            a_hat: None,
            params: collect_params(model),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = serde_json::to_vec(self)?;
        crate::fsutil::atomic_write(path, &bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read checkpoint {}: {e}", path.display()))
        })?;
        let ckpt: Checkpoint = serde_json::from_slice(&bytes)?;
        if ckpt.magic != CHECKPOINT_MAGIC {
            return Err(Error::Config(format!(
                "checkpoint magic {:?} does not match {CHECKPOINT_MAGIC:?}",
                ckpt.magic
            )));
        }
        Ok(ckpt)
    }

    fn apply_params<M: ForecastModel>(&self, model: &mut M) -> Result<()> {
        for name in model.param_names() {
            let stored = self
                .params
                .iter()
                .find(|p| p.name == *name)
                .ok_or_else(|| Error::Config(format!("checkpoint missing parameter {name:?}")))?;
            let slot = model.param_mut(name);
            if slot.shape() != stored.matrix.shape() {
                return Err(Error::Incompatible {
                    expected: format!("{name} {}", slot.dims()),
                    actual: stored.matrix.dims(),
                });
            }
            *slot = stored.matrix.clone();
        }
        Ok(())
    }

    pub fn into_gcgru(&self) -> Result<(GcGruModel, NormStats)> {
        if self.model_kind != "gc-gru-n" {
            return Err(Error::Config(format!(
                "checkpoint holds a {:?} model, expected gc-gru-n",
                self.model_kind
            )));
        }
        let (gc_hidden, gc_out, k_hops) = match (self.gc_hidden, self.gc_out, self.k_hops) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Config("gc-gru-n checkpoint missing gc dims".into())),
        };
        let a_hat = self
            .a_hat
            .clone()
            .ok_or_else(|| Error::Config("gc-gru-n checkpoint missing normalized adjacency".into()))?;
        let a_hat = NormalizedAdjacency::from_parts(a_hat, k_hops, self.detector_ids.clone())?;
        let mut model = GcGruModel::new(a_hat, self.t_in, self.t_out, self.hidden, gc_hidden, gc_out, self.seed);
        self.apply_params(&mut model)?;
        Ok((model, self.norm))
    }

    pub fn into_lstm(&self) -> Result<(LstmModel, NormStats)> {
        if self.model_kind != "lstm" {
            return Err(Error::Config(format!(
                "checkpoint holds a {:?} model, expected lstm",
                self.model_kind
            )));
        }
        let mut model = LstmModel::new(self.d, self.t_in, self.t_out, self.hidden, self.seed);
        self.apply_params(&mut model)?;
        Ok((model, self.norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DetectorGraph;

    fn toy_model() -> GcGruModel {
        let g = DetectorGraph::ring(4).unwrap();
        let a_hat = NormalizedAdjacency::build(&g, 1).unwrap();
        GcGruModel::new(a_hat, 3, 2, 3, 2, 2, 7)
    }

    #[test]
    fn round_trip_preserves_parameters_exactly() {
        let model = toy_model();
        let norm = NormStats { min_v: 20.0, max_v: 70.0 };
        let ids: Vec<String> = model.a_hat().source_ids().to_vec();
        let ckpt = Checkpoint::from_gcgru(&model, norm, 7, ids);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        ckpt.save(&path).unwrap();

        let loaded = Checkpoint::load(&path).unwrap();
        let (restored, restored_norm) = loaded.into_gcgru().unwrap();
        assert_eq!(restored_norm, norm);
        for name in GcGruModel::param_names(&model) {
            assert_eq!(model.param(name), restored.param(name), "param {name}");
        }
        assert_eq!(model.a_hat().matrix(), restored.a_hat().matrix());
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let model = toy_model();
        let norm = NormStats { min_v: 0.0, max_v: 1.0 };
        let mut ckpt = Checkpoint::from_gcgru(&model, norm, 7, vec![]);
        ckpt.magic = "NOT-A-CHECKPOINT".into();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        ckpt.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let model = toy_model();
        let norm = NormStats { min_v: 0.0, max_v: 1.0 };
        let ckpt = Checkpoint::from_gcgru(&model, norm, 7, model.a_hat().source_ids().to_vec());
        assert!(ckpt.into_lstm().is_err());
    }
}

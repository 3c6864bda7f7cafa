//! Hyperparameter grid sweep: every combination trained with the same
//! seed, ranked by validation MAPE.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::data::{chronological_split, WindowedDataset};
use crate::error::{Error, Result};
use crate::eval::{mae, mape, rmse, MAPE_EPSILON};
use crate::graph::{DetectorGraph, NormalizedAdjacency};
use crate::nn::{model_forward, GcGruModel};
use crate::train::fit::{fit, TrainConfig};

pub const MAX_COMBOS: usize = 256;

const GRID_KEYS: [&str; 8] = [
    "batch_size",
    "epochs",
    "gc_hidden",
    "gc_out",
    "hidden",
    "k_hops",
    "lambda_reg",
    "learning_rate",
];

/// Parsed sweep axes, keyed by hyperparameter name (sorted for stable
/// column order).
#[derive(Clone, Debug)]
pub struct GridSpec {
    axes: Vec<(String, Vec<f64>)>,
}

impl GridSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<f64>> = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("grid spec must map names to number lists: {e}")))?;
        if raw.is_empty() {
            return Err(Error::Config("grid spec is empty".into()));
        }
        let mut axes = Vec::new();
        for (key, values) in raw {
            if !GRID_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown grid key {key:?}; supported: {}",
                    GRID_KEYS.join(", ")
                )));
            }
            if values.is_empty() {
                return Err(Error::Config(format!("grid key {key:?} has no values")));
            }
            axes.push((key, values));
        }
        let spec = GridSpec { axes };
        let size = spec.combo_count();
        if size > MAX_COMBOS {
            return Err(Error::Contract(format!(
                "grid of {size} combinations exceeds the bound of {MAX_COMBOS}"
            )));
        }
        Ok(spec)
    }

    pub fn combo_count(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|(k, _)| k.clone()).collect()
    }

    /// Cartesian product in sorted-key order.
    pub fn combos(&self) -> Vec<Vec<(String, f64)>> {
        let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for prefix in &out {
                for &v in values {
                    let mut combo = prefix.clone();
                    combo.push((key.clone(), v));
                    next.push(combo);
                }
            }
            out = next;
        }
        out
    }
}

fn apply_assignment(base: &TrainConfig, assignment: &[(String, f64)]) -> Result<TrainConfig> {
    let mut cfg = base.clone();
    for (key, value) in assignment {
        match key.as_str() {
            "learning_rate" => cfg.learning_rate = *value,
            "lambda_reg" => cfg.lambda_reg = *value,
            "epochs" => cfg.epochs = *value as usize,
            "batch_size" => cfg.batch_size = *value as usize,
            "hidden" => cfg.hidden = *value as usize,
            "gc_hidden" => cfg.gc_hidden = *value as usize,
            "gc_out" => cfg.gc_out = *value as usize,
            "k_hops" => cfg.k_hops = *value as usize,
            other => return Err(Error::Config(format!("unknown grid key {other:?}"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub combo_id: usize,
    pub assignment: Vec<(String, f64)>,
    pub val_mape: f64,
    pub val_mae: f64,
    pub val_rmse: f64,
    pub train_seconds: f64,
}

fn run_combo(
    combo_id: usize,
    assignment: &[(String, f64)],
    graph: &DetectorGraph,
    ds: &WindowedDataset,
    base: &TrainConfig,
) -> Result<GridResult> {
    let cfg = apply_assignment(base, assignment)?;
    let a_hat = NormalizedAdjacency::build(graph, cfg.k_hops)?;
    let model = GcGruModel::new(a_hat, ds.t_in, ds.t_out, cfg.hidden, cfg.gc_hidden, cfg.gc_out, cfg.seed);
    let outcome = fit(model, ds, &cfg)?;

    let (_, holdout) = chronological_split(ds, cfg.split, cfg.strict_no_leak)?;
    let preds_norm = model_forward(&outcome.model, &outcome.stats.normalize(&holdout.x))?;
    let preds = outcome.stats.denormalize(&preds_norm);
    let mape_r = mape(&holdout.y, &preds, MAPE_EPSILON)?;
    Ok(GridResult {
        combo_id,
        assignment: assignment.to_vec(),
        val_mape: mape_r.percent,
        val_mae: mae(&holdout.y, &preds)?,
        val_rmse: rmse(&holdout.y, &preds)?,
        train_seconds: outcome.train_seconds,
    })
}

/// Trains every combination (optionally in parallel) and returns results
/// ranked by validation MAPE, ties broken by combo id.
pub fn grid_search(
    grid: &GridSpec,
    graph: &DetectorGraph,
    ds: &WindowedDataset,
    base: &TrainConfig,
    jobs: usize,
) -> Result<Vec<GridResult>> {
    let combos = grid.combos();
    let run_all = || -> Result<Vec<GridResult>> {
        combos
            .par_iter()
            .enumerate()
            .map(|(id, assignment)| run_combo(id, assignment, graph, ds, base))
            .collect()
    };
    let mut results = if jobs == 0 {
        run_all()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build sweep thread pool: {e}")))?;
        pool.install(run_all)?
    };
    results.sort_by(|a, b| {
        a.val_mape
            .partial_cmp(&b.val_mape)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.combo_id.cmp(&b.combo_id))
    });
    Ok(results)
}

/// CSV table behind the sweep: `combo_id,<param columns>,val_mape,val_mae,
/// val_rmse,train_seconds`, one row per combination in rank order.
pub fn grid_results_csv(grid: &GridSpec, results: &[GridResult]) -> String {
    let names = grid.axis_names();
    let mut out = String::from("combo_id");
    for name in &names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",val_mape,val_mae,val_rmse,train_seconds\n");
    for r in results {
        out.push_str(&r.combo_id.to_string());
        for name in &names {
            let v = r
                .assignment
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .expect("assignment covers every axis");
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(&format!(",{},{},{},{}\n", r.val_mape, r.val_mae, r.val_rmse, r.train_seconds));
    }
    out
}

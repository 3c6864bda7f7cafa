//! Chronological windowing of a speed table into (input, target) pairs and
//! leak-aware train/holdout splitting.

use crate::data::SpeedTable;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const DEFAULT_T_IN: usize = 36;
pub const DEFAULT_T_OUT: usize = 12;

/// Sliding windows with stride 1: sample i covers input rows
/// [start_i, start_i + t_in) and target rows [start_i + t_in,
/// start_i + t_in + t_out).
#[derive(Clone, Debug)]
pub struct WindowedDataset {
    pub x: Tensor3,
    pub y: Tensor3,
    pub starts: Vec<usize>,
    pub t_in: usize,
    pub t_out: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn d(&self) -> usize {
        self.x.d()
    }

    fn select(&self, indices: std::ops::Range<usize>) -> WindowedDataset {
        let n = indices.len();
        let (d, t_in, t_out) = (self.d(), self.t_in, self.t_out);
        let mut x = Tensor3::zeros(n, t_in, d);
        let mut y = Tensor3::zeros(n, t_out, d);
        let mut starts = Vec::with_capacity(n);
        for (out_i, src_i) in indices.enumerate() {
            x.set_sample(out_i, &self.x.sample(src_i)).expect("same dims");
            y.set_sample(out_i, &self.y.sample(src_i)).expect("same dims");
            starts.push(self.starts[src_i]);
        }
        WindowedDataset { x, y, starts, t_in, t_out }
    }
}

pub fn make_windows(table: &SpeedTable, t_in: usize, t_out: usize) -> Result<WindowedDataset> {
    let rows = table.rows();
    let span = t_in + t_out;
    if t_in == 0 || t_out == 0 {
        return Err(Error::Contract("window lengths must be positive".into()));
    }
    if rows < span {
        return Err(Error::Contract(format!(
            "need at least {span} rows for t_in={t_in}, t_out={t_out}; table has {rows}"
        )));
    }
    let n = rows - span + 1;
    let d = table.detector_count();
    let mut x = Tensor3::zeros(n, t_in, d);
    let mut y = Tensor3::zeros(n, t_out, d);
    for s in 0..n {
        for t in 0..t_in {
            for j in 0..d {
                x.set(s, t, j, table.values().get(s + t, j));
            }
        }
        for t in 0..t_out {
            for j in 0..d {
                y.set(s, t, j, table.values().get(s + t_in + t, j));
            }
        }
    }
    Ok(WindowedDataset {
        x,
        y,
        starts: (0..n).collect(),
        t_in,
        t_out,
    })
}

/// First floor(ratio * N) windows train, the rest hold out. With
/// `strict_no_leak`, the leading t_in + t_out - 1 holdout windows (whose
/// input rows overlap training target rows) are dropped as well.
pub fn chronological_split(
    ds: &WindowedDataset,
    ratio: f64,
    strict_no_leak: bool,
) -> Result<(WindowedDataset, WindowedDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Contract(format!("split ratio must be in (0,1), got {ratio}")));
    }
    let n = ds.len();
    let n_train = (ratio * n as f64).floor() as usize;
    let mut holdout_from = n_train;
    if strict_no_leak {
        holdout_from += ds.t_in + ds.t_out - 1;
    }
    if n_train == 0 || holdout_from >= n {
        return Err(Error::Contract(format!(
            "split of {n} windows at ratio {ratio}{} leaves an empty side",
            if strict_no_leak { " (strict_no_leak)" } else { "" }
        )));
    }
    Ok((ds.select(0..n_train), ds.select(holdout_from..n)))
}

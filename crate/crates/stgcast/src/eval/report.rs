//! Per-horizon and per-detector error breakdowns with plot-ready CSV
//! emission.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::metrics::{mae_slice, mape_slice, rmse_slice, MAPE_EPSILON};
use crate::tensor::Tensor3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverallMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
}

#[derive(Clone, Debug)]
pub struct HorizonRow {
    pub minutes: usize,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub excluded: usize,
}

#[derive(Clone, Debug)]
pub struct GroupRow {
    pub label: String,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
}

#[derive(Clone, Debug)]
pub struct DetectorRow {
    pub detector_id: String,
    pub mae: f64,
}

/// Five-number summary of per-detector MAEs at one horizon, with the
/// count of 1.5*IQR outliers.
#[derive(Clone, Debug)]
pub struct BoxplotRow {
    pub minutes: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub n_outliers: usize,
}

#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub overall: OverallMetrics,
    pub per_horizon: Vec<HorizonRow>,
    pub groups: Vec<GroupRow>,
    pub per_detector: Vec<DetectorRow>,
    pub boxplots: Vec<BoxplotRow>,
    pub excluded_count: usize,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Full evaluation breakdown. Horizons are 15-minute steps; when t_out is
/// not 12, the report covers whatever horizons exist. MAPE follows the
/// epsilon-masking rule, so a horizon whose targets are all (near) zero
/// reports MAPE 0 with every cell excluded.
pub fn horizon_report(y_true: &Tensor3, y_pred: &Tensor3, detector_ids: &[String]) -> Result<MetricsReport> {
    if y_true.dims() != y_pred.dims() {
        let (a, b, c) = y_true.dims();
        let (x, y, z) = y_pred.dims();
        return Err(Error::shape("horizon_report", format!("{a}x{b}x{c}"), format!("{x}x{y}x{z}")));
    }
    let (n, t_out, d) = y_true.dims();
    if detector_ids.len() != d {
        return Err(Error::shape(
            "horizon_report ids",
            format!("{d} detectors"),
            format!("{} ids", detector_ids.len()),
        ));
    }
    if n == 0 || t_out == 0 || d == 0 {
        return Err(Error::Contract("horizon_report needs a non-empty tensor".into()));
    }

    let mut per_horizon = Vec::with_capacity(t_out);
    let mut boxplots = Vec::with_capacity(t_out);
    for t in 0..t_out {
        let mut truth = Vec::with_capacity(n * d);
        let mut pred = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                truth.push(y_true.get(i, t, j));
                pred.push(y_pred.get(i, t, j));
            }
        }
        let minutes = 15 * (t + 1);
        let mape_r = match mape_slice(&truth, &pred, MAPE_EPSILON) {
            Ok(r) => r,
            Err(_) => crate::eval::metrics::MapeResult {
                percent: 0.0,
                excluded: truth.len(),
            },
        };
        per_horizon.push(HorizonRow {
            minutes,
            mae: mae_slice(&truth, &pred),
            rmse: rmse_slice(&truth, &pred),
            mape: mape_r.percent,
            excluded: mape_r.excluded,
        });

        // Distribution of per-detector MAEs behind the box plot.
        let mut det_maes = Vec::with_capacity(d);
        for j in 0..d {
            let mut sum = 0.0;
            for i in 0..n {
                sum += (y_true.get(i, t, j) - y_pred.get(i, t, j)).abs();
            }
            det_maes.push(sum / n as f64);
        }
        det_maes.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        let q25 = quantile(&det_maes, 0.25);
        let q75 = quantile(&det_maes, 0.75);
        let iqr = q75 - q25;
        let (lo_fence, hi_fence) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
        boxplots.push(BoxplotRow {
            minutes,
            min: det_maes[0],
            q25,
            median: quantile(&det_maes, 0.5),
            q75,
            max: *det_maes.last().expect("non-empty"),
            n_outliers: det_maes.iter().filter(|&&v| v < lo_fence || v > hi_fence).count(),
        });
    }

    // Hour groups of four 15-minute horizons each; a trailing partial hour
    // still gets a row.
    let mut groups = Vec::new();
    for (gi, chunk) in (0..t_out).collect::<Vec<_>>().chunks(4).enumerate() {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for &t in chunk {
            for i in 0..n {
                for j in 0..d {
                    truth.push(y_true.get(i, t, j));
                    pred.push(y_pred.get(i, t, j));
                }
            }
        }
        let mape_pct = mape_slice(&truth, &pred, MAPE_EPSILON).map(|r| r.percent).unwrap_or(0.0);
        groups.push(GroupRow {
            label: format!("{}h", gi + 1),
            mae: mae_slice(&truth, &pred),
            rmse: rmse_slice(&truth, &pred),
            mape: mape_pct,
        });
    }

    let mut per_detector = Vec::with_capacity(d);
    for j in 0..d {
        let mut sum = 0.0;
        for i in 0..n {
            for t in 0..t_out {
                sum += (y_true.get(i, t, j) - y_pred.get(i, t, j)).abs();
            }
        }
        per_detector.push(DetectorRow {
            detector_id: detector_ids[j].clone(),
            mae: sum / (n * t_out) as f64,
        });
    }

    let overall_mape = match mape_slice(y_true.values(), y_pred.values(), MAPE_EPSILON) {
        Ok(r) => r,
        Err(_) => crate::eval::metrics::MapeResult {
            percent: 0.0,
            excluded: y_true.values().len(),
        },
    };
    Ok(MetricsReport {
        overall: OverallMetrics {
            mae: mae_slice(y_true.values(), y_pred.values()),
            rmse: rmse_slice(y_true.values(), y_pred.values()),
            mape: overall_mape.percent,
        },
        per_horizon,
        groups,
        per_detector,
        boxplots,
        excluded_count: overall_mape.excluded,
    })
}

impl MetricsReport {
    /// Writes report_horizon.csv, report_detector.csv, and
    /// report_boxplot.csv into `dir`.
    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();

        let mut horizon = String::from("minutes,mae,rmse,mape\n");
        for row in &self.per_horizon {
            horizon.push_str(&format!("{},{},{},{}\n", row.minutes, row.mae, row.rmse, row.mape));
        }
        crate::fsutil::atomic_write(dir.join("report_horizon.csv"), horizon.as_bytes())?;

        let mut detector = String::from("detector_id,mae\n");
        for row in &self.per_detector {
            detector.push_str(&format!("{},{}\n", row.detector_id, row.mae));
        }
        crate::fsutil::atomic_write(dir.join("report_detector.csv"), detector.as_bytes())?;

        let mut boxplot = String::from("minutes,min,q25,median,q75,max,n_outliers\n");
        for row in &self.boxplots {
            boxplot.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.minutes, row.min, row.q25, row.median, row.q75, row.max, row.n_outliers
            ));
        }
        crate::fsutil::atomic_write(dir.join("report_boxplot.csv"), boxplot.as_bytes())?;
        Ok(())
    }
}

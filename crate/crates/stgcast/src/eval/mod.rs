//! Metrics (MAE, RMSE, MAPE), the Historical Average baseline, and
//! per-horizon / per-detector report generation.

mod baseline;
mod metrics;
mod report;

pub use baseline::historical_average_forecast;
pub use metrics::{mae, mape, rmse, MapeResult, MAPE_EPSILON};
pub use report::{
    horizon_report, BoxplotRow, DetectorRow, GroupRow, HorizonRow, MetricsReport, OverallMetrics,
};

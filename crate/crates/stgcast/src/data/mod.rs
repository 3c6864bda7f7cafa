//! Ingestion and shaping: speed-table loading with missing-value cleaning,
//! chronological windowing and splits, TPS computation, and a synthetic
//! graph-diffusion generator for desk-scale verification.

mod speed;
mod synthetic;
mod tps;
mod window;

pub use speed::{load_speed_csv, SpeedTable, SAMPLE_MINUTES};
pub use synthetic::{generate_synthetic, generate_synthetic_with, SyntheticConfig};
pub use tps::{compute_tps, TpsResult, TpsSegment};
pub use window::{chronological_split, make_windows, WindowedDataset, DEFAULT_T_IN, DEFAULT_T_OUT};

//! Traffic Performance Score: a volume-and-length-weighted speed ratio
//! relative to free flow,
//!   TPS = sum_i(V_i Q_i L_i) / sum_i(Vf_i Q_i L_i) * 100%.

use log::warn;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct TpsSegment {
    pub speed: f64,
    pub volume: f64,
    pub length: f64,
    pub free_flow: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TpsResult {
    /// 0..=100.
    pub percent: f64,
    /// True when speeds above free flow pushed the raw ratio past 100%.
    pub clamped: bool,
}

pub fn compute_tps(segments: &[TpsSegment]) -> Result<TpsResult> {
    if segments.is_empty() {
        return Err(Error::Contract("TPS needs at least one segment".into()));
    }
    for (i, s) in segments.iter().enumerate() {
        if s.length <= 0.0 {
            return Err(Error::Contract(format!("segment {i}: length must be > 0, got {}", s.length)));
        }
        if s.speed < 0.0 || s.volume < 0.0 {
            return Err(Error::Contract(format!(
                "segment {i}: speed and volume must be >= 0, got V={}, Q={}",
                s.speed, s.volume
            )));
        }
        if s.free_flow <= 0.0 {
            return Err(Error::Contract(format!(
                "segment {i}: free-flow speed must be > 0, got {}",
                s.free_flow
            )));
        }
    }
    let numerator: f64 = segments.iter().map(|s| s.speed * s.volume * s.length).sum();
    let denominator: f64 = segments.iter().map(|s| s.free_flow * s.volume * s.length).sum();
    if denominator == 0.0 {
        return Err(Error::Degenerate("TPS denominator is zero (all volumes zero)".into()));
    }
    let raw = numerator / denominator * 100.0;
    if raw > 100.0 {
        warn!("TPS {raw:.3}% exceeds 100% (speeds above free flow); clamping");
        return Ok(TpsResult {
            percent: 100.0,
            clamped: true,
        });
    }
    Ok(TpsResult {
        percent: raw,
        clamped: false,
    })
}

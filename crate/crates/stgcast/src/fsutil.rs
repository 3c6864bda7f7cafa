//! Small filesystem and timing helpers shared by the CLI and training code.

use std::path::Path;
use std::time::Instant;

use crate::error::Result;

/// Write-then-rename so partially written outputs are never observed.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// When STGCAST_FIXED_TIMING is set, all reported wall-clock durations are
/// zeroed so outputs that embed timing become byte-reproducible.
pub fn fixed_timing() -> bool {
    std::env::var_os("STGCAST_FIXED_TIMING").is_some_and(|v| !v.is_empty() && v != "0")
}

/// Elapsed wall-clock seconds since `start`, honoring STGCAST_FIXED_TIMING.
pub fn elapsed_seconds(start: Instant) -> f64 {
    if fixed_timing() {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

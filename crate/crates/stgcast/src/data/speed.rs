//! Speed-table CSV ingestion. Format: row 1 is `timestamp,<id1>,...,<idD>`,
//! timestamps ISO-8601 on a strict 15-minute grid, cells are decimal floats
//! or the literal `none`/empty for missing readings (cleaned to 0 with the
//! mask retained).

use std::path::Path;

use chrono::{NaiveDateTime, TimeDelta};
use log::info;

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

pub const SAMPLE_MINUTES: i64 = 15;
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Clone, Debug)]
pub struct SpeedTable {
    timestamps: Vec<NaiveDateTime>,
    detector_ids: Vec<String>,
    values: DenseMatrix,
    missing_mask: Vec<bool>,
}

impl SpeedTable {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        detector_ids: Vec<String>,
        values: DenseMatrix,
        missing_mask: Vec<bool>,
    ) -> Result<Self> {
        let (rows, d) = (timestamps.len(), detector_ids.len());
        if values.shape() != (rows, d) {
            return Err(Error::shape("speed_table", format!("{rows}x{d}"), values.dims()));
        }
        if missing_mask.len() != rows * d {
            return Err(Error::shape(
                "speed_table mask",
                format!("{} cells", rows * d),
                format!("{} flags", missing_mask.len()),
            ));
        }
        let step = TimeDelta::minutes(SAMPLE_MINUTES);
        for w in timestamps.windows(2) {
            if w[1] - w[0] != step {
                return Err(Error::Contract(format!(
                    "timestamps must be strictly increasing on a {SAMPLE_MINUTES}-minute grid, found {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(SpeedTable {
            timestamps,
            detector_ids,
            values,
            missing_mask,
        })
    }

    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn detector_count(&self) -> usize {
        self.detector_ids.len()
    }

    pub fn detector_ids(&self) -> &[String] {
        &self.detector_ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn was_missing(&self, row: usize, col: usize) -> bool {
        self.missing_mask[row * self.detector_count() + col]
    }

    pub fn missing_count(&self) -> usize {
        self.missing_mask.iter().filter(|&&m| m).count()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("timestamp,");
        out.push_str(&self.detector_ids.join(","));
        out.push('\n');
        for (i, ts) in self.timestamps.iter().enumerate() {
            out.push_str(&ts.format(TIMESTAMP_FORMAT).to_string());
            for j in 0..self.detector_count() {
                out.push(',');
                if self.was_missing(i, j) {
                    out.push_str("none");
                } else {
                    out.push_str(&format!("{}", self.values.get(i, j)));
                }
            }
            out.push('\n');
        }
        crate::fsutil::atomic_write(path, out.as_bytes())
    }
}

pub fn load_speed_csv(path: impl AsRef<Path>) -> Result<SpeedTable> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: display.clone(),
            line: 0,
            msg: e.to_string(),
        })?;

    let mut records = reader.records().enumerate();
    let header = match records.next() {
        Some((_, Ok(rec))) => rec,
        Some((_, Err(e))) => {
            return Err(Error::Parse {
                path: display,
                line: 1,
                msg: e.to_string(),
            })
        }
        None => return Err(Error::Contract(format!("{display}: empty speed file"))),
    };
    if header.get(0).map(str::trim) != Some("timestamp") {
        return Err(Error::Parse {
            path: display,
            line: 1,
            msg: "header must start with 'timestamp'".into(),
        });
    }
    let detector_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let d = detector_ids.len();
    if d == 0 {
        return Err(Error::Parse {
            path: display,
            line: 1,
            msg: "header names no detectors".into(),
        });
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    for (idx, record) in records {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            path: display.clone(),
            line,
            msg: e.to_string(),
        })?;
        if record.len() != d + 1 {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                msg: format!("expected {} cells, found {}", d + 1, record.len()),
            });
        }
        let ts_raw = record.get(0).unwrap_or("").trim();
        let ts = NaiveDateTime::parse_from_str(ts_raw, TIMESTAMP_FORMAT).map_err(|_| Error::Parse {
            path: display.clone(),
            line,
            msg: format!("invalid timestamp {ts_raw:?}, expected ISO-8601 like 2020-01-01T00:00:00"),
        })?;
        timestamps.push(ts);
        for cell in record.iter().skip(1) {
            let trimmed = cell.trim();
            if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("none") {
                values.push(0.0);
                mask.push(true);
            } else {
                let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
                    path: display.clone(),
                    line,
                    msg: format!("cell {trimmed:?} is neither a number nor 'none'"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: display.clone(),
                        line,
                        msg: format!("non-finite speed {v}"),
                    });
                }
                values.push(v);
                mask.push(false);
            }
        }
    }
    if timestamps.is_empty() {
        return Err(Error::Contract(format!("{display}: speed file has a header but no data rows")));
    }

    let rows = timestamps.len();
    let table = SpeedTable::new(timestamps, detector_ids, DenseMatrix::from_vec(rows, d, values)?, mask)?;
    info!(
        "{display}: {} rows x {} detectors, {} missing cells cleaned to 0",
        table.rows(),
        table.detector_count(),
        table.missing_count()
    );
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("speed.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn loads_toy_table_and_cleans_none() {
        let (_dir, path) = write_tmp(
            "timestamp,a,b\n2020-01-01T00:00:00,10.5,20\n2020-01-01T00:15:00,none,21\n2020-01-01T00:30:00,12,22\n",
        );
        let table = load_speed_csv(&path).unwrap();
        assert_eq!(table.rows(), 3);
        assert_eq!(table.detector_count(), 2);
        assert_eq!(table.values().get(1, 0), 0.0);
        assert!(table.was_missing(1, 0));
        assert!(!table.was_missing(0, 0));
        assert_eq!(table.missing_count(), 1);
    }

    #[test]
    fn eighty_seven_detector_header() {
        let ids: Vec<String> = (0..87).map(|i| format!("det{i:03}")).collect();
        let mut content = format!("timestamp,{}\n", ids.join(","));
        content.push_str("2020-01-01T00:00:00");
        for _ in 0..87 {
            content.push_str(",50");
        }
        content.push('\n');
        let (_dir, path) = write_tmp(&content);
        let table = load_speed_csv(&path).unwrap();
        assert_eq!(table.detector_count(), 87);
    }

    #[test]
    fn empty_data_section_is_an_error() {
        let (_dir, path) = write_tmp("timestamp,a,b\n");
        assert!(load_speed_csv(&path).is_err());
    }

    #[test]
    fn ragged_row_error_names_the_line() {
        let (_dir, path) = write_tmp("timestamp,a,b\n2020-01-01T00:00:00,1,2\n2020-01-01T00:15:00,3\n");
        let err = load_speed_csv(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:") || msg.contains("line: 3") || msg.contains("record 2"), "{msg}");
    }

    #[test]
    fn timestamp_gap_is_an_error() {
        let (_dir, path) = write_tmp("timestamp,a\n2020-01-01T00:00:00,1\n2020-01-01T00:45:00,2\n");
        let err = load_speed_csv(&path).unwrap_err();
        assert!(err.to_string().contains("15-minute"), "{err}");
    }

    #[test]
    fn csv_round_trip_preserves_values_and_mask() {
        let (_dir, path) = write_tmp(
            "timestamp,a,b\n2020-01-01T00:00:00,10.25,none\n2020-01-01T00:15:00,11.5,21.75\n",
        );
        let table = load_speed_csv(&path).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let out = dir2.path().join("out.csv");
        table.write_csv(&out).unwrap();
        let reloaded = load_speed_csv(&out).unwrap();
        assert_eq!(reloaded.values(), table.values());
        assert_eq!(reloaded.missing_count(), table.missing_count());
        assert_eq!(reloaded.timestamps(), table.timestamps());
    }
}

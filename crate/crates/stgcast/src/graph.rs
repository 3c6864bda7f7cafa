//! Detector adjacency construction and normalization: self-loop insertion
//! with k-hop clipping, degree computation, symmetric normalization, and
//! pruning of the graph down to the detectors present in the speed data.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Undirected binary detector graph.
#[derive(Clone, Debug)]
pub struct DetectorGraph {
    node_ids: Vec<String>,
    adjacency: DenseMatrix,
}

impl DetectorGraph {
    /// Validates squareness, symmetry, {0,1} entries, and unique node ids.
    pub fn new(node_ids: Vec<String>, adjacency: DenseMatrix) -> Result<Self> {
        let n = node_ids.len();
        if adjacency.shape() != (n, n) {
            return Err(Error::shape("detector_graph", format!("{} ids", n), adjacency.dims()));
        }
        let mut seen = HashSet::new();
        for id in &node_ids {
            if !seen.insert(id) {
                return Err(Error::Contract(format!("duplicate detector id {id:?}")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = adjacency.get(i, j);
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Contract(format!(
                        "adjacency entry ({i},{j}) = {v}, expected 0 or 1"
                    )));
                }
                if v != adjacency.get(j, i) {
                    return Err(Error::Contract(format!("adjacency not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(DetectorGraph { node_ids, adjacency })
    }

    /// Ring over n detectors: node i linked to its two neighbors mod n.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract(format!("ring graph needs at least 2 nodes, got {n}")));
        }
        let node_ids = (0..n).map(|i| format!("det{:03}", i)).collect();
        let mut adjacency = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let next = (i + 1) % n;
            adjacency.set(i, next, 1.0);
            adjacency.set(next, i, 1.0);
        }
        DetectorGraph::new(node_ids, adjacency)
    }

    /// Loads the adjacency CSV (header row and first column both carry
    /// detector ids). Directed inputs are symmetrized with max(A, A^T) and
    /// nonbinary positive entries are treated as 1; both are logged.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
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

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                path: display.clone(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            rows.push((i + 1, record));
        }
        if rows.len() < 2 {
            return Err(Error::Contract(format!("{display}: adjacency file has no data rows")));
        }

        let (_, header) = &rows[0];
        // Cell (0,0) is a corner label; ignore its content.
        let node_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let n = node_ids.len();
        if rows.len() - 1 != n {
            return Err(Error::Contract(format!(
                "{display}: adjacency must be square, header names {n} detectors but file has {} data rows",
                rows.len() - 1
            )));
        }

        let mut raw = DenseMatrix::zeros(n, n);
        let mut nonbinary = 0usize;
        for (r, (line, record)) in rows[1..].iter().enumerate() {
            if record.len() != n + 1 {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: *line,
                    msg: format!("expected {} cells, found {}", n + 1, record.len()),
                });
            }
            let row_id = record.get(0).unwrap_or("");
            if row_id != node_ids[r] {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: *line,
                    msg: format!(
                        "row id {row_id:?} does not match header id {:?} at position {r}",
                        node_ids[r]
                    ),
                });
            }
            for (c, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    path: display.clone(),
                    line: *line,
                    msg: format!("cell {cell:?} is not a number"),
                })?;
                if v < 0.0 {
                    return Err(Error::Parse {
                        path: display.clone(),
                        line: *line,
                        msg: format!("negative adjacency entry {v}"),
                    });
                }
                if v > 0.0 && v != 1.0 {
                    nonbinary += 1;
                }
                raw.set(r, c, if v > 0.0 { 1.0 } else { 0.0 });
            }
        }
        if nonbinary > 0 {
            warn!("{display}: {nonbinary} nonbinary adjacency entries treated as 1");
        }

        let mut asymmetric = 0usize;
        let mut adjacency = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if raw.get(i, j) != raw.get(j, i) {
                    asymmetric += 1;
                }
                adjacency.set(i, j, raw.get(i, j).max(raw.get(j, i)));
            }
        }
        if asymmetric > 0 {
            warn!("{display}: symmetrized {asymmetric} asymmetric adjacency entries via max(A, A^T)");
        }

        DetectorGraph::new(node_ids, adjacency)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        out.push(',');
        out.push_str(&self.node_ids.join(","));
        out.push('\n');
        for (i, id) in self.node_ids.iter().enumerate() {
            out.push_str(id);
            for j in 0..self.node_ids.len() {
                out.push(',');
                out.push_str(if self.adjacency.get(i, j) > 0.0 { "1" } else { "0" });
            }
            out.push('\n');
        }
        crate::fsutil::atomic_write(path, out.as_bytes())
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn adjacency(&self) -> &DenseMatrix {
        &self.adjacency
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// k-hop reachability with self-loops: entrywise min((A + I)^k, 1).
pub fn khop_clipped_adjacency(graph: &DetectorGraph, k: usize) -> Result<DenseMatrix> {
    if k == 0 {
        return Err(Error::Contract("k-hop adjacency requires k >= 1".into()));
    }
    let n = graph.len();
    let base = graph.adjacency().add(&DenseMatrix::identity(n))?;
    let mut power = base.clone();
    for _ in 1..k {
        power = power.matmul(&base)?;
    }
    Ok(power.map(|v| v.min(1.0)))
}

/// Row sums of a nonnegative square matrix, returned as a 1xN vector.
pub fn degree_vector(a_tilde: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, m) = a_tilde.shape();
    if n != m {
        return Err(Error::shape("degree_vector", a_tilde.dims(), format!("{n}x{n}")));
    }
    let mut deg = DenseMatrix::zeros(1, n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = a_tilde.get(i, j);
            if v < 0.0 {
                return Err(Error::Contract(format!("negative entry {v} at ({i},{j}) in degree_vector input")));
            }
            sum += v;
        }
        deg.set(0, i, sum);
    }
    Ok(deg)
}

/// Symmetric normalization: entry (i,j) becomes a_ij / sqrt(d_i * d_j).
pub fn symmetric_normalize(a_tilde: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, m) = a_tilde.shape();
    if n != m {
        return Err(Error::shape("symmetric_normalize", a_tilde.dims(), format!("{n}x{n}")));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a_tilde.get(i, j) != a_tilde.get(j, i) {
                return Err(Error::Contract(format!("symmetric_normalize input not symmetric at ({i},{j})")));
            }
        }
    }
    let deg = degree_vector(a_tilde)?;
    for i in 0..n {
        if deg.get(0, i) <= 0.0 {
            return Err(Error::Degenerate(format!(
                "zero-degree row {i}: detector missing from the self-loop construction"
            )));
        }
    }
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let scale = (deg.get(0, i) * deg.get(0, j)).sqrt();
            out.set(i, j, a_tilde.get(i, j) / scale);
        }
    }
    Ok(out)
}

/// The normalized adjacency actually consumed by the graph convolution,
/// together with the hop count and detector ordering it was built from.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    matrix: DenseMatrix,
    k_hops: usize,
    source_ids: Vec<String>,
}

impl NormalizedAdjacency {
    pub fn build(graph: &DetectorGraph, k_hops: usize) -> Result<Self> {
        let a_tilde = khop_clipped_adjacency(graph, k_hops)?;
        let matrix = symmetric_normalize(&a_tilde)?;
        Ok(NormalizedAdjacency {
            matrix,
            k_hops,
            source_ids: graph.node_ids().to_vec(),
        })
    }

    /// Rebuild from a persisted matrix (checkpoint load path).
    pub fn from_parts(matrix: DenseMatrix, k_hops: usize, source_ids: Vec<String>) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() != source_ids.len() {
            return Err(Error::shape(
                "normalized_adjacency",
                format!("{} ids", source_ids.len()),
                matrix.dims(),
            ));
        }
        Ok(NormalizedAdjacency {
            matrix,
            k_hops,
            source_ids,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn k_hops(&self) -> usize {
        self.k_hops
    }

    pub fn source_ids(&self) -> &[String] {
        &self.source_ids
    }

    pub fn side(&self) -> usize {
        self.source_ids.len()
    }
}

/// Result of pruning a graph to a data detector set.
#[derive(Clone, Debug)]
pub struct PruneReport {
    pub graph: DetectorGraph,
    /// Graph nodes absent from the data, removed.
    pub dropped: Vec<String>,
    /// Data detectors absent from the graph, kept as isolated nodes.
    pub missing: Vec<String>,
}

/// Induced subgraph on `data_ids`, in data-column order. Detectors the
/// graph does not know become isolated nodes (their self-loop appears at
/// the k-hop step).
pub fn prune_to_detectors(graph: &DetectorGraph, data_ids: &[String]) -> Result<PruneReport> {
    let index: HashMap<&str, usize> = graph
        .node_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut missing = Vec::new();
    let positions: Vec<Option<usize>> = data_ids
        .iter()
        .map(|id| {
            let pos = index.get(id.as_str()).copied();
            if pos.is_none() {
                missing.push(id.clone());
            }
            pos
        })
        .collect();

    if positions.iter().all(Option::is_none) {
        return Err(Error::NoOverlap);
    }

    let wanted: HashSet<&str> = data_ids.iter().map(String::as_str).collect();
    let dropped: Vec<String> = graph
        .node_ids()
        .iter()
        .filter(|id| !wanted.contains(id.as_str()))
        .cloned()
        .collect();

    let n = data_ids.len();
    let mut adjacency = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if let (Some(gi), Some(gj)) = (positions[i], positions[j]) {
                adjacency.set(i, j, graph.adjacency().get(gi, gj));
            }
        }
    }
    if !missing.is_empty() {
        warn!(
            "pruning: {} data detectors missing from the adjacency, kept isolated: {:?}",
            missing.len(),
            missing
        );
    }

    Ok(PruneReport {
        graph: DetectorGraph::new(data_ids.to_vec(), adjacency)?,
        dropped,
        missing,
    })
}

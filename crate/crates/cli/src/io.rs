//! Graph, similarity, and report file formats.
//!
//! Graphs arrive either as dense adjacency CSV (square, no header) or
//! as whitespace-separated edge lists (`u v` or `u v weight` per line,
//! zero-based ids, blank lines and `#` comments ignored). Both readers
//! produce identical [`Graph`] values for the same graph. Similarity
//! matrices are dense CSV. Reports are JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gmatch_core::graph::{Assignment, Graph};
use gmatch_core::mat::Mat;

use crate::{CliError, Result};

/// Read a graph, dispatching on extension: `.csv` means dense adjacency,
/// anything else an edge list. `nodes` overrides the node count for edge
/// lists whose trailing nodes are isolated; ignored for adjacency input.
pub fn read_graph(path: &Path, nodes: Option<usize>) -> Result<Graph> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mat = read_matrix(path)?;
        Ok(Graph::from_adjacency(mat)?)
    } else {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        parse_edge_list(&text, nodes)
    }
}

/// Parse an edge-list document. Each data line is `u v` or `u v w`; the
/// graph is weighted exactly when every line carries a weight.
pub fn parse_edge_list(text: &str, nodes: Option<usize>) -> Result<Graph> {
    let mut plain: Vec<(usize, usize)> = Vec::new();
    let mut weighted: Vec<(usize, usize, f64)> = Vec::new();
    let mut max_id = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let bad = |what: &str| CliError::Config(format!("edge list line {}: {what}", lineno + 1));
        let u: usize = parts
            .next()
            .ok_or_else(|| bad("missing source"))?
            .parse()
            .map_err(|_| bad("bad source id"))?;
        let v: usize = parts
            .next()
            .ok_or_else(|| bad("missing target"))?
            .parse()
            .map_err(|_| bad("bad target id"))?;
        max_id = max_id.max(u).max(v);
        match parts.next() {
            None => plain.push((u, v)),
            Some(w) => {
                let w: f64 = w.parse().map_err(|_| bad("bad weight"))?;
                weighted.push((u, v, w));
            }
        }
        if parts.next().is_some() {
            return Err(bad("too many fields"));
        }
    }
    if !plain.is_empty() && !weighted.is_empty() {
        return Err(CliError::Config(
            "edge list mixes weighted and unweighted lines".into(),
        ));
    }
    let implied = if plain.is_empty() && weighted.is_empty() {
        0
    } else {
        max_id + 1
    };
    let n = match nodes {
        Some(n) if n < implied => {
            return Err(CliError::Config(format!(
                "node count {n} below largest id {}",
                implied - 1
            )));
        }
        Some(n) => n,
        None => implied,
    };
    if weighted.is_empty() {
        Ok(Graph::from_edges(n, &plain)?)
    } else {
        Ok(Graph::from_weighted_edges(n, &weighted)?)
    }
}

/// Dense numeric CSV without header.
pub fn read_matrix(path: &Path) -> Result<Mat> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    CliError::Config(format!(
                        "{}: non-numeric field {field:?} in row {}",
                        path.display(),
                        rows.len() + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if height == 0 || width == 0 {
        return Err(CliError::Config(format!(
            "{}: empty matrix",
            path.display()
        )));
    }
    if rows.iter().any(|r| r.len() != width) {
        return Err(CliError::Config(format!("{}: ragged rows", path.display())));
    }
    Ok(Mat::from_vec(
        height,
        width,
        rows.into_iter().flatten().collect(),
    )?)
}

/// Node similarity matrix: dense CSV with finite nonnegative entries.
pub fn read_similarity(path: &Path) -> Result<Mat> {
    let mat = read_matrix(path)?;
    for i in 0..mat.rows() {
        for j in 0..mat.cols() {
            let v = mat.get(i, j);
            if !v.is_finite() || v < 0.0 {
                return Err(CliError::Config(format!(
                    "{}: similarity ({i}, {j}) = {v} must be finite and >= 0",
                    path.display()
                )));
            }
        }
    }
    Ok(mat)
}

/// Write a matrix as dense CSV (shortest round-trip float formatting).
pub fn write_matrix(path: &Path, mat: &Mat) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for i in 0..mat.rows() {
        let record: Vec<String> = mat.row(i).iter().map(|v| format!("{v}")).collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a graph as dense adjacency CSV.
pub fn write_graph(path: &Path, graph: &Graph) -> Result<()> {
    write_matrix(path, graph.adjacency())
}

/// Sidecar metadata emitted next to generated instances.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceMeta {
    pub m: usize,
    pub n: usize,
    /// Planted assignments, one per template copy; entry i is the
    /// background node of template node i.
    pub truth: Vec<Vec<usize>>,
    pub master_seed: u64,
}

/// Result of a single matching run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatchReport {
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objectives of every restart, best first.
    pub restart_objectives: Vec<f64>,
}

/// One round of a discovery run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RoundReport {
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sim_digest: u64,
}

/// Result of a multi-round discovery run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiscoverReport {
    pub strategy: String,
    pub rounds: Vec<RoundReport>,
}

pub fn assignment_to_vec(a: &Assignment) -> Vec<usize> {
    a.as_slice().to_vec()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing json: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_and_adjacency_agree() {
        let text = "# toy graph\n0 1\n1 2\n\n0 3\n";
        let g1 = parse_edge_list(text, None).unwrap();
        assert_eq!(g1.n(), 4);
        assert!(!g1.is_weighted());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_graph(&path, &g1).unwrap();
        let g2 = read_graph(&path, None).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn edge_list_weighted_and_overrides() {
        let g = parse_edge_list("0 1 0.5\n1 2 2.0\n", Some(5)).unwrap();
        assert_eq!(g.n(), 5);
        assert!(g.is_weighted());
        assert_eq!(g.edge(1, 0), 0.5);
        // Override below the largest id is rejected.
        assert!(parse_edge_list("0 4\n", Some(3)).is_err());
        // Mixed weighted/unweighted lines are rejected.
        assert!(parse_edge_list("0 1\n1 2 0.5\n", None).is_err());
        // Garbage fields are rejected.
        assert!(parse_edge_list("0 x\n", None).is_err());
        assert!(parse_edge_list("0 1 2 3\n", None).is_err());
    }

    #[test]
    fn similarity_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "0.5,0.25\n0.125,1.5\n").unwrap();
        let s = read_similarity(&path).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 2));
        assert_eq!(s.get(1, 1), 1.5);
        std::fs::write(&path, "0.5,-0.25\n").unwrap();
        assert!(read_similarity(&path).is_err());
        std::fs::write(&path, "0.5,0.25\n0.125\n").unwrap();
        assert!(read_matrix(&path).is_err());
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let mat = Mat::from_fn(3, 4, |i, j| (i * 7 + j) as f64 / 9.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&path, &mat).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(mat, back);
    }

    #[test]
    fn json_round_trip() {
        let report = MatchReport {
            assignment: vec![3, 1, 4],
            objective: 12.5,
            iterations: 7,
            converged: true,
            restart_objectives: vec![12.5, 10.0],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_json(&path, &report).unwrap();
        let back: MatchReport = read_json(&path).unwrap();
        assert_eq!(report, back);
    }
}

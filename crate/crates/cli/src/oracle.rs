//! Exhaustive matching oracle for small instances.

use gmatch_core::graph::{
    for_each_injection, objective_assignment, pad, Assignment, Graph, PadScheme,
};
use gmatch_core::mat::Mat;

use crate::{CliError, Result};

/// Hard cap on the number of enumerated injections.
pub const MAX_ENUMERATION: f64 = 1e7;

/// Number of injections of m template nodes into n background nodes,
/// `n * (n-1) * ... * (n-m+1)`, as a float so huge instances saturate
/// instead of overflowing.
pub fn enumeration_size(m: usize, n: usize) -> f64 {
    let mut size = 1.0f64;
    for i in 0..m {
        size *= (n - i) as f64;
        if size > MAX_ENUMERATION {
            return f64::INFINITY;
        }
    }
    size
}

/// Global argmax of the padded objective over every injection, ties
/// broken toward the lexicographically smallest assignment. Refuses
/// instances beyond [`MAX_ENUMERATION`] candidates.
pub fn brute_force_match(
    a: &Graph,
    b: &Graph,
    sim: &Mat,
    lambda: f64,
    scheme: PadScheme,
) -> Result<(Assignment, f64)> {
    let (m, n) = (a.n(), b.n());
    let size = enumeration_size(m, n);
    if size > MAX_ENUMERATION {
        return Err(CliError::TooLarge(format!(
            "{m} into {n} has more than {MAX_ENUMERATION:.0} injections"
        )));
    }
    if m == 0 {
        return Err(CliError::Config("empty template".into()));
    }
    let pp = pad(a, b, scheme)?;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_map: Vec<usize> = Vec::new();
    let mut failure: Option<gmatch_core::Error> = None;
    for_each_injection(m, n, |map| {
        if failure.is_some() {
            return;
        }
        let assignment = match Assignment::new(map.to_vec(), n) {
            Ok(a) => a,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        match objective_assignment(&pp, &assignment, sim, lambda) {
            // Enumeration is lexicographic, so strict improvement keeps
            // the lexicographically smallest optimum.
            Ok(v) if v > best_val => {
                best_val = v;
                best_map = map.to_vec();
            }
            Ok(_) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((Assignment::new(best_map, n)?, best_val))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn automorphic_pair_scores_equally() {
        // Two identical 2-node graphs, no similarity: both permutations
        // share the objective, so the identity wins lexicographically.
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let sim = Mat::zeros(2, 2);
        let (best, val) = brute_force_match(&g, &g, &sim, 0.0, PadScheme::Centered).unwrap();
        assert_eq!(best.as_slice(), &[0, 1]);
        let swapped = Assignment::new(vec![1, 0], 2).unwrap();
        let pp = pad(&g, &g, PadScheme::Centered).unwrap();
        assert_eq!(objective_assignment(&pp, &swapped, &sim, 0.0).unwrap(), val);
    }

    #[test]
    fn single_node_template_follows_similarity() {
        let a = Graph::from_edges(1, &[]).unwrap();
        let b = Graph::from_edges(5, &[(0, 1), (2, 3)]).unwrap();
        let sim = Mat::from_fn(1, 5, |_, j| [0.2, 0.9, 0.1, 0.4, 0.3][j]);
        let (best, val) = brute_force_match(&a, &b, &sim, 2.0, PadScheme::Naive).unwrap();
        assert_eq!(best.as_slice(), &[1]);
        assert_eq!(val, 2.0 * 0.9);
    }

    #[test]
    fn size_guard_trips() {
        assert!(enumeration_size(50, 5000).is_infinite());
        assert!(enumeration_size(4, 8) <= 1680.0 + 1e-9);
        let a = Graph::from_edges(10, &[]).unwrap();
        let b = Graph::from_edges(100, &[]).unwrap();
        let sim = Mat::zeros(10, 100);
        let err = brute_force_match(&a, &b, &sim, 0.0, PadScheme::Naive).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}

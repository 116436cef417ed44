//! Recovery metrics: per-template node fractions, majority labels, an
//! edge-disagreement stand-in for graph edit distance, and novel-node
//! counts between discovery rounds.

use std::collections::HashSet;

use gmatch_core::graph::{Assignment, Graph};

/// Fraction of template nodes placed exactly where truth `t` puts them,
/// for each planted truth.
pub fn template_fractions(a: &Assignment, truths: &[Assignment]) -> Vec<f64> {
    truths
        .iter()
        .map(|t| a.agreement(t) as f64 / a.len().max(1) as f64)
        .collect()
}

/// Index of the best-recovered template, or `None` when the best
/// fraction is below `threshold` or shared by several templates.
pub fn recovery_label(a: &Assignment, truths: &[Assignment], threshold: f64) -> Option<usize> {
    let m = a.len().max(1);
    let counts: Vec<usize> = truths.iter().map(|t| a.agreement(t)).collect();
    let best = *counts.iter().max()?;
    if (best as f64) < threshold * m as f64 {
        return None;
    }
    let mut winners = counts.iter().enumerate().filter(|(_, &c)| c == best);
    let (idx, _) = winners.next()?;
    if winners.next().is_some() {
        return None;
    }
    Some(idx)
}

/// CSV spelling of a label: `t1`, `t2`, ... or `none`.
pub fn label_string(label: Option<usize>) -> String {
    match label {
        Some(idx) => format!("t{}", idx + 1),
        None => "none".to_string(),
    }
}

/// Edge disagreement between the template and the matched background
/// subgraph: sum over unordered template pairs {i, j} of
/// `|A_ij - B_{s(i) s(j)}|`. For binary graphs this counts disagreeing
/// pairs and is exactly half the squared-difference edge cost.
pub fn ged_proxy(a: &Graph, b: &Graph, assignment: &Assignment) -> f64 {
    let m = a.n();
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            total += (a.edge(i, j) - b.edge(assignment.get(i), assignment.get(j))).abs();
        }
    }
    total
}

/// Background nodes used by `current` that `baseline` never touched.
pub fn novel_nodes(current: &Assignment, baseline: &Assignment) -> usize {
    let seen: HashSet<usize> = baseline.as_slice().iter().copied().collect();
    current
        .as_slice()
        .iter()
        .filter(|j| !seen.contains(j))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gmatch_core::graph::{frobenius_cost, PadScheme};
    use gmatch_core::mat::Mat;
    use gmatch_core::rng::derive_rng;
    use rand::Rng;

    fn asg(map: &[usize], n: usize) -> Assignment {
        Assignment::new(map.to_vec(), n).unwrap()
    }

    #[test]
    fn truth_assignments_label_themselves() {
        let truths = [asg(&[0, 1, 2, 3], 10), asg(&[4, 5, 6, 3], 10)];
        for (idx, t) in truths.iter().enumerate() {
            let fracs = template_fractions(t, &truths);
            assert_eq!(fracs[idx], 1.0);
            assert_eq!(recovery_label(t, &truths, 0.5), Some(idx));
        }
    }

    #[test]
    fn off_truth_and_tied_assignments_are_none() {
        let truths = [asg(&[0, 1, 2, 3], 12), asg(&[4, 5, 6, 7], 12)];
        // Matches nothing.
        let stray = asg(&[8, 9, 10, 11], 12);
        assert_eq!(recovery_label(&stray, &truths, 0.5), None);
        assert_eq!(template_fractions(&stray, &truths), vec![0.0, 0.0]);
        // Half of each: tie at exactly the threshold.
        let split = asg(&[0, 1, 6, 7], 12);
        assert_eq!(template_fractions(&split, &truths), vec![0.5, 0.5]);
        assert_eq!(recovery_label(&split, &truths, 0.5), None);
        // Below threshold even when unique.
        let quarter = asg(&[0, 9, 10, 11], 12);
        assert_eq!(recovery_label(&quarter, &truths, 0.5), None);
        assert_eq!(label_string(None), "none");
        assert_eq!(label_string(Some(2)), "t3");
    }

    #[test]
    fn ged_counts_disagreeing_pairs() {
        // Exact embedding scores zero.
        let a = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let b = Graph::from_edges(5, &[(2, 3), (3, 4), (0, 2)]).unwrap();
        assert_eq!(ged_proxy(&a, &b, &asg(&[2, 3, 4], 5)), 0.0);
        // Template edge missing in the background.
        let single = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let empty = Graph::from_edges(2, &[]).unwrap();
        assert_eq!(ged_proxy(&single, &empty, &asg(&[0, 1], 2)), 1.0);
        // Weighted difference.
        let wa = Graph::from_weighted_edges(2, &[(0, 1, 2.5)]).unwrap();
        let wb = Graph::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(ged_proxy(&wa, &wb, &asg(&[0, 1], 2)), 1.5);
    }

    #[test]
    fn ged_is_half_the_centered_edge_cost_on_binary_graphs() {
        fn mk(size: usize, rng: &mut impl Rng) -> Graph {
            let mut adj = Mat::zeros(size, size);
            for i in 0..size {
                for j in (i + 1)..size {
                    if rng.random::<f64>() < 0.5 {
                        adj.set(i, j, 1.0);
                        adj.set(j, i, 1.0);
                    }
                }
            }
            Graph::from_adjacency(adj).unwrap()
        }
        let mut rng = derive_rng(400, 0);
        for _ in 0..30 {
            let m = 4;
            let n = 7;
            let a = mk(m, &mut rng);
            let b = mk(n, &mut rng);
            let mut map = vec![0usize; m];
            let mut used = vec![false; n];
            for slot in map.iter_mut() {
                loop {
                    let j = rng.random_range(0..n);
                    if !used[j] {
                        used[j] = true;
                        *slot = j;
                        break;
                    }
                }
            }
            let assignment = asg(&map, n);
            let cost = frobenius_cost(&a, &b, &assignment, PadScheme::Centered).unwrap();
            assert_eq!(ged_proxy(&a, &b, &assignment), cost / 2.0);
        }
    }

    #[test]
    fn novel_nodes_counts_fresh_images() {
        let base = asg(&[0, 1, 2], 9);
        assert_eq!(novel_nodes(&base, &base), 0);
        assert_eq!(novel_nodes(&asg(&[0, 4, 5], 9), &base), 2);
        assert_eq!(novel_nodes(&asg(&[6, 7, 8], 9), &base), 3);
        // Permuting the same image set is not novel.
        assert_eq!(novel_nodes(&asg(&[2, 0, 1], 9), &base), 0);
    }
}

//! Graphs, padded matrix pairs, and the quadratic matching objective.
//!
//! Matching a template graph `A` on `m` nodes into a background graph `B`
//! on `n >= m` nodes scores an injective assignment `p` by
//!
//! ```text
//! sum_{i,j < m} At[i][j] * Bt[p(i)][p(j)]  +  lambda * sum_{i < m} S[i][p(i)]
//! ```
//!
//! where `(At, Bt)` is a padded version of `(A, B)` and `S` holds node
//! similarities. Centered padding maps {0,1} adjacencies to {-1,+1} off
//! the diagonal, so the quadratic term rewards agreement on both edges
//! and non-edges; naive padding keeps the raw adjacencies and only
//! rewards edges mapped onto edges.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;
use crate::{Error, Result};

/// Simple undirected graph stored as a dense adjacency matrix.
///
/// Unweighted graphs hold {0,1} entries; weighted graphs hold
/// nonnegative reals. The matrix is always symmetric with a zero
/// diagonal. `weighted` is derived from content, so two construction
/// paths that describe the same graph compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Mat,
    weighted: bool,
}

impl Graph {
    /// Unweighted graph on `n` nodes from an edge list (0-based node ids).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    /// Graph on `n` nodes from a weighted edge list. Weights must be
    /// finite and positive; a unit weight on every edge yields an
    /// unweighted graph.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = Mat::zeros(n, n);
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Dimension(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::Input(format!("self-loop on node {u}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Input(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            if adj.get(u, v) != 0.0 {
                return Err(Error::Input(format!("duplicate edge ({u}, {v})")));
            }
            adj.set(u, v, w);
            adj.set(v, u, w);
        }
        Ok(Self::wrap(adj))
    }

    /// Graph from a full adjacency matrix, validated to be square,
    /// symmetric, hollow, finite, and nonnegative.
    pub fn from_adjacency(adj: Mat) -> Result<Self> {
        if adj.rows() != adj.cols() {
            return Err(Error::Dimension(format!(
                "adjacency matrix is {}x{}, not square",
                adj.rows(),
                adj.cols()
            )));
        }
        let n = adj.rows();
        for i in 0..n {
            if adj.get(i, i) != 0.0 {
                return Err(Error::Input(format!("nonzero diagonal at node {i}")));
            }
            for j in (i + 1)..n {
                let w = adj.get(i, j);
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Input(format!("invalid weight {w} at ({i}, {j})")));
                }
                if w != adj.get(j, i) {
                    return Err(Error::Input(format!("asymmetric entries at ({i}, {j})")));
                }
            }
        }
        Ok(Self::wrap(adj))
    }

    fn wrap(adj: Mat) -> Self {
        let weighted = adj.as_slice().iter().any(|&w| w != 0.0 && w != 1.0);
        Graph { adj, weighted }
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.adj.rows()
    }

    /// Adjacency matrix (symmetric, hollow).
    pub fn adjacency(&self) -> &Mat {
        &self.adj
    }

    /// Weight of edge `(u, v)`; 0 when absent.
    pub fn edge(&self, u: usize, v: usize) -> f64 {
        self.adj.get(u, v)
    }

    /// True when any entry lies outside {0, 1}.
    pub fn is_weighted(&self) -> bool {
        self.weighted
    }
}

/// Injective map from template nodes `0..m` into background nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    map: Vec<usize>,
}

impl Assignment {
    /// Validate injectivity and the bound `map[i] < n`.
    pub fn new(map: Vec<usize>, n: usize) -> Result<Self> {
        let mut used = vec![false; n];
        for &j in &map {
            if j >= n {
                return Err(Error::Dimension(format!(
                    "assignment target {j} out of range for {n} background nodes"
                )));
            }
            if used[j] {
                return Err(Error::Input(format!("assignment repeats target {j}")));
            }
            used[j] = true;
        }
        Ok(Assignment { map })
    }

    /// Number of template nodes mapped.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Matched background node for template node `i`.
    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Nodes matched by both assignments (same template node to the
    /// same background node).
    pub fn agreement(&self, other: &Assignment) -> usize {
        self.map
            .iter()
            .zip(&other.map)
            .filter(|(a, b)| a == b)
            .count()
    }
}

/// Permutation of `0..n`, used for square relaxation vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquarePermutation {
    perm: Vec<usize>,
}

impl SquarePermutation {
    /// Validate that `perm` is a bijection on `0..perm.len()`.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &j in &perm {
            if j >= n {
                return Err(Error::Dimension(format!(
                    "permutation image {j} out of range for size {n}"
                )));
            }
            if seen[j] {
                return Err(Error::Input(format!("permutation repeats image {j}")));
            }
            seen[j] = true;
        }
        Ok(SquarePermutation { perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Restriction to the first `m` rows.
    pub fn top(&self, m: usize) -> Result<Assignment> {
        if m > self.perm.len() {
            return Err(Error::Dimension(format!(
                "cannot take {m} rows of a {} permutation",
                self.perm.len()
            )));
        }
        Assignment::new(self.perm[..m].to_vec(), self.perm.len())
    }
}

/// Extend an assignment to a full permutation of `0..n`: unmapped rows
/// take the unused background nodes in ascending order. Rows beyond the
/// template never contribute to the objective, so any completion scores
/// identically; ascending order makes the result deterministic.
pub fn complete_assignment(a: &Assignment, n: usize) -> Result<SquarePermutation> {
    if a.len() > n {
        return Err(Error::Dimension(format!(
            "assignment of {} nodes cannot embed in {n}",
            a.len()
        )));
    }
    let mut used = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for &j in a.as_slice() {
        if j >= n {
            return Err(Error::Dimension(format!(
                "assignment target {j} out of range for {n}"
            )));
        }
        if used[j] {
            return Err(Error::Input(format!("assignment repeats target {j}")));
        }
        used[j] = true;
        perm.push(j);
    }
    perm.extend((0..n).filter(|&j| !used[j]));
    SquarePermutation::new(perm)
}

/// How adjacency matrices are padded to a common scale before matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadScheme {
    /// `At = 2A - J`, `Bt = 2B - J` with hollow all-ones `J`: off-diagonal
    /// entries become +/-1 and the objective counts agreements on edges
    /// and non-edges alike. Requires unweighted graphs.
    Centered,
    /// `At = A`, `Bt = B`: the objective counts common edges only, which
    /// favors matching into dense regions but is the form that extends to
    /// weighted and multiplex inputs.
    Naive,
}

/// A template/background pair after padding.
///
/// Logically `At` is n-by-n with all entries outside the leading
/// m-by-m block equal to zero; only that block is stored. `Bt` is the
/// full n-by-n padded background.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedPair {
    scheme: PadScheme,
    m: usize,
    n: usize,
    at_block: Mat,
    bt: Mat,
}

impl PaddedPair {
    pub fn scheme(&self) -> PadScheme {
        self.scheme
    }

    /// Template size `m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Background size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Leading m-by-m block of `At`.
    pub fn at_block(&self) -> &Mat {
        &self.at_block
    }

    /// Padded background `Bt`, n-by-n.
    pub fn bt(&self) -> &Mat {
        &self.bt
    }

    /// Entry of the logical n-by-n `At`.
    pub fn at_entry(&self, i: usize, j: usize) -> f64 {
        if i < self.m && j < self.m {
            self.at_block.get(i, j)
        } else {
            0.0
        }
    }
}

/// Pad a template/background pair for matching.
///
/// Errors when the template has more nodes than the background, and when
/// centered padding is requested for weighted graphs (the +/-1 encoding
/// is only meaningful for {0,1} adjacencies).
pub fn pad(a: &Graph, b: &Graph, scheme: PadScheme) -> Result<PaddedPair> {
    let (m, n) = (a.n(), b.n());
    if m > n {
        return Err(Error::Dimension(format!(
            "template has {m} nodes but background only {n}"
        )));
    }
    let (at_block, bt) = match scheme {
        PadScheme::Centered => {
            if a.is_weighted() || b.is_weighted() {
                return Err(Error::Unsupported(
                    "centered padding requires unweighted graphs".into(),
                ));
            }
            let center = |g: &Graph, k: usize| {
                Mat::from_fn(k, k, |i, j| {
                    if i == j {
                        0.0
                    } else {
                        2.0 * g.edge(i, j) - 1.0
                    }
                })
            };
            (center(a, m), center(b, n))
        }
        PadScheme::Naive => (a.adjacency().clone(), b.adjacency().clone()),
    };
    Ok(PaddedPair {
        scheme,
        m,
        n,
        at_block,
        bt,
    })
}

/// Matching score of an assignment: quadratic padded-adjacency term plus
/// `lambda` times the similarity picked up along the assignment.
///
/// `sim` must be m-by-n. The score only reads the assignment of the
/// first `m` rows, so every completion of the same assignment scores
/// identically.
pub fn objective_assignment(
    pp: &PaddedPair,
    a: &Assignment,
    sim: &Mat,
    lambda: f64,
) -> Result<f64> {
    if a.len() != pp.m() {
        return Err(Error::Dimension(format!(
            "assignment covers {} template nodes, padded pair has {}",
            a.len(),
            pp.m()
        )));
    }
    check_sim_shape(sim, pp.m(), pp.n())?;
    let m = pp.m();
    let mut quad = 0.0;
    for i in 0..m {
        let arow = pp.at_block.row(i);
        let brow = pp.bt.row(a.get(i));
        for j in 0..m {
            quad += arow[j] * brow[a.get(j)];
        }
    }
    let mut lin = 0.0;
    for i in 0..m {
        lin += sim.get(i, a.get(i));
    }
    Ok(quad + lambda * lin)
}

/// [`objective_assignment`] evaluated on the top `m` rows of a full
/// permutation.
pub fn objective(pp: &PaddedPair, p: &SquarePermutation, sim: &Mat, lambda: f64) -> Result<f64> {
    if p.len() != pp.n() {
        return Err(Error::Dimension(format!(
            "permutation of size {} does not act on {} background nodes",
            p.len(),
            pp.n()
        )));
    }
    objective_assignment(pp, &p.top(pp.m())?, sim, lambda)
}

pub(crate) fn check_sim_shape(sim: &Mat, m: usize, n: usize) -> Result<()> {
    if sim.rows() != m || sim.cols() != n {
        return Err(Error::Dimension(format!(
            "similarity matrix is {}x{}, expected {m}x{n}",
            sim.rows(),
            sim.cols()
        )));
    }
    Ok(())
}

/// Squared-difference disagreement cost of an assignment.
///
/// * Centered: `||A - B[p]||_F^2` where `B[p]` is the background
///   subgraph induced by the assignment. For binary graphs this counts
///   disagreeing ordered pairs, and minimizing it is equivalent to
///   maximizing the centered quadratic objective (see tests).
/// * Naive: twice the number of template edges not mapped onto a
///   background edge; absent background edges are all that is penalized.
pub fn frobenius_cost(
    a: &Graph,
    b: &Graph,
    assignment: &Assignment,
    scheme: PadScheme,
) -> Result<f64> {
    let m = a.n();
    if assignment.len() != m {
        return Err(Error::Dimension(format!(
            "assignment covers {} nodes, template has {m}",
            assignment.len()
        )));
    }
    if assignment.as_slice().iter().any(|&j| j >= b.n()) {
        return Err(Error::Dimension(format!(
            "assignment exceeds background size {}",
            b.n()
        )));
    }
    match scheme {
        PadScheme::Centered => {
            if a.is_weighted() || b.is_weighted() {
                return Err(Error::Unsupported(
                    "centered cost requires unweighted graphs".into(),
                ));
            }
            let mut cost = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let d = a.edge(i, j) - b.edge(assignment.get(i), assignment.get(j));
                    cost += d * d;
                }
            }
            Ok(cost)
        }
        PadScheme::Naive => {
            let mut missing = 0.0;
            for i in 0..m {
                for j in (i + 1)..m {
                    if a.edge(i, j) != 0.0 && b.edge(assignment.get(i), assignment.get(j)) == 0.0 {
                        missing += 1.0;
                    }
                }
            }
            Ok(2.0 * missing)
        }
    }
}

/// Background subgraph induced by an assignment, in template node order.
pub fn induced_subgraph(b: &Graph, assignment: &Assignment) -> Result<Graph> {
    let m = assignment.len();
    if assignment.as_slice().iter().any(|&j| j >= b.n()) {
        return Err(Error::Dimension(format!(
            "assignment exceeds background size {}",
            b.n()
        )));
    }
    let adj = Mat::from_fn(m, m, |i, j| b.edge(assignment.get(i), assignment.get(j)));
    Graph::from_adjacency(adj)
}

/// Visit every injective map `0..m -> 0..n` in lexicographic order.
///
/// Intended for exhaustive verification on small instances; the caller
/// is responsible for guarding against combinatorial blowup.
pub fn for_each_injection(m: usize, n: usize, mut f: impl FnMut(&[usize])) {
    if m > n {
        return;
    }
    let mut map = vec![0usize; m];
    if m == 0 {
        f(&map);
        return;
    }
    let mut used = vec![false; n];
    let mut depth = 0usize;
    let mut next = 0usize;
    loop {
        while next < n && used[next] {
            next += 1;
        }
        if next == n {
            if depth == 0 {
                return;
            }
            depth -= 1;
            let prev = map[depth];
            used[prev] = false;
            next = prev + 1;
            continue;
        }
        map[depth] = next;
        if depth + 1 == m {
            f(&map);
            next += 1;
        } else {
            used[next] = true;
            depth += 1;
            next = 0;
        }
    }
}

//! Synthetic instances with multiple correlated template copies, and the
//! closed-form expectations used to validate recovered solutions.
//!
//! A template `A` on `m` nodes is drawn edgewise iid Bernoulli(p). The
//! background `B` on `n` nodes holds several noisy copies of `A` in
//! designated node regions: consecutive copies share the template's last
//! `overlap` nodes (identical background slots), the remaining slots get
//! copy-specific noise. Edges on a copy's slots are drawn conditionally
//! on the template edge so each pair attains a prescribed Pearson
//! correlation while keeping the Bernoulli(p) marginal; all remaining
//! background pairs are iid Bernoulli(p).
//!
//! Node similarity matrices for these instances are Beta-sampled with
//! elevated means along each copy's ground-truth slots
//! ([`sample_similarity`]), and [`count_alignment`] plus the
//! `expected_*_diff` functions give exact expectations for how a
//! candidate assignment's score differs from the second copy's truth.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::graph::{Assignment, Graph};
use crate::mat::Mat;
use crate::{Error, Result};

/// Parameters of the correlated-copies instance distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct McerSpec {
    /// Template size.
    pub m: usize,
    /// Background size; must fit all copy regions.
    pub n: usize,
    /// Edge density of template and background.
    pub p: f64,
    /// Number of template nodes shared between every pair of copies
    /// (the template's last `overlap` nodes).
    pub overlap: usize,
    /// Correlation of edges inside the shared block. Those background
    /// slots coincide across copies and are drawn once.
    pub overlap_corr: f64,
    /// Per-copy correlation for template pairs touching a non-shared
    /// node; index 0 is the strongest (first) copy.
    pub template_corrs: Vec<f64>,
}

impl McerSpec {
    /// Number of embedded copies.
    pub fn n_templates(&self) -> usize {
        self.template_corrs.len()
    }

    /// Template node indices of the shared block.
    pub fn overlap_nodes(&self) -> Vec<usize> {
        ((self.m - self.overlap)..self.m).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let nt = self.n_templates();
        if nt == 0 {
            return Err(Error::Input("at least one template copy required".into()));
        }
        if self.m == 0 {
            return Err(Error::Input("empty template".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Input(format!(
                "edge density {} not in (0,1)",
                self.p
            )));
        }
        if self.overlap > self.m {
            return Err(Error::Input(format!(
                "overlap {} exceeds template size {}",
                self.overlap, self.m
            )));
        }
        if nt >= 2 && self.overlap == self.m {
            return Err(Error::Input(
                "full overlap would make all copies identical".into(),
            ));
        }
        for (t, &r) in self.template_corrs.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Input(format!(
                    "copy {t} correlation {r} not in [0,1]"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.overlap_corr) {
            return Err(Error::Input(format!(
                "overlap correlation {} not in [0,1]",
                self.overlap_corr
            )));
        }
        let needed = self.m + (nt - 1) * (self.m - self.overlap);
        if self.n < needed {
            return Err(Error::Dimension(format!(
                "{nt} copies of {} nodes with overlap {} need {needed} background nodes, have {}",
                self.m, self.overlap, self.n
            )));
        }
        Ok(())
    }

    /// Ground-truth assignment of each copy. Copy 0 occupies background
    /// nodes `0..m`; copy t >= 1 keeps the shared tail in place and maps
    /// its other nodes to the next fresh block.
    pub fn truth_assignments(&self) -> Result<Vec<Assignment>> {
        self.validate()?;
        let free = self.m - self.overlap;
        let mut truths = Vec::with_capacity(self.n_templates());
        for t in 0..self.n_templates() {
            let map: Vec<usize> = (0..self.m)
                .map(|i| {
                    if t == 0 || i >= free {
                        i
                    } else {
                        self.m + (t - 1) * free + i
                    }
                })
                .collect();
            truths.push(Assignment::new(map, self.n)?);
        }
        Ok(truths)
    }
}

/// One sampled instance: template, background, and the ground truth of
/// every embedded copy.
#[derive(Clone, Debug, PartialEq)]
pub struct McerInstance {
    pub template: Graph,
    pub background: Graph,
    pub truth: Vec<Assignment>,
}

/// Draw `B ~ Bernoulli` conditioned on the template edge so that the
/// pair `(A, B)` has marginal `p` and correlation `r`.
#[inline]
fn conditional_edge(rng: &mut impl Rng, a: f64, p: f64, r: f64) -> f64 {
    let prob = if a != 0.0 {
        p + r * (1.0 - p)
    } else {
        p * (1.0 - r)
    };
    if rng.random::<f64>() < prob {
        1.0
    } else {
        0.0
    }
}

/// Sample an instance. Background pairs outside every copy's slots are
/// iid Bernoulli(p); slot pairs are conditioned on the template edge;
/// shared-block slots are drawn once with `overlap_corr`.
pub fn sample_mcer(spec: &McerSpec, rng: &mut impl Rng) -> Result<McerInstance> {
    spec.validate()?;
    let (m, n, p) = (spec.m, spec.n, spec.p);
    let truths = spec.truth_assignments()?;

    let mut a = Mat::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.random::<f64>() < p {
                a.set(i, j, 1.0);
                a.set(j, i, 1.0);
            }
        }
    }

    let mut b = Mat::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                b.set(u, v, 1.0);
                b.set(v, u, 1.0);
            }
        }
    }

    let free = m - spec.overlap;
    for (t, truth) in truths.iter().enumerate() {
        for i in 0..m {
            for j in (i + 1)..m {
                let shared = i >= free && j >= free;
                if shared && t > 0 {
                    continue; // slot coincides with copy 0's draw
                }
                let r = if shared {
                    spec.overlap_corr
                } else {
                    spec.template_corrs[t]
                };
                let w = conditional_edge(rng, a.get(i, j), p, r);
                let (u, v) = (truth.get(i), truth.get(j));
                b.set(u, v, w);
                b.set(v, u, w);
            }
        }
    }

    Ok(McerInstance {
        template: Graph::from_adjacency(a)?,
        background: Graph::from_adjacency(b)?,
        truth: truths,
    })
}

/// Mean structure of the sampled node-similarity matrix.
///
/// `diag_means[0]` is the mean on the first copy's non-shared truth
/// slots, `diag_means[1]` the mean on shared-block slots, and
/// `diag_means[t + 1]` the mean on copy t's non-shared slots for t >= 1;
/// with a single copy only `diag_means[0]` exists. Everything else gets
/// `background_mean`. Means must decrease strictly along the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilaritySpec {
    pub diag_means: Vec<f64>,
    pub background_mean: f64,
}

impl SimilaritySpec {
    pub fn validate(&self, n_templates: usize) -> Result<()> {
        let expect = if n_templates <= 1 { 1 } else { n_templates + 1 };
        if self.diag_means.len() != expect {
            return Err(Error::Input(format!(
                "{n_templates} copies need {expect} slot means, got {}",
                self.diag_means.len()
            )));
        }
        let mut prev = 1.0;
        for &mu in &self.diag_means {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::Input(format!("slot mean {mu} not in (0,1)")));
            }
            if mu >= prev {
                return Err(Error::Input("slot means must decrease strictly".into()));
            }
            prev = mu;
        }
        if !(self.background_mean > 0.0 && self.background_mean < prev) {
            return Err(Error::Input(format!(
                "background mean {} must lie in (0, {prev})",
                self.background_mean
            )));
        }
        Ok(())
    }
}

/// Mean of similarity entry `(i, j)` under `sim` for instances of `spec`.
pub fn slot_mean(spec: &McerSpec, sim: &SimilaritySpec, i: usize, j: usize) -> f64 {
    let free = spec.m - spec.overlap;
    if i >= free && spec.n_templates() >= 2 {
        return if j == i {
            sim.diag_means[1]
        } else {
            sim.background_mean
        };
    }
    if j == i {
        return sim.diag_means[0];
    }
    for t in 1..spec.n_templates() {
        if j == spec.m + (t - 1) * free + i {
            return sim.diag_means[t + 1];
        }
    }
    sim.background_mean
}

/// Sample the m-by-n similarity matrix: each entry is Beta(alpha, beta)
/// with fresh `alpha ~ U(0,1)` and `beta = alpha (1 - mu) / mu`, which
/// has mean `mu` regardless of alpha.
pub fn sample_similarity(spec: &McerSpec, sim: &SimilaritySpec, rng: &mut impl Rng) -> Result<Mat> {
    spec.validate()?;
    sim.validate(spec.n_templates())?;
    let mut out = Mat::zeros(spec.m, spec.n);
    for i in 0..spec.m {
        for j in 0..spec.n {
            let mu = slot_mean(spec, sim, i, j);
            let mut alpha = rng.random::<f64>();
            while alpha < 1e-9 {
                alpha = rng.random::<f64>();
            }
            let beta = alpha * (1.0 - mu) / mu;
            let draw = Beta::new(alpha, beta)
                .map_err(|e| Error::Input(format!("beta({alpha}, {beta}): {e}")))?
                .sample(rng);
            out.set(i, j, draw.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Correlation between two graphs obtained from a common mother graph of
/// density `p` by independently flipping each edge indicator with
/// probability `v`.
///
/// Both derived graphs have density `q = p + v(1 - 2p)`; the correlation
/// is 1 at `v = 0`, 0 at `v = 1/2`, and strictly decreasing in between.
pub fn corr_from_flip(p: f64, v: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Input(format!("density {p} not in (0,1)")));
    }
    if !(0.0..=0.5).contains(&v) {
        return Err(Error::Input(format!(
            "flip probability {v} not in [0, 1/2]"
        )));
    }
    let q = p + v * (1.0 - 2.0 * p);
    let both = p * (1.0 - v) * (1.0 - v) + (1.0 - p) * v * v;
    Ok((both - q * q) / (q * (1.0 - q)))
}

/// Node and pair tallies of an assignment against the first (strong) and
/// second (weak) copy truths.
///
/// Nodes: shared-block nodes are `a1` when placed at their common truth
/// slot, else `a2`; non-shared nodes are `b1` at the strong slot, `b2`
/// at the weak slot, else `b3`. Pairs inside the shared block are `j1`
/// when both endpoints are placed correctly, else `j2`; pairs touching a
/// non-shared node are `h1`/`h2` when both endpoints sit at strong/weak
/// slots, else `h3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignmentCounts {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2: usize,
    pub b3: usize,
    pub j1: usize,
    pub j2: usize,
    pub h1: usize,
    pub h2: usize,
    pub h3: usize,
}

/// Classify `a` against the two truths. `overlap` lists the template
/// nodes of the shared block, on which both truths must agree.
pub fn count_alignment(
    a: &Assignment,
    strong: &Assignment,
    weak: &Assignment,
    overlap: &[usize],
) -> Result<AlignmentCounts> {
    let m = a.len();
    if strong.len() != m || weak.len() != m {
        return Err(Error::Dimension(format!(
            "assignment lengths differ: {m}, {}, {}",
            strong.len(),
            weak.len()
        )));
    }
    let mut shared = vec![false; m];
    for &i in overlap {
        if i >= m {
            return Err(Error::Dimension(format!("overlap node {i} out of range")));
        }
        if strong.get(i) != weak.get(i) {
            return Err(Error::Input(format!("truths disagree on shared node {i}")));
        }
        shared[i] = true;
    }

    let mut c = AlignmentCounts {
        a1: 0,
        a2: 0,
        b1: 0,
        b2: 0,
        b3: 0,
        j1: 0,
        j2: 0,
        h1: 0,
        h2: 0,
        h3: 0,
    };
    for (i, &in_overlap) in shared.iter().enumerate() {
        if in_overlap {
            if a.get(i) == strong.get(i) {
                c.a1 += 1;
            } else {
                c.a2 += 1;
            }
        } else if a.get(i) == strong.get(i) {
            c.b1 += 1;
        } else if a.get(i) == weak.get(i) {
            c.b2 += 1;
        } else {
            c.b3 += 1;
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let at_strong = a.get(i) == strong.get(i) && a.get(j) == strong.get(j);
            let at_weak = a.get(i) == weak.get(i) && a.get(j) == weak.get(j);
            if shared[i] && shared[j] {
                if at_strong {
                    c.j1 += 1;
                } else {
                    c.j2 += 1;
                }
            } else if at_strong {
                c.h1 += 1;
            } else if at_weak {
                c.h2 += 1;
            } else {
                c.h3 += 1;
            }
        }
    }
    debug_assert_eq!(c.j1, c.a1 * c.a1.saturating_sub(1) / 2);
    debug_assert_eq!(
        c.j1 + c.j2,
        overlap.len() * overlap.len().saturating_sub(1) / 2
    );
    Ok(c)
}

/// Expected gap in the centered quadratic term between the weak copy's
/// truth and the counted assignment, for an instance with edge density
/// `p`, strong-copy correlation `r_strong`, shared-block correlation
/// `r_overlap`, and weak-copy correlation `r_weak`.
///
/// A positive value means the weak truth scores higher in expectation.
pub fn expected_edge_diff(
    c: &AlignmentCounts,
    p: f64,
    r_strong: f64,
    r_overlap: f64,
    r_weak: f64,
) -> f64 {
    let cv = p * (1.0 - p);
    8.0 * cv * (c.j2 as f64 * r_overlap + c.h1 as f64 * (r_weak - r_strong) + c.h3 as f64 * r_weak)
}

/// Expected gap in the similarity term between the weak copy's truth and
/// the counted assignment, after the strong truth's slots were
/// down-weighted by `1 - eps`.
///
/// `mus` = [strong-slot mean, shared-slot mean, weak-slot mean,
/// background mean]. A positive value means the weak truth picks up
/// more (penalized) similarity.
pub fn expected_feature_diff(c: &AlignmentCounts, mus: [f64; 4], eps: f64) -> f64 {
    let [mu1, mu2, mu3, mu4] = mus;
    let keep = 1.0 - eps;
    c.a2 as f64 * (keep * mu2 - mu4) + c.b1 as f64 * (mu3 - keep * mu1) + c.b3 as f64 * (mu3 - mu4)
}

/// Similarity from point coordinates bridged through anchor pairs.
///
/// Rows of `u` are template-node coordinates, rows of `v` background-node
/// coordinates, and row `j` of `(src, dst)` an anchor pair. The bridged
/// distance is `d(i, l) = min_j ||u_i - src_j|| + ||v_l - dst_j||`,
/// rescaled to similarity `(dmax - d) / (dmax - dmin)`; if every distance
/// is equal the similarity is all ones.
pub fn bridge_similarity(u: &Mat, v: &Mat, src: &Mat, dst: &Mat) -> Result<Mat> {
    let d = u.cols();
    if v.cols() != d || src.cols() != d || dst.cols() != d {
        return Err(Error::Dimension(
            "coordinate dimensions differ across inputs".into(),
        ));
    }
    if src.rows() != dst.rows() {
        return Err(Error::Dimension(format!(
            "{} source anchors but {} destination anchors",
            src.rows(),
            dst.rows()
        )));
    }
    if src.rows() == 0 {
        return Err(Error::Input("at least one anchor pair required".into()));
    }
    let norm = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(b) {
            let t = x - y;
            acc += t * t;
        }
        libm::sqrt(acc)
    };
    // Distance of each point to its best anchor endpoint is combined
    // additively, so the two halves can be minimized jointly only over
    // anchors, not independently.
    let mut dist = Mat::zeros(u.rows(), v.rows());
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    for i in 0..u.rows() {
        for l in 0..v.rows() {
            let mut best = f64::INFINITY;
            for j in 0..src.rows() {
                let cand = norm(u.row(i), src.row(j)) + norm(v.row(l), dst.row(j));
                if cand < best {
                    best = cand;
                }
            }
            dist.set(i, l, best);
            dmin = dmin.min(best);
            dmax = dmax.max(best);
        }
    }
    if dmax == dmin {
        return Ok(Mat::filled(u.rows(), v.rows(), 1.0));
    }
    Ok(Mat::from_fn(u.rows(), v.rows(), |i, l| {
        (dmax - dist.get(i, l)) / (dmax - dmin)
    }))
}

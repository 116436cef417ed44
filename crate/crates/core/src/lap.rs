//! Rectangular linear assignment: pick one column per row, columns
//! distinct, maximizing the sum of picked entries.
//!
//! [`lap_max`] is a shortest-augmenting-path solver, O(m^2 n) for an
//! m-by-n matrix. [`lap_max_reduced`] first shrinks the matrix to the
//! union of every row's m largest entries, at most min(n, m^2) columns,
//! and solves there. Some row's m-th best column is always free in an
//! optimal solution, so any row assigned outside its own top-m columns
//! could be reassigned without losing value; the reduced optimum
//! therefore equals the full optimum exactly. In the matcher the row
//! count is the template size and the column count the background size,
//! where m << n makes the reduction pay off.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;
use crate::{Error, Result};

/// Validated m-by-n score matrix, m <= n, all entries finite.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    mat: Mat,
}

impl CostMatrix {
    pub fn new(mat: Mat) -> Result<Self> {
        if mat.rows() > mat.cols() {
            return Err(Error::Dimension(format!(
                "cost matrix is {}x{}; rows must not exceed columns",
                mat.rows(),
                mat.cols()
            )));
        }
        if mat.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("cost matrix has a non-finite entry".into()));
        }
        Ok(CostMatrix { mat })
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }
}

/// Row-to-column assignment and its total score.
#[derive(Clone, Debug, PartialEq)]
pub struct LapSolution {
    /// `assignment[i]` is the column picked for row `i`; entries distinct.
    pub assignment: Vec<usize>,
    /// Sum of the picked entries of the original matrix.
    pub value: f64,
}

/// Column-reduced copy of a cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCost {
    /// Original indices of the retained columns, ascending.
    pub cols: Vec<usize>,
    /// The m-by-c reduced matrix, entries copied verbatim.
    pub mat: Mat,
}

/// Keep the union over rows of each row's m largest entries (m = row
/// count). Ties on the m-th value keep the lower column index. The
/// result has at most min(n, m^2) columns.
pub fn reduce_topm(c: &CostMatrix) -> ReducedCost {
    let (m, n) = (c.rows(), c.cols());
    let mut keep = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..m {
        let row = c.mat.row(i);
        order.clear();
        order.extend(0..n);
        // "Greater" comparison with column index as tie-break, so the
        // first m positions hold exactly the retained columns.
        let better = |&a: &usize, &b: &usize| {
            (row[b], a)
                .partial_cmp(&(row[a], b))
                .expect("finite entries")
        };
        if m < n {
            order.select_nth_unstable_by(m - 1, better);
        }
        for &j in &order[..m] {
            keep[j] = true;
        }
    }
    let cols: Vec<usize> = (0..n).filter(|&j| keep[j]).collect();
    let mat = Mat::from_fn(m, cols.len(), |i, jr| c.mat.get(i, cols[jr]));
    ReducedCost { cols, mat }
}

/// Maximum-score assignment via shortest augmenting paths.
///
/// Internally minimizes `rowmax_i - C[i][j]`, which is nonnegative, so
/// zero duals are feasible from the start; the per-row shift changes
/// every assignment's score by the same constant.
pub fn lap_max(c: &CostMatrix) -> LapSolution {
    let (m, n) = (c.rows(), c.cols());
    if m == 0 {
        return LapSolution {
            assignment: Vec::new(),
            value: 0.0,
        };
    }
    let row_max: Vec<f64> = (0..m)
        .map(|i| {
            c.mat
                .row(i)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let cost = |i: usize, j: usize| row_max[i] - c.mat.get(i, j);

    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; n];
    let mut col4row = vec![usize::MAX; m];
    let mut row4col = vec![usize::MAX; n];

    let mut shortest = vec![0.0f64; n];
    let mut path = vec![usize::MAX; n];
    let mut scanned_rows = vec![false; m];
    let mut scanned_cols: Vec<usize> = Vec::with_capacity(n);
    let mut remaining: Vec<usize> = Vec::with_capacity(n);

    for cur_row in 0..m {
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);
        path.iter_mut().for_each(|p| *p = usize::MAX);
        scanned_rows.iter_mut().for_each(|s| *s = false);
        scanned_cols.clear();
        remaining.clear();
        remaining.extend(0..n);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            scanned_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut index = usize::MAX;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + cost(i, j) - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                // Prefer a free column on ties so augmentation ends sooner.
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == usize::MAX) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            debug_assert!(min_val.is_finite(), "augmenting path search exhausted");
            let j = remaining.swap_remove(index);
            scanned_cols.push(j);
            if row4col[j] == usize::MAX {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..m {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for &j in &scanned_cols {
            v[j] -= min_val - shortest[j];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            core::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }

    let value = (0..m).map(|i| c.mat.get(i, col4row[i])).sum();
    LapSolution {
        assignment: col4row,
        value,
    }
}

/// [`lap_max`] on the top-m column reduction, mapped back to original
/// column indices. The value always equals the unreduced optimum.
pub fn lap_max_reduced(c: &CostMatrix) -> LapSolution {
    let reduced = reduce_topm(c);
    let sol = lap_max(&CostMatrix { mat: reduced.mat });
    let assignment: Vec<usize> = sol.assignment.iter().map(|&jr| reduced.cols[jr]).collect();
    let value = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| c.mat.get(i, j))
        .sum();
    LapSolution { assignment, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::for_each_injection;
    use crate::rng::derive_rng;
    use rand::Rng;

    fn brute_force_max(c: &CostMatrix) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for_each_injection(c.rows(), c.cols(), |map| {
            let v: f64 = map
                .iter()
                .enumerate()
                .map(|(i, &j)| c.mat().get(i, j))
                .sum();
            if v > best {
                best = v;
            }
        });
        best
    }

    fn assert_valid(sol: &LapSolution, m: usize, n: usize) {
        assert_eq!(sol.assignment.len(), m);
        let mut used = vec![false; n];
        for &j in &sol.assignment {
            assert!(j < n);
            assert!(!used[j], "column {j} assigned twice");
            used[j] = true;
        }
    }

    #[test]
    fn known_square_instance() {
        // For [[1,2,3],[2,4,6],[3,6,9]] (outer product of [1,2,3]) the
        // rearrangement inequality makes the diagonal optimal: 14.
        let mat = Mat::from_vec(3, 3, vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 3.0, 6.0, 9.0]).unwrap();
        let sol = lap_max(&CostMatrix::new(mat).unwrap());
        assert_eq!(sol.value, 14.0);
        assert_eq!(sol.assignment, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(CostMatrix::new(Mat::zeros(3, 2)).is_err());
        let mut mat = Mat::zeros(2, 3);
        mat.set(1, 1, f64::NAN);
        assert!(CostMatrix::new(mat).is_err());
    }

    #[test]
    fn empty_matrix() {
        let sol = lap_max(&CostMatrix::new(Mat::zeros(0, 0)).unwrap());
        assert!(sol.assignment.is_empty());
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn negative_entries_are_fine() {
        let mat = Mat::from_vec(2, 2, vec![-5.0, -1.0, -2.0, -4.0]).unwrap();
        let sol = lap_max(&CostMatrix::new(mat).unwrap());
        assert_eq!(sol.value, -3.0);
        assert_eq!(sol.assignment, vec![1, 0]);
    }

    #[test]
    fn matches_brute_force_on_random_floats() {
        for seed in 0..120u64 {
            let mut rng = derive_rng(900 + seed, 0);
            let m = rng.random_range(1..=5usize);
            let n = rng.random_range(m..=8usize);
            let mat = Mat::from_fn(m, n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let c = CostMatrix::new(mat).unwrap();
            let sol = lap_max(&c);
            assert_valid(&sol, m, n);
            let direct: f64 = sol
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| c.mat().get(i, j))
                .sum();
            assert!((sol.value - direct).abs() < 1e-12);
            let best = brute_force_max(&c);
            assert!(
                (sol.value - best).abs() < 1e-9,
                "seed {seed}: got {} want {best}",
                sol.value
            );
        }
    }

    #[test]
    fn matches_brute_force_on_tied_integers() {
        for seed in 0..120u64 {
            let mut rng = derive_rng(1700 + seed, 0);
            let m = rng.random_range(1..=5usize);
            let n = rng.random_range(m..=7usize);
            // Small integer range forces heavy ties.
            let mat = Mat::from_fn(m, n, |_, _| rng.random_range(0..4) as f64);
            let c = CostMatrix::new(mat).unwrap();
            let sol = lap_max(&c);
            assert_valid(&sol, m, n);
            assert_eq!(sol.value, brute_force_max(&c), "seed {seed}");
        }
    }

    #[test]
    fn reduction_keeps_each_rows_top_entries() {
        let mat = Mat::from_vec(
            2,
            5,
            vec![
                5.0, 1.0, 5.0, 0.0, 2.0, //
                0.0, 3.0, 3.0, 3.0, 1.0,
            ],
        )
        .unwrap();
        let red = reduce_topm(&CostMatrix::new(mat).unwrap());
        // Row 0 keeps columns {0, 2} (tie on 5.0 irrelevant, both beat 2.0).
        // Row 1 keeps {1, 2}: the tie among columns 1,2,3 at value 3.0
        // resolves to the lower indices.
        assert_eq!(red.cols, vec![0, 1, 2]);
        assert_eq!(red.mat.rows(), 2);
        assert_eq!(red.mat.cols(), 3);
        for (jr, &j) in red.cols.iter().enumerate() {
            assert_eq!(red.mat.get(0, jr), [5.0, 1.0, 5.0][j.min(2)]);
        }
    }

    #[test]
    fn reduction_bounds_and_wide_matrices() {
        let mut rng = derive_rng(33, 0);
        let mat = Mat::from_fn(3, 40, |_, _| rng.random::<f64>());
        let c = CostMatrix::new(mat).unwrap();
        let red = reduce_topm(&c);
        assert!(red.cols.len() <= 9);
        assert!(red.cols.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reduced_value_equals_full_value() {
        for seed in 0..200u64 {
            let mut rng = derive_rng(2500 + seed, 0);
            let m = rng.random_range(1..=6usize);
            let n = rng.random_range(m..=30usize);
            let integer = seed % 2 == 0;
            let mat = Mat::from_fn(m, n, |_, _| {
                if integer {
                    rng.random_range(-3..=3) as f64
                } else {
                    rng.random::<f64>() * 10.0 - 5.0
                }
            });
            let c = CostMatrix::new(mat).unwrap();
            let full = lap_max(&c);
            let red = lap_max_reduced(&c);
            assert_valid(&red, m, n);
            if integer {
                assert_eq!(full.value, red.value, "seed {seed}");
            } else {
                assert!(
                    (full.value - red.value).abs() <= 1e-12 * full.value.abs().max(1.0),
                    "seed {seed}: {} vs {}",
                    full.value,
                    red.value
                );
            }
        }
    }

    #[test]
    fn constant_matrix_all_ties() {
        let c = CostMatrix::new(Mat::filled(4, 9, 2.5)).unwrap();
        let full = lap_max(&c);
        let red = lap_max_reduced(&c);
        assert_eq!(full.value, 10.0);
        assert_eq!(red.value, 10.0);
        assert_valid(&full, 4, 9);
        assert_valid(&red, 4, 9);
    }
}

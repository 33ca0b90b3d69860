//! Exact maximum-weight perfect matching on a square weight matrix.

use crate::diffnet::Matrix;
use crate::error::{Error, Result};

/// A permutation matrix stored as the row-to-column map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchMatrix {
    row_to_col: Vec<usize>,
}

impl MatchMatrix {
    pub fn from_permutation(row_to_col: Vec<usize>) -> Result<Self> {
        let n = row_to_col.len();
        let mut seen = vec![false; n];
        for &c in &row_to_col {
            if c >= n || std::mem::replace(&mut seen[c], true) {
                return Err(Error::Invalid(format!("not a permutation: {row_to_col:?}")));
            }
        }
        Ok(MatchMatrix { row_to_col })
    }

    pub fn identity(n: usize) -> Self {
        MatchMatrix {
            row_to_col: (0..n).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.row_to_col.len()
    }

    pub fn row_to_col(&self) -> &[usize] {
        &self.row_to_col
    }

    pub fn col_to_row(&self) -> Vec<usize> {
        let mut inv = vec![0; self.row_to_col.len()];
        for (r, &c) in self.row_to_col.iter().enumerate() {
            inv[c] = r;
        }
        inv
    }

    /// `a_ij`
    pub fn linked(&self, row: usize, col: usize) -> bool {
        self.row_to_col[row] == col
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.size();
        Matrix::from_fn(n, n, |i, j| if self.linked(i, j) { 1.0 } else { 0.0 })
    }

    /// `sum_ij m_ij a_ij`, accumulated in row order.
    pub fn weight(&self, m: &Matrix) -> f64 {
        self.row_to_col
            .iter()
            .enumerate()
            .map(|(r, &c)| m.get(r, c))
            .sum()
    }
}

/// Permutation maximizing total weight. Among optimal permutations the
/// lexicographically smallest row-to-column map wins.
pub fn hungarian_max(m: &Matrix) -> Result<MatchMatrix> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::shape(
            "hungarian_max",
            format!("weight matrix is {}x{}", m.rows(), m.cols()),
        ));
    }
    m.ensure_finite(|| "hungarian_max weights".into())?;
    if n == 0 {
        return Ok(MatchMatrix { row_to_col: vec![] });
    }
    let scale = 1.0 + m.max_abs() * n as f64;
    let tol = 1e-12 * scale;

    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    let best = solve(m, &rows, &cols).1;

    // Fix rows in order to the smallest column that keeps the optimum.
    let mut row_to_col = Vec::with_capacity(n);
    let mut free_cols = cols;
    let mut fixed = 0.0;
    for r in 0..n {
        let rest_rows = &rows[r + 1..];
        let mut chosen = None;
        for (pos, &c) in free_cols.iter().enumerate() {
            let mut rest_cols = free_cols.clone();
            rest_cols.remove(pos);
            let rest = if rest_rows.is_empty() {
                0.0
            } else {
                solve(m, rest_rows, &rest_cols).1
            };
            if fixed + m.get(r, c) + rest >= best - tol {
                chosen = Some(pos);
                break;
            }
        }
        // the optimum is always reachable from some column
        let pos = chosen.expect("optimal completion exists");
        let c = free_cols.remove(pos);
        fixed += m.get(r, c);
        row_to_col.push(c);
    }
    Ok(MatchMatrix { row_to_col })
}

/// Shortest-augmenting-path Hungarian method with potentials on the
/// submatrix `rows x cols` (equal lengths). Returns the assignment as
/// positions into `cols` and its weight.
fn solve(m: &Matrix, rows: &[usize], cols: &[usize]) -> (Vec<usize>, f64) {
    let n = rows.len();
    debug_assert_eq!(n, cols.len());
    // minimize cost = -weight; 1-based arrays with a virtual column 0
    let cost = |i: usize, j: usize| -m.get(rows[i - 1], cols[j - 1]);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| m.get(rows[i], cols[j]))
        .sum();
    (assign, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng as _;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn diagonal_dominant_gives_identity() {
        let m = Matrix::from_fn(5, 5, |i, j| if i == j { 10.0 } else { 1.0 });
        assert_eq!(hungarian_max(&m).unwrap(), MatchMatrix::identity(5));
    }

    #[test]
    fn anti_diagonal() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let a = hungarian_max(&m).unwrap();
        assert_eq!(a.row_to_col(), &[1, 0]);
        assert_eq!(a.weight(&m), 2.0);
    }

    #[test]
    fn hand_cost_two_by_two() {
        let m = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let a = hungarian_max(&m).unwrap();
        assert_eq!(a.row_to_col(), &[0, 1]);
        assert!((a.weight(&m) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn six_by_six_matches_exhaustive() {
        let mut r = rng::stream(11, &[]);
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        for _ in 0..20 {
            let m = Matrix::from_fn(6, 6, |_, _| r.random_range(-1.0..1.0));
            let best = perms
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(hungarian_max(&m).unwrap().weight(&m), best);
        }
    }

    #[test]
    fn ties_break_lexicographically() {
        let m = Matrix::filled(4, 4, 1.0);
        assert_eq!(hungarian_max(&m).unwrap(), MatchMatrix::identity(4));
        // optima [1,0,2] and [2,0,1]
        let m = Matrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(hungarian_max(&m).unwrap().row_to_col(), &[1, 0, 2]);
    }

    #[test]
    fn beats_random_permutations_at_k50() {
        let mut r = rng::stream(5, &[]);
        let k = 50;
        let m = Matrix::from_fn(k, k, |_, _| r.random_range(0.0..1.0));
        let a = hungarian_max(&m).unwrap();
        let w = a.weight(&m);
        let mut p: Vec<usize> = (0..k).collect();
        for _ in 0..10_000 {
            p.shuffle(&mut r);
            let pw: f64 = p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum();
            assert!(w >= pw);
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(hungarian_max(&Matrix::zeros(2, 3)).is_err());
    }

    proptest! {
        #[test]
        fn integer_ties_match_lexicographic_brute_force(
            vals in prop::collection::vec(0i32..3, 16),
        ) {
            let m = Matrix::from_fn(4, 4, |i, j| vals[i * 4 + j] as f64);
            let a = hungarian_max(&m).unwrap();
            // permutations() is not lexicographic; sort first
            let mut perms = permutations(4);
            perms.sort();
            let best = perms.iter().map(|p| p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let first = perms.into_iter().find(|p| {
                p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum::<f64>() == best
            }).unwrap();
            prop_assert_eq!(a.row_to_col(), first.as_slice());
            let dense = a.to_matrix();
            let rows = dense.matmul_nt(&dense).unwrap();
            prop_assert_eq!(rows, Matrix::identity(4));
        }
    }
}

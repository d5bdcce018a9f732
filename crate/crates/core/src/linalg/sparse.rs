use std::sync::Arc;

use rayon::prelude::*;

use super::LinearOperator;

/// Row-compressed structure of a symmetric matrix (both triangles stored).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

impl SparsityPattern {
    /// Pattern coupling every pair of indices that appear together in one
    /// element list.
    pub fn from_elements<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for dofs in elements {
            for &i in dofs {
                rows[i].extend(dofs.iter().map(|&j| j as u32));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`, if it is structurally present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = self.row(i);
        row.binary_search(&(j as u32)).ok().map(|p| self.row_ptr[i] + p)
    }
}

/// Symmetric sparse matrix in compressed row layout.
///
/// Values are accumulated into the upper triangle only and mirrored by
/// [`SparseMatrix::finish_symmetric`], so symmetry holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `v` at `(min(i,j), max(i,j))`.
    pub fn add_upper(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let p = self
            .pattern
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) not in sparsity pattern"));
        self.values[p] += v;
    }

    /// Copies the upper triangle onto the lower one.
    pub fn finish_symmetric(&mut self) {
        let pat = Arc::clone(&self.pattern);
        for i in 0..pat.dim() {
            let start = pat.row_ptr[i];
            for (k, &j) in pat.row(i).iter().enumerate() {
                let j = j as usize;
                if j >= i {
                    break;
                }
                let upper = pat.position(j, i).expect("pattern is symmetric");
                self.values[start + k] = self.values[upper];
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.pattern.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `self + alpha * other`; both must share a pattern.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix) -> SparseMatrix {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "patterns differ"
        );
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        SparseMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        }
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        SparseMatrix {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.pattern.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            let start = self.pattern.row_ptr[i];
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                m[(i, j as usize)] = self.values[start + k];
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.pattern.dim()).all(|i| {
            self.pattern
                .row(i)
                .iter()
                .all(|&j| self.get(i, j as usize) == self.get(j as usize, i))
        })
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.pattern.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let pat = &*self.pattern;
        let vals = &self.values;
        y.par_iter_mut().with_min_len(4096).enumerate().for_each(|(i, yi)| {
            let (s, e) = (pat.row_ptr[i], pat.row_ptr[i + 1]);
            let mut acc = 0.0;
            for p in s..e {
                acc += vals[p] * x[pat.cols[p] as usize];
            }
            *yi = acc;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_and_apply() {
        let elems: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 2]];
        let pat = Arc::new(SparsityPattern::from_elements(3, elems.iter().map(|e| e.as_slice())));
        assert_eq!(pat.nnz(), 7);
        let mut m = SparseMatrix::zeros(pat);
        for e in &elems {
            m.add_upper(e[0], e[0], 1.0);
            m.add_upper(e[1], e[1], 1.0);
            m.add_upper(e[0], e[1], -1.0);
        }
        m.finish_symmetric();
        assert!(m.is_symmetric());
        let mut y = vec![0.0; 3];
        m.apply(&[1.0, 2.0, 4.0], &mut y);
        assert_eq!(y, vec![-1.0, -1.0, 2.0]);
        assert_eq!(m.diagonal(), vec![1.0, 2.0, 1.0]);
    }

    proptest::proptest! {
        #[test]
        fn scattered_elements_match_dense(
            elems in proptest::collection::vec(proptest::collection::btree_set(0usize..30, 1..6), 1..20),
            vals in proptest::collection::vec(-1.0f64..1.0, 36),
            x in proptest::collection::vec(-1.0f64..1.0, 30),
        ) {
            let lists: Vec<Vec<usize>> = elems.iter().map(|e| e.iter().copied().collect()).collect();
            let pat = Arc::new(SparsityPattern::from_elements(30, lists.iter().map(|l| l.as_slice())));
            let mut m = SparseMatrix::zeros(pat);
            let mut dense = vec![0.0; 900];
            for l in &lists {
                for (a, &i) in l.iter().enumerate() {
                    for (b, &j) in l.iter().enumerate().skip(a) {
                        let v = vals[a * 6 + b];
                        m.add_upper(i, j, v);
                        dense[i * 30 + j] += v;
                        if i != j {
                            dense[j * 30 + i] += v;
                        }
                    }
                }
            }
            m.finish_symmetric();
            proptest::prop_assert!(m.is_symmetric());
            let mut y = vec![0.0; 30];
            m.apply(&x, &mut y);
            for i in 0..30 {
                let yd: f64 = (0..30).map(|j| dense[i * 30 + j] * x[j]).sum();
                proptest::prop_assert!((y[i] - yd).abs() < 1e-12);
            }
        }
    }
}

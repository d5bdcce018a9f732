use rayon::prelude::*;

use super::{LinearOperator, MassOperator};
use crate::error::{Error, Result};

/// Dense symmetric positive definite block with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymBlock {
    offset: usize,
    size: usize,
    label: String,
    entries: Vec<f64>,
    factor: Vec<f64>,
}

impl DenseSymBlock {
    /// Factors a row-major `size x size` block. Fails with
    /// [`Error::Factorization`] if the block is not positive definite.
    pub fn new(block: usize, label: String, offset: usize, size: usize, entries: Vec<f64>) -> Result<Self> {
        assert_eq!(entries.len(), size * size);
        let factor = cholesky(size, &entries).ok_or_else(|| Error::Factorization {
            block,
            node: label.clone(),
        })?;
        Ok(Self {
            offset,
            size,
            label,
            entries,
            factor,
        })
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    fn apply_local(&self, x: &[f64], y: &mut [f64]) {
        let n = self.size;
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn solve_local(&self, r: &[f64], x: &mut [f64]) {
        let n = self.size;
        let l = &self.factor;
        for i in 0..n {
            let mut s = r[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }
}

fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 1e-14 * scale) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `M x = r` block by block.
pub fn block_factor_solve(m: &BlockDiagMatrix, r: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; r.len()];
    m.for_each_block(r, &mut x, |b, rs, xs| b.solve_local(rs, xs));
    x
}

/// Block-diagonal matrix over contiguous index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagMatrix {
    dim: usize,
    blocks: Vec<DenseSymBlock>,
}

impl BlockDiagMatrix {
    /// Blocks must tile `0..dim` in order.
    pub fn new(dim: usize, blocks: Vec<DenseSymBlock>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.offset != next {
                return Err(Error::AssemblyIntegrity(format!(
                    "block {} starts at {} instead of {next}",
                    b.label, b.offset
                )));
            }
            next += b.size;
        }
        if next != dim {
            return Err(Error::AssemblyIntegrity(format!(
                "blocks cover {next} of {dim} unknowns"
            )));
        }
        Ok(Self { dim, blocks })
    }

    pub fn blocks(&self) -> &[DenseSymBlock] {
        &self.blocks
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for i in 0..b.size {
                for j in 0..b.size {
                    m[(b.offset + i, b.offset + j)] = b.get(i, j);
                }
            }
        }
        m
    }

    fn for_each_block(&self, x: &[f64], y: &mut [f64], f: impl Fn(&DenseSymBlock, &[f64], &mut [f64]) + Sync) {
        let mut chunks: Vec<&mut [f64]> = Vec::with_capacity(self.blocks.len());
        let mut rest = y;
        for b in &self.blocks {
            let (head, tail) = rest.split_at_mut(b.size);
            chunks.push(head);
            rest = tail;
        }
        self.blocks
            .par_iter()
            .zip(chunks.into_par_iter())
            .with_min_len(256)
            .for_each(|(b, out)| f(b, &x[b.offset..b.offset + b.size], out));
    }
}

impl LinearOperator for BlockDiagMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.for_each_block(x, y, |b, xs, ys| b.apply_local(xs, ys));
    }
}

impl MassOperator for BlockDiagMatrix {
    fn solve(&self, r: &[f64], x: &mut [f64]) -> Result<()> {
        self.for_each_block(r, x, |b, rs, xs| b.solve_local(rs, xs));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RngState;

    fn spd(n: usize, rng: &mut RngState) -> Vec<f64> {
        let g = rng.vector(n * n);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += 0.5;
        }
        a
    }

    #[test]
    fn block_solve_inverts_apply() {
        let mut rng = RngState::new(1);
        let sizes = [3, 1, 5, 2];
        let mut blocks = Vec::new();
        let mut off = 0;
        for (k, &s) in sizes.iter().enumerate() {
            blocks.push(DenseSymBlock::new(k, format!("b{k}"), off, s, spd(s, &mut rng)).unwrap());
            off += s;
        }
        let m = BlockDiagMatrix::new(off, blocks).unwrap();
        let x = rng.vector(off);
        let mut y = vec![0.0; off];
        m.apply(&x, &mut y);
        let mut z = vec![0.0; off];
        m.solve(&y, &mut z).unwrap();
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).abs() < 1e-10);
        }
        let dense = m.to_dense();
        let xd = nalgebra::DVector::from_vec(x.clone());
        let yd = &dense * xd;
        for (a, b) in yd.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_block_is_reported() {
        let err = DenseSymBlock::new(7, "vertex 3".into(), 0, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Factorization { block: 7, .. }));
        assert!(DenseSymBlock::new(0, "v".into(), 0, 1, vec![-1.0]).is_err());
    }

    #[test]
    fn small_blocks() {
        let two = DenseSymBlock::new(0, "a".into(), 0, 2, vec![2.0, 0.0, 0.0, 4.0]).unwrap();
        let m = BlockDiagMatrix::new(2, vec![two]).unwrap();
        let x = block_factor_solve(&m, &[2.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let ident = (0..3)
            .map(|i| DenseSymBlock::new(i, String::new(), i, 1, vec![1.0]).unwrap())
            .collect();
        let m = BlockDiagMatrix::new(3, ident).unwrap();
        assert_eq!(block_factor_solve(&m, &[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn gaps_are_rejected() {
        let b = DenseSymBlock::new(0, "a".into(), 1, 1, vec![1.0]).unwrap();
        assert!(BlockDiagMatrix::new(2, vec![b]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn block_solve_roundtrip(sizes in proptest::collection::vec(1usize..8, 1..12), seed in 0u64..1000) {
            let mut rng = RngState::new(seed);
            let mut blocks = Vec::new();
            let mut off = 0;
            for (k, &s) in sizes.iter().enumerate() {
                blocks.push(DenseSymBlock::new(k, format!("b{k}"), off, s, spd(s, &mut rng)).unwrap());
                off += s;
            }
            let m = BlockDiagMatrix::new(off, blocks).unwrap();
            let x = rng.vector(off);
            let mut y = vec![0.0; off];
            m.apply(&x, &mut y);
            let z = block_factor_solve(&m, &y);
            for (a, b) in x.iter().zip(&z) {
                proptest::prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            }
        }
    }
}

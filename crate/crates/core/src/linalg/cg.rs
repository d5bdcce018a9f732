use super::{dot, LinearOperator, MassOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `|r| <= tol |b|`.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            jacobi: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite `a`.
///
/// `x` holds the initial guess on entry and the solution on exit. `diag` is
/// used for Jacobi preconditioning when `opts.jacobi` is set.
pub fn cg_solve(
    a: &dyn LinearOperator,
    diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    opts: &CgOptions,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Option<Vec<f64>> = match (opts.jacobi, diag) {
        (true, Some(d)) => Some(d.iter().map(|v| if *v > 0.0 { 1.0 / v } else { 1.0 }).collect()),
        _ => None,
    };
    let precond = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };

    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NotConverged {
                solver: "cg",
                iterations: it,
                last: res,
            });
        }
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                solver: "cg",
                iterations: it,
                last: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        relative_residual: res,
    })
}

/// A sparse mass matrix inverted iteratively, for bases without a lumped
/// block structure.
pub struct CgMass<'a, A: LinearOperator> {
    matrix: &'a A,
    diag: Vec<f64>,
    opts: CgOptions,
}

impl<'a, A: LinearOperator> CgMass<'a, A> {
    pub fn new(matrix: &'a A, diag: Vec<f64>, opts: CgOptions) -> Self {
        Self { matrix, diag, opts }
    }
}

impl<A: LinearOperator> LinearOperator for CgMass<'_, A> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.apply(x, y);
    }
}

impl<A: LinearOperator> MassOperator for CgMass<'_, A> {
    fn solve(&self, r: &[f64], x: &mut [f64]) -> Result<()> {
        cg_solve(self.matrix, Some(&self.diag), r, x, &self.opts).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{RngState, SparseMatrix, SparsityPattern};
    use std::sync::Arc;

    fn dense_spd(n: usize, rng: &mut RngState) -> SparseMatrix {
        let all: Vec<usize> = (0..n).collect();
        let pat = Arc::new(SparsityPattern::from_elements(n, std::iter::once(all.as_slice())));
        let g = rng.vector(n * n);
        let mut m = SparseMatrix::zeros(pat);
        for i in 0..n {
            for j in i..n {
                let mut v: f64 = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum();
                if i == j {
                    v += 1.0;
                }
                m.add_upper(i, j, v);
            }
        }
        m.finish_symmetric();
        m
    }

    #[test]
    fn diagonal_system() {
        let d = crate::linalg::BlockDiagMatrix::new(
            3,
            (0..3)
                .map(|i| {
                    crate::linalg::DenseSymBlock::new(i, String::new(), i, 1, vec![(i + 1) as f64]).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let mut x = vec![0.0; 3];
        let out = cg_solve(&d, None, &[1.0, 2.0, 3.0], &mut x, &CgOptions::default()).unwrap();
        assert!(out.iterations <= 3);
        for v in &x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_takes_one_iteration() {
        let b = [1.0, -3.0, 0.5];
        let mut x = [0.0; 3];
        let out = cg_solve(&crate::linalg::Identity(3), None, &b, &mut x, &CgOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(x, b);
    }

    #[test]
    fn residual_proxy_decreases() {
        let mut rng = RngState::new(8);
        let a = dense_spd(40, &mut rng);
        let b = rng.vector(40);
        let exact = a.to_dense().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b.clone()));
        let dense = a.to_dense();
        let mut last = f64::INFINITY;
        for iters in 1..40 {
            let mut x = vec![0.0; 40];
            let opts = CgOptions { tol: 1e-30, max_iter: iters, jacobi: false };
            let _ = cg_solve(&a, None, &b, &mut x, &opts);
            let e = nalgebra::DVector::from_vec(x) - &exact;
            let energy = e.dot(&(&dense * &e));
            assert!(energy <= last * (1.0 + 1e-12) + 1e-28, "{iters}: {energy} > {last}");
            last = energy;
        }
    }

    #[test]
    fn random_spd_matches_dense_solve() {
        let mut rng = RngState::new(3);
        let a = dense_spd(50, &mut rng);
        let b = rng.vector(50);
        for jacobi in [false, true] {
            let mut x = vec![0.0; 50];
            let opts = CgOptions {
                jacobi,
                ..CgOptions::default()
            };
            cg_solve(&a, Some(&a.diagonal()), &b, &mut x, &opts).unwrap();
            let exact = a
                .to_dense()
                .cholesky()
                .unwrap()
                .solve(&nalgebra::DVector::from_vec(b.clone()));
            let err = (nalgebra::DVector::from_vec(x) - &exact).norm() / exact.norm();
            assert!(err < 1e-9, "{err}");
        }
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let mut rng = RngState::new(4);
        let a = dense_spd(30, &mut rng);
        let mut x = vec![0.0; 30];
        let opts = CgOptions {
            max_iter: 2,
            jacobi: false,
            tol: 1e-14,
        };
        let err = cg_solve(&a, None, &rng.vector(30), &mut x, &opts).unwrap_err();
        assert!(matches!(err, Error::NotConverged { solver: "cg", .. }));
    }
}

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, EigenEstimate, LinearOperator, PowerOptions, RngState};
use crate::error::{Error, Result};

/// Largest eigenvalue of `K x = lambda M x` by locally optimal
/// preconditioned conjugate gradients with a single vector.
///
/// Only products with `K` and `M` and the preconditioner `precond` (an
/// approximation of `M^{-1}`) are needed. Stops when the Rayleigh quotient
/// changes by at most `opts.tol` relative between iterations.
pub fn lobpcg_max_eig(
    k: &dyn LinearOperator,
    m: &dyn LinearOperator,
    precond: &(dyn Fn(&[f64], &mut [f64]) + Sync),
    opts: &PowerOptions,
    rng: &mut RngState,
) -> Result<EigenEstimate> {
    let n = k.dim();
    let mut x = rng.vector(n);
    let mut kx = vec![0.0; n];
    let mut mx = vec![0.0; n];
    normalize(m, &mut x, &mut mx);
    k.apply(&x, &mut kx);
    let mut lambda = dot(&x, &kx);
    let mut history = vec![lambda];
    if kx.iter().all(|v| *v == 0.0) {
        return Ok(EigenEstimate {
            lambda: 0.0,
            iterations: 1,
            history,
        });
    }

    let mut p: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut kw = vec![0.0; n];
    let mut mw = vec![0.0; n];
    for it in 1..=opts.max_iter {
        for i in 0..n {
            r[i] = kx[i] - lambda * mx[i];
        }
        precond(&r, &mut w);
        // M-orthogonalize w against x and normalize, for a well-conditioned basis.
        m.apply(&w, &mut mw);
        let c = dot(&mx, &w);
        for i in 0..n {
            w[i] -= c * x[i];
            mw[i] -= c * mx[i];
        }
        let wn = dot(&w, &mw).max(0.0).sqrt();
        if !(wn > 0.0) {
            break;
        }
        for i in 0..n {
            w[i] /= wn;
            mw[i] /= wn;
        }
        k.apply(&w, &mut kw);

        let mut basis: Vec<(&[f64], &[f64], &[f64])> = vec![(&x, &kx, &mx), (&w, &kw, &mw)];
        if let Some((pv, kp, mp)) = &p {
            basis.push((pv, kp, mp));
        }
        let y = match ritz_max(&basis) {
            Some(y) => y,
            None => ritz_max(&basis[..2]).ok_or_else(|| Error::NotConverged {
                solver: "lobpcg",
                iterations: it,
                last: lambda,
            })?,
        };
        let used = y.len();
        // New search direction: the part of the update outside x.
        let mut np = vec![0.0; n];
        let mut nkp = vec![0.0; n];
        let mut nmp = vec![0.0; n];
        for (j, b) in basis.iter().enumerate().take(used).skip(1) {
            let c = y[j];
            for i in 0..n {
                np[i] += c * b.0[i];
                nkp[i] += c * b.1[i];
                nmp[i] += c * b.2[i];
            }
        }
        for i in 0..n {
            x[i] = y[0] * x[i] + np[i];
            kx[i] = y[0] * kx[i] + nkp[i];
            mx[i] = y[0] * mx[i] + nmp[i];
        }
        let pn = (dot(&np, &nmp)).max(0.0).sqrt();
        p = if pn > 0.0 {
            np.iter_mut().for_each(|v| *v /= pn);
            nkp.iter_mut().for_each(|v| *v /= pn);
            nmp.iter_mut().for_each(|v| *v /= pn);
            Some((np, nkp, nmp))
        } else {
            None
        };

        let s = dot(&x, &mx).sqrt();
        for i in 0..n {
            x[i] /= s;
            kx[i] /= s;
            mx[i] /= s;
        }
        let new = dot(&x, &kx);
        history.push(new);
        let change = (new - lambda).abs();
        lambda = new;
        if change <= opts.tol * lambda.abs() {
            // Refresh the products so the returned value is not a recurrence artefact.
            normalize(m, &mut x, &mut mx);
            k.apply(&x, &mut kx);
            return Ok(EigenEstimate {
                lambda: dot(&x, &kx),
                iterations: it,
                history,
            });
        }
    }
    Err(Error::NotConverged {
        solver: "lobpcg",
        iterations: opts.max_iter,
        last: lambda,
    })
}

fn normalize(m: &dyn LinearOperator, x: &mut [f64], mx: &mut [f64]) {
    m.apply(x, mx);
    let s = dot(x, mx).sqrt();
    x.iter_mut().for_each(|v| *v /= s);
    mx.iter_mut().for_each(|v| *v /= s);
}

/// Coefficients of the top Ritz vector in `basis`, normalized in `M`.
fn ritz_max(basis: &[(&[f64], &[f64], &[f64])]) -> Option<Vec<f64>> {
    let d = basis.len();
    let a = DMatrix::from_fn(d, d, |i, j| dot(basis[i].0, basis[j].1));
    let b = DMatrix::from_fn(d, d, |i, j| dot(basis[i].0, basis[j].2));
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    let diag_min = (0..d).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(diag_min > 1e-7) {
        return None;
    }
    let linv = l.clone().try_inverse()?;
    let c = &linv * a * linv.transpose();
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let z = eig.eigenvectors.column(imax).clone_owned();
    let y = linv.transpose() * z;
    let mut y: Vec<f64> = y.iter().copied().collect();
    if y[0] < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{power_iteration_max_eig, BlockDiagMatrix, DenseSymBlock, Identity, MassOperator};

    fn diag(vals: &[f64]) -> BlockDiagMatrix {
        BlockDiagMatrix::new(
            vals.len(),
            vals.iter()
                .enumerate()
                .map(|(i, v)| DenseSymBlock::new(i, String::new(), i, 1, vec![*v]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn matches_power_iteration_on_diagonal_pencil() {
        let kv: Vec<f64> = (1..=200).map(|i| (i as f64).sqrt()).collect();
        let mv: Vec<f64> = (1..=200).map(|i| 1.0 + 0.5 * ((i as f64) * 0.37).sin()).collect();
        let k = diag(&kv);
        let m = diag(&mv);
        let exact = kv.iter().zip(&mv).map(|(a, b)| a / b).fold(0.0, f64::max);
        let opts = PowerOptions { tol: 1e-12, max_iter: 5000 };
        let pre = |r: &[f64], z: &mut [f64]| m.solve(r, z).unwrap();
        let est = lobpcg_max_eig(&k, &m, &pre, &opts, &mut RngState::new(4)).unwrap();
        assert!((est.lambda - exact).abs() < 1e-9 * exact, "{} vs {exact}", est.lambda);
        let pw = power_iteration_max_eig(&k, &m, &PowerOptions { tol: 1e-14, max_iter: 200_000 }, &mut RngState::new(4)).unwrap();
        assert!((pw.lambda - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn zero_stiffness() {
        struct Zero;
        impl LinearOperator for Zero {
            fn dim(&self) -> usize {
                5
            }
            fn apply(&self, _: &[f64], y: &mut [f64]) {
                y.fill(0.0);
            }
        }
        let k = Zero;
        let pre = |r: &[f64], z: &mut [f64]| z.copy_from_slice(r);
        let est = lobpcg_max_eig(&k, &Identity(5), &pre, &PowerOptions::default(), &mut RngState::new(1)).unwrap();
        assert_eq!(est.lambda, 0.0);
    }
}

use super::{dot, LinearOperator, MassOperator, RngState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Stop when successive Rayleigh quotients differ by at most `tol` relative.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub iterations: usize,
    /// Rayleigh quotient at every iteration.
    pub history: Vec<f64>,
}

/// Largest eigenvalue of the pencil `K x = lambda M x` by power iteration on
/// `M^{-1} K` with the `M`-weighted Rayleigh quotient.
pub fn power_iteration_max_eig(
    k: &dyn LinearOperator,
    m: &dyn MassOperator,
    opts: &PowerOptions,
    rng: &mut RngState,
) -> Result<EigenEstimate> {
    let n = k.dim();
    let mut x = rng.vector(n);
    let mut mx = vec![0.0; n];
    m.apply(&x, &mut mx);
    let s = dot(&x, &mx).sqrt();
    x.iter_mut().for_each(|v| *v /= s);

    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut history = Vec::new();
    let mut prev = f64::NAN;
    for it in 1..=opts.max_iter {
        k.apply(&x, &mut y);
        let rq = dot(&x, &y);
        history.push(rq);
        if rq == 0.0 && y.iter().all(|v| *v == 0.0) {
            return Ok(EigenEstimate {
                lambda: 0.0,
                iterations: it,
                history,
            });
        }
        if (rq - prev).abs() <= opts.tol * rq.abs() {
            return Ok(EigenEstimate {
                lambda: rq,
                iterations: it,
                history,
            });
        }
        prev = rq;
        // z ~ rq x is a good starting guess for iterative mass solves.
        for i in 0..n {
            z[i] = rq * x[i];
        }
        m.solve(&y, &mut z)?;
        // M z = y, so |z|_M^2 = z . y.
        let zn = dot(&z, &y).sqrt();
        for i in 0..n {
            x[i] = z[i] / zn;
        }
    }
    Err(Error::NotConverged {
        solver: "power iteration",
        iterations: opts.max_iter,
        last: prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{BlockDiagMatrix, DenseSymBlock, Identity};

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
    fn diagonal_spectrum() {
        let k = diag(&[1.0, 5.0, 3.0]);
        let est = power_iteration_max_eig(&k, &Identity(3), &PowerOptions::default(), &mut RngState::new(1)).unwrap();
        assert!((est.lambda - 5.0).abs() < 1e-6);
        assert!(est.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn generalized_pencil() {
        let k = diag(&[4.0, 9.0, 1.0]);
        let m = diag(&[2.0, 1.0, 1.0]);
        let est = power_iteration_max_eig(&k, &m, &PowerOptions::default(), &mut RngState::new(2)).unwrap();
        assert!((est.lambda - 9.0).abs() < 1e-6);
    }

    #[test]
    fn zero_operator() {
        struct Zero;
        impl LinearOperator for Zero {
            fn dim(&self) -> usize {
                4
            }
            fn apply(&self, _: &[f64], y: &mut [f64]) {
                y.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let est = power_iteration_max_eig(&Zero, &Identity(4), &PowerOptions::default(), &mut RngState::new(3)).unwrap();
        assert_eq!(est.lambda, 0.0);
    }
}

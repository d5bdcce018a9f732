//! Closed-form integrals of basis products via the barycentric monomial formula.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

use super::{exact_monomial_integral, Basis, ElementGeometry, Family};

fn add_pow(a: &[u32; 4], b: &[u32; 4]) -> [u32; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// `(eps phi_k, phi_l)` over the element, integrated exactly.
pub fn exact_mass_gram(basis: &Basis, geom: &ElementGeometry, eps: &Matrix3<f64>) -> DMatrix<f64> {
    let g = &geom.grad_lambda;
    let n = basis.dim();
    let f = basis.functions();
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = 0.0;
        for a in &f[k].terms {
            for b in &f[l].terms {
                let dot = g[a.grad].dot(&(eps * g[b.grad]));
                s += a.coef * b.coef * dot * exact_monomial_integral(add_pow(&a.pow, &b.pow), geom.volume);
            }
        }
        s
    })
}

/// `(mu_inv curl phi_k, curl phi_l)` over the element, integrated exactly.
pub fn exact_curl_gram(basis: &Basis, geom: &ElementGeometry, mu_inv: &Matrix3<f64>) -> DMatrix<f64> {
    let x = geom.gradient_crosses();
    let n = basis.dim();
    let curls: Vec<_> = basis.functions().iter().map(|f| f.curl_terms()).collect();
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = 0.0;
        for (ca, pa, ia) in &curls[k] {
            for (cb, pb, ib) in &curls[l] {
                let dot = x[*ia].dot(&(mu_inv * x[*ib]));
                s += ca * cb * dot * exact_monomial_integral(add_pow(pa, pb), geom.volume);
            }
        }
        s
    })
}

/// Number of eigenvalues of a symmetric positive semidefinite matrix above
/// `rel_tol` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max == 0.0 {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&e| e.abs() > rel_tol * max).count()
}

/// Dimension added by the interior functions to the curl space:
/// `rank(curl of the family) - rank(curl of N1)`.
pub fn curl_rank(family: Family, geom: &ElementGeometry) -> usize {
    let mu = Matrix3::identity();
    let full = numerical_rank(&exact_curl_gram(&Basis::raw(family), geom, &mu), 1e-10);
    let nedelec = numerical_rank(&exact_curl_gram(&Basis::raw(Family::N1), geom, &mu), 1e-10);
    full - nedelec
}

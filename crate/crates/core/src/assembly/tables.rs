use std::sync::OnceLock;

use crate::refelem::{Basis, Family, LocalNode, QuadratureRule};

/// Geometry-independent data of the assembly basis of one family.
///
/// A basis function is `sum_m c_m(lambda) grad lambda_m` and its curl is
/// `sum_p d_p(lambda) X_p` with `X_p` the six gradient cross products, so all
/// element integrals reduce to contractions of these tables with
/// `grad lambda_m . eps grad lambda_m'` and `X_p . mu^{-1} X_p'`.
#[derive(Debug)]
pub struct ReferenceTables {
    pub basis: Basis,
    pub dim: usize,
    pub rule: QuadratureRule,
    /// `[q][k][m]` value coefficients at quadrature points.
    pub quad_values: Vec<Vec<[f64; 4]>>,
    /// `[q][k][p]` curl coefficients at quadrature points.
    pub quad_curls: Vec<Vec<[f64; 6]>>,
    /// `[n][k][m]` value coefficients at the eight lumping nodes.
    pub node_values: Vec<Vec<[f64; 4]>>,
    /// `sum_q w_q c_{k,m} c_{l,m'}` at `[(k * dim + l) * 16 + m * 4 + m']`.
    pub mass: Vec<f64>,
    /// `sum_q w_q d_{k,p} d_{l,p'}` at `[(k * dim + l) * 36 + p * 6 + p']`.
    pub curl: Vec<f64>,
}

impl ReferenceTables {
    pub fn get(family: Family) -> &'static ReferenceTables {
        static N1: OnceLock<ReferenceTables> = OnceLock::new();
        static EJ1: OnceLock<ReferenceTables> = OnceLock::new();
        static MEJ1: OnceLock<ReferenceTables> = OnceLock::new();
        let cell = match family {
            Family::N1 => &N1,
            Family::Ej1 => &EJ1,
            Family::Mej1 => &MEJ1,
        };
        cell.get_or_init(|| Self::build(Basis::for_assembly(family)))
    }

    pub fn build(basis: Basis) -> Self {
        let dim = basis.dim();
        let rule = QuadratureRule::high_order();
        let quad_values: Vec<_> = rule.points.iter().map(|b| basis.value_coefficients(b)).collect();
        let quad_curls: Vec<_> = rule.points.iter().map(|b| basis.curl_coefficients(b)).collect();
        let node_values = LocalNode::ALL
            .iter()
            .map(|n| basis.value_coefficients(&n.barycentric()))
            .collect();

        let mut mass = vec![0.0; dim * dim * 16];
        let mut curl = vec![0.0; dim * dim * 36];
        for (q, &w) in rule.weights.iter().enumerate() {
            let cv = &quad_values[q];
            let cc = &quad_curls[q];
            for k in 0..dim {
                for l in 0..dim {
                    let base = (k * dim + l) * 16;
                    for m in 0..4 {
                        let a = w * cv[k][m];
                        for mp in 0..4 {
                            mass[base + m * 4 + mp] += a * cv[l][mp];
                        }
                    }
                    let base = (k * dim + l) * 36;
                    for p in 0..6 {
                        let a = w * cc[k][p];
                        for pp in 0..6 {
                            curl[base + p * 6 + pp] += a * cc[l][pp];
                        }
                    }
                }
            }
        }
        Self {
            basis,
            dim,
            rule,
            quad_values,
            quad_curls,
            node_values,
            mass,
            curl,
        }
    }
}

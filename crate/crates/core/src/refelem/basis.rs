//! Local basis functions written as sums of `c * lambda^alpha * grad(lambda_m)`.
//!
//! Curls follow from `curl(p grad l_m) = sum_i (dp/dl_i) grad l_i x grad l_m`,
//! so both values and curls reduce to geometry-independent coefficients
//! multiplying the four gradients (values) or the six gradient cross products
//! (curls). [`Basis::value_coefficients`] and [`Basis::curl_coefficients`]
//! return those coefficients; geometry enters only through
//! [`ElementGeometry::grad_lambda`] and [`ElementGeometry::gradient_crosses`].

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use super::{ElementGeometry, LocalNode, LumpedTransform};
use crate::error::{Error, Result};
use crate::mesh::{LOCAL_EDGES, LOCAL_FACES};

/// Element family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Second-order Nédélec element, 20 local functions.
    N1,
    /// Nédélec extended by the four face bubbles `w_l`.
    Ej1,
    /// As `Ej1` with `w_4` replaced by the modified `w*_4`.
    Mej1,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::N1, Family::Ej1, Family::Mej1];

    pub fn local_dim(self) -> usize {
        match self {
            Family::N1 => 20,
            Family::Ej1 | Family::Mej1 => 24,
        }
    }

    pub fn has_interior(self) -> bool {
        self != Family::N1
    }

    /// Whether the family admits the block-diagonal lumped basis.
    pub fn supports_lumping(self) -> bool {
        self.has_interior()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::N1 => "n1",
            Family::Ej1 => "ej1",
            Family::Mej1 => "mej1",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n1" => Ok(Family::N1),
            "ej1" => Ok(Family::Ej1),
            "mej1" => Ok(Family::Mej1),
            other => Err(Error::InvalidArgument(format!(
                "unknown element family '{other}' (expected n1, ej1 or mej1)"
            ))),
        }
    }
}

/// What a local function is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalDof {
    /// `lambda_a grad lambda_b` on local edge `edge`; `from_first` selects
    /// `a` as the lower-numbered endpoint.
    Edge { edge: usize, from_first: bool },
    /// One of the two functions of the face opposite local vertex `face`.
    Face { face: usize, slot: usize },
    /// Interior function associated with the face opposite local vertex `face`.
    Interior { face: usize },
}

impl LocalDof {
    /// The local slot order shared by all families.
    pub fn of_slot(k: usize) -> LocalDof {
        match k {
            0..=11 => LocalDof::Edge {
                edge: k / 2,
                from_first: k % 2 == 0,
            },
            12..=19 => LocalDof::Face {
                face: (k - 12) / 2,
                slot: (k - 12) % 2,
            },
            20..=23 => LocalDof::Interior { face: k - 20 },
            _ => panic!("local slot {k} out of range"),
        }
    }

    /// Lumping node at which the lumped version of this function survives.
    pub fn node(self) -> LocalNode {
        match self {
            LocalDof::Edge { edge, from_first } => {
                let [a, b] = LOCAL_EDGES[edge];
                LocalNode::Vertex(if from_first { a } else { b })
            }
            LocalDof::Face { face, .. } | LocalDof::Interior { face } => LocalNode::Face(face),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub pow: [u32; 4],
    /// Index of the barycentric coordinate whose gradient multiplies the term.
    pub grad: usize,
}

/// `sum_t coef_t * lambda^pow_t * grad(lambda_{grad_t})`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BasisFunction {
    pub terms: Vec<Term>,
}

impl BasisFunction {
    fn monomial(coef: f64, factors: &[usize], grad: usize) -> Self {
        let mut pow = [0; 4];
        for &f in factors {
            pow[f] += 1;
        }
        Self {
            terms: vec![Term { coef, pow, grad }],
        }
    }

    fn plus(mut self, other: &BasisFunction, scale: f64) -> Self {
        for t in &other.terms {
            self.push(Term {
                coef: scale * t.coef,
                ..*t
            });
        }
        self
    }

    fn push(&mut self, term: Term) {
        if let Some(existing) = self
            .terms
            .iter_mut()
            .find(|e| e.pow == term.pow && e.grad == term.grad)
        {
            existing.coef += term.coef;
        } else {
            self.terms.push(term);
        }
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|t| t.coef != 0.0);
        self
    }

    /// Coefficients of the four gradients at a barycentric point.
    pub fn value_coefficients(&self, bary: &[f64; 4]) -> [f64; 4] {
        let mut c = [0.0; 4];
        for t in &self.terms {
            c[t.grad] += t.coef * monomial(&t.pow, bary);
        }
        c
    }

    /// Coefficients of the six gradient cross products ([`LOCAL_EDGES`] order).
    pub fn curl_coefficients(&self, bary: &[f64; 4]) -> [f64; 6] {
        let mut c = [0.0; 6];
        for t in &self.terms {
            for i in 0..4 {
                if i == t.grad || t.pow[i] == 0 {
                    continue;
                }
                let mut p = t.pow;
                p[i] -= 1;
                let d = t.coef * t.pow[i] as f64 * monomial(&p, bary);
                let (pair, sign) = cross_pair(i, t.grad);
                c[pair] += sign * d;
            }
        }
        c
    }

    pub fn eval(&self, geom: &ElementGeometry, bary: &[f64; 4]) -> Vector3<f64> {
        combine(&self.value_coefficients(bary), &geom.grad_lambda)
    }

    pub fn eval_curl(&self, geom: &ElementGeometry, bary: &[f64; 4]) -> Vector3<f64> {
        combine(&self.curl_coefficients(bary), &geom.gradient_crosses())
    }

    /// Curl written as `sum coef * lambda^pow * (cross product pair)`.
    pub fn curl_terms(&self) -> Vec<(f64, [u32; 4], usize)> {
        let mut out: Vec<(f64, [u32; 4], usize)> = Vec::new();
        for t in &self.terms {
            for i in 0..4 {
                if i == t.grad || t.pow[i] == 0 {
                    continue;
                }
                let mut p = t.pow;
                p[i] -= 1;
                let (pair, sign) = cross_pair(i, t.grad);
                let c = sign * t.coef * t.pow[i] as f64;
                match out.iter_mut().find(|e| e.1 == p && e.2 == pair) {
                    Some(e) => e.0 += c,
                    None => out.push((c, p, pair)),
                }
            }
        }
        out.retain(|e| e.0 != 0.0);
        out
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.pow.iter().sum()).max().unwrap_or(0)
    }
}

pub(crate) fn monomial(pow: &[u32; 4], bary: &[f64; 4]) -> f64 {
    let mut v = 1.0;
    for i in 0..4 {
        for _ in 0..pow[i] {
            v *= bary[i];
        }
    }
    v
}

/// Position of `grad l_i x grad l_j` among the ordered pairs, with the sign
/// picked up by swapping into ascending order.
pub(crate) fn cross_pair(i: usize, j: usize) -> (usize, f64) {
    let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    let idx = LOCAL_EDGES.iter().position(|&[x, y]| x == a && y == b).unwrap();
    (idx, s)
}

pub(crate) fn combine<const N: usize>(coef: &[f64; N], vectors: &[Vector3<f64>; N]) -> Vector3<f64> {
    coef.iter()
        .zip(vectors)
        .fold(Vector3::zeros(), |acc, (c, v)| acc + v * *c)
}

/// An evaluable local basis for one family.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    family: Family,
    lumped: bool,
    functions: Vec<BasisFunction>,
}

impl Basis {
    /// Hierarchical basis: Nédélec functions `Phi_1..Phi_20` followed, for the
    /// extended families, by the interior functions.
    pub fn raw(family: Family) -> Self {
        let mut functions = Vec::with_capacity(family.local_dim());
        for [i, j] in LOCAL_EDGES {
            functions.push(BasisFunction::monomial(1.0, &[i], j));
            functions.push(BasisFunction::monomial(1.0, &[j], i));
        }
        for [a, b, c] in LOCAL_FACES {
            // lambda_b (lambda_a grad lambda_c - lambda_c grad lambda_a)
            functions.push(
                BasisFunction::monomial(1.0, &[b, a], c)
                    .plus(&BasisFunction::monomial(-1.0, &[b, c], a), 1.0),
            );
            // lambda_c (lambda_a grad lambda_b - lambda_b grad lambda_a)
            functions.push(
                BasisFunction::monomial(1.0, &[c, a], b)
                    .plus(&BasisFunction::monomial(-1.0, &[c, b], a), 1.0),
            );
        }
        if family.has_interior() {
            for l in 0..4 {
                functions.push(face_bubble(l));
            }
            if family == Family::Mej1 {
                // w*_4 = w_4 + lambda_1 lambda_2 lambda_3 (lambda_2 - lambda_1) grad lambda_4
                let extra = BasisFunction::monomial(1.0, &[0, 1, 1, 2], 3)
                    .plus(&BasisFunction::monomial(-1.0, &[0, 0, 1, 2], 3), 1.0);
                functions[23] = functions[23].clone().plus(&extra, 1.0);
            }
        }
        Self {
            family,
            lumped: false,
            functions,
        }
    }

    /// Lumped basis with the standard coefficient matrices.
    pub fn lumped(family: Family) -> Result<Self> {
        Self::with_transform(family, &LumpedTransform::standard())
    }

    /// Lumped basis `Phi_hat = T * raw`.
    pub fn with_transform(family: Family, transform: &LumpedTransform) -> Result<Self> {
        if !family.supports_lumping() {
            return Err(Error::InvalidArgument(format!(
                "family {family} has no lumped basis"
            )));
        }
        let raw = Self::raw(family);
        let t = transform.matrix();
        let functions = (0..24)
            .map(|j| {
                (0..24)
                    .filter(|&k| t[(j, k)] != 0.0)
                    .fold(BasisFunction::default(), |acc, k| {
                        acc.plus(&raw.functions[k], t[(j, k)])
                    })
                    .pruned()
            })
            .collect();
        Ok(Self {
            family,
            lumped: true,
            functions,
        })
    }

    /// The basis used for global assembly: lumped where available.
    pub fn for_assembly(family: Family) -> Self {
        if family.supports_lumping() {
            Self::lumped(family).expect("family supports lumping")
        } else {
            Self::raw(family)
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn is_lumped(&self) -> bool {
        self.lumped
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn value_coefficients(&self, bary: &[f64; 4]) -> Vec<[f64; 4]> {
        self.functions.iter().map(|f| f.value_coefficients(bary)).collect()
    }

    pub fn curl_coefficients(&self, bary: &[f64; 4]) -> Vec<[f64; 6]> {
        self.functions.iter().map(|f| f.curl_coefficients(bary)).collect()
    }

    pub fn eval(&self, geom: &ElementGeometry, bary: &[f64; 4]) -> Vec<Vector3<f64>> {
        self.functions.iter().map(|f| f.eval(geom, bary)).collect()
    }

    pub fn eval_curl(&self, geom: &ElementGeometry, bary: &[f64; 4]) -> Vec<Vector3<f64>> {
        let crosses = geom.gradient_crosses();
        self.functions
            .iter()
            .map(|f| combine(&f.curl_coefficients(bary), &crosses))
            .collect()
    }
}

/// `w_l = (prod_{m != l} lambda_m) grad lambda_l`.
pub fn face_bubble(l: usize) -> BasisFunction {
    let others: Vec<usize> = (0..4).filter(|&m| m != l).collect();
    BasisFunction::monomial(1.0, &others, l)
}

/// `w*_4` of the modified family.
pub fn modified_face_bubble() -> BasisFunction {
    Basis::raw(Family::Mej1).functions[23].clone()
}

/// `grad(lambda_1 lambda_2 lambda_3 lambda_4)` written term by term.
pub fn bubble_gradient() -> BasisFunction {
    (0..4).fold(BasisFunction::default(), |acc, l| acc.plus(&face_bubble(l), 1.0))
}

/// Values of the basis functions of `family` at a barycentric point.
pub fn eval_basis(
    family: Family,
    lumped: bool,
    geom: &ElementGeometry,
    bary: &[f64; 4],
) -> Result<Vec<Vector3<f64>>> {
    let basis = if lumped { Basis::lumped(family)? } else { Basis::raw(family) };
    Ok(basis.eval(geom, bary))
}

/// Curls of the basis functions of `family` at a barycentric point.
pub fn eval_curl_basis(
    family: Family,
    lumped: bool,
    geom: &ElementGeometry,
    bary: &[f64; 4],
) -> Result<Vec<Vector3<f64>>> {
    let basis = if lumped { Basis::lumped(family)? } else { Basis::raw(family) };
    Ok(basis.eval_curl(geom, bary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::geometry::testing::random_tet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bary(rng: &mut impl Rng) -> [f64; 4] {
        let mut b = [0.0; 4];
        for v in b.iter_mut() {
            *v = rng.gen_range(0.01..1.0);
        }
        let s: f64 = b.iter().sum();
        b.map(|v| v / s)
    }

    #[test]
    fn dimensions() {
        assert_eq!(Basis::raw(Family::N1).dim(), 20);
        assert_eq!(Basis::raw(Family::Ej1).dim(), 24);
        assert_eq!(Basis::raw(Family::Mej1).dim(), 24);
        assert!(Basis::lumped(Family::N1).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("MEJ1".parse::<Family>().unwrap(), Family::Mej1);
        assert!(matches!("ej2".parse::<Family>(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn first_edge_function_at_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_tet(&mut rng);
        let basis = Basis::raw(Family::N1);
        for v in 0..4 {
            let phi1 = basis.eval(&g, &LocalNode::Vertex(v).barycentric())[0];
            if v == 0 {
                assert!((phi1 - g.grad_lambda[1]).norm() < 1e-14);
            } else {
                assert_eq!(phi1.norm(), 0.0);
            }
        }
    }

    #[test]
    fn edge_curls_are_gradient_crosses() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_tet(&mut rng);
        let basis = Basis::raw(Family::N1);
        let b = random_bary(&mut rng);
        let curls = basis.eval_curl(&g, &b);
        for (e, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            let expect = g.grad_lambda[*i].cross(&g.grad_lambda[*j]);
            assert!((curls[2 * e] - expect).norm() < 1e-12);
            assert!((curls[2 * e + 1] + expect).norm() < 1e-12);
        }
    }

    #[test]
    fn bubbles_sum_to_bubble_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_tet(&mut rng);
        let ej1 = Basis::raw(Family::Ej1);
        for _ in 0..20 {
            let b = random_bary(&mut rng);
            let vals = ej1.eval(&g, &b);
            let sum: Vector3<f64> = vals[20..24].iter().sum();
            // grad(l0 l1 l2 l3) by the product rule, written independently
            let mut grad = Vector3::zeros();
            for l in 0..4 {
                let others: f64 = (0..4).filter(|&m| m != l).map(|m| b[m]).product();
                grad += g.grad_lambda[l] * others;
            }
            assert!((sum - grad).norm() < 1e-13 * grad.norm().max(1.0));
        }
    }

    #[test]
    fn curls_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_tet(&mut rng);
        let basis = Basis::lumped(Family::Mej1).unwrap();
        let b = random_bary(&mut rng);
        let x = g.point(&b);
        let curls = basis.eval_curl(&g, &b);
        let h = 1e-5;
        let field = |p: &crate::mesh::Point, k: usize| basis.functions()[k].eval(&g, &g.barycentric(p));
        for k in 0..24 {
            let mut jac = [[0.0; 3]; 3];
            for d in 0..3 {
                let mut e = crate::mesh::Point::zeros();
                e[d] = h;
                let df = (field(&(x + e), k) - field(&(x - e), k)) / (2.0 * h);
                for c in 0..3 {
                    jac[c][d] = df[c];
                }
            }
            let fd = Vector3::new(
                jac[2][1] - jac[1][2],
                jac[0][2] - jac[2][0],
                jac[1][0] - jac[0][1],
            );
            let scale = curls[k].norm().max(1.0);
            assert!((fd - curls[k]).norm() < 1e-6 * scale, "k={k}: {fd} vs {}", curls[k]);
        }
    }

    #[test]
    fn local_slots_map_to_nodes() {
        let nodes: Vec<_> = (0..24).map(|k| LocalDof::of_slot(k).node()).collect();
        for n in LocalNode::ALL {
            assert_eq!(nodes.iter().filter(|&&m| m == n).count(), 3, "{n:?}");
        }
    }
}

use super::ElementGeometry;
use crate::mesh::{Point, LOCAL_FACES};

/// Quadrature rule on a tetrahedron in barycentric coordinates.
///
/// Weights are relative to the element volume and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Index of a node of the lumping rule: vertices `0..4`, then face midpoints `4..8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalNode {
    Vertex(usize),
    /// Midpoint of the face opposite the given local vertex.
    Face(usize),
}

impl LocalNode {
    pub const ALL: [LocalNode; 8] = [
        LocalNode::Vertex(0),
        LocalNode::Vertex(1),
        LocalNode::Vertex(2),
        LocalNode::Vertex(3),
        LocalNode::Face(0),
        LocalNode::Face(1),
        LocalNode::Face(2),
        LocalNode::Face(3),
    ];

    pub fn index(self) -> usize {
        match self {
            LocalNode::Vertex(i) => i,
            LocalNode::Face(i) => 4 + i,
        }
    }

    pub fn barycentric(self) -> [f64; 4] {
        match self {
            LocalNode::Vertex(i) => {
                let mut b = [0.0; 4];
                b[i] = 1.0;
                b
            }
            LocalNode::Face(i) => {
                let mut b = [0.0; 4];
                for &v in &LOCAL_FACES[i] {
                    b[v] = 1.0 / 3.0;
                }
                b
            }
        }
    }
}

impl QuadratureRule {
    /// Eight-point mass-lumping rule: vertices with weight 1/40, face
    /// midpoints with weight 9/40. Exact for cubic polynomials.
    pub fn lumping() -> Self {
        let points = LocalNode::ALL.iter().map(|n| n.barycentric()).collect();
        let weights = LocalNode::ALL
            .iter()
            .map(|n| match n {
                LocalNode::Vertex(_) => 1.0 / 40.0,
                LocalNode::Face(_) => 9.0 / 40.0,
            })
            .collect();
        Self { points, weights }
    }

    /// Collapsed tensor Gauss–Legendre rule with `n` points per axis on the
    /// Duffy-mapped cube. Exact for total degree `2n - 3` (degree 7 for `n = 5`).
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for (u, wu) in x.iter().zip(&w) {
            for (v, wv) in x.iter().zip(&w) {
                for (s, ws) in x.iter().zip(&w) {
                    let l1 = *u;
                    let l2 = v * (1.0 - u);
                    let l3 = s * (1.0 - u) * (1.0 - v);
                    points.push([1.0 - l1 - l2 - l3, l1, l2, l3]);
                    // Jacobian (1-u)^2 (1-v), divided by the reference volume 1/6.
                    weights.push(6.0 * wu * wv * ws * (1.0 - u).powi(2) * (1.0 - v));
                }
            }
        }
        Self { points, weights }
    }

    /// Rule used for consistent matrices, loads and error integrals. Exact
    /// to degree 9, which covers the quartic modified bubble squared.
    pub fn high_order() -> Self {
        Self::collapsed_gauss(6)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|K| * sum_q w_q f(lambda_q)`.
    pub fn integrate_barycentric(&self, volume: f64, f: impl Fn(&[f64; 4]) -> f64) -> f64 {
        volume
            * self
                .points
                .iter()
                .zip(&self.weights)
                .map(|(p, w)| w * f(p))
                .sum::<f64>()
    }

    pub fn integrate(&self, geom: &ElementGeometry, f: impl Fn(&Point) -> f64) -> f64 {
        self.integrate_barycentric(geom.volume, |b| f(&geom.point(b)))
    }
}

/// Integral of a function over `geom` with the eight-point lumping rule.
pub fn quadrature_integrate(geom: &ElementGeometry, f: impl Fn(&Point) -> f64) -> f64 {
    QuadratureRule::lumping().integrate(geom, f)
}

/// Exact integral of `lambda_0^a lambda_1^b lambda_2^c lambda_3^d` over a
/// tetrahedron of the given volume: `|K| a! b! c! d! 3! / (a+b+c+d+3)!`.
pub fn exact_monomial_integral(exponents: [u32; 4], volume: f64) -> f64 {
    // Accumulates a! b! c! d! / s! as a product of ratios.
    let mut ratio = 1.0;
    let mut m = 0u32;
    for &e in &exponents {
        for k in 1..=e {
            m += 1;
            ratio *= k as f64 / m as f64;
        }
    }
    let s = m as f64;
    volume * ratio * 6.0 / ((s + 1.0) * (s + 2.0) * (s + 3.0))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// All exponent tuples with total degree `<= max_degree`.
pub fn monomials_up_to(max_degree: u32) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                for d in 0..=max_degree - a - b - c {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

pub fn eval_monomial(exponents: &[u32; 4], bary: &[f64; 4]) -> f64 {
    exponents
        .iter()
        .zip(bary)
        .map(|(&e, &l)| l.powi(e as i32))
        .product()
}

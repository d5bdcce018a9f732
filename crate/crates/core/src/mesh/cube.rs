use super::{extract_topology, Mesh, Point};
use crate::error::{Error, Result};

const AXIS_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Kuhn subdivision of the unit cube: `n^3` subcubes, each split into six
/// tetrahedra around the diagonal from its lowest to its highest corner.
pub fn build_cube_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cube mesh needs at least one subdivision per axis".into(),
        ));
    }
    let np = n + 1;
    let id = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let h = 1.0 / n as f64;

    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for order in AXIS_ORDERS {
                    let mut corner = [i, j, k];
                    let mut tet = [id(i, j, k), 0, 0, 0];
                    for (step, &axis) in order.iter().enumerate() {
                        corner[axis] += 1;
                        tet[step + 1] = id(corner[0], corner[1], corner[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    extract_topology(vertices, tets)
}

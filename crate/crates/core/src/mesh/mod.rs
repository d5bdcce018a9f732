//! Tetrahedral meshes of the unit cube and their edge/face topology.
//!
//! Every tetrahedron stores its vertices in ascending global order. Local
//! edges and faces are then numbered the same way on every element:
//!
//! * local edges `(0,1) (0,2) (0,3) (1,2) (1,3) (2,3)`, see [`LOCAL_EDGES`];
//! * local face `i` is the face opposite local vertex `i`, see [`LOCAL_FACES`].
//!
//! Because shared entities carry the same sorted vertex tuple on both sides,
//! barycentric products built on them agree across elements.

mod cube;
mod io;

pub use cube::build_cube_mesh;
pub use io::{parse_mesh, read_mesh, serialize_mesh, write_mesh};

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Local vertex pairs of the six tetrahedron edges.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the four faces; entry `i` is opposite vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    tet_faces: Vec<[usize; 4]>,
    face_tets: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    boundary_face: Vec<bool>,
    boundary_edge: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    /// Maximum edge length.
    pub h_max: f64,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_faces: usize,
    pub n_tets: usize,
}

impl Mesh {
    /// Builds the full topology from raw connectivity.
    ///
    /// Tetrahedra are re-sorted so their vertex indices ascend.
    pub fn from_connectivity(vertices: Vec<Point>, tets: Vec<[usize; 4]>) -> Result<Self> {
        extract_topology(vertices, tets)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Global edge index of each local edge slot.
    pub fn tet_edges(&self, tet: usize) -> &[usize; 6] {
        &self.tet_edges[tet]
    }

    /// Global face index of each local face slot.
    pub fn tet_faces(&self, tet: usize) -> &[usize; 4] {
        &self.tet_faces[tet]
    }

    /// Tetrahedra incident to a face, one or two entries, ascending.
    pub fn face_tets(&self, face: usize) -> &[usize] {
        &self.face_tets[face]
    }

    /// Edges incident to a vertex, ascending.
    pub fn vertex_edges(&self, vertex: usize) -> &[usize] {
        &self.vertex_edges[vertex]
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.boundary_face[face]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.boundary_edge[edge]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn tet_vertices(&self, tet: usize) -> [Point; 4] {
        self.tets[tet].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.tet_vertices(tet);
        (b - a).cross(&(c - a)).dot(&(d - a)).abs() / 6.0
    }

    pub fn stats(&self) -> MeshStats {
        let h_max = self
            .edges
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max);
        MeshStats {
            h_max,
            n_vertices: self.n_vertices(),
            n_edges: self.n_edges(),
            n_faces: self.n_faces(),
            n_tets: self.n_tets(),
        }
    }

    /// `V - E + F - T`; equals 1 for a triangulated ball.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
            - self.n_tets() as i64
    }
}

/// Derives edges, faces, incidences and boundary flags from connectivity.
pub fn extract_topology(vertices: Vec<Point>, tets: Vec<[usize; 4]>) -> Result<Mesh> {
    let nv = vertices.len();
    let mut sorted_tets = Vec::with_capacity(tets.len());
    for (t, tet) in tets.iter().enumerate() {
        let mut s = *tet;
        s.sort_unstable();
        if let Some(&bad) = s.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidInput(format!(
                "tetrahedron {t} references vertex {bad}, but the mesh has {nv} vertices"
            )));
        }
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "tetrahedron {t} repeats a vertex: {tet:?}"
            )));
        }
        sorted_tets.push(s);
    }

    let mut seen: HashMap<[usize; 4], usize> = HashMap::with_capacity(sorted_tets.len());
    for (t, s) in sorted_tets.iter().enumerate() {
        if let Some(prev) = seen.insert(*s, t) {
            return Err(Error::InvalidInput(format!(
                "tetrahedra {prev} and {t} are duplicates"
            )));
        }
    }

    let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
    let mut face_index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    let mut face_tets: Vec<Vec<usize>> = Vec::new();
    let mut tet_edges = Vec::with_capacity(sorted_tets.len());
    let mut tet_faces = Vec::with_capacity(sorted_tets.len());

    for (t, s) in sorted_tets.iter().enumerate() {
        let mut te = [0; 6];
        for (slot, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            let key = [s[*i], s[*j]];
            te[slot] = *edge_index.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
        }
        let mut tf = [0; 4];
        for (slot, [i, j, k]) in LOCAL_FACES.iter().enumerate() {
            let key = [s[*i], s[*j], s[*k]];
            let f = *face_index.entry(key).or_insert_with(|| {
                faces.push(key);
                face_tets.push(Vec::with_capacity(2));
                faces.len() - 1
            });
            face_tets[f].push(t);
            if face_tets[f].len() > 2 {
                return Err(Error::NonManifold {
                    face: key,
                    count: face_tets[f].len(),
                });
            }
            tf[slot] = f;
        }
        tet_edges.push(te);
        tet_faces.push(tf);
    }

    let boundary_face: Vec<bool> = face_tets.iter().map(|ts| ts.len() == 1).collect();
    let mut boundary_edge = vec![false; edges.len()];
    for (f, face) in faces.iter().enumerate() {
        if boundary_face[f] {
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                boundary_edge[edge_index[&[face[a], face[b]]]] = true;
            }
        }
    }

    let mut vertex_edges = vec![Vec::new(); nv];
    for (e, &[a, b]) in edges.iter().enumerate() {
        vertex_edges[a].push(e);
        vertex_edges[b].push(e);
    }

    Ok(Mesh {
        vertices,
        tets: sorted_tets,
        edges,
        faces,
        tet_edges,
        tet_faces,
        face_tets,
        vertex_edges,
        boundary_face,
        boundary_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> Mesh {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        extract_topology(v, vec![[3, 1, 0, 2]]).unwrap()
    }

    #[test]
    fn single_tet_is_all_boundary() {
        let m = reference_tet();
        assert_eq!(m.tets()[0], [0, 1, 2, 3]);
        assert_eq!(m.n_edges(), 6);
        assert_eq!(m.n_faces(), 4);
        assert!((0..4).all(|f| m.is_boundary_face(f)));
        assert!((0..6).all(|e| m.is_boundary_edge(e)));
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn local_face_is_opposite_vertex() {
        let m = reference_tet();
        let tet = m.tets()[0];
        for i in 0..4 {
            let face = m.faces()[m.tet_faces(0)[i]];
            assert!(!face.contains(&tet[i]));
        }
    }

    #[test]
    fn rejects_bad_connectivity() {
        let v = vec![Point::zeros(); 5];
        assert!(matches!(
            extract_topology(v.clone(), vec![[0, 1, 2, 9]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            extract_topology(v.clone(), vec![[0, 1, 2, 2]]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            extract_topology(v, vec![[0, 1, 2, 3], [3, 2, 1, 0]]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_non_manifold_face() {
        let v = vec![Point::zeros(); 6];
        let err = extract_topology(v, vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]]).unwrap_err();
        assert!(matches!(err, Error::NonManifold { face: [0, 1, 2], count: 3 }));
    }
}

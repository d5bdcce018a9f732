use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::{Family, LocalDof, LocalNode};

/// Marker for an eliminated (Dirichlet) local dof.
pub const CONSTRAINED: usize = usize::MAX;

/// Lumping node of the global mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalNode {
    Vertex(usize),
    Face(usize),
}

/// Contiguous range of free dofs sharing one lumping node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBlock {
    pub node: GlobalNode,
    pub start: usize,
    pub len: usize,
}

/// Global numbering of the free dofs with boundary dofs eliminated.
///
/// Free dofs are numbered block by block: first every vertex (the edge dofs
/// attached to it), then every face (its two face dofs followed by the
/// interior dofs of the adjacent elements). The lumped mass is therefore
/// block diagonal in this numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    family: Family,
    boundary: BoundaryCondition,
    n_total: usize,
    n_free: usize,
    edge_dofs: Vec<[usize; 2]>,
    face_dofs: Vec<[usize; 2]>,
    interior_dofs: Vec<[usize; 4]>,
    tet_dofs: Vec<[usize; 24]>,
    blocks: Vec<NodeBlock>,
    block_of: Vec<usize>,
}

/// Treatment of the dofs on the boundary of the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    /// Vanishing tangential trace: boundary edge and face dofs are eliminated.
    #[default]
    Dirichlet,
    /// Every dof is kept; the boundary condition is natural.
    Natural,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Natural => "natural",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "natural" => Ok(BoundaryCondition::Natural),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary condition '{other}' (expected dirichlet or natural)"
            ))),
        }
    }
}

/// Dof map with the tangential trace eliminated on the boundary.
pub fn build_dof_map(mesh: &Mesh, family: Family) -> DofMap {
    build_dof_map_with(mesh, family, BoundaryCondition::Dirichlet)
}

pub fn build_dof_map_with(mesh: &Mesh, family: Family, boundary: BoundaryCondition) -> DofMap {
    let eliminate = boundary == BoundaryCondition::Dirichlet;
    let ne = mesh.n_edges();
    let nf = mesh.n_faces();
    let nt = mesh.n_tets();
    let mut edge_dofs = vec![[CONSTRAINED; 2]; ne];
    let mut face_dofs = vec![[CONSTRAINED; 2]; nf];
    let mut interior_dofs = vec![[CONSTRAINED; 4]; nt];
    let mut blocks = Vec::new();
    let mut next = 0;

    for v in 0..mesh.n_vertices() {
        let start = next;
        for &e in mesh.vertex_edges(v) {
            if eliminate && mesh.is_boundary_edge(e) {
                continue;
            }
            let end = if mesh.edges()[e][0] == v { 0 } else { 1 };
            edge_dofs[e][end] = next;
            next += 1;
        }
        if next > start {
            blocks.push(NodeBlock {
                node: GlobalNode::Vertex(v),
                start,
                len: next - start,
            });
        }
    }

    for f in 0..nf {
        let start = next;
        if !(eliminate && mesh.is_boundary_face(f)) {
            face_dofs[f] = [next, next + 1];
            next += 2;
        }
        if family.has_interior() {
            for &t in mesh.face_tets(f) {
                let local = mesh.tet_faces(t).iter().position(|&g| g == f).unwrap();
                interior_dofs[t][local] = next;
                next += 1;
            }
        }
        if next > start {
            blocks.push(NodeBlock {
                node: GlobalNode::Face(f),
                start,
                len: next - start,
            });
        }
    }

    let dim = family.local_dim();
    let tet_dofs = (0..nt)
        .map(|t| {
            let mut map = [CONSTRAINED; 24];
            for (k, slot) in map.iter_mut().enumerate().take(dim) {
                *slot = match LocalDof::of_slot(k) {
                    LocalDof::Edge { edge, from_first } => {
                        edge_dofs[mesh.tet_edges(t)[edge]][if from_first { 0 } else { 1 }]
                    }
                    LocalDof::Face { face, slot } => face_dofs[mesh.tet_faces(t)[face]][slot],
                    LocalDof::Interior { face } => interior_dofs[t][face],
                };
            }
            map
        })
        .collect();

    let mut block_of = vec![0; next];
    for (b, blk) in blocks.iter().enumerate() {
        block_of[blk.start..blk.start + blk.len].fill(b);
    }

    let interior = if family.has_interior() { 4 * nt } else { 0 };
    DofMap {
        family,
        boundary,
        n_total: 2 * ne + 2 * nf + interior,
        n_free: next,
        edge_dofs,
        face_dofs,
        interior_dofs,
        tet_dofs,
        blocks,
        block_of,
    }
}

impl DofMap {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    /// Dofs before elimination.
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_constrained(&self) -> usize {
        self.n_total - self.n_free
    }

    /// Free index of the dof attached to each endpoint of an edge.
    pub fn edge_dofs(&self, edge: usize) -> [usize; 2] {
        self.edge_dofs[edge]
    }

    pub fn face_dofs(&self, face: usize) -> [usize; 2] {
        self.face_dofs[face]
    }

    pub fn interior_dofs(&self, tet: usize) -> [usize; 4] {
        self.interior_dofs[tet]
    }

    /// Global free index for each local slot, [`CONSTRAINED`] if eliminated.
    /// Only the first `family.local_dim()` entries are meaningful.
    pub fn tet_dofs(&self, tet: usize) -> &[usize] {
        &self.tet_dofs[tet][..self.family.local_dim()]
    }

    pub fn free_tet_dofs(&self, tet: usize) -> Vec<usize> {
        self.tet_dofs(tet).iter().copied().filter(|&d| d != CONSTRAINED).collect()
    }

    pub fn blocks(&self) -> &[NodeBlock] {
        &self.blocks
    }

    pub fn block_of(&self, dof: usize) -> usize {
        self.block_of[dof]
    }

    /// Global lumping node of a local node of `tet`.
    pub fn global_node(&self, mesh: &Mesh, tet: usize, node: LocalNode) -> GlobalNode {
        match node {
            LocalNode::Vertex(i) => GlobalNode::Vertex(mesh.tets()[tet][i]),
            LocalNode::Face(i) => GlobalNode::Face(mesh.tet_faces(tet)[i]),
        }
    }
}

//! Reference-element machinery: geometry, quadrature, local bases.

mod basis;
mod checks;
mod exact;
pub(crate) mod geometry;
mod lumped;
mod quadrature;

pub use basis::{
    bubble_gradient, eval_basis, eval_curl_basis, face_bubble, modified_face_bubble, Basis,
    BasisFunction, Family, LocalDof, Term,
};
pub use checks::{
    bubble_tangential_defect, divfree_bubble_gradient_defect, modified_bubble_mean_defect,
};
pub use exact::{curl_rank, exact_curl_gram, exact_mass_gram, numerical_rank};
pub use geometry::{element_geometry, random_tet, ElementGeometry};
pub use lumped::{
    build_lumped_transform, locality_defect, LumpedTransform, EDGE_CORRECTION, FACE_CORRECTION,
};
pub use quadrature::{
    eval_monomial, exact_monomial_integral, monomials_up_to, quadrature_integrate, LocalNode,
    QuadratureRule,
};


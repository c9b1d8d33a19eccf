//! Planar diagrams of polygonal knots and the invariants computed from them:
//! signed Gauss codes, Alexander polynomials, positivity, diagrammatic
//! primality and Seifert circles.

mod diagram;
mod gauss;
mod invariants;
mod laurent;
mod prime;
mod project;
mod seifert;
mod svg;

pub use diagram::{ArcStructure, Crossing, DiagramExport, Passage, PlanarDiagram, Point2, Visit};
pub use gauss::{gauss_code, GaussCode, GaussEntry};
pub use invariants::{alexander, alexander_matrix, identify, identify_polynomial, is_positive, KnotName};
pub use laurent::{determinant, LaurentPoly};
pub use prime::{is_connected, is_prime_diagram, nugatory_crossings, reduce_nugatory};
pub use project::{direction_fan, project, project_seeded, screen_basis};
pub use seifert::{seifert_circles, seifert_genus};
pub use svg::to_svg;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnotError {
    #[error("projection stayed degenerate after {retries} perturbed retries")]
    DegenerateProjection { retries: usize },
    #[error("expected a knot diagram, got {0} components")]
    MultiComponent(usize),
    #[error("Alexander minor vanishes; the diagram is corrupted")]
    Singular,
    #[error("malformed diagram: {0}")]
    Malformed(String),
}

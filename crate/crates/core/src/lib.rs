//! Numerical toolkit for the constant-mean-curvature foliation of the Pansu
//! sphere in the Heisenberg group `H^n`, the sub-calibration it induces, and
//! the quantitative isoperimetric inequalities that follow from it.
//!
//! Module map:
//!
//! - [`heisenberg`]: group law, dilations, horizontal frame and
//!   finite-difference horizontal calculus.
//! - [`profile`]: closed forms of the Pansu profile `φ` and the auxiliary
//!   function `ψ`, including cancellation-free differences.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration.
//! - [`pansu`]: membership, volume and H-perimeter of axially symmetric
//!   t-graph sets.
//! - [`foliation`]: the leaf function `u`, the calibration field `X`, leaf
//!   curvature and the curvature-gap bounds.
//! - [`quantitative`]: the `G` functional, slicing moments and the
//!   deficit/asymmetry inequality chain.
//! - [`competitors`]: volume-matched radial perturbations confined to the
//!   half-cylinder.
//! - [`report`]: verification records shared by every check.

pub mod competitors;
pub mod foliation;
pub mod heisenberg;
pub mod pansu;
pub mod profile;
pub mod quadrature;
pub mod quantitative;
pub mod report;

pub use competitors::{make_competitor, sweep, Family, PerturbationSpec};
pub use foliation::{Branch, FoliationContext, LeafPoint};
pub use heisenberg::{HorizontalVector, Point, ScalarField, VectorField};
pub use pansu::{CylinderParams, RadialProfile};
pub use quantitative::{check_quantitative, DeficitBreakdown, QuantitativeReport};
pub use report::{Status, VerificationReport};

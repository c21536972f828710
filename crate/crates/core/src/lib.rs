//! Clifford-form calculus on spinor fields.
//!
//! Multivectors, gamma matrices and exact Taylor jets are combined into
//! differential operators (d, δ, Dirac, Penrose, gauged variants) and the
//! symmetry and transformation operators relating twistor spinors, harmonic
//! spinors, conformal Killing-Yano forms and potential forms. Every identity
//! is evaluated as a residual at sample points.

pub mod algebra;
pub mod error;
pub mod fields;
pub mod gauge;
pub mod geometry;
pub mod jet;
pub mod operators;
pub mod seiberg_witten;
pub mod spin;

pub use algebra::{Multivector, Signature, C64};
pub use error::{Error, Result};
pub use fields::{Field, FormField, Point, Polynomial, SpinorField};
pub use gauge::{Gauge, Gauged};
pub use geometry::{Geometry, GeometryKind};
pub use jet::{Jet, Jet2, JetSpace};
pub use operators::{EquationId, OperatorKind, OperatorSpec, Pipeline};
pub use spin::{DualPairing, GammaRep, Spinor};

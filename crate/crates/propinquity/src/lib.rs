//! Numerical toolkit for the dual Gromov-Hausdorff propinquity on
//! finite-dimensional Leibniz quantum compact metric spaces.
//!
//! The library builds Lip-norms as maxima of operator-norm atoms, evaluates
//! Monge-Kantorovich metrics on state spaces (exactly, by linear programming,
//! on commutative algebras; by certified-lower-bound subgradient ascent in
//! general), constructs and measures tunnels and journeys, and maintains a
//! registry of propinquity upper bounds. Every bracketed quantity carries an
//! interval and a provenance status.

pub mod algebra;
pub mod error;
pub mod interval;
pub mod journey;
pub mod linalg;
pub mod mk;
pub mod rng;
pub mod seminorm;
pub mod simplex;
pub mod tunnel;
pub mod zoo;

pub use algebra::{
    jordan_product, lie_product, operator_norm, CStarAlgebra, Element, MorphismReport,
    StarMorphism, State,
};
pub use error::{Error, Result};
pub use interval::{Interval, Status};
pub use journey::{ChainSpace, Journey, PropinquityRegistry, TunnelClassFilter};
pub use mk::{MkResult, StateNet};
pub use seminorm::{QuantumMetricSpace, SeminormAtom, SeminormSpec};
pub use tunnel::{LiftWitness, Tunnel, TunnelMetrics};
pub use zoo::{Correspondence, FiniteMetricSpace, FuzzyTorusSpec, GroupActionSpec};

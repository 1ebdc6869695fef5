//! Circular-arc graph model machinery.
//!
//! Given a circular-arc intersection model, this crate normalizes it, builds
//! the PQSM-tree representing *all* normalized models of the underlying graph,
//! enumerates those models, and computes a canonical form that decides
//! isomorphism of circular-arc graphs.
//!
//! The main pipeline is:
//!
//! 1. [`models::normalize`] turns an arbitrary arc model into a normalized one
//!    (arc relations forced by closed neighborhoods).
//! 2. [`models::arcs_to_chords`] reinterprets it as a conformal oriented chord
//!    model of the overlap graph.
//! 3. [`pqsm::build_pqsm`] computes CA-modules, slots, metachords and the
//!    PQS/PQSM-tree from the conformal model.
//! 4. [`enumerate::enumerate_conformal`] lists every conformal model the tree
//!    represents, and [`canon::canonize`] produces the canonical form.
//!
//! Brute-force reference implementations live in [`oracle`]; they share no
//! code with the structures they check and make every structural claim
//! testable at desk scale.

pub mod canon;
pub mod enumerate;
pub mod graphs;
pub mod models;
pub mod moddecomp;
pub mod oracle;
pub mod pqsm;
pub mod words;

pub use graphs::{Graph, PairRelation, Representation, VertexSet};
pub use models::{ArcModel, ChordModel};
pub use moddecomp::{MdKind, MdTree, TransitiveOrientation};
pub use pqsm::{CaModuleData, Metachord, PqsTree, PqsmTree, RootKind};
pub use words::{CircularWord, Letter, LinearWord, OrientedPermutationModel};

pub mod channel;
pub mod converse;
pub mod error;
pub mod ia_schemes;
pub mod lattice;
pub mod linalg;
pub mod verifier;

pub use channel::{generate, ChannelSet};
pub use error::{Error, Result};
pub use ia_schemes::{BeamformerSolution, SchemeTag};
pub use lattice::{build_graph, inactive_set_and_clusters, DirectedEdge, EisensteinPoint, InterferenceGraph};

//! Random labelings of bounded-degree graphs into free groups, the two walk
//! measures they induce, and a harness that replays a chaining argument
//! against concrete actions on hyperbolic spaces.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod graph;
pub mod graph_ref;
pub mod harness;
pub mod hyperbolic;
pub mod labeling;
pub mod mc;
pub mod walks;
pub mod word;

pub use graph::{Graph, GraphCertificate, GraphError};
pub use harness::{run_pipeline, PipelineConfig, Report, Verdict};
pub use hyperbolic::{ActionOracle, FiniteAction};
pub use labeling::{Labeling, Presentation};
pub use word::{Generator, Word};

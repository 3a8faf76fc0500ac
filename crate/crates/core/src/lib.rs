//! Quantifies neighborhood cultural capital from geo-tagged, user-tagged
//! media records.
//!
//! The library covers the full pipeline:
//!
//! * [`concept_graph`] — load a linked-concept graph (page/category links),
//!   filter community pages, expand seed categories one hop out;
//! * [`lexsim`] — path similarity over a WordNet-like lexical graph;
//! * [`taxonomy`] — build, filter, validate, and query the three-level
//!   cultural taxonomy, and mine tag co-occurrences;
//! * [`ingest`] — media records, neighborhood polygons, census tables,
//!   point-in-polygon assignment, local-user and cultural filters;
//! * [`metrics`] — capital, specialization, diversity, monthly series, and
//!   event-peak detection;
//! * [`stats`] — OLS regression with inference, model wiring, Pearson
//!   correlation.
//!
//! All loaded structures are immutable after construction and safe to share
//! across threads; aggregations that run on worker partitions merge in
//! sorted-key order so results are independent of the partitioning.

pub mod concept_graph;
pub mod ingest;
pub mod lexsim;
pub mod metrics;
pub mod quantile;
pub mod stats;
pub mod taxonomy;
pub mod text;

pub use concept_graph::{ConceptGraph, ConceptGraphError, ConceptNode, NodeKind};
pub use lexsim::{DepthMode, LexError, LexGraph, SimilarityScore};
pub use taxonomy::{Candidate, CategoryCode, CooccurrencePair, Taxonomy, TaxonomyError};

//! Region-wise automatic regression.
//!
//! Fits a global GLM relating an outcome to an exposure, measures how much
//! each spatial unit pulls the exposure coefficient, groups adjacent units
//! with similar influence into contiguous regions by spectral normalized-cut
//! segmentation, and refits the model region by region.

pub mod error;
pub mod glm;
pub mod graph;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod segmentation;
pub mod simulation;
pub mod stats;

pub use error::{ErrorClass, RarError, Result};
pub use glm::{Dataset, DeviationVector, Family, GlmFit, GlmOptions};
pub use graph::{build_adjacency, build_similarity, grid_adjacency, ncut, AdjacencyMatrix, SimilarityGraph};
pub use partition::Partition;
pub use segmentation::{segment, SegmentOptions, Segmentation};
pub use inference::{run_pipeline, select_k, PipelineOptions, RegionAnalysis, RegionEstimate, RegionResult, SelectionTrace};
pub use simulation::{evaluate, KPolicy, SimConfig, SimResult};
pub use io::{ReportDocument, RunMetadata, SimulationReport};

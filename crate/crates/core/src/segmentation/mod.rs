//! Spectral normalized-cut segmentation of a similarity graph into
//! contiguous regions.
//!
//! The pipeline is: top-K eigenvectors of the normalized affinity
//! `D^{-1/2} E D^{-1/2}` ([`Spectrum`], [`Embedding`]), rotation-based
//! discretization of the embedding ([`discretize`]), repair of
//! non-contiguous regions ([`enforce_contiguity`]), and restarts scored by
//! the normalized cut ([`segment`]).

mod contiguity;
mod discretize;
mod embed;
mod segment;

pub use contiguity::enforce_contiguity;
pub use discretize::{discretize, discretize_with_rng, Discretization, DiscretizeOptions};
pub use embed::{spectral_embed, Embedding, Spectrum};
pub use segment::{segment, segment_with_spectrum, SegmentOptions, Segmentation};

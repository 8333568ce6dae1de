//! Weighted X-ray transform with limited angular data.
//!
//! The crate provides the forward transform `R_μ`, the weighted back-projection
//! `R*_ν`, the filtered reconstruction operators `B_κ` and `Λ_κ` (and their
//! full-data versions), and tools that predict and measure the streak artifacts
//! a finite-order angular cutoff produces.

pub mod config;
pub mod error;
pub mod filter;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod microlocal;
pub mod phantom;
pub mod pipeline;
pub mod quadrature;
pub mod raster;
pub mod selftest;
pub mod transform;
pub mod weight;

pub use error::{Error, Result};
pub use filter::{reconstruct, FilterImpl, Operator, ReconstructionConfig};
pub use geometry::{AngularSupport, AngularWindow, CutoffKind, ImageGrid, PhiRange, SinogramGrid};
pub use microlocal::{
    artifact_report, predicted_artifact_lines, strength_vs_order_study, symbol_eval, wavefront_probe, ArtifactLine,
    ArtifactReport, ProbeOutcome, WavefrontProbe,
};
pub use phantom::{EdgeSingularity, Phantom, Shape};
pub use raster::Raster;
pub use transform::{backproject, forward, Sinogram, Source};
pub use weight::WeightFunction;

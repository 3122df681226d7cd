//! Geometric room acoustics: specular ray tracing over triangle meshes,
//! image-source reconstruction at a spherical receiver, multi-band impulse
//! responses and room-acoustic parameters.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod accel;
pub mod air;
pub mod complexity;
pub mod emission;
pub mod error;
pub mod geometry;
pub mod image_source;
pub mod io;
pub mod material;
pub mod meshgen;
pub mod metrics;
pub mod pipeline;
pub mod rir;
pub mod shoebox;
pub mod tracer;

pub use accel::{AccelTree, BruteForce, HitFinder, Scene, TreeStats};
pub use air::AirModel;
pub use emission::SourceConfig;
pub use error::{Error, Result};
pub use geometry::{Hit, Triangle, TriangleMesh, Vec3};
pub use image_source::{ClusterOptions, ImageSource};
pub use material::{Bands, Material, MaterialTable, BAND_CENTERS, NUM_BANDS};
pub use metrics::{MetricsReport, PerceptiveFactors};
pub use rir::{BandPulseTrain, RoomImpulseResponse};
pub use shoebox::{OracleImageSource, ShoeBox};
pub use tracer::{Capture, Ray, Receiver, TraceConfig, TraceOutput, TraceReport};

//! Omnidirectional point-source emission on a Fibonacci lattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::material::{Bands, NUM_BANDS};
use crate::tracer::Ray;

/// An omnidirectional point source emitting `ray_count` rays.
///
/// Each ray stands for the solid angle `4π/N`; that weight is applied when
/// beams are measured, so emitted rays carry a unit multiplier.
/// Unknown fields (e.g. a directivity pattern) are rejected when parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub position: Vec3,
    pub ray_count: usize,
    /// Source power per band, relative to a unit source.
    #[serde(default = "unit_bands")]
    pub band_energy: Bands,
}

fn unit_bands() -> Bands {
    [1.0; NUM_BANDS]
}

impl SourceConfig {
    pub fn new(position: Vec3, ray_count: usize) -> Self {
        SourceConfig {
            position,
            ray_count,
            band_energy: unit_bands(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ray_count == 0 {
            return Err(Error::invalid("source ray_count must be at least 1"));
        }
        if !self.position.to_array().iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("source position must be finite"));
        }
        if self
            .band_energy
            .iter()
            .any(|&e| !(e.is_finite() && e >= 0.0))
        {
            return Err(Error::invalid(
                "source band_energy must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// The `k`-th of `n` Fibonacci-lattice directions.
#[inline]
pub fn fibonacci_direction(k: usize, n: usize) -> Vec3 {
    // 1 - 1/φ, the golden-angle fraction of a turn
    let turn_fraction = 1.0 - 2.0 / (1.0 + 5f64.sqrt());
    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let phi = std::f64::consts::TAU * (k as f64 * turn_fraction).fract();
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

/// `n` deterministic, near-uniform unit directions.
pub fn fibonacci_directions(n: usize) -> Result<Vec<Vec3>> {
    if n == 0 {
        return Err(Error::invalid("direction count must be at least 1"));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|k| fibonacci_direction(k, n))
        .collect())
}

/// Initial rays: all at the source, one per lattice direction, in index order.
pub fn emit(source: &SourceConfig) -> Result<Vec<Ray>> {
    source.validate()?;
    let n = source.ray_count;
    Ok((0..n)
        .into_par_iter()
        .map(|k| Ray::new(k, source.position, fibonacci_direction(k, n)))
        .collect())
}

//! Per-iteration timing of tree traversal against brute force on refined
//! tetrahedra with as many rays as faces.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::accel::{BruteForce, HitFinder, Scene};
use crate::emission::{emit, SourceConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::material::Material;
use crate::meshgen;
use crate::tracer::{Ray, Receiver, Tracer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: u32,
    pub faces: usize,
    pub rays: usize,
    pub t_tree_s: f64,
    pub t_brute_s: Option<f64>,
    /// Rays actually timed for brute force; the time is scaled to all rays.
    pub brute_sample: Option<usize>,
    pub build_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Largest k timed with brute force.
    pub brute_max_k: u32,
    /// Time brute force on this many evenly strided rays and scale up.
    pub brute_sample: Option<usize>,
    /// Repeat each measurement until this much time has been spent.
    pub min_time_s: f64,
    pub max_repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            brute_max_k: 14,
            brute_sample: None,
            min_time_s: 0.2,
            max_repeats: 20,
        }
    }
}

/// Fastest of repeated single-threaded iterations over fresh copies of `rays`.
fn time_iteration<F: HitFinder>(finder: &F, rays: &[Ray], options: &BenchOptions) -> Result<f64> {
    let receiver = Receiver::new(Vec3::ZERO, 1e-3)?;
    let tracer = Tracer::new(finder, receiver, f64::MAX, false)?;
    let mut best = Duration::MAX;
    let mut spent = Duration::ZERO;
    let mut repeats = 0;
    while repeats == 0
        || (spent.as_secs_f64() < options.min_time_s && repeats < options.max_repeats)
    {
        let mut batch = rays.to_vec();
        let start = Instant::now();
        let captures = tracer.step(&mut batch);
        let elapsed = start.elapsed();
        std::hint::black_box(captures);
        best = best.min(elapsed);
        spent += elapsed;
        repeats += 1;
    }
    Ok(best.as_secs_f64())
}

/// One row of the sweep: `2^k` faces, `2^k` rays from the centre.
pub fn bench_size(k: u32, options: &BenchOptions) -> Result<BenchRow> {
    let mesh = meshgen::tetrahedron(k, Material::fully_reflective())?;
    let faces = mesh.face_count();
    let build = Instant::now();
    let scene = Scene::new(mesh)?;
    let build_s = build.elapsed().as_secs_f64();
    let rays = emit(&SourceConfig::new(Vec3::ZERO, faces))?;
    let t_tree_s = time_iteration(&scene, &rays, options)?;

    let (t_brute_s, brute_sample) = if k <= options.brute_max_k {
        let brute = BruteForce(&scene.mesh);
        match options.brute_sample.filter(|&s| s < rays.len()) {
            Some(sample) => {
                if sample == 0 {
                    return Err(Error::invalid("brute-force sample must be positive"));
                }
                let stride = rays.len() / sample;
                let subset: Vec<Ray> = rays.iter().step_by(stride).take(sample).cloned().collect();
                let t = time_iteration(&brute, &subset, options)?;
                (
                    Some(t * rays.len() as f64 / subset.len() as f64),
                    Some(subset.len()),
                )
            }
            None => (Some(time_iteration(&brute, &rays, options)?), None),
        }
    } else {
        (None, None)
    };
    log::info!("k = {k}: tree {t_tree_s:.3e} s, brute {t_brute_s:?} s");
    Ok(BenchRow {
        k,
        faces,
        rays: rays.len(),
        t_tree_s,
        t_brute_s,
        brute_sample,
        build_s,
    })
}

pub fn run_bench(ks: &[u32], options: &BenchOptions) -> Result<Vec<BenchRow>> {
    ks.iter().map(|&k| bench_size(k, options)).collect()
}

/// Least-squares slope of ln(y) against ln(x); `None` with fewer than two
/// usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of time against face count over rows with `lo <= k <= hi`.
pub fn slope_over<F: Fn(&BenchRow) -> Option<f64>>(
    rows: &[BenchRow],
    lo: u32,
    hi: u32,
    time: F,
) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| (lo..=hi).contains(&r.k))
        .filter_map(|r| time(r).map(|t| (r.faces as f64, t)))
        .collect();
    loglog_slope(&points)
}

//! Specular ray propagation with receiver capture.
//!
//! Each iteration moves every live ray to its next wall. If the segment crosses
//! the receiver sphere before the wall, a [`Capture`] is recorded. The receiver
//! is transparent: captured rays keep going and may be captured again.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::HitFinder;
use crate::emission::{emit, SourceConfig};
use crate::error::{Error, Result};
use crate::geometry::{intersect_sphere, Vec3};
use crate::material::{Bands, NUM_BANDS};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayStatus {
    Alive,
    /// Left the mesh without meeting a face.
    Escaped,
    /// Travelled further than the measurable range.
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    /// Emission index.
    pub id: usize,
    pub origin: Vec3,
    pub dir: Vec3,
    /// Product of `1 - α` over the faces met so far.
    pub band_multiplier: Bands,
    pub path_length: f64,
    pub face_history: Vec<usize>,
    pub status: RayStatus,
}

impl Ray {
    pub fn new(id: usize, origin: Vec3, dir: Vec3) -> Self {
        Ray {
            id,
            origin,
            dir,
            band_multiplier: [1.0; NUM_BANDS],
            path_length: 0.0,
            face_history: Vec::new(),
            status: RayStatus::Alive,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.status == RayStatus::Alive
    }
}

/// Spherical measurement volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub center: Vec3,
    pub radius: f64,
}

impl Receiver {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        let r = Receiver { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!(
                "receiver radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// A ray crossing the receiver sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub ray: usize,
    /// Where the ray meets the receiver sphere.
    pub point: Vec3,
    /// Direction of travel at capture.
    pub dir: Vec3,
    /// Total distance travelled from the source to `point`.
    pub path_length: f64,
    pub band_multiplier: Bands,
    pub face_history: Vec<usize>,
}

/// Largest unfolded distance at which a one-ray beam is still counted:
/// `d_max = (r/2)·√N`.
pub fn max_range(radius: f64, ray_count: usize) -> f64 {
    0.5 * radius * (ray_count as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    /// Overrides the range derived from the receiver radius and ray count.
    #[serde(default)]
    pub d_max: Option<f64>,
    /// Process rays on the rayon pool.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}
fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}
fn default_parallel() -> bool {
    true
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            d_max: None,
            parallel: true,
        }
    }
}

impl TraceConfig {
    pub fn resolve_d_max(&self, receiver: &Receiver, ray_count: usize) -> Result<f64> {
        let d = self
            .d_max
            .unwrap_or_else(|| max_range(receiver.radius, ray_count));
        if !(d > 0.0) {
            return Err(Error::invalid(format!("d_max must be positive, got {d}")));
        }
        Ok(d)
    }
}

/// Mirror `incident` about the plane with unit normal `normal`.
#[inline]
pub fn reflect(incident: Vec3, normal: Vec3) -> Vec3 {
    incident - normal * (2.0 * incident.dot(normal))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepCounts {
    pub escaped: usize,
    pub out_of_range: usize,
}

/// Propagation state shared by every ray of one run.
pub struct Tracer<'a, F: HitFinder> {
    finder: &'a F,
    receiver: Receiver,
    d_max: f64,
    parallel: bool,
    reflection: Vec<Bands>,
}

impl<'a, F: HitFinder> Tracer<'a, F> {
    pub fn new(finder: &'a F, receiver: Receiver, d_max: f64, parallel: bool) -> Result<Self> {
        receiver.validate()?;
        if !(d_max > 0.0) {
            return Err(Error::invalid("d_max must be positive"));
        }
        let mesh = finder.mesh();
        let reflection = (0..mesh.face_count())
            .map(|f| mesh.face_material(f).reflection_factors())
            .collect();
        Ok(Tracer {
            finder,
            receiver,
            d_max,
            parallel,
            reflection,
        })
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// One iteration for a single ray. Dead rays are left untouched.
    pub fn advance(&self, ray: &mut Ray, captures: &mut Vec<Capture>) {
        if !ray.is_alive() {
            return;
        }
        let hit = self.finder.nearest_hit(ray.origin, ray.dir);
        let wall = hit.as_ref().map_or(f64::INFINITY, |h| h.delta);

        if let Some(t) = intersect_sphere(
            ray.origin,
            ray.dir,
            self.receiver.center,
            self.receiver.radius,
        ) {
            let length = ray.path_length + t;
            if t < wall && length <= self.d_max {
                captures.push(Capture {
                    ray: ray.id,
                    point: ray.origin + ray.dir * t,
                    dir: ray.dir,
                    path_length: length,
                    band_multiplier: ray.band_multiplier,
                    face_history: ray.face_history.clone(),
                });
            }
        }

        let Some(hit) = hit else {
            ray.status = RayStatus::Escaped;
            return;
        };
        let mut normal = self.finder.mesh().normal(hit.face);
        if normal.dot(ray.dir) > 0.0 {
            normal = -normal;
        }
        ray.origin = hit.point;
        ray.path_length += hit.delta;
        ray.face_history.push(hit.face);
        for (m, f) in ray
            .band_multiplier
            .iter_mut()
            .zip(&self.reflection[hit.face])
        {
            *m *= f;
        }
        ray.dir = reflect(ray.dir, normal);
        if ray.path_length > self.d_max {
            ray.status = RayStatus::OutOfRange;
        }
    }

    /// Advances every live ray once. Returned captures are sorted by
    /// (ray, path length).
    pub fn step(&self, rays: &mut [Ray]) -> Vec<Capture> {
        let mut captures: Vec<Capture> = if self.parallel {
            rays.par_iter_mut()
                .with_min_len(256)
                .flat_map_iter(|ray| {
                    let mut local = Vec::new();
                    self.advance(ray, &mut local);
                    local
                })
                .collect()
        } else {
            let mut out = Vec::new();
            for ray in rays.iter_mut() {
                self.advance(ray, &mut out);
            }
            out
        };
        sort_captures(&mut captures);
        captures
    }

    /// Runs [`Tracer::step`] until every ray is dead or `max_iterations` is hit.
    pub fn run(&self, mut rays: Vec<Ray>, max_iterations: usize) -> TraceOutput {
        let total = rays.len();
        let mut captures = Vec::new();
        let mut counts = StepCounts::default();
        let mut iterations = 0;
        while !rays.is_empty() && iterations < max_iterations {
            captures.extend(self.step(&mut rays));
            iterations += 1;
            rays.retain(|r| match r.status {
                RayStatus::Alive => true,
                RayStatus::Escaped => {
                    counts.escaped += 1;
                    false
                }
                RayStatus::OutOfRange => {
                    counts.out_of_range += 1;
                    false
                }
            });
        }
        sort_captures(&mut captures);
        let report = TraceReport {
            ray_count: total,
            iterations,
            truncated: !rays.is_empty(),
            live_rays: rays.len(),
            escaped: counts.escaped,
            out_of_range: counts.out_of_range,
            captures: captures.len(),
            d_max: self.d_max,
        };
        if report.truncated {
            log::warn!(
                "stopped after {iterations} iterations with {} rays still alive",
                report.live_rays
            );
        }
        TraceOutput {
            captures,
            report,
            remaining: rays,
        }
    }
}

pub fn sort_captures(captures: &mut [Capture]) {
    captures.sort_by(|a, b| {
        a.ray
            .cmp(&b.ray)
            .then(a.path_length.total_cmp(&b.path_length))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub ray_count: usize,
    pub iterations: usize,
    /// The iteration cap stopped the run while rays were still alive.
    pub truncated: bool,
    pub live_rays: usize,
    pub escaped: usize,
    pub out_of_range: usize,
    pub captures: usize,
    pub d_max: f64,
}

#[derive(Debug, Clone)]
pub struct TraceOutput {
    pub captures: Vec<Capture>,
    pub report: TraceReport,
    /// Rays still alive when the run stopped.
    pub remaining: Vec<Ray>,
}

/// Emits from `source` and propagates until termination.
pub fn trace<F: HitFinder>(
    finder: &F,
    source: &SourceConfig,
    receiver: &Receiver,
    config: &TraceConfig,
) -> Result<TraceOutput> {
    let d_max = config.resolve_d_max(receiver, source.ray_count)?;
    let tracer = Tracer::new(finder, *receiver, d_max, config.parallel)?;
    let rays = emit(source)?;
    Ok(tracer.run(rays, config.max_iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::Scene;
    use crate::geometry::{Triangle, TriangleMesh};
    use crate::material::Material;
    use crate::meshgen;

    #[test]
    fn reflect_normal_incidence() {
        let r = reflect(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(r, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn reflect_45_degrees() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = reflect(Vec3::new(h, 0.0, -h), Vec3::new(0.0, 0.0, 1.0));
        assert!((r - Vec3::new(h, 0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn reflect_identities_on_random_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut random_unit = || {
            Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalized()
        };
        for _ in 0..1000 {
            let (u, n) = (random_unit(), random_unit());
            let r = reflect(u, n);
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!((r.dot(n) + u.dot(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn max_range_matches_closed_form() {
        assert!((max_range(0.36, 1_000_000) - 180.0).abs() < 1e-9);
    }

    #[test]
    fn one_wall_hit_applies_concrete_absorption() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(-10.0, -10.0, 0.0),
                Vec3::new(10.0, -10.0, 0.0),
                Vec3::new(0.0, 10.0, 0.0),
            ],
            vec![Triangle::new(0, 1, 2, 0)],
            vec![Material::concrete_block_coarse()],
        )
        .unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(100.0, 100.0, 100.0), 0.1).unwrap();
        let tracer = Tracer::new(&scene, receiver, 1e3, false).unwrap();
        let mut rays = vec![Ray::new(
            0,
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        )];
        tracer.step(&mut rays);
        let expected = [0.64, 0.64, 0.56, 0.69, 0.71, 0.61, 0.75, 0.75];
        for (m, e) in rays[0].band_multiplier.iter().zip(expected) {
            assert!((m - e).abs() < 1e-12);
        }
        assert_eq!(rays[0].face_history, vec![0]);
        assert_eq!(rays[0].dir, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(rays[0].path_length, 1.0);
    }

    #[test]
    fn ray_leaving_open_mesh_escapes_without_capture() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![Triangle::new(0, 1, 2, 0)],
            vec![Material::fully_reflective()],
        )
        .unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(0.0, 0.0, -5.0), 0.5).unwrap();
        let tracer = Tracer::new(&scene, receiver, 100.0, false).unwrap();
        let mut rays = vec![Ray::new(
            0,
            Vec3::new(0.2, 0.2, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
        )];
        let caps = tracer.step(&mut rays);
        assert!(caps.is_empty());
        assert_eq!(rays[0].status, RayStatus::Escaped);
    }

    #[test]
    fn escaping_ray_is_still_captured_on_its_way_out() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![Triangle::new(0, 1, 2, 0)],
            vec![Material::fully_reflective()],
        )
        .unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(0.2, 0.2, 5.0), 0.5).unwrap();
        let tracer = Tracer::new(&scene, receiver, 100.0, false).unwrap();
        let mut rays = vec![Ray::new(
            0,
            Vec3::new(0.2, 0.2, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
        )];
        let caps = tracer.step(&mut rays);
        assert_eq!(caps.len(), 1);
        assert!((caps[0].path_length - 3.5).abs() < 1e-12);
        assert_eq!(rays[0].status, RayStatus::Escaped);
    }

    #[test]
    fn capture_beyond_range_is_dropped() {
        let scene = Scene::new(
            meshgen::shoebox([10.0, 10.0, 10.0], &[Material::fully_reflective()], [0; 6]).unwrap(),
        )
        .unwrap();
        let receiver = Receiver::new(Vec3::new(8.0, 5.0, 5.0), 0.5).unwrap();
        let mut rays = vec![Ray::new(
            0,
            Vec3::new(2.0, 5.0, 5.0),
            Vec3::new(1.0, 0.0, 0.0),
        )];
        // receiver entry is at 5.5 m
        let short = Tracer::new(&scene, receiver, 5.4, false).unwrap();
        assert!(short.step(&mut rays.clone()).is_empty());
        let long = Tracer::new(&scene, receiver, 5.5, false).unwrap();
        assert_eq!(long.step(&mut rays).len(), 1);
    }

    #[test]
    fn closed_reflective_box_conserves_ray_count() {
        let mesh =
            meshgen::shoebox([5.0, 4.0, 3.0], &[Material::fully_reflective()], [0; 6]).unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(2.0, 2.0, 1.7), 0.2).unwrap();
        let n = 2000;
        let tracer = Tracer::new(&scene, receiver, 40.0, true).unwrap();
        let mut rays = emit(&SourceConfig::new(Vec3::new(4.0, 2.0, 1.7), n)).unwrap();
        for _ in 0..30 {
            tracer.step(&mut rays);
            let live = rays.iter().filter(|r| r.is_alive()).count();
            let out = rays
                .iter()
                .filter(|r| r.status == RayStatus::OutOfRange)
                .count();
            assert_eq!(live + out, n);
            for r in &rays {
                assert_eq!(r.band_multiplier, [1.0; NUM_BANDS]);
            }
        }
    }

    #[test]
    fn shoebox_reflections_only_flip_signs() {
        let mesh =
            meshgen::shoebox([5.0, 4.0, 3.0], &[Material::fully_reflective()], [0; 6]).unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(2.0, 2.0, 1.7), 0.2).unwrap();
        let tracer = Tracer::new(&scene, receiver, 60.0, false).unwrap();
        let mut rays = emit(&SourceConfig::new(Vec3::new(4.0, 2.0, 1.7), 500)).unwrap();
        let initial: Vec<Vec3> = rays.iter().map(|r| r.dir).collect();
        for _ in 0..20 {
            tracer.step(&mut rays);
            for (r, d0) in rays.iter().zip(&initial) {
                assert!((r.dir.x.abs() - d0.x.abs()).abs() < 1e-9);
                assert!((r.dir.y.abs() - d0.y.abs()).abs() < 1e-9);
                assert!((r.dir.z.abs() - d0.z.abs()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn captures_do_not_depend_on_processing_order() {
        let mesh = meshgen::shoebox(
            [5.0, 4.0, 3.0],
            &[Material::concrete_block_coarse()],
            [0; 6],
        )
        .unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(2.0, 2.0, 1.7), 0.3).unwrap();
        let source = SourceConfig::new(Vec3::new(4.0, 2.0, 1.7), 20_000);
        let seq = trace(
            &scene,
            &source,
            &receiver,
            &TraceConfig {
                parallel: false,
                ..Default::default()
            },
        )
        .unwrap();
        let par = trace(&scene, &source, &receiver, &TraceConfig::default()).unwrap();
        assert!(!seq.captures.is_empty());
        assert_eq!(seq.captures, par.captures);

        let tracer = Tracer::new(&scene, receiver, seq.report.d_max, false).unwrap();
        let mut rays = emit(&source).unwrap();
        rays.reverse();
        let rev = tracer.run(rays, DEFAULT_MAX_ITERATIONS);
        assert_eq!(rev.captures, seq.captures);

        // strictly increasing path lengths per ray
        for w in seq.captures.windows(2) {
            if w[0].ray == w[1].ray {
                assert!(w[1].path_length > w[0].path_length);
            }
        }
        for c in &seq.captures {
            assert!((c.point.distance(receiver.center) - receiver.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_flags_truncation() {
        let mesh =
            meshgen::shoebox([5.0, 4.0, 3.0], &[Material::fully_reflective()], [0; 6]).unwrap();
        let scene = Scene::new(mesh).unwrap();
        let receiver = Receiver::new(Vec3::new(2.0, 2.0, 1.7), 0.2).unwrap();
        let config = TraceConfig {
            max_iterations: 3,
            d_max: Some(1000.0),
            ..Default::default()
        };
        let out = trace(
            &scene,
            &SourceConfig::new(Vec3::new(4.0, 2.0, 1.7), 100),
            &receiver,
            &config,
        )
        .unwrap();
        assert!(out.report.truncated);
        assert_eq!(out.report.iterations, 3);
        assert_eq!(out.report.live_rays, 100);
    }
}

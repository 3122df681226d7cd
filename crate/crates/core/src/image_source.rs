//! Image-sources: unfolded virtual sources reconstructed from receiver
//! captures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::HitFinder;
use crate::air::AirModel;
use crate::error::Result;
use crate::geometry::{TriangleMesh, Vec3};
use crate::material::{Bands, NUM_BANDS};
use crate::tracer::Capture;

/// A virtual source and the energy it delivers to the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub position: Vec3,
    #[serde(rename = "distance_m")]
    pub distance: f64,
    pub order: usize,
    pub ray_count: usize,
    /// Filled by [`ImageSource::attach_energy`]; zero straight out of [`cluster`].
    pub band_energy: Bands,
    /// Π(1 − α) over the reflection path.
    pub band_multiplier: Bands,
    pub face_path: Vec<usize>,
    pub projection: Option<Vec3>,
}

impl ImageSource {
    /// E(f) = (n/N)·exp(−β(f)·d)·Π(1 − α(f)).
    pub fn attach_energy(&mut self, total_rays: usize, betas: &Bands) {
        let share = self.ray_count as f64 / total_rays as f64;
        for b in 0..NUM_BANDS {
            self.band_energy[b] =
                share * (-betas[b] * self.distance).exp() * self.band_multiplier[b];
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.band_energy.iter().sum()
    }
}

/// Virtual source position of a capture: the hit point moved back along
/// the arrival direction by the full travelled distance.
pub fn retro_propagate(capture: &Capture) -> Vec3 {
    capture.point - capture.dir * capture.path_length
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// Treat faces lying in the same plane with the same material as one
    /// reflector.
    pub coplanar_merge: bool,
    /// Retro points of one path farther apart than this start a new
    /// image-source.
    pub cluster_tol: f64,
}

impl ClusterOptions {
    pub fn for_mesh(mesh: &TriangleMesh) -> Self {
        let diag = mesh.bounds().map_or(1.0, |b| b.diagonal());
        ClusterOptions {
            coplanar_merge: false,
            cluster_tol: 1e-6 * diag,
        }
    }

    pub fn with_coplanar_merge(mut self, on: bool) -> Self {
        self.coplanar_merge = on;
        self
    }
}

/// Maps each face to a reflector id shared by coplanar faces of equal
/// material.
fn reflector_ids(mesh: &TriangleMesh) -> Vec<usize> {
    let diag = mesh.bounds().map_or(1.0, |b| b.diagonal());
    let quant = |v: f64, step: f64| (v / step).round() as i64;
    let mut ids: HashMap<(i64, i64, i64, i64, usize), usize> = HashMap::new();
    (0..mesh.face_count())
        .map(|f| {
            let mut n = mesh.normal(f);
            let first = [n.x, n.y, n.z]
                .into_iter()
                .find(|c| c.abs() > 1e-9)
                .unwrap_or(1.0);
            if first < 0.0 {
                n = -n;
            }
            let offset = n.dot(mesh.face_vertices(f)[0]);
            let key = (
                quant(n.x, 1e-9),
                quant(n.y, 1e-9),
                quant(n.z, 1e-9),
                quant(offset, 1e-9 * diag),
                mesh.faces()[f].material,
            );
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect()
}

struct Beam {
    seed: Vec3,
    sum: Vec3,
    count: usize,
    multiplier: Bands,
    face_path: Vec<usize>,
}

/// Groups captures into beams keyed by reflection path and returns one
/// image-source per beam, sorted by (order, distance, path).
pub fn cluster(
    captures: &[Capture],
    mesh: &TriangleMesh,
    receiver: Vec3,
    options: &ClusterOptions,
) -> Vec<ImageSource> {
    let reflectors = options.coplanar_merge.then(|| reflector_ids(mesh));
    let mut groups: BTreeMap<Vec<usize>, Vec<&Capture>> = BTreeMap::new();
    for c in captures {
        let key = match &reflectors {
            Some(ids) => c.face_history.iter().map(|&f| ids[f]).collect(),
            None => c.face_history.clone(),
        };
        groups.entry(key).or_default().push(c);
    }
    let groups: Vec<Vec<&Capture>> = groups.into_values().collect();
    let mut out: Vec<ImageSource> = groups
        .par_iter()
        .flat_map_iter(|members| {
            let mut beams: Vec<Beam> = Vec::new();
            for c in members {
                let p = retro_propagate(c);
                match beams
                    .iter_mut()
                    .find(|b| b.seed.distance(p) <= options.cluster_tol)
                {
                    Some(b) => {
                        b.sum += p;
                        b.count += 1;
                    }
                    None => beams.push(Beam {
                        seed: p,
                        sum: p,
                        count: 1,
                        multiplier: c.band_multiplier,
                        face_path: c.face_history.clone(),
                    }),
                }
            }
            beams.into_iter().map(move |b| {
                let position = b.sum / b.count as f64;
                ImageSource {
                    position,
                    distance: position.distance(receiver),
                    order: b.face_path.len(),
                    ray_count: b.count,
                    band_energy: [0.0; NUM_BANDS],
                    band_multiplier: b.multiplier,
                    face_path: b.face_path,
                    projection: None,
                }
            })
        })
        .collect();
    sort_image_sources(&mut out);
    out
}

pub fn sort_image_sources(sources: &mut [ImageSource]) {
    sources.sort_by(|a, b| {
        a.order
            .cmp(&b.order)
            .then(a.distance.total_cmp(&b.distance))
            .then_with(|| a.face_path.cmp(&b.face_path))
            .then_with(|| cmp_vec(a.position, b.position))
    });
}

fn cmp_vec(a: Vec3, b: Vec3) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Returns `is` with energies attached for `total_rays` emitted rays.
pub fn attach_energy(
    mut is: ImageSource,
    total_rays: usize,
    air: &AirModel,
) -> Result<ImageSource> {
    is.attach_energy(total_rays, &air.band_betas()?);
    Ok(is)
}

/// Last wall point on the way from the receiver to the image-source; `None`
/// for the direct sound or when nothing is hit before the image.
pub fn project<F: HitFinder + ?Sized>(
    is: &ImageSource,
    finder: &F,
    receiver: Vec3,
) -> Option<Vec3> {
    if is.order == 0 || is.distance <= 0.0 {
        return None;
    }
    let dir = (is.position - receiver) / is.distance;
    finder
        .nearest_hit(receiver, dir)
        .filter(|h| h.delta <= is.distance)
        .map(|h| h.point)
}

/// Settings for turning captures into energised image-sources.
#[derive(Debug, Clone, Copy)]
pub struct ImageSourceSettings<'a> {
    pub total_rays: usize,
    pub air: &'a AirModel,
    pub source_energy: &'a Bands,
    pub cluster: ClusterOptions,
}

/// Clusters, attaches energy (scaled by the source band energy) and projects.
pub fn build_image_sources<F: HitFinder>(
    captures: &[Capture],
    finder: &F,
    receiver: Vec3,
    settings: &ImageSourceSettings<'_>,
) -> Result<Vec<ImageSource>> {
    let betas = settings.air.band_betas()?;
    let mut sources = cluster(captures, finder.mesh(), receiver, &settings.cluster);
    sources.par_iter_mut().for_each(|is| {
        is.attach_energy(settings.total_rays, &betas);
        for (e, s) in is.band_energy.iter_mut().zip(settings.source_energy) {
            *e *= s;
        }
        is.projection = project(is, finder, receiver);
    });
    Ok(sources)
}

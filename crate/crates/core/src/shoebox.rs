//! Analytical image-source model of a rectangular room, used as ground
//! truth for traced runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::air::AirModel;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::image_source::ImageSource;
use crate::material::{Bands, Material, NUM_BANDS};
use crate::meshgen::WALL_NAMES;

/// Reflection orders counted as early when comparing energies.
pub const EARLY_ORDER: usize = 2;

/// Box spanning `[0, dims]` with one material per wall, in the order
/// x0, x1, y0, y1, z0, z1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShoeBox {
    pub dims: [f64; 3],
    pub walls: [Material; 6],
}

impl ShoeBox {
    pub fn new(dims: [f64; 3], walls: [Material; 6]) -> Result<Self> {
        let b = ShoeBox { dims, walls };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid(format!(
                "box dimensions must be positive, got {:?}",
                self.dims
            )));
        }
        self.walls.iter().try_for_each(Material::validate)
    }

    pub fn contains_strictly(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] > 0.0 && p[i] < self.dims[i])
    }
}

/// Per-axis unfolding: coordinate (1 − 2q)·s + 2n·L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub n: [i64; 3],
    pub q: [u8; 3],
}

impl LatticeIndex {
    /// Reflections on each wall: |n − q| on the low wall, |n| on the high wall.
    pub fn wall_hits(&self) -> [usize; 6] {
        let mut hits = [0; 6];
        for axis in 0..3 {
            hits[2 * axis] = (self.n[axis] - self.q[axis] as i64).unsigned_abs() as usize;
            hits[2 * axis + 1] = self.n[axis].unsigned_abs() as usize;
        }
        hits
    }

    fn key(&self) -> [i64; 6] {
        [
            self.n[0],
            self.q[0] as i64,
            self.n[1],
            self.q[1] as i64,
            self.n[2],
            self.q[2] as i64,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleImageSource {
    pub position: Vec3,
    #[serde(rename = "distance_m")]
    pub distance: f64,
    pub order: usize,
    pub lattice: LatticeIndex,
    pub wall_hits: [usize; 6],
    pub band_energy: Bands,
}

impl OracleImageSource {
    /// The same image-source in the traced schema; `ray_count` is zero
    /// because no rays are involved.
    pub fn to_image_source(&self, walls: &[Material; 6]) -> ImageSource {
        let mut band_multiplier = [1.0; NUM_BANDS];
        for (w, &hits) in self.wall_hits.iter().enumerate() {
            let r = walls[w].reflection_factors();
            for b in 0..NUM_BANDS {
                band_multiplier[b] *= r[b].powi(hits as i32);
            }
        }
        ImageSource {
            position: self.position,
            distance: self.distance,
            order: self.order,
            ray_count: 0,
            band_energy: self.band_energy,
            band_multiplier,
            face_path: vec![],
            projection: None,
        }
    }
}

/// Settings for [`enumerate`].
#[derive(Debug, Clone, Copy)]
pub struct OracleSettings<'a> {
    pub receiver_radius: f64,
    pub max_distance: f64,
    pub air: &'a AirModel,
}

/// Every mirror image within `max_distance` of the receiver, sorted by
/// distance then lattice index. Energies are r²/(4d²)·exp(−βd)·Π(1−α)^hits,
/// the capture fraction a receiver of radius r would see.
pub fn enumerate(
    room: &ShoeBox,
    source: Vec3,
    receiver: Vec3,
    settings: &OracleSettings<'_>,
) -> Result<Vec<OracleImageSource>> {
    room.validate()?;
    if !room.contains_strictly(source) {
        return Err(Error::invalid(format!(
            "source {source:?} is not strictly inside the box"
        )));
    }
    if !room.contains_strictly(receiver) {
        return Err(Error::invalid(format!(
            "receiver {receiver:?} is not strictly inside the box"
        )));
    }
    if !(settings.receiver_radius > 0.0) || !(settings.max_distance >= 0.0) {
        return Err(Error::invalid(
            "receiver radius must be positive and max distance non-negative",
        ));
    }
    let betas = settings.air.band_betas()?;
    let reflection: Vec<Bands> = room
        .walls
        .iter()
        .map(Material::reflection_factors)
        .collect();
    let reach = settings.max_distance;
    let range = |axis: usize| {
        let l = room.dims[axis];
        let m = (reach / (2.0 * l)).ceil() as i64 + 1;
        -m..=m
    };
    let coord = |axis: usize, n: i64, q: u8| {
        (1.0 - 2.0 * q as f64) * source[axis] + 2.0 * n as f64 * room.dims[axis]
    };
    let r2 = settings.receiver_radius * settings.receiver_radius;

    let xs: Vec<(i64, u8)> = range(0).flat_map(|n| [(n, 0u8), (n, 1u8)]).collect();
    let mut out: Vec<OracleImageSource> = xs
        .par_iter()
        .flat_map_iter(|&(nx, qx)| {
            let mut local = Vec::new();
            let x = coord(0, nx, qx);
            let dx = x - receiver.x;
            if dx.abs() > reach {
                return local;
            }
            for ny in range(1) {
                for qy in 0..2u8 {
                    let y = coord(1, ny, qy);
                    let dy = y - receiver.y;
                    if dx * dx + dy * dy > reach * reach {
                        continue;
                    }
                    for nz in range(2) {
                        for qz in 0..2u8 {
                            let position = Vec3::new(x, y, coord(2, nz, qz));
                            let distance = position.distance(receiver);
                            if distance > reach {
                                continue;
                            }
                            let lattice = LatticeIndex {
                                n: [nx, ny, nz],
                                q: [qx, qy, qz],
                            };
                            let wall_hits = lattice.wall_hits();
                            let mut band_energy = [r2 / (4.0 * distance * distance); NUM_BANDS];
                            for (b, e) in band_energy.iter_mut().enumerate() {
                                *e *= (-betas[b] * distance).exp();
                                for (w, &hits) in wall_hits.iter().enumerate() {
                                    *e *= reflection[w][b].powi(hits as i32);
                                }
                            }
                            local.push(OracleImageSource {
                                position,
                                distance,
                                order: wall_hits.iter().sum(),
                                lattice,
                                wall_hits,
                                band_energy,
                            });
                        }
                    }
                }
            }
            local
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.lattice.key().cmp(&b.lattice.key()))
    });
    Ok(out)
}

/// A traced image-source paired with the oracle image it lands on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedImage {
    pub oracle: usize,
    pub traced: Vec<usize>,
    pub order: usize,
    pub distance_m: f64,
    pub position_error_m: f64,
    /// 10·log10(traced / oracle) per band, traced energies summed over all
    /// paths landing on the image.
    pub energy_delta_db: Bands,
}

impl MatchedImage {
    pub fn max_abs_delta_db(&self) -> f64 {
        self.energy_delta_db
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub position_tolerance_m: f64,
    pub energy_tolerance_db: f64,
    pub oracle_count: usize,
    pub traced_count: usize,
    pub matched_count: usize,
    pub max_position_error_m: f64,
    /// RMS over matched images of the per-band energy delta.
    pub rms_energy_error_db: Bands,
    /// Largest |delta| over matched images of order ≤ [`EARLY_ORDER`].
    pub max_early_energy_delta_db: f64,
    /// Matched images of order ≤ [`EARLY_ORDER`] outside the energy tolerance.
    pub early_energy_violations: Vec<usize>,
    pub matched: Vec<MatchedImage>,
    pub unmatched_oracle: Vec<usize>,
    pub unmatched_traced: Vec<usize>,
}

fn delta_db(traced: f64, oracle: f64) -> f64 {
    match (traced > 0.0, oracle > 0.0) {
        (true, true) => 10.0 * (traced / oracle).log10(),
        (false, false) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
    }
}

/// Matches each traced image-source to the nearest oracle image within
/// `pos_tol`. Several traced paths may land on one oracle image (coplanar
/// faces); their energies are summed before comparison.
pub fn compare(
    oracle: &[OracleImageSource],
    traced: &[ImageSource],
    pos_tol: f64,
    energy_tol_db: f64,
) -> MatchReport {
    let mut by_x: Vec<usize> = (0..oracle.len()).collect();
    by_x.sort_by(|&a, &b| {
        oracle[a]
            .position
            .x
            .total_cmp(&oracle[b].position.x)
            .then(a.cmp(&b))
    });
    let xs: Vec<f64> = by_x.iter().map(|&i| oracle[i].position.x).collect();

    let mut hits: Vec<Vec<(usize, f64)>> = vec![Vec::new(); oracle.len()];
    let mut unmatched_traced = Vec::new();
    for (t, is) in traced.iter().enumerate() {
        let p = is.position;
        let lo = xs.partition_point(|&x| x < p.x - pos_tol);
        let best = by_x[lo..]
            .iter()
            .take_while(|&&i| oracle[i].position.x <= p.x + pos_tol)
            .map(|&i| (i, oracle[i].position.distance(p)))
            .filter(|&(_, d)| d <= pos_tol)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match best {
            Some((i, d)) => hits[i].push((t, d)),
            None => unmatched_traced.push(t),
        }
    }

    let mut matched = Vec::new();
    let mut unmatched_oracle = Vec::new();
    for (i, group) in hits.into_iter().enumerate() {
        if group.is_empty() {
            unmatched_oracle.push(i);
            continue;
        }
        let o = &oracle[i];
        let mut summed = [0.0; NUM_BANDS];
        for &(t, _) in &group {
            for b in 0..NUM_BANDS {
                summed[b] += traced[t].band_energy[b];
            }
        }
        let mut energy_delta_db = [0.0; NUM_BANDS];
        for b in 0..NUM_BANDS {
            energy_delta_db[b] = delta_db(summed[b], o.band_energy[b]);
        }
        matched.push(MatchedImage {
            oracle: i,
            traced: group.iter().map(|g| g.0).collect(),
            order: o.order,
            distance_m: o.distance,
            position_error_m: group.iter().map(|g| g.1).fold(0.0, f64::max),
            energy_delta_db,
        });
    }

    let mut rms = [0.0; NUM_BANDS];
    for m in &matched {
        for b in 0..NUM_BANDS {
            rms[b] += m.energy_delta_db[b] * m.energy_delta_db[b];
        }
    }
    if !matched.is_empty() {
        rms.iter_mut()
            .for_each(|r| *r = (*r / matched.len() as f64).sqrt());
    }
    let early: Vec<&MatchedImage> = matched.iter().filter(|m| m.order <= EARLY_ORDER).collect();
    let early_energy_violations = early
        .iter()
        .filter(|m| m.max_abs_delta_db() > energy_tol_db)
        .map(|m| m.oracle)
        .collect();
    MatchReport {
        position_tolerance_m: pos_tol,
        energy_tolerance_db: energy_tol_db,
        oracle_count: oracle.len(),
        traced_count: traced.len(),
        matched_count: matched.len(),
        max_position_error_m: matched
            .iter()
            .map(|m| m.position_error_m)
            .fold(0.0, f64::max),
        rms_energy_error_db: rms,
        max_early_energy_delta_db: early
            .iter()
            .map(|m| m.max_abs_delta_db())
            .fold(0.0, f64::max),
        early_energy_violations,
        matched,
        unmatched_oracle,
        unmatched_traced,
    }
}

/// Name of each wall as used in configs and reports.
pub fn wall_name(wall: usize) -> &'static str {
    WALL_NAMES[wall]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(material: Material) -> ShoeBox {
        ShoeBox::new([5.0, 4.0, 3.0], std::array::from_fn(|_| material.clone())).unwrap()
    }

    fn settings(air: &AirModel, max_distance: f64) -> OracleSettings<'_> {
        OracleSettings {
            receiver_radius: 0.2,
            max_distance,
            air,
        }
    }

    const SOURCE: Vec3 = Vec3::new(4.0, 2.0, 1.7);
    const RECEIVER: Vec3 = Vec3::new(2.0, 2.0, 1.7);

    #[test]
    fn first_order_images() {
        let images = enumerate(
            &room(Material::fully_reflective()),
            SOURCE,
            RECEIVER,
            &settings(&AirModel::Disabled, 10.0),
        )
        .unwrap();
        let direct = &images[0];
        assert_eq!(direct.order, 0);
        assert_eq!(direct.position, SOURCE);
        assert_eq!(direct.distance, 2.0);
        let first: Vec<Vec3> = images
            .iter()
            .filter(|i| i.order == 1)
            .map(|i| i.position)
            .collect();
        let expected = [
            Vec3::new(-4.0, 2.0, 1.7),
            Vec3::new(6.0, 2.0, 1.7),
            Vec3::new(4.0, -2.0, 1.7),
            Vec3::new(4.0, 6.0, 1.7),
            Vec3::new(4.0, 2.0, -1.7),
            Vec3::new(4.0, 2.0, 4.3),
        ];
        assert_eq!(first.len(), 6);
        for e in expected {
            assert!(first.iter().any(|p| p.distance(e) < 1e-12), "{e:?}");
        }
    }

    #[test]
    fn first_order_walls() {
        let images = enumerate(
            &room(Material::fully_reflective()),
            SOURCE,
            RECEIVER,
            &settings(&AirModel::Disabled, 10.0),
        )
        .unwrap();
        let across_x0 = images
            .iter()
            .find(|i| i.position.distance(Vec3::new(-4.0, 2.0, 1.7)) < 1e-12)
            .unwrap();
        assert_eq!(across_x0.wall_hits, [1, 0, 0, 0, 0, 0]);
        let across_x1 = images
            .iter()
            .find(|i| i.position.distance(Vec3::new(6.0, 2.0, 1.7)) < 1e-12)
            .unwrap();
        assert_eq!(across_x1.wall_hits, [0, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn hand_unfolded_three_reflections() {
        // 2D path x1 -> x0 -> x1 unfolds to x = 16 (mirror at 5 -> 6, at 0 -> -6, at 5 -> 16)
        let idx = LatticeIndex {
            n: [2, 0, 0],
            q: [1, 0, 0],
        };
        assert_eq!(
            (1.0 - 2.0 * idx.q[0] as f64) * 4.0 + 2.0 * idx.n[0] as f64 * 5.0,
            16.0
        );
        assert_eq!(idx.wall_hits(), [1, 2, 0, 0, 0, 0]);
        // adding one y0 reflection: y = -2
        let idx = LatticeIndex {
            n: [2, 0, 0],
            q: [1, 1, 0],
        };
        assert_eq!(idx.wall_hits(), [1, 2, 1, 0, 0, 0]);
        // x = 4 - 10 = -6: x0 then x1
        let idx = LatticeIndex {
            n: [-1, 0, 0],
            q: [0, 0, 0],
        };
        assert_eq!(idx.wall_hits(), [1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn order_is_sum_of_hits_and_positions_are_sorted() {
        let images = enumerate(
            &room(Material::concrete_block_coarse()),
            SOURCE,
            RECEIVER,
            &settings(&AirModel::default(), 40.0),
        )
        .unwrap();
        for w in images.windows(2) {
            assert!(w[0].distance <= w[1].distance);
        }
        for i in &images {
            assert_eq!(i.order, i.wall_hits.iter().sum::<usize>());
            assert!(i.distance <= 40.0);
        }
    }

    #[test]
    fn image_count_grows_with_volume() {
        let b = room(Material::fully_reflective());
        for d in [20.0, 25.0] {
            let small = enumerate(&b, SOURCE, RECEIVER, &settings(&AirModel::Disabled, d))
                .unwrap()
                .len();
            let large = enumerate(
                &b,
                SOURCE,
                RECEIVER,
                &settings(&AirModel::Disabled, 2.0 * d),
            )
            .unwrap()
            .len();
            let ratio = large as f64 / small as f64;
            assert!((7.0..=9.0).contains(&ratio), "{d}: {ratio}");
        }
    }

    #[test]
    fn truncation_does_not_change_images() {
        let b = room(Material::concrete_block_coarse());
        let short = enumerate(&b, SOURCE, RECEIVER, &settings(&AirModel::default(), 15.0)).unwrap();
        let long = enumerate(&b, SOURCE, RECEIVER, &settings(&AirModel::default(), 30.0)).unwrap();
        assert_eq!(short[..], long[..short.len()]);
    }

    #[test]
    fn lossless_energy_is_pure_inverse_square() {
        let images = enumerate(
            &room(Material::fully_reflective()),
            SOURCE,
            RECEIVER,
            &settings(&AirModel::Disabled, 20.0),
        )
        .unwrap();
        for i in images {
            let expected = 0.04 / (4.0 * i.distance * i.distance);
            for e in i.band_energy {
                assert!((e - expected).abs() <= 1e-15 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn rejects_points_outside() {
        let b = room(Material::fully_reflective());
        let s = settings(&AirModel::Disabled, 10.0);
        assert!(enumerate(&b, Vec3::new(6.0, 2.0, 1.7), RECEIVER, &s).is_err());
        assert!(enumerate(&b, SOURCE, Vec3::new(2.0, 2.0, 3.0), &s).is_err());
    }

    #[test]
    fn compare_sums_coplanar_paths_and_flags_strays() {
        let images = enumerate(
            &room(Material::fully_reflective()),
            SOURCE,
            RECEIVER,
            &settings(&AirModel::Disabled, 7.0),
        )
        .unwrap();
        let walls = room(Material::fully_reflective()).walls;
        let mut a = images[1].to_image_source(&walls);
        a.band_energy = a.band_energy.map(|e| e / 2.0);
        let b = a.clone();
        let mut stray = images[0].to_image_source(&walls);
        stray.position += Vec3::new(1e-3, 0.0, 0.0);
        let report = compare(&images, &[a, b, stray], 1e-9, 1.5);
        assert_eq!(report.matched_count, 1);
        assert_eq!(report.matched[0].traced, vec![0, 1]);
        assert!(report.matched[0].max_abs_delta_db() < 1e-12);
        assert_eq!(report.unmatched_traced, vec![2]);
        assert_eq!(report.unmatched_oracle.len(), images.len() - 1);
        assert!(report.early_energy_violations.is_empty());
    }
}

use serde::{Deserialize, Serialize};

use super::{TriangleMesh, Vec3};

/// Smallest accepted ray parameter (m). Keeps a reflected ray from re-hitting
/// the face it leaves.
pub const EPS_SELF: f64 = 1e-6;

/// A ray/face intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    /// Ray parameter of the intersection (m).
    pub delta: f64,
    pub point: Vec3,
    pub face: usize,
    /// Barycentric coordinate along `b - a`.
    pub lambda: f64,
    /// Barycentric coordinate along `c - a`.
    pub mu: f64,
}

impl Hit {
    /// Strict "closer than" with ties resolved towards the lower face index.
    #[inline]
    pub fn is_closer_than(&self, other: &Hit) -> bool {
        self.delta < other.delta || (self.delta == other.delta && self.face < other.face)
    }
}

/// Möller–Trumbore on raw triangle data. Returns `(delta, lambda, mu)`.
///
/// Faces are double-sided. Only `delta > EPS_SELF` is accepted.
#[inline]
pub fn moller_trumbore(
    origin: Vec3,
    dir: Vec3,
    p0: Vec3,
    e1: Vec3,
    e2: Vec3,
) -> Option<(f64, f64, f64)> {
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - p0;
    let lambda = tvec.dot(pvec) * inv_det;
    if !(0.0..=1.0).contains(&lambda) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let mu = dir.dot(qvec) * inv_det;
    if mu < 0.0 || lambda + mu > 1.0 {
        return None;
    }
    let delta = e2.dot(qvec) * inv_det;
    if delta > EPS_SELF {
        Some((delta, lambda, mu))
    } else {
        None
    }
}

/// Intersects a ray with one face of `mesh`. `dir` must be unit length.
#[inline]
pub fn intersect_triangle(
    origin: Vec3,
    dir: Vec3,
    face: usize,
    mesh: &TriangleMesh,
) -> Option<Hit> {
    let g = mesh.face_geometry(face);
    moller_trumbore(origin, dir, g.p0, g.e1, g.e2).map(|(delta, lambda, mu)| Hit {
        delta,
        point: origin + dir * delta,
        face,
        lambda,
        mu,
    })
}

/// Smallest positive ray parameter at which the ray meets the sphere.
///
/// An origin inside the sphere yields the exit point.
#[inline]
pub fn intersect_sphere(origin: Vec3, dir: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let near = -b - s;
    if near > 0.0 {
        return Some(near);
    }
    let far = -b + s;
    (far > 0.0).then_some(far)
}

/// Nearest hit over every face of the mesh, without acceleration.
pub fn brute_force_nearest(mesh: &TriangleMesh, origin: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for face in 0..mesh.face_count() {
        if let Some(hit) = intersect_triangle(origin, dir, face, mesh) {
            if best.as_ref().is_none_or(|b| hit.is_closer_than(b)) {
                best = Some(hit);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Triangle;
    use crate::material::Material;
    use proptest::prelude::*;

    fn unit_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![Triangle::new(0, 1, 2, 0)],
            vec![Material::fully_reflective()],
        )
        .unwrap()
    }

    #[test]
    fn hits_from_above() {
        let mesh = unit_triangle();
        let hit = intersect_triangle(
            Vec3::new(0.25, 0.25, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            0,
            &mesh,
        )
        .unwrap();
        assert_eq!(hit.delta, 1.0);
        assert_eq!(hit.point, Vec3::new(0.25, 0.25, 0.0));
        assert_eq!((hit.lambda, hit.mu), (0.25, 0.25));
    }

    #[test]
    fn ignores_faces_behind_the_ray() {
        let mesh = unit_triangle();
        assert!(intersect_triangle(
            Vec3::new(0.25, 0.25, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
            0,
            &mesh
        )
        .is_none());
    }

    #[test]
    fn misses_outside_the_triangle() {
        let mesh = unit_triangle();
        assert!(intersect_triangle(
            Vec3::new(2.0, 2.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            0,
            &mesh
        )
        .is_none());
    }

    #[test]
    fn back_faces_are_hit() {
        let mesh = unit_triangle();
        let hit = intersect_triangle(
            Vec3::new(0.25, 0.25, -2.0),
            Vec3::new(0.0, 0.0, 1.0),
            0,
            &mesh,
        )
        .unwrap();
        assert_eq!(hit.delta, 2.0);
    }

    #[test]
    fn self_hit_is_rejected() {
        let mesh = unit_triangle();
        let origin = Vec3::new(0.25, 0.25, 1e-9);
        assert!(intersect_triangle(origin, Vec3::new(0.0, 0.0, -1.0), 0, &mesh).is_none());
    }

    #[test]
    fn sphere_cases() {
        let c = Vec3::new(5.0, 0.0, 0.0);
        assert_eq!(
            intersect_sphere(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), c, 1.0),
            Some(4.0)
        );
        assert_eq!(
            intersect_sphere(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), c, 1.0),
            None
        );
        assert_eq!(
            intersect_sphere(c, Vec3::new(0.0, 0.0, 1.0), c, 1.0),
            Some(1.0)
        );
        // sphere behind the ray
        assert_eq!(
            intersect_sphere(Vec3::ZERO, Vec3::new(-1.0, 0.0, 0.0), c, 1.0),
            None
        );
    }

    fn unit(v: Vec3) -> Vec3 {
        v.normalized()
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn hit_point_lies_on_ray_and_plane(o in vec3(), d in vec3(), a in vec3(), b in vec3(), c in vec3()) {
            prop_assume!(d.norm() > 1e-3);
            prop_assume!(!TriangleMesh::is_degenerate(a, b, c));
            let dir = unit(d);
            let mesh = TriangleMesh::new(vec![a, b, c], vec![Triangle::new(0, 1, 2, 0)], vec![Material::fully_reflective()]).unwrap();
            if let Some(hit) = intersect_triangle(o, dir, 0, &mesh) {
                prop_assert!((hit.point - (o + dir * hit.delta)).norm() <= 1e-9 * hit.delta.max(1.0));
                prop_assert!(hit.lambda >= 0.0 && hit.mu >= 0.0 && hit.lambda + hit.mu <= 1.0);
                let on_plane = a + (b - a) * hit.lambda + (c - a) * hit.mu;
                prop_assert!((on_plane - hit.point).norm() <= 1e-7 * hit.delta.max(1.0));
            }
        }

        #[test]
        fn sphere_hit_is_on_surface(o in vec3(), d in vec3(), c in vec3(), r in 0.1..3.0f64) {
            prop_assume!(d.norm() > 1e-3);
            let dir = unit(d);
            if let Some(t) = intersect_sphere(o, dir, c, r) {
                prop_assert!(t > 0.0);
                prop_assert!(((o + dir * t).distance(c) - r).abs() < 1e-9);
            }
        }
    }
}

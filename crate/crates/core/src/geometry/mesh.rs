use serde::{Deserialize, Serialize};

use super::{Aabb, Vec3};
use crate::error::{Error, Result};
use crate::material::Material;

/// Faces with an area at or below this value (m²) are degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// A triangular face: three indices into the vertex table and a material index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub material: usize,
}

impl Triangle {
    pub fn new(a: usize, b: usize, c: usize, material: usize) -> Self {
        Triangle { a, b, c, material }
    }
}

/// Per-face data reused by every intersection test.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceGeometry {
    pub p0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub normal: Vec3,
}

/// Immutable room geometry: vertices, triangular faces and their materials.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<Triangle>,
    materials: Vec<Material>,
    geometry: Vec<FaceGeometry>,
}

/// Twice the area of the triangle `p0 p1 p2`, as the cross product of its edges.
fn doubled_area_vector(p0: Vec3, p1: Vec3, p2: Vec3) -> Vec3 {
    (p1 - p0).cross(p2 - p0)
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices, unknown materials and degenerate faces.
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<Triangle>,
        materials: Vec<Material>,
    ) -> Result<Self> {
        for m in &materials {
            m.validate()?;
        }
        let mut geometry = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            for v in [f.a, f.b, f.c] {
                if v >= vertices.len() {
                    return Err(Error::invalid(format!(
                        "face {i} references vertex {v}, mesh has {}",
                        vertices.len()
                    )));
                }
            }
            if f.material >= materials.len() {
                return Err(Error::invalid(format!(
                    "face {i} references material {}, mesh has {}",
                    f.material,
                    materials.len()
                )));
            }
            let (p0, p1, p2) = (vertices[f.a], vertices[f.b], vertices[f.c]);
            let n = doubled_area_vector(p0, p1, p2);
            if 0.5 * n.norm() <= MIN_FACE_AREA {
                return Err(Error::invalid(format!("face {i} is degenerate")));
            }
            geometry.push(FaceGeometry {
                p0,
                e1: p1 - p0,
                e2: p2 - p0,
                normal: n.normalized(),
            });
        }
        Ok(TriangleMesh {
            vertices,
            faces,
            materials,
            geometry,
        })
    }

    pub fn is_degenerate(p0: Vec3, p1: Vec3, p2: Vec3) -> bool {
        0.5 * doubled_area_vector(p0, p1, p2).norm() <= MIN_FACE_AREA
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Triangle] {
        &self.faces
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub(crate) fn face_geometry(&self, face: usize) -> &FaceGeometry {
        &self.geometry[face]
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        let f = &self.faces[face];
        [self.vertices[f.a], self.vertices[f.b], self.vertices[f.c]]
    }

    /// Unit normal `(b-a)×(c-a)`, oriented by the face winding.
    pub fn normal(&self, face: usize) -> Vec3 {
        self.geometry[face].normal
    }

    pub fn centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }

    pub fn area(&self, face: usize) -> f64 {
        let g = &self.geometry[face];
        0.5 * g.e1.cross(g.e2).norm()
    }

    pub fn face_material(&self, face: usize) -> &Material {
        &self.materials[self.faces[face].material]
    }

    pub fn face_bounds(&self, face: usize) -> Aabb {
        let [a, b, c] = self.face_vertices(face);
        Aabb::new(a.min(b).min(c), a.max(b).max(c))
    }

    /// Bounding box over all face vertices. `None` for a mesh without faces.
    pub fn bounds(&self) -> Option<Aabb> {
        (0..self.faces.len())
            .map(|f| self.face_bounds(f))
            .reduce(|a, b| a.union(&b))
    }

    /// Distance from `point` to the closest point of `face`.
    pub fn distance_to_face(&self, face: usize, point: Vec3) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        closest_point_on_triangle(point, a, b, c).distance(point)
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

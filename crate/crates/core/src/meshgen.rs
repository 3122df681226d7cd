//! Procedural meshes: rectangular rooms, icospheres and subdivided tetrahedra.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Triangle, TriangleMesh, Vec3};
use crate::material::Material;

/// Wall order used by [`shoebox`]: x = 0, x = Lx, y = 0, y = Ly, z = 0, z = Lz.
pub const WALL_NAMES: [&str; 6] = ["x0", "x1", "y0", "y1", "z0", "z1"];

/// A `[0, Lx] × [0, Ly] × [0, Lz]` room of 12 triangles, two per wall.
///
/// `walls[i]` indexes `materials` for wall `WALL_NAMES[i]`. Faces `2i` and
/// `2i + 1` belong to wall `i`.
pub fn shoebox(dims: [f64; 3], materials: &[Material], walls: [usize; 6]) -> Result<TriangleMesh> {
    if dims.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid(format!(
            "box dimensions must be positive, got {dims:?}"
        )));
    }
    let [lx, ly, lz] = dims;
    let v = |i: usize| {
        Vec3::new(
            if i & 1 != 0 { lx } else { 0.0 },
            if i & 2 != 0 { ly } else { 0.0 },
            if i & 4 != 0 { lz } else { 0.0 },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(v).collect();
    // quads wound for outward normals
    let quads: [[usize; 4]; 6] = [
        [0, 4, 6, 2], // x0
        [1, 3, 7, 5], // x1
        [0, 1, 5, 4], // y0
        [2, 6, 7, 3], // y1
        [0, 2, 3, 1], // z0
        [4, 5, 7, 6], // z1
    ];
    let mut faces = Vec::with_capacity(12);
    for (wall, q) in quads.iter().enumerate() {
        faces.push(Triangle::new(q[0], q[1], q[2], walls[wall]));
        faces.push(Triangle::new(q[0], q[2], q[3], walls[wall]));
    }
    TriangleMesh::new(vertices, faces, materials.to_vec())
}

/// Index of the wall a shoebox face belongs to.
pub fn shoebox_wall_of_face(face: usize) -> usize {
    face / 2
}

struct Builder {
    vertices: Vec<Vec3>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn midpoint(&mut self, a: usize, b: usize, project: Option<f64>) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&i) = self.midpoints.get(&key) {
            return i;
        }
        let mut m = (self.vertices[a] + self.vertices[b]) * 0.5;
        if let Some(r) = project {
            m = m.normalized() * r;
        }
        self.vertices.push(m);
        let i = self.vertices.len() - 1;
        self.midpoints.insert(key, i);
        i
    }

    fn subdivide(&mut self, faces: &[[usize; 3]], project: Option<f64>) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in faces {
            let ab = self.midpoint(a, b, project);
            let bc = self.midpoint(b, c, project);
            let ca = self.midpoint(c, a, project);
            out.push([a, ab, ca]);
            out.push([ab, b, bc]);
            out.push([ca, bc, c]);
            out.push([ab, bc, ca]);
        }
        out
    }
}

fn into_mesh(
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    material: Material,
) -> Result<TriangleMesh> {
    let faces = faces
        .into_iter()
        .map(|[a, b, c]| Triangle::new(a, b, c, 0))
        .collect();
    TriangleMesh::new(vertices, faces, vec![material])
}

/// Sphere of `20·4^level` flat faces with every vertex on the sphere.
pub fn icosphere(
    center: Vec3,
    radius: f64,
    level: u32,
    material: Material,
) -> Result<TriangleMesh> {
    if !(radius > 0.0) {
        return Err(Error::invalid("sphere radius must be positive"));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
        .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut b = Builder {
        vertices,
        midpoints: HashMap::new(),
    };
    for _ in 0..level {
        faces = b.subdivide(&faces, Some(1.0));
    }
    let vertices = b
        .vertices
        .into_iter()
        .map(|v| center + v * radius)
        .collect();
    into_mesh(vertices, faces, material)
}

/// Regular tetrahedron with circumradius 1 centered at the origin, refined to
/// exactly `2^k` faces (`k ≥ 2`).
///
/// Even `k` is plain 4-way midpoint subdivision. Odd `k` subdivides to `2^(k-1)`
/// faces and then bisects every face through the midpoint of one edge.
pub fn tetrahedron(k: u32, material: Material) -> Result<TriangleMesh> {
    if !(2..=30).contains(&k) {
        return Err(Error::invalid(format!(
            "tetrahedron refinement needs 2 ≤ k ≤ 30, got {k}"
        )));
    }
    let s = 1.0 / 3f64.sqrt();
    let vertices = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    let mut b = Builder {
        vertices,
        midpoints: HashMap::new(),
    };
    for _ in 0..(k - 2) / 2 {
        faces = b.subdivide(&faces, None);
    }
    if k % 2 == 1 {
        let mut split = Vec::with_capacity(faces.len() * 2);
        for &[a, bb, c] in &faces {
            let m = b.midpoint(bb, c, None);
            split.push([a, bb, m]);
            split.push([a, m, c]);
        }
        faces = split;
    }
    into_mesh(b.vertices, faces, material)
}

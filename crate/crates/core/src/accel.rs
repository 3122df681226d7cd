//! Median-split bounding-box tree over mesh faces.
//!
//! Every node box encloses the full geometry of its faces, so sibling boxes may
//! overlap. Leaves hold exactly one face. Nodes live in one flat vector with the
//! root at index 0.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersect_triangle, Hit, TriangleMesh, Vec3};

/// Relative slack applied to slab distances so rounding never rejects a box
/// whose face the exact triangle test would accept.
const SLAB_SLACK: f64 = 4.0 * f64::EPSILON;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.min(other.min), self.max.max(other.max))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    /// Index of the largest extent; ties go to the lower axis.
    pub fn largest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }
}

/// A ray prepared for repeated slab tests.
#[derive(Debug, Clone, Copy)]
pub struct SlabRay {
    origin: Vec3,
    inv_dir: [f64; 3],
}

impl SlabRay {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        SlabRay {
            origin,
            inv_dir: [1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z],
        }
    }

    /// Distance at which the forward half-line enters the closed box (0 when the
    /// origin is inside), or `None` if it never does.
    #[inline]
    pub fn entry(&self, b: &Aabb) -> Option<f64> {
        let mut t_near = 0.0f64;
        let mut t_far = f64::INFINITY;
        for axis in 0..3 {
            let o = self.origin[axis];
            let inv = self.inv_dir[axis];
            if inv.is_infinite() {
                // parallel to this slab
                if o < b.min[axis] || o > b.max[axis] {
                    return None;
                }
                continue;
            }
            let t0 = (b.min[axis] - o) * inv;
            let t1 = (b.max[axis] - o) * inv;
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            t_near = t_near.max(lo);
            t_far = t_far.min(hi * (1.0 + SLAB_SLACK));
        }
        (t_near <= t_far).then_some(t_near)
    }
}

/// Whether the forward half-line from `origin` along `dir` meets the closed box.
pub fn ray_box_test(origin: Vec3, dir: Vec3, b: &Aabb) -> bool {
    SlabRay::new(origin, dir).entry(b).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Internal { left: usize, right: usize },
    Leaf { face: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Summary numbers for a built tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub face_count: usize,
    pub node_count: usize,
    pub leaf_count: usize,
    pub depth: usize,
    pub min_leaf_depth: usize,
    pub build_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct AccelTree {
    nodes: Vec<TreeNode>,
    build_time_s: f64,
}

struct BuildItem {
    face: usize,
    centroid: Vec3,
    bounds: Aabb,
}

impl AccelTree {
    /// Recursive median split along the largest box axis, keyed on face
    /// centroids (ties by face index), down to one face per leaf.
    pub fn build(mesh: &TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::invalid(
                "cannot build a tree over a mesh without faces",
            ));
        }
        let start = Instant::now();
        let mut items: Vec<BuildItem> = (0..mesh.face_count())
            .map(|face| BuildItem {
                face,
                centroid: mesh.centroid(face),
                bounds: mesh.face_bounds(face),
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len() - 1);
        build_node(&mut items, &mut nodes);
        Ok(AccelTree {
            nodes,
            build_time_s: start.elapsed().as_secs_f64(),
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn stats(&self) -> TreeStats {
        let mut depth = 0;
        let mut min_leaf_depth = usize::MAX;
        let mut leaf_count = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match self.nodes[i].kind {
                NodeKind::Leaf { .. } => {
                    leaf_count += 1;
                    depth = depth.max(d);
                    min_leaf_depth = min_leaf_depth.min(d);
                }
                NodeKind::Internal { left, right } => {
                    stack.push((left, d + 1));
                    stack.push((right, d + 1));
                }
            }
        }
        TreeStats {
            face_count: leaf_count,
            node_count: self.nodes.len(),
            leaf_count,
            depth,
            min_leaf_depth,
            build_time_s: self.build_time_s,
        }
    }

    /// Faces in leaf order.
    pub fn leaf_faces(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match self.nodes[i].kind {
                NodeKind::Leaf { face } => out.push(face),
                NodeKind::Internal { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Nearest face hit along the ray, identical to a brute-force scan
    /// (ties resolved to the lowest face index).
    ///
    /// Children are visited nearest-entry first; a subtree whose entry lies
    /// beyond the best hit so far is skipped.
    pub fn nearest_hit(&self, mesh: &TriangleMesh, origin: Vec3, dir: Vec3) -> Option<Hit> {
        let ray = SlabRay::new(origin, dir);
        let root_entry = ray.entry(&self.nodes[0].bounds)?;
        let mut best: Option<Hit> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, root_entry));
        while let Some((index, entry)) = stack.pop() {
            if let Some(b) = &best {
                if entry * (1.0 - SLAB_SLACK) > b.delta {
                    continue;
                }
            }
            match self.nodes[index].kind {
                NodeKind::Leaf { face } => {
                    if let Some(hit) = intersect_triangle(origin, dir, face, mesh) {
                        if best.as_ref().is_none_or(|b| hit.is_closer_than(b)) {
                            best = Some(hit);
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    let l = ray.entry(&self.nodes[left].bounds);
                    let r = ray.entry(&self.nodes[right].bounds);
                    match (l, r) {
                        (Some(tl), Some(tr)) => {
                            if tr < tl {
                                stack.push((left, tl));
                                stack.push((right, tr));
                            } else {
                                stack.push((right, tr));
                                stack.push((left, tl));
                            }
                        }
                        (Some(tl), None) => stack.push((left, tl)),
                        (None, Some(tr)) => stack.push((right, tr)),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }
}

fn build_node(items: &mut [BuildItem], nodes: &mut Vec<TreeNode>) -> usize {
    let bounds = items
        .iter()
        .map(|it| it.bounds)
        .reduce(|a, b| a.union(&b))
        .expect("non-empty node");
    let index = nodes.len();
    if items.len() == 1 {
        nodes.push(TreeNode {
            bounds,
            kind: NodeKind::Leaf {
                face: items[0].face,
            },
        });
        return index;
    }
    nodes.push(TreeNode {
        bounds,
        kind: NodeKind::Leaf { face: usize::MAX },
    });
    let axis = bounds.largest_axis();
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis]
            .total_cmp(&b.centroid[axis])
            .then(a.face.cmp(&b.face))
    });
    let (lo, hi) = items.split_at_mut(mid);
    let left = build_node(lo, nodes);
    let right = build_node(hi, nodes);
    nodes[index].kind = NodeKind::Internal { left, right };
    index
}

/// Anything that can answer nearest-hit queries against a mesh.
pub trait HitFinder: Sync {
    fn mesh(&self) -> &TriangleMesh;
    fn nearest_hit(&self, origin: Vec3, dir: Vec3) -> Option<Hit>;
}

/// A mesh together with its tree.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mesh: TriangleMesh,
    pub tree: AccelTree,
}

impl Scene {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        let tree = AccelTree::build(&mesh)?;
        Ok(Scene { mesh, tree })
    }
}

impl HitFinder for Scene {
    fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    #[inline]
    fn nearest_hit(&self, origin: Vec3, dir: Vec3) -> Option<Hit> {
        self.tree.nearest_hit(&self.mesh, origin, dir)
    }
}

/// Scans every face for every ray.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce<'a>(pub &'a TriangleMesh);

impl HitFinder for BruteForce<'_> {
    fn mesh(&self) -> &TriangleMesh {
        self.0
    }

    #[inline]
    fn nearest_hit(&self, origin: Vec3, dir: Vec3) -> Option<Hit> {
        crate::geometry::brute_force_nearest(self.0, origin, dir)
    }
}

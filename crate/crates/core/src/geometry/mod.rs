//! Vector math, triangle meshes and the ray/triangle and ray/sphere predicates.

mod intersect;
mod mesh;
mod obj;
mod vec3;

pub use crate::accel::Aabb;
pub use intersect::{
    brute_force_nearest, intersect_sphere, intersect_triangle, moller_trumbore, Hit, EPS_SELF,
};
pub use mesh::{closest_point_on_triangle, Triangle, TriangleMesh, MIN_FACE_AREA};
pub use obj::{load_obj, parse_obj, write_obj, ObjLoad, DEFAULT_MATERIAL};
pub use vec3::Vec3;

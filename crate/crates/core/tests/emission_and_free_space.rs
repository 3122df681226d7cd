use sonotrace::accel::{HitFinder, Scene};
use sonotrace::emission::{fibonacci_directions, SourceConfig};
use sonotrace::geometry::Vec3;
use sonotrace::material::Material;
use sonotrace::meshgen;
use sonotrace::tracer::{trace, Receiver, TraceConfig};

#[test]
fn fibonacci_caps_hold_their_share() {
    let n = 1_000_000;
    let dirs = fibonacci_directions(n).unwrap();
    let ico = meshgen::icosphere(Vec3::ZERO, 1.0, 0, Material::fully_reflective()).unwrap();
    let half_angle = 20f64.to_radians();
    let cos_limit = half_angle.cos();
    let expected = n as f64 * (1.0 - cos_limit) / 2.0;
    for face in 0..20 {
        let axis = ico.centroid(face).normalized();
        let count = dirs.iter().filter(|d| d.dot(axis) >= cos_limit).count() as f64;
        assert!(
            (count - expected).abs() <= 0.01 * expected,
            "cap {face}: {count} vs {expected}"
        );
    }
}

#[test]
fn closed_cube_catches_every_direction() {
    let mesh = meshgen::shoebox([1.0, 1.0, 1.0], &[Material::fully_reflective()], [0; 6]).unwrap();
    let scene = Scene::new(mesh).unwrap();
    let dirs = fibonacci_directions(10_000).unwrap();
    let origins = [
        Vec3::new(0.5, 0.5, 0.5),
        Vec3::new(0.1, 0.7, 0.3),
        Vec3::new(0.9, 0.05, 0.95),
    ];
    for origin in origins {
        for &dir in &dirs {
            let hit = scene
                .nearest_hit(origin, dir)
                .expect("ray escaped a closed cube");
            let p = hit.point;
            let on_wall = [p.x, p.y, p.z]
                .iter()
                .any(|c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12);
            assert!(on_wall, "{p:?}");
        }
    }
    // aimed straight at the diagonals shared by the two triangles of each wall
    let center = Vec3::new(0.5, 0.5, 0.5);
    for i in 1..100 {
        let s = i as f64 / 100.0;
        for target in [
            Vec3::new(0.0, s, s),
            Vec3::new(1.0, s, s),
            Vec3::new(s, 0.0, s),
            Vec3::new(s, 1.0, s),
            Vec3::new(s, s, 0.0),
            Vec3::new(s, s, 1.0),
        ] {
            assert!(scene
                .nearest_hit(center, (target - center).normalized())
                .is_some());
        }
    }
}

#[test]
fn free_field_counts_follow_inverse_square() {
    let absorbent = Material::fully_absorbent();
    let mesh = meshgen::shoebox([100.0, 100.0, 100.0], &[absorbent], [0; 6]).unwrap();
    let scene = Scene::new(mesh).unwrap();
    let n = 100_000;
    let source = SourceConfig::new(Vec3::new(20.0, 50.0, 50.0), n);
    let radius = 0.5;
    for d in [2.0, 5.0, 10.0, 20.0] {
        let receiver = Receiver::new(source.position + Vec3::new(d, 0.0, 0.0), radius).unwrap();
        let out = trace(&scene, &source, &receiver, &TraceConfig::default()).unwrap();
        let direct = out
            .captures
            .iter()
            .filter(|c| c.face_history.is_empty())
            .count();
        let expected = n as f64 * radius * radius / (4.0 * d * d);
        if expected < 50.0 {
            continue;
        }
        let error_db = 10.0 * (direct as f64 / expected).log10();
        assert!(error_db.abs() <= 1.0, "d = {d}: {direct} vs {expected:.1}");
    }
}

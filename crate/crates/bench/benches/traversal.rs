use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use sonotrace::accel::{AccelTree, BruteForce, HitFinder, Scene};
use sonotrace::emission::{emit, fibonacci_directions, SourceConfig};
use sonotrace::geometry::Vec3;
use sonotrace::material::Material;
use sonotrace::meshgen;
use sonotrace::tracer::{Receiver, Tracer};

fn tetra_scene(k: u32) -> Scene {
    Scene::new(meshgen::tetrahedron(k, Material::fully_reflective()).unwrap()).unwrap()
}

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree_build");
    group.sample_size(10);
    for k in [10, 14, 17] {
        let mesh = meshgen::tetrahedron(k, Material::fully_reflective()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &mesh, |b, mesh| {
            b.iter(|| AccelTree::build(mesh).unwrap())
        });
    }
    group.finish();
}

fn nearest_hit(c: &mut Criterion) {
    let dirs = fibonacci_directions(1024).unwrap();
    let mut group = c.benchmark_group("nearest_hit_1024_rays");
    for k in [10, 14, 18] {
        let scene = tetra_scene(k);
        group.bench_with_input(BenchmarkId::new("tree", k), &scene, |b, scene| {
            b.iter(|| {
                dirs.iter()
                    .filter(|&&d| scene.nearest_hit(Vec3::ZERO, d).is_some())
                    .count()
            })
        });
    }
    group.sample_size(10);
    for k in [10, 12] {
        let scene = tetra_scene(k);
        let brute = BruteForce(&scene.mesh);
        group.bench_with_input(BenchmarkId::new("brute", k), &brute, |b, brute| {
            b.iter(|| {
                dirs.iter()
                    .filter(|&&d| brute.nearest_hit(Vec3::ZERO, d).is_some())
                    .count()
            })
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let scene = Scene::new(
        meshgen::shoebox(
            [5.0, 4.0, 3.0],
            &[Material::concrete_block_coarse()],
            [0; 6],
        )
        .unwrap(),
    )
    .unwrap();
    let receiver = Receiver::new(Vec3::new(2.0, 2.0, 1.7), 0.2).unwrap();
    let tracer = Tracer::new(&scene, receiver, 100.0, false).unwrap();
    let rays = emit(&SourceConfig::new(Vec3::new(4.0, 2.0, 1.7), 10_000)).unwrap();
    c.bench_function("shoebox_step_10000_rays", |b| {
        b.iter_batched(
            || rays.clone(),
            |mut rays| tracer.step(&mut rays),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, build, nearest_hit, step);
criterion_main!(benches);

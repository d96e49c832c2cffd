//! BVH-accelerated queries against exhaustive loops over all faces.

use grasp_core::gripper::{check_validity, GripperSpec};
use grasp_core::linalg::{Obb, Quat, Vec3};
use grasp_core::mesh::intersect::{obb_triangle, ray_triangle};
use grasp_core::mesh::{shapes, TriMesh, RAY_T_EPS};
use grasp_core::se3::{uniform_direction, uniform_quaternion, Pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type V = Vec3<f64>;

/// Test meshes with an analytic inside test for each.
fn meshes() -> Vec<(&'static str, TriMesh<f64>, Box<dyn Fn(V) -> bool>)> {
    let in_box = |h: V| move |p: V| p.x.abs() < h.x && p.y.abs() < h.y && p.z.abs() < h.z;
    let ico = shapes::icosphere(15.0, 2);
    let ico_planes: Vec<(V, f64)> = (0..ico.faces().len())
        .map(|f| (ico.face_normals()[f], ico.face_normals()[f].dot(ico.triangle(f)[0])))
        .collect();
    let cyl = shapes::cylinder(15.0, 40.0, 24);
    let cyl_planes: Vec<(V, f64)> = (0..cyl.faces().len())
        .map(|f| (cyl.face_normals()[f], cyl.face_normals()[f].dot(cyl.triangle(f)[0])))
        .collect();
    vec![
        ("cube", shapes::cuboid(Vec3::splat(20.0)), Box::new(in_box(Vec3::splat(10.0)))),
        ("plate", shapes::plate(60.0, 40.0, 2.0), Box::new(in_box(Vec3::new(30.0, 20.0, 1.0)))),
        (
            "l_bracket",
            shapes::l_bracket(50.0, 40.0, 5.0, 20.0),
            Box::new(|p: V| {
                let (x, y) = (p.x + 25.0, p.y + 20.0);
                let in_profile = (x > 0.0 && y > 0.0) && ((x < 50.0 && y < 5.0) || (x < 5.0 && y < 40.0));
                in_profile && p.z.abs() < 10.0
            }),
        ),
        ("cylinder", cyl, Box::new(move |p: V| cyl_planes.iter().all(|(n, d)| n.dot(p) < *d))),
        ("icosphere", ico, Box::new(move |p: V| ico_planes.iter().all(|(n, d)| n.dot(p) < *d))),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> V {
    Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn brute_hits(mesh: &TriMesh<f64>, o: V, d: V) -> Vec<(f64, usize)> {
    let mut hits: Vec<(f64, usize)> = (0..mesh.faces().len())
        .filter_map(|f| ray_triangle(o, d, mesh.triangle(f)).map(|t| (t, f)))
        .filter(|&(t, _)| t >= RAY_T_EPS)
        .collect();
    hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    hits
}

#[test]
fn raycast_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, mesh, _) in meshes() {
        let mut hit_rays = 0;
        for i in 0..1000 {
            let o = random_point(&mut rng, 60.0);
            // half the rays aim at a surface point so most of them hit
            let d = if i % 2 == 0 {
                (mesh.sample_surface_point(&mut rng).position - o).normalized()
            } else {
                uniform_direction(&mut rng)
            };
            let expected = brute_hits(&mesh, o, d);
            let all = mesh.raycast_all(o, d);
            assert_eq!(all.len(), expected.len(), "{name}: ray {i}");
            for (h, &(t, _)) in all.iter().zip(&expected) {
                assert!((h.t - t).abs() < 1e-6, "{name}: ray {i}");
                assert!((h.position - (o + d * h.t)).norm() < 1e-6);
            }
            match (mesh.raycast_first(o, d), expected.first()) {
                (None, None) => {}
                (Some(h), Some(&(t, _))) => assert!((h.t - t).abs() < 1e-6, "{name}: first {i}"),
                other => panic!("{name}: first mismatch on ray {i}: {other:?}"),
            }
            match (mesh.raycast_farthest(o, d), expected.last()) {
                (None, None) => {}
                (Some(h), Some(&(t, _))) => assert!((h.t - t).abs() < 1e-6, "{name}: farthest {i}"),
                other => panic!("{name}: farthest mismatch on ray {i}: {other:?}"),
            }
            hit_rays += usize::from(!expected.is_empty());
        }
        assert!(hit_rays > 400, "{name}: only {hit_rays} rays hit");
    }
}

#[test]
fn first_hit_from_beyond_farthest_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (name, mesh, _) in meshes() {
        for _ in 0..300 {
            // origin outside the bounding sphere so the backward ray sees the same hits
            let o = uniform_direction::<f64, _>(&mut rng) * 100.0;
            let d = (mesh.sample_surface_point(&mut rng).position - o).normalized();
            let (Some(first), Some(far)) = (mesh.raycast_first(o, d), mesh.raycast_farthest(o, d)) else {
                continue;
            };
            let back_origin = o + d * (far.t + 10.0);
            let back_first = mesh.raycast_first(back_origin, -d).unwrap();
            let back_far = mesh.raycast_farthest(back_origin, -d).unwrap();
            assert!((back_first.position - far.position).norm() < 1e-6, "{name}");
            assert!((back_far.position - first.position).norm() < 1e-6, "{name}");
        }
    }
}

#[test]
fn box_queries_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, mesh, inside) in meshes() {
        let (mut touching, mut enclosed, mut clear) = (0, 0, 0);
        for i in 0..1000 {
            // every fourth box is small and just under the surface to exercise containment
            let (center, size) = if i % 4 == 0 {
                let s = mesh.sample_surface_point(&mut rng);
                (s.position - s.normal * 2.0, 1.0)
            } else {
                (random_point(&mut rng, 40.0), 12.0)
            };
            let half = Vec3::new(rng.gen_range(0.2..size), rng.gen_range(0.2..size), rng.gen_range(0.2..size));
            let obb = Obb::new(center, uniform_quaternion(&mut rng), half);
            let touches = (0..mesh.faces().len()).any(|f| obb_triangle(&obb, mesh.triangle(f)));
            assert_eq!(mesh.box_touches_surface(&obb), touches, "{name}: box {i}");
            let expected = touches || inside(center);
            assert_eq!(mesh.volume_intersects(&obb), expected, "{name}: box {i}");
            match (touches, expected) {
                (true, _) => touching += 1,
                (false, true) => enclosed += 1,
                (false, false) => clear += 1,
            }
        }
        assert!(touching > 50 && clear > 50, "{name}: {touching} touching, {clear} clear");
        if name != "plate" {
            assert!(enclosed > 0, "{name}: no enclosed boxes drawn");
        }
    }
}

#[test]
fn triangle_points_inside_box_imply_overlap() {
    // independent of the separating-axis code: dense barycentric samples
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut positives = 0;
    for _ in 0..2000 {
        let tri = [random_point(&mut rng, 10.0), random_point(&mut rng, 10.0), random_point(&mut rng, 10.0)];
        let obb = Obb::new(
            random_point(&mut rng, 8.0),
            uniform_quaternion(&mut rng),
            Vec3::new(rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)),
        );
        let mut any_inside = false;
        for a in 0..=20 {
            for b in 0..=(20 - a) {
                let (u, v) = (a as f64 / 20.0, b as f64 / 20.0);
                let p = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
                any_inside |= obb.contains(p);
            }
        }
        if any_inside {
            positives += 1;
            assert!(obb_triangle(&obb, tri));
        }
    }
    assert!(positives > 100);
}

#[test]
fn containment_matches_analytic_inside_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (name, mesh, inside) in meshes() {
        for _ in 0..2000 {
            let p = random_point(&mut rng, 35.0);
            assert_eq!(mesh.contains_point(p), inside(p), "{name}: {p:?}");
        }
    }
}

#[test]
fn validity_invariant_under_rigid_conjugation() {
    let g = GripperSpec::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for (name, mesh, _) in meshes() {
        let bounds = grasp_core::samplers::sampling_bounds(&mesh, &g);
        let mut agree = 0;
        for _ in 0..40 {
            let t = Pose::new(random_point(&mut rng, 100.0), uniform_quaternion(&mut rng));
            let moved = mesh.transformed(|v| t.transform_point(v)).unwrap();
            for _ in 0..25 {
                let pose = grasp_core::se3::sample_uniform_pose(&bounds, &mut rng);
                let pose = if rng.gen_bool(0.5) { near_surface(&mesh, &mut rng) } else { pose };
                let a = check_validity(&mesh, &pose, &g);
                let b = check_validity(&moved, &t.compose(&pose), &g);
                assert_eq!(a, b, "{name}");
                agree += 1;
            }
        }
        assert_eq!(agree, 1000);
    }
}

fn near_surface(mesh: &TriMesh<f64>, rng: &mut ChaCha8Rng) -> Pose<f64> {
    let s = mesh.sample_surface_point(rng);
    Pose::new(s.position + s.normal * rng.gen_range(-5.0..30.0), uniform_quaternion::<f64, _>(rng))
}

#[test]
fn obb_from_quaternion_matches_rotation() {
    let q = Quat::from_axis_angle(Vec3::unit_z(), 0.3_f64);
    let obb = Obb::new(Vec3::zero(), q, Vec3::new(2.0, 1.0, 1.0));
    assert!(obb.contains(q.rotate(Vec3::new(1.9, 0.0, 0.0))));
    assert!(!obb.contains(Vec3::new(0.0, 1.9, 0.0)));
}

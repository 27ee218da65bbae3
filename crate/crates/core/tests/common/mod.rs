//! Brute-force reference implementations shared by the integration tests.
//! They are written independently of the library's primitive code.
#![allow(dead_code)]

use aerogym::geometry::{ObjectTag, Scene, SceneBuilder, Shape, TriMesh};
use aerogym::math::Vec3;
use aerogym::sensing::{CameraModel, DepthImage, Pose, SegmentationImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * s
}

/// Plane projection when it lands inside, else the best of the three edges.
pub fn closest_on_triangle(p: &Vec3, t: &[Vec3; 3]) -> Vec3 {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let n2 = n.norm_squared();
    if n2 > 0.0 {
        let q = p - n * ((p - t[0]).dot(&n) / n2);
        let inside = (0..3).all(|i| {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            (b - a).cross(&(q - a)).dot(&n) >= 0.0
        });
        if inside {
            return q;
        }
    }
    let mut best = closest_on_segment(p, &t[0], &t[1]);
    for (a, b) in [(t[1], t[2]), (t[2], t[0])] {
        let c = closest_on_segment(p, &a, &b);
        if (p - c).norm() < (p - best).norm() {
            best = c;
        }
    }
    best
}

/// Ray/plane intersection followed by an inside test.
pub fn ray_triangle(o: &Vec3, d: &Vec3, t: &[Vec3; 3]) -> Option<f64> {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let denom = n.dot(d);
    if denom.abs() < 1e-14 * n.norm() {
        return None;
    }
    let s = n.dot(&(t[0] - o)) / denom;
    if !(s > 0.0) {
        return None;
    }
    let q = o + d * s;
    let inside = (0..3).all(|i| {
        let (a, b) = (t[i], t[(i + 1) % 3]);
        (b - a).cross(&(q - a)).dot(&n) >= 0.0
    });
    inside.then_some(s)
}

pub fn ray_sphere(o: &Vec3, d: &Vec3, c: &Vec3, r: f64) -> Option<f64> {
    // |o + s d - c|^2 = r^2 with |d| = 1
    let m = o - c;
    let half_b = m.dot(d);
    let disc = half_b * half_b - (m.norm_squared() - r * r);
    if disc < 0.0 {
        return None;
    }
    let roots = [-half_b - disc.sqrt(), -half_b + disc.sqrt()];
    roots.into_iter().find(|&s| s > 0.0)
}

/// Box given by center, rotation columns and half extents.
pub fn ray_box(o: &Vec3, d: &Vec3, center: &Vec3, axes: &nalgebra::Matrix3<f64>, h: &Vec3) -> Option<f64> {
    let lo = axes.transpose() * (o - center);
    let ld = axes.transpose() * d;
    let (mut enter, mut exit) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if ld[i] == 0.0 {
            if lo[i].abs() > h[i] {
                return None;
            }
            continue;
        }
        let a = (-h[i] - lo[i]) / ld[i];
        let b = (h[i] - lo[i]) / ld[i];
        enter = enter.max(a.min(b));
        exit = exit.min(a.max(b));
    }
    if enter > exit {
        return None;
    }
    [enter, exit].into_iter().find(|&s| s > 0.0)
}

pub fn closest_on_sphere(p: &Vec3, c: &Vec3, r: f64) -> Vec3 {
    let v = p - c;
    c + v * (r / v.norm())
}

pub fn closest_on_box(p: &Vec3, center: &Vec3, axes: &nalgebra::Matrix3<f64>, h: &Vec3) -> Vec3 {
    let l = axes.transpose() * (p - center);
    let inside = (0..3).all(|i| l[i].abs() <= h[i]);
    let mut q = l;
    if inside {
        let (axis, _) = (0..3)
            .map(|i| (i, h[i] - l[i].abs()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        q[axis] = h[axis].copysign(l[axis]);
    } else {
        for i in 0..3 {
            q[i] = l[i].clamp(-h[i], h[i]);
        }
    }
    center + axes * q
}

/// Object-level brute force over every shape in the scene.
pub fn brute_nearest(scene: &Scene, p: &Vec3) -> Option<(f64, u32)> {
    let mut best: Option<(f64, u32)> = None;
    for o in scene.objects() {
        let d = match &o.shape {
            Shape::Sphere(s) => (p - closest_on_sphere(p, &s.center, s.radius)).norm(),
            Shape::Box(b) => (p - closest_on_box(p, &b.center, &b.rotation.to_rotation_matrix().into_inner(), &b.half_extents)).norm(),
            Shape::TriMesh(m) => (0..m.triangles.len())
                .map(|k| {
                    let t = m.triangle(k);
                    (p - closest_on_triangle(p, &[t.a, t.b, t.c])).norm()
                })
                .fold(f64::INFINITY, f64::min),
        };
        if best.map_or(true, |(bd, bid)| d < bd || (d == bd && o.id < bid)) {
            best = Some((d, o.id));
        }
    }
    best
}

pub fn brute_raycast(scene: &Scene, o: &Vec3, d: &Vec3, max_range: f64) -> Option<(f64, u32)> {
    let mut best: Option<(f64, u32)> = None;
    for obj in scene.objects() {
        let hit = match &obj.shape {
            Shape::Sphere(s) => ray_sphere(o, d, &s.center, s.radius),
            Shape::Box(b) => ray_box(o, d, &b.center, &b.rotation.to_rotation_matrix().into_inner(), &b.half_extents),
            Shape::TriMesh(m) => (0..m.triangles.len())
                .filter_map(|k| {
                    let t = m.triangle(k);
                    ray_triangle(o, d, &[t.a, t.b, t.c])
                })
                .reduce(f64::min),
        };
        if let Some(t) = hit.filter(|&t| t <= max_range) {
            if best.map_or(true, |(bt, bid)| t < bt || (t == bt && obj.id < bid)) {
                best = Some((t, obj.id));
            }
        }
    }
    best
}

/// Per-pixel render with [`brute_raycast`].
pub fn brute_render(scene: &Scene, body: &Pose, camera: &CameraModel) -> (DepthImage, SegmentationImage) {
    let (origin, rot) = camera.world_pose(body);
    let mut depth = DepthImage::filled(camera.width, camera.height, camera.max_range, camera.max_range);
    let mut seg = SegmentationImage::filled(camera.width, camera.height, 0);
    let f = camera.focal_px();
    for row in 0..camera.height {
        for col in 0..camera.width {
            let u = col as f64 + 0.5 - camera.width as f64 / 2.0;
            let v = row as f64 + 0.5 - camera.height as f64 / 2.0;
            let local = Vec3::new(f, -u, -v);
            let cos = f / local.norm();
            let dir = rot * local.normalize();
            if let Some((t, id)) = brute_raycast(scene, &origin, &dir, camera.max_range / cos) {
                let z = t * cos;
                if z < camera.max_range {
                    depth.data[row * camera.width + col] = z;
                    seg.data[row * camera.width + col] = id;
                }
            }
        }
    }
    (depth, seg)
}

/// `objects` meshes of `per_object` small random triangles in a 14x8x4 room.
pub fn triangle_soup(objects: usize, per_object: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SceneBuilder::new();
    for _ in 0..objects {
        let mut vertices = Vec::new();
        for _ in 0..per_object {
            let c = Vec3::new(rng.gen_range(-7.0..7.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.0..4.0));
            for _ in 0..3 {
                vertices.push(c + Vec3::from_fn(|_, _| rng.gen_range(-0.25..0.25)));
            }
        }
        let triangles = (0..per_object as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
        b.add(ObjectTag::Obstacle, Shape::TriMesh(TriMesh { vertices, triangles }));
    }
    b.build().unwrap()
}

/// Spheres, rotated boxes and a few triangles, plus a floor.
pub fn mixed_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SceneBuilder::new();
    b.add(
        ObjectTag::Structure,
        Shape::aabb(&aerogym::geometry::Aabb::new(Vec3::new(-8.0, -5.0, -0.2), Vec3::new(8.0, 5.0, 0.0))),
    );
    for _ in 0..40 {
        let c = Vec3::new(rng.gen_range(-6.0..6.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.2..3.5));
        match rng.gen_range(0..3) {
            0 => {
                b.add(ObjectTag::Obstacle, Shape::sphere(c, rng.gen_range(0.1..0.6)));
            }
            1 => {
                let q = nalgebra::UnitQuaternion::from_euler_angles(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                );
                let h = Vec3::from_fn(|_, _| rng.gen_range(0.1..0.5));
                b.add(ObjectTag::Obstacle, Shape::cuboid(c, h, q));
            }
            _ => {
                let vertices = (0..3)
                    .map(|_| c + Vec3::from_fn(|_, _| rng.gen_range(-0.6..0.6)))
                    .collect();
                b.add(
                    ObjectTag::Obstacle,
                    Shape::TriMesh(TriMesh {
                        vertices,
                        triangles: vec![[0, 1, 2]],
                    }),
                );
            }
        }
    }
    b.build().unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Body pose with small random roll/pitch and any yaw.
pub fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let q = nalgebra::UnitQuaternion::from_euler_angles(
        rng.gen_range(-0.4..0.4),
        rng.gen_range(-0.4..0.4),
        rng.gen_range(-3.1..3.1),
    );
    Pose::new(
        Vec3::new(rng.gen_range(-6.0..6.0), rng.gen_range(-3.5..3.5), rng.gen_range(0.5..3.5)),
        q.to_rotation_matrix().into_inner(),
    )
}

//! Obstacle shapes and their exact point/ray queries.

use nalgebra::{Matrix3, UnitQuaternion};

use super::aabb::{fmax, fmin, ray_inverse, Aabb};
use crate::math::Vec3;

/// Box with arbitrary orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub rotation: UnitQuaternion<f64>,
    /// Columns are the box axes in world coordinates.
    axes: Matrix3<f64>,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            center,
            half_extents,
            rotation,
            axes: rotation.to_rotation_matrix().into_inner(),
        }
    }

    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Self {
        Self::new(center, half_extents, UnitQuaternion::identity())
    }

    pub fn from_aabb(b: &Aabb) -> Self {
        Self::axis_aligned(b.center(), b.extent() * 0.5)
    }

    #[inline]
    fn to_local(&self, p: &Vec3) -> Vec3 {
        self.axes.tr_mul(&(p - self.center))
    }

    pub fn bounds(&self) -> Aabb {
        let r = self.axes.abs() * self.half_extents;
        Aabb::new(self.center - r, self.center + r)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i])
    }

    /// Closest point on the box surface. Points inside project onto the
    /// nearest face (lowest axis on ties).
    pub fn closest_surface_point(&self, p: &Vec3) -> Vec3 {
        let h = &self.half_extents;
        let mut l = self.to_local(p);
        let inside = (0..3).all(|i| l[i].abs() <= h[i]);
        if inside {
            let mut axis = 0;
            let mut best = f64::INFINITY;
            for i in 0..3 {
                let gap = h[i] - l[i].abs();
                if gap < best {
                    best = gap;
                    axis = i;
                }
            }
            l[axis] = if l[axis] < 0.0 { -h[axis] } else { h[axis] };
        } else {
            for i in 0..3 {
                l[i] = l[i].clamp(-h[i], h[i]);
            }
        }
        self.center + self.axes * l
    }

    #[inline]
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let o = self.to_local(origin);
        let inv = ray_inverse(&self.axes.tr_mul(dir));
        let h = &self.half_extents;
        let (x0, x1) = ((-h.x - o.x) * inv.x, (h.x - o.x) * inv.x);
        let (y0, y1) = ((-h.y - o.y) * inv.y, (h.y - o.y) * inv.y);
        let (z0, z1) = ((-h.z - o.z) * inv.z, (h.z - o.z) * inv.z);
        let t0 = fmax(fmax(fmin(x0, x1), fmin(y0, y1)), fmin(z0, z1));
        let t1 = fmin(fmin(fmax(x0, x1), fmax(y0, y1)), fmax(z0, z1));
        if t0 > t1 {
            None
        } else if t0 > 0.0 {
            Some(t0)
        } else if t1 > 0.0 {
            Some(t1)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            self.center.add_scalar(-self.radius),
            self.center.add_scalar(self.radius),
        )
    }

    pub fn closest_surface_point(&self, p: &Vec3) -> Vec3 {
        let d = p - self.center;
        let n = d.norm();
        if n == 0.0 {
            self.center + Vec3::new(0.0, 0.0, self.radius)
        } else {
            self.center + d * (self.radius / n)
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }

    /// Smallest positive hit distance along a unit direction.
    #[inline]
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let oc = origin - self.center;
        let b = oc.dot(dir);
        let c = oc.norm_squared() - self.radius * self.radius;
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
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle {
    pub fn bounds(&self) -> Aabb {
        Aabb::from_points([&self.a, &self.b, &self.c])
    }

    /// Closest point on the triangle (Voronoi-region walk).
    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(&ap);
        let d2 = ac.dot(&ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return *a;
        }
        let bp = p - b;
        let d3 = ab.dot(&bp);
        let d4 = ac.dot(&bp);
        if d3 >= 0.0 && d4 <= d3 {
            return *b;
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return a + ab * v;
        }
        let cp = p - c;
        let d5 = ab.dot(&cp);
        let d6 = ac.dot(&cp);
        if d6 >= 0.0 && d5 <= d6 {
            return *c;
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return a + ac * w;
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return b + (c - b) * w;
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        a + ab * v + ac * w
    }

    /// Two-sided Moller-Trumbore intersection.
    #[inline]
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let pvec = dir.cross(&e2);
        let det = e1.dot(&pvec);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv = 1.0 / det;
        let tvec = origin - self.a;
        let u = tvec.dot(&pvec) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(&e1);
        let v = dir.dot(&qvec) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = e2.dot(&qvec) * inv;
        (t > 0.0).then_some(t)
    }
}

/// Indexed triangle mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        Triangle {
            a: self.vertices[a as usize],
            b: self.vertices[b as usize],
            c: self.vertices[c as usize],
        }
    }

    /// Closed, outward-facing box mesh (12 triangles).
    pub fn cuboid(min: Vec3, max: Vec3) -> Self {
        let v = |x: bool, y: bool, z: bool| {
            Vec3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        let triangles = vec![
            [0, 2, 1], [0, 3, 2], // bottom
            [4, 5, 6], [4, 6, 7], // top
            [0, 1, 5], [0, 5, 4], // front (y = min)
            [3, 7, 6], [3, 6, 2], // back
            [0, 4, 7], [0, 7, 3], // left
            [1, 2, 6], [1, 6, 5], // right
        ];
        Self {
            vertices,
            triangles,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Sphere(Sphere),
    Box(OrientedBox),
    TriMesh(TriMesh),
}

impl Shape {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Shape::Sphere(Sphere { center, radius })
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Shape::Box(OrientedBox::new(center, half_extents, rotation))
    }

    /// Axis-aligned box spanning `b`.
    pub fn aabb(b: &Aabb) -> Self {
        Shape::Box(OrientedBox::from_aabb(b))
    }
}

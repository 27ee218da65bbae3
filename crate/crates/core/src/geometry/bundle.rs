//! Coherent ray bundles: rays sharing an origin inside a convex cone are
//! cast against the primitives the cone can reach, found with one BVH
//! traversal per bundle.

use super::aabb::Aabb;
use crate::math::Vec3;

/// Convex cone of rays from a common origin, bounded by planes through the
/// origin and a maximum reach.
#[derive(Clone, Debug, PartialEq)]
pub struct RayCone {
    pub origin: Vec3,
    /// Inward normals of the side planes.
    pub normals: Vec<Vec3>,
    pub reach: f64,
}

impl RayCone {
    /// Cone spanned by `corners` (directions listed in cyclic order around
    /// the bundle). Every direction that is a non-negative combination of
    /// the corners lies inside.
    pub fn from_corners(origin: Vec3, corners: &[Vec3], reach: f64) -> Self {
        let mid: Vec3 = corners.iter().sum();
        let mut normals = Vec::with_capacity(corners.len());
        for k in 0..corners.len() {
            let n = corners[k].cross(&corners[(k + 1) % corners.len()]);
            let len = n.norm();
            if len < 1e-12 {
                continue;
            }
            let n = n / len;
            normals.push(if n.dot(&mid) < 0.0 { -n } else { n });
        }
        Self { origin, normals, reach }
    }

    /// Conservative: false only when no ray of the cone can meet `b` within
    /// the reach.
    pub fn may_hit(&self, b: &Aabb) -> bool {
        if b.distance_squared(&self.origin) > self.reach * self.reach {
            return false;
        }
        let eps = 1e-9 * (1.0 + self.reach);
        self.normals.iter().all(|n| {
            let p = Vec3::new(
                if n.x >= 0.0 { b.max.x } else { b.min.x },
                if n.y >= 0.0 { b.max.y } else { b.min.y },
                if n.z >= 0.0 { b.max.z } else { b.min.z },
            );
            n.dot(&(p - self.origin)) >= -eps
        })
    }
}

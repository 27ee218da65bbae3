use serde::{Deserialize, Serialize};

use super::aabb::Aabb;
use super::bundle::RayCone;
use super::bvh::{Bvh, PrimShape, Primitive};
use super::primitives::{Shape, Sphere};
use crate::math::Vec3;

/// Ids at or above this value are reserved for dynamic objects (other
/// vehicles in swarm rendering); scene objects must stay below it.
pub const DYNAMIC_ID_BASE: u32 = 60_000;

/// Semantic role of a scene object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectTag {
    /// Walls, floor, ceiling.
    Structure,
    Obstacle,
    /// Task landmarks such as a landing pad.
    Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    pub id: u32,
    pub tag: ObjectTag,
    pub shape: Shape,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProximityResult {
    /// Closest point on any obstacle surface.
    pub point: Vec3,
    pub distance: f64,
    pub object_id: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub object_id: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("scene has no objects")]
    EmptyScene,
    #[error("object id {0} is used twice")]
    DuplicateId(u32),
    #[error("object id {id} is invalid: {reason}")]
    InvalidObject { id: u32, reason: String },
}

/// Immutable obstacle set with a BVH over all primitives.
#[derive(Clone, Debug)]
pub struct Scene {
    objects: Vec<SceneObject>,
    prims: Vec<Primitive>,
    bvh: Bvh,
    bounds: Option<Aabb>,
}

impl Default for Scene {
    fn default() -> Self {
        Self::empty()
    }
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn check_shape(id: u32, shape: &Shape) -> Result<(), GeometryError> {
    let bad = |reason: &str| {
        Err(GeometryError::InvalidObject {
            id,
            reason: reason.to_string(),
        })
    };
    match shape {
        Shape::Sphere(s) => {
            if !finite(&s.center) || !(s.radius > 0.0 && s.radius.is_finite()) {
                return bad("sphere needs a finite center and positive radius");
            }
        }
        Shape::Box(b) => {
            if !finite(&b.center) || !b.half_extents.iter().all(|&h| h > 0.0 && h.is_finite()) {
                return bad("box needs a finite center and positive half extents");
            }
        }
        Shape::TriMesh(m) => {
            if m.triangles.is_empty() {
                return bad("mesh has no triangles");
            }
            if !m.vertices.iter().all(finite) {
                return bad("mesh has non-finite vertices");
            }
            let n = m.vertices.len() as u32;
            if m.triangles.iter().flatten().any(|&i| i >= n) {
                return bad("triangle index out of range");
            }
        }
    }
    Ok(())
}

impl Scene {
    pub fn empty() -> Self {
        Self {
            objects: Vec::new(),
            prims: Vec::new(),
            bvh: Bvh::default(),
            bounds: None,
        }
    }

    /// Validates ids (unique, in `1..DYNAMIC_ID_BASE`) and shapes, then
    /// builds the BVH.
    pub fn new(objects: Vec<SceneObject>) -> Result<Self, GeometryError> {
        let mut ids = std::collections::HashSet::new();
        let mut prims = Vec::new();
        for obj in &objects {
            if obj.id == 0 || obj.id >= DYNAMIC_ID_BASE {
                return Err(GeometryError::InvalidObject {
                    id: obj.id,
                    reason: format!("ids must lie in 1..{DYNAMIC_ID_BASE}"),
                });
            }
            if !ids.insert(obj.id) {
                return Err(GeometryError::DuplicateId(obj.id));
            }
            check_shape(obj.id, &obj.shape)?;
            match &obj.shape {
                Shape::Sphere(s) => prims.push(Primitive {
                    shape: PrimShape::Sphere(*s),
                    id: obj.id,
                }),
                Shape::Box(b) => prims.push(Primitive {
                    shape: PrimShape::Box(b.clone()),
                    id: obj.id,
                }),
                Shape::TriMesh(m) => {
                    prims.extend((0..m.triangles.len()).map(|i| Primitive {
                        shape: PrimShape::Triangle(m.triangle(i)),
                        id: obj.id,
                    }));
                }
            }
        }
        let bounds = prims.iter().map(|p| p.bounds()).reduce(|a, b| a.union(&b));
        let bvh = Bvh::build(&mut prims);
        Ok(Self {
            objects,
            prims,
            bvh,
            bounds,
        })
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// World AABB of all geometry; `None` for an empty scene.
    pub fn bounds(&self) -> Option<Aabb> {
        self.bounds
    }

    pub fn primitive_count(&self) -> usize {
        self.prims.len()
    }

    pub fn bvh_node_count(&self) -> usize {
        self.bvh.node_count()
    }

    /// Globally closest surface point; ties go to the lowest object id.
    pub fn nearest_point(&self, query: &Vec3) -> Result<ProximityResult, GeometryError> {
        self.bvh
            .nearest(&self.prims, query)
            .map(|n| ProximityResult {
                point: n.point,
                distance: n.distance,
                object_id: n.id,
            })
            .ok_or(GeometryError::EmptyScene)
    }

    /// Nearest intersection with `t` in `(0, max_range]` along a unit direction.
    pub fn raycast(&self, origin: &Vec3, direction: &Vec3, max_range: f64) -> Option<RayHit> {
        self.bvh
            .raycast(&self.prims, origin, direction, max_range)
            .map(|(t, object_id)| RayHit { t, object_id })
    }

    /// True when a sphere of `radius` at `position` comes closer than `radius`
    /// to any surface.
    pub fn collision_check(&self, position: &Vec3, radius: f64) -> Result<bool, GeometryError> {
        Ok(self.nearest_point(position)?.distance < radius)
    }

    /// True when `point` lies inside a solid primitive (sphere or box).
    /// Meshes are treated as surfaces.
    pub fn inside_solid(&self, point: &Vec3) -> bool {
        self.bvh.contains(&self.prims, point)
    }

    #[cfg(test)]
    pub(crate) fn bvh(&self) -> &Bvh {
        &self.bvh
    }
}

/// Anything rays can be cast against.
pub trait RayQuery: Sync {
    fn raycast(&self, origin: &Vec3, direction: &Vec3, max_range: f64) -> Option<RayHit>;

    /// Cast unit rays `dirs` from `cone.origin`, each with its own range;
    /// every ray must lie inside `cone` and within `cone.reach`. Results
    /// equal per-ray [`raycast`](Self::raycast) calls.
    fn cast_bundle(&self, cone: &RayCone, dirs: &[Vec3], max_ranges: &[f64], out: &mut [Option<RayHit>]) {
        for ((d, &r), o) in dirs.iter().zip(max_ranges).zip(out.iter_mut()) {
            *o = self.raycast(&cone.origin, d, r);
        }
    }
}

impl RayQuery for Scene {
    #[inline]
    fn raycast(&self, origin: &Vec3, direction: &Vec3, max_range: f64) -> Option<RayHit> {
        Scene::raycast(self, origin, direction, max_range)
    }

    fn cast_bundle(&self, cone: &RayCone, dirs: &[Vec3], max_ranges: &[f64], out: &mut [Option<RayHit>]) {
        let mut candidates = Vec::new();
        self.bvh.cull(&self.prims, cone, &mut candidates);
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for ((d, &r), o) in dirs.iter().zip(max_ranges).zip(out.iter_mut()) {
            *o = Bvh::raycast_candidates(&self.prims, &candidates, &cone.origin, d, r)
                .map(|(t, object_id)| RayHit { t, object_id });
        }
    }
}

/// A static scene plus a handful of moving spheres (other vehicles).
#[derive(Clone, Copy, Debug)]
pub struct SceneWithSpheres<'a> {
    pub scene: &'a Scene,
    pub spheres: &'a [(u32, Sphere)],
}

impl SceneWithSpheres<'_> {
    fn add_spheres(&self, origin: &Vec3, direction: &Vec3, max_range: f64, mut best: Option<RayHit>) -> Option<RayHit> {
        for (id, s) in self.spheres {
            if let Some(t) = s.ray_hit(origin, direction) {
                if t > max_range {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => t < b.t || (t == b.t && *id < b.object_id),
                };
                if better {
                    best = Some(RayHit { t, object_id: *id });
                }
            }
        }
        best
    }
}

impl RayQuery for SceneWithSpheres<'_> {
    fn raycast(&self, origin: &Vec3, direction: &Vec3, max_range: f64) -> Option<RayHit> {
        let best = self.scene.raycast(origin, direction, max_range);
        self.add_spheres(origin, direction, max_range, best)
    }

    fn cast_bundle(&self, cone: &RayCone, dirs: &[Vec3], max_ranges: &[f64], out: &mut [Option<RayHit>]) {
        RayQuery::cast_bundle(self.scene, cone, dirs, max_ranges, out);
        for ((d, &r), o) in dirs.iter().zip(max_ranges).zip(out.iter_mut()) {
            *o = self.add_spheres(&cone.origin, d, r, *o);
        }
    }
}

/// Incremental scene construction with automatic id assignment.
#[derive(Clone, Debug, Default)]
pub struct SceneBuilder {
    objects: Vec<SceneObject>,
    next_id: u32,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self {
            objects: Vec::new(),
            next_id: 1,
        }
    }

    /// Adds a shape under the next free id and returns that id.
    pub fn add(&mut self, tag: ObjectTag, shape: Shape) -> u32 {
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        self.objects.push(SceneObject { id, tag, shape });
        id
    }

    pub fn add_with_id(&mut self, id: u32, tag: ObjectTag, shape: Shape) -> &mut Self {
        self.next_id = self.next_id.max(id + 1);
        self.objects.push(SceneObject { id, tag, shape });
        self
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn build(self) -> Result<Scene, GeometryError> {
        Scene::new(self.objects)
    }
}

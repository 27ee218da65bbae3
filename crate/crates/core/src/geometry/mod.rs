//! Immutable obstacle scenes with BVH-accelerated nearest-point, ray and
//! collision queries, a random clutter generator and a mesh loader.

mod aabb;
mod bundle;
mod bvh;
mod generate;
mod mesh_io;
mod primitives;
mod scene;

pub use aabb::{ray_inverse, Aabb};
pub use bundle::RayCone;
pub use bvh::LEAF_SIZE;
pub use generate::{add_enclosure, generate_cluttered_scene, ClutterSpec, WALL_THICKNESS};
pub use mesh_io::{load_mesh_scene, parse_mesh_scene, MeshParseError};
pub use primitives::{OrientedBox, Shape, Sphere, TriMesh, Triangle};
pub use scene::{
    GeometryError, ObjectTag, ProximityResult, RayHit, RayQuery, Scene, SceneBuilder, SceneObject,
    SceneWithSpheres, DYNAMIC_ID_BASE,
};

//! Ray-cast depth and segmentation rendering.

use super::camera::{CameraModel, Pose};
use super::image::{DepthImage, SegmentationImage};
use crate::geometry::{RayCone, RayQuery};

/// Pixels per side of the square tiles rays are bundled in.
const TILE: usize = 8;

/// Depth and segmentation from one pass of pixel-center rays.
///
/// A hit counts only when its z-depth is strictly below `max_range`; other
/// pixels get depth `max_range` and id 0, so the two images always agree on
/// which pixels are background. Rays are cast in square tiles that share one
/// culling pass; the result is identical to casting every ray on its own.
pub fn render<Q: RayQuery + ?Sized>(
    scene: &Q,
    body: &Pose,
    camera: &CameraModel,
) -> (DepthImage, SegmentationImage) {
    let (origin, rot) = camera.world_pose(body);
    let (w, h) = (camera.width, camera.height);
    let rays = camera.pixel_rays();
    let mut depth = DepthImage::filled(w, h, camera.max_range, camera.max_range);
    let mut seg = SegmentationImage::filled(w, h, 0);
    let mut dirs = Vec::with_capacity(TILE * TILE);
    let mut reach = Vec::with_capacity(TILE * TILE);
    let mut cos = Vec::with_capacity(TILE * TILE);
    let mut pixels = Vec::with_capacity(TILE * TILE);
    let mut hits = Vec::with_capacity(TILE * TILE);
    for r0 in (0..h).step_by(TILE) {
        for c0 in (0..w).step_by(TILE) {
            let (r1, c1) = ((r0 + TILE).min(h) - 1, (c0 + TILE).min(w) - 1);
            dirs.clear();
            reach.clear();
            cos.clear();
            pixels.clear();
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let ray = &rays[row * w + col];
                    dirs.push(rot * ray.direction);
                    reach.push(camera.max_range / ray.cos_axis);
                    cos.push(ray.cos_axis);
                    pixels.push(row * w + col);
                }
            }
            let corner = |row: usize, col: usize| rot * rays[row * w + col].direction;
            let corners = [corner(r0, c0), corner(r0, c1), corner(r1, c1), corner(r1, c0)];
            let max_reach = reach.iter().copied().fold(0.0, f64::max);
            let cone = RayCone::from_corners(origin, &corners, max_reach);
            hits.clear();
            hits.resize(dirs.len(), None);
            scene.cast_bundle(&cone, &dirs, &reach, &mut hits);
            for (k, hit) in hits.iter().enumerate() {
                if let Some(hit) = hit {
                    let z = hit.t * cos[k];
                    if z < camera.max_range {
                        depth.data[pixels[k]] = z;
                        seg.data[pixels[k]] = hit.object_id;
                    }
                }
            }
        }
    }
    (depth, seg)
}

pub fn render_depth<Q: RayQuery + ?Sized>(scene: &Q, body: &Pose, camera: &CameraModel) -> DepthImage {
    render(scene, body, camera).0
}

pub fn render_segmentation<Q: RayQuery + ?Sized>(
    scene: &Q,
    body: &Pose,
    camera: &CameraModel,
) -> SegmentationImage {
    render(scene, body, camera).1
}

use nalgebra::{Matrix3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::dynamics::QuadState;
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthConvention {
    /// Distance along the optical axis.
    #[default]
    ZDepth,
}

/// Rigid transform from the body frame to the camera frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraMount {
    /// Camera origin in body coordinates, m.
    #[serde(default = "Vec3::zeros")]
    pub translation: Vec3,
    /// Camera orientation relative to the body. Written in files as
    /// `[roll, pitch, yaw]` in radians (intrinsic z-y-x).
    #[serde(default = "UnitQuaternion::identity", with = "euler_serde")]
    pub rotation: UnitQuaternion<f64>,
}

mod euler_serde {
    use nalgebra::UnitQuaternion;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(q: &UnitQuaternion<f64>, s: S) -> Result<S::Ok, S::Error> {
        let (r, p, y) = q.euler_angles();
        [r, p, y].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<UnitQuaternion<f64>, D::Error> {
        let [r, p, y] = <[f64; 3]>::deserialize(d)?;
        Ok(UnitQuaternion::from_euler_angles(r, p, y))
    }
}

impl Default for CameraMount {
    fn default() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }
}

impl CameraMount {
    /// Looking along the body +x axis.
    pub fn forward() -> Self {
        Self::default()
    }

    /// Looking along the body -z axis (image top toward body +x).
    pub fn downward() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::from_axis_angle(&Vec3::y_axis(), std::f64::consts::FRAC_PI_2),
        }
    }
}

/// Pinhole camera. In camera coordinates the optical axis is +x, image
/// columns grow toward -y and rows toward -z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    /// rad
    pub vertical_fov: f64,
    #[serde(default)]
    pub pose_offset: CameraMount,
    /// m
    pub max_range: f64,
    #[serde(default)]
    pub depth_convention: DepthConvention,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            vertical_fov: std::f64::consts::FRAC_PI_2,
            pose_offset: CameraMount::default(),
            max_range: 10.0,
            depth_convention: DepthConvention::ZDepth,
        }
    }
}

/// World pose of a vehicle body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    /// Body-to-world rotation.
    pub rotation: Matrix3<f64>,
}

impl Pose {
    pub fn new(position: Vec3, rotation: Matrix3<f64>) -> Self {
        Self { position, rotation }
    }

    pub fn from_state(state: &QuadState) -> Self {
        Self {
            position: state.position,
            rotation: state.rotation(),
        }
    }
}

/// Unit ray through a pixel center, in camera coordinates, and the cosine
/// between that ray and the optical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelRay {
    pub direction: Vec3,
    pub cos_axis: f64,
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, reason: &str| {
            Err(ConfigError::Invalid {
                field: format!("camera.{field}"),
                reason: reason.to_string(),
            })
        };
        if self.width == 0 || self.height == 0 {
            return bad("width", "image dimensions must be >= 1");
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < std::f64::consts::PI) {
            return bad("vertical_fov", "must lie in (0, pi)");
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad("max_range", "must be positive and finite");
        }
        Ok(())
    }

    /// Focal length in pixels (square pixels).
    pub fn focal_px(&self) -> f64 {
        self.height as f64 / 2.0 / (self.vertical_fov / 2.0).tan()
    }

    /// Rays in row-major pixel order.
    pub fn pixel_rays(&self) -> Vec<PixelRay> {
        let f = self.focal_px();
        let (cx, cy) = (self.width as f64 / 2.0, self.height as f64 / 2.0);
        let mut rays = Vec::with_capacity(self.width * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                let u = col as f64 + 0.5 - cx;
                let v = row as f64 + 0.5 - cy;
                let d = Vec3::new(f, -u, -v);
                let n = d.norm();
                rays.push(PixelRay {
                    direction: d / n,
                    cos_axis: f / n,
                });
            }
        }
        rays
    }

    /// Camera origin and camera-to-world rotation for a body pose.
    pub fn world_pose(&self, body: &Pose) -> (Vec3, Matrix3<f64>) {
        let mount = &self.pose_offset;
        let origin = body.position + body.rotation * mount.translation;
        let rot = body.rotation * mount.rotation.to_rotation_matrix().into_inner();
        (origin, rot)
    }

    /// Projects a camera-frame point with positive depth to (col, row) pixel
    /// coordinates (continuous; pixel centers at +0.5).
    pub fn project(&self, p_cam: &Vec3) -> Option<(f64, f64)> {
        if p_cam.x <= 0.0 {
            return None;
        }
        let f = self.focal_px();
        let u = -p_cam.y / p_cam.x * f + self.width as f64 / 2.0;
        let v = -p_cam.z / p_cam.x * f + self.height as f64 / 2.0;
        Some((u, v))
    }
}

//! Depth and segmentation cameras, IMU, noise models and image export.

mod camera;
mod export;
mod image;
mod imu;
mod noise;
mod render;

pub use camera::{CameraModel, CameraMount, DepthConvention, PixelRay, Pose};
pub use export::{depth_to_millimeters, read_pgm16, write_depth_pgm, write_segmentation_pgm, DEPTH_SCALE};
pub use image::{DepthImage, RgbImage, SegmentationImage};
pub use imu::{imu_read, ImuReading};
pub use noise::{apply_noise, ImuNoise, NoiseError, NoiseSpec, NoiseTarget, RedwoodParams, SensorKind};
pub use render::{render, render_depth, render_segmentation};

//! Sensor noise models applied to depth, segmentation, RGB and IMU data.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::image::{DepthImage, RgbImage, SegmentationImage};
use super::imu::ImuReading;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Imu,
    Rgb,
    Depth,
    Segmentation,
}

/// Disparity-domain depth noise parameters (structured-light sensor model).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedwoodParams {
    /// Focal length times baseline: `disparity = focal_baseline / depth`, px m.
    pub focal_baseline: f64,
    /// Gaussian disparity noise, px.
    pub disparity_sigma: f64,
    /// Disparity quantization step, px; 0 disables quantization.
    pub quantization: f64,
    /// Gaussian lateral pixel jitter, px.
    pub shift_sigma: f64,
}

impl Default for RedwoodParams {
    fn default() -> Self {
        Self {
            focal_baseline: 35.13,
            disparity_sigma: 0.05,
            quantization: 0.125,
            shift_sigma: 0.5,
        }
    }
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// Additive iid Gaussian with standard deviation `sigma`.
    Normal { sigma: f64 },
    /// `value <- Poisson(value * scale) / scale`.
    Poisson { scale: f64 },
    /// Each element independently replaced with probability `p` by the
    /// range maximum (salt, with probability `salt_ratio`) or minimum.
    SaltPepper {
        p: f64,
        #[serde(default = "half")]
        salt_ratio: f64,
    },
    /// Multiplicative Gaussian: `value * (1 + N(0, sigma^2))`.
    Speckle { sigma: f64 },
    Redwood(RedwoodParams),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("{noise} noise is not defined for {sensor:?} data")]
    InvalidNoiseForSensor { noise: &'static str, sensor: SensorKind },
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
}

impl NoiseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseSpec::Normal { .. } => "normal",
            NoiseSpec::Poisson { .. } => "poisson",
            NoiseSpec::SaltPepper { .. } => "salt_pepper",
            NoiseSpec::Speckle { .. } => "speckle",
            NoiseSpec::Redwood(_) => "redwood",
        }
    }

    /// Which sensor streams each noise family applies to.
    pub fn supports(&self, sensor: SensorKind) -> bool {
        match self {
            NoiseSpec::Normal { .. } => true,
            NoiseSpec::Poisson { .. } | NoiseSpec::SaltPepper { .. } | NoiseSpec::Speckle { .. } => {
                sensor != SensorKind::Imu
            }
            NoiseSpec::Redwood(_) => sensor == SensorKind::Depth,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let nonneg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(NoiseError::InvalidParameter(format!("{what} must be finite and >= 0, got {v}")))
            }
        };
        match *self {
            NoiseSpec::Normal { sigma } | NoiseSpec::Speckle { sigma } => nonneg(sigma, "sigma"),
            NoiseSpec::Poisson { scale } => {
                if scale > 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(NoiseError::InvalidParameter(format!("poisson scale must be > 0, got {scale}")))
                }
            }
            NoiseSpec::SaltPepper { p, salt_ratio } => {
                if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&salt_ratio) {
                    return Err(NoiseError::InvalidParameter(
                        "salt_pepper p and salt_ratio must lie in [0, 1]".into(),
                    ));
                }
                Ok(())
            }
            NoiseSpec::Redwood(r) => {
                if !(r.focal_baseline > 0.0) {
                    return Err(NoiseError::InvalidParameter("focal_baseline must be > 0".into()));
                }
                nonneg(r.disparity_sigma, "disparity_sigma")?;
                nonneg(r.quantization, "quantization")?;
                nonneg(r.shift_sigma, "shift_sigma")
            }
        }
    }

    fn is_identity(&self) -> bool {
        match *self {
            NoiseSpec::Normal { sigma } | NoiseSpec::Speckle { sigma } => sigma == 0.0,
            NoiseSpec::SaltPepper { p, .. } => p == 0.0,
            NoiseSpec::Poisson { .. } => false,
            NoiseSpec::Redwood(r) => {
                r.disparity_sigma == 0.0 && r.quantization == 0.0 && r.shift_sigma == 0.0
            }
        }
    }

    /// Fails unless this noise applies to `sensor` and its parameters are valid.
    pub fn check(&self, sensor: SensorKind) -> Result<(), NoiseError> {
        if !self.supports(sensor) {
            return Err(NoiseError::InvalidNoiseForSensor {
                noise: self.name(),
                sensor,
            });
        }
        self.validate()
    }
}

/// Data a [`NoiseSpec`] can be applied to.
pub trait NoiseTarget: Sized {
    const SENSOR: SensorKind;

    fn with_noise<R: Rng + ?Sized>(&self, spec: &NoiseSpec, rng: &mut R) -> Result<Self, NoiseError>;
}

/// Return a noisy copy of `data`. Deterministic for a given rng state.
pub fn apply_noise<T: NoiseTarget, R: Rng + ?Sized>(
    data: &T,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<T, NoiseError> {
    data.with_noise(spec, rng)
}

#[inline]
fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Elementwise noise on values bounded to `[lo, hi]`.
fn perturb_values<R: Rng + ?Sized>(values: &mut [f64], spec: &NoiseSpec, lo: f64, hi: f64, rng: &mut R) {
    match *spec {
        NoiseSpec::Normal { sigma } => {
            for v in values.iter_mut() {
                *v = (*v + sigma * gauss(rng)).clamp(lo, hi);
            }
        }
        NoiseSpec::Speckle { sigma } => {
            for v in values.iter_mut() {
                *v = (*v + *v * sigma * gauss(rng)).clamp(lo, hi);
            }
        }
        NoiseSpec::Poisson { scale } => {
            for v in values.iter_mut() {
                let lambda = (*v * scale).max(0.0);
                let draw = if lambda > 0.0 {
                    Poisson::new(lambda).map(|d| d.sample(rng)).unwrap_or(lambda)
                } else {
                    0.0
                };
                *v = (draw / scale).clamp(lo, hi);
            }
        }
        NoiseSpec::SaltPepper { p, salt_ratio } => {
            for v in values.iter_mut() {
                if rng.gen::<f64>() < p {
                    *v = if rng.gen::<f64>() < salt_ratio { hi } else { lo };
                }
            }
        }
        NoiseSpec::Redwood(_) => unreachable!("redwood noise needs image structure"),
    }
}

fn redwood_depth<R: Rng + ?Sized>(image: &DepthImage, params: &RedwoodParams, rng: &mut R) -> DepthImage {
    let (w, h) = (image.width, image.height);
    let mut out = image.clone();
    let perturb_disparity = params.disparity_sigma > 0.0 || params.quantization > 0.0;
    for row in 0..h {
        for col in 0..w {
            let dx = params.shift_sigma * gauss(rng);
            let dy = params.shift_sigma * gauss(rng);
            let sx = ((col as f64 + dx).round().max(0.0) as usize).min(w - 1);
            let sy = ((row as f64 + dy).round().max(0.0) as usize).min(h - 1);
            let depth = image.data[sy * w + sx];
            let noise = gauss(rng);
            let value = if !perturb_disparity || depth <= 0.0 || depth >= image.max_range {
                depth
            } else {
                let mut disparity = params.focal_baseline / depth + params.disparity_sigma * noise;
                if params.quantization > 0.0 {
                    disparity = (disparity / params.quantization).round() * params.quantization;
                }
                if disparity > 0.0 {
                    (params.focal_baseline / disparity).min(image.max_range)
                } else {
                    image.max_range
                }
            };
            out.data[row * w + col] = value;
        }
    }
    out
}

impl NoiseTarget for DepthImage {
    const SENSOR: SensorKind = SensorKind::Depth;

    /// Values stay within `[0, max_range]`; 0 marks an invalid return.
    fn with_noise<R: Rng + ?Sized>(&self, spec: &NoiseSpec, rng: &mut R) -> Result<Self, NoiseError> {
        spec.check(Self::SENSOR)?;
        if spec.is_identity() {
            return Ok(self.clone());
        }
        if let NoiseSpec::Redwood(params) = spec {
            return Ok(redwood_depth(self, params, rng));
        }
        let mut out = self.clone();
        perturb_values(&mut out.data, spec, 0.0, self.max_range, rng);
        Ok(out)
    }
}

impl NoiseTarget for SegmentationImage {
    const SENSOR: SensorKind = SensorKind::Segmentation;

    /// Ids are perturbed as numbers, rounded and clamped to the 16-bit range.
    fn with_noise<R: Rng + ?Sized>(&self, spec: &NoiseSpec, rng: &mut R) -> Result<Self, NoiseError> {
        spec.check(Self::SENSOR)?;
        if spec.is_identity() {
            return Ok(self.clone());
        }
        let mut values: Vec<f64> = self.data.iter().map(|&v| v as f64).collect();
        perturb_values(&mut values, spec, 0.0, u16::MAX as f64, rng);
        let mut out = self.clone();
        for (dst, v) in out.data.iter_mut().zip(values) {
            *dst = v.round() as u32;
        }
        Ok(out)
    }
}

impl NoiseTarget for RgbImage {
    const SENSOR: SensorKind = SensorKind::Rgb;

    /// Noise acts on intensities normalized to `[0, 1]`.
    fn with_noise<R: Rng + ?Sized>(&self, spec: &NoiseSpec, rng: &mut R) -> Result<Self, NoiseError> {
        spec.check(Self::SENSOR)?;
        if spec.is_identity() {
            return Ok(self.clone());
        }
        let mut values: Vec<f64> = self.data.iter().map(|&v| v as f64 / 255.0).collect();
        perturb_values(&mut values, spec, 0.0, 1.0, rng);
        let mut out = self.clone();
        for (dst, v) in out.data.iter_mut().zip(values) {
            *dst = (v * 255.0).round() as u8;
        }
        Ok(out)
    }
}

impl NoiseTarget for ImuReading {
    const SENSOR: SensorKind = SensorKind::Imu;

    fn with_noise<R: Rng + ?Sized>(&self, spec: &NoiseSpec, rng: &mut R) -> Result<Self, NoiseError> {
        spec.check(Self::SENSOR)?;
        let mut out = *self;
        if spec.is_identity() {
            return Ok(out);
        }
        let mut values = [0.0; 6];
        values[..3].copy_from_slice(self.specific_force_b.as_slice());
        values[3..].copy_from_slice(self.angvel_b.as_slice());
        perturb_values(&mut values, spec, f64::NEG_INFINITY, f64::INFINITY, rng);
        out.specific_force_b.copy_from_slice(&values[..3]);
        out.angvel_b.copy_from_slice(&values[3..]);
        Ok(out)
    }
}

/// Separate accelerometer and gyroscope noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImuNoise {
    pub accel_noise: NoiseSpec,
    pub gyro_noise: NoiseSpec,
}

impl Default for ImuNoise {
    fn default() -> Self {
        crate::config::Config::default().imu
    }
}

impl ImuNoise {
    pub fn validate(&self) -> Result<(), NoiseError> {
        self.accel_noise.check(SensorKind::Imu)?;
        self.gyro_noise.check(SensorKind::Imu)
    }

    pub fn apply<R: Rng + ?Sized>(&self, reading: &ImuReading, rng: &mut R) -> Result<ImuReading, NoiseError> {
        let accel = ImuReading {
            angvel_b: reading.angvel_b,
            ..reading.with_noise(&self.accel_noise, rng)?
        };
        let gyro = reading.with_noise(&self.gyro_noise, rng)?;
        Ok(ImuReading {
            specific_force_b: accel.specific_force_b,
            angvel_b: gyro.angvel_b,
        })
    }
}

//! Row-major image buffers produced by the cameras.

/// Z-depth image in meters; pixels without a return hold `max_range`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub max_range: f64,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn filled(width: usize, height: usize, value: f64, max_range: f64) -> Self {
        Self {
            width,
            height,
            max_range,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Object-id image; 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u32>,
}

impl SegmentationImage {
    pub fn filled(width: usize, height: usize, id: u32) -> Self {
        Self {
            width,
            height,
            data: vec![id; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.width + col]
    }

    /// Mean (col, row) pixel position of `id` plus its pixel count.
    pub fn centroid(&self, id: u32) -> Option<(f64, f64, usize)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (i, &v) in self.data.iter().enumerate() {
            if v == id {
                su += (i % self.width) as f64;
                sv += (i / self.width) as f64;
                n += 1;
            }
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64, n))
    }
}

/// 8-bit RGB image, interleaved. Not rendered by the simulator; supplied by
/// callers so the RGB noise models can be used on external frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }
}

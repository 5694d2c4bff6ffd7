//! Dense row-major luminance frames.

use crate::error::{invalid_param, invalid_state, Result};

/// A single-channel image stored row-major as `f64`.
///
/// Input frames hold luminance in `[0, 1]`; intermediate response maps
/// produced by the pipeline may take any finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid_param(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(invalid_param(format!(
                "frame buffer has {} values, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Converts 8-bit luminance to `[0, 1]`.
    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
        Self::from_vec(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_same_dims(&self, other: &Frame, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(invalid_state(format!(
                "{what}: size mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two frames of identical size.
    pub fn zip_map(&self, other: &Frame, f: impl Fn(f64, f64) -> f64) -> Result<Frame> {
        self.check_same_dims(other, "zip_map")?;
        Ok(Frame {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Position and value of the largest element; ties resolve to the
    /// smallest `(y, x)`.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width, self.data[best])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies rows `y0..y1` into a new frame.
    pub fn crop_rows(&self, y0: usize, y1: usize) -> Frame {
        assert!(y0 < y1 && y1 <= self.height, "row range out of bounds");
        Frame {
            width: self.width,
            height: y1 - y0,
            data: self.data[y0 * self.width..y1 * self.width].to_vec(),
        }
    }

    /// Quantizes to 8 bits after linearly mapping `[lo, hi]` onto `[0, 255]`.
    pub fn to_u8_scaled(&self, lo: f64, hi: f64) -> Vec<u8> {
        let span = hi - lo;
        self.data
            .iter()
            .map(|&v| {
                if span <= 0.0 {
                    0
                } else {
                    (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
                }
            })
            .collect()
    }

    /// Quantizes `[0, 1]` luminance to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.to_u8_scaled(0.0, 1.0)
    }

    pub fn max_abs_diff(&self, other: &Frame) -> f64 {
        assert!(self.same_dims(other));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

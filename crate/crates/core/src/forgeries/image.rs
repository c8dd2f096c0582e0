use crate::{Error, Result};

/// Row-major grayscale image with unit-range pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyImage {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl ToyImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self::from_f64_iter(
            width,
            height,
            pixels.into_iter().map(f64::from),
        ))
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_f64_iter(width, height, std::iter::repeat_n(value, width * height))
    }

    /// Builds an image, clamping every value into `[0, 1]`.
    pub(crate) fn from_f64_iter(
        width: usize,
        height: usize,
        values: impl IntoIterator<Item = f64>,
    ) -> Self {
        let pixels: Vec<f32> = values
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0) as f32)
            .collect();
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        f64::from(self.pixels[y * self.width + x])
    }

    /// Pixel read with mirrored borders, `x[-1] = x[0]`.
    pub fn get_reflect(&self, x: isize, y: isize) -> f64 {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    pub fn same_shape(&self, other: &ToyImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    /// Binary PGM (P5), 8 bits per pixel.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|&p| (p * 255.0).round() as u8));
        out
    }
}

/// Maps an index onto `0..n` by mirroring about the half-pixel borders.
/// The mapping is periodic with period `2n`, so arbitrarily large offsets
/// stay consistent.
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Variance of the 4-neighbour Laplacian response, mirrored borders.
pub fn laplacian_variance(image: &ToyImage) -> f64 {
    let (w, h) = (image.width() as isize, image.height() as isize);
    let mut responses = Vec::with_capacity(image.len());
    for y in 0..h {
        for x in 0..w {
            let lap = image.get_reflect(x, y - 1)
                + image.get_reflect(x - 1, y)
                + image.get_reflect(x + 1, y)
                + image.get_reflect(x, y + 1)
                - 4.0 * image.get_reflect(x, y);
            responses.push(lap);
        }
    }
    let n = responses.len() as f64;
    let mean = responses.iter().sum::<f64>() / n;
    responses.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n
}

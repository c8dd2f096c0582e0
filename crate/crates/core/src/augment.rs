//! Seeded lightweight augmentations: Gaussian blur, brightness shift and a
//! small affine warp, always applied in that order.

use serde::{Deserialize, Serialize};

use crate::forgeries::{ToyImage, ToySample};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationSpec {
    pub blur_sigma_range: [f64; 2],
    pub brightness_range: [f64; 2],
    pub rotation_range_degrees: [f64; 2],
    pub translation_range_pixels: [f64; 2],
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            blur_sigma_range: [0.0, 1.5],
            brightness_range: [-0.15, 0.15],
            rotation_range_degrees: [-10.0, 10.0],
            translation_range_pixels: [-2.0, 2.0],
        }
    }
}

impl AugmentationSpec {
    pub fn identity() -> Self {
        Self {
            blur_sigma_range: [0.0, 0.0],
            brightness_range: [0.0, 0.0],
            rotation_range_degrees: [0.0, 0.0],
            translation_range_pixels: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("blur_sigma_range", self.blur_sigma_range),
            ("brightness_range", self.brightness_range),
            ("rotation_range_degrees", self.rotation_range_degrees),
            ("translation_range_pixels", self.translation_range_pixels),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::config(format!(
                    "augment.{name} [{lo}, {hi}] is not a valid range"
                )));
            }
        }
        if self.blur_sigma_range[0] < 0.0 {
            return Err(Error::config(
                "augment.blur_sigma_range must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Normalised 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

pub fn gaussian_blur(image: &ToyImage, sigma: f64) -> ToyImage {
    if sigma <= 0.0 {
        return image.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (image.width(), image.height());
    let src = image.to_f64();
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    k * src[y * w + crate::forgeries::reflect(x as isize + j as isize - r, w)]
                })
                .sum();
        }
    }
    let out = (0..h).flat_map(|y| {
        let rows = &rows;
        let kernel = &kernel;
        (0..w).map(move |x| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    k * rows[crate::forgeries::reflect(y as isize + j as isize - r, h) * w + x]
                })
                .sum::<f64>()
        })
    });
    ToyImage::from_f64_iter(w, h, out.collect::<Vec<_>>())
}

pub fn brightness_adjust(image: &ToyImage, delta: f64) -> ToyImage {
    ToyImage::from_f64_iter(
        image.width(),
        image.height(),
        image.pixels().iter().map(|&p| f64::from(p) + delta),
    )
}

/// Rotation by `rotation_degrees` about the image centre followed by a shift
/// of `(dx, dy)` pixels. Each output pixel is inverse-mapped into the input and
/// sampled bilinearly; reads outside the image are mirrored.
pub fn affine(image: &ToyImage, rotation_degrees: f64, dx: f64, dy: f64) -> ToyImage {
    if rotation_degrees == 0.0 && dx == 0.0 && dy == 0.0 {
        return image.clone();
    }
    let (w, h) = (image.width(), image.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (sin, cos) = rotation_degrees.to_radians().sin_cos();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let px = x as f64 - cx - dx;
            let py = y as f64 - cy - dy;
            let sx = cos * px + sin * py + cx;
            let sy = -sin * px + cos * py + cy;
            out.push(bilinear(image, sx, sy));
        }
    }
    ToyImage::from_f64_iter(w, h, out)
}

fn bilinear(image: &ToyImage, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let top = (1.0 - fx) * image.get_reflect(x0, y0) + fx * image.get_reflect(x0 + 1, y0);
    let bottom =
        (1.0 - fx) * image.get_reflect(x0, y0 + 1) + fx * image.get_reflect(x0 + 1, y0 + 1);
    (1.0 - fy) * top + fy * bottom
}

/// Parameters drawn for one augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub sigma: f64,
    pub delta: f64,
    pub rotation: f64,
    pub dx: f64,
    pub dy: f64,
}

impl AugmentDraw {
    pub fn sample(spec: &AugmentationSpec, seed: u64) -> Self {
        let mut rng = seed::rng(seed, &[]);
        let mut draw = |[lo, hi]: [f64; 2]| seed::uniform(&mut rng, lo, hi);
        Self {
            sigma: draw(spec.blur_sigma_range),
            delta: draw(spec.brightness_range),
            rotation: draw(spec.rotation_range_degrees),
            dx: draw(spec.translation_range_pixels),
            dy: draw(spec.translation_range_pixels),
        }
    }

    pub fn apply(&self, image: &ToyImage) -> ToyImage {
        let blurred = gaussian_blur(image, self.sigma);
        let shifted = brightness_adjust(&blurred, self.delta);
        affine(&shifted, self.rotation, self.dx, self.dy)
    }
}

pub fn augment_image(image: &ToyImage, spec: &AugmentationSpec, seed: u64) -> ToyImage {
    AugmentDraw::sample(spec, seed).apply(image)
}

/// Augments the pixels of `sample`; label and metadata are carried over.
pub fn augment_sample(sample: &ToySample, spec: &AugmentationSpec, seed: u64) -> ToySample {
    ToySample {
        image: augment_image(&sample.image, spec, seed),
        ..sample.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, px: &[f64]) -> ToyImage {
        ToyImage::new(w, h, px.iter().map(|&p| p as f32).collect()).unwrap()
    }

    fn pattern(w: usize, h: usize, salt: u64) -> ToyImage {
        let mut r = seed::rng(salt, &[]);
        let px: Vec<f64> = (0..w * h)
            .map(|_| seed::uniform(&mut r, 0.0, 1.0))
            .collect();
        img(w, h, &px)
    }

    #[test]
    fn blur_identity_and_constants() {
        let p = pattern(7, 5, 1);
        assert_eq!(gaussian_blur(&p, 0.0), p);
        let c = ToyImage::constant(6, 6, 0.42);
        let b = gaussian_blur(&c, 1.3);
        for (&a, &e) in b.pixels().iter().zip(c.pixels()) {
            assert!((a - e).abs() < 1e-6);
        }
    }

    #[test]
    fn blur_impulse_matches_kernel_centre() {
        let mut px = vec![0.0; 81];
        px[40] = 1.0;
        let out = gaussian_blur(&img(9, 9, &px), 1.0);
        // Independent 2-D kernel: taps exp(-(i^2 + j^2) / 2) over [-3, 3]^2.
        let total: f64 = (-3..=3)
            .flat_map(|i| (-3..=3).map(move |j| (-((i * i + j * j) as f64) / 2.0).exp()))
            .sum();
        let centre = 1.0 / total;
        assert!(
            (out.get(4, 4) - centre).abs() < 1e-6,
            "{} vs {centre}",
            out.get(4, 4)
        );
    }

    #[test]
    fn kernel_is_normalised() {
        for sigma in [0.1, 0.5, 1.0, 1.5, 2.7] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0f64 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn brightness_examples() {
        let p = pattern(4, 4, 2);
        assert_eq!(brightness_adjust(&p, 0.0), p);
        let b = brightness_adjust(&img(2, 1, &[0.9, 0.4]), 0.3);
        assert_eq!(b.get(0, 0), 1.0);
        let b = brightness_adjust(&img(1, 1, &[0.4]), -0.1);
        assert!((b.get(0, 0) - 0.3).abs() < 1e-6);
    }

    #[test]
    fn affine_identity_and_shift() {
        let p = pattern(6, 6, 3);
        assert_eq!(affine(&p, 0.0, 0.0, 0.0), p);
        let s = affine(&p, 0.0, 1.0, 0.0);
        for y in 0..6 {
            for x in 1..6 {
                assert!((s.get(x, y) - p.get(x - 1, y)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn affine_quarter_turn() {
        let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        // Rotated by hand, clockwise on screen with y pointing down.
        let rotated = [0.7, 0.4, 0.1, 0.8, 0.5, 0.2, 0.9, 0.6, 0.3];
        let out = affine(&img(3, 3, &grid), 90.0, 0.0, 0.0);
        for (i, &e) in rotated.iter().enumerate() {
            assert!((f64::from(out.pixels()[i]) - e).abs() < 1e-6, "pixel {i}");
        }
    }

    #[test]
    fn degenerate_spec_is_identity() {
        let p = pattern(8, 8, 4);
        assert_eq!(augment_image(&p, &AugmentationSpec::identity(), 99), p);
    }

    #[test]
    fn default_spec_changes_pixels() {
        let p = pattern(16, 16, 5);
        let a = augment_image(&p, &AugmentationSpec::default(), 12345);
        assert_eq!(a, augment_image(&p, &AugmentationSpec::default(), 12345));
        assert!(a.pixels().iter().zip(p.pixels()).any(|(x, y)| x != y));
        assert_ne!(
            AugmentDraw::sample(&AugmentationSpec::default(), 1),
            AugmentDraw::sample(&AugmentationSpec::default(), 2)
        );
    }

    #[test]
    fn spec_validation() {
        assert!(AugmentationSpec::default().validate().is_ok());
        let bad = AugmentationSpec {
            blur_sigma_range: [1.0, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentationSpec {
            blur_sigma_range: [-1.0, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn blur_preserves_mean(w in 1usize..12, h in 1usize..12, sigma in 0.1f64..3.0, salt in any::<u64>()) {
            let p = pattern(w, h, salt);
            let b = gaussian_blur(&p, sigma);
            let mean = |i: &ToyImage| i.to_f64().iter().sum::<f64>() / i.len() as f64;
            prop_assert!((mean(&p) - mean(&b)).abs() < 1e-6);
        }

        #[test]
        fn augmentations_stay_in_unit_range(salt in any::<u64>(), seed in any::<u64>()) {
            let p = pattern(10, 10, salt);
            let spec = AugmentationSpec {
                brightness_range: [-0.8, 0.8],
                rotation_range_degrees: [-180.0, 180.0],
                translation_range_pixels: [-20.0, 20.0],
                ..Default::default()
            };
            let a = augment_image(&p, &spec, seed);
            prop_assert!(a.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}

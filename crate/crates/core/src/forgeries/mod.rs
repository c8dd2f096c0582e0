//! Procedural real/fake benchmark.
//!
//! Each pair starts from a smooth random "pristine" image. The fake copy adds
//! a raised-cosine elliptical bump near the centre. Both copies are then
//! independently blurred and brightness-shifted, so post-processing strength
//! is a nuisance variable shared by both classes.

mod image;
mod io;
mod metrics;

pub use image::{laplacian_variance, reflect, ToyImage};
pub use io::{read_dataset, write_dataset};
pub use metrics::{
    dfh_extremes_report, ssim, tampering_ratio, ExtremeStats, ExtremesReport, DEFAULT_TAR_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::augment::{brightness_adjust, gaussian_blur};
use crate::seed::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::Real => 0.0,
            Label::Fake => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySample {
    pub id: usize,
    pub image: ToyImage,
    /// The image before post-processing.
    pub pristine: ToyImage,
    pub label: Label,
    pub artifact_amplitude: f64,
    pub blur_sigma: f64,
    pub brightness_delta: f64,
    pub paired_real_id: Option<usize>,
    pub artifact_mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub image_size: usize,
    pub amplitude_range: [f64; 2],
    pub blur_range: [f64; 2],
    pub brightness_range: [f64; 2],
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 1000,
            image_size: 16,
            amplitude_range: [0.05, 0.3],
            blur_range: [0.0, 1.5],
            brightness_range: [-0.1, 0.1],
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (key, n) in [("n_train", self.n_train), ("n_test", self.n_test)] {
            if n == 0 || n % 2 != 0 {
                problems.push(format!(
                    "dataset.{key} must be a positive even number, got {n}"
                ));
            }
        }
        if self.image_size < 4 {
            problems.push(format!(
                "dataset.image_size must be >= 4, got {}",
                self.image_size
            ));
        }
        for (key, [lo, hi], min) in [
            ("amplitude_range", self.amplitude_range, Some(0.0)),
            ("blur_range", self.blur_range, Some(0.0)),
            ("brightness_range", self.brightness_range, None),
        ] {
            let finite = lo.is_finite() && hi.is_finite();
            if !finite || lo > hi || min.is_some_and(|m| lo < m) {
                problems.push(format!("dataset.{key} [{lo}, {hi}] is not a valid range"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<ToySample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Pristine source of the real image a fake was derived from.
    pub fn paired_source(&self, fake: &ToySample) -> Option<&ToyImage> {
        fake.paired_real_id
            .and_then(|id| self.samples.get(id))
            .map(|real| &real.pristine)
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

const BLOBS: usize = 5;
const NOISE_GRID: usize = 4;

fn base_image(size: usize, rng: &mut Rng) -> Vec<f64> {
    let s = size as f64;
    let blobs: Vec<[f64; 4]> = (0..BLOBS)
        .map(|_| {
            [
                seed::uniform(rng, 0.0, s),
                seed::uniform(rng, 0.0, s),
                seed::uniform(rng, 0.3, 0.6) * s,
                seed::uniform(rng, -1.0, 1.0),
            ]
        })
        .collect();
    let grid: Vec<f64> = (0..NOISE_GRID * NOISE_GRID)
        .map(|_| seed::uniform(rng, -0.2, 0.2))
        .collect();
    let scale = (NOISE_GRID - 1) as f64 / (s - 1.0);
    let mut px = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (xf, yf) = (x as f64, y as f64);
            let blob: f64 = blobs
                .iter()
                .map(|[bx, by, sd, wgt]| {
                    wgt * (-((xf - bx).powi(2) + (yf - by).powi(2)) / (2.0 * sd * sd)).exp()
                })
                .sum();
            let (gx, gy) = (xf * scale, yf * scale);
            let (ix, iy) = (
                (gx as usize).min(NOISE_GRID - 2),
                (gy as usize).min(NOISE_GRID - 2),
            );
            let (fx, fy) = (gx - ix as f64, gy - iy as f64);
            let g = |i: usize, j: usize| grid[j * NOISE_GRID + i];
            let noise = (1.0 - fy) * ((1.0 - fx) * g(ix, iy) + fx * g(ix + 1, iy))
                + fy * ((1.0 - fx) * g(ix, iy + 1) + fx * g(ix + 1, iy + 1));
            px.push((blob + noise).clamp(-2.0, 2.0));
        }
    }
    let (lo, hi) = px
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi - lo < 1e-12 {
        return vec![0.5; px.len()];
    }
    px.into_iter()
        .map(|v| 0.2 + 0.6 * (v - lo) / (hi - lo))
        .collect()
}

/// Raised-cosine ellipse: 1 at the centre, 0 from the rim outwards.
fn bump(size: usize, rng: &mut Rng) -> Vec<f64> {
    let s = size as f64;
    let c = (s - 1.0) / 2.0;
    let cx = c + seed::uniform(rng, -0.125, 0.125) * s;
    let cy = c + seed::uniform(rng, -0.125, 0.125) * s;
    let rx = seed::uniform(rng, 0.15, 0.3) * s;
    let ry = seed::uniform(rng, 0.15, 0.3) * s;
    (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64, (i / size) as f64);
            let r = (((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2)).sqrt();
            if r < 1.0 {
                0.5 * (1.0 + (std::f64::consts::PI * r).cos())
            } else {
                0.0
            }
        })
        .collect()
}

fn post_process(pristine: &ToyImage, cfg: &DatasetConfig, rng: &mut Rng) -> (ToyImage, f64, f64) {
    let sigma = seed::uniform(rng, cfg.blur_range[0], cfg.blur_range[1]);
    let delta = seed::uniform(rng, cfg.brightness_range[0], cfg.brightness_range[1]);
    let out = brightness_adjust(&gaussian_blur(pristine, sigma), delta);
    (out, sigma, delta)
}

fn generate_split(cfg: &DatasetConfig, n: usize, stream: u64) -> Dataset {
    let size = cfg.image_size;
    let mut samples = Vec::with_capacity(n);
    for pair in 0..n / 2 {
        let mut rng = seed::rng(cfg.seed, &[stream, pair as u64]);
        let base = base_image(size, &mut rng);
        let bump = bump(size, &mut rng);
        let amplitude = seed::uniform(&mut rng, cfg.amplitude_range[0], cfg.amplitude_range[1]);

        let real_pristine = ToyImage::from_f64_iter(size, size, base.iter().copied());
        let fake_pristine = ToyImage::from_f64_iter(
            size,
            size,
            base.iter().zip(&bump).map(|(b, m)| b + amplitude * m),
        );
        let mask: Vec<bool> = bump.iter().map(|&m| m > 0.0).collect();

        let (real_image, real_sigma, real_delta) = post_process(&real_pristine, cfg, &mut rng);
        let (fake_image, fake_sigma, fake_delta) = post_process(&fake_pristine, cfg, &mut rng);

        let real_id = 2 * pair;
        samples.push(ToySample {
            id: real_id,
            image: real_image,
            pristine: real_pristine,
            label: Label::Real,
            artifact_amplitude: 0.0,
            blur_sigma: real_sigma,
            brightness_delta: real_delta,
            paired_real_id: None,
            artifact_mask: None,
        });
        samples.push(ToySample {
            id: real_id + 1,
            image: fake_image,
            pristine: fake_pristine,
            label: Label::Fake,
            artifact_amplitude: amplitude,
            blur_sigma: fake_sigma,
            brightness_delta: fake_delta,
            paired_real_id: Some(real_id),
            artifact_mask: Some(mask),
        });
    }
    Dataset {
        width: size,
        height: size,
        samples,
    }
}

/// Generates the train and test splits. Every pair draws from its own
/// stream keyed by `(seed, split, pair)`, so each split is order-independent.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    Ok((
        generate_split(cfg, cfg.n_train, seed::STREAM_DATA_TRAIN),
        generate_split(cfg, cfg.n_test, seed::STREAM_DATA_TEST),
    ))
}

/// Sharpness-based prior hardness: blurrier images score closer to 1.
pub fn quality_prior(image: &ToyImage, normalizer: f64) -> Result<f64> {
    if !(normalizer > 0.0) {
        return Err(Error::config(format!(
            "quality normalizer {normalizer} must be positive"
        )));
    }
    Ok((1.0 - laplacian_variance(image) / normalizer).clamp(0.0, 1.0))
}

/// Largest Laplacian variance over `dataset`, the normaliser for
/// [`quality_prior`].
pub fn sharpness_normalizer(dataset: &Dataset) -> f64 {
    dataset
        .samples
        .iter()
        .map(|s| laplacian_variance(&s.image))
        .fold(0.0, f64::max)
}

pub fn quality_priors(dataset: &Dataset, normalizer: f64) -> Result<Vec<f64>> {
    dataset
        .samples
        .iter()
        .map(|s| quality_prior(&s.image, normalizer))
        .collect()
}

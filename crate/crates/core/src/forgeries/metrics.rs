use serde::{Deserialize, Serialize};

use super::{Dataset, Label, ToyImage};
use crate::{Error, Result};

/// One 8-bit quantisation step on unit-range pixels.
pub const DEFAULT_TAR_THRESHOLD: f64 = 1.0 / 255.0;

/// Fraction of pixels whose absolute difference strictly exceeds `threshold`.
pub fn tampering_ratio(fake: &ToyImage, real: &ToyImage, threshold: f64) -> Result<f64> {
    fake.same_shape(real)?;
    let changed = fake
        .pixels()
        .iter()
        .zip(real.pixels())
        .filter(|(&a, &b)| (f64::from(a) - f64::from(b)).abs() > threshold)
        .count();
    Ok(changed as f64 / fake.len() as f64)
}

const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Single-window SSIM over the whole image, dynamic range 1, unbiased
/// (co)variances.
pub fn ssim(a: &ToyImage, b: &ToyImage) -> Result<f64> {
    a.same_shape(b)?;
    let (xa, xb) = (a.to_f64(), b.to_f64());
    let n = xa.len() as f64;
    let mu_a = xa.iter().sum::<f64>() / n;
    let mu_b = xb.iter().sum::<f64>() / n;
    let dof = (n - 1.0).max(1.0);
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (p, q) in xa.iter().zip(&xb) {
        let (da, db) = (p - mu_a, q - mu_b);
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    let (var_a, var_b, cov) = (var_a / dof, var_b / dof, cov / dof);
    Ok(((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
        / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeStats {
    pub ids: Vec<usize>,
    pub mean_tar: f64,
    pub mean_ssim: f64,
    pub mean_amplitude: f64,
    pub mean_blur_sigma: f64,
    pub mean_dfh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremesReport {
    pub fraction: f64,
    pub n_fakes: usize,
    pub top: ExtremeStats,
    pub bottom: ExtremeStats,
}

/// Tampering statistics of the highest- and lowest-DFH fakes.
///
/// Each fake is compared before post-processing against the pristine source
/// of its paired real, so the numbers describe the manipulation alone.
pub fn dfh_extremes_report(
    dataset: &Dataset,
    dfh_scores: &[f64],
    fraction: f64,
) -> Result<ExtremesReport> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::config(format!(
            "extremes fraction {fraction} not in (0, 0.5]"
        )));
    }
    if dfh_scores.len() != dataset.len() {
        return Err(Error::ShapeMismatch {
            expected: dataset.len(),
            actual: dfh_scores.len(),
        });
    }
    let mut fakes: Vec<usize> = dataset
        .samples
        .iter()
        .filter(|s| s.label == Label::Fake)
        .map(|s| s.id)
        .collect();
    if fakes.is_empty() {
        return Err(Error::config(
            "extremes report needs at least one fake sample",
        ));
    }
    fakes.sort_by(|&a, &b| dfh_scores[b].total_cmp(&dfh_scores[a]).then(a.cmp(&b)));
    let m = ((fakes.len() as f64 * fraction + 1e-9).floor() as usize).max(1);
    let stats = |ids: &[usize]| -> Result<ExtremeStats> {
        let (mut tar, mut sim, mut amp, mut blur, mut dfh) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &id in ids {
            let fake = &dataset.samples[id];
            let source = dataset.paired_source(fake).ok_or_else(|| Error::Format {
                path: "<dataset>".into(),
                reason: format!("fake {id} has no paired real"),
            })?;
            tar += tampering_ratio(&fake.pristine, source, DEFAULT_TAR_THRESHOLD)?;
            sim += ssim(&fake.pristine, source)?;
            amp += fake.artifact_amplitude;
            blur += fake.blur_sigma;
            dfh += dfh_scores[id];
        }
        let n = ids.len() as f64;
        Ok(ExtremeStats {
            ids: ids.to_vec(),
            mean_tar: tar / n,
            mean_ssim: sim / n,
            mean_amplitude: amp / n,
            mean_blur_sigma: blur / n,
            mean_dfh: dfh / n,
        })
    };
    Ok(ExtremesReport {
        fraction,
        n_fakes: fakes.len(),
        top: stats(&fakes[..m])?,
        bottom: stats(&fakes[fakes.len() - m..])?,
    })
}

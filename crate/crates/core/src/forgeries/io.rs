//! On-disk dataset layout: `<name>.json` manifest, `<name>.bin` with the
//! post-processed pixels and `<name>.pristine.bin` with the pre-processing
//! pixels. Both blobs are little-endian `f32`, row-major, in sample-id order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Label, ToyImage, ToySample};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    n: usize,
    width: usize,
    height: usize,
    samples: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    id: usize,
    label: Label,
    amplitude: f64,
    sigma: f64,
    delta: f64,
    paired_real_id: Option<usize>,
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.json")),
        dir.join(format!("{name}.bin")),
        dir.join(format!("{name}.pristine.bin")),
    )
}

fn blob<'a>(images: impl Iterator<Item = &'a ToyImage>) -> Vec<u8> {
    images
        .flat_map(|img| img.pixels().iter().flat_map(|p| p.to_le_bytes()))
        .collect()
}

pub fn write_dataset(dir: &Path, name: &str, dataset: &Dataset) -> Result<()> {
    let (manifest_path, blob_path, pristine_path) = paths(dir, name);
    let manifest = Manifest {
        n: dataset.len(),
        width: dataset.width,
        height: dataset.height,
        samples: dataset
            .samples
            .iter()
            .map(|s| ManifestEntry {
                id: s.id,
                label: s.label,
                amplitude: s.artifact_amplitude,
                sigma: s.blur_sigma,
                delta: s.brightness_delta,
                paired_real_id: s.paired_real_id,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    let pixels = blob(dataset.samples.iter().map(|s| &s.image));
    fs::write(&blob_path, pixels).map_err(|e| Error::io(&blob_path, e))?;
    let pristine = blob(dataset.samples.iter().map(|s| &s.pristine));
    fs::write(&pristine_path, pristine).map_err(|e| Error::io(&pristine_path, e))?;
    Ok(())
}

fn read_blob(path: &Path, n: usize, pixels_per_image: usize) -> Result<Vec<Vec<f32>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = n * pixels_per_image * 4;
    if bytes.len() != expected {
        return Err(Error::Format {
            path: path.to_owned(),
            reason: format!("blob is {} bytes, expected {expected}", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(pixels_per_image * 4)
        .map(|img| {
            img.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect()
        })
        .collect())
}

pub fn read_dataset(dir: &Path, name: &str) -> Result<Dataset> {
    let (manifest_path, blob_path, pristine_path) = paths(dir, name);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let bad = |reason: String| Error::Format {
        path: manifest_path.clone(),
        reason,
    };
    if manifest.samples.len() != manifest.n {
        return Err(bad(format!(
            "n = {} but {} samples listed",
            manifest.n,
            manifest.samples.len()
        )));
    }
    let (w, h) = (manifest.width, manifest.height);
    let images = read_blob(&blob_path, manifest.n, w * h)?;
    let pristine = read_blob(&pristine_path, manifest.n, w * h)?;

    let mut samples = Vec::with_capacity(manifest.n);
    for ((entry, px), pr) in manifest.samples.into_iter().zip(images).zip(pristine) {
        if entry.id != samples.len() {
            return Err(bad(format!(
                "sample ids must be contiguous, found {}",
                entry.id
            )));
        }
        if (entry.label == Label::Fake) != entry.paired_real_id.is_some() {
            return Err(bad(format!(
                "sample {} pairing does not match its label",
                entry.id
            )));
        }
        samples.push(ToySample {
            id: entry.id,
            image: ToyImage::new(w, h, px)?,
            pristine: ToyImage::new(w, h, pr)?,
            label: entry.label,
            artifact_amplitude: entry.amplitude,
            blur_sigma: entry.sigma,
            brightness_delta: entry.delta,
            paired_real_id: entry.paired_real_id,
            artifact_mask: None,
        });
    }
    // The mask is wherever the fake's pristine image departs from its source.
    for i in 0..samples.len() {
        if let Some(real_id) = samples[i].paired_real_id {
            let source = samples
                .get(real_id)
                .filter(|s| s.label == Label::Real)
                .ok_or_else(|| bad(format!("sample {i} pairs with invalid id {real_id}")))?;
            let mask = samples[i]
                .pristine
                .pixels()
                .iter()
                .zip(source.pristine.pixels())
                .map(|(a, b)| a != b)
                .collect();
            samples[i].artifact_mask = Some(mask);
        }
    }
    Ok(Dataset {
        width: w,
        height: h,
        samples,
    })
}

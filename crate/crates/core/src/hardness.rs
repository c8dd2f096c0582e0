//! Per-sample hardness scores.
//!
//! A sample's instantaneous hardness is its current loss rescaled by the ratio
//! of the peak learning rate to the current one. Dynamic instance hardness
//! (DIH) is an exponential moving average of that quantity, updated only in
//! epochs where the sample is part of the hard pool. The forensic hardness
//! (DFH) adds a static quality prior weighted by `alpha_f`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Loss rescaled by `eta_max / eta_t`.
///
/// Late in a decaying schedule the same loss counts for more, so samples that
/// are still being fit at a small learning rate stay ranked as hard.
pub fn instantaneous_hardness(loss: f64, eta_t: f64, eta_max: f64) -> Result<f64> {
    if !(eta_t > 0.0) || !(eta_max > 0.0) || eta_t > eta_max {
        return Err(Error::InvalidSchedule(format!(
            "learning rate {eta_t} outside (0, {eta_max}]"
        )));
    }
    Ok(loss * (eta_max / eta_t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessState {
    pub gamma: f64,
    pub alpha_f: f64,
    dih: Vec<f64>,
    prior: Vec<f64>,
    #[serde(skip)]
    update_count: Vec<u32>,
}

impl HardnessState {
    /// Cold start: every sample's DIH is zero.
    pub fn new(prior: Vec<f64>, gamma: f64, alpha_f: f64) -> Result<Self> {
        Self::with_dih(vec![0.0; prior.len()], prior, gamma, alpha_f)
    }

    pub fn with_dih(dih: Vec<f64>, prior: Vec<f64>, gamma: f64, alpha_f: f64) -> Result<Self> {
        let state = Self {
            gamma,
            alpha_f,
            update_count: vec![0; dih.len()],
            dih,
            prior,
        };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if !(self.alpha_f >= 0.0) || !self.alpha_f.is_finite() {
            return Err(Error::config(format!(
                "alpha_f {} must be >= 0",
                self.alpha_f
            )));
        }
        if self.dih.len() != self.prior.len() {
            return Err(Error::ShapeMismatch {
                expected: self.dih.len(),
                actual: self.prior.len(),
            });
        }
        if let Some(q) = self.prior.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::config(format!("quality prior {q} not in [0, 1]")));
        }
        if let Some(d) = self.dih.iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::config(format!("negative dynamic hardness {d}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dih.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dih.is_empty()
    }

    pub fn dih(&self) -> &[f64] {
        &self.dih
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn update_count(&self) -> &[u32] {
        &self.update_count
    }

    fn check(&self, sample_id: usize) -> Result<()> {
        if sample_id >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: sample_id,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// One step of the DIH recursion. Samples outside the hard pool keep
    /// their previous value.
    pub fn update_dih(&mut self, sample_id: usize, s_t: f64, in_hard_pool: bool) -> Result<()> {
        self.check(sample_id)?;
        if in_hard_pool {
            let prev = self.dih[sample_id];
            self.dih[sample_id] = self.gamma * s_t + (1.0 - self.gamma) * prev;
            self.update_count[sample_id] += 1;
        }
        Ok(())
    }

    pub fn dfh(&self, sample_id: usize) -> Result<f64> {
        self.check(sample_id)?;
        Ok(self.dih[sample_id] + self.alpha_f * self.prior[sample_id])
    }

    pub fn dfh_all(&self) -> Vec<f64> {
        self.dih
            .iter()
            .zip(&self.prior)
            .map(|(d, q)| d + self.alpha_f * q)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Restores a checkpointed state. Update counters restart at zero.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut state: Self = serde_json::from_str(s)?;
        state.update_count = vec![0; state.dih.len()];
        state.validate()?;
        Ok(state)
    }
}

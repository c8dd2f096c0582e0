//! Pacing function: which samples are trained on in each epoch.
//!
//! During the first `milestones[0]` epochs the whole training set is used.
//! Afterwards the hard pool (top-`k_n` by DFH) is shrunk by `alpha_k` at each
//! later milestone, and a fixed-size easy pool (bottom-`E` by DFH) is added
//! back as augmented copies.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PacingSchedule {
    milestones: Vec<usize>,
    alpha_k: f64,
    easy_pool_size: usize,
    n_samples: usize,
    total_epochs: usize,
}

impl PacingSchedule {
    pub fn new(
        milestones: Vec<usize>,
        alpha_k: f64,
        easy_pool_size: usize,
        n_samples: usize,
        total_epochs: usize,
    ) -> Result<Self> {
        if milestones.is_empty() {
            return Err(Error::config("pacing milestones must not be empty"));
        }
        if milestones[0] == 0 || milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!(
                "milestones {milestones:?} must be positive and strictly increasing"
            )));
        }
        if total_epochs == 0 {
            return Err(Error::config("total_epochs must be positive"));
        }
        if *milestones.last().unwrap() > total_epochs {
            return Err(Error::config(format!(
                "last milestone {} exceeds total_epochs {total_epochs}",
                milestones.last().unwrap()
            )));
        }
        if !(alpha_k > 0.0 && alpha_k <= 1.0) {
            return Err(Error::config(format!("alpha_k {alpha_k} not in (0, 1]")));
        }
        if n_samples == 0 {
            return Err(Error::config("pacing needs at least one sample"));
        }
        Ok(Self {
            milestones,
            alpha_k,
            easy_pool_size,
            n_samples,
            total_epochs,
        })
    }

    pub fn milestones(&self) -> &[usize] {
        &self.milestones
    }

    pub fn warmup_epochs(&self) -> usize {
        self.milestones[0]
    }

    pub fn alpha_k(&self) -> f64 {
        self.alpha_k
    }

    pub fn easy_pool_size(&self) -> usize {
        self.easy_pool_size
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    pub fn is_warmup(&self, t: usize) -> bool {
        t <= self.warmup_epochs()
    }

    /// Hard-pool size `k_n` in epoch `t` (1-based).
    pub fn pool_size_at_epoch(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.total_epochs {
            return Err(Error::config(format!(
                "epoch {t} outside 1..={}",
                self.total_epochs
            )));
        }
        let mut k = self.n_samples;
        for _ in self.milestones[1..].iter().filter(|&&m| m <= t) {
            // Tolerance keeps products like 100 * 0.29 from flooring one short.
            k = ((k as f64 * self.alpha_k + 1e-9).floor() as usize).max(1);
        }
        Ok(k)
    }
}

fn by_score_desc(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

fn by_score_asc(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b))
}

fn select(
    scores: &[f64],
    k: usize,
    cmp: impl Fn(&usize, &usize) -> Ordering,
) -> Result<Vec<usize>> {
    let n = scores.len();
    if k > n {
        return Err(Error::config(format!("cannot select {k} of {n} samples")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k < n {
        idx.select_nth_unstable_by(k - 1, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Indices of the `k` largest scores, ties to the smaller index, returned in
/// ascending index order.
pub fn select_hard_pool(dfh_scores: &[f64], k: usize) -> Result<Vec<usize>> {
    select(dfh_scores, k, by_score_desc(dfh_scores))
}

/// Indices of the `e` smallest scores, ties to the smaller index, returned in
/// ascending index order.
pub fn select_easy_pool(dfh_scores: &[f64], e: usize) -> Result<Vec<usize>> {
    select(dfh_scores, e, by_score_asc(dfh_scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PoolEntry {
    Original(usize),
    Augmented { sample_id: usize, seed: u64 },
}

impl PoolEntry {
    pub fn sample_id(&self) -> usize {
        match *self {
            PoolEntry::Original(id) => id,
            PoolEntry::Augmented { sample_id, .. } => sample_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochPool {
    pub epoch: usize,
    pub hard_ids: Vec<usize>,
    pub easy_ids: Vec<usize>,
    pub entries: Vec<PoolEntry>,
}

impl EpochPool {
    /// Every sample once, unaugmented, in a shuffled order keyed by
    /// `(rng_seed, t)`. Vanilla training and warm-up epochs share this path.
    pub fn full(n: usize, t: usize, rng_seed: u64) -> Self {
        Self::from_ids((0..n).collect(), t, rng_seed)
    }

    /// Trains on `ids` only, as originals.
    pub fn from_ids(ids: Vec<usize>, t: usize, rng_seed: u64) -> Self {
        let entries = ids.iter().copied().map(PoolEntry::Original).collect();
        Self::assemble(t, ids, Vec::new(), entries, rng_seed)
    }

    fn assemble(
        epoch: usize,
        hard_ids: Vec<usize>,
        easy_ids: Vec<usize>,
        mut entries: Vec<PoolEntry>,
        rng_seed: u64,
    ) -> Self {
        let mut rng = seed::rng(rng_seed, &[seed::STREAM_SHUFFLE, epoch as u64]);
        entries.shuffle(&mut rng);
        Self {
            epoch,
            hard_ids,
            easy_ids,
            entries,
        }
    }

    /// Samples present both as an original and as an augmented copy.
    pub fn overlap(&self) -> usize {
        let mut hard = self.hard_ids.iter().peekable();
        let mut count = 0;
        for &e in &self.easy_ids {
            while hard.next_if(|&&h| h < e).is_some() {}
            if hard.peek() == Some(&&e) {
                count += 1;
            }
        }
        count
    }

    pub fn in_hard_pool(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.hard_ids {
            mask[i] = true;
        }
        mask
    }
}

pub fn build_epoch_pool(
    schedule: &PacingSchedule,
    dfh_scores: &[f64],
    t: usize,
    rng_seed: u64,
) -> Result<EpochPool> {
    let n = schedule.n_samples();
    if dfh_scores.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            actual: dfh_scores.len(),
        });
    }
    let k = schedule.pool_size_at_epoch(t)?;
    if schedule.is_warmup(t) {
        return Ok(EpochPool::full(n, t, rng_seed));
    }
    let hard_ids = select_hard_pool(dfh_scores, k)?;
    let easy_ids = select_easy_pool(dfh_scores, schedule.easy_pool_size().min(n))?;
    let entries = hard_ids
        .iter()
        .map(|&i| PoolEntry::Original(i))
        .chain(easy_ids.iter().map(|&i| PoolEntry::Augmented {
            sample_id: i,
            seed: seed::derive(rng_seed, &[seed::STREAM_AUGMENT, t as u64, i as u64]),
        }))
        .collect();
    Ok(EpochPool::assemble(
        t, hard_ids, easy_ids, entries, rng_seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BabyStepParams {
    pub start_fraction: f64,
    pub growth_factor: f64,
    pub step_length: usize,
}

impl Default for BabyStepParams {
    fn default() -> Self {
        Self {
            start_fraction: 0.2,
            growth_factor: 1.5,
            step_length: 2,
        }
    }
}

impl BabyStepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_fraction > 0.0 && self.start_fraction <= 1.0) {
            return Err(Error::config(format!(
                "babystep start_fraction {} not in (0, 1]",
                self.start_fraction
            )));
        }
        if !(self.growth_factor >= 1.0) || !self.growth_factor.is_finite() {
            return Err(Error::config(format!(
                "babystep growth_factor {} must be >= 1",
                self.growth_factor
            )));
        }
        if self.step_length == 0 {
            return Err(Error::config("babystep step_length must be >= 1"));
        }
        Ok(())
    }

    pub fn pool_size(&self, n: usize, t: usize) -> usize {
        let steps = (t.saturating_sub(1) / self.step_length) as i32;
        let m = n as f64 * self.start_fraction * self.growth_factor.powi(steps);
        if m >= n as f64 {
            n
        } else {
            ((m - 1e-9).ceil().max(0.0) as usize).min(n)
        }
    }
}

/// BabyStep baseline: the easiest `m(t)` samples by a fixed hardness.
pub fn babystep_pool(
    static_hardness: &[f64],
    t: usize,
    params: &BabyStepParams,
) -> Result<Vec<usize>> {
    params.validate()?;
    let m = params.pool_size(static_hardness.len(), t);
    select_easy_pool(static_hardness, m)
}

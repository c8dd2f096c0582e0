//! Training runs in the four modes, plus multi-run comparisons.
//!
//! Per epoch: learning rate, epoch pool, shuffled mini-batches with per-entry
//! losses recorded before each SGD step, DIH updates for the hard pool,
//! test-set evaluation.

mod artifacts;
mod config;
mod evaluate;

pub use artifacts::{
    read_comparison, read_metrics, write_comparison, write_run, COMPARISON_HEADER, METRICS_HEADER,
};
pub use config::{
    HardnessConfig, LrConfig, Mode, RunConfig, ScheduleConfig, TraceConfig, DEFAULT_ALPHA_F,
};
pub use evaluate::{accuracy, evaluate, roc_auc, Evaluation, QualityTerciles};

use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::augment_image;
use crate::forgeries::{
    dfh_extremes_report, generate_dataset, quality_priors, read_dataset, sharpness_normalizer,
    Dataset, ExtremesReport, ToyImage,
};
use crate::hardness::{instantaneous_hardness, HardnessState};
use crate::model::{ModelParams, Sgd};
use crate::pacing::{babystep_pool, build_epoch_pool, EpochPool, PoolEntry};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub eta: f64,
    pub pool_size: usize,
    pub train_loss_mean: f64,
    pub test_accuracy: f64,
    pub test_auc: f64,
    pub acc_by_quality_tercile: [f64; 3],
    pub mean_dfh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceGroup {
    Top,
    Median,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfhTrace {
    pub group: TraceGroup,
    pub start_epoch: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsLog {
    pub rows: Vec<EpochMetrics>,
    pub dfh_traces: BTreeMap<usize, DfhTrace>,
    pub extremes: Option<ExtremesReport>,
}

impl MetricsLog {
    pub fn final_row(&self) -> Option<&EpochMetrics> {
        self.rows.last()
    }

    pub fn traces_in(&self, group: TraceGroup) -> impl Iterator<Item = (&usize, &DfhTrace)> {
        self.dfh_traces
            .iter()
            .filter(move |(_, t)| t.group == group)
    }
}

/// One line of `pool_log.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub epoch: usize,
    pub k_n: usize,
    pub easy_size: usize,
    pub overlap: usize,
    pub min_selected_dfh: f64,
    pub max_selected_dfh: f64,
}

impl PoolSummary {
    fn new(pool: &EpochPool, scores: &[f64]) -> Self {
        let (lo, hi) = pool
            .hard_ids
            .iter()
            .map(|&i| scores[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            });
        Self {
            epoch: pool.epoch,
            k_n: pool.hard_ids.len(),
            easy_size: pool.easy_ids.len(),
            overlap: pool.overlap(),
            min_selected_dfh: if lo.is_finite() { lo } else { 0.0 },
            max_selected_dfh: if hi.is_finite() { hi } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub log: MetricsLog,
    pub pool_log: Vec<PoolSummary>,
    pub hardness: HardnessState,
    pub params: ModelParams,
}

/// Hooks into a run for instrumentation.
pub trait Observer {
    fn on_batch(&mut self, _epoch: usize, _entries: &[PoolEntry], _losses: &[f64]) {}
    fn on_epoch_end(&mut self, _pool: &EpochPool, _hardness: &HardnessState) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

/// Train and test splits for `config`, loaded from `data_dir` when set.
pub fn load_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    match &config.data_dir {
        Some(dir) => {
            let train = read_dataset(dir, "train")?;
            let test = read_dataset(dir, "test")?;
            if train.len() != config.dataset.n_train || test.len() != config.dataset.n_test {
                return Err(Error::config(format!(
                    "{} holds {}/{} samples but dataset.n_train/n_test are {}/{}",
                    dir.display(),
                    train.len(),
                    test.len(),
                    config.dataset.n_train,
                    config.dataset.n_test
                )));
            }
            Ok((train, test))
        }
        None => generate_dataset(&config.dataset),
    }
}

pub fn run_training(config: &RunConfig) -> Result<RunOutput> {
    let (train, test) = load_data(config)?;
    run_on(config, &train, &test, &mut NoObserver)
}

/// Model input: the image standardised to zero mean and unit variance.
pub fn image_features(image: &ToyImage) -> Vec<f64> {
    let mut x = image.to_f64();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 1e-12 { var.sqrt().recip() } else { 1.0 };
    x.iter_mut().for_each(|v| *v = (*v - mean) * scale);
    x
}

fn features(data: &Dataset) -> Vec<Vec<f64>> {
    data.samples
        .iter()
        .map(|s| image_features(&s.image))
        .collect()
}

fn labels(data: &Dataset) -> Vec<f64> {
    data.samples.iter().map(|s| s.label.target()).collect()
}

struct Ranked {
    order: Vec<usize>,
}

impl Ranked {
    fn descending(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { order }
    }
}

/// Highest, lowest and a random draw from the middle band of the ranking.
fn pick_traced(scores: &[f64], per_group: usize, run_seed: u64) -> Vec<(usize, TraceGroup)> {
    let n = scores.len();
    let k = per_group.min(n / 3);
    if k == 0 {
        return Vec::new();
    }
    let ranked = Ranked::descending(scores);
    let mut out: Vec<(usize, TraceGroup)> = ranked.order[..k]
        .iter()
        .map(|&i| (i, TraceGroup::Top))
        .collect();
    out.extend(
        ranked.order[n - k..]
            .iter()
            .map(|&i| (i, TraceGroup::Bottom)),
    );
    let half_band = (n / 20).max(k);
    let lo = (n / 2).saturating_sub(half_band).max(k);
    let hi = (n / 2 + half_band).min(n - k);
    let mut rng = seed::rng(run_seed, &[seed::STREAM_TRACE]);
    let mut picks: Vec<usize> = index::sample(&mut rng, hi - lo, k.min(hi - lo)).into_vec();
    picks.sort_unstable();
    out.extend(
        picks
            .into_iter()
            .map(|p| (ranked.order[lo + p], TraceGroup::Median)),
    );
    out
}

pub fn run_on(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    let config = config.resolved()?;
    let n = train.len();
    let input_dim = train.width * train.height;
    if test.width * test.height != input_dim {
        return Err(Error::ShapeMismatch {
            expected: input_dim,
            actual: test.width * test.height,
        });
    }
    let normalizer = sharpness_normalizer(train);
    if normalizer <= 0.0 {
        return Err(Error::config(
            "training images have no texture to normalise sharpness by",
        ));
    }
    let prior = quality_priors(train, normalizer)?;
    let terciles = QualityTerciles::from_priors(&quality_priors(test, normalizer)?);
    let train_x = features(train);
    let train_y = labels(train);
    let test_x = features(test);
    let test_y = labels(test);

    let lr = config.lr_schedule()?;
    let schedule = if config.mode.uses_curriculum() {
        Some(config.pacing_schedule()?)
    } else {
        None
    };
    let mut hardness = HardnessState::new(prior.clone(), config.hardness.gamma, config.alpha_f()?)?;
    let mut params = ModelParams::init(input_dim, config.hidden, config.seed);
    let mut opt = Sgd::new(config.momentum);
    let mut log = MetricsLog::default();
    let mut pool_log = Vec::with_capacity(config.total_epochs);

    for t in 1..=config.total_epochs {
        let eta = lr.cosine_lr(t).map_err(|e| e.at(t, "learning rate"))?;
        let scores = hardness.dfh_all();
        let pool = match (config.mode, &schedule) {
            (Mode::Vanilla, _) => EpochPool::full(n, t, config.seed),
            (Mode::Babystep, _) => {
                EpochPool::from_ids(babystep_pool(&prior, t, &config.babystep)?, t, config.seed)
            }
            (_, Some(s)) => build_epoch_pool(s, &scores, t, config.seed)
                .map_err(|e| e.at(t, "pool selection"))?,
            (_, None) => unreachable!("curriculum modes always carry a schedule"),
        };
        pool_log.push(PoolSummary::new(&pool, &scores));

        let mut losses = Vec::with_capacity(pool.entries.len());
        let mut scratch: Vec<Vec<f64>> = Vec::new();
        for chunk in pool.entries.chunks(config.batch_size) {
            scratch.clear();
            for entry in chunk {
                let augmented = match *entry {
                    PoolEntry::Augmented { sample_id, seed } => Some((sample_id, seed)),
                    PoolEntry::Original(i) if config.augment_all => Some((
                        i,
                        seed::derive(config.seed, &[seed::STREAM_AUGMENT_ALL, t as u64, i as u64]),
                    )),
                    PoolEntry::Original(_) => None,
                };
                if let Some((i, s)) = augmented {
                    scratch.push(image_features(&augment_image(
                        &train.samples[i].image,
                        &config.augment,
                        s,
                    )));
                }
            }
            let mut aug = scratch.iter();
            let batch: Vec<(&[f64], f64)> = chunk
                .iter()
                .map(|entry| {
                    let i = entry.sample_id();
                    let x = match entry {
                        PoolEntry::Original(_) if !config.augment_all => train_x[i].as_slice(),
                        _ => aug
                            .next()
                            .expect("one augmented image per entry")
                            .as_slice(),
                    };
                    (x, train_y[i])
                })
                .collect();
            let (batch_losses, grads) = params
                .forward_backward(&batch)
                .map_err(|e| e.at(t, "forward/backward"))?;
            observer.on_batch(t, chunk, &batch_losses);
            opt.step(&mut params, &grads, eta);
            losses.extend(batch_losses);
        }
        if !params.is_finite() {
            return Err(Error::Diverged.at(t, "sgd step"));
        }

        for (entry, &loss) in pool.entries.iter().zip(&losses) {
            if let PoolEntry::Original(i) = *entry {
                let s = instantaneous_hardness(loss, eta, lr.eta_max)
                    .map_err(|e| e.at(t, "hardness update"))?;
                hardness
                    .update_dih(i, s, true)
                    .map_err(|e| e.at(t, "hardness update"))?;
            }
        }

        let eval =
            evaluate(&params, &test_x, &test_y, &terciles).map_err(|e| e.at(t, "evaluation"))?;
        let dfh = hardness.dfh_all();
        log.rows.push(EpochMetrics {
            epoch: t,
            eta,
            pool_size: pool.hard_ids.len(),
            train_loss_mean: losses.iter().sum::<f64>() / losses.len().max(1) as f64,
            test_accuracy: eval.accuracy,
            test_auc: eval.auc,
            acc_by_quality_tercile: eval.acc_by_tercile,
            mean_dfh: dfh.iter().sum::<f64>() / n as f64,
        });

        if t == config.trace.start_epoch {
            for (id, group) in pick_traced(&dfh, config.trace.per_group, config.seed) {
                log.dfh_traces.insert(
                    id,
                    DfhTrace {
                        group,
                        start_epoch: t,
                        values: Vec::new(),
                    },
                );
            }
        }
        for (&id, trace) in log.dfh_traces.iter_mut() {
            trace.values.push(dfh[id]);
        }
        log::debug!(
            "{} epoch {t}: eta={eta:.5} pool={} loss={:.4} acc={:.4} auc={:.4}",
            config.mode,
            pool.hard_ids.len(),
            log.rows[t - 1].train_loss_mean,
            eval.accuracy,
            eval.auc
        );
        observer.on_epoch_end(&pool, &hardness);
    }

    log.extremes = Some(dfh_extremes_report(
        train,
        &hardness.dfh_all(),
        config.extremes_fraction,
    )?);
    Ok(RunOutput {
        config,
        log,
        pool_log,
        hardness,
        params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mode: Mode,
    pub augment_all: bool,
    pub seed: u64,
    pub final_acc: f64,
    pub final_auc: f64,
    pub acc_hard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub mode: Mode,
    pub augment_all: bool,
    pub runs: usize,
    pub acc: (f64, f64),
    pub auc: (f64, f64),
    pub acc_hard: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl ComparisonTable {
    /// Mean and sample standard deviation over seeds, per (mode, augment_all),
    /// in order of first appearance.
    pub fn summary(&self) -> Vec<ModeSummary> {
        let mut keys: Vec<(Mode, bool)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.mode, r.augment_all)) {
                keys.push((r.mode, r.augment_all));
            }
        }
        keys.into_iter()
            .map(|(mode, augment_all)| {
                let rows: Vec<_> = self
                    .rows
                    .iter()
                    .filter(|r| r.mode == mode && r.augment_all == augment_all)
                    .collect();
                let col = |f: fn(&ComparisonRow) -> f64| {
                    mean_std(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
                };
                ModeSummary {
                    mode,
                    augment_all,
                    runs: rows.len(),
                    acc: col(|r| r.final_acc),
                    auc: col(|r| r.final_auc),
                    acc_hard: col(|r| r.acc_hard),
                }
            })
            .collect()
    }
}

impl ComparisonRow {
    pub fn from_run(out: &RunOutput) -> Result<Self> {
        let last = out
            .log
            .final_row()
            .ok_or_else(|| Error::config("run produced no epochs"))?;
        Ok(Self {
            mode: out.config.mode,
            augment_all: out.config.augment_all,
            seed: out.config.seed,
            final_acc: last.test_accuracy,
            final_auc: last.test_auc,
            acc_hard: last.acc_by_quality_tercile[2],
        })
    }
}

/// Runs every config (in parallel) on one shared dataset; rows keep the
/// order of `configs`.
pub fn compare_runs(configs: &[RunConfig]) -> Result<Vec<RunOutput>> {
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    if configs
        .iter()
        .any(|c| c.dataset != first.dataset || c.data_dir != first.data_dir)
    {
        return Err(Error::config(
            "compared runs must share one dataset configuration",
        ));
    }
    let (train, test) = load_data(first)?;
    configs
        .par_iter()
        .map(|c| run_on(c, &train, &test, &mut NoObserver))
        .collect()
}

pub fn compare_modes(configs: &[RunConfig]) -> Result<ComparisonTable> {
    let runs = compare_runs(configs)?;
    Ok(ComparisonTable {
        rows: runs
            .iter()
            .map(ComparisonRow::from_run)
            .collect::<Result<_>>()?,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::forgeries::DatasetConfig;

    pub(crate) fn tiny(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            total_epochs: 6,
            batch_size: 16,
            hidden: 8,
            dataset: DatasetConfig {
                n_train: 60,
                n_test: 30,
                ..Default::default()
            },
            schedule: ScheduleConfig {
                milestones: vec![2, 4, 5],
                alpha_k: 0.7,
                easy_pool_size: 10,
            },
            trace: TraceConfig {
                start_epoch: 3,
                per_group: 3,
            },
            ..Default::default()
        }
    }

    #[test]
    fn traced_groups_are_distinct() {
        let scores: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        let picks = pick_traced(&scores, 5, 0);
        assert_eq!(picks.len(), 15);
        let mut ids: Vec<_> = picks.iter().map(|p| p.0).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 15);
        for (id, g) in &picks {
            match g {
                TraceGroup::Top => assert!(scores[*id] >= 95.0),
                TraceGroup::Bottom => assert!(scores[*id] < 5.0),
                TraceGroup::Median => assert!((40.0..60.0).contains(&scores[*id])),
            }
        }
        assert!(pick_traced(&scores[..2], 5, 0).is_empty());
    }

    #[test]
    fn every_mode_runs() {
        for mode in Mode::ALL {
            for augment_all in [false, true] {
                let out = run_training(&RunConfig {
                    augment_all,
                    ..tiny(mode)
                })
                .unwrap();
                assert_eq!(out.log.rows.len(), 6);
                for r in &out.log.rows {
                    assert!((0.0..=1.0).contains(&r.test_accuracy));
                    assert!((0.0..=1.0).contains(&r.test_auc));
                    assert!(r
                        .acc_by_quality_tercile
                        .iter()
                        .all(|a| (0.0..=1.0).contains(a)));
                }
                assert_eq!(out.log.dfh_traces.len(), 9);
                assert!(out.log.dfh_traces.values().all(|t| t.values.len() == 4));
            }
        }
    }

    #[test]
    fn pool_sizes_follow_mode() {
        let out = run_training(&tiny(Mode::Vanilla)).unwrap();
        assert!(out.log.rows.iter().all(|r| r.pool_size == 60));

        let cfg = tiny(Mode::Dffc);
        let sched = cfg.pacing_schedule().unwrap();
        let out = run_training(&cfg).unwrap();
        for r in &out.log.rows {
            assert_eq!(r.pool_size, sched.pool_size_at_epoch(r.epoch).unwrap());
        }

        let cfg = tiny(Mode::Babystep);
        let out = run_training(&cfg).unwrap();
        for r in &out.log.rows {
            assert_eq!(r.pool_size, cfg.babystep.pool_size(60, r.epoch));
        }
    }

    #[test]
    fn run_errors_name_the_epoch() {
        let mut cfg = tiny(Mode::Dffc);
        cfg.lr.eta_max = 1e300;
        cfg.lr.eta_min = 1e299;
        let err = run_training(&cfg).unwrap_err().to_string();
        assert!(err.contains("epoch"), "{err}");
    }

    #[test]
    fn dih_mode_rejects_prior_weight() {
        let mut cfg = tiny(Mode::Dih);
        cfg.hardness.alpha_f = Some(0.5);
        assert!(matches!(run_training(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn comparison_table() {
        let one = compare_modes(&[tiny(Mode::Vanilla)]).unwrap();
        assert_eq!(one.rows.len(), 1);
        let twice = compare_modes(&[tiny(Mode::Dffc), tiny(Mode::Dffc)]).unwrap();
        assert_eq!(twice.rows[0], twice.rows[1]);
        let s = twice.summary();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 2);
        assert_eq!(s[0].auc.1, 0.0);

        let mut other = tiny(Mode::Dffc);
        other.dataset.seed = 9;
        assert!(compare_modes(&[tiny(Mode::Dffc), other]).is_err());
    }
}

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentationSpec;
use crate::forgeries::DatasetConfig;
use crate::model::LrSchedule;
use crate::pacing::{BabyStepParams, PacingSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every sample, every epoch.
    Vanilla,
    /// The curriculum without the quality prior.
    Dih,
    /// The full curriculum.
    Dffc,
    /// Static easy-to-hard growth over the quality prior.
    Babystep,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Vanilla, Mode::Babystep, Mode::Dih, Mode::Dffc];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Vanilla => "vanilla",
            Mode::Dih => "dih",
            Mode::Dffc => "dffc",
            Mode::Babystep => "babystep",
        }
    }

    pub fn uses_curriculum(self) -> bool {
        matches!(self, Mode::Dih | Mode::Dffc)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub milestones: Vec<usize>,
    pub alpha_k: f64,
    pub easy_pool_size: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            milestones: vec![2, 5, 8, 12, 15],
            alpha_k: 0.9,
            easy_pool_size: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrConfig {
    pub eta_max: f64,
    pub eta_min: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            eta_max: 0.1,
            eta_min: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardnessConfig {
    pub gamma: f64,
    /// Left unset, this resolves to 0.5, or to 0 in `dih` mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_f: Option<f64>,
}

impl Default for HardnessConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha_f: None,
        }
    }
}

pub const DEFAULT_ALPHA_F: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    /// Epoch at which the tracked samples are chosen.
    pub start_epoch: usize,
    /// Samples per group (highest, median, lowest DFH).
    pub per_group: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            start_epoch: 3,
            per_group: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub total_epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub momentum: f64,
    /// Also augment the originals (hard pool, or every sample outside the
    /// curriculum modes).
    pub augment_all: bool,
    /// Load `train.*`/`test.*` from here instead of generating them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub schedule: ScheduleConfig,
    pub lr: LrConfig,
    pub hardness: HardnessConfig,
    pub babystep: BabyStepParams,
    pub augment: AugmentationSpec,
    pub trace: TraceConfig,
    pub extremes_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Dffc,
            seed: 0,
            total_epochs: 20,
            batch_size: 16,
            hidden: 32,
            momentum: 0.0,
            augment_all: false,
            data_dir: None,
            dataset: DatasetConfig::default(),
            schedule: ScheduleConfig::default(),
            lr: LrConfig::default(),
            hardness: HardnessConfig::default(),
            babystep: BabyStepParams::default(),
            augment: AugmentationSpec::default(),
            trace: TraceConfig::default(),
            extremes_fraction: 0.1,
        }
    }
}

impl RunConfig {
    pub fn alpha_f(&self) -> Result<f64> {
        match (self.mode, self.hardness.alpha_f) {
            (Mode::Dih, Some(a)) if a != 0.0 => Err(Error::config(format!(
                "mode=dih drops the quality prior, but hardness.alpha_f={a} was set"
            ))),
            (Mode::Dih, _) => Ok(0.0),
            (_, Some(a)) => Ok(a),
            (_, None) => Ok(DEFAULT_ALPHA_F),
        }
    }

    /// Checks every constraint and reports all offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |r: Result<()>| {
            if let Err(e) = r {
                problems.push(match e {
                    Error::InvalidConfig(m) | Error::InvalidSchedule(m) => m,
                    other => other.to_string(),
                });
            }
        };
        check(self.dataset.validate());
        if self.dataset.n_test < 4 {
            check(Err(Error::config(
                "dataset.n_test must be >= 4 for tercile accuracy",
            )));
        }
        if self.total_epochs == 0 {
            check(Err(Error::config("total_epochs must be positive")));
        }
        if self.batch_size == 0 {
            check(Err(Error::config("batch_size must be positive")));
        }
        if self.hidden == 0 {
            check(Err(Error::config("hidden must be positive")));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            check(Err(Error::config(format!(
                "momentum {} not in [0, 1)",
                self.momentum
            ))));
        }
        if !(0.0..=1.0).contains(&self.hardness.gamma) {
            check(Err(Error::config(format!(
                "hardness.gamma {} not in [0, 1]",
                self.hardness.gamma
            ))));
        }
        match self.alpha_f() {
            Ok(a) if !(a >= 0.0 && a.is_finite()) => check(Err(Error::config(format!(
                "hardness.alpha_f {a} must be >= 0"
            )))),
            Ok(_) => {}
            Err(e) => check(Err(e)),
        }
        check(
            LrSchedule::new(self.lr.eta_max, self.lr.eta_min, self.total_epochs.max(1)).map(|_| ()),
        );
        if self.mode.uses_curriculum() {
            check(self.pacing_schedule().map(|_| ()));
        }
        if self.mode == Mode::Babystep {
            check(self.babystep.validate());
        }
        check(self.augment.validate());
        if !(self.extremes_fraction > 0.0 && self.extremes_fraction <= 0.5) {
            check(Err(Error::config(format!(
                "extremes_fraction {} not in (0, 0.5]",
                self.extremes_fraction
            ))));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn pacing_schedule(&self) -> Result<PacingSchedule> {
        PacingSchedule::new(
            self.schedule.milestones.clone(),
            self.schedule.alpha_k,
            self.schedule.easy_pool_size,
            self.dataset.n_train,
            self.total_epochs,
        )
    }

    pub fn lr_schedule(&self) -> Result<LrSchedule> {
        LrSchedule::new(self.lr.eta_max, self.lr.eta_min, self.total_epochs)
    }

    /// Validated copy with every defaulted value written out.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        out.hardness.alpha_f = Some(self.alpha_f()?);
        Ok(out)
    }
}

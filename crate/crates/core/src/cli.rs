//! The `dffc` command line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::forgeries::{write_dataset, Dataset, Label};
use crate::hardness::HardnessState;
use crate::runner::{
    self, compare_runs, load_data, read_metrics, write_comparison, write_run, ComparisonRow,
    ComparisonTable, Mode, RunConfig,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dffc",
    version,
    about = "Dynamic hardness curricula on a synthetic forgery benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the train/test splits and write them to disk.
    GenData(JobArgs),
    /// Train one model and write its run artifacts.
    Train(JobArgs),
    /// Run a grid of modes, augmentation settings and seeds.
    Compare(JobArgs),
    /// Dump the highest- and lowest-hardness training samples of a run.
    InspectDfh(InspectArgs),
    /// Summarise a run or comparison directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct JobArgs {
    /// JSON config file; `{}` selects every default.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Dotted `key=value` override applied on top of the file; values parse
    /// as JSON and fall back to plain strings.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shorthand for `--override schedule.easy_pool_size=N`.
    #[arg(long, value_name = "N")]
    pub easy_pool_size: Option<usize>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub run_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub top: usize,
    #[arg(long, default_value_t = 8)]
    pub bottom: usize,
    /// Defaults to `RUN_DIR/inspect`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub run_dir: PathBuf,
}

/// Sweep definition for `compare`: every combination of `modes`,
/// `augment_all` and `seeds` applied to `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub base: RunConfig,
    pub modes: Vec<Mode>,
    pub augment_all: Vec<bool>,
    pub seeds: Vec<u64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            base: RunConfig::default(),
            modes: Mode::ALL.to_vec(),
            augment_all: vec![false, true],
            seeds: (0..5).collect(),
        }
    }
}

impl CompareConfig {
    /// Run configs in mode, then augmentation, then seed order. `dih` runs
    /// get `alpha_f = 0` whatever the base says.
    pub fn expand(&self) -> Result<Vec<RunConfig>> {
        if self.modes.is_empty() || self.augment_all.is_empty() || self.seeds.is_empty() {
            return Err(Error::config(
                "compare needs at least one mode, augment_all value and seed",
            ));
        }
        let mut out = Vec::new();
        for &mode in &self.modes {
            for &augment_all in &self.augment_all {
                for &seed in &self.seeds {
                    let mut c = self.base.clone();
                    c.mode = mode;
                    c.augment_all = augment_all;
                    c.seed = seed;
                    if mode == Mode::Dih {
                        c.hardness.alpha_f = Some(0.0);
                    }
                    out.push(c.resolved()?);
                }
            }
        }
        Ok(out)
    }
}

/// Sets `key` (dot-separated) in `root` to `raw`, parsed as JSON when
/// possible.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("override key `{key}` is malformed")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (depth, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(Error::config(format!(
                "override `{key}`: `{}` is not an object",
                parts[..depth].join(".")
            )));
        };
        if depth + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override keys have at least one part")
}

fn read_json_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads `args.config`, applies the overrides, and deserialises the result.
pub fn load_config<T: for<'de> Deserialize<'de>>(
    args: &JobArgs,
    schedule_prefix: &str,
) -> Result<T> {
    let mut value = read_json_file(&args.config)?;
    if !value.is_object() {
        return Err(Error::Format {
            path: args.config.clone(),
            reason: "top level must be a JSON object".into(),
        });
    }
    for o in &args.overrides {
        apply_override(&mut value, o)?;
    }
    if let Some(e) = args.easy_pool_size {
        apply_override(
            &mut value,
            &format!("{schedule_prefix}schedule.easy_pool_size={e}"),
        )?;
    }
    serde_json::from_value(value).map_err(|e| Error::Format {
        path: args.config.clone(),
        reason: e.to_string(),
    })
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if entries.next().is_some() && !force {
            return Err(Error::config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(&args),
        Command::Train(args) => train(&args),
        Command::Compare(args) => compare(&args),
        Command::InspectDfh(args) => inspect_dfh(&args),
        Command::Report(args) => report(&args),
    }
}

fn histogram(values: &[f64], bins: usize) -> String {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return "  (empty)\n".into();
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = if width > 0.0 {
            ((v - lo) / width) as usize
        } else {
            0
        };
        counts[b.min(bins - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    let mut out = String::new();
    for (b, c) in counts.iter().enumerate() {
        let from = lo + width * b as f64;
        out.push_str(&format!(
            "  [{:>7.4}, {:>7.4}) {:>5} {}\n",
            from,
            from + width,
            c,
            "#".repeat(c * 40 / peak)
        ));
    }
    out
}

fn dataset_summary(name: &str, ds: &Dataset) -> String {
    let amplitudes: Vec<f64> = ds
        .samples
        .iter()
        .filter(|s| s.label == Label::Fake)
        .map(|s| s.artifact_amplitude)
        .collect();
    let blur: Vec<f64> = ds.samples.iter().map(|s| s.blur_sigma).collect();
    format!(
        "{name}: {} samples ({} real, {} fake), {}x{}\n fake amplitude:\n{} blur sigma:\n{}",
        ds.len(),
        ds.count(Label::Real),
        ds.count(Label::Fake),
        ds.width,
        ds.height,
        histogram(&amplitudes, 5),
        histogram(&blur, 5)
    )
}

fn gen_data(args: &JobArgs) -> Result<()> {
    let config: RunConfig = load_config(args, "")?;
    config.dataset.validate()?;
    prepare_output_dir(&args.out, args.force)?;
    let (train, test) = crate::forgeries::generate_dataset(&config.dataset)?;
    write_dataset(&args.out, "train", &train)?;
    write_dataset(&args.out, "test", &test)?;
    print!(
        "{}{}",
        dataset_summary("train", &train),
        dataset_summary("test", &test)
    );
    log::info!("wrote dataset to {}", args.out.display());
    Ok(())
}

fn train(args: &JobArgs) -> Result<()> {
    let config: RunConfig = load_config(args, "")?;
    let config = config.resolved()?;
    prepare_output_dir(&args.out, args.force)?;
    log::info!(
        "training mode={} seed={} -> {}",
        config.mode,
        config.seed,
        args.out.display()
    );
    let out = runner::run_training(&config)?;
    write_run(&args.out, &out)?;
    if let Some(last) = out.log.final_row() {
        println!(
            "{} seed {}: acc {:.4} auc {:.4} acc_hard {:.4} mean_dfh {:.4}",
            config.mode,
            config.seed,
            last.test_accuracy,
            last.test_auc,
            last.acc_by_quality_tercile[2],
            last.mean_dfh
        );
    }
    Ok(())
}

fn compare(args: &JobArgs) -> Result<()> {
    let sweep: CompareConfig = load_config(args, "base.")?;
    let configs = sweep.expand()?;
    prepare_output_dir(&args.out, args.force)?;
    log::info!("comparing {} runs", configs.len());
    let runs = compare_runs(&configs)?;
    let runs_dir = args.out.join("runs");
    for run in &runs {
        let dir = runs_dir.join(format!(
            "{}_aug{}_seed{}",
            run.config.mode,
            u8::from(run.config.augment_all),
            run.config.seed
        ));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_run(&dir, run)?;
    }
    let table = ComparisonTable {
        rows: runs
            .iter()
            .map(ComparisonRow::from_run)
            .collect::<Result<_>>()?,
    };
    write_comparison(&args.out, &table)?;
    let path = args.out.join("compare_config.json");
    fs::write(&path, serde_json::to_string_pretty(&sweep)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    print!("{}", format_summary(&table));
    Ok(())
}

fn format_summary(table: &ComparisonTable) -> String {
    let mut out = format!(
        "{:<9} {:<7} {:>4}  {:>17}  {:>17}  {:>17}\n",
        "mode", "augment", "runs", "acc", "auc", "acc_hard"
    );
    for s in table.summary() {
        let cell = |(m, sd): (f64, f64)| format!("{m:.4} ± {sd:.4}");
        out.push_str(&format!(
            "{:<9} {:<7} {:>4}  {:>17}  {:>17}  {:>17}\n",
            s.mode.as_str(),
            s.augment_all,
            s.runs,
            cell(s.acc),
            cell(s.auc),
            cell(s.acc_hard)
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct InspectEntry {
    rank: usize,
    id: usize,
    label: Label,
    amplitude: f64,
    sigma: f64,
    q: f64,
    dih: f64,
    dfh: f64,
    image: String,
}

#[derive(Debug, Serialize)]
struct InspectReport {
    top: Vec<InspectEntry>,
    bottom: Vec<InspectEntry>,
    top_fake_mean_amplitude: Option<f64>,
    bottom_fake_mean_amplitude: Option<f64>,
}

fn fake_mean_amplitude(entries: &[InspectEntry]) -> Option<f64> {
    let fakes: Vec<f64> = entries
        .iter()
        .filter(|e| e.label == Label::Fake)
        .map(|e| e.amplitude)
        .collect();
    (!fakes.is_empty()).then(|| fakes.iter().sum::<f64>() / fakes.len() as f64)
}

fn inspect_dfh(args: &InspectArgs) -> Result<()> {
    let config: RunConfig = {
        let path = args.run_dir.join("resolved_config.json");
        serde_json::from_value(read_json_file(&path)?).map_err(|e| Error::Format {
            path,
            reason: e.to_string(),
        })?
    };
    let hardness_path = args.run_dir.join("hardness.json");
    let text = fs::read_to_string(&hardness_path).map_err(|e| Error::io(&hardness_path, e))?;
    let hardness = HardnessState::from_json(&text)?;
    let (train, _) = load_data(&config)?;
    if train.len() != hardness.len() {
        return Err(Error::ShapeMismatch {
            expected: train.len(),
            actual: hardness.len(),
        });
    }
    let n = train.len();
    let clamp = |k: usize, which: &str| {
        if k > n {
            log::warn!("--{which} {k} exceeds {n} samples; clamping");
        }
        k.min(n)
    };
    let (top_k, bottom_k) = (clamp(args.top, "top"), clamp(args.bottom, "bottom"));

    let dfh = hardness.dfh_all();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dfh[b].total_cmp(&dfh[a]).then(a.cmp(&b)));

    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| args.run_dir.join("inspect"));
    prepare_output_dir(&out_dir, args.force)?;
    let dump = |group: &str, ids: &[usize]| -> Result<Vec<InspectEntry>> {
        ids.iter()
            .enumerate()
            .map(|(rank, &id)| {
                let s = &train.samples[id];
                let image = format!("{group}_{rank:03}_id{id}.pgm");
                let path = out_dir.join(&image);
                fs::write(&path, s.image.to_pgm()).map_err(|e| Error::io(&path, e))?;
                Ok(InspectEntry {
                    rank,
                    id,
                    label: s.label,
                    amplitude: s.artifact_amplitude,
                    sigma: s.blur_sigma,
                    q: hardness.prior()[id],
                    dih: hardness.dih()[id],
                    dfh: dfh[id],
                    image,
                })
            })
            .collect()
    };
    let top = dump("top", &order[..top_k])?;
    let bottom_ids: Vec<usize> = order[n - bottom_k..].iter().rev().copied().collect();
    let bottom = dump("bottom", &bottom_ids)?;
    let report = InspectReport {
        top_fake_mean_amplitude: fake_mean_amplitude(&top),
        bottom_fake_mean_amplitude: fake_mean_amplitude(&bottom),
        top,
        bottom,
    };
    let path = out_dir.join("inspect.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .map_err(|e| Error::io(&path, e))?;

    for (name, list) in [("highest DFH", &report.top), ("lowest DFH", &report.bottom)] {
        println!("{name}:");
        println!(
            "  {:>4} {:>6} {:<5} {:>8} {:>8} {:>8} {:>10} {:>10}",
            "rank", "id", "label", "ampl", "sigma", "q", "dih", "dfh"
        );
        for e in list.iter() {
            println!(
                "  {:>4} {:>6} {:<5} {:>8.4} {:>8.4} {:>8.4} {:>10.4} {:>10.4}",
                e.rank,
                e.id,
                match e.label {
                    Label::Real => "real",
                    Label::Fake => "fake",
                },
                e.amplitude,
                e.sigma,
                e.q,
                e.dih,
                e.dfh
            );
        }
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |a| format!("{a:.4}"));
    println!(
        "mean fake amplitude: highest {} lowest {}",
        fmt(report.top_fake_mean_amplitude),
        fmt(report.bottom_fake_mean_amplitude)
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let dir = &args.run_dir;
    let comparison = dir.join("comparison.csv");
    if comparison.exists() {
        let table = runner::read_comparison(&comparison)?;
        print!("{}", format_summary(&table));
        return Ok(());
    }
    let rows = read_metrics(&dir.join("metrics.csv"))?;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::Format {
            path: dir.join("metrics.csv"),
            reason: "no epochs recorded".into(),
        });
    };
    println!("epochs {}..={}", first.epoch, last.epoch);
    println!(
        "final: acc {:.4} auc {:.4} terciles easy/mid/hard {:.4}/{:.4}/{:.4}",
        last.test_accuracy,
        last.test_auc,
        last.acc_by_quality_tercile[0],
        last.acc_by_quality_tercile[1],
        last.acc_by_quality_tercile[2]
    );
    println!(
        "{:>5} {:>9} {:>6} {:>9} {:>9}",
        "epoch", "eta", "pool", "loss", "mean_dfh"
    );
    for r in &rows {
        println!(
            "{:>5} {:>9.5} {:>6} {:>9.4} {:>9.4}",
            r.epoch, r.eta, r.pool_size, r.train_loss_mean, r.mean_dfh
        );
    }
    let extremes = dir.join("extremes.json");
    if extremes.exists() {
        let ext: crate::forgeries::ExtremesReport =
            serde_json::from_value(read_json_file(&extremes)?)?;
        println!(
            "fakes by DFH (fraction {}): top TAR {:.4} SSIM {:.4} | bottom TAR {:.4} SSIM {:.4}",
            ext.fraction,
            ext.top.mean_tar,
            ext.top.mean_ssim,
            ext.bottom.mean_tar,
            ext.bottom.mean_ssim
        );
    }
    Ok(())
}

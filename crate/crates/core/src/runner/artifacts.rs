use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{ComparisonRow, ComparisonTable, EpochMetrics, RunOutput};
use crate::model::save_checkpoint;
use crate::{Error, Result};

pub const METRICS_HEADER: &str =
    "epoch,eta,pool_size,train_loss_mean,test_acc,test_auc,acc_easy,acc_mid,acc_hard,mean_dfh";

pub const COMPARISON_HEADER: &str = "mode,augment_all,seed,final_acc,final_auc,acc_hard";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

/// Writes every artifact of a finished run into `dir`, which must exist.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<()> {
    let mut csv = format!("{METRICS_HEADER}\n");
    for r in &run.log.rows {
        let [easy, mid, hard] = r.acc_by_quality_tercile;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.eta,
            r.pool_size,
            r.train_loss_mean,
            r.test_accuracy,
            r.test_auc,
            easy,
            mid,
            hard,
            r.mean_dfh
        )
        .expect("writing to a String");
    }
    write(&dir.join("metrics.csv"), csv)?;

    let mut pools = String::from("epoch,k_n,easy_size,overlap,min_selected_dfh,max_selected_dfh\n");
    for p in &run.pool_log {
        writeln!(
            pools,
            "{},{},{},{},{},{}",
            p.epoch, p.k_n, p.easy_size, p.overlap, p.min_selected_dfh, p.max_selected_dfh
        )
        .expect("writing to a String");
    }
    write(&dir.join("pool_log.csv"), pools)?;

    write_json(&dir.join("dfh_trace.json"), &run.log.dfh_traces)?;
    if let Some(ext) = &run.log.extremes {
        write_json(&dir.join("extremes.json"), ext)?;
    }
    write(&dir.join("hardness.json"), run.hardness.to_json()? + "\n")?;
    write_json(&dir.join("resolved_config.json"), &run.config)?;
    save_checkpoint(
        dir,
        "model",
        &run.params,
        run.config.seed,
        run.config.total_epochs,
    )
}

pub fn write_comparison(dir: &Path, table: &ComparisonTable) -> Result<()> {
    let mut csv = format!("{COMPARISON_HEADER}\n");
    for r in &table.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.mode, r.augment_all, r.seed, r.final_acc, r.final_auc, r.acc_hard
        )
        .expect("writing to a String");
    }
    write(&dir.join("comparison.csv"), csv)
}

fn csv_rows(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(bad(format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let cells: Vec<String> = l.split(',').map(str::to_string).collect();
            if cells.len() == width {
                Ok(cells)
            } else {
                Err(bad(format!(
                    "line {} has {} fields, expected {width}",
                    i + 2,
                    cells.len()
                )))
            }
        })
        .collect()
}

fn parse_cell<T: std::str::FromStr>(path: &Path, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        reason: format!("cannot parse `{cell}`"),
    })
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpochMetrics>> {
    csv_rows(path, METRICS_HEADER)?
        .into_iter()
        .map(|c| {
            let f = |i: usize| parse_cell::<f64>(path, &c[i]);
            Ok(EpochMetrics {
                epoch: parse_cell(path, &c[0])?,
                eta: f(1)?,
                pool_size: parse_cell(path, &c[2])?,
                train_loss_mean: f(3)?,
                test_accuracy: f(4)?,
                test_auc: f(5)?,
                acc_by_quality_tercile: [f(6)?, f(7)?, f(8)?],
                mean_dfh: f(9)?,
            })
        })
        .collect()
}

pub fn read_comparison(path: &Path) -> Result<ComparisonTable> {
    let rows =
        csv_rows(path, COMPARISON_HEADER)?
            .into_iter()
            .map(|c| {
                let mode = serde_json::from_value(serde_json::Value::String(c[0].clone()))
                    .map_err(|_| Error::Format {
                        path: path.to_path_buf(),
                        reason: format!("unknown mode `{}`", c[0]),
                    })?;
                Ok(ComparisonRow {
                    mode,
                    augment_all: parse_cell(path, &c[1])?,
                    seed: parse_cell(path, &c[2])?,
                    final_acc: parse_cell(path, &c[3])?,
                    final_auc: parse_cell(path, &c[4])?,
                    acc_hard: parse_cell(path, &c[5])?,
                })
            })
            .collect::<Result<_>>()?;
    Ok(ComparisonTable { rows })
}

//! Run directories on disk.
//!
//! A training run directory holds:
//!
//! * `report.txt`: `key: value` lines, summary first, then the resolved
//!   configuration under `config.` keys.
//! * `trace.csv`: `iter,loss,entropy` with a header row.
//! * `soft_labels.emb`: the final `N × C` soft labeling in EMB1.
//! * `labels.txt`: the hard labeling, one class id per line.
//!
//! A grid directory holds one `run-NNN` directory per grid point (failed
//! runs get only a `report.txt` with `status: failed`) and a `grid.csv`
//! summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::embedding::{read_labels, write_emb1, write_labels};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::train::{GridRun, TrainConfig, TrainReport};

pub const REPORT_FILE: &str = "report.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const SOFT_LABELS_FILE: &str = "soft_labels.emb";
pub const LABELS_FILE: &str = "labels.txt";
pub const GRID_SUMMARY_FILE: &str = "grid.csv";

/// Ordered `key: value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportFields(pub Vec<(String, String)>);

impl ReportFields {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(": ").ok_or_else(|| Error::Parse {
                location: format!("line {}", i + 1),
                reason: format!("expected 'key: value', found {line:?}"),
            })?;
            fields.push(k.trim(), v.trim());
        }
        Ok(fields)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn config_fields<T: Scalar>(fields: &mut ReportFields, cfg: &TrainConfig<T>) {
    for (k, v) in cfg.to_key_values() {
        fields.push(format!("config.{k}"), v);
    }
}

pub fn train_report_fields<T: Scalar>(r: &TrainReport<T>) -> ReportFields {
    let mut f = ReportFields::default();
    f.push("status", "ok");
    f.push("generator", r.generator);
    f.push("seed", r.seed);
    f.push("wall-clock-seconds", format!("{:.3}", r.wall_clock.as_secs_f64()));
    f.push("iterations", r.loss_trace.len());
    f.push("final-loss", r.loss_trace.last().map_or(f64::NAN, |v| v.as_f64()));
    f.push("final-entropy", r.entropy_trace.last().map_or(f64::NAN, |v| v.as_f64()));
    f.push("distinct-classes", r.distinct_classes);
    f.push("degenerate", r.degenerate);
    config_fields(&mut f, &r.config);
    f
}

pub fn trace_csv<T: Scalar>(r: &TrainReport<T>) -> String {
    let mut out = String::from("iter,loss,entropy\n");
    for (i, (l, h)) in r.loss_trace.iter().zip(&r.entropy_trace).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, l.as_f64(), h.as_f64());
    }
    out
}

/// `(loss, entropy)` per iteration from a `trace.csv`.
pub fn read_trace(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |reason: String| Error::Parse {
                location: format!("{}:{}", path.display(), i + 1),
                reason,
            };
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", cols.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{e}: {s:?}")));
            Ok((num(cols[1])?, num(cols[2])?))
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes a run directory. `extra` fields (input paths and the like) are
/// appended to `report.txt`.
pub fn write_train_report<T: Scalar>(dir: &Path, r: &TrainReport<T>, extra: &ReportFields) -> Result<()> {
    create_dir(dir)?;
    let mut fields = train_report_fields(r);
    fields.0.extend(extra.0.iter().cloned());
    fields.write(&dir.join(REPORT_FILE))?;
    let trace = dir.join(TRACE_FILE);
    fs::write(&trace, trace_csv(r)).map_err(|e| Error::io(&trace, e))?;
    write_emb1(&dir.join(SOFT_LABELS_FILE), &r.soft_labels.to_matrix("soft_labels")?)?;
    write_labels(&dir.join(LABELS_FILE), &r.hard_labels)
}

pub fn run_dir_name(index: usize) -> String {
    format!("run-{index:03}")
}

/// Writes every grid run and the summary table.
pub fn write_grid<T: Scalar>(dir: &Path, runs: &[GridRun<T>], extra: &ReportFields) -> Result<()> {
    create_dir(dir)?;
    let mut summary = String::from("run,outer-lr,inner-lr,warm-start,status,distinct-classes,degenerate,final-loss\n");
    for (i, run) in runs.iter().enumerate() {
        let run_dir = dir.join(run_dir_name(i));
        let c = &run.config;
        match &run.outcome {
            Ok(r) => {
                write_train_report(&run_dir, r, extra)?;
                let last = r.loss_trace.last().map_or(f64::NAN, |v| v.as_f64());
                let _ = writeln!(
                    summary,
                    "{i},{},{},{},ok,{},{},{last}",
                    c.outer_lr, c.inner.learning_rate, c.inner.warm_start, r.distinct_classes, r.degenerate
                );
            }
            Err(e) => {
                create_dir(&run_dir)?;
                let mut f = ReportFields::default();
                f.push("status", "failed");
                f.push("error", e.replace('\n', " "));
                config_fields(&mut f, c);
                f.0.extend(extra.0.iter().cloned());
                f.write(&run_dir.join(REPORT_FILE))?;
                let _ = writeln!(
                    summary,
                    "{i},{},{},{},failed,,,",
                    c.outer_lr, c.inner.learning_rate, c.inner.warm_start
                );
            }
        }
    }
    let path = dir.join(GRID_SUMMARY_FILE);
    fs::write(&path, summary).map_err(|e| Error::io(&path, e))
}

/// One run read back from a grid directory.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub fields: ReportFields,
    /// `None` for failed runs.
    pub labels: Option<Vec<usize>>,
}

impl StoredRun {
    pub fn succeeded(&self) -> bool {
        self.fields.get("status") == Some("ok")
    }

    pub fn degenerate(&self) -> bool {
        self.fields.get("degenerate") == Some("true")
    }
}

/// Run directories of a grid in index order.
pub fn read_grid(dir: &Path) -> Result<Vec<StoredRun>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("run-")))
        .collect();
    dirs.sort();
    dirs.into_iter()
        .map(|d| {
            let fields = ReportFields::read(&d.join(REPORT_FILE))?;
            let labels = if fields.get("status") == Some("ok") {
                Some(read_labels(&d.join(LABELS_FILE))?)
            } else {
                None
            };
            Ok(StoredRun { dir: d, fields, labels })
        })
        .collect()
}

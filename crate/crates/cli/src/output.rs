//! Result files: atomic writes and the JSON run report.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qlab_core::estimators::{ExperimentReport, Verdict};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("QLAB_VERSION");

/// Writes `path` through a sibling temp file and a rename, so an
/// interrupted run never leaves a half-written result behind.
pub fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = temp_path(path)?;
    let result = write(&tmp).and_then(|()| fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display())));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn temp_path(path: &Path) -> Result<PathBuf> {
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    Ok(path.with_file_name(format!(".{name}.tmp-{}", std::process::id())))
}

/// The output directory of one run and the files written to it.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Atomically writes `name` through a buffered writer.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        self.write_path(name, |tmp| {
            let mut w = BufWriter::new(fs::File::create(tmp)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        })
    }

    /// Atomically writes `name` with a writer that needs a path.
    pub fn write_path(&mut self, name: &str, body: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        write_atomic(&self.dir.join(name), body).with_context(|| format!("writing {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Atomically writes two files produced by one writer.
    pub fn write_pair(&mut self, a: &str, b: &str, body: impl FnOnce(&Path, &Path) -> Result<()>) -> Result<()> {
        let (pa, pb) = (self.dir.join(a), self.dir.join(b));
        let (ta, tb) = (temp_path(&pa)?, temp_path(&pb)?);
        let result = body(&ta, &tb).and_then(|()| {
            fs::rename(&tb, &pb)?;
            fs::rename(&ta, &pa)?;
            Ok(())
        });
        if result.is_err() {
            let _ = fs::remove_file(&ta);
            let _ = fs::remove_file(&tb);
        }
        result.with_context(|| format!("writing {a} and {b}"))?;
        self.files.push(a.to_string());
        self.files.push(b.to_string());
        Ok(())
    }

    /// A CSV from a header and preformatted rows.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.write(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.write_record(r)?;
            }
            c.flush()?;
            Ok(())
        })
    }

    pub fn report_csv(&mut self, name: &str, report: &ExperimentReport) -> Result<()> {
        self.write(name, |w| Ok(report.write_csv(w)?))
    }
}

/// Float formatting shared by every CSV: shortest round-trip scientific.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// A named pass/fail requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            value,
            requirement: requirement.into(),
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Check::new(name, value, format!("<= {max:e}"), value <= max)
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Check::new(name, value, format!(">= {min:e}"), value >= min)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check::new(name, value, format!("in [{lo}, {hi}]"), value >= lo && value <= hi)
    }

    /// The slope verdict of a judged report; descriptive reports give none.
    pub fn from_report(r: &ExperimentReport) -> Option<Self> {
        let e = r.expectation?;
        let slope = r.slope().unwrap_or(f64::NAN);
        let requirement = match r.verdict {
            Verdict::Inconclusive => format!("{e:?} (fit residual above cap {})", r.residual_cap),
            _ => format!("{e:?}"),
        };
        Some(Check::new(format!("{} slope", r.name), slope, requirement, r.verdict == Verdict::Pass))
    }
}

/// What an experiment produces besides its files.
#[derive(Debug, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub reports: Vec<ExperimentReport>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Records a judged report and its slope check.
    pub fn report(&mut self, r: ExperimentReport) {
        if let Some(c) = Check::from_report(&r) {
            self.checks.push(c);
        }
        self.reports.push(r);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.details.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    Pass,
    Fail,
    /// No checks were attached.
    Descriptive,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub experiment: &'a str,
    pub version: &'a str,
    pub runtime_seconds: f64,
    pub config: &'a ExperimentConfig,
    pub verdict: RunVerdict,
    pub files: &'a [String],
    #[serde(flatten)]
    pub outcome: &'a Outcome,
}

impl RunVerdict {
    pub fn of(outcome: &Outcome) -> Self {
        if outcome.checks.is_empty() {
            RunVerdict::Descriptive
        } else if outcome.passed() {
            RunVerdict::Pass
        } else {
            RunVerdict::Fail
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::create(dir.path()).unwrap();
        out.table("a.csv", &["x"], &[vec!["1".into()]]).unwrap();
        let failed = out.write("b.csv", |_| anyhow::bail!("boom"));
        assert!(failed.is_err());
        let names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["a.csv".to_string()]);
        assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap(), "x\n1\n");
        assert_eq!(out.files(), ["a.csv".to_string()]);
    }

    #[test]
    fn verdicts() {
        let mut o = Outcome::default();
        assert_eq!(RunVerdict::of(&o), RunVerdict::Descriptive);
        o.check(Check::at_most("x", 1.0, 2.0));
        assert_eq!(RunVerdict::of(&o), RunVerdict::Pass);
        o.check(Check::within("y", 3.0, 0.5, 2.0));
        assert_eq!(RunVerdict::of(&o), RunVerdict::Fail);
    }
}

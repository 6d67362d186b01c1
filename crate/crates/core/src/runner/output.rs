//! Output tree: `manifest.json`, `reports/*.json`, `series/*.csv`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{Report, Table};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStatus {
    pub check: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub input_hash: String,
    pub code_version: String,
    /// False until every stage of the scenario has written its outputs.
    pub complete: bool,
    pub passed: bool,
    pub checks: Vec<CheckStatus>,
    /// Paths relative to the output directory, in emission order.
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?)
    }
}

/// Writes outputs as they are produced and keeps the manifest current, so
/// an interrupted run leaves a manifest flagged incomplete.
#[derive(Debug)]
pub struct Sink {
    dir: PathBuf,
    manifest: Manifest,
}

impl Sink {
    pub fn create(dir: &Path, config: &ScenarioConfig) -> Result<Self> {
        fs::create_dir_all(dir.join("reports"))?;
        fs::create_dir_all(dir.join("series"))?;
        let sink = Sink {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                scenario: config.scenario.clone(),
                config: config.clone(),
                input_hash: config.input_hash()?,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                complete: false,
                passed: false,
                checks: Vec::new(),
                files: Vec::new(),
                error: None,
            },
        };
        sink.flush()?;
        Ok(sink)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn flush(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    fn emitted(&mut self, rel: String) -> Result<()> {
        self.manifest.files.push(rel);
        self.flush()
    }

    /// Writes `series/<name>.csv`.
    pub fn series(&mut self, name: &str, table: &Table) -> Result<()> {
        let rel = format!("series/{name}.csv");
        let file = fs::File::create(self.dir.join(&rel))?;
        table.write_csv(BufWriter::new(file))?;
        self.emitted(rel)
    }

    /// Writes `reports/<name>.json` for any serializable value.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let rel = format!("reports/{name}.json");
        fs::write(self.dir.join(&rel), serde_json::to_string_pretty(value)? + "\n")?;
        self.emitted(rel)
    }

    /// Records a check: its tables go to `series/<check>_<table>.csv` and the
    /// rest of the report to `reports/<check>.json`.
    pub fn report(&mut self, report: &Report) -> Result<()> {
        let mut stripped = report.clone();
        let tables = std::mem::take(&mut stripped.tables);
        for (name, table) in &tables {
            self.series(&format!("{}_{name}", report.check), table)?;
        }
        self.manifest.checks.push(CheckStatus {
            check: report.check.clone(),
            passed: report.passed,
        });
        self.json(&report.check, &stripped)
    }

    /// Marks a run that stopped on an error; the manifest stays incomplete.
    pub fn abort(mut self, message: String) -> Result<Manifest> {
        self.manifest.error = Some(message);
        self.manifest.passed = false;
        self.flush()?;
        Ok(self.manifest)
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.complete = true;
        self.manifest.passed = self.manifest.checks.iter().all(|c| c.passed);
        self.flush()?;
        Ok(self.manifest)
    }
}

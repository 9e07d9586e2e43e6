//! Result tables, provenance records and certificates, and how they are written.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Version of the on-disk layout described in `docs/output-schema.md`.
pub const SCHEMA_VERSION: u32 = 1;

/// Interns provenance records and hands out stable ids in first-use order.
#[derive(Debug, Default)]
pub struct Registry {
    records: Vec<String>,
    index: HashMap<String, usize>,
}

impl Registry {
    pub fn id(&mut self, record: String) -> String {
        let next = self.records.len();
        let k = *self.index.entry(record.clone()).or_insert(next);
        if k == next {
            self.records.push(record);
        }
        format!("p{k}")
    }

    pub fn entries(&self) -> Vec<ProvenanceEntry> {
        self.records.iter().enumerate().map(|(k, r)| ProvenanceEntry { id: format!("p{k}"), record: r.clone() }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProvenanceEntry {
    pub id: String,
    pub record: String,
}

/// One pass/fail criterion of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: value <= limit, value, limit, detail: detail.into() }
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: value >= limit, value, limit, detail: detail.into() }
    }

    pub fn holds(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: ok, value: f64::from(u8::from(ok)), limit: 1.0, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// A named CSV table, already serialized.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: Vec<u8>,
    pub rows: usize,
}

impl Table {
    pub fn from_rows<R: Serialize>(name: &str, rows: &[R]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Serialize(e.to_string()))?;
        }
        let csv = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
        Ok(Self { name: name.to_string(), csv, rows: rows.len() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub dimension_cap: usize,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub config: ExperimentConfig,
    pub constants: Vec<ProvenanceEntry>,
    pub tables: Vec<String>,
}

pub const CONVENTIONS: &[(&str, &str)] = &[
    ("jordan_wigner", "mode m = site * spin + i; strings run over lower modes; basis bit m is the occupation of mode m"),
    ("bound_normalization", "curves are divided by ||A|| ||B||, include the min(|X|,|Y|) factor and are capped at 2"),
    ("decay", "F_alpha(r) = (1 + r)^(-alpha)"),
    ("interaction_norm", "||Phi||_(alpha,n) = sup_z sum_(Z contains z) |Z|^n ||Phi(Z)|| / F_alpha(diam Z)"),
    ("commutator_norm", "spectral norm of the dense commutator"),
    ("time_grid", "elapsed times t - s; default horizon 2(1 + r)/v"),
];

/// All artifacts of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub provenance: Provenance,
    pub certificate: Certificate,
}

impl RunOutput {
    pub fn new(cfg: &ExperimentConfig, tables: Vec<Table>, registry: &Registry, checks: Vec<Check>) -> Self {
        let experiment = cfg.experiment.as_str().to_string();
        let pass = checks.iter().all(|c| c.pass);
        Self {
            provenance: Provenance {
                schema_version: SCHEMA_VERSION,
                tool: "lrlab",
                version: env!("CARGO_PKG_VERSION"),
                experiment: experiment.clone(),
                seed: cfg.seed,
                dimension_cap: lrlab::fock::dimension_cap(),
                conventions: CONVENTIONS.iter().copied().collect(),
                config: cfg.canonical(),
                constants: registry.entries(),
                tables: tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
            },
            tables,
            certificate: Certificate { schema_version: SCHEMA_VERSION, experiment, pass, checks },
        }
    }

    /// File names and contents, in the order they are written.
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out: Vec<(String, Vec<u8>)> = self.tables.iter().map(|t| (format!("{}.csv", t.name), t.csv.clone())).collect();
        out.push(("provenance.json".into(), pretty_json(&self.provenance)?));
        out.push(("certificate.json".into(), pretty_json(&self.certificate)?));
        Ok(out)
    }

    /// Writes every artifact into `dir`, creating it if needed, and returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        let mut paths = Vec::new();
        for (name, bytes) in self.files()? {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|source| CliError::Write { path: path.clone(), source })?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_reuses_ids() {
        let mut r = Registry::default();
        assert_eq!(r.id("a".into()), "p0");
        assert_eq!(r.id("b".into()), "p1");
        assert_eq!(r.id("a".into()), "p0");
        assert_eq!(r.entries().len(), 2);
    }

    #[test]
    fn checks_compare_in_the_stated_direction() {
        assert!(Check::at_most("x", 1.0, 1.0, "").pass);
        assert!(!Check::at_most("x", 1.1, 1.0, "").pass);
        assert!(Check::at_least("x", 2.0, 1.0, "").pass);
        assert!(!Check::holds("x", false, "").pass);
    }
}

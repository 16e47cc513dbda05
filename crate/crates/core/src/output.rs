//! Result tables: CSV plus a JSON sidecar, both written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension {
                context: "table row",
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    fn check_finite(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "row {i}, column {}",
                    self.columns[k]
                )));
            }
        }
        Ok(())
    }

    /// CSV text; floats use the shortest representation that round-trips.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Data(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))
                .map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Data(format!("csv encoding: {e}")))
    }
}

/// Run metadata stored next to every table.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub scenario: String,
    pub data_file: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub package: &'static str,
    pub version: &'static str,
    pub target_os: &'static str,
    pub target_arch: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            target_os: std::env::consts::OS,
            target_arch: std::env::consts::ARCH,
        }
    }
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Paths written by [`write_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`. Non-finite entries
/// abort before anything touches the disk.
pub fn write_results(dir: &Path, stem: &str, table: &Table, sidecar: &Sidecar) -> Result<Written> {
    table.check_finite()?;
    let csv_bytes = table.to_csv()?;
    let json = serde_json::to_vec_pretty(sidecar)
        .map_err(|e| Error::Data(format!("sidecar encoding: {e}")))?;
    let csv = dir.join(format!("{stem}.csv"));
    let side = dir.join(format!("{stem}.json"));
    write_atomic(&csv, &csv_bytes)?;
    write_atomic(&side, &json)?;
    Ok(Written { csv, sidecar: side })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sidecar(table: &Table) -> Sidecar {
        let config = ScenarioConfig::default();
        Sidecar {
            scenario: "test".into(),
            data_file: "t.csv".into(),
            columns: table.columns().to_vec(),
            rows: table.len(),
            config_sha256: config_hash(&config),
            config,
            seed: 3,
            versions: Versions::default(),
            wall_time_seconds: 0.0,
            summary: None,
        }
    }

    #[test]
    fn empty_table_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::new(["w0", "R"]);
        let w = write_results(dir.path(), "t", &t, &sidecar(&t)).unwrap();
        assert_eq!(std::fs::read_to_string(&w.csv).unwrap(), "w0,R\n");
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&w.sidecar).unwrap()).unwrap();
        assert_eq!(side["rows"], 0);
        assert_eq!(side["seed"], 3);
        assert_eq!(side["config_sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn floats_roundtrip_exactly() {
        let mut t = Table::new(["x", "y"]);
        let vals = [0.1 + 0.2, 1e-300, -2.5e17, std::f64::consts::PI];
        for v in vals {
            t.push(vec![v, -v]).unwrap();
        }
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for (rec, v) in rdr.records().zip(vals) {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<f64>().unwrap(), v);
            assert_eq!(rec[1].parse::<f64>().unwrap(), -v);
        }
        assert!(!text.contains('\r'));
    }

    #[test]
    fn nan_aborts_without_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["a"]);
        t.push(vec![1.0]).unwrap();
        t.push(vec![f64::NAN]).unwrap();
        let err = write_results(dir.path(), "bad", &t, &sidecar(&t)).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn row_width_is_checked() {
        let mut t = Table::new(["a", "b"]);
        assert!(t.push(vec![1.0]).is_err());
    }

    #[test]
    fn hash_tracks_config() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        b.drive.delta_over_gamma += 1e-9;
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let t = Table::new(["a"]);
        let err = write_results(&blocker.join("sub"), "t", &t, &sidecar(&t)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

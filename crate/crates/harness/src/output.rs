//! CSV and JSON emission. Floats are written with 17 significant digits and
//! maps are ordered, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use memopt_core::{EnergyReport, Trajectory};

use crate::error::HarnessError;

pub const TRAJECTORY_HEADER: [&str; 8] = ["t_us", "q_nC_or_x", "R_kOhm", "V_V", "I_mA", "P_mW", "protocol", "regime_valid"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDelta {
    pub method: String,
    pub grid: usize,
    #[serde(rename = "Q_nJ")]
    pub q: f64,
    #[serde(rename = "reference_Q_nJ")]
    pub reference: f64,
    pub relative_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: String,
    pub scenario: String,
    pub config_sha256: String,
    pub grid: usize,
    pub seed: u64,
    pub oracle_enabled: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, Value>,
    pub energy: EnergyReport,
    pub oracle: Vec<OracleDelta>,
    pub metrics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(scenario: &str, grid: usize, seed: u64, oracle_enabled: bool, energy: EnergyReport) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            config_sha256: String::new(),
            grid,
            seed,
            oracle_enabled,
            tolerances: BTreeMap::new(),
            parameters: BTreeMap::new(),
            energy,
            oracle: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn parameter(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.tolerances.insert(key.to_string(), value);
    }

    /// Digest over the canonical parameter set, used when no config file exists.
    pub fn digest_parameters(&mut self) {
        let canonical = serde_json::to_string(&(&self.scenario, &self.parameters, self.grid, self.seed, self.oracle_enabled))
            .expect("parameters serialise");
        self.config_sha256 = sha256_hex(canonical.as_bytes());
    }
}

/// A table with a fixed header, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything a scenario or run writes.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub trajectories: Vec<(String, Trajectory)>,
    pub summary: Summary,
    pub ratios: Option<Table>,
}

pub fn trajectory_table(trajectories: &[(String, Trajectory)]) -> Table {
    let mut table = Table::new(&TRAJECTORY_HEADER);
    for (protocol, traj) in trajectories {
        for j in 0..traj.len() {
            table.push(vec![
                fmt_f64(traj.times()[j]),
                fmt_f64(traj.state()[j]),
                fmt_f64(traj.resistance()[j]),
                fmt_f64(traj.voltage()[j]),
                fmt_f64(traj.current()[j]),
                fmt_f64(traj.power()[j]),
                protocol.clone(),
                traj.regime_valid()[j].to_string(),
            ]);
        }
    }
    table
}

fn write_table(path: &Path, table: &Table) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    write_table(&dir.join("trajectories.csv"), &trajectory_table(&artifacts.trajectories))?;
    if let Some(ratios) = &artifacts.ratios {
        write_table(&dir.join("ratios.csv"), ratios)?;
    }
    let mut json = serde_json::to_string_pretty(&artifacts.summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join("summary.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn trajectory_rows() {
        let traj = Trajectory::valid(vec![0.0, 0.5, 1.0], vec![0.0; 3], vec![2.0; 3], vec![1.0; 3]).unwrap();
        let table = trajectory_table(&[("optimal".to_string(), traj)]);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[1][3], fmt_f64(2.0));
        assert_eq!(table.rows[2][6], "optimal");
        assert_eq!(table.rows[2][7], "true");
    }
}

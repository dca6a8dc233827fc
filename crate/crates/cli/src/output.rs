//! CSV tables and the run manifest.
use std::path::{Path, PathBuf};

use admlab_core::convergence::ConvergenceReport;
use admlab_core::diagnostics::{EnergyRecord, NormTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable that relocates every output directory.
pub const OUTPUT_ROOT_ENV: &str = "ADMLAB_OUTPUT_ROOT";

pub const LEDGER_FILE: &str = "ledger.csv";
pub const NORMS_FILE: &str = "norms.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Relative directories are placed under `$ADMLAB_OUTPUT_ROOT` when it is
/// set, otherwise under the working directory.
pub fn resolve_output_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(configured),
        _ => configured.to_path_buf(),
    }
}

pub fn snapshot_name(step: usize) -> String {
    format!("step_{step:08}.admb")
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct LedgerRow {
    pub time: f64,
    pub energy: f64,
    pub visc_dissipation: f64,
    pub dens_dissipation: f64,
    pub buoyancy_flux: f64,
    pub balance_residual: f64,
}

impl From<&EnergyRecord> for LedgerRow {
    fn from(r: &EnergyRecord) -> Self {
        Self {
            time: r.time,
            energy: r.energy,
            visc_dissipation: r.visc_dissipation,
            dens_dissipation: r.dens_dissipation,
            buoyancy_flux: r.buoyancy_flux,
            balance_residual: r.balance_residual,
        }
    }
}

pub fn write_ledger(path: &Path, records: &[EnergyRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record([
            "time",
            "energy",
            "visc_dissipation",
            "dens_dissipation",
            "buoyancy_flux",
            "balance_residual",
        ])?;
    }
    for r in records {
        w.serialize(LedgerRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ledger(path: &Path) -> csv::Result<Vec<LedgerRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

#[derive(Debug, Serialize)]
struct NormRow<'a> {
    label: &'a str,
    quantity: &'a str,
    space: f64,
    time_norm: String,
    predicted_order: &'a str,
    value: f64,
}

pub fn write_norms(path: &Path, table: &NormTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in &table.entries {
        w.serialize(NormRow {
            label: e.label,
            quantity: e.variable,
            space: e.space,
            time_norm: e.time_norm.to_string(),
            predicted_order: e.order,
            value: e.value,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceRow {
    pub order: usize,
    pub epsilon: f64,
    pub operator_error: f64,
    pub diff_w_l2_h1: f64,
    pub diff_w_linf_h1: f64,
    pub diff_w_l4_h1: f64,
    pub diff_rho_l2_l2: f64,
    pub residual_w_l2: f64,
    pub residual_w_max: f64,
    pub residual_rho_l2: f64,
    pub residual_rho_max: f64,
    pub rho_l2_l2: f64,
}

pub fn convergence_rows(report: &ConvergenceReport) -> Vec<ConvergenceRow> {
    (0..report.orders.len())
        .map(|i| {
            let d = report.pair_differences.get(i).copied().unwrap_or_default();
            let r = report.limit_residuals.get(i).copied().unwrap_or_default();
            let member = report.members.get(i).and_then(|m| m.as_ref());
            ConvergenceRow {
                order: report.orders[i],
                epsilon: report.epsilons[i],
                operator_error: report.operator_errors.get(i).copied().unwrap_or(f64::NAN),
                diff_w_l2_h1: d.w_h1_l2,
                diff_w_linf_h1: d.w_h1_linf,
                diff_w_l4_h1: d.w_h1_l4,
                diff_rho_l2_l2: d.rho_l2_l2,
                residual_w_l2: r.momentum_l2,
                residual_w_max: r.momentum_max,
                residual_rho_l2: r.density_l2,
                residual_rho_max: r.density_max,
                rho_l2_l2: member.map(|m| m.rho_l2_l2).unwrap_or(f64::NAN),
            }
        })
        .collect()
}

pub fn write_convergence(path: &Path, report: &ConvergenceReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in convergence_rows(report) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence(path: &Path) -> csv::Result<Vec<ConvergenceRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    /// "ok" or "failed"
    pub status: String,
    /// "config", "numerical" or "io" when failed
    pub error_category: Option<String>,
    pub error_message: Option<String>,
    /// Outputs were written before a failure and may be truncated.
    pub partial: bool,
    pub steps: usize,
    pub final_time: f64,
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(command: &str, config_text: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(config_text),
            status: "ok".into(),
            error_category: None,
            error_message: None,
            partial: false,
            steps: 0,
            final_time: 0.0,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text)
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        toml::from_str(&text).map_err(std::io::Error::other)
    }
}

pub fn config_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

//! Config-file plumbing: TOML/JSON parsing, panel sources, and the
//! synthetic-panel specification.

use std::path::{Path, PathBuf};

use sdf_core::backtest::SweepConfig;
use sdf_core::features::FeatureSpec;
use sdf_core::metrics::{DEFAULT_GAMMA_GRID, DEFAULT_Q_GRID};
use sdf_core::panel::{load_panel, rank_standardize, synth_panel, LoadOptions, PlantedKernelSpec};
use sdf_core::{CharacteristicPanel, Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Parses TOML or JSON by file extension (anything but `.json` is TOML).
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppConfig {
    pub sweep: SweepConfig,
    pub panel: PanelSource,
}

fn default_cutoff() -> f64 {
    0.30
}
fn default_true() -> bool {
    true
}

/// Where the panel comes from: a CSV file in the panel schema, or a
/// generated synthetic panel with a planted kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelSource {
    pub csv: Option<PathBuf>,
    /// characteristic count, required with `csv`
    pub d: Option<usize>,
    #[serde(default = "default_cutoff")]
    pub missing_cutoff: f64,
    /// rank-standardize characteristics after loading a CSV
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub synth: Option<SynthSpec>,
}

impl PanelSource {
    pub fn materialize(&self) -> Result<CharacteristicPanel> {
        match (&self.csv, &self.synth) {
            (Some(_), Some(_)) => Err(Error::validation(
                "panel: specify either csv or synth, not both",
            )),
            (None, None) => Err(Error::validation("panel: specify csv or synth")),
            (Some(path), None) => {
                let d = self
                    .d
                    .ok_or_else(|| Error::validation("panel: csv source needs d"))?;
                let panel = load_panel(
                    path,
                    &LoadOptions {
                        missing_cutoff: self.missing_cutoff,
                        d,
                    },
                )?;
                Ok(if self.standardize {
                    rank_standardize(&panel)
                } else {
                    panel
                })
            }
            (None, Some(spec)) => Ok(spec.generate()?.0),
        }
    }
}

/// Flat synthetic-panel spec as written in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k_true: usize,
    /// width of the feature space the true kernel lives in
    pub p_space: usize,
    pub d: usize,
    pub bandwidth_grid: Vec<f64>,
    pub signal_scale: f64,
    pub noise_vol: f64,
    pub seed: u64,
    /// total panel length in months
    pub t_total: usize,
    pub n_assets: usize,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<(CharacteristicPanel, ndarray::Array1<f64>)> {
        let spec = PlantedKernelSpec {
            k_true: self.k_true,
            support_space: FeatureSpec {
                p: self.p_space,
                d: self.d,
                bandwidth_grid: self.bandwidth_grid.clone(),
                seed: self.seed,
                draw_index: 0,
            },
            signal_scale: self.signal_scale,
            noise_vol: self.noise_vol,
            seed: self.seed,
        };
        synth_panel(&spec, self.t_total, self.n_assets, self.d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// CSV with columns month, draw, ret (the sweep's returns files)
    pub returns: PathBuf,
    #[serde(default = "q_default")]
    pub q_grid: Vec<f64>,
    #[serde(default = "gamma_default")]
    pub gamma_grid: Vec<f64>,
}

fn q_default() -> Vec<f64> {
    DEFAULT_Q_GRID.to_vec()
}
fn gamma_default() -> Vec<f64> {
    DEFAULT_GAMMA_GRID.to_vec()
}

impl MetricsConfig {
    /// Reads the returns file grouped by draw, draws in ascending order.
    pub fn read_returns(&self) -> Result<Vec<(usize, Vec<f64>)>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&self.returns)?;
        let mut by_draw: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for (i, record) in reader.deserialize::<(u32, usize, f64)>().enumerate() {
            let (_, draw, ret) = record.map_err(|e| Error::Parse {
                line: (i + 2) as u64,
                msg: e.to_string(),
            })?;
            by_draw.entry(draw).or_default().push(ret);
        }
        if by_draw.is_empty() {
            return Err(Error::validation(format!(
                "no return rows in {}",
                self.returns.display()
            )));
        }
        Ok(by_draw.into_iter().collect())
    }
}

//! Run configuration. A single JSON document; CLI flags are applied on top
//! of it with [`Overrides`], so flags win over file values, which win over
//! defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::presets::Preset;
use crate::error::{Error, Result};
use crate::jsa::MIN_GRID_POINTS;
use crate::{DEGENERACY_WAVELENGTH, PUMP_WAVELENGTH};

/// Optional dispersion inputs. `.csv` files are index tables
/// (`omega_rad_per_s,n_eff`), `.json` files are polynomial models.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionPaths {
    pub signal: Option<PathBuf>,
    pub idler: Option<PathBuf>,
    pub pump: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionPaths {
    pub te: Option<PathBuf>,
    pub tm: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub preset: Preset,
    pub dispersion: DispersionPaths,
    /// CSV `z_m,width_m`; replaces the preset width profile.
    pub taper_profile: Option<PathBuf>,
    /// Measured transmission spectra; replace the coupled-mode transmission.
    pub transmission: TransmissionPaths,
    /// Moving-average window for measured spectra, nm. `None` disables smoothing.
    pub smooth_nm: Option<f64>,
    /// m.
    pub pump_wavelength: f64,
    /// Half-span of the signal grid about degeneracy, m.
    pub grid_span: f64,
    pub grid_points: usize,
    /// Rectangular band-pass full width about degeneracy, nm.
    pub filter_nm: Option<f64>,
    /// Adds the α = 1/2 synthetic curve to the HOM report.
    pub anyon_comparison: bool,
    /// Overrides the taper length, m.
    pub taper_length: Option<f64>,
    pub seed: u64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Taper2,
            dispersion: DispersionPaths::default(),
            taper_profile: None,
            transmission: TransmissionPaths::default(),
            smooth_nm: None,
            pump_wavelength: PUMP_WAVELENGTH,
            grid_span: 40e-9,
            grid_points: crate::jsa::DEFAULT_GRID_POINTS,
            filter_nm: None,
            anyon_comparison: false,
            taper_length: None,
            seed: 0,
        }
    }
}

/// Values taken from the command line; `None` leaves the config untouched.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub smooth_nm: Option<f64>,
    pub preset: Option<Preset>,
}

impl DeviceConfig {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    /// Relative paths in the file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: DeviceConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut self.dispersion.signal);
        fix(&mut self.dispersion.idler);
        fix(&mut self.dispersion.pump);
        fix(&mut self.taper_profile);
        fix(&mut self.transmission.te);
        fix(&mut self.transmission.tm);
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid_points {
            self.grid_points = n;
        }
        if let Some(s) = o.smooth_nm {
            self.smooth_nm = Some(s);
        }
        if let Some(p) = o.preset {
            self.preset = p;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "grid_points must be at least {MIN_GRID_POINTS}, got {}",
                self.grid_points
            )));
        }
        if !(self.pump_wavelength > 0.0 && self.pump_wavelength < 2.0 * DEGENERACY_WAVELENGTH) {
            return Err(Error::Config(format!(
                "pump_wavelength {} m is not plausible",
                self.pump_wavelength
            )));
        }
        if !(self.grid_span > 0.0 && self.grid_span < 0.5 * DEGENERACY_WAVELENGTH) {
            return Err(Error::Config(format!(
                "grid_span {} m is not plausible",
                self.grid_span
            )));
        }
        if let Some(s) = self.smooth_nm {
            if !(s > 0.0) {
                return Err(Error::Config("smooth_nm must be positive".into()));
            }
        }
        if let Some(f) = self.filter_nm {
            if !(f > 0.0) {
                return Err(Error::Config("filter_nm must be positive".into()));
            }
        }
        if let Some(l) = self.taper_length {
            if !(l > 0.0) {
                return Err(Error::Config("taper_length must be positive".into()));
            }
        }
        let has_coupler_input = self.taper_profile.is_some() || self.taper_length.is_some();
        if has_coupler_input && !self.preset.is_taper() {
            return Err(Error::Config(
                "taper inputs need a taper preset for the index data".into(),
            ));
        }
        for p in self.input_files() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Every referenced input file, in a fixed order.
    pub fn input_files(&self) -> Vec<&Path> {
        [
            &self.dispersion.signal,
            &self.dispersion.idler,
            &self.dispersion.pump,
            &self.taper_profile,
            &self.transmission.te,
            &self.transmission.tm,
        ]
        .into_iter()
        .filter_map(|p| p.as_deref())
        .collect()
    }
}

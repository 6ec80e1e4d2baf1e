//! Bundled device presets. The three tapers share the AlGaAs width profile
//! and index data; only the silicon destination-guide index differs.
//!
//! The taper constants below are calibration artifacts of a parametric
//! model. They were fitted so the preset family reproduces the qualitative
//! device behaviour and are not measured values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupler::{LocalIndexTable, Polarization, PolarizationData, SpectralCurve, TaperProfile};
use crate::error::{Error, Result};
use crate::{angular_frequency, wavelength_span_to_omega, DEGENERACY_WAVELENGTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Taper1,
    Taper2,
    Taper3,
    Straight,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Taper1, Preset::Taper2, Preset::Taper3, Preset::Straight];
    pub const TAPERS: [Preset; 3] = [Preset::Taper1, Preset::Taper2, Preset::Taper3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Taper1 => "taper1",
            Preset::Taper2 => "taper2",
            Preset::Taper3 => "taper3",
            Preset::Straight => "straight",
        }
    }

    /// Silicon destination-guide width in nm; `None` for the bare source.
    pub fn silicon_width_nm(self) -> Option<f64> {
        match self {
            Preset::Taper1 => Some(550.0),
            Preset::Taper2 => Some(560.0),
            Preset::Taper3 => Some(570.0),
            Preset::Straight => None,
        }
    }

    pub fn is_taper(self) -> bool {
        self != Preset::Straight
    }

    /// Builds the coupler, or `None` for the straight reference.
    pub fn taper(self) -> Result<Option<TaperProfile>> {
        match self.silicon_width_nm() {
            None => Ok(None),
            Some(si) => taper_profile(si, TAPER_LENGTH).map(Some),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}` (taper1, taper2, taper3, straight)")))
    }
}

pub const TAPER_LENGTH: f64 = 800e-6;
pub const PROFILE_SAMPLES: usize = 1025;
pub const WIDTH_START: f64 = 2.0e-6;
pub const WIDTH_END: f64 = 0.6e-6;
/// Width at which both guides are index matched at degeneracy (taper 2, before offset).
pub const WIDTH_MATCH: f64 = 1.3e-6;
/// dn_a/dw, 1/m.
pub const WIDTH_SLOPE: f64 = 0.3 / 1.4e-6;
pub const SILICON_INDEX: f64 = 3.0;

// Width law shape: linear ramp with flattened ends (edge term) and a
// slow-down around the crossing (tanh kink).
const EDGE_WEIGHT: f64 = 15.0;
const EDGE_ORDER: i32 = 3;
const KINK_POSITION: f64 = 0.5;
const KINK_DEPTH: f64 = 1.007;
const KINK_WIDTH: f64 = 0.114;

const KAPPA_TE: f64 = 1.06e4;
const KAPPA_TM: f64 = 1.132e4;
/// Relative group-index mismatch between the guides, times ω0.
const MISMATCH_TE: f64 = 1.009;
const MISMATCH_TM: f64 = 0.9187;
/// Crossing offset at degeneracy, as a wavelength detuning (nm).
const CROSSING_OFFSET_NM: f64 = 11.97;
/// Crossing shift per 10 nm of silicon width, as a wavelength detuning (nm).
const CROSSING_STEP_NM: f64 = 14.87;
/// ω0·dn_a/dω for the AlGaAs guide.
const SOURCE_SLOPE_TE: f64 = 0.10;
const SOURCE_SLOPE_TM: f64 = 0.10 + TM_SLOPE_OFFSET;
/// Calibrated so the taper 1 dip shift is 0.52 ps.
const TM_SLOPE_OFFSET: f64 = -0.3567;

fn shape(s: f64) -> f64 {
    let q = 2 * EDGE_ORDER + 1;
    s + EDGE_WEIGHT * ((2.0 * s - 1.0).powi(q) + 1.0) / (2.0 * q as f64)
        - KINK_DEPTH * KINK_WIDTH * (((s - KINK_POSITION) / KINK_WIDTH).tanh() + (KINK_POSITION / KINK_WIDTH).tanh())
}

/// Normalised width law w(s), s = z/l in [0, 1].
pub fn width_law(s: f64) -> f64 {
    WIDTH_START - (WIDTH_START - WIDTH_END) * shape(s) / shape(1.0)
}

pub fn degeneracy_omega() -> f64 {
    angular_frequency(DEGENERACY_WAVELENGTH)
}

/// Frequency window covered by the bundled index tables.
pub fn table_window() -> (f64, f64) {
    let w0 = degeneracy_omega();
    (0.9 * w0, 1.1 * w0)
}

/// Index data for one polarisation and silicon width.
pub fn polarization_data(pol: Polarization, silicon_width_nm: f64) -> Result<PolarizationData> {
    let w0 = degeneracy_omega();
    let (mismatch, kappa, source_slope, offset_sign) = match pol {
        Polarization::Te => (MISMATCH_TE, KAPPA_TE, SOURCE_SLOPE_TE, 1.0),
        Polarization::Tm => (MISMATCH_TM, KAPPA_TM, SOURCE_SLOPE_TM, -1.0),
    };
    let nm = |v: f64| wavelength_span_to_omega(v * 1e-9, DEGENERACY_WAVELENGTH);
    let crossing = offset_sign * mismatch / w0 * nm(CROSSING_OFFSET_NM);
    // Narrower silicon lowers n_b and moves the crossing to the blue.
    let si_shift = (560.0 - silicon_width_nm) / 10.0 * mismatch / w0 * nm(CROSSING_STEP_NM);
    let (lo, hi) = table_window();
    let omegas: Vec<f64> = (0..=40).map(|k| lo + (hi - lo) * k as f64 / 40.0).collect();
    let widths: Vec<f64> = (0..=16).map(|k| 0.5e-6 + 0.1e-6 * k as f64).collect();
    let n_a = LocalIndexTable::from_fn(widths, omegas.clone(), |w, om| {
        SILICON_INDEX + crossing + WIDTH_SLOPE * (w - WIDTH_MATCH) + source_slope * (om - w0) / w0
    })?;
    let n_b: Vec<f64> = omegas
        .iter()
        .map(|&om| SILICON_INDEX - si_shift + (source_slope + mismatch) * (om - w0) / w0)
        .collect();
    PolarizationData::new(
        n_a,
        SpectralCurve::new(omegas, n_b)?,
        SpectralCurve::constant(kappa, lo, hi)?,
    )
}

pub fn taper_profile(silicon_width_nm: f64, length: f64) -> Result<TaperProfile> {
    TaperProfile::from_width_fn(
        length,
        PROFILE_SAMPLES,
        |z| width_law(z / length),
        polarization_data(Polarization::Te, silicon_width_nm)?,
        polarization_data(Polarization::Tm, silicon_width_nm)?,
    )
}

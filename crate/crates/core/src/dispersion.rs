//! Effective-index models, wavevectors, group velocities and the SPDC phase
//! mismatch.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CubicSpline;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    PumpTe,
    SignalTe,
    SignalTm,
    IdlerTe,
    IdlerTm,
    SiTe,
    SiTm,
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeLabel::PumpTe => "pump_TE",
            ModeLabel::SignalTe => "signal_TE",
            ModeLabel::SignalTm => "signal_TM",
            ModeLabel::IdlerTe => "idler_TE",
            ModeLabel::IdlerTm => "idler_TM",
            ModeLabel::SiTe => "si_TE",
            ModeLabel::SiTm => "si_TM",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub enum IndexRepr {
    /// n(ω) = Σ cₖ (ω − ω_ref)ᵏ
    Polynomial {
        ref_omega: f64,
        coeffs: Vec<f64>,
    },
    Table(CubicSpline),
}

#[derive(Debug, Clone)]
pub struct DispersionModel {
    label: ModeLabel,
    repr: IndexRepr,
    window: (f64, f64),
}

/// On-disk polynomial form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialFile {
    pub ref_omega: f64,
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

const WINDOW_CHECK_SAMPLES: usize = 257;

impl DispersionModel {
    pub fn constant(label: ModeLabel, n: f64, window: (f64, f64)) -> Result<Self> {
        Self::polynomial(label, 0.5 * (window.0 + window.1), vec![n], window)
    }

    pub fn polynomial(label: ModeLabel, ref_omega: f64, coeffs: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) || !ref_omega.is_finite() {
            return Err(Error::InvalidModel(format!(
                "{label}: polynomial needs finite coefficients"
            )));
        }
        Self::checked(label, IndexRepr::Polynomial { ref_omega, coeffs }, window)
    }

    pub fn table(label: ModeLabel, omega: Vec<f64>, n_eff: Vec<f64>) -> Result<Self> {
        if omega.len() < 4 {
            return Err(Error::InvalidModel(format!(
                "{label}: table needs at least 4 rows for cubic interpolation"
            )));
        }
        let window = (omega[0], omega[omega.len() - 1]);
        let spline = CubicSpline::new(omega, n_eff).map_err(|e| Error::InvalidModel(format!("{label}: {e}")))?;
        if spline.values().iter().any(|&n| n < 1.0) {
            return Err(Error::InvalidModel(format!("{label}: table has n_eff < 1")));
        }
        Self::checked(label, IndexRepr::Table(spline), window)
    }

    fn checked(label: ModeLabel, repr: IndexRepr, window: (f64, f64)) -> Result<Self> {
        if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1 && window.0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "{label}: validity window must be finite, positive and ordered"
            )));
        }
        let model = Self { label, repr, window };
        for i in 0..WINDOW_CHECK_SAMPLES {
            let w = window.0 + (window.1 - window.0) * i as f64 / (WINDOW_CHECK_SAMPLES - 1) as f64;
            let n = model.raw_index(w);
            if !(n >= 1.0) {
                return Err(Error::InvalidModel(format!(
                    "{label}: n_eff = {n} < 1 at omega = {w:e}"
                )));
            }
        }
        Ok(model)
    }

    pub fn label(&self) -> ModeLabel {
        self.label
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn repr(&self) -> &IndexRepr {
        &self.repr
    }

    pub fn with_label(mut self, label: ModeLabel) -> Self {
        self.label = label;
        self
    }

    fn raw_index(&self, omega: f64) -> f64 {
        match &self.repr {
            IndexRepr::Polynomial { ref_omega, coeffs } => {
                let d = omega - ref_omega;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * d + c)
            }
            IndexRepr::Table(s) => s.eval(omega),
        }
    }

    fn check(&self, what: &'static str, omega: f64) -> Result<()> {
        if omega >= self.window.0 && omega <= self.window.1 {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: omega,
                lo: self.window.0,
                hi: self.window.1,
            })
        }
    }

    pub fn eval_index(&self, omega: f64) -> Result<f64> {
        self.check("omega", omega)?;
        Ok(self.raw_index(omega))
    }

    /// k = n_eff ω / c.
    pub fn wavevector(&self, omega: f64) -> Result<f64> {
        Ok(self.eval_index(omega)? * omega / SPEED_OF_LIGHT)
    }

    /// Group velocity from a five-point central difference of k(ω), step 10⁻⁶ ω.
    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        Ok(1.0 / self.dk_domega(omega, 1e-6 * omega)?)
    }

    /// Five-point estimate of dk/dω with an explicit step.
    pub fn dk_domega(&self, omega: f64, h: f64) -> Result<f64> {
        self.check("omega - 2h", omega - 2.0 * h)?;
        self.check("omega + 2h", omega + 2.0 * h)?;
        let k = |w: f64| self.raw_index(w) * w / SPEED_OF_LIGHT;
        Ok((k(omega - 2.0 * h) - 8.0 * k(omega - h) + 8.0 * k(omega + h) - k(omega + 2.0 * h)) / (12.0 * h))
    }

    pub fn load_table_csv(label: ModeLabel, path: &Path) -> Result<Self> {
        let rows = crate::workbench::io::read_csv_columns(path, &["omega_rad_per_s", "n_eff"])?;
        for (i, w) in rows.windows(2).enumerate() {
            if !(w[1][0] > w[0][0]) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 3,
                    msg: "omega must be strictly increasing".into(),
                });
            }
        }
        let (omega, n): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r[0], r[1])).unzip();
        Self::table(label, omega, n)
    }

    pub fn load_polynomial_json(label: ModeLabel, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PolynomialFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let window = match file.window {
            Some([lo, hi]) => (lo, hi),
            None => (0.5 * file.ref_omega, 1.5 * file.ref_omega),
        };
        Self::polynomial(label, file.ref_omega, file.coeffs, window)
    }

    /// Serialisable polynomial form, if this model is a polynomial.
    pub fn to_polynomial_file(&self) -> Option<PolynomialFile> {
        match &self.repr {
            IndexRepr::Polynomial { ref_omega, coeffs } => Some(PolynomialFile {
                ref_omega: *ref_omega,
                coeffs: coeffs.clone(),
                window: Some([self.window.0, self.window.1]),
            }),
            IndexRepr::Table(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseMismatchContext {
    pub pump_frequency: f64,
    pub pump: DispersionModel,
    pub signal: DispersionModel,
    pub idler: DispersionModel,
    pub length: f64,
}

impl PhaseMismatchContext {
    pub fn new(
        pump_frequency: f64,
        pump: DispersionModel,
        signal: DispersionModel,
        idler: DispersionModel,
        length: f64,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidModel("crystal length must be positive".into()));
        }
        pump.check("pump frequency", pump_frequency)?;
        signal.check("degenerate signal frequency", 0.5 * pump_frequency)?;
        idler.check("degenerate idler frequency", 0.5 * pump_frequency)?;
        Ok(Self {
            pump_frequency,
            pump,
            signal,
            idler,
            length,
        })
    }

    /// Δk(ω_s) = k_p(ω_p) − k_s(ω_s) − k_i(ω_p − ω_s).
    pub fn phase_mismatch(&self, omega_s: f64) -> Result<f64> {
        let wp = self.pump_frequency;
        Ok(self.pump.wavevector(wp)? - self.signal.wavevector(omega_s)? - self.idler.wavevector(wp - omega_s)?)
    }

    /// The same context with signal and idler models exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            signal: self.idler.clone(),
            idler: self.signal.clone(),
            ..self.clone()
        }
    }
}

/// Default calibrated AlGaAs source models.
///
/// Degeneracy sits at 1560 nm for a 780 nm pump. The TM mode is the slower one
/// by 0.02 in group index, which sets the width of the phase-matching sinc.
pub mod defaults {
    use super::*;
    use crate::{angular_frequency, DEGENERACY_WAVELENGTH, PUMP_WAVELENGTH};

    pub const N_TE: f64 = 3.200;
    pub const N_TM: f64 = 3.205;
    /// ω₀·dn/dω at degeneracy.
    pub const SLOPE_TE: f64 = 0.010;
    pub const SLOPE_TM: f64 = 0.025;
    pub const SOURCE_LENGTH: f64 = 2.0e-3;

    fn omega0() -> f64 {
        angular_frequency(DEGENERACY_WAVELENGTH)
    }

    fn signal_window() -> (f64, f64) {
        (0.85 * omega0(), 1.15 * omega0())
    }

    pub fn signal_te() -> DispersionModel {
        let w0 = omega0();
        DispersionModel::polynomial(ModeLabel::SignalTe, w0, vec![N_TE, SLOPE_TE / w0], signal_window())
            .expect("default model is valid")
    }

    pub fn signal_tm() -> DispersionModel {
        let w0 = omega0();
        DispersionModel::polynomial(ModeLabel::SignalTm, w0, vec![N_TM, SLOPE_TM / w0], signal_window())
            .expect("default model is valid")
    }

    pub fn idler_te() -> DispersionModel {
        signal_te().with_label(ModeLabel::IdlerTe)
    }

    pub fn idler_tm() -> DispersionModel {
        signal_tm().with_label(ModeLabel::IdlerTm)
    }

    /// Pump index fixed in closed form so that Δk vanishes at degeneracy.
    pub fn pump_te() -> DispersionModel {
        let wp = angular_frequency(PUMP_WAVELENGTH);
        let w0 = 0.5 * wp;
        let s = signal_te();
        let i = idler_tm();
        let n_p = (s.eval_index(w0).unwrap() + i.eval_index(w0).unwrap()) * w0 / wp;
        DispersionModel::polynomial(ModeLabel::PumpTe, wp, vec![n_p, 0.05 / wp], (0.95 * wp, 1.05 * wp))
            .expect("default model is valid")
    }

    /// Type-II context: TE-polarised signal, TM-polarised idler.
    pub fn source_context() -> PhaseMismatchContext {
        PhaseMismatchContext::new(
            angular_frequency(PUMP_WAVELENGTH),
            pump_te(),
            signal_te(),
            idler_tm(),
            SOURCE_LENGTH,
        )
        .expect("default context is valid")
    }
}

//! Tapered evanescent coupler: supermodes, transfer phase, coupled-mode
//! propagation, adiabaticity and transmission spectra.
//!
//! Each polarisation is a two-guide problem. The source guide index n_a
//! depends on the local width w(z) and on ω; the destination guide index n_b
//! and the coupling κ depend on ω only.

use std::fmt;

use num_complex::Complex64;
use ode_solvers::dopri5::Dopri5;
use ode_solvers::{OutputType, System, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{lerp_at, simpson, CubicSpline};
use crate::SPEED_OF_LIGHT;

pub const MIN_PROFILE_SAMPLES: usize = 64;
pub const CMT_RTOL: f64 = 1e-11;
pub const CMT_ATOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "TM")]
    Tm,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::Te => "TE",
            Polarization::Tm => "TM",
        })
    }
}

/// A scalar function of ω given as a cubic-interpolated table.
#[derive(Debug, Clone)]
pub struct SpectralCurve {
    spline: CubicSpline,
}

impl SpectralCurve {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return Err(Error::InvalidModel("spectral table needs at least two rows".into()));
        }
        Ok(Self {
            spline: CubicSpline::new(omega, values)?,
        })
    }

    /// Constant value over `[lo, hi]`.
    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value, value])
    }

    pub fn window(&self) -> (f64, f64) {
        (self.spline.lo(), self.spline.hi())
    }

    pub fn omegas(&self) -> &[f64] {
        self.spline.knots()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        let (lo, hi) = self.window();
        if omega < lo || omega > hi {
            return Err(Error::Domain {
                what: "omega",
                value: omega,
                lo,
                hi,
            });
        }
        Ok(self.spline.eval(omega))
    }
}

/// Source-guide local index n_a(w, ω): cubic along ω for every tabulated
/// width, then linear across widths.
#[derive(Debug, Clone)]
pub struct LocalIndexTable {
    widths: Vec<f64>,
    rows: Vec<CubicSpline>,
}

impl LocalIndexTable {
    /// `values[i][j]` is n_a at `widths[i]`, `omegas[j]`.
    pub fn new(widths: Vec<f64>, omegas: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if widths.len() < 2 || omegas.len() < 2 {
            return Err(Error::InvalidModel(
                "local index table needs at least two widths and two frequencies".into(),
            ));
        }
        if widths.windows(2).any(|w| !(w[1] > w[0])) || widths[0] <= 0.0 {
            return Err(Error::InvalidModel(
                "local index table widths must be positive and strictly increasing".into(),
            ));
        }
        if values.len() != widths.len() || values.iter().any(|r| r.len() != omegas.len()) {
            return Err(Error::InvalidModel("local index table is not rectangular".into()));
        }
        let rows = values
            .into_iter()
            .map(|r| CubicSpline::new(omegas.clone(), r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { widths, rows })
    }

    /// Builds the table by sampling `f(w, ω)`.
    pub fn from_fn(widths: Vec<f64>, omegas: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = widths
            .iter()
            .map(|&w| omegas.iter().map(|&o| f(w, o)).collect())
            .collect();
        Self::new(widths, omegas, values)
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn omegas(&self) -> &[f64] {
        self.rows[0].knots()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.rows[0].lo(), self.rows[0].hi())
    }

    pub fn width_range(&self) -> (f64, f64) {
        (self.widths[0], self.widths[self.widths.len() - 1])
    }

    /// n_a at every tabulated width for one frequency.
    pub fn column(&self, omega: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.window();
        if omega < lo || omega > hi {
            return Err(Error::Domain {
                what: "omega",
                value: omega,
                lo,
                hi,
            });
        }
        Ok(self.rows.iter().map(|r| r.eval(omega)).collect())
    }

    pub fn eval(&self, width: f64, omega: f64) -> Result<f64> {
        let col = self.column(omega)?;
        let (lo, hi) = self.width_range();
        lerp_at(&self.widths, &col, width).ok_or(Error::Domain {
            what: "width",
            value: width,
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PolarizationData {
    pub n_a: LocalIndexTable,
    pub n_b: SpectralCurve,
    pub kappa: SpectralCurve,
}

impl PolarizationData {
    pub fn new(n_a: LocalIndexTable, n_b: SpectralCurve, kappa: SpectralCurve) -> Result<Self> {
        if kappa.values().iter().any(|&k| k < 0.0) {
            return Err(Error::InvalidModel("coupling coefficient must be non-negative".into()));
        }
        Ok(Self { n_a, n_b, kappa })
    }

    pub fn window(&self) -> (f64, f64) {
        let a = self.n_a.window();
        let b = self.n_b.window();
        let k = self.kappa.window();
        (a.0.max(b.0).max(k.0), a.1.min(b.1).min(k.1))
    }
}

#[derive(Debug, Clone)]
pub struct TaperProfile {
    length: f64,
    z: Vec<f64>,
    w: Vec<f64>,
    width_spline: CubicSpline,
    te: PolarizationData,
    tm: PolarizationData,
}

impl TaperProfile {
    pub fn new(z: Vec<f64>, w: Vec<f64>, te: PolarizationData, tm: PolarizationData) -> Result<Self> {
        if z.len() < MIN_PROFILE_SAMPLES {
            return Err(Error::InvalidModel(format!(
                "width profile needs at least {MIN_PROFILE_SAMPLES} samples, got {}",
                z.len()
            )));
        }
        if z[0] != 0.0 {
            return Err(Error::InvalidModel("width profile must start at z = 0".into()));
        }
        if w.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidModel("widths must be positive".into()));
        }
        let width_spline = CubicSpline::new(z.clone(), w.clone())?;
        for data in [&te, &tm] {
            let (lo, hi) = data.n_a.width_range();
            if let Some(&bad) = w.iter().find(|&&v| v < lo || v > hi) {
                return Err(Error::Domain {
                    what: "profile width",
                    value: bad,
                    lo,
                    hi,
                });
            }
        }
        Ok(Self {
            length: z[z.len() - 1],
            z,
            w,
            width_spline,
            te,
            tm,
        })
    }

    /// Samples `width(z)` on `n` uniform points over `[0, length]`.
    pub fn from_width_fn(
        length: f64,
        n: usize,
        width: impl Fn(f64) -> f64,
        te: PolarizationData,
        tm: PolarizationData,
    ) -> Result<Self> {
        let z: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    length
                } else {
                    length * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let w = z.iter().map(|&v| width(v)).collect();
        Self::new(z, w, te, tm)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn widths(&self) -> &[f64] {
        &self.w
    }

    pub fn data(&self, pol: Polarization) -> &PolarizationData {
        match pol {
            Polarization::Te => &self.te,
            Polarization::Tm => &self.tm,
        }
    }

    /// Same shape with the z axis stretched to `length`.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidModel("taper length must be positive".into()));
        }
        let s = length / self.length;
        let mut z: Vec<f64> = self.z.iter().map(|v| v * s).collect();
        *z.last_mut().unwrap() = length;
        Self::new(z, self.w.clone(), self.te.clone(), self.tm.clone())
    }

    /// Resamples the width profile (through its spline) on `n` uniform points.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        Self::from_width_fn(
            self.length,
            n,
            |z| self.width_spline.eval(z),
            self.te.clone(),
            self.tm.clone(),
        )
    }

    /// Replaces the per-polarisation data, keeping the width profile.
    pub fn with_data(&self, te: PolarizationData, tm: PolarizationData) -> Result<Self> {
        Self::new(self.z.clone(), self.w.clone(), te, tm)
    }

    pub fn width_at(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.length).contains(&z) {
            return Err(Error::Domain {
                what: "z",
                value: z,
                lo: 0.0,
                hi: self.length,
            });
        }
        Ok(self.width_spline.eval(z))
    }

    fn slice(&self, pol: Polarization, omega: f64) -> Result<Slice<'_>> {
        let d = self.data(pol);
        let column = d.n_a.column(omega)?;
        Ok(Slice {
            profile: self,
            widths: d.n_a.widths(),
            column,
            n_b: d.n_b.eval(omega)?,
            coupling: d.kappa.eval(omega)? * SPEED_OF_LIGHT / omega,
            k0: omega / SPEED_OF_LIGHT,
            omega,
        })
    }
}

/// Everything needed to evaluate one polarisation at one frequency.
struct Slice<'a> {
    profile: &'a TaperProfile,
    widths: &'a [f64],
    column: Vec<f64>,
    n_b: f64,
    /// κc/ω, the coupling expressed as an index.
    coupling: f64,
    k0: f64,
    omega: f64,
}

impl Slice<'_> {
    fn n_a_at_width(&self, w: f64) -> f64 {
        // Profile widths were range-checked at construction; spline overshoot
        // between samples is clamped to the table edge.
        let (lo, hi) = (self.widths[0], self.widths[self.widths.len() - 1]);
        lerp_at(self.widths, &self.column, w.clamp(lo, hi)).unwrap()
    }

    fn detuning(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, self.profile.length);
        self.n_a_at_width(self.profile.width_spline.eval(z)) - self.n_b
    }

    fn detuning_at_nodes(&self) -> Vec<f64> {
        self.profile
            .w
            .iter()
            .map(|&w| self.n_a_at_width(w) - self.n_b)
            .collect()
    }

    /// +1 if the source-localised supermode is the upper branch, -1 otherwise.
    fn source_branch(&self, d0: f64) -> Result<f64> {
        if d0 > 0.0 {
            Ok(1.0)
        } else if d0 < 0.0 {
            Ok(-1.0)
        } else {
            Err(Error::DegenerateCrossing {
                z: 0.0,
                omega: self.omega,
            })
        }
    }
}

/// n± = (n_a+n_b)/2 ± √(((n_a−n_b)/2)² + (κc/ω)²).
pub fn supermode_indices(profile: &TaperProfile, pol: Polarization, z: f64, omega: f64) -> Result<(f64, f64)> {
    let w = profile.width_at(z)?;
    let d = profile.data(pol);
    let n_a = d.n_a.eval(w, omega)?;
    let n_b = d.n_b.eval(omega)?;
    let k = d.kappa.eval(omega)? * SPEED_OF_LIGHT / omega;
    let mean = 0.5 * (n_a + n_b);
    let half = 0.5 * (n_a - n_b);
    let r = half.hypot(k);
    Ok((mean + r, mean - r))
}

/// Transfer phase ϑ(ω) = (ω/c)∫₀ˡ n_follow(z, ω) dz along the supermode branch
/// that starts in the source guide (composite Simpson on the profile samples).
pub fn taper_phase(profile: &TaperProfile, pol: Polarization, omega: f64) -> Result<f64> {
    let s = profile.slice(pol, omega)?;
    let d = s.detuning_at_nodes();
    let branch = s.source_branch(d[0])?;
    if s.coupling == 0.0 {
        if let Some(i) = d.iter().position(|&v| v == 0.0) {
            return Err(Error::DegenerateCrossing { z: profile.z[i], omega });
        }
    }
    let n_follow: Vec<f64> = d
        .iter()
        .map(|&dz| s.n_b + 0.5 * dz + branch * (0.5 * dz).hypot(s.coupling))
        .collect();
    Ok(s.k0 * simpson(&profile.z, &n_follow))
}

/// Amplitudes at z = l for unit input in the source guide.
#[derive(Debug, Clone, Copy)]
pub struct CmtOutput {
    pub destination: Complex64,
    pub source: Complex64,
}

impl CmtOutput {
    pub fn transmission(&self) -> f64 {
        self.destination.norm_sqr()
    }

    pub fn total_power(&self) -> f64 {
        self.destination.norm_sqr() + self.source.norm_sqr()
    }
}

/// Coupled equations in the frame rotating at the mean propagation constant:
/// d/dz [a; b] = i k₀ [[Δ/2, K], [K, −Δ/2]] [a; b], Δ = n_a − n_b, K = κc/ω.
struct CmtSystem<'a> {
    slice: &'a Slice<'a>,
}

impl System<f64, Vector4<f64>> for CmtSystem<'_> {
    fn system(&self, z: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let s = self.slice;
        let hd = 0.5 * s.detuning(z);
        let k = s.coupling;
        // y = [Re a, Im a, Re b, Im b]; multiplying by i maps (re, im) to (-im, re).
        let fa_re = hd * y[0] + k * y[2];
        let fa_im = hd * y[1] + k * y[3];
        let fb_re = k * y[0] - hd * y[2];
        let fb_im = k * y[1] - hd * y[3];
        dy[0] = -s.k0 * fa_im;
        dy[1] = s.k0 * fa_re;
        dy[2] = -s.k0 * fb_im;
        dy[3] = s.k0 * fb_re;
    }
}

/// Integrates the two-guide coupled equations over the taper with adaptive
/// Dormand-Prince 5(4) stepping and returns (B(l), A(l)) for A(0) = 1.
pub fn cmt_transfer(profile: &TaperProfile, pol: Polarization, omega: f64) -> Result<CmtOutput> {
    let s = profile.slice(pol, omega)?;
    let l = profile.length;
    let sys = CmtSystem { slice: &s };
    let y0 = Vector4::new(1.0, 0.0, 0.0, 0.0);
    let mut solver = Dopri5::from_param(
        sys,
        0.0,
        l,
        l,
        y0,
        CMT_RTOL,
        CMT_ATOL,
        0.9,
        0.04,
        0.2,
        10.0,
        l / 64.0,
        0.0,
        10_000_000,
        1000,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| Error::Stiffness {
        omega,
        reason: e.to_string(),
    })?;
    let y = *solver.y_out().last().ok_or_else(|| Error::Stiffness {
        omega,
        reason: "no output".into(),
    })?;
    // Restore the common phase k₀∫(n_a+n_b)/2 dz removed by the rotating frame.
    let mean: Vec<f64> = s.detuning_at_nodes().iter().map(|d| s.n_b + 0.5 * d).collect();
    let common = Complex64::from_polar(1.0, s.k0 * simpson(&profile.z, &mean));
    Ok(CmtOutput {
        destination: Complex64::new(y[2], y[3]) * common,
        source: Complex64::new(y[0], y[1]) * common,
    })
}

/// max_z |dθ/dz| / Δβ with θ = ½ atan2(2κc/ω, n_a − n_b) and Δβ = (n₊ − n₋)ω/c.
pub fn adiabaticity_score(profile: &TaperProfile, pol: Polarization, omega: f64) -> Result<f64> {
    let s = profile.slice(pol, omega)?;
    if s.coupling == 0.0 {
        return Ok(0.0);
    }
    let l = profile.length;
    let h = 1e-6 * l;
    let local = |z: f64| -> f64 {
        let (za, zb) = ((z - h).max(0.0), (z + h).min(l));
        let dd = (s.detuning(zb) - s.detuning(za)) / (zb - za);
        let d = s.detuning(z);
        let g2 = d * d + 4.0 * s.coupling * s.coupling;
        // |dθ/dz| = K|Δ'|/(Δ² + 4K²), divided by k₀√(Δ² + 4K²).
        s.coupling * dd.abs() / (g2 * g2.sqrt() * s.k0)
    };
    let n = 8 * profile.z.len();
    let dz = l / n as f64;
    let (mut best_i, mut best) = (0, f64::MIN);
    for i in 0..=n {
        let v = local(i as f64 * dz);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement inside the neighbouring cells.
    let (mut a, mut b) = (((best_i as f64) - 1.0).max(0.0) * dz, ((best_i + 1) as f64 * dz).min(l));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (local(c), local(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = local(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = local(d);
        }
    }
    Ok(best.max(fc).max(fd))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    MeasuredFile { path: String },
    Simulated,
    Synthetic { note: String },
}

#[derive(Debug, Clone)]
pub struct TransmissionSpectrum {
    pub polarization: Polarization,
    omega: Vec<f64>,
    t: Vec<f64>,
    pub provenance: Provenance,
}

impl TransmissionSpectrum {
    pub fn new(polarization: Polarization, omega: Vec<f64>, t: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if omega.len() != t.len() || omega.is_empty() {
            return Err(Error::InvalidModel(
                "transmission grid and values differ in length".into(),
            ));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel(
                "transmission grid must be strictly increasing".into(),
            ));
        }
        if let Some(v) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidModel(format!("transmission value {v} outside [0, 1]")));
        }
        Ok(Self {
            polarization,
            omega,
            t,
            provenance,
        })
    }

    pub fn flat(polarization: Polarization, lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(polarization, vec![lo, hi], vec![value, value], Provenance::Simulated)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn window(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }

    /// Linear interpolation; frequencies outside the grid are a coverage error.
    pub fn at(&self, omega: f64) -> Result<f64> {
        lerp_at(&self.omega, &self.t, omega).ok_or_else(|| {
            Error::Coverage(format!(
                "{} transmission covers [{:e}, {:e}] rad/s, requested {omega:e}",
                self.polarization,
                self.omega[0],
                self.omega[self.omega.len() - 1]
            ))
        })
    }

    /// Widest contiguous band with T > `threshold` containing `omega`, as
    /// (lo, hi) in rad/s, using linear crossings between samples.
    pub fn band_above(&self, threshold: f64, omega: f64) -> Option<(f64, f64)> {
        let i = self.omega.partition_point(|&w| w <= omega).checked_sub(1)?;
        if i + 1 >= self.omega.len() || self.t[i] <= threshold || self.t[i + 1] <= threshold {
            return None;
        }
        let cross = |a: usize, b: usize| {
            let f = (threshold - self.t[a]) / (self.t[b] - self.t[a]);
            self.omega[a] + f * (self.omega[b] - self.omega[a])
        };
        let mut lo = i;
        while lo > 0 && self.t[lo - 1] > threshold {
            lo -= 1;
        }
        let mut hi = i + 1;
        while hi + 1 < self.omega.len() && self.t[hi + 1] > threshold {
            hi += 1;
        }
        let lo_w = if lo == 0 { self.omega[0] } else { cross(lo - 1, lo) };
        let hi_w = if hi + 1 == self.omega.len() {
            self.omega[hi]
        } else {
            cross(hi, hi + 1)
        };
        Some((lo_w, hi_w))
    }
}

/// T(ω) = |B(l)|² from `cmt_transfer` at every grid frequency.
pub fn transmission_spectrum(profile: &TaperProfile, pol: Polarization, grid: &[f64]) -> Result<TransmissionSpectrum> {
    let t = grid
        .par_iter()
        .map(|&w| cmt_transfer(profile, pol, w).map(|o| o.transmission().min(1.0)))
        .collect::<Result<Vec<_>>>()?;
    TransmissionSpectrum::new(pol, grid.to_vec(), t, Provenance::Simulated)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W0: f64 = 1.2e15;

    fn omegas() -> Vec<f64> {
        vec![0.9 * W0, 0.95 * W0, W0, 1.05 * W0, 1.1 * W0]
    }

    /// n_a = n0 + slope·(w − w_mid), everything else constant.
    fn data(n0: f64, slope: f64, n_b: f64, kappa: f64) -> PolarizationData {
        let widths = vec![0.4e-6, 1.0e-6, 1.6e-6, 2.2e-6];
        let n_a = LocalIndexTable::from_fn(widths, omegas(), |w, _| n0 + slope * (w - 1.3e-6)).unwrap();
        PolarizationData::new(
            n_a,
            SpectralCurve::constant(n_b, 0.9 * W0, 1.1 * W0).unwrap(),
            SpectralCurve::constant(kappa, 0.9 * W0, 1.1 * W0).unwrap(),
        )
        .unwrap()
    }

    fn uniform(l: f64, w: f64, d: PolarizationData) -> TaperProfile {
        TaperProfile::from_width_fn(l, 129, |_| w, d.clone(), d).unwrap()
    }

    fn linear(l: f64, d: PolarizationData) -> TaperProfile {
        TaperProfile::from_width_fn(l, 257, |z| 2.0e-6 - 1.4e-6 * z / l, d.clone(), d).unwrap()
    }

    #[test]
    fn decoupled_supermodes_are_guide_indices() {
        let p = uniform(1e-4, 1.6e-6, data(3.1, 0.3e6, 3.0, 0.0));
        let (np, nm) = supermode_indices(&p, Polarization::Te, 5e-5, W0).unwrap();
        let n_a = 3.1 + 0.3e6 * 0.3e-6;
        assert!((np - n_a).abs() < 1e-14 && (nm - 3.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_coupler_splitting() {
        let kappa = 0.01 * W0 / SPEED_OF_LIGHT;
        let p = uniform(1e-4, 1.3e-6, data(3.0, 0.0, 3.0, kappa));
        let (np, nm) = supermode_indices(&p, Polarization::Tm, 0.0, W0).unwrap();
        assert!((np - 3.01).abs() < 1e-12 && (nm - 2.99).abs() < 1e-12);
    }

    #[test]
    fn supermodes_match_eigenvalue_oracle() {
        let kappa = 2e4;
        let p = linear(8e-4, data(3.0, 0.2e6, 3.02, kappa));
        let z = 3.3e-4;
        let w = p.width_at(z).unwrap();
        let na = 3.0 + 0.2e6 * (w - 1.3e-6);
        let k = kappa * SPEED_OF_LIGHT / W0;
        // Eigenvalues of [[na, k], [k, 3.02]] from the characteristic polynomial.
        let tr = na + 3.02;
        let det = na * 3.02 - k * k;
        let disc = (tr * tr / 4.0 - det).sqrt();
        let (np, nm) = supermode_indices(&p, Polarization::Te, z, W0).unwrap();
        assert!((np - (tr / 2.0 + disc)).abs() < 1e-12);
        assert!((nm - (tr / 2.0 - disc)).abs() < 1e-12);
    }

    #[test]
    fn uniform_uncoupled_phase() {
        let l = 5e-4;
        let p = uniform(l, 1.3e-6, data(3.2, 0.0, 3.0, 0.0));
        let th = taper_phase(&p, Polarization::Te, W0).unwrap();
        let want = 3.2 * W0 * l / SPEED_OF_LIGHT;
        assert!((th / want - 1.0).abs() < 1e-13);
    }

    #[test]
    fn piecewise_phase() {
        // Two plateaus joined by a steep but resolved ramp; n_b below n_a throughout.
        let l = 4e-4;
        let d = data(3.0, 0.5e6, 2.0, 0.0);
        let p =
            TaperProfile::from_width_fn(l, 4001, |z| if z <= 0.5 * l { 1.6e-6 } else { 1.0e-6 }, d.clone(), d).unwrap();
        let n0 = 3.0 + 0.5e6 * 0.3e-6;
        let n1 = 3.0 - 0.5e6 * 0.3e-6;
        let th = taper_phase(&p, Polarization::Te, W0).unwrap();
        let want = W0 / SPEED_OF_LIGHT * (n0 + n1) * l / 2.0;
        assert!((th / want - 1.0).abs() < 1e-4);
    }

    #[test]
    fn degenerate_start_is_an_error() {
        let p = uniform(1e-4, 1.3e-6, data(3.0, 0.0, 3.0, 0.0));
        assert!(matches!(
            taper_phase(&p, Polarization::Te, W0),
            Err(Error::DegenerateCrossing { .. })
        ));
    }

    #[test]
    fn no_coupling_no_transfer() {
        let p = linear(8e-4, data(3.0, 0.2e6, 3.0, 0.0));
        let o = cmt_transfer(&p, Polarization::Te, W0).unwrap();
        assert!(o.destination.norm() < 1e-15);
        assert!((o.source.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synchronous_coupler_follows_sin_squared() {
        let kappa = 3e3;
        for l in [1e-4, 3.3e-4, 5.2e-4, 9e-4] {
            let p = uniform(l, 1.3e-6, data(3.1, 0.0, 3.1, kappa));
            let o = cmt_transfer(&p, Polarization::Te, W0).unwrap();
            let want = (kappa * l).sin().powi(2);
            assert!(
                (o.transmission() - want).abs() < 1e-8,
                "l = {l}: {} vs {want}",
                o.transmission()
            );
            assert!((o.total_power() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn power_conserved_through_crossing() {
        let p = linear(8e-4, data(3.0, 0.25e6, 3.0, 1.1e4));
        for f in [0.97, 1.0, 1.03] {
            let o = cmt_transfer(&p, Polarization::Tm, f * W0).unwrap();
            assert!((o.total_power() - 1.0).abs() < 1e-8, "{}", o.total_power());
        }
    }

    #[test]
    fn decoupled_score_is_zero() {
        let p = linear(8e-4, data(3.0, 0.25e6, 3.0, 0.0));
        assert_eq!(adiabaticity_score(&p, Polarization::Te, W0).unwrap(), 0.0);
    }

    #[test]
    fn linear_crossing_score_matches_closed_form() {
        let l = 8e-4;
        let slope = 0.25e6;
        let kappa = 6e3;
        let p = linear(l, data(3.0, slope, 3.0, kappa));
        // Δ(z) = slope·(w(z) − 1.3 µm) with dw/dz = −1.4 µm / l.
        let alpha = slope * 1.4e-6 / l;
        let k0 = W0 / SPEED_OF_LIGHT;
        let kk = kappa / k0;
        let want = alpha / (8.0 * kk * kk * k0);
        let got = adiabaticity_score(&p, Polarization::Te, W0).unwrap();
        assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn flat_transmission_band() {
        let t = TransmissionSpectrum::new(
            Polarization::Te,
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.2, 0.6, 0.8, 0.6, 0.2],
            Provenance::Simulated,
        )
        .unwrap();
        let (lo, hi) = t.band_above(0.5, 2.0).unwrap();
        assert!((lo - 0.75).abs() < 1e-12 && (hi - 3.25).abs() < 1e-12);
        assert!(t.at(5.0).is_err());
    }

    #[test]
    fn transmission_range_checked() {
        assert!(
            TransmissionSpectrum::new(Polarization::Te, vec![0.0, 1.0], vec![0.5, 1.2], Provenance::Simulated).is_err()
        );
    }
}

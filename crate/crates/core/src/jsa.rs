//! One-dimensional joint spectral amplitude under a monochromatic pump, and
//! the amplitude/phase transformations applied by the coupler.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupler::{Polarization, TransmissionSpectrum};
use crate::dispersion::PhaseMismatchContext;
use crate::error::{Error, Result};
use crate::numerics::{trapezoid_uniform, unwrap_forward};
use crate::workbench::io;

pub const MIN_GRID_POINTS: usize = 2048;
pub const DEFAULT_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolAssignment {
    /// Polarisation of the signal arm (u).
    pub signal: Polarization,
    /// Polarisation of the idler arm (v).
    pub idler: Polarization,
}

impl Default for PolAssignment {
    fn default() -> Self {
        Self {
            signal: Polarization::Te,
            idler: Polarization::Tm,
        }
    }
}

/// Uniform signal-frequency grid symmetric about ω_p/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalGrid {
    pub pump_frequency: f64,
    pub half_width: f64,
    pub points: usize,
}

impl SignalGrid {
    pub fn new(pump_frequency: f64, half_width: f64, points: usize) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "signal grid needs at least {MIN_GRID_POINTS} points, got {points}"
            )));
        }
        if !(half_width > 0.0 && half_width < 0.5 * pump_frequency) {
            return Err(Error::Config("grid half width must lie in (0, ω_p/2)".into()));
        }
        Ok(Self {
            pump_frequency,
            half_width,
            points,
        })
    }

    /// ±`span` in wavelength about the degenerate wavelength 4πc/ω_p.
    pub fn from_wavelength_span(pump_frequency: f64, span: f64, points: usize) -> Result<Self> {
        let lambda0 = 4.0 * std::f64::consts::PI * crate::SPEED_OF_LIGHT / pump_frequency;
        let lo = crate::angular_frequency(lambda0 + span);
        let hi = crate::angular_frequency(lambda0 - span);
        Self::new(pump_frequency, 0.5 * (hi - lo), points)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn center(&self) -> f64 {
        0.5 * self.pump_frequency
    }

    /// ω_j = ω_p/2 + (j − (N−1)/2)·δω, so that ω_{N−1−j} = ω_p − ω_j.
    pub fn omegas(&self) -> Vec<f64> {
        let c = self.center();
        let h = self.step();
        let mid = 0.5 * (self.points - 1) as f64;
        (0..self.points).map(|j| c + (j as f64 - mid) * h).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BiphotonSpectrum {
    grid: SignalGrid,
    omega: Vec<f64>,
    amplitude: Vec<Complex64>,
    norm: f64,
    pub pol: PolAssignment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub pump_frequency: f64,
    pub norm: f64,
    pub pol_assignment: PolAssignment,
}

impl BiphotonSpectrum {
    pub fn new(grid: SignalGrid, amplitude: Vec<Complex64>, pol: PolAssignment) -> Result<Self> {
        if amplitude.len() != grid.points {
            return Err(Error::InvalidModel("amplitude length differs from grid".into()));
        }
        if amplitude.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidModel("amplitude contains non-finite values".into()));
        }
        let omega = grid.omegas();
        let norm = Self::integrate_norm(&grid, &amplitude);
        Ok(Self {
            grid,
            omega,
            amplitude,
            norm,
            pol,
        })
    }

    pub fn from_fn(grid: SignalGrid, pol: PolAssignment, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amp = grid.omegas().into_iter().map(f).collect();
        Self::new(grid, amp, pol)
    }

    fn integrate_norm(grid: &SignalGrid, amp: &[Complex64]) -> f64 {
        let p: Vec<f64> = amp.iter().map(|a| a.norm_sqr()).collect();
        trapezoid_uniform(grid.step(), &p)
    }

    pub fn grid(&self) -> &SignalGrid {
        &self.grid
    }

    pub fn pump_frequency(&self) -> f64 {
        self.grid.pump_frequency
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn mirror(&self, j: usize) -> usize {
        self.len() - 1 - j
    }

    fn with_amplitude(&self, amplitude: Vec<Complex64>) -> Self {
        let norm = Self::integrate_norm(&self.grid, &amplitude);
        Self {
            grid: self.grid,
            omega: self.omega.clone(),
            amplitude,
            norm,
            pol: self.pol,
        }
    }

    /// Copy scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.norm > 0.0) {
            return Err(Error::InvalidModel("state has zero norm".into()));
        }
        let s = 1.0 / self.norm.sqrt();
        Ok(self.with_amplitude(self.amplitude.iter().map(|a| a * s).collect()))
    }

    /// Pointwise multiplication by a sampled factor.
    pub fn scaled_by(&self, factor: impl Fn(usize, f64) -> Complex64) -> Self {
        let amp = self
            .amplitude
            .iter()
            .zip(&self.omega)
            .enumerate()
            .map(|(j, (a, &w))| a * factor(j, w))
            .collect();
        self.with_amplitude(amp)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<[f64; 3]> = self
            .omega
            .iter()
            .zip(&self.amplitude)
            .map(|(w, a)| [*w, a.re, a.im])
            .collect();
        io::write_csv_rows(path, &["omega_s_rad_per_s", "re_phi", "im_phi"], &rows)
    }

    pub fn sidecar(&self) -> SpectrumSidecar {
        SpectrumSidecar {
            pump_frequency: self.pump_frequency(),
            norm: self.norm,
            pol_assignment: self.pol,
        }
    }

    pub fn read_csv(path: &Path, sidecar: &SpectrumSidecar) -> Result<Self> {
        let rows = io::read_csv_columns(path, &["omega_s_rad_per_s", "re_phi", "im_phi"])?;
        if rows.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "state file has fewer than two rows".into(),
            });
        }
        let half = 0.5 * (rows[rows.len() - 1][0] - rows[0][0]);
        let grid = SignalGrid::new(sidecar.pump_frequency, half, rows.len())?;
        let omegas = grid.omegas();
        for (i, (r, w)) in rows.iter().zip(&omegas).enumerate() {
            if (r[0] - w).abs() > 1e-9 * w {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    msg: "grid is not uniform and symmetric about ω_p/2".into(),
                });
            }
        }
        let amp = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
        Self::new(grid, amp, sidecar.pol_assignment)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// φ(ω_s) ∝ e^{iΔkL/2} sinc(ΔkL/2) / √(v_g^s(ω_s) v_g^i(ω_p − ω_s)), unit norm.
pub fn build_source_jsa(ctx: &PhaseMismatchContext, grid: SignalGrid) -> Result<BiphotonSpectrum> {
    if (grid.pump_frequency - ctx.pump_frequency).abs() > 1e-12 * ctx.pump_frequency {
        return Err(Error::Config("grid and context disagree on the pump frequency".into()));
    }
    let wp = ctx.pump_frequency;
    let half_l = 0.5 * ctx.length;
    let amp = grid
        .omegas()
        .into_iter()
        .map(|ws| {
            let x = ctx.phase_mismatch(ws)? * half_l;
            let vs = ctx.signal.group_velocity(ws)?;
            let vi = ctx.idler.group_velocity(wp - ws)?;
            Ok(Complex64::from_polar(sinc(x) / (vs * vi).sqrt(), x))
        })
        .collect::<Result<Vec<_>>>()?;
    BiphotonSpectrum::new(grid, amp, PolAssignment::default())?.normalized()
}

/// |φ'(ω_s)|² = |φ(ω_s)|² T_u(ω_s) T_v(ω_p − ω_s); the norm is not restored.
pub fn apply_transmission(
    state: &BiphotonSpectrum,
    t_u: &TransmissionSpectrum,
    t_v: &TransmissionSpectrum,
) -> Result<BiphotonSpectrum> {
    let wp = state.pump_frequency();
    let factors = state
        .omega()
        .iter()
        .map(|&w| Ok((t_u.at(w)? * t_v.at(wp - w)?).sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(state.scaled_by(|j, _| Complex64::new(factors[j], 0.0)))
}

/// φ'(ω_s) = φ(ω_s) e^{i[ϑ_u(ω_s) + ϑ_v(ω_p − ω_s)]}.
pub fn apply_coupler_phase<F, G>(state: &BiphotonSpectrum, theta_u: F, theta_v: G) -> Result<BiphotonSpectrum>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    let wp = state.pump_frequency();
    let phases = state
        .omega()
        .iter()
        .map(|&w| Ok(theta_u(w)? + theta_v(wp - w)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(apply_phase_samples(state, &phases))
}

/// Multiplies by e^{iϑ_j} with ϑ sampled on the state grid.
pub fn apply_phase_samples(state: &BiphotonSpectrum, phase: &[f64]) -> BiphotonSpectrum {
    assert_eq!(phase.len(), state.len());
    state.scaled_by(|j, _| Complex64::from_polar(1.0, phase[j]))
}

#[derive(Debug, Clone)]
pub struct DeltaTheta {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// Indices where φ vanishes and the value was interpolated.
    pub masked: Vec<usize>,
}

/// Δϑ(ω_s) = arg φ(ω_s) − arg φ(ω_p − ω_s), unwrapped outward from ω_p/2.
pub fn delta_theta(state: &BiphotonSpectrum) -> DeltaTheta {
    let n = state.len();
    let amp = state.amplitude();
    let scale = amp.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let tiny = 1e-300_f64.max(scale * 1e-150);
    let masked: Vec<usize> = (0..n)
        .filter(|&j| amp[j].norm() <= tiny || amp[n - 1 - j].norm() <= tiny)
        .collect();
    let mut is_masked = vec![false; n];
    for &j in &masked {
        is_masked[j] = true;
    }
    // Upper half, starting at the first point at or above ω_p/2.
    let start = n / 2;
    let mut upper: Vec<f64> = (start..n)
        .map(|j| {
            if is_masked[j] {
                f64::NAN
            } else {
                (amp[j] * amp[n - 1 - j].conj()).arg()
            }
        })
        .collect();
    fill_masked(&mut upper);
    unwrap_forward(&mut upper);
    let mut values = vec![0.0; n];
    for (k, j) in (start..n).enumerate() {
        values[j] = upper[k];
        values[n - 1 - j] = -upper[k];
    }
    DeltaTheta {
        omega: state.omega().to_vec(),
        values,
        masked,
    }
}

/// Replaces NaN entries by linear interpolation between valid neighbours
/// (constant extrapolation at the ends; zero if nothing is valid).
fn fill_masked(v: &mut [f64]) {
    let valid: Vec<usize> = (0..v.len()).filter(|&i| !v[i].is_nan()).collect();
    if valid.is_empty() {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    for i in 0..v.len() {
        if !v[i].is_nan() {
            continue;
        }
        let p = valid.partition_point(|&k| k < i);
        v[i] = match (p.checked_sub(1).map(|q| valid[q]), valid.get(p)) {
            (Some(a), Some(&b)) => v[a] + (v[b] - v[a]) * (i - a) as f64 / (b - a) as f64,
            (Some(a), None) => v[a],
            (None, Some(&b)) => v[b],
            (None, None) => 0.0,
        };
    }
}

/// ϑ(ω_s) ≈ ϑ₀ + β⁽¹⁾x + β⁽²⁾x² + β⁽³⁾x³ with x = ω_p/2 − ω_s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCoefficients {
    pub theta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl PhaseCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        self.theta0 + x * (self.beta1 + x * (self.beta2 + x * self.beta3))
    }
}

/// Unwrapped arg φ anchored at the grid point nearest ω_p/2.
pub fn unwrapped_phase(state: &BiphotonSpectrum) -> Vec<f64> {
    let n = state.len();
    let amp = state.amplitude();
    let anchor = n / 2;
    let mut up: Vec<f64> = amp[anchor..].iter().map(|a| a.arg()).collect();
    unwrap_forward(&mut up);
    let mut down: Vec<f64> = amp[..=anchor].iter().rev().map(|a| a.arg()).collect();
    unwrap_forward(&mut down);
    let mut out = vec![0.0; n];
    for (k, v) in up.iter().enumerate() {
        out[anchor + k] = *v;
    }
    for (k, v) in down.iter().enumerate() {
        out[anchor - k] = *v;
    }
    out
}

/// |φ|²-weighted least-squares cubic fit of the unwrapped phase within
/// |ω_s − ω_p/2| ≤ `half_window`.
pub fn fit_phase_polynomial(state: &BiphotonSpectrum, half_window: f64) -> Result<PhaseCoefficients> {
    let center = 0.5 * state.pump_frequency();
    if half_window > state.grid().half_width * (1.0 + 1e-12) {
        return Err(Error::Fit("window extends beyond the grid".into()));
    }
    let phase = unwrapped_phase(state);
    let idx: Vec<usize> = (0..state.len())
        .filter(|&j| (state.omega()[j] - center).abs() <= half_window && state.amplitude()[j].norm() > 0.0)
        .collect();
    if idx.len() < 4 {
        return Err(Error::Fit(format!("{} usable points in window, need 4", idx.len())));
    }
    // Scaled abscissa keeps the normal matrix well conditioned.
    let xs = half_window;
    let mut a = DMatrix::<f64>::zeros(idx.len(), 4);
    let mut b = DVector::<f64>::zeros(idx.len());
    for (r, &j) in idx.iter().enumerate() {
        let x = (center - state.omega()[j]) / xs;
        let sw = state.amplitude()[j].norm();
        let mut p = 1.0;
        for c in 0..4 {
            a[(r, c)] = sw * p;
            p *= x;
        }
        b[r] = sw * phase[j];
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s <= 1e-13 * smax) {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let coef = svd.solve(&b, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    Ok(PhaseCoefficients {
        theta0: coef[0],
        beta1: coef[1] / xs,
        beta2: coef[2] / (xs * xs),
        beta3: coef[3] / (xs * xs * xs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular_frequency;
    use crate::coupler::Provenance;

    fn grid() -> SignalGrid {
        SignalGrid::new(angular_frequency(780e-9), 3e13, 2048).unwrap()
    }

    fn flat() -> BiphotonSpectrum {
        BiphotonSpectrum::from_fn(grid(), PolAssignment::default(), |_| Complex64::new(1.0, 0.0))
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn grid_is_mirror_symmetric() {
        let g = grid();
        let w = g.omegas();
        let n = w.len();
        for j in [0, 1, 700, n / 2] {
            assert!((w[j] + w[n - 1 - j] - g.pump_frequency).abs() <= 4.0 * f64::EPSILON * g.pump_frequency);
        }
    }

    #[test]
    fn small_grids_rejected() {
        assert!(SignalGrid::new(2e15, 1e13, 1000).is_err());
    }

    #[test]
    fn norm_is_trapezoid_of_intensity() {
        let s = BiphotonSpectrum::from_fn(grid(), PolAssignment::default(), |w| {
            Complex64::new((w * 1e-13).cos(), 0.3)
        })
        .unwrap();
        let p: Vec<f64> = s.amplitude().iter().map(|a| a.norm_sqr()).collect();
        let t = trapezoid_uniform(s.grid().step(), &p);
        assert!((s.norm() / t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_transmission_is_identity() {
        let s = flat();
        let g = s.grid();
        let t = TransmissionSpectrum::flat(
            Polarization::Te,
            g.center() - g.half_width,
            g.center() + g.half_width,
            1.0,
        )
        .unwrap();
        let out = apply_transmission(&s, &t, &t).unwrap();
        assert!((out.norm() - s.norm()).abs() < 1e-14);
    }

    #[test]
    fn flat_attenuation() {
        let s = flat();
        let g = s.grid();
        let t = TransmissionSpectrum::flat(
            Polarization::Te,
            g.center() - g.half_width,
            g.center() + g.half_width,
            0.8,
        )
        .unwrap();
        let out = apply_transmission(&s, &t, &t).unwrap();
        assert!((out.norm() / s.norm() - 0.64).abs() < 1e-12);
        for (a, b) in out.amplitude().iter().zip(s.amplitude()) {
            assert!((a.norm_sqr() - 0.64 * b.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn transmission_must_cover_grid() {
        let s = flat();
        let g = s.grid();
        let t = TransmissionSpectrum::flat(
            Polarization::Te,
            g.center() - 0.5 * g.half_width,
            g.center() + g.half_width,
            1.0,
        )
        .unwrap();
        assert!(matches!(apply_transmission(&s, &t, &t), Err(Error::Coverage(_))));
    }

    #[test]
    fn rectangular_transmission_norm_ratio() {
        let s = flat();
        let g = *s.grid();
        let h = g.step();
        // Edges placed midway between samples so the sampled rectangle has
        // exactly m points inside; its trapezoid weight is m·h.
        let m = 600usize;
        let half = 0.5 * m as f64 * h;
        let omega: Vec<f64> = vec![
            g.center() - g.half_width,
            g.center() - half - 1e-6 * h,
            g.center() - half + 1e-6 * h,
            g.center() + half - 1e-6 * h,
            g.center() + half + 1e-6 * h,
            g.center() + g.half_width,
        ];
        let t = TransmissionSpectrum::new(
            Polarization::Te,
            omega,
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
            Provenance::Simulated,
        )
        .unwrap();
        let out = apply_transmission(&s, &t, &t).unwrap();
        let want = 2.0 * half / (2.0 * g.half_width);
        assert!((out.norm() / s.norm() - want).abs() < 1e-6, "{} vs {want}", out.norm());
    }

    #[test]
    fn zero_phase_is_identity() {
        let s = flat();
        let out = apply_coupler_phase(&s, |_| Ok(0.0), |_| Ok(0.0)).unwrap();
        assert_eq!(out.amplitude(), s.amplitude());
    }

    #[test]
    fn linear_phase_keeps_modulus() {
        let s = flat();
        let a = 3e-13;
        let out = apply_coupler_phase(&s, |w| Ok(a * w), |_| Ok(0.0)).unwrap();
        assert!((out.norm() - s.norm()).abs() < 1e-12 * s.norm());
        for (j, (x, y)) in out.amplitude().iter().zip(s.amplitude()).enumerate() {
            assert!((x.norm() - y.norm()).abs() < 1e-14);
            let want = Complex64::from_polar(y.norm(), a * s.omega()[j]);
            assert!((x - want).norm() < 1e-12);
        }
    }

    #[test]
    fn real_state_has_zero_delta_theta() {
        let d = delta_theta(&flat());
        assert!(d.values.iter().all(|v| v.abs() < 1e-15));
        assert!(d.masked.is_empty());
    }

    #[test]
    fn even_phase_cancels_and_linear_doubles() {
        let s = flat();
        let c = 0.5 * s.pump_frequency();
        let b2 = 2e-27;
        let even = apply_phase_samples(&s, &s.omega().iter().map(|w| b2 * (c - w).powi(2)).collect::<Vec<_>>());
        assert!(delta_theta(&even).values.iter().all(|v| v.abs() < 1e-9));
        let b1 = 0.4e-12;
        let lin = apply_phase_samples(&s, &s.omega().iter().map(|w| b1 * (c - w)).collect::<Vec<_>>());
        let d = delta_theta(&lin);
        for (w, v) in s.omega().iter().zip(&d.values) {
            assert!((v - 2.0 * b1 * (c - w)).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn cubic_phase_recovered_by_fit() {
        let s = flat();
        let c = 0.5 * s.pump_frequency();
        let truth = PhaseCoefficients {
            theta0: 0.3,
            beta1: 0.5e-12,
            beta2: -2e-27,
            beta3: 4e-40,
        };
        let st = apply_phase_samples(&s, &s.omega().iter().map(|w| truth.eval(c - w)).collect::<Vec<_>>());
        let fit = fit_phase_polynomial(&st, 2.5e13).unwrap();
        assert!((fit.theta0 - truth.theta0).abs() < 1e-8 * truth.theta0.abs());
        assert!((fit.beta1 / truth.beta1 - 1.0).abs() < 1e-8);
        assert!((fit.beta2 / truth.beta2 - 1.0).abs() < 1e-8);
        assert!((fit.beta3 / truth.beta3 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_phase_fit_is_zero() {
        let fit = fit_phase_polynomial(&flat(), 2e13).unwrap();
        assert!(fit.theta0.abs() < 1e-12);
        assert!((fit.beta1 * 1e13).abs() < 1e-12);
        assert!((fit.beta2 * 1e26).abs() < 1e-12);
        assert!((fit.beta3 * 1e39).abs() < 1e-12);
    }

    #[test]
    fn tiny_window_is_rank_deficient() {
        let s = flat();
        assert!(matches!(
            fit_phase_polynomial(&s, 1.2 * s.grid().step()),
            Err(Error::Fit(_))
        ));
    }
}

//! Hong-Ou-Mandel interferograms and their analysis: visibility, dip shift,
//! exchange-asymmetry score, band-pass filtering and anyonic target phases.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::BiphotonSpectrum;
use crate::numerics::{lerp_at, parabolic_vertex, trapezoid_uniform};
use crate::workbench::io;

pub const MIN_DELAY_POINTS: usize = 1024;
pub const DEFAULT_DELAY_POINTS: usize = 2049;
pub const DEFAULT_DELAY_HALF_SPAN: f64 = 6e-12;

/// Uniform delay grid symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    pub half_span: f64,
    pub points: usize,
}

impl Default for DelayGrid {
    fn default() -> Self {
        Self {
            half_span: DEFAULT_DELAY_HALF_SPAN,
            points: DEFAULT_DELAY_POINTS,
        }
    }
}

impl DelayGrid {
    pub fn new(half_span: f64, points: usize) -> Result<Self> {
        if points < MIN_DELAY_POINTS || !(half_span > 0.0) {
            return Err(Error::Config(format!(
                "delay grid needs ≥ {MIN_DELAY_POINTS} points and a positive span"
            )));
        }
        Ok(Self { half_span, points })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_span / (self.points - 1) as f64
    }

    pub fn delays(&self) -> Vec<f64> {
        let h = self.step();
        let mid = 0.5 * (self.points - 1) as f64;
        (0..self.points).map(|i| (i as f64 - mid) * h).collect()
    }
}

#[derive(Debug, Clone)]
pub struct HomInterferogram {
    pub tau: Vec<f64>,
    pub pc: Vec<f64>,
    pub baseline: f64,
}

/// Fraction of the delay grid (split between both ends) used for the baseline.
pub const BASELINE_FRACTION: f64 = 0.10;

pub(crate) fn baseline_of(pc: &[f64]) -> f64 {
    let k = ((pc.len() as f64 * BASELINE_FRACTION * 0.5).round() as usize).max(1);
    let n = pc.len();
    (pc[..k].iter().sum::<f64>() + pc[n - k..].iter().sum::<f64>()) / (2 * k) as f64
}

impl HomInterferogram {
    pub fn from_samples(tau: Vec<f64>, pc: Vec<f64>) -> Self {
        let baseline = baseline_of(&pc);
        Self { tau, pc, baseline }
    }

    pub fn step(&self) -> f64 {
        self.tau[1] - self.tau[0]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<[f64; 2]> = self.tau.iter().zip(&self.pc).map(|(t, p)| [*t, *p]).collect();
        io::write_csv_rows(path, &["tau_s", "P_c"], &rows)
    }
}

/// φ(ω_s)φ*(ω_p − ω_s) for the normalised state, with trapezoid weights folded in.
pub(crate) fn overlap_kernel(state: &BiphotonSpectrum) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let s = state.normalized()?;
    let n = s.len();
    let h = s.grid().step();
    let amp = s.amplitude();
    let c = 0.5 * s.pump_frequency();
    let kernel = (0..n)
        .map(|j| {
            let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
            amp[j] * amp[n - 1 - j].conj() * w
        })
        .collect();
    // ω_p − 2ω_s
    let detuning = s.omega().iter().map(|w| 2.0 * (c - w)).collect();
    Ok((kernel, detuning))
}

/// I(τ) = ∫ φ(ω_s)φ*(ω_p−ω_s) e^{i(ω_p−2ω_s)τ} dω_s and optionally dI/dτ.
pub(crate) fn overlap_integral(kernel: &[Complex64], detuning: &[f64], tau: f64) -> (Complex64, Complex64) {
    let mut i = Complex64::new(0.0, 0.0);
    let mut di = Complex64::new(0.0, 0.0);
    for (k, &d) in kernel.iter().zip(detuning) {
        let (s, c) = (d * tau).sin_cos();
        let t = k * Complex64::new(c, s);
        i += t;
        di += t * Complex64::new(0.0, d);
    }
    (i, di)
}

/// P_c(τ) = ½(1 − Re ∫ φ(ω_s)φ*(ω_p−ω_s) e^{i(ω_p−2ω_s)τ} dω_s) for the
/// normalised state.
pub fn coincidence_curve(state: &BiphotonSpectrum, delays: &[f64]) -> Result<HomInterferogram> {
    let (kernel, det) = overlap_kernel(state)?;
    let pc = delays
        .par_iter()
        .map(|&t| {
            let p = 0.5 * (1.0 - overlap_integral(&kernel, &det, t).0.re);
            if p < 0.0 && p > -1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect();
    Ok(HomInterferogram::from_samples(delays.to_vec(), pc))
}

/// Dip position and depth refined by a parabola through the discrete minimum.
pub fn dip_location(curve: &HomInterferogram) -> Result<(f64, f64)> {
    let n = curve.pc.len();
    let (i, _) = curve
        .pc
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::NoDip)?;
    if i == 0 || i == n - 1 {
        return Err(Error::NoDip);
    }
    let (d, v) = parabolic_vertex(curve.pc[i - 1], curve.pc[i], curve.pc[i + 1]);
    Ok((curve.tau[i] + d * curve.step(), v))
}

/// Difference of refined dip positions, `curve` minus `reference`.
pub fn dip_shift(curve: &HomInterferogram, reference: &HomInterferogram) -> Result<f64> {
    if curve.tau.len() != reference.tau.len()
        || curve
            .tau
            .iter()
            .zip(&reference.tau)
            .any(|(a, b)| (a - b).abs() > 1e-9 * curve.step())
    {
        return Err(Error::Config("dip shift needs curves on the same delay grid".into()));
    }
    Ok(dip_location(curve)?.0 - dip_location(reference)?.0)
}

/// V = (baseline − min P_c)/baseline.
pub fn visibility(curve: &HomInterferogram) -> Result<f64> {
    let (_, min) = dip_location(curve)?;
    Ok(((curve.baseline - min) / curve.baseline).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    /// Integrand uses g = P_c − baseline, centred on the centroid of g².
    #[default]
    BaselineSubtracted,
    /// Integrand uses raw P_c, centred on the dip.
    Raw,
}

/// S = √(∫¼[g(τ)−g(−τ)]²dτ) / √(∫g(τ)²dτ) after re-centring.
pub fn asymmetry_score(curve: &HomInterferogram) -> Result<f64> {
    asymmetry_score_with(curve, ScoreVariant::BaselineSubtracted)
}

pub fn asymmetry_score_with(curve: &HomInterferogram, variant: ScoreVariant) -> Result<f64> {
    let h = curve.step();
    let (g, center) = match variant {
        ScoreVariant::BaselineSubtracted => {
            let g: Vec<f64> = curve.pc.iter().map(|p| p - curve.baseline).collect();
            let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
            let mass = trapezoid_uniform(h, &g2);
            if !(mass > 0.0) {
                return Err(Error::UndefinedScore);
            }
            let first: Vec<f64> = g2.iter().zip(&curve.tau).map(|(a, t)| a * t).collect();
            (g, trapezoid_uniform(h, &first) / mass)
        }
        ScoreVariant::Raw => (curve.pc.clone(), dip_location(curve)?.0),
    };
    let at = |t: f64| lerp_at(&curve.tau, &g, t).unwrap_or(0.0);
    let mut odd = Vec::with_capacity(g.len());
    let mut even = Vec::with_capacity(g.len());
    for &t in &curve.tau {
        let plus = at(center + t);
        let minus = at(center - t);
        odd.push(0.25 * (plus - minus).powi(2));
        even.push(plus * plus);
    }
    let den = trapezoid_uniform(h, &even);
    if !(den > 0.0) {
        return Err(Error::UndefinedScore);
    }
    Ok((trapezoid_uniform(h, &odd) / den).sqrt().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub center: f64,
    pub full_width: f64,
}

impl SpectralFilter {
    pub fn rectangular(center: f64, full_width: f64) -> Result<Self> {
        if !(full_width > 0.0) {
            return Err(Error::Config("filter width must be positive".into()));
        }
        Ok(Self { center, full_width })
    }
}

/// Zeroes φ outside center ± full_width/2.
pub fn apply_bandpass(state: &BiphotonSpectrum, filter: &SpectralFilter) -> Result<BiphotonSpectrum> {
    let lo = filter.center - 0.5 * filter.full_width;
    let hi = filter.center + 0.5 * filter.full_width;
    let w = state.omega();
    let tol = 1e-9 * state.grid().step();
    if lo < w[0] - tol || hi > w[w.len() - 1] + tol {
        return Err(Error::FilterSupport { lo, hi });
    }
    Ok(state.scaled_by(|_, om| {
        if om >= lo - tol && om <= hi + tol {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// ϑ(ω_s) = sign(ω_p − 2ω_s)·απ/2, zero at exact degeneracy.
pub fn anyonic_phase(alpha: f64, pump_frequency: f64) -> impl Fn(f64) -> f64 + Copy {
    move |ws: f64| {
        let d = pump_frequency - 2.0 * ws;
        if d == 0.0 {
            0.0
        } else {
            d.signum() * alpha * std::f64::consts::FRAC_PI_2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomReport {
    pub visibility: f64,
    pub dip_shift_s: f64,
    pub asymmetry_score: f64,
    pub baseline: f64,
}

pub fn analyze(curve: &HomInterferogram, reference: Option<&HomInterferogram>) -> Result<HomReport> {
    Ok(HomReport {
        visibility: visibility(curve)?,
        dip_shift_s: match reference {
            Some(r) => dip_shift(curve, r)?,
            None => dip_location(curve)?.0,
        },
        asymmetry_score: asymmetry_score(curve)?,
        baseline: curve.baseline,
    })
}

//! Quantum and classical Fisher information for delay estimation with a HOM
//! interferometer.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hom::{baseline_of, overlap_integral, overlap_kernel};
use crate::jsa::BiphotonSpectrum;
use crate::numerics::{bisect, parabolic_vertex, trapezoid_uniform};
use crate::workbench::io;

/// Points with P_c(1 − P_c) below this are masked in the Fisher information.
pub const FI_MASK_THRESHOLD: f64 = 1e-12;
pub const GAMMA_MODEL: &str = "uniform-contrast";

/// QFI = 4·Var(ω_s) under |φ|²/norm.
pub fn qfi(state: &BiphotonSpectrum) -> Result<f64> {
    if !(state.norm() > 0.0) {
        return Err(Error::InvalidModel("state has zero norm".into()));
    }
    let h = state.grid().step();
    let p: Vec<f64> = state.amplitude().iter().map(|a| a.norm_sqr()).collect();
    let mass = trapezoid_uniform(h, &p);
    // Moments about the grid centre keep the subtraction well conditioned.
    let c = 0.5 * state.pump_frequency();
    let m1: Vec<f64> = p.iter().zip(state.omega()).map(|(q, w)| q * (w - c)).collect();
    let m2: Vec<f64> = p
        .iter()
        .zip(state.omega())
        .map(|(q, w)| q * (w - c) * (w - c))
        .collect();
    let mean = trapezoid_uniform(h, &m1) / mass;
    let var = trapezoid_uniform(h, &m2) / mass - mean * mean;
    Ok(4.0 * var.max(0.0))
}

#[derive(Debug, Clone)]
pub struct FisherCurve {
    pub tau: Vec<f64>,
    pub pc: Vec<f64>,
    pub dpc: Vec<f64>,
    /// `None` where P_c(1 − P_c) falls below the mask threshold.
    pub fi: Vec<Option<f64>>,
}

impl FisherCurve {
    pub fn max_fi(&self) -> f64 {
        self.fi.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// FI(τ) = (∂P_c/∂τ)² / (P_c(1 − P_c)) with ∂P_c/∂τ evaluated analytically.
pub fn fisher_information(state: &BiphotonSpectrum, delays: &[f64]) -> Result<FisherCurve> {
    fisher_with_contrast(state, delays, 1.0)
}

/// FI for the contrast-degraded curve P_c^γ = ½(1 − γ Re I(τ)).
pub fn fisher_with_contrast(state: &BiphotonSpectrum, delays: &[f64], gamma: f64) -> Result<FisherCurve> {
    let (kernel, det) = overlap_kernel(state)?;
    let rows: Vec<(f64, f64)> = delays
        .par_iter()
        .map(|&t| {
            let (i, di) = overlap_integral(&kernel, &det, t);
            (0.5 * (1.0 - gamma * i.re), -0.5 * gamma * di.re)
        })
        .collect();
    let (pc, dpc): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let fi = pc
        .iter()
        .zip(&dpc)
        .map(|(&p, &d)| {
            let den = p * (1.0 - p);
            (den >= FI_MASK_THRESHOLD).then(|| d * d / den)
        })
        .collect();
    Ok(FisherCurve {
        tau: delays.to_vec(),
        pc,
        dpc,
        fi,
    })
}

fn visibility_of(pc: &[f64]) -> Result<f64> {
    let n = pc.len();
    let (i, _) = pc
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::NoDip)?;
    if i == 0 || i == n - 1 {
        return Err(Error::NoDip);
    }
    let (_, min) = parabolic_vertex(pc[i - 1], pc[i], pc[i + 1]);
    let b = baseline_of(pc);
    Ok((b - min) / b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub visibility: f64,
    pub gamma: f64,
    pub ratio: f64,
}

/// For each target visibility, the contrast γ is found by bisection and the
/// ratio max FI / QFI is reported.
pub fn scaling_curve(state: &BiphotonSpectrum, visibilities: &[f64], delays: &[f64]) -> Result<Vec<ScalingPoint>> {
    let q = qfi(state)?;
    let (kernel, det) = overlap_kernel(state)?;
    let re_i: Vec<f64> = delays
        .par_iter()
        .map(|&t| overlap_integral(&kernel, &det, t).0.re)
        .collect();
    let curve = |g: f64| -> Vec<f64> { re_i.iter().map(|r| 0.5 * (1.0 - g * r)).collect() };
    let v_max = visibility_of(&curve(1.0))?;
    visibilities
        .par_iter()
        .map(|&v| {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("target visibility {v} outside (0, 1]")));
            }
            if v > v_max + 1e-12 {
                return Err(Error::Convergence(format!(
                    "visibility {v} unreachable: state reaches at most {v_max:.6}"
                )));
            }
            let gamma = if (v - v_max).abs() <= 1e-12 {
                1.0
            } else {
                bisect(|g| visibility_of(&curve(g)).unwrap_or(0.0) - v, 1e-9, 1.0, 1e-14)?
            };
            let achieved = visibility_of(&curve(gamma))?;
            if (achieved - v).abs() > 1e-6 {
                return Err(Error::Convergence(format!(
                    "contrast bisection reached V = {achieved}, wanted {v}"
                )));
            }
            let fc = fisher_with_contrast(state, delays, gamma)?;
            Ok(ScalingPoint {
                visibility: v,
                gamma,
                ratio: fc.max_fi() / q,
            })
        })
        .collect()
}

/// Visibility of the undegraded interferogram on `delays`.
pub fn max_visibility(state: &BiphotonSpectrum, delays: &[f64]) -> Result<f64> {
    let (kernel, det) = overlap_kernel(state)?;
    let pc: Vec<f64> = delays
        .par_iter()
        .map(|&t| 0.5 * (1.0 - overlap_integral(&kernel, &det, t).0.re))
        .collect();
    visibility_of(&pc)
}

/// The scaling point reached by a given contrast γ instead of a target V.
pub fn contrast_point(state: &BiphotonSpectrum, gamma: f64, delays: &[f64]) -> Result<ScalingPoint> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("contrast {gamma} outside (0, 1]")));
    }
    let fc = fisher_with_contrast(state, delays, gamma)?;
    Ok(ScalingPoint {
        visibility: visibility_of(&fc.pc)?,
        gamma,
        ratio: fc.max_fi() / qfi(state)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetrologyReport {
    pub qfi_s2: f64,
    pub max_fi_s2: f64,
    pub ratio: f64,
    pub visibility: f64,
    pub gamma_model: String,
}

pub fn report(state: &BiphotonSpectrum, delays: &[f64]) -> Result<MetrologyReport> {
    let q = qfi(state)?;
    let f = fisher_information(state, delays)?;
    let max_fi = f.max_fi();
    Ok(MetrologyReport {
        qfi_s2: q,
        max_fi_s2: max_fi,
        ratio: max_fi / q,
        visibility: visibility_of(&f.pc)?,
        gamma_model: GAMMA_MODEL.to_string(),
    })
}

pub fn write_scaling_csv(path: &Path, points: &[ScalingPoint]) -> Result<()> {
    let rows: Vec<[f64; 2]> = points.iter().map(|p| [p.visibility, p.ratio]).collect();
    io::write_csv_rows(path, &["V", "ratio"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular_frequency;
    use crate::hom::{coincidence_curve, DelayGrid};
    use crate::jsa::{apply_phase_samples, PolAssignment, SignalGrid};
    use num_complex::Complex64;

    fn grid(half: f64) -> SignalGrid {
        SignalGrid::new(angular_frequency(780e-9), half, 4096).unwrap()
    }

    #[test]
    fn uniform_spectrum_qfi() {
        // Full support width W is the trapezoid-weighted span of the sampled band.
        let g = grid(3e13);
        let w = 2e13;
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = om - g.center();
            Complex64::new(if x.abs() <= 0.5 * w { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        // Discrete oracle: variance of the equally weighted interior samples.
        let xs: Vec<f64> = s
            .omega()
            .iter()
            .map(|om| om - g.center())
            .filter(|x| x.abs() <= 0.5 * w)
            .collect();
        let m = xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / m - (xs.iter().sum::<f64>() / m).powi(2);
        let q = qfi(&s).unwrap();
        assert!((q / (4.0 * var) - 1.0).abs() < 1e-12);
        let h = g.step();
        let w_eff = m * h;
        assert!((q / (w_eff * w_eff / 3.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_qfi() {
        let g = grid(3e13);
        let sigma = 4e12;
        // |φ|² Gaussian of standard deviation σ.
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = om - g.center() - 1e12;
            Complex64::new((-x * x / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap();
        assert!((qfi(&s).unwrap() / (4.0 * sigma * sigma) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn qfi_ignores_phase() {
        let g = grid(3e13);
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = (om - g.center()) / 1e13;
            Complex64::new((-x * x).exp() * (1.0 + 0.3 * x), 0.0)
        })
        .unwrap();
        let ph: Vec<f64> = s
            .omega()
            .iter()
            .map(|om| 1e-26 * (om - g.center()).powi(2) + 3.0 * (om * 1e-13).sin())
            .collect();
        let t = apply_phase_samples(&s, &ph);
        assert!((qfi(&t).unwrap() / qfi(&s).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        let g = grid(3e13);
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = (om - g.center()) / 1e13;
            Complex64::from_polar((-x * x).exp(), 0.4 * x * x * x + 0.2 * x)
        })
        .unwrap();
        let d = DelayGrid::new(1e-12, 1025).unwrap().delays();
        let f = fisher_information(&s, &d).unwrap();
        let width = 1e-13;
        let h = 1e-3 * width;
        for (k, &t) in d.iter().enumerate().step_by(16) {
            let p = coincidence_curve(&s, &[t - h, t + h]).unwrap();
            let fd = (p.pc[1] - p.pc[0]) / (2.0 * h);
            let scale = f.dpc.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(
                (f.dpc[k] - fd).abs() <= 1e-4 * fd.abs().max(1e-3 * scale),
                "tau {t}: {} vs {fd}",
                f.dpc[k]
            );
        }
    }

    #[test]
    fn symmetric_state_fi_vanishes_at_dip_and_tails() {
        let g = grid(3e13);
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = (om - g.center()) / 1e13;
            Complex64::new((-x * x).exp(), 0.0)
        })
        .unwrap();
        let d = DelayGrid::new(3e-12, 1025).unwrap().delays();
        let f = fisher_information(&s, &d).unwrap();
        let mid = d.len() / 2;
        assert!(f.fi[mid].is_none() || f.fi[mid].unwrap() < 1e-3 * f.max_fi());
        assert!(f.fi[0].unwrap_or(0.0) < 1e-6 * f.max_fi());
        assert!(f.max_fi() <= qfi(&s).unwrap() * (1.0 + 1e-6));
    }

    #[test]
    fn flat_state_reaches_optimal_scaling() {
        let g = grid(3e13);
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |_| Complex64::new(1.0, 0.0)).unwrap();
        let d = DelayGrid::default().delays();
        let pts = scaling_curve(&s, &[1.0, 0.8, 0.5], &d).unwrap();
        assert!((pts[0].ratio - 1.0).abs() < 0.05);
        for p in &pts {
            assert!(p.ratio <= p.visibility * p.visibility + 1e-3, "{p:?}");
        }
    }

    #[test]
    fn unreachable_visibility_is_convergence_error() {
        let g = grid(3e13);
        let s = BiphotonSpectrum::from_fn(g, PolAssignment::default(), |om| {
            let x = (om - g.center()) / 1e13;
            Complex64::from_polar(1.0, 2.0 * x * x * x)
        })
        .unwrap();
        let d = DelayGrid::default().delays();
        assert!(matches!(scaling_curve(&s, &[1.0], &d), Err(Error::Convergence(_))));
    }
}

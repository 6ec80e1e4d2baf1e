//! Figure reproduction runs and the sweep commands behind them. Each run
//! writes its manifest first and removes its outputs if it fails.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::config::DeviceConfig;
use super::io::{self, Outputs};
use super::manifest::{RunManifest, MANIFEST_FILE};
use super::pipeline::{
    anyonic_state, couple, filter_for, run_pipeline, signal_grid, source_context, sweep_taper_length, taper_for,
    transmission_pair, write_length_csv, Stage,
};
use super::presets::Preset;
use crate::counts::{self, CountsScenario};
use crate::error::{Error, Result};
use crate::hom::{analyze, apply_bandpass, coincidence_curve, DelayGrid, HomInterferogram, HomReport};
use crate::jsa::{build_source_jsa, delta_theta, fit_phase_polynomial, BiphotonSpectrum, PhaseCoefficients};
use crate::metrology::{self, ScalingPoint};
use crate::{wavelength_span_to_omega, DEGENERACY_WAVELENGTH, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig1c,
    Fig3,
    Fig4a,
    Fig4c,
    Fig4d,
    Fig4e,
    Fig4f,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig1c,
        FigureId::Fig3,
        FigureId::Fig4a,
        FigureId::Fig4c,
        FigureId::Fig4d,
        FigureId::Fig4e,
        FigureId::Fig4f,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1c => "fig1c",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4c => "fig4c",
            FigureId::Fig4d => "fig4d",
            FigureId::Fig4e => "fig4e",
            FigureId::Fig4f => "fig4f",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure `{s}`")))
    }
}

/// Filter widths (nm) of the band-pass study; `None` is the unfiltered curve.
pub const FILTER_STUDY_NM: [Option<f64>; 6] = [None, Some(50.0), Some(40.0), Some(30.0), Some(20.0), Some(10.0)];
pub const LENGTH_STUDY_UM: [f64; 10] = [300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0, 1100.0, 1200.0];
/// Half window of the cubic phase fit, nm.
pub const PHASE_FIT_HALF_WINDOW_NM: f64 = 20.0;

fn begin(
    out: &mut Outputs<'_>,
    command: &str,
    config: &DeviceConfig,
    params: serde_json::Value,
    files: &[&str],
) -> Result<()> {
    let m = RunManifest::new(command, config, params, files.iter().map(|s| s.to_string()).collect())?;
    out.put(MANIFEST_FILE, |p| io::write_json(p, &m))
}

fn with_preset(config: &DeviceConfig, preset: Preset) -> DeviceConfig {
    DeviceConfig {
        preset,
        taper_profile: None,
        transmission: Default::default(),
        ..config.clone()
    }
}

fn curves_csv(path: &Path, names: &[String], curves: &[&HomInterferogram]) -> Result<()> {
    let mut header = vec!["tau_s".to_string()];
    header.extend(names.iter().cloned());
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..curves[0].tau.len())
        .map(|i| {
            let mut r = vec![curves[0].tau[i]];
            r.extend(curves.iter().map(|c| c.pc[i]));
            r
        })
        .collect();
    io::write_csv_rows(path, &refs, &rows)
}

/// Counts-versus-power sweep. The scenario's own seed is used as given.
pub fn counts_sweep(
    config: &DeviceConfig,
    scenario: &CountsScenario,
    powers: &[f64],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let scn = *scenario;
    let params = serde_json::json!({ "scenario": scn, "powers_mw": powers });
    io::staged(Some(dir), |out| {
        begin(out, "counts-sweep", config, params, &["counts.csv", "scenario.json"])?;
        let rows = counts::power_sweep(&scn, powers)?;
        out.put("counts.csv", |p| counts::write_sweep_csv(p, &rows))?;
        out.put("scenario.json", |p| io::write_json(p, &scn))
    })
    .map(|r| r.1)
}

/// Taper-length sweep on the configured preset.
pub fn taper_sweep(config: &DeviceConfig, lengths: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    let params = serde_json::json!({ "lengths_m": lengths });
    io::staged(Some(dir), |out| {
        begin(out, "sweep-taper", config, params, &["length_sweep.csv"])?;
        let rows = sweep_taper_length(config, lengths)?;
        out.put("length_sweep.csv", |p| write_length_csv(p, &rows))
    })
    .map(|r| r.1)
}

/// Final state of the configured device (source, coupler, optional filter).
pub fn device_state(config: &DeviceConfig) -> Result<BiphotonSpectrum> {
    let a = run_pipeline(config, &[Stage::Source, Stage::Couple, Stage::Filter], None)?;
    Ok(a.final_state().expect("source stage ran").clone())
}

/// Visibility grid 0.05, 0.10, … capped at the state's own visibility, which
/// is appended as the last point.
pub fn reachable_grid(v_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=20)
        .map(|k| 0.05 * k as f64)
        .filter(|v| *v < v_max - 1e-9)
        .collect();
    g.push(v_max);
    g
}

#[derive(Debug, Clone, Serialize)]
struct ScalingSummary {
    preset: String,
    report: metrology::MetrologyReport,
    points: Vec<ScalingPoint>,
}

fn scaling_for(config: &DeviceConfig, grid: Option<&[f64]>) -> Result<ScalingSummary> {
    let state = device_state(config)?;
    let delays = DelayGrid::default().delays();
    let v_max = metrology::max_visibility(&state, &delays)?;
    let owned;
    let vs = match grid {
        Some(g) => g,
        None => {
            owned = reachable_grid(v_max);
            &owned
        }
    };
    Ok(ScalingSummary {
        preset: config.preset.name().to_string(),
        report: metrology::report(&state, &delays)?,
        points: metrology::scaling_curve(&state, vs, &delays)?,
    })
}

/// max FI / QFI versus visibility for the configured device.
pub fn scaling(config: &DeviceConfig, grid: Option<&[f64]>, dir: &Path) -> Result<Vec<PathBuf>> {
    let params = serde_json::json!({ "visibilities": grid });
    io::staged(Some(dir), |out| {
        begin(out, "scaling", config, params, &["scaling.csv", "metrology.json"])?;
        let s = scaling_for(config, grid)?;
        out.put("scaling.csv", |p| metrology::write_scaling_csv(p, &s.points))?;
        out.put("metrology.json", |p| io::write_json(p, &s))
    })
    .map(|r| r.1)
}

#[derive(Debug, Clone, Serialize)]
struct NamedReport {
    name: String,
    filter_nm: Option<f64>,
    report: HomReport,
}

#[derive(Debug, Clone, Serialize)]
struct PhaseFit {
    half_window_nm: f64,
    /// β coefficients in s^k about ω_p/2, x = ω_p/2 − ω_s.
    coefficients: PhaseCoefficients,
}

pub fn run_figure(id: FigureId, config: &DeviceConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let command = format!("fig {id}");
    let params = serde_json::json!({ "figure": id.name() });
    let delays = DelayGrid::default().delays();
    io::staged(Some(dir), |out| match id {
        FigureId::Fig1c => {
            begin(
                out,
                &command,
                config,
                params,
                &["fig1c_counts.csv", "fig1c_scenario.json"],
            )?;
            let scn = CountsScenario {
                rng_seed: config.seed,
                ..CountsScenario::default()
            };
            let rows = counts::power_sweep(&scn, &counts::defaults::SWEEP_POWERS)?;
            out.put("fig1c_counts.csv", |p| counts::write_sweep_csv(p, &rows))?;
            out.put("fig1c_scenario.json", |p| io::write_json(p, &scn))
        }
        FigureId::Fig3 => {
            begin(
                out,
                &command,
                config,
                params,
                &["fig3_spectra.csv", "fig3_phase_fit.json"],
            )?;
            let a = run_pipeline(config, &[Stage::Source, Stage::Couple], None)?;
            let src = a.source.as_ref().expect("source ran").normalized()?;
            let cpl = a.coupled.as_ref().expect("couple ran").normalized()?;
            let dt = delta_theta(&cpl);
            let rows: Vec<[f64; 5]> = (0..src.len())
                .map(|j| {
                    let w = src.omega()[j];
                    [
                        w,
                        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / w * 1e9,
                        src.amplitude()[j].norm_sqr(),
                        cpl.amplitude()[j].norm_sqr(),
                        dt.values[j],
                    ]
                })
                .collect();
            out.put("fig3_spectra.csv", |p| {
                io::write_csv_rows(
                    p,
                    &[
                        "omega_s_rad_per_s",
                        "wavelength_nm",
                        "source_jsi",
                        "coupled_jsi",
                        "delta_theta_rad",
                    ],
                    &rows,
                )
            })?;
            let hw = wavelength_span_to_omega(PHASE_FIT_HALF_WINDOW_NM * 1e-9, DEGENERACY_WAVELENGTH);
            let fit = PhaseFit {
                half_window_nm: PHASE_FIT_HALF_WINDOW_NM,
                coefficients: fit_phase_polynomial(&cpl, hw)?,
            };
            out.put("fig3_phase_fit.json", |p| io::write_json(p, &fit))
        }
        FigureId::Fig4a => {
            begin(out, &command, config, params, &["fig4a_hom.csv", "fig4a_reports.json"])?;
            let mut curves = Vec::new();
            let mut reports = Vec::new();
            for p in Preset::ALL {
                let a = run_pipeline(
                    &with_preset(config, p),
                    &[Stage::Source, Stage::Couple, Stage::Hom],
                    None,
                )?;
                reports.push(NamedReport {
                    name: p.name().to_string(),
                    filter_nm: None,
                    report: a.report.expect("hom ran").hom,
                });
                curves.push(a.hom.expect("hom ran"));
            }
            let names: Vec<String> = Preset::ALL.iter().map(|p| p.name().to_string()).collect();
            out.put("fig4a_hom.csv", |p| {
                curves_csv(p, &names, &curves.iter().collect::<Vec<_>>())
            })?;
            out.put("fig4a_reports.json", |p| io::write_json(p, &reports))
        }
        FigureId::Fig4c => {
            begin(out, &command, config, params, &["fig4c_hom.csv", "fig4c_reports.json"])?;
            let cfg = with_preset(config, Preset::Taper1);
            let source = build_source_jsa(&source_context(&cfg)?, signal_grid(&cfg)?)?;
            let profile = taper_for(&cfg)?.expect("taper preset");
            let coupled = couple(&source, &profile, &transmission_pair(&cfg, &profile, source.grid())?)?;
            let mut curves = Vec::new();
            let mut reports = Vec::new();
            let mut names = Vec::new();
            for f in FILTER_STUDY_NM {
                // The straight reference goes through the same filter.
                let (state, reference) = match f {
                    None => (coupled.clone(), source.clone()),
                    Some(nm) => {
                        let fc = DeviceConfig {
                            filter_nm: Some(nm),
                            ..cfg.clone()
                        };
                        let filter = filter_for(&fc, &coupled)?.expect("filter width set");
                        (apply_bandpass(&coupled, &filter)?, apply_bandpass(&source, &filter)?)
                    }
                };
                let c = coincidence_curve(&state, &delays)?;
                let reference = coincidence_curve(&reference, &delays)?;
                let name = f.map_or("unfiltered".to_string(), |nm| format!("filter_{nm}nm"));
                reports.push(NamedReport {
                    name: name.clone(),
                    filter_nm: f,
                    report: analyze(&c, Some(&reference))?,
                });
                names.push(name);
                curves.push(c);
            }
            out.put("fig4c_hom.csv", |p| {
                curves_csv(p, &names, &curves.iter().collect::<Vec<_>>())
            })?;
            out.put("fig4c_reports.json", |p| io::write_json(p, &reports))
        }
        FigureId::Fig4d => {
            begin(out, &command, config, params, &["fig4d_length.csv"])?;
            let lengths: Vec<f64> = LENGTH_STUDY_UM.iter().map(|l| l * 1e-6).collect();
            let rows = sweep_taper_length(&with_preset(config, Preset::Taper2), &lengths)?;
            out.put("fig4d_length.csv", |p| write_length_csv(p, &rows))
        }
        FigureId::Fig4e => {
            begin(out, &command, config, params, &["fig4e_hom.csv", "fig4e_report.json"])?;
            let mut cfg = with_preset(config, Preset::Taper2);
            cfg.anyon_comparison = true;
            let a = run_pipeline(&cfg, &[Stage::Source, Stage::Couple, Stage::Hom], None)?;
            let device = a.hom.as_ref().expect("hom ran");
            let synthetic = coincidence_curve(&anyonic_state(a.final_state().expect("state"), 0.5)?, &delays)?;
            let names = ["taper2".to_string(), "anyon_alpha_0.5".to_string()];
            out.put("fig4e_hom.csv", |p| curves_csv(p, &names, &[device, &synthetic]))?;
            out.put("fig4e_report.json", |p| {
                io::write_json(p, a.report.as_ref().expect("hom ran"))
            })
        }
        FigureId::Fig4f => {
            begin(
                out,
                &command,
                config,
                params,
                &["fig4f_taper2.csv", "fig4f_straight.csv", "fig4f_reports.json"],
            )?;
            let mut all = Vec::new();
            for p in [Preset::Taper2, Preset::Straight] {
                let s = scaling_for(&with_preset(config, p), None)?;
                out.put(&format!("fig4f_{}.csv", p.name()), |f| {
                    metrology::write_scaling_csv(f, &s.points)
                })?;
                all.push(s);
            }
            out.put("fig4f_reports.json", |p| io::write_json(p, &all))
        }
    })
    .map(|r| r.1)
}

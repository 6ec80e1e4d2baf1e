//! Source → coupler → filter → HOM → metrology orchestration.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::DeviceConfig;
use super::ingest::ingest_transmission;
use super::io;
use super::manifest::RunManifest;
use crate::coupler::{
    cmt_transfer, taper_phase, transmission_spectrum, Polarization, TaperProfile, TransmissionSpectrum,
};
use crate::dispersion::{defaults, DispersionModel, ModeLabel, PhaseMismatchContext};
use crate::error::{Error, Result};
use crate::hom::{
    analyze, anyonic_phase, apply_bandpass, asymmetry_score, coincidence_curve, visibility, DelayGrid,
    HomInterferogram, HomReport, SpectralFilter,
};
use crate::jsa::{apply_phase_samples, apply_transmission, build_source_jsa, BiphotonSpectrum, SignalGrid};
use crate::metrology::{self, MetrologyReport};
use crate::{angular_frequency, wavelength_span_to_omega, DEGENERACY_WAVELENGTH};

/// Coarse frequency samples for the coupled-mode transmission; the state grid
/// interpolates linearly between them.
pub const TRANSMISSION_SAMPLES: usize = 161;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Source,
    Couple,
    Filter,
    Hom,
    Metrology,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Source,
        Stage::Couple,
        Stage::Filter,
        Stage::Hom,
        Stage::Metrology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Source => "source",
            Stage::Couple => "couple",
            Stage::Filter => "filter",
            Stage::Hom => "hom",
            Stage::Metrology => "metrology",
        }
    }

    fn requires(self) -> Option<Stage> {
        match self {
            Stage::Source => None,
            Stage::Couple => Some(Stage::Source),
            Stage::Filter | Stage::Hom => Some(Stage::Couple),
            Stage::Metrology => Some(Stage::Hom),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Checks that every stage's prerequisite is present. The filter stage is
/// optional between couple and hom.
pub fn validate_stages(stages: &[Stage]) -> Result<()> {
    if !stages.contains(&Stage::Source) {
        return Err(Error::Config("stage list must start at `source`".into()));
    }
    for s in stages {
        if let Some(r) = s.requires() {
            if !stages.contains(&r) {
                return Err(Error::Config(format!("stage `{}` needs `{}`", s.name(), r.name())));
            }
        }
    }
    Ok(())
}

fn load_model(path: &Path, label: ModeLabel) -> Result<DispersionModel> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => DispersionModel::load_table_csv(label, path),
        Some("json") => DispersionModel::load_polynomial_json(label, path),
        _ => Err(Error::Config(format!(
            "{}: dispersion files must be .csv tables or .json polynomials",
            path.display()
        ))),
    }
}

pub fn source_context(config: &DeviceConfig) -> Result<PhaseMismatchContext> {
    let d = &config.dispersion;
    let signal = match &d.signal {
        Some(p) => load_model(p, ModeLabel::SignalTe)?,
        None => defaults::signal_te(),
    };
    let idler = match &d.idler {
        Some(p) => load_model(p, ModeLabel::IdlerTm)?,
        None => defaults::idler_tm(),
    };
    let pump = match &d.pump {
        Some(p) => load_model(p, ModeLabel::PumpTe)?,
        None => defaults::pump_te(),
    };
    PhaseMismatchContext::new(
        angular_frequency(config.pump_wavelength),
        pump,
        signal,
        idler,
        defaults::SOURCE_LENGTH,
    )
}

pub fn signal_grid(config: &DeviceConfig) -> Result<SignalGrid> {
    let wp = angular_frequency(config.pump_wavelength);
    let lambda0 = 2.0 * config.pump_wavelength;
    SignalGrid::new(
        wp,
        wavelength_span_to_omega(config.grid_span, lambda0),
        config.grid_points,
    )
}

/// Width profile for the configured preset, honouring profile file and
/// length override. `None` for the straight reference.
pub fn taper_for(config: &DeviceConfig) -> Result<Option<TaperProfile>> {
    let Some(base) = config.preset.taper()? else {
        return Ok(None);
    };
    let mut profile = match &config.taper_profile {
        Some(p) => {
            let rows = io::read_csv_columns(p, &["z_m", "width_m"])?;
            let z = rows.iter().map(|r| r[0]).collect();
            let w = rows.iter().map(|r| r[1]).collect();
            TaperProfile::new(
                z,
                w,
                base.data(Polarization::Te).clone(),
                base.data(Polarization::Tm).clone(),
            )?
        }
        None => base,
    };
    if let Some(l) = config.taper_length {
        profile = profile.with_length(l)?;
    }
    Ok(Some(profile))
}

/// Transmission spectra (TE, TM) on a padded coarse grid around the state
/// grid. Measured files replace the simulation per polarisation.
pub fn transmission_pair(
    config: &DeviceConfig,
    profile: &TaperProfile,
    grid: &SignalGrid,
) -> Result<(TransmissionSpectrum, TransmissionSpectrum)> {
    let pad = 2.0 * grid.step();
    let lo = grid.center() - grid.half_width - pad;
    let hi = grid.center() + grid.half_width + pad;
    let coarse: Vec<f64> = (0..TRANSMISSION_SAMPLES)
        .map(|k| lo + (hi - lo) * k as f64 / (TRANSMISSION_SAMPLES - 1) as f64)
        .collect();
    let get = |pol: Polarization, path: &Option<PathBuf>| match path {
        Some(p) => ingest_transmission(p, pol, config.smooth_nm),
        None => transmission_spectrum(profile, pol, &coarse),
    };
    Ok((
        get(Polarization::Te, &config.transmission.te)?,
        get(Polarization::Tm, &config.transmission.tm)?,
    ))
}

/// ϑ_TE(ω_s) + ϑ_TM(ω_p − ω_s) on the state grid.
pub fn coupler_phase_samples(profile: &TaperProfile, state: &BiphotonSpectrum) -> Result<Vec<f64>> {
    let wp = state.pump_frequency();
    state
        .omega()
        .par_iter()
        .map(|&w| Ok(taper_phase(profile, Polarization::Te, w)? + taper_phase(profile, Polarization::Tm, wp - w)?))
        .collect()
}

pub fn couple(
    source: &BiphotonSpectrum,
    profile: &TaperProfile,
    transmission: &(TransmissionSpectrum, TransmissionSpectrum),
) -> Result<BiphotonSpectrum> {
    let t = apply_transmission(source, &transmission.0, &transmission.1)?;
    let phase = coupler_phase_samples(profile, &t)?;
    Ok(apply_phase_samples(&t, &phase))
}

pub fn filter_for(config: &DeviceConfig, state: &BiphotonSpectrum) -> Result<Option<SpectralFilter>> {
    config
        .filter_nm
        .map(|nm| {
            SpectralFilter::rectangular(
                0.5 * state.pump_frequency(),
                wavelength_span_to_omega(nm * 1e-9, DEGENERACY_WAVELENGTH),
            )
        })
        .transpose()
}

/// Exchange-symmetric amplitude √(|φ(ω_s)||φ(ω_p−ω_s)|) carrying only the
/// anyonic sign-step phase for `alpha`.
pub fn anyonic_state(state: &BiphotonSpectrum, alpha: f64) -> Result<BiphotonSpectrum> {
    let amp = state.amplitude();
    let n = amp.len();
    let phase = anyonic_phase(alpha, state.pump_frequency());
    let sym = state
        .omega()
        .iter()
        .enumerate()
        .map(|(j, &w)| Complex64::from_polar((amp[j].norm() * amp[n - 1 - j].norm()).sqrt(), phase(w)))
        .collect();
    BiphotonSpectrum::new(*state.grid(), sym, state.sidecar().pol_assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnyonComparison {
    pub alpha: f64,
    pub device_s: f64,
    pub synthetic_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub preset: String,
    pub silicon_width_nm: Option<f64>,
    pub hom: HomReport,
    pub anyon: Option<AnyonComparison>,
}

/// In-memory results of a run; `files` lists what was written.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub source: Option<BiphotonSpectrum>,
    pub transmission: Option<(TransmissionSpectrum, TransmissionSpectrum)>,
    pub coupled: Option<BiphotonSpectrum>,
    pub filtered: Option<BiphotonSpectrum>,
    pub hom: Option<HomInterferogram>,
    pub reference: Option<HomInterferogram>,
    pub report: Option<PipelineReport>,
    pub metrology: Option<MetrologyReport>,
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    /// The most processed state available.
    pub fn final_state(&self) -> Option<&BiphotonSpectrum> {
        self.filtered
            .as_ref()
            .or(self.coupled.as_ref())
            .or(self.source.as_ref())
    }
}

fn planned_outputs(config: &DeviceConfig, stages: &[Stage]) -> Vec<String> {
    let mut out = Vec::new();
    let has = |s| stages.contains(&s);
    if has(Stage::Source) {
        out.extend(["source_jsa.csv", "source_jsa.json"]);
    }
    if has(Stage::Couple) {
        if config.preset.is_taper() {
            out.extend(["transmission_te.csv", "transmission_tm.csv"]);
        }
        out.extend(["coupled_jsa.csv", "coupled_jsa.json"]);
    }
    if has(Stage::Filter) && config.filter_nm.is_some() {
        out.extend(["filtered_jsa.csv", "filtered_jsa.json"]);
    }
    if has(Stage::Hom) {
        out.extend(["hom.csv", "hom_reference.csv", "hom_report.json"]);
    }
    if has(Stage::Metrology) {
        out.push("metrology.json");
    }
    out.into_iter().map(String::from).collect()
}

/// Runs the requested stages. With `out` set, the manifest is written first,
/// then every intermediate; on error everything written is removed.
pub fn run_pipeline(config: &DeviceConfig, stages: &[Stage], out: Option<&Path>) -> Result<Artifacts> {
    config.validate()?;
    validate_stages(stages)?;
    let (mut a, files) = io::staged(out, |w| run_stages(config, stages, w))?;
    a.files = files;
    Ok(a)
}

fn put_state(w: &mut io::Outputs<'_>, stem: &str, s: &BiphotonSpectrum) -> Result<()> {
    w.put(&format!("{stem}.csv"), |p| s.write_csv(p))?;
    w.put(&format!("{stem}.json"), |p| io::write_json(p, &s.sidecar()))
}

fn run_stages(config: &DeviceConfig, stages: &[Stage], w: &mut io::Outputs<'_>) -> Result<Artifacts> {
    let params = serde_json::json!({ "stages": stages });
    let manifest = RunManifest::new("pipeline", config, params, planned_outputs(config, stages))?;
    w.put(super::manifest::MANIFEST_FILE, |p| io::write_json(p, &manifest))?;
    let has = |s| stages.contains(&s);
    let mut a = Artifacts::default();

    let source = (|| build_source_jsa(&source_context(config)?, signal_grid(config)?))()
        .map_err(|e| Error::stage("source", e))?;
    put_state(w, "source_jsa", &source)?;

    if has(Stage::Couple) {
        let coupled = (|| -> Result<BiphotonSpectrum> {
            match taper_for(config)? {
                None => Ok(source.clone()),
                Some(profile) => {
                    let t = transmission_pair(config, &profile, source.grid())?;
                    let c = couple(&source, &profile, &t)?;
                    a.transmission = Some(t);
                    Ok(c)
                }
            }
        })()
        .map_err(|e| Error::stage("couple", e))?;
        if let Some((te, tm)) = &a.transmission {
            w.put("transmission_te.csv", |p| super::ingest::write_transmission_csv(p, te))?;
            w.put("transmission_tm.csv", |p| super::ingest::write_transmission_csv(p, tm))?;
        }
        put_state(w, "coupled_jsa", &coupled)?;
        a.coupled = Some(coupled);
    }

    let mut reference_state = source.clone();
    if has(Stage::Filter) {
        let coupled = a.coupled.as_ref().expect("couple stage ran");
        if let Some(f) = filter_for(config, coupled).map_err(|e| Error::stage("filter", e))? {
            let filtered = apply_bandpass(coupled, &f).map_err(|e| Error::stage("filter", e))?;
            reference_state = apply_bandpass(&source, &f).map_err(|e| Error::stage("filter", e))?;
            put_state(w, "filtered_jsa", &filtered)?;
            a.filtered = Some(filtered);
        }
    }

    if has(Stage::Hom) {
        let state = a.final_state().expect("source stage ran").clone();
        let (curve, reference, report) = (|| -> Result<_> {
            let delays = DelayGrid::default().delays();
            let curve = coincidence_curve(&state, &delays)?;
            let reference = coincidence_curve(&reference_state, &delays)?;
            let hom = analyze(&curve, Some(&reference))?;
            let anyon = if config.anyon_comparison {
                let syn = coincidence_curve(&anyonic_state(&state, 0.5)?, &delays)?;
                Some(AnyonComparison {
                    alpha: 0.5,
                    device_s: hom.asymmetry_score,
                    synthetic_s: asymmetry_score(&syn)?,
                })
            } else {
                None
            };
            let report = PipelineReport {
                preset: config.preset.name().to_string(),
                silicon_width_nm: config.preset.silicon_width_nm(),
                hom,
                anyon,
            };
            Ok((curve, reference, report))
        })()
        .map_err(|e| Error::stage("hom", e))?;
        w.put("hom.csv", |p| curve.write_csv(p))?;
        w.put("hom_reference.csv", |p| reference.write_csv(p))?;
        w.put("hom_report.json", |p| io::write_json(p, &report))?;
        a.hom = Some(curve);
        a.reference = Some(reference);
        a.report = Some(report);
    }

    if has(Stage::Metrology) {
        let state = a.final_state().expect("source stage ran");
        let m = metrology::report(state, &DelayGrid::default().delays()).map_err(|e| Error::stage("metrology", e))?;
        w.put("metrology.json", |p| io::write_json(p, &m))?;
        a.metrology = Some(m);
    }
    a.source = Some(source);
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub length: f64,
    pub visibility: f64,
    pub crossed_transmission: f64,
    pub asymmetry_score: f64,
}

/// Rescales the taper length with the transmission spectrum held at the
/// configured device's values; only the coupler phase follows the length.
pub fn sweep_taper_length(config: &DeviceConfig, lengths: &[f64]) -> Result<Vec<LengthPoint>> {
    config.validate()?;
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Config(format!("taper lengths must be positive, got {l}")));
    }
    let profile = taper_for(config)?.ok_or_else(|| Error::Config("length sweep needs a taper preset".into()))?;
    let source = build_source_jsa(&source_context(config)?, signal_grid(config)?)?;
    let t = transmission_pair(config, &profile, source.grid())?;
    let transmitted = apply_transmission(&source, &t.0, &t.1)?;
    let filter = filter_for(config, &source)?;
    let delays = DelayGrid::default().delays();
    let wd = 0.5 * source.pump_frequency();
    lengths
        .iter()
        .map(|&l| {
            let p = if l == profile.length() {
                profile.clone()
            } else {
                profile.with_length(l)?
            };
            let phase = coupler_phase_samples(&p, &transmitted)?;
            let mut state = apply_phase_samples(&transmitted, &phase);
            if let Some(f) = &filter {
                state = apply_bandpass(&state, f)?;
            }
            let curve = coincidence_curve(&state, &delays)?;
            let crossed = cmt_transfer(&p, Polarization::Te, wd)?.transmission()
                * cmt_transfer(&p, Polarization::Tm, wd)?.transmission();
            Ok(LengthPoint {
                length: l,
                visibility: visibility(&curve)?,
                crossed_transmission: crossed,
                asymmetry_score: asymmetry_score(&curve)?,
            })
        })
        .collect()
}

pub fn write_length_csv(path: &Path, rows: &[LengthPoint]) -> Result<()> {
    let data: Vec<[f64; 4]> = rows
        .iter()
        .map(|r| [r.length, r.visibility, r.crossed_transmission, r.asymmetry_score])
        .collect();
    io::write_csv_rows(
        path,
        &["length_m", "visibility", "crossed_transmission", "asymmetry_score"],
        &data,
    )
}

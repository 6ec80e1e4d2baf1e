//! Measured transmission spectra: CSV `wavelength_nm,transmission`.

use std::path::Path;

use crate::coupler::{Polarization, Provenance, TransmissionSpectrum};
use crate::error::{Error, Result};
use crate::workbench::io;
use crate::{angular_frequency, SPEED_OF_LIGHT};

pub const HEADER: [&str; 2] = ["wavelength_nm", "transmission"];
pub const DEFAULT_SMOOTH_NM: f64 = 2.0;

/// Moving average over a wavelength window. Near the ends the window keeps
/// its full width and slides inward instead of being truncated; a record
/// shorter than the window is averaged as a whole. `lambda` must be sorted
/// ascending.
pub fn moving_average(lambda: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let half = 0.5 * window;
    let tol = 1e-9 * window;
    let (first, last) = (lambda[0], lambda[n - 1]);
    (0..n)
        .map(|i| {
            let mut a = (lambda[i] - half).max(first);
            let b = (a + window).min(last);
            a = (b - window).max(first);
            let lo = lambda.partition_point(|&x| x < a - tol);
            let hi = lambda.partition_point(|&x| x <= b + tol);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Loads a transmission spectrum, optionally smoothing over `smooth_nm`.
pub fn ingest_transmission(
    path: &Path,
    polarization: Polarization,
    smooth_nm: Option<f64>,
) -> Result<TransmissionSpectrum> {
    let rows = io::read_csv_columns(path, &HEADER)?;
    if rows.len() < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows.len() + 1,
            msg: "transmission file needs at least two rows".into(),
        });
    }
    let bad: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !(0.0..=1.0).contains(&r[1]))
        .map(|(i, _)| i + 2)
        .collect();
    if !bad.is_empty() {
        return Err(Error::TransmissionRange {
            path: path.to_path_buf(),
            rows: bad,
        });
    }
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    if let Some(i) = pairs.iter().position(|p| !(p.0 > 0.0)) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            msg: "wavelength must be positive".into(),
        });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("duplicate wavelength {} nm", w[0].0),
        });
    }
    let lambda: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut t: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    if let Some(win) = smooth_nm {
        if !(win > 0.0) {
            return Err(Error::Config("smoothing window must be positive".into()));
        }
        t = moving_average(&lambda, &t, win);
    }
    // Ascending wavelength is descending frequency.
    let omega: Vec<f64> = lambda.iter().rev().map(|l| angular_frequency(l * 1e-9)).collect();
    t.reverse();
    TransmissionSpectrum::new(
        polarization,
        omega,
        t,
        Provenance::MeasuredFile {
            path: path.display().to_string(),
        },
    )
}

/// Writes a spectrum in the ingest format, sorted by wavelength.
pub fn write_transmission_csv(path: &Path, spectrum: &TransmissionSpectrum) -> Result<()> {
    let rows: Vec<[f64; 2]> = spectrum
        .omega()
        .iter()
        .zip(spectrum.values())
        .rev()
        .map(|(w, t)| [2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / w * 1e9, *t])
        .collect();
    io::write_csv_rows(path, &HEADER, &rows)
}

/// Measured-like stand-in: a simulated spectrum with superimposed cavity
/// fringes of the given period (nm) and relative depth.
pub fn synthetic_measured(
    base: &TransmissionSpectrum,
    period_nm: f64,
    depth: f64,
    points: usize,
) -> Result<TransmissionSpectrum> {
    let (lo, hi) = base.window();
    let omega: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let t = omega
        .iter()
        .map(|&w| {
            let lam_nm = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / w * 1e9;
            let fringe = 1.0 + depth * (2.0 * std::f64::consts::PI * lam_nm / period_nm).cos();
            base.at(w).map(|v| (v * fringe).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    TransmissionSpectrum::new(
        base.polarization,
        omega,
        t,
        Provenance::Synthetic {
            note: format!("simulated transmission with {period_nm} nm cavity fringes of depth {depth}"),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, rows: &[[f64; 2]]) -> std::path::PathBuf {
        let p = dir.join(name);
        io::write_csv_rows(&p, &HEADER, rows).unwrap();
        p
    }

    #[test]
    fn flat_file_is_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<[f64; 2]> = (0..401).map(|k| [1540.0 + 0.1 * k as f64, 0.8]).collect();
        let p = write(dir.path(), "flat.csv", &rows);
        let raw = ingest_transmission(&p, Polarization::Te, None).unwrap();
        let sm = ingest_transmission(&p, Polarization::Te, Some(DEFAULT_SMOOTH_NM)).unwrap();
        assert!(raw.values().iter().all(|&v| v == 0.8));
        assert!(sm.values().iter().all(|&v| (v - 0.8).abs() < 1e-12));
        assert!(raw.omega().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn out_of_range_rows_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "bad.csv",
            &[[1550.0, 0.5], [1551.0, 1.2], [1552.0, 0.4], [1553.0, -0.1]],
        );
        match ingest_transmission(&p, Polarization::Tm, None) {
            Err(Error::TransmissionRange { rows, .. }) => assert_eq!(rows, vec![3, 5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn moving_average_slides_at_edges() {
        let x: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let y = x.clone();
        let m = moving_average(&x, &y, 2.0);
        assert_eq!(m[0], 1.0);
        assert_eq!(m[1], 1.0);
        assert_eq!(m[5], 5.0);
        assert_eq!(m[10], 9.0);
        assert_eq!(moving_average(&x, &y, 50.0), vec![5.0; 11]);
    }
}

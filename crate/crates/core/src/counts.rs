//! Pair-detection statistics: singles, coincidences and accidentals versus
//! pump power, with PGR and CAR recovered from Poisson-sampled totals.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workbench::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountsScenario {
    /// Pairs per second per mW of coupled pump power.
    pub internal_pgr_per_mw: f64,
    /// mW.
    pub pump_power: f64,
    pub arm_efficiency_s: f64,
    pub arm_efficiency_i: f64,
    /// counts/s.
    pub dark_rate_s: f64,
    pub dark_rate_i: f64,
    /// s.
    pub coincidence_window: f64,
    /// s.
    pub integration_time: f64,
    pub rng_seed: u64,
}

/// Calibration artifacts chosen so the default scenario gives CAR near 600 at
/// 1 mW. See `examples/calibrate.rs`.
pub mod defaults {
    pub const INTERNAL_PGR_PER_MW: f64 = 1.2e6;
    pub const ARM_EFFICIENCY_S: f64 = 0.030;
    pub const ARM_EFFICIENCY_I: f64 = 0.025;
    pub const DARK_RATE_S: f64 = 500.0;
    pub const DARK_RATE_I: f64 = 400.0;
    pub const COINCIDENCE_WINDOW: f64 = 1.35e-9;
    pub const INTEGRATION_TIME: f64 = 300.0;
    /// mW, the coupled-power axis of the sweep.
    pub const SWEEP_POWERS: [f64; 8] = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];
}

impl Default for CountsScenario {
    fn default() -> Self {
        Self {
            internal_pgr_per_mw: defaults::INTERNAL_PGR_PER_MW,
            pump_power: defaults::SWEEP_POWERS[0],
            arm_efficiency_s: defaults::ARM_EFFICIENCY_S,
            arm_efficiency_i: defaults::ARM_EFFICIENCY_I,
            dark_rate_s: defaults::DARK_RATE_S,
            dark_rate_i: defaults::DARK_RATE_I,
            coincidence_window: defaults::COINCIDENCE_WINDOW,
            integration_time: defaults::INTEGRATION_TIME,
            rng_seed: 0,
        }
    }
}

impl CountsScenario {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("internal_pgr_per_mw", self.internal_pgr_per_mw),
            ("pump_power", self.pump_power),
            ("dark_rate_s", self.dark_rate_s),
            ("dark_rate_i", self.dark_rate_i),
            ("integration_time", self.integration_time),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        for (name, v) in [
            ("arm_efficiency_s", self.arm_efficiency_s),
            ("arm_efficiency_i", self.arm_efficiency_i),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.coincidence_window > 0.0 && self.coincidence_window.is_finite()) {
            return Err(Error::Config("coincidence_window must be positive".into()));
        }
        Ok(())
    }

    pub fn pair_rate(&self) -> f64 {
        self.internal_pgr_per_mw * self.pump_power
    }

    pub fn with_power(&self, pump_power: f64) -> Self {
        Self { pump_power, ..*self }
    }
}

/// Rates in counts/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsResult {
    pub singles_s: f64,
    pub singles_i: f64,
    pub true_coincidences: f64,
    pub accidentals: f64,
    pub car: f64,
    pub car_sigma: f64,
    /// pairs/s.
    pub estimated_pgr: f64,
}

/// First-order Poisson error on CAR = (N_t + N_a)/N_a for counted totals.
fn car_sigma(n_true: f64, n_acc: f64) -> f64 {
    (n_true / (n_acc * n_acc) + n_true * n_true / (n_acc * n_acc * n_acc)).sqrt()
}

pub fn expected_rates(scn: &CountsScenario) -> Result<CountsResult> {
    scn.validate()?;
    let r = scn.pair_rate();
    let eta = scn.arm_efficiency_s * scn.arm_efficiency_i;
    let singles_s = scn.arm_efficiency_s * r + scn.dark_rate_s;
    let singles_i = scn.arm_efficiency_i * r + scn.dark_rate_i;
    let true_coincidences = eta * r;
    let accidentals = singles_s * singles_i * scn.coincidence_window;
    if !(accidentals > 0.0) {
        return Err(Error::CarUndefined);
    }
    let t = scn.integration_time;
    Ok(CountsResult {
        singles_s,
        singles_i,
        true_coincidences,
        accidentals,
        car: (true_coincidences + accidentals) / accidentals,
        car_sigma: if t > 0.0 {
            car_sigma(true_coincidences * t, accidentals * t)
        } else {
            f64::INFINITY
        },
        estimated_pgr: true_coincidences / eta,
    })
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> Result<f64> {
    if mean == 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidModel(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng))
}

/// Poisson totals over the integration time, converted back to rates.
pub fn sample_counts(scn: &CountsScenario) -> Result<CountsResult> {
    let mean = expected_rates(scn)?;
    let t = scn.integration_time;
    if !(t > 0.0) {
        return Err(Error::Config("integration_time must be positive for sampling".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scn.rng_seed);
    let n_s = draw(&mut rng, mean.singles_s * t)?;
    let n_i = draw(&mut rng, mean.singles_i * t)?;
    let n_t = draw(&mut rng, mean.true_coincidences * t)?;
    let n_a = draw(&mut rng, mean.accidentals * t)?;
    if n_a == 0.0 {
        return Err(Error::CarUndefined);
    }
    let eta = scn.arm_efficiency_s * scn.arm_efficiency_i;
    Ok(CountsResult {
        singles_s: n_s / t,
        singles_i: n_i / t,
        true_coincidences: n_t / t,
        accidentals: n_a / t,
        car: (n_t + n_a) / n_a,
        car_sigma: car_sigma(n_t, n_a),
        estimated_pgr: n_t / t / eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub power_mw: f64,
    pub pgr_per_s: f64,
    pub car: f64,
    pub car_sigma: f64,
}

/// Point k runs with seed `rng_seed ^ k`.
pub fn power_sweep(template: &CountsScenario, powers: &[f64]) -> Result<Vec<SweepRow>> {
    if powers.is_empty() {
        return Err(Error::Config("power sweep needs at least one power".into()));
    }
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Config(format!("sweep powers must be positive, got {p}")));
    }
    powers
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let scn = CountsScenario {
                pump_power: p,
                rng_seed: template.rng_seed ^ k as u64,
                ..*template
            };
            let r = sample_counts(&scn)?;
            Ok(SweepRow {
                power_mw: p,
                pgr_per_s: r.estimated_pgr,
                car: r.car,
                car_sigma: r.car_sigma,
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let data: Vec<[f64; 4]> = rows
        .iter()
        .map(|r| [r.power_mw, r.pgr_per_s, r.car, r.car_sigma])
        .collect();
    io::write_csv_rows(path, &["power_mw", "pgr_per_s", "car", "car_sigma"], &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dark_free() -> CountsScenario {
        CountsScenario {
            dark_rate_s: 0.0,
            dark_rate_i: 0.0,
            ..CountsScenario::default()
        }
    }

    #[test]
    fn zero_power_without_darks_is_undefined() {
        let scn = CountsScenario {
            pump_power: 0.0,
            ..dark_free()
        };
        assert!(matches!(expected_rates(&scn), Err(Error::CarUndefined)));
    }

    #[test]
    fn inverse_power_law() {
        let scn = dark_free();
        let r = expected_rates(&scn).unwrap();
        let lhs = (r.car - 1.0) * scn.pair_rate() * scn.coincidence_window;
        assert!((lhs - 1.0).abs() < 1e-12);
        let r2 = expected_rates(&scn.with_power(2.0 * scn.pump_power)).unwrap();
        assert!(((r.car - 1.0) / (r2.car - 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn default_calibration() {
        let r = expected_rates(&CountsScenario::default()).unwrap();
        assert!(r.estimated_pgr >= 1e6);
        assert!((r.car - 600.0).abs() < 10.0, "{}", r.car);
    }

    #[test]
    fn sampling_is_deterministic() {
        let scn = CountsScenario::default();
        assert_eq!(sample_counts(&scn).unwrap(), sample_counts(&scn).unwrap());
        let other = CountsScenario { rng_seed: 1, ..scn };
        assert_ne!(sample_counts(&scn).unwrap(), sample_counts(&other).unwrap());
    }

    #[test]
    fn sample_means_converge() {
        let scn = CountsScenario {
            integration_time: 1e5,
            ..CountsScenario::default()
        };
        let e = expected_rates(&scn).unwrap();
        let s = sample_counts(&scn).unwrap();
        let t = scn.integration_time;
        for (a, b) in [
            (s.singles_s, e.singles_s),
            (s.singles_i, e.singles_i),
            (s.true_coincidences, e.true_coincidences),
            (s.accidentals, e.accidentals),
        ] {
            assert!(b * t > 1e5);
            assert!((a - b).abs() <= 5.0 * (b / t).sqrt());
            assert!((a / b - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn sweep_single_point_matches_sample() {
        let scn = CountsScenario::default();
        let rows = power_sweep(&scn, &[scn.pump_power]).unwrap();
        let s = sample_counts(&scn).unwrap();
        assert_eq!(rows[0].car, s.car);
        assert_eq!(rows[0].pgr_per_s, s.estimated_pgr);
    }

    #[test]
    fn invalid_inputs() {
        assert!(power_sweep(&CountsScenario::default(), &[]).is_err());
        assert!(power_sweep(&CountsScenario::default(), &[1.0, -2.0]).is_err());
        let bad = CountsScenario {
            arm_efficiency_s: 1.5,
            ..CountsScenario::default()
        };
        assert!(matches!(expected_rates(&bad), Err(Error::Config(_))));
    }
}

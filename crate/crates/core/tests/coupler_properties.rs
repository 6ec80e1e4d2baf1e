use std::f64::consts::PI;

use biphoton::coupler::{
    adiabaticity_score, cmt_transfer, taper_phase, transmission_spectrum, LocalIndexTable, Polarization,
    PolarizationData, SpectralCurve, TaperProfile,
};
use biphoton::workbench::presets::{self, Preset};
use proptest::prelude::*;

const W0: f64 = 1.2e15;

fn data(slope: f64, n_b: f64, kappa: f64) -> PolarizationData {
    let om = vec![0.9 * W0, 0.95 * W0, W0, 1.05 * W0, 1.1 * W0];
    let n_a = LocalIndexTable::from_fn(vec![0.4e-6, 1.0e-6, 1.6e-6, 2.2e-6], om, |w, _| {
        3.0 + slope * (w - 1.3e-6)
    })
    .unwrap();
    PolarizationData::new(
        n_a,
        SpectralCurve::constant(n_b, 0.9 * W0, 1.1 * W0).unwrap(),
        SpectralCurve::constant(kappa, 0.9 * W0, 1.1 * W0).unwrap(),
    )
    .unwrap()
}

fn linear(l: f64, d: PolarizationData) -> TaperProfile {
    TaperProfile::from_width_fn(l, 257, |z| 2.0e-6 - 1.4e-6 * z / l, d.clone(), d).unwrap()
}

/// Crossing at mid-length, slowed by a sinh width law of strength `a`.
fn slow(l: f64, a: f64, d: PolarizationData) -> TaperProfile {
    TaperProfile::from_width_fn(
        l,
        4097,
        |z| 1.3e-6 - 0.7e-6 * (a * (2.0 * z / l - 1.0)).sinh() / a.sinh(),
        d.clone(),
        d,
    )
    .unwrap()
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cmt_conserves_power(
        slope in 0.05e6f64..0.5e6, n_b in 2.95f64..3.05, kappa in 0.0f64..2e4,
        l in 2e-4f64..1.2e-3, f in 0.92f64..1.08,
    ) {
        let p = linear(l, data(slope, n_b, kappa));
        let o = cmt_transfer(&p, Polarization::Te, f * W0).unwrap();
        prop_assert!((o.total_power() - 1.0).abs() < 1e-8, "{}", o.total_power());
    }

    #[test]
    fn synchronous_coupler_sin_squared(kappa in 1e3f64..1e4, l in 5e-5f64..1e-3) {
        let d = data(0.0, 3.0, kappa);
        let p = TaperProfile::from_width_fn(l, 65, |_| 1.3e-6, d.clone(), d).unwrap();
        let t = cmt_transfer(&p, Polarization::Tm, W0).unwrap().transmission();
        prop_assert!((t - (kappa * l).sin().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn adiabatic_phase_matches_cmt(kappa in 4e4f64..8e4, f in 0.96f64..1.04) {
        let p = slow(4e-3, 6.0, data(1e6, 3.0, kappa));
        let score = adiabaticity_score(&p, Polarization::Te, f * W0).unwrap();
        prop_assume!(score < 0.05);
        let o = cmt_transfer(&p, Polarization::Te, f * W0).unwrap();
        let th = taper_phase(&p, Polarization::Te, f * W0).unwrap();
        prop_assert!(wrap(o.destination.arg() - th).abs() < 0.05);
        prop_assert!(o.transmission() > 0.99);
    }
}

#[test]
fn phase_error_tracks_adiabaticity() {
    // Faster tapers have larger scores and drift further from the adiabatic phase.
    let d = data(1e6, 3.0, 6e4);
    let mut rows = Vec::new();
    for l in [4e-3, 1e-3, 2.5e-4] {
        let p = slow(l, 6.0, d.clone());
        let s = adiabaticity_score(&p, Polarization::Te, W0).unwrap();
        let o = cmt_transfer(&p, Polarization::Te, W0).unwrap();
        let th = taper_phase(&p, Polarization::Te, W0).unwrap();
        rows.push((s, wrap(o.destination.arg() - th).abs(), o.transmission()));
    }
    assert!(rows.windows(2).all(|w| w[1].0 > w[0].0), "{rows:?}");
    assert!(rows.windows(2).all(|w| w[1].1 > w[0].1), "{rows:?}");
    assert!(rows[0].1 < 0.05, "{rows:?}");
}

#[test]
fn rescaled_length_keeps_shape() {
    let p = presets::taper_profile(560.0, presets::TAPER_LENGTH).unwrap();
    let q = p.with_length(500e-6).unwrap();
    assert_eq!(q.length(), 500e-6);
    for (a, b) in p.widths().iter().zip(q.widths()) {
        assert_eq!(a, b);
    }
    for s in [0.1, 0.37, 0.5, 0.81] {
        let wa = p.width_at(s * p.length()).unwrap();
        let wb = q.width_at(s * q.length()).unwrap();
        assert!((wa - wb).abs() < 1e-15);
    }
}

#[test]
fn preset_tapers_transfer_most_power_at_degeneracy() {
    let w0 = presets::degeneracy_omega();
    for p in Preset::TAPERS {
        let profile = p.taper().unwrap().unwrap();
        for pol in [Polarization::Te, Polarization::Tm] {
            let t = transmission_spectrum(&profile, pol, &[0.99 * w0, w0, 1.01 * w0]).unwrap();
            assert!(t.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(t.values()[1] > 0.5, "{p} {pol}: {:?}", t.values());
        }
    }
    assert!(Preset::Straight.taper().unwrap().is_none());
}

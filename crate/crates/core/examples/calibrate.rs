//! Prints the figures of merit the bundled presets and counting defaults
//! were calibrated against, plus the corrections that would hit the targets
//! exactly.
//!
//! cargo run --release -p biphoton --example calibrate

use biphoton::counts::{defaults as cd, expected_rates, CountsScenario};
use biphoton::coupler::Polarization;
use biphoton::hom::{asymmetry_score, dip_location};
use biphoton::workbench::pipeline::{run_pipeline, sweep_taper_length, Stage};
use biphoton::workbench::presets::{self, Preset};
use biphoton::workbench::DeviceConfig;
use biphoton::SPEED_OF_LIGHT;

const TARGET_DIP_SHIFT: f64 = 0.52e-12;
const TARGET_CAR: f64 = 600.0;

fn main() -> biphoton::Result<()> {
    let all = [Stage::Source, Stage::Couple, Stage::Filter, Stage::Hom];
    for p in Preset::ALL {
        let mut cfg = DeviceConfig::preset(p);
        cfg.anyon_comparison = true;
        let a = run_pipeline(&cfg, &all, None)?;
        let r = a.report.as_ref().unwrap();
        let (dip, _) = dip_location(a.hom.as_ref().unwrap())?;
        print!(
            "{p:9} V {:.4}  dip {:+.4} ps  shift {:+.4} ps  S {:.4}  S_anyon {:.4}",
            r.hom.visibility,
            dip * 1e12,
            r.hom.dip_shift_s * 1e12,
            r.hom.asymmetry_score,
            r.anyon.unwrap().synthetic_s
        );
        if let Some((te, tm)) = &a.transmission {
            let w0 = presets::degeneracy_omega();
            print!("  T(ω0) {:.3} {:.3}", te.at(w0)?, tm.at(w0)?);
        }
        println!();
        cfg.filter_nm = Some(30.0);
        let f = run_pipeline(&cfg, &all, None)?;
        let fr = f.report.as_ref().unwrap();
        println!(
            "          30 nm filter: V {:.4}  shift {:+.4} ps  S {:.4}",
            fr.hom.visibility,
            fr.hom.dip_shift_s * 1e12,
            asymmetry_score(f.hom.as_ref().unwrap())?
        );
        if p == Preset::Taper1 {
            // A common TM slope offset δ moves the dip by −l·δ/c.
            let err = TARGET_DIP_SHIFT - r.hom.dip_shift_s;
            println!(
                "          TM slope offset correction {:+.6}",
                -err * SPEED_OF_LIGHT / presets::TAPER_LENGTH
            );
        }
    }

    let sweep = sweep_taper_length(
        &DeviceConfig::preset(Preset::Taper2),
        &[400e-6, 500e-6, 600e-6, 800e-6, 1000e-6],
    )?;
    for r in &sweep {
        println!(
            "taper2 l = {:4.0} um  V {:.4}  T_cross {:.4}  S {:.4}",
            r.length * 1e6,
            r.visibility,
            r.crossed_transmission,
            r.asymmetry_score
        );
    }

    let p = presets::taper_profile(560.0, presets::TAPER_LENGTH)?;
    for pol in [Polarization::Te, Polarization::Tm] {
        let s = biphoton::coupler::adiabaticity_score(&p, pol, presets::degeneracy_omega())?;
        println!("taper2 {pol} adiabaticity score at degeneracy {s:.4}");
    }

    let scn = CountsScenario::default();
    let e = expected_rates(&scn)?;
    let singles = e.singles_s * e.singles_i;
    let window = e.true_coincidences / ((TARGET_CAR - 1.0) * singles);
    println!(
        "counts at {} mW: PGR {:.3e}/s  CAR {:.1}  window for CAR {TARGET_CAR}: {window:.4e} s (set {:.4e})",
        scn.pump_power,
        e.estimated_pgr,
        e.car,
        cd::COINCIDENCE_WINDOW
    );
    Ok(())
}

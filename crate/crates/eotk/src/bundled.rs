//! Generators for the files shipped in `data/`. The files are checked against these
//! functions byte for byte, and `cargo run -p eotk --example regenerate_data` rewrites them.

use std::path::Path;

use eotk_core::quantities::{dbm_to_watts, hz_to_angular, photon_flux, SuperconductorRecord};
use eotk_core::resonator::{REFERENCE_SPIRAL, TEST_DEVICE_SLOT};
use eotk_core::scenarios as sc;
use eotk_core::spectra::{linear_grid, synthesize_heterodyne, DarkModel, SidebandLine, Spectrum};
use serde_json::{json, Value};

use crate::error::CliResult;
use crate::io::{json_string, sidecar_json, sidecar_path, spectrum_csv};

/// Sideband the bundled heterodyne pair is calibrated on, with its window.
pub const FIG6C_CENTER_HZ: f64 = 6.712e9;
pub const FIG6C_STOKES_HZ: f64 = 6.632e9;
pub const FIG6C_HALF_WIDTH_HZ: f64 = 6e6;
pub const FIG6C_REFERENCE_WIDTH_HZ: f64 = 10e6;
pub const FIG6C_LOSS_UNCERTAINTY_DB: f64 = 1.0;
const FIG6C_SHOT_PSD: f64 = 2e-18;
const FIG6C_RBW_HZ: f64 = 1e6;

/// Measured-device configuration with its operating point and reference values.
pub fn table1_config() -> Value {
    let cpw = json!({
        "center_width": 5e-6,
        "gap": 13e-6,
        "length": 5200e-6,
        "l_per_m": 620e-9,
        "c_per_m": 63e-12,
        "load_capacitance": 21e-15,
        "film_thickness": sc::aluminum_film().thickness,
        "sheet_inductance": sc::aluminum_film().ls_ref,
    });
    let p = sc::table1_polymer();
    json!({
        "schema_version": 1,
        "device": {
            "optical": {
                "frequency_hz": sc::OPTICAL_FREQUENCY_HZ,
                "intrinsic_loss_hz": sc::OPTICAL_INTRINSIC_HZ,
                "external_loss_hz": sc::OPTICAL_EXTERNAL_HZ,
                "total_loss_hz": sc::OPTICAL_TOTAL_HZ,
                "topology": "single_sided"
            },
            "microwave": {
                "frequency_hz": sc::MICROWAVE_FREQUENCY_HZ,
                "intrinsic_loss_hz": sc::MICROWAVE_INTRINSIC_HZ,
                "external_loss_hz": sc::MICROWAVE_EXTERNAL_HZ,
                "total_loss_hz": sc::MICROWAVE_TOTAL_HZ,
                "topology": "two_sided"
            },
            "impedance_ohm": sc::IMPEDANCE_OHM,
            "g0_hz": sc::G0_INFERRED_HZ
        },
        "operating_point": {
            "pump_power_dbm": sc::PUMP_POWER_DBM,
            "input_chain_loss_db": 0.0,
            "pump_detuning_hz": -sc::MICROWAVE_FREQUENCY_HZ,
            "rf_power_dbm": sc::RF_POWER_DBM
        },
        "polymer": {
            "r33_film_m_per_v": p.r33_film,
            "poling_efficiency": p.poling_efficiency,
            "n_e": p.n_e,
            "n_o": p.n_o,
            "mode_energy_fraction": p.mode_energy_fraction,
            "electrode_gap_m": sc::ELECTRODE_GAP_M,
            "screening": eotk_core::eo_model::DEFAULT_SCREENING
        },
        "tuning": {
            "wavelength_tuning_m_per_v": sc::TUNING_GLUED_M_PER_V,
            "wavelength_m": sc::TUNING_WAVELENGTH_M
        },
        "superconductor": SuperconductorRecord::from(sc::aluminum_film()),
        "alpha_k": sc::ALPHA_K,
        "stray_light": {
            "enabled": true,
            "absorbed_fraction": sc::STRAY_ABSORBED_FRACTION,
            "heating": sc::stray_heating()
        },
        "cpw": { "geometry": cpw, "substrate_eps_r": 6.2 },
        "spiral": REFERENCE_SPIRAL,
        "slot": {
            "geometry": TEST_DEVICE_SLOT,
            "electrode_capacitance_f": 2.0 * TEST_DEVICE_SLOT.slot_capacitance(),
            "analysis_frequency_hz": sc::MICROWAVE_FREQUENCY_HZ
        },
        "reference": {
            "g0_predicted_hz": sc::G0_PREDICTED_HZ,
            "g0_tolerance_rel": 0.05,
            "efficiency": sc::ETA_MEASURED,
            "efficiency_tolerance_rel": 0.1,
            "sideband_ratio_db": 9.5,
            "sideband_ratio_tolerance_db": 1.5
        },
        "sweep": {
            "target": "pump_power",
            "grid": { "start": -40.0, "stop": -16.0, "points": 25, "scale": "linear" }
        },
        "optimize": {
            "objective": "max_eta",
            "parameters": [ { "path": "device.impedance_ohm", "lower": 50.0, "upper": 5000.0 } ],
            "starts": 5
        }
    })
}

/// Spiral sized to an 8 GHz self-resonance, searched over turns and wire pitch.
pub fn spiral_config() -> Value {
    let mut v = table1_config();
    v["optimize"] = json!({
        "objective": "max_impedance_at_srf",
        "parameters": [
            { "path": "spiral.n_turns", "lower": 2.0, "upper": 120.0 },
            { "path": "spiral.wire_pitch", "lower": 0.5e-6, "upper": 1.0e-6 }
        ],
        "starts": 5,
        "srf_target_hz": 8e9,
        "min_inner_diameter_m": 10e-6
    });
    v["sweep"] = json!({
        "target": "turns",
        "grid": { "start": 5.0, "stop": 60.0, "points": 12, "scale": "linear" },
        "srf_target_hz": 8e9
    });
    v
}

/// Signal and dark heterodyne spectra with the anti-Stokes sideband carrying the
/// measured efficiency and the Stokes sideband 9.5 dB below it.
pub fn fig6c_pair() -> (Spectrum, Spectrum) {
    let grid = linear_grid(6.60e9, 6.75e9, 751);
    let p = dbm_to_watts(sc::RF_POWER_DBM).expect("finite power");
    let phi = sc::ETA_MEASURED * photon_flux(p, hz_to_angular(sc::MICROWAVE_FREQUENCY_HZ)).expect("positive frequency");
    let lines = [SidebandLine { frequency: FIG6C_CENTER_HZ, flux: phi }, SidebandLine { frequency: FIG6C_STOKES_HZ, flux: phi * 10f64.powf(-0.95) }];
    let dark = DarkModel { level: 3e-18, slope: 1e-27, reference_frequency: 6.675e9 };
    synthesize_heterodyne(&lines, &grid, FIG6C_SHOT_PSD, FIG6C_RBW_HZ, &dark).expect("bundled scenario is valid")
}

/// (file name, contents) for everything in `data/`.
pub fn files() -> CliResult<Vec<(String, String)>> {
    let (signal, dark) = fig6c_pair();
    let side = |name: &str| sidecar_path(Path::new(name)).display().to_string();
    Ok(vec![
        ("table1.json".into(), json_string(&table1_config())?),
        ("spiral_srf.json".into(), json_string(&spiral_config())?),
        ("fig6c_signal.csv".into(), spectrum_csv(&signal)?),
        (side("fig6c_signal.csv"), sidecar_json(&signal)),
        ("fig6c_dark.csv".into(), spectrum_csv(&dark)?),
        (side("fig6c_dark.csv"), sidecar_json(&dark)),
    ])
}

pub fn data_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

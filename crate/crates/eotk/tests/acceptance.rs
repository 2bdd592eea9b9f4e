//! Acceptance report: one PASS/FAIL line per criterion, each built from named sub-checks
//! with pinned tolerances. Sub-checks listed in `EXPECTED_FAILURES` are known model
//! limitations; they still print FAIL, and the target exits non-zero if any other
//! sub-check fails or if an expected failure starts passing.

use std::f64::consts::PI;
use std::process::ExitCode;

use eotk::bundled;
use eotk_core::dynamics::{fit_exponential, rise_time, sample_times, simulate_qp_dynamics, InitialState, PulseSchedule, RateModel, TimeSeries};
use eotk_core::eo_model::{
    conversion_efficiency, coupling_g0, efficiency_vs_pump_power, gv_from_wavelength_tuning, infer_g0, sideband_ratio, zero_point_voltage,
    StrayLightModel,
};
use eotk_core::quantities::{
    angular_to_hz, dbm_to_watts, hz_to_angular, photon_flux, CavityMode, CouplingTopology, C_LIGHT, E_CHARGE, HBAR, K_B,
};
use eotk_core::resonator::{
    best_spiral_at_srf, cpw_kinetic_fraction, loaded_quarterwave_frequency, slot_circuit_analysis, spiral_inductance, spiral_resonance, CpwGeometry,
    SlotCircuit, SpiralGeometry, REFERENCE_SPIRAL, REFERENCE_SPIRAL_IMPEDANCE, REPRESENTATIVE_ELECTRODE_RATIO, REPRESENTATIVE_SLOT,
    TEST_DEVICE_SLOT,
};
use eotk_core::scenarios as sc;
use eotk_core::spectra::{
    additive_noise, calibrate_efficiency, eval_lineshape, fit_lineshape, linear_grid, multiplicative_noise, synthesize_heterodyne, DarkModel,
    FanoLorentzian, FitPolicy, PeakWindow, RfDrive, SidebandLine, Spectrum, SpectrumKind,
};
use eotk_core::superconductor::Superconductor;
use eotk_oracles::{greenhouse_square_spiral, mb_sigma1_raw, mb_sigma2_raw, qp_density_raw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances.
const COMPOSITION_REL: f64 = 1e-9;
const G0_PREDICTED_REL: f64 = 0.05;
const SIDEBAND_DB_TOL: f64 = 1.5;
const INFER_G0_TIGHT: f64 = 1e-6;
const GAP_REL: f64 = 0.01;
const SIGMA2_LIMIT_REL: f64 = 0.005;
const ORACLE_REL: f64 = 1e-6;
const ORACLE_POINTS: usize = 20;
const LS_REL: f64 = 0.5;
const LIFETIME_FACTOR: f64 = 2.0;
const ALPHA_K_ABS: f64 = 0.02;
const LOADED_F_REL: f64 = 0.10;
const UNLOADED_F_REL: f64 = 1e-9;
const THERMO_INVERSE_REL: f64 = 1e-6;
const DYNAMICS_REL: f64 = 1e-6;
const FAST_TRANSIENT_S: (f64, f64) = (3e-6, 30e-6);
const TAU_NOISELESS_REL: f64 = 1e-3;
const TAU_NOISY_REL: f64 = 0.05;
const FANO_REL: f64 = 1e-3;
const FANO_NOISE: f64 = 0.02;
const FANO_BIAS_REL: f64 = 0.01;
const FANO_TRIALS: u64 = 200;
const Q_I_REL: f64 = 0.01;
const CAL_EXACT_REL: f64 = 1e-9;
const CAL_SNR10_REL: f64 = 0.05;
const CAL_BUNDLED_REL: f64 = 0.01;
const GREENHOUSE_REL: f64 = 0.08;
const SPIRAL_Z_REL: f64 = 1e-12;
const SLOT_Q_THRESHOLD: f64 = 1e3;
const F3DB_FACTOR: f64 = 5.0;

/// (criterion, sub-check) pairs that fail against the implemented model.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(8, "fast transient")];

struct Sub {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn sub(name: &'static str, pass: bool, detail: impl Into<String>) -> Sub {
    Sub { name, pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn film() -> Superconductor {
    Superconductor::new(sc::aluminum_film()).expect("aluminum film is valid")
}

const W_MW: f64 = 2.0 * PI * sc::MICROWAVE_FREQUENCY_HZ;

fn composition_and_g0() -> Vec<Sub> {
    let o = CavityMode::with_total(
        hz_to_angular(sc::OPTICAL_FREQUENCY_HZ),
        hz_to_angular(sc::OPTICAL_INTRINSIC_HZ),
        hz_to_angular(sc::OPTICAL_EXTERNAL_HZ),
        hz_to_angular(sc::OPTICAL_TOTAL_HZ),
        CouplingTopology::SingleSided,
    );
    let m = CavityMode::with_total(
        hz_to_angular(sc::MICROWAVE_FREQUENCY_HZ),
        hz_to_angular(sc::MICROWAVE_INTRINSIC_HZ),
        hz_to_angular(sc::MICROWAVE_EXTERNAL_HZ),
        hz_to_angular(sc::MICROWAVE_TOTAL_HZ),
        CouplingTopology::TwoSided,
    );
    let opt_sum = sc::OPTICAL_INTRINSIC_HZ + sc::OPTICAL_EXTERNAL_HZ;
    let mw_sum = sc::MICROWAVE_INTRINSIC_HZ + 2.0 * sc::MICROWAVE_EXTERNAL_HZ;
    let broken = CavityMode::with_total(1e10, 1.0, 1.0, 2.0, CouplingTopology::TwoSided);

    let lam = sc::TUNING_WAVELENGTH_M;
    let g_v = gv_from_wavelength_tuning(sc::TUNING_GLUED_M_PER_V, lam).unwrap();
    let v_zpf = zero_point_voltage(W_MW, sc::IMPEDANCE_OHM).unwrap();
    let g0 = angular_to_hz(coupling_g0(g_v, v_zpf));
    // g0/2π = (c/λ²)·(dλ/dV)·ω√(ħZ/2)
    let oracle = C_LIGHT / (lam * lam) * sc::TUNING_GLUED_M_PER_V * W_MW * (HBAR * sc::IMPEDANCE_OHM / 2.0).sqrt();
    vec![
        sub(
            "optical composition",
            o.is_ok() && rel(opt_sum, sc::OPTICAL_TOTAL_HZ) < COMPOSITION_REL,
            format!("{opt_sum:e} vs {:e} Hz", sc::OPTICAL_TOTAL_HZ),
        ),
        sub(
            "microwave composition",
            m.is_ok() && rel(mw_sum, sc::MICROWAVE_TOTAL_HZ) < COMPOSITION_REL,
            format!("{mw_sum:e} vs {:e} Hz", sc::MICROWAVE_TOTAL_HZ),
        ),
        sub("inconsistent total rejected", broken.is_err(), "1 + 2·1 ≠ 2"),
        sub("g0 matches closed form", rel(g0, oracle) < 1e-9, format!("{g0:.2} vs {oracle:.2} Hz")),
        sub("g0 near prediction", rel(g0, sc::G0_PREDICTED_HZ) < G0_PREDICTED_REL, format!("{g0:.1} Hz vs {} Hz", sc::G0_PREDICTED_HZ)),
    ]
}

fn sideband_selectivity() -> Vec<Sub> {
    let o = sc::table1_device().optical;
    let r = sideband_ratio(&o, W_MW, -W_MW);
    let h = 0.5 * o.total();
    let oracle = 10.0 * ((h * h + 4.0 * W_MW * W_MW) / (h * h)).log10();
    vec![
        sub("closed form", (r - oracle).abs() < 1e-9, format!("{r:.4} vs {oracle:.4} dB")),
        sub("near measured 9.5 dB", (r - 9.5).abs() <= SIDEBAND_DB_TOL, format!("{r:.2} dB")),
    ]
}

fn infer_g0_round_trip() -> Vec<Sub> {
    let dev = sc::table1_device();
    let g0 = dev.g0.unwrap();
    let mut out = Vec::new();
    for c in [1e-9, 1e-6, 1e-3] {
        let n = c * dev.optical.total() * dev.microwave.total() / (4.0 * g0 * g0);
        let eta = conversion_efficiency(&dev, n).unwrap().efficiency;
        let back = infer_g0(eta, &dev, n).unwrap();
        let err = rel(back, g0);
        let limit = if c <= 1e-6 { INFER_G0_TIGHT.min(2.0 * c) } else { 2.0 * c };
        let name = match c {
            x if x < 1e-8 => "C = 1e-9",
            x if x < 1e-5 => "C = 1e-6",
            _ => "C = 1e-3",
        };
        out.push(sub(name, err <= limit, format!("rel err {err:.2e} ≤ {limit:.1e}")));
    }
    out
}

fn superconductor_suite() -> Vec<Sub> {
    let s = film();
    let p = *s.params();
    let gap0_ev = s.gap(0.0).unwrap().gap / E_CHARGE;
    let bcs_ev = 1.764 * K_B * p.tc / E_CHARGE;
    let c0 = s.complex_conductivity(W_MW, 0.0).unwrap();
    let limit = PI * p.delta0 / (HBAR * W_MW);
    let ratio = c0.sigma2 / p.sigma_n;

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < ORACLE_POINTS {
        let w = 2.0 * PI * rng.random_range(1.0..30.0) * 1e9;
        let t = rng.random_range(0.15..1.0);
        let gap = s.gap(t).unwrap().gap;
        if HBAR * w >= 2.0 * gap * 0.98 {
            continue;
        }
        let c = s.complex_conductivity(w, t).unwrap();
        let (kt, hw) = (K_B * t, HBAR * w);
        worst = worst
            .max(rel(c.sigma1 / p.sigma_n, mb_sigma1_raw(gap, hw, kt)))
            .max(rel(c.sigma2 / p.sigma_n, mb_sigma2_raw(gap, hw, kt)))
            .max(rel(s.qp_density(t).unwrap(), qp_density_raw(gap, kt, p.n0_per_um3())));
        count += 1;
    }
    let ls = s.surface_impedance(&c0).ls;
    vec![
        sub("gap at T = 0", rel(gap0_ev, 167e-6) < GAP_REL && rel(bcs_ev, 167e-6) < GAP_REL, format!("{:.2} μeV, 1.764·kTc = {:.2} μeV", gap0_ev * 1e6, bcs_ev * 1e6)),
        sub("σ2/σn at T = 0", rel(ratio, limit) < SIGMA2_LIMIT_REL && rel(limit, 19.0) < 0.01, format!("{ratio:.3} vs πΔ/ħω = {limit:.3}")),
        sub("σ1, σ2, n_qp vs quadrature", worst < ORACLE_REL, format!("worst rel {worst:.1e} over {ORACLE_POINTS} points")),
        sub("sheet inductance", rel(ls, 140e-15) < LS_REL, format!("{:.1} fH/sq", ls * 1e15)),
    ]
}

fn lifetimes() -> Vec<Sub> {
    let s = film();
    let t1 = s.qp_lifetime(5e3, None).unwrap();
    let t2 = s.qp_lifetime(5e4, None).unwrap();
    let within = |t: f64, r: f64| t / r <= LIFETIME_FACTOR && r / t <= LIFETIME_FACTOR;
    vec![
        sub("n = 5e3 μm⁻³", within(t1, 30e-6), format!("{:.2} μs vs 30 μs", t1 * 1e6)),
        sub("n = 5e4 μm⁻³", within(t2, 3e-6), format!("{:.3} μs vs 3 μs", t2 * 1e6)),
        sub("ratio", rel(t1 / t2, 10.0) < 1e-12, format!("{:.12}", t1 / t2)),
    ]
}

fn table_cpw() -> CpwGeometry {
    CpwGeometry {
        center_width: 5e-6,
        gap: 13e-6,
        length: 5200e-6,
        l_per_m: 620e-9,
        c_per_m: 63e-12,
        load_capacitance: 21e-15,
        film_thickness: 100e-9,
        sheet_inductance: 140e-15,
    }
    .with_film(&sc::aluminum_film())
}

fn cpw() -> Vec<Sub> {
    let g = table_cpw();
    let alpha = cpw_kinetic_fraction(&g).unwrap();
    let loaded = loaded_quarterwave_frequency(&g, alpha).unwrap();
    let bare = CpwGeometry { load_capacitance: 0.0, ..g };
    let f_bare = loaded_quarterwave_frequency(&bare, 0.0).unwrap();
    let v = 1.0 / (g.l_per_m * g.c_per_m).sqrt();
    let quarter = v / (4.0 * g.length);
    vec![
        sub("kinetic fraction", (alpha - 0.05).abs() <= ALPHA_K_ABS, format!("{:.2}%", alpha * 100.0)),
        sub("loaded frequency", rel(loaded, 6.672e9) < LOADED_F_REL, format!("{:.3} GHz", loaded / 1e9)),
        sub(
            "unloaded quarter wave",
            rel(f_bare, quarter) < UNLOADED_F_REL && rel(f_bare, 7.69e9) < 1e-3,
            format!("{:.4} GHz vs v/4l = {:.4} GHz", f_bare / 1e9, quarter / 1e9),
        ),
    ]
}

fn thermometry() -> Vec<Sub> {
    let s = film();
    let f0 = sc::MICROWAVE_FREQUENCY_HZ;
    let mut worst: f64 = 0.0;
    for t in [0.3, 0.5, 0.7, 0.9] {
        let f = s.resonator_response(sc::ALPHA_K, f0, t).unwrap().f0;
        worst = worst.max(rel(s.invert_frequency_shift(sc::ALPHA_K, f0, f).unwrap().temperature, t));
    }
    let t33 = s.invert_frequency_shift(sc::ALPHA_K, f0, f0 - 33e6).unwrap().temperature;
    vec![
        sub("inverse of forward model", worst < THERMO_INVERSE_REL, format!("worst rel {worst:.1e}")),
        sub("−33 MHz temperature", (0.6..=1.0).contains(&t33), format!("{t33:.3} K")),
    ]
}

fn dynamics() -> Vec<Sub> {
    let s = film();
    let dark = PulseSchedule::continuous(0.0, 0.0);

    let model = RateModel::from_superconductor(&s, 0.0);
    let k = model.recombination_k;
    let n0 = 5e4;
    let times = sample_times(200.0 * k / n0, 400);
    let traj = simulate_qp_dynamics(&model, &dark, &InitialState::cold(n0), &times).unwrap();
    let decay_err = traj.time.iter().zip(&traj.density).map(|(t, n)| rel(*n, n0 / (1.0 + n0 * t / k))).fold(0.0, f64::max);

    let mut model = RateModel::from_superconductor(&s, 0.0);
    model.background_generation = model.generation_for_density(2e4);
    let traj = simulate_qp_dynamics(&model, &dark, &InitialState::cold(10.0), &sample_times(100.0 * k / 2e4, 300)).unwrap();
    let n_ss = (model.background_generation * k).sqrt();
    let ss_err = rel(*traj.density.last().unwrap(), n_ss);

    // Step the generation from the 5e3 to the 5e4 μm⁻³ steady state.
    let mut model = RateModel::from_superconductor(&s, 1.0);
    model.bath.weight = 0.0;
    let (lo, hi) = (5e3, 5e4);
    model.background_generation = model.generation_for_density(lo);
    let step = PulseSchedule::continuous(model.generation_for_density(hi) - model.background_generation, 1.0);
    let traj = simulate_qp_dynamics(&model, &step, &InitialState::cold(lo), &sample_times(100e-6, 10001)).unwrap();
    let rise = rise_time(&traj.density_series(), lo, hi).unwrap_or(f64::NAN);

    let mut noiseless: f64 = 0.0;
    for tau in [655e-6, 450e-6] {
        let t = sample_times(4e-3, 400);
        let v: Vec<f64> = t.iter().map(|x| 6.672e9 - 13e6 * (-x / tau).exp()).collect();
        let fit = fit_exponential(&TimeSeries::new(t, v).unwrap(), (0.0, 4e-3)).unwrap();
        noiseless = noiseless.max(rel(fit.tau, tau));
    }
    let mut noisy: f64 = 0.0;
    for tau in [655e-6, 450e-6] {
        let t = sample_times(3e-3, 300);
        let clean: Vec<f64> = t.iter().map(|x| 1.0 + (-x / tau).exp()).collect();
        for seed in 0..50 {
            let v = additive_noise(&clean, 0.01, seed);
            let fit = fit_exponential(&TimeSeries::new(t.clone(), v).unwrap(), (0.0, 3e-3)).unwrap();
            noisy = noisy.max(rel(fit.tau, tau));
        }
    }
    vec![
        sub("free decay closed form", decay_err < DYNAMICS_REL, format!("worst rel {decay_err:.1e}")),
        sub("steady state √(GK)", ss_err < DYNAMICS_REL, format!("rel {ss_err:.1e}")),
        sub(
            "fast transient",
            rise >= FAST_TRANSIENT_S.0 && rise <= FAST_TRANSIENT_S.1,
            format!("1/e rise {:.2} μs, band [{}, {}] μs", rise * 1e6, FAST_TRANSIENT_S.0 * 1e6, FAST_TRANSIENT_S.1 * 1e6),
        ),
        sub("exponential fit noiseless", noiseless < TAU_NOISELESS_REL, format!("worst rel {noiseless:.1e}")),
        sub("exponential fit 1% noise", noisy < TAU_NOISY_REL, format!("worst rel {noisy:.3} over 100 fits")),
    ]
}

fn optical_model() -> FanoLorentzian {
    FanoLorentzian {
        f0: sc::OPTICAL_FREQUENCY_HZ,
        kappa_i: sc::OPTICAL_INTRINSIC_HZ,
        kappa_e: sc::OPTICAL_EXTERNAL_HZ,
        fano_phase: 0.0,
        amplitude: 1.0,
        slope: 0.0,
        topology: CouplingTopology::SingleSided,
    }
}

fn grid_around(m: &FanoLorentzian, linewidths: f64, n: usize) -> Vec<f64> {
    let h = 0.5 * linewidths * m.kappa_total();
    linear_grid(m.f0 - h, m.f0 + h, n)
}

fn fano_round_trip(m: &FanoLorentzian, kind: SpectrumKind, policy: FitPolicy) -> (f64, f64) {
    let s = eval_lineshape(m, &grid_around(m, 10.0, 401), kind).unwrap();
    let fit = fit_lineshape(&s, &policy).unwrap().model;
    let err = rel(fit.kappa_i, m.kappa_i).max(rel(fit.kappa_e, m.kappa_e)).max((fit.f0 - m.f0).abs() / m.kappa_total());
    (err, fit.f0 / fit.kappa_i)
}

fn fitting_and_calibration() -> Vec<Sub> {
    let opt = optical_model();
    let (opt_err, q_i) = fano_round_trip(&opt, SpectrumKind::OpticalReflection, FitPolicy::default());
    let mw = FanoLorentzian {
        f0: sc::MICROWAVE_FREQUENCY_HZ,
        kappa_i: sc::MICROWAVE_INTRINSIC_HZ,
        kappa_e: sc::MICROWAVE_EXTERNAL_HZ,
        topology: CouplingTopology::TwoSided,
        ..opt
    };
    let (mw_err, _) = fano_round_trip(&mw, SpectrumKind::MicrowaveS21, FitPolicy { topology: CouplingTopology::TwoSided, ..Default::default() });

    let clean = eval_lineshape(&opt, &grid_around(&opt, 8.0, 401), SpectrumKind::OpticalReflection).unwrap();
    let mean_total = (0..FANO_TRIALS)
        .map(|seed| {
            let noisy = Spectrum { psd: multiplicative_noise(&clean.psd, FANO_NOISE, seed), ..clean.clone() };
            fit_lineshape(&noisy, &FitPolicy::default()).unwrap().model.kappa_total()
        })
        .sum::<f64>()
        / FANO_TRIALS as f64;
    let bias = rel(mean_total, opt.kappa_total());

    let grid = linear_grid(6.60e9, 6.75e9, 751);
    let drive = RfDrive {
        power_w: dbm_to_watts(sc::RF_POWER_DBM).unwrap(),
        omega: hz_to_angular(sc::MICROWAVE_FREQUENCY_HZ),
        loss_uncertainty_db: bundled::FIG6C_LOSS_UNCERTAINTY_DB,
    };
    let dark = DarkModel { level: 3e-18, slope: 1e-27, reference_frequency: 6.675e9 };
    let shot = 2e-18;
    let window = PeakWindow::around(bundled::FIG6C_CENTER_HZ, bundled::FIG6C_HALF_WIDTH_HZ, bundled::FIG6C_REFERENCE_WIDTH_HZ);
    let phi = sc::ETA_MEASURED * photon_flux(drive.power_w, drive.omega).unwrap();
    let (sig, dk) = synthesize_heterodyne(&[SidebandLine { frequency: bundled::FIG6C_CENTER_HZ, flux: phi }], &grid, shot, 1e6, &dark).unwrap();
    let exact = calibrate_efficiency(&sig, &dk, &window, &drive).unwrap().efficiency;

    // flux whose integrated peak is ten times the integrated noise in the window
    let n_win = grid.iter().filter(|f| **f >= window.lower && **f <= window.upper).count() as f64;
    let sigma = 0.05 * shot;
    let flux = 10.0 * sigma * (grid[1] - grid[0]) * n_win.sqrt() / shot;
    let (sig10, dk10) = synthesize_heterodyne(&[SidebandLine { frequency: bundled::FIG6C_CENTER_HZ, flux }], &grid, shot, 1e6, &dark).unwrap();
    let mean_err = (0..100)
        .map(|seed| {
            let noisy = Spectrum { psd: additive_noise(&sig10.psd, sigma, seed), ..sig10.clone() };
            calibrate_efficiency(&noisy, &dk10, &window, &drive).unwrap().sideband_flux / flux - 1.0
        })
        .sum::<f64>()
        / 100.0;

    let dir = bundled::data_dir();
    let bundled_eta = eotk::io::read_spectrum(&dir.join("fig6c_signal.csv"))
        .and_then(|s| Ok((s, eotk::io::read_spectrum(&dir.join("fig6c_dark.csv"))?)))
        .ok()
        .and_then(|(s, d)| calibrate_efficiency(&s, &d, &window, &drive).ok())
        .map_or(f64::NAN, |r| r.efficiency);
    vec![
        sub("optical Fano round trip", opt_err < FANO_REL, format!("worst rel {opt_err:.1e}")),
        sub("intrinsic Q", rel(q_i, 93_100.0) < Q_I_REL, format!("{q_i:.0}")),
        sub("microwave two-sided round trip", mw_err < FANO_REL, format!("worst rel {mw_err:.1e}")),
        sub("κ_tot bias at 2% noise", bias < FANO_BIAS_REL, format!("{bias:.2e} over {FANO_TRIALS} trials")),
        sub("calibration exact", rel(exact, sc::ETA_MEASURED) < CAL_EXACT_REL, format!("η = {exact:.6e}")),
        sub("calibration at SNR 10", mean_err.abs() < CAL_SNR10_REL, format!("mean error {mean_err:.3e}")),
        sub("bundled pair", rel(bundled_eta, sc::ETA_MEASURED) < CAL_BUNDLED_REL, format!("η = {bundled_eta:.4e}")),
    ]
}

fn spiral() -> Vec<Sub> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for pitch in [0.5e-6, 1e-6] {
        for d_out in [60e-6, 100e-6] {
            for n in [5u32, 10, 15, 20, 27] {
                let g = SpiralGeometry { n_turns: n as f64, outer_diameter: d_out, wire_pitch: pitch, ..REFERENCE_SPIRAL };
                if g.validate().is_err() {
                    continue;
                }
                let oracle = greenhouse_square_spiral(n, d_out, pitch, g.fill_factor, 100e-9);
                worst = worst.max(rel(spiral_inductance(&g).unwrap(), oracle));
                count += 1;
            }
        }
    }
    let mut monotone = true;
    for pitch in [0.5e-6, 1e-6] {
        let mut prev: Option<(f64, f64)> = None;
        for n in 5..=40 {
            let g = SpiralGeometry { n_turns: n as f64, wire_pitch: pitch, outer_diameter: 100e-6, ..REFERENCE_SPIRAL };
            let Ok(r) = spiral_resonance(&g) else { break };
            if let Some((z, f)) = prev {
                monotone &= r.impedance > z && r.srf_hz < f;
            }
            prev = Some((r.impedance, r.srf_hz));
        }
    }
    let fine = best_spiral_at_srf(1..=120, 0.5e-6, 0.25, 3.6, 10e-6, 8e9).unwrap();
    let coarse = best_spiral_at_srf(1..=120, 1e-6, 0.25, 3.6, 10e-6, 8e9).unwrap();
    let z_ref = spiral_resonance(&REFERENCE_SPIRAL).unwrap().impedance;
    vec![
        sub("current sheet vs segment sum", count == 20 && worst < GREENHOUSE_REL, format!("worst rel {worst:.3} over {count} geometries")),
        sub("turns raise Z and lower SRF", monotone, "5..40 turns at 0.5 and 1 μm pitch"),
        sub(
            "finer pitch wins at 8 GHz",
            fine.resonance.impedance > coarse.resonance.impedance,
            format!("{:.0} Ω vs {:.0} Ω", fine.resonance.impedance, coarse.resonance.impedance),
        ),
        sub("reference spiral", rel(z_ref, REFERENCE_SPIRAL_IMPEDANCE) < SPIRAL_Z_REL, format!("{z_ref:.3} Ω")),
    ]
}

fn slot() -> Vec<Sub> {
    let c = SlotCircuit::from_geometry(&REPRESENTATIVE_SLOT, REPRESENTATIVE_ELECTRODE_RATIO * REPRESENTATIVE_SLOT.slot_capacitance(), 5e9);
    // Ω·cm, 1e-5 … 1e5
    let grid: Vec<f64> = (0..=100).map(|i| 10f64.powf(-5.0 + 0.1 * i as f64)).collect();
    let q: Vec<f64> = grid.iter().map(|r| slot_circuit_analysis(&c, r * 1e-2).unwrap().q_mw).collect();
    let imin = (0..q.len()).min_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap();
    let u_shaped = imin > 0 && imin < q.len() - 1 && q[..=imin].windows(2).all(|w| w[1] < w[0]) && q[imin..].windows(2).all(|w| w[1] > w[0]);
    let only_extremes = grid.iter().zip(&q).all(|(r, qq)| *qq <= SLOT_Q_THRESHOLD || *r <= 1e-2 || *r >= 1e2);
    let both_ends = q[0] > SLOT_Q_THRESHOLD && q[q.len() - 1] > SLOT_Q_THRESHOLD;

    let dev = SlotCircuit::from_geometry(&TEST_DEVICE_SLOT, 2.0 * TEST_DEVICE_SLOT.slot_capacitance(), sc::MICROWAVE_FREQUENCY_HZ);
    let f3db = slot_circuit_analysis(&dev, 12.5e-2).unwrap().f3db_hz;
    vec![
        sub("U-shaped Q", u_shaped, format!("minimum Q {:.1} at {:.1e} Ω·cm", q[imin], grid[imin])),
        sub("Q > 1e3 only at the extremes", only_extremes && both_ends, format!("Q = {:.1e} at 1e-5, {:.1e} at 1e5 Ω·cm", q[0], q[q.len() - 1])),
        sub("test device roll-off", f3db > 20e3 / F3DB_FACTOR && f3db < 20e3 * F3DB_FACTOR, format!("{:.1} kHz at 12.5 Ω·cm", f3db / 1e3)),
    ]
}

fn saturation() -> Vec<Sub> {
    let s = film();
    let dev = sc::table1_device();
    let powers: Vec<f64> = (0..25).map(|i| dbm_to_watts(-40.0 + i as f64).unwrap()).collect();
    let sweep = |enabled: bool| {
        let stray = StrayLightModel {
            absorbed_fraction: sc::STRAY_ABSORBED_FRACTION,
            heating: sc::stray_heating(),
            superconductor: &s,
            alpha_k: sc::ALPHA_K,
            enabled,
        };
        efficiency_vs_pump_power(&dev, -W_MW, &powers, &stray).unwrap().iter().map(|p| p.efficiency).collect::<Vec<f64>>()
    };
    let on = sweep(true);
    let off = sweep(false);
    let imax = (0..on.len()).max_by(|&a, &b| on[a].total_cmp(&on[b])).unwrap();
    let single_peak = imax > 0 && imax < on.len() - 1 && on[..=imax].windows(2).all(|w| w[1] > w[0]) && on[imax..].windows(2).all(|w| w[1] < w[0]);
    let monotone = off.windows(2).all(|w| w[1] > w[0]);
    vec![
        sub("stray light: single interior maximum", single_peak, format!("peak {:.2e} at {:.0} dBm", on[imax], -40.0 + imax as f64)),
        sub("no stray light: strictly increasing", monotone, format!("{:.2e} → {:.2e}", off[0], off[off.len() - 1])),
    ]
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Vec<Sub>); 12] = [
        (1, "rate composition and predicted g0", composition_and_g0),
        (2, "sideband selectivity", sideband_selectivity),
        (3, "g0 inference round trip", infer_g0_round_trip),
        (4, "BCS gap and Mattis-Bardeen conductivity", superconductor_suite),
        (5, "quasiparticle lifetimes", lifetimes),
        (6, "CPW resonator", cpw),
        (7, "frequency-shift thermometry", thermometry),
        (8, "quasiparticle dynamics", dynamics),
        (9, "lineshape fitting and efficiency calibration", fitting_and_calibration),
        (10, "spiral inductor", spiral),
        (11, "slot RC trade-off", slot),
        (12, "pump-power saturation", saturation),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let subs = run();
        let pass = subs.iter().all(|s| s.pass);
        println!("{} {id:>2} {title}", if pass { "PASS" } else { "FAIL" });
        for s in &subs {
            let expected = EXPECTED_FAILURES.contains(&(id, s.name));
            let tag = match (s.pass, expected) {
                (true, false) => "ok",
                (false, true) => "expected fail",
                (false, false) => "FAIL",
                (true, true) => "unexpected pass",
            };
            println!("       [{tag}] {}: {}", s.name, s.detail);
            if s.pass == expected {
                unexpected.push(format!("{id}/{}", s.name));
            }
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}

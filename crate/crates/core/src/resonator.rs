//! Circuit models: the capacitively loaded λ/4 coplanar-waveguide resonator, the
//! high-impedance square spiral inductor, and the strip-loaded slot-waveguide RC network.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::numerics::{bisect, brent, ellipk};
use crate::quantities::{SuperconductorParams, EPS_0, MU_0};

// ---------------------------------------------------------------------------
// Coplanar waveguide

/// λ/4 CPW shorted at one end and loaded by a capacitor at the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpwGeometry {
    /// Centre conductor width s, m.
    pub center_width: f64,
    /// Gap w between centre conductor and ground, m.
    pub gap: f64,
    /// Resonator length l, m.
    pub length: f64,
    /// Geometric inductance per length, H/m.
    pub l_per_m: f64,
    /// Capacitance per length, F/m.
    pub c_per_m: f64,
    /// Capacitance at the open end, F.
    pub load_capacitance: f64,
    /// Superconducting film thickness, m.
    pub film_thickness: f64,
    /// Sheet kinetic inductance at T = 0, H/square.
    pub sheet_inductance: f64,
}

impl CpwGeometry {
    pub fn validate(&self) -> Result<()> {
        require_positive("center_width", self.center_width)?;
        require_positive("gap", self.gap)?;
        require_positive("length", self.length)?;
        require_positive("l_per_m", self.l_per_m)?;
        require_positive("c_per_m", self.c_per_m)?;
        require_non_negative("load_capacitance", self.load_capacitance)?;
        require_positive("film_thickness", self.film_thickness)?;
        require_non_negative("sheet_inductance", self.sheet_inductance)?;
        Ok(())
    }

    /// Takes thickness and sheet inductance from a film record.
    pub fn with_film(mut self, film: &SuperconductorParams) -> Self {
        self.film_thickness = film.thickness;
        self.sheet_inductance = film.ls_ref;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineParams {
    pub l_per_m: f64,
    pub c_per_m: f64,
    pub z0: f64,
}

/// Quasi-static effective permittivity of a CPW on a substrate of relative permittivity
/// `eps_r` with air above.
pub fn cpw_effective_permittivity(eps_r: f64) -> f64 {
    0.5 * (1.0 + eps_r)
}

/// Conformal-mapping line parameters: L' = μ₀K(k')/(4K(k)), C' = 4ε₀ε_eff·K(k)/K(k').
pub fn cpw_line_params(g: &CpwGeometry, substrate_eps_r: f64) -> Result<LineParams> {
    require_positive("center_width", g.center_width)?;
    require_positive("gap", g.gap)?;
    require_positive("substrate_eps_r", substrate_eps_r)?;
    let k = g.center_width / (g.center_width + 2.0 * g.gap);
    let kp = (1.0 - k * k).sqrt();
    let ratio = ellipk(kp) / ellipk(k);
    let l = MU_0 / 4.0 * ratio;
    let c = 4.0 * EPS_0 * cpw_effective_permittivity(substrate_eps_r) / ratio;
    Ok(LineParams { l_per_m: l, c_per_m: c, z0: (l / c).sqrt() })
}

/// Thin-film kinetic-inductance geometry factors (g_c, g_g), 1/m.
pub fn cpw_geometry_factors(g: &CpwGeometry) -> Result<(f64, f64)> {
    g.validate()?;
    let (s, w, t) = (g.center_width, g.gap, g.film_thickness);
    let k = s / (s + 2.0 * w);
    let kk = ellipk(k);
    let pre = 1.0 / (4.0 * s * (1.0 - k * k) * kk * kk);
    let log_k = ((1.0 + k) / (1.0 - k)).ln();
    let gc = pre * (PI + (4.0 * PI * s / t).ln() - k * log_k);
    let gg = pre * k * (PI + (4.0 * PI * (s + 2.0 * w) / t).ln() - log_k / k);
    Ok((gc, gg))
}

/// Kinetic inductance fraction (g_c + g_g)·L_s / (L' + (g_c + g_g)·L_s).
pub fn cpw_kinetic_fraction(g: &CpwGeometry) -> Result<f64> {
    let (gc, gg) = cpw_geometry_factors(g)?;
    let lk = (gc + gg) * g.sheet_inductance;
    Ok(lk / (g.l_per_m + lk))
}

/// Lowest resonance of the shorted line loaded by `load_capacitance`:
/// Z₀·tan(βl) = 1/(ωC), with L_tot' = L'/(1 − α_k).
pub fn loaded_quarterwave_frequency(g: &CpwGeometry, alpha_k: f64) -> Result<f64> {
    g.validate()?;
    if !(0.0..1.0).contains(&alpha_k) {
        return Err(Error::invalid("alpha_k", format!("must lie in [0, 1), got {alpha_k}")));
    }
    let l_tot = g.l_per_m / (1.0 - alpha_k);
    let v = 1.0 / (l_tot * g.c_per_m).sqrt();
    let z0 = (l_tot / g.c_per_m).sqrt();
    let f_unloaded = v / (4.0 * g.length);
    if g.load_capacitance == 0.0 {
        return Ok(f_unloaded);
    }
    let w_hi = 2.0 * PI * f_unloaded;
    let c = g.load_capacitance;
    let h = |w: f64| {
        let bl = w / v * g.length;
        z0 * w * c * bl.sin() - bl.cos()
    };
    let w = brent(h, 1e-9 * w_hi, w_hi, 1e-13 * w_hi, 200)?;
    Ok(w / (2.0 * PI))
}

// ---------------------------------------------------------------------------
// Spiral inductor

/// Square planar spiral. `n_turns` is real-valued so it can be searched continuously.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiralGeometry {
    pub n_turns: f64,
    /// m.
    pub outer_diameter: f64,
    /// Centre-to-centre wire spacing, m.
    pub wire_pitch: f64,
    /// Wire width over pitch.
    pub fill_factor: f64,
    /// Effective permittivity around the spiral.
    pub cladding_permittivity: f64,
}

// Current-sheet coefficients for a square layout.
const C1: f64 = 1.27;
const C2: f64 = 2.07;
const C3: f64 = 0.18;
const C4: f64 = 0.13;

impl SpiralGeometry {
    pub fn wire_width(&self) -> f64 {
        self.fill_factor * self.wire_pitch
    }

    pub fn inner_diameter(&self) -> f64 {
        let w = self.wire_width();
        let s = self.wire_pitch - w;
        self.outer_diameter - 2.0 * (self.n_turns * w + (self.n_turns - 1.0) * s)
    }

    /// (d_out − d_in)/(d_out + d_in).
    pub fn fill_ratio(&self) -> f64 {
        let d_in = self.inner_diameter();
        (self.outer_diameter - d_in) / (self.outer_diameter + d_in)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_turns.is_finite() && self.n_turns >= 1.0) {
            return Err(Error::invalid("n_turns", format!("must be >= 1, got {}", self.n_turns)));
        }
        require_positive("outer_diameter", self.outer_diameter)?;
        require_positive("wire_pitch", self.wire_pitch)?;
        require_positive("cladding_permittivity", self.cladding_permittivity)?;
        if !(self.fill_factor > 0.0 && self.fill_factor <= 1.0) {
            return Err(Error::invalid("fill_factor", "must lie in (0, 1]"));
        }
        let phi = self.fill_ratio();
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::invalid(
                "outer_diameter",
                format!("turns do not fit: inner diameter {:.3e} m, fill ratio {phi:.3}", self.inner_diameter()),
            ));
        }
        Ok(())
    }
}

/// Current-sheet inductance (μ₀n²d_avg·c₁/2)·(ln(c₂/φ) + c₃φ + c₄φ²).
pub fn spiral_inductance(g: &SpiralGeometry) -> Result<f64> {
    g.validate()?;
    let d_avg = 0.5 * (g.outer_diameter + g.inner_diameter());
    let phi = g.fill_ratio();
    Ok(MU_0 * g.n_turns * g.n_turns * d_avg * C1 / 2.0 * ((C2 / phi).ln() + C3 * phi + C4 * phi * phi))
}

/// The spiral the self-capacitance coefficient is calibrated against.
pub const REFERENCE_SPIRAL: SpiralGeometry = SpiralGeometry {
    n_turns: 27.0,
    outer_diameter: 100e-6,
    wire_pitch: 1e-6,
    fill_factor: 0.25,
    cladding_permittivity: 3.6,
};
/// Characteristic impedance of the reference spiral, Ω.
pub const REFERENCE_SPIRAL_IMPEDANCE: f64 = 1.2e3;

/// Self-capacitance per unit area per unit permittivity, F/m², calibrated so that
/// [`REFERENCE_SPIRAL`] has √(L/C) = [`REFERENCE_SPIRAL_IMPEDANCE`].
pub fn spiral_capacitance_coefficient() -> f64 {
    let r = REFERENCE_SPIRAL;
    let l = spiral_inductance(&r).expect("reference spiral is valid");
    let c = l / (REFERENCE_SPIRAL_IMPEDANCE * REFERENCE_SPIRAL_IMPEDANCE);
    c / (r.cladding_permittivity * r.outer_diameter * r.outer_diameter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralResonance {
    pub inductance: f64,
    pub self_capacitance: f64,
    pub srf_hz: f64,
    pub impedance: f64,
}

/// Self-capacitance, self-resonant frequency and characteristic impedance.
pub fn spiral_resonance(g: &SpiralGeometry) -> Result<SpiralResonance> {
    let l = spiral_inductance(g)?;
    let c = spiral_capacitance_coefficient() * g.cladding_permittivity * g.outer_diameter * g.outer_diameter;
    Ok(SpiralResonance {
        inductance: l,
        self_capacitance: c,
        srf_hz: 1.0 / (2.0 * PI * (l * c).sqrt()),
        impedance: (l / c).sqrt(),
    })
}

/// Outcome of sizing a spiral to a target self-resonant frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SrfDesign {
    pub geometry: SpiralGeometry,
    pub resonance: SpiralResonance,
    /// False when even the smallest admissible spiral resonates below the target.
    pub feasible: bool,
    /// Impedance if feasible; otherwise a penalised value that still grows toward feasibility.
    pub score: f64,
}

/// Sizes the outer diameter so the spiral self-resonates at `srf_target_hz`, keeping the
/// inner diameter at least `min_inner`. The SRF falls monotonically with outer diameter.
pub fn spiral_at_srf(
    n_turns: f64,
    wire_pitch: f64,
    fill_factor: f64,
    cladding_permittivity: f64,
    min_inner: f64,
    srf_target_hz: f64,
) -> Result<SrfDesign> {
    require_positive("srf_target", srf_target_hz)?;
    require_positive("min_inner_diameter", min_inner)?;
    let w = fill_factor * wire_pitch;
    let s = wire_pitch - w;
    let d_min = min_inner + 2.0 * (n_turns * w + (n_turns - 1.0) * s);
    let geom = |d: f64| SpiralGeometry { n_turns, outer_diameter: d, wire_pitch, fill_factor, cladding_permittivity };
    let small = spiral_resonance(&geom(d_min))?;
    if small.srf_hz < srf_target_hz {
        let score = small.impedance * (srf_target_hz / small.srf_hz).powi(-4);
        return Ok(SrfDesign { geometry: geom(d_min), resonance: small, feasible: false, score });
    }
    let mut d_hi = 2.0 * d_min;
    while spiral_resonance(&geom(d_hi))?.srf_hz > srf_target_hz {
        d_hi *= 2.0;
        if d_hi > 1.0 {
            return Err(Error::Numerical { context: "spiral sizing", detail: "no outer diameter below 1 m reaches the target".into() });
        }
    }
    let d = bisect(|d| Ok(spiral_resonance(&geom(d))?.srf_hz <= srf_target_hz), d_min, d_hi, 1e-12 * d_hi)?;
    let resonance = spiral_resonance(&geom(d))?;
    Ok(SrfDesign { geometry: geom(d), resonance, feasible: true, score: resonance.impedance })
}

/// Best integer turn count in `turns` for a target SRF at fixed pitch.
pub fn best_spiral_at_srf(
    turns: std::ops::RangeInclusive<u32>,
    wire_pitch: f64,
    fill_factor: f64,
    cladding_permittivity: f64,
    min_inner: f64,
    srf_target_hz: f64,
) -> Result<SrfDesign> {
    let mut best: Option<SrfDesign> = None;
    for n in turns {
        let d = spiral_at_srf(n as f64, wire_pitch, fill_factor, cladding_permittivity, min_inner, srf_target_hz)?;
        if d.feasible && best.is_none_or(|b| d.score > b.score) {
            best = Some(d);
        }
    }
    best.ok_or_else(|| Error::OutOfRange("no turn count reaches the target SRF".into()))
}

// ---------------------------------------------------------------------------
// Strip-loaded slot waveguide

/// Slot-waveguide cross-section used to derive the circuit elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotGeometry {
    pub slot_width: f64,
    pub rail_height: f64,
    /// Resistive path length on each side, m.
    pub path_per_side: f64,
    /// Cross-section the current flows through on each side, m².
    pub conduction_area: f64,
    /// Waveguide length, m.
    pub length: f64,
    /// Relative permittivity filling the slot.
    pub slot_permittivity: f64,
}

impl SlotGeometry {
    pub fn slot_capacitance(&self) -> f64 {
        EPS_0 * self.slot_permittivity * self.rail_height * self.length / self.slot_width
    }

    /// R/ρ for the two series slab paths, 1/m.
    pub fn resistance_per_resistivity(&self) -> f64 {
        2.0 * self.path_per_side / self.conduction_area
    }
}

/// Series slab resistance and slot capacitance, shunted by the electrode capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotCircuit {
    pub slot_capacitance: f64,
    pub electrode_capacitance: f64,
    /// R/ρ, 1/m.
    pub resistance_per_resistivity: f64,
    pub analysis_frequency: f64,
}

impl SlotCircuit {
    pub fn from_geometry(g: &SlotGeometry, electrode_capacitance: f64, analysis_frequency: f64) -> Self {
        SlotCircuit {
            slot_capacitance: g.slot_capacitance(),
            electrode_capacitance,
            resistance_per_resistivity: g.resistance_per_resistivity(),
            analysis_frequency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("slot_capacitance", self.slot_capacitance)?;
        require_positive("electrode_capacitance", self.electrode_capacitance)?;
        require_positive("resistance_per_resistivity", self.resistance_per_resistivity)?;
        require_positive("analysis_frequency", self.analysis_frequency)?;
        Ok(())
    }

    /// Network impedance at angular frequency `w` for resistivity `rho` (Ω·m).
    pub fn impedance(&self, rho: f64, w: f64) -> Complex64 {
        let r = rho * self.resistance_per_resistivity;
        let j = Complex64::i();
        let series = r + 1.0 / (j * w * self.slot_capacitance);
        let shunt = 1.0 / (j * w * self.electrode_capacitance);
        series * shunt / (series + shunt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotAnalysis {
    pub resistance: f64,
    /// |Im Z|/Re Z at the analysis frequency; infinite for a lossless network.
    pub q_mw: f64,
    pub f3db_hz: f64,
    /// |V_slot/V_applied| at the analysis frequency.
    pub voltage_fraction: f64,
}

/// Microwave Q, RC roll-off and slot voltage fraction at resistivity `rho` (Ω·m).
pub fn slot_circuit_analysis(c: &SlotCircuit, rho: f64) -> Result<SlotAnalysis> {
    c.validate()?;
    require_non_negative("resistivity", rho)?;
    let w = 2.0 * PI * c.analysis_frequency;
    let z = c.impedance(rho, w);
    let r = rho * c.resistance_per_resistivity;
    let q_mw = if z.re > 0.0 { z.im.abs() / z.re } else { f64::INFINITY };
    let f3db_hz = if r > 0.0 { 1.0 / (2.0 * PI * r * c.slot_capacitance) } else { f64::INFINITY };
    let x = w * r * c.slot_capacitance;
    Ok(SlotAnalysis { resistance: r, q_mw, f3db_hz, voltage_fraction: 1.0 / (1.0 + x * x).sqrt() })
}

/// User-supplied resistivity → optical-Q table, interpolated log-log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalQTable {
    /// (resistivity Ω·m, optical Q) pairs with strictly increasing resistivity.
    pub points: Vec<(f64, f64)>,
}

impl OpticalQTable {
    pub fn optical_q(&self, rho: f64) -> Result<f64> {
        let pts = &self.points;
        if pts.len() < 2 {
            return Err(Error::invalid("optical_q_table", "needs at least two points"));
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) || pts.iter().any(|p| p.0 <= 0.0 || p.1 <= 0.0) {
            return Err(Error::invalid("optical_q_table", "resistivities must be positive and increasing, Q positive"));
        }
        if rho < pts[0].0 || rho > pts[pts.len() - 1].0 {
            return Err(Error::OutOfRange(format!("resistivity {rho:e} Ω·m is outside the table")));
        }
        let i = pts.partition_point(|p| p.0 <= rho).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (rho.ln() - a.0.ln()) / (b.0.ln() - a.0.ln());
        Ok((a.1.ln() + t * (b.1.ln() - a.1.ln())).exp())
    }
}

/// Representative strip-loaded slot waveguide for the resistivity trade-off.
pub const REPRESENTATIVE_SLOT: SlotGeometry = SlotGeometry {
    slot_width: 150e-9,
    rail_height: 220e-9,
    path_per_side: 1e-6,
    // transverse flow through a 50 nm slab
    conduction_area: 50e-9 * 100e-6,
    length: 100e-6,
    slot_permittivity: 2.89,
};
/// Electrode-to-electrode capacitance relative to the slot capacitance for the representative device.
pub const REPRESENTATIVE_ELECTRODE_RATIO: f64 = 2.0;

/// The slotted test cavity contacted at the far ends of its mode converters; current
/// runs along the rails themselves.
pub const TEST_DEVICE_SLOT: SlotGeometry = SlotGeometry {
    slot_width: 180e-9,
    rail_height: 220e-9,
    path_per_side: 200e-6,
    conduction_area: 0.2e-6 * 0.22e-6,
    length: 200e-6,
    slot_permittivity: 2.89,
};

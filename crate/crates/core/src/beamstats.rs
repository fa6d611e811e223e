//! Closed-form beam analytics: interval count, degeneracy, HBT contrasts,
//! reduced probabilities and count rates, the single/two-electron criterion,
//! and Poissonian multielectron averaging.

use serde::{Deserialize, Serialize};

use crate::coincidence::Polarization;
use crate::error::{Error, Result};
use crate::propagation::PhysicalParams;
use crate::units::j_to_ev;

/// Repetition, window and emission statistics of a pulsed beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamStats {
    /// Pulse repetition rate f in Hz.
    pub rep_rate_f: f64,
    /// Coincidence window t_w in s.
    pub window_tw: f64,
    /// Data acquisition time in s.
    pub acq_time: f64,
    /// Single-electron pulses per second η₁.
    pub eta1_rate: f64,
    /// Two-electron pulses per second η₂.
    pub eta2_rate: f64,
    /// Mean electrons per pulse ⟨η⟩ = ⟨R_e⟩/f.
    pub mean_eta: f64,
    /// Electron emission rate R_e in electrons/s.
    pub emission_rate_re: f64,
    /// Actual electron pulse duration ΔT_e in s.
    pub actual_pulse_duration_dte: f64,
}

impl BeamStats {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rep_rate_f", self.rep_rate_f),
            ("acq_time", self.acq_time),
            ("eta1_rate", self.eta1_rate),
            ("eta2_rate", self.eta2_rate),
            ("mean_eta", self.mean_eta),
            ("emission_rate_re", self.emission_rate_re),
            ("actual_pulse_duration_dte", self.actual_pulse_duration_dte),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be >= 0, got {v:e}")));
            }
        }
        if !(self.window_tw > 0.0) {
            return Err(Error::domain(format!(
                "window_tw must be positive, got {:e}",
                self.window_tw
            )));
        }
        if self.eta1_rate + self.eta2_rate > self.rep_rate_f {
            return Err(Error::domain(format!(
                "eta1 + eta2 = {:e} exceeds the repetition rate {:e}",
                self.eta1_rate + self.eta2_rate,
                self.rep_rate_f
            )));
        }
        Ok(())
    }
}

/// Number of phase-space intervals N = 2·T_pulse/T_c, rounded to the nearest
/// integer and clamped to ≥ 2 (with a warning when rounding moves the value).
pub fn interval_count(tc: f64, tpulse: f64) -> Result<u32> {
    if !(tc > 0.0 && tc.is_finite()) {
        return Err(Error::domain(format!("coherence time must be positive, got {tc:e}")));
    }
    if tpulse < tc {
        return Err(Error::domain(format!(
            "pulse duration {tpulse:e} s is shorter than the coherence time {tc:e} s"
        )));
    }
    let exact = 2.0 * tpulse / tc;
    let rounded = exact.round().max(2.0);
    if (rounded - exact).abs() > 1e-9 * exact {
        log::warn!("interval count 2*T_pulse/T_c = {exact} is not an integer; rounded to {rounded}");
    }
    Ok(rounded as u32)
}

/// Source degeneracy δ ≈ n·T_c/(2·T_pulse), capped at the Pauli bound 1.
pub fn degeneracy(n: f64, tc: f64, tpulse: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::domain(format!("electron count must be >= 0, got {n}")));
    }
    if tpulse < tc {
        return Err(Error::domain(format!(
            "pulse duration {tpulse:e} s is shorter than the coherence time {tc:e} s"
        )));
    }
    let delta = n * tc / (2.0 * tpulse);
    if delta > 1.0 {
        log::warn!("degeneracy {delta} exceeds the Pauli bound; capping at 1");
        return Ok(1.0);
    }
    Ok(delta)
}

/// Analytic HBT contrast: 1/(N−1) polarized, 1/(2N−1) unpolarized.
pub fn contrast_analytic(n: u32, pol: Polarization) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("interval count must be >= 2, got {n}")));
    }
    Ok(match pol {
        Polarization::Polarized => 1.0 / (n - 1) as f64,
        Polarization::Unpolarized => 1.0 / (2 * n - 1) as f64,
    })
}

/// Reduction of the joint detection probability density at τ = 0:
/// (T_c/2T_pulse)·P⁰_incoh unpolarized, twice that polarized.
pub fn delta_p(tc: f64, tpulse: f64, p_incoh0: f64, pol: Polarization) -> Result<f64> {
    if !(p_incoh0 > 0.0) {
        return Err(Error::domain(format!(
            "incoherent level must be positive, got {p_incoh0:e}"
        )));
    }
    let unpol = tc / (2.0 * tpulse) * p_incoh0;
    Ok(match pol {
        Polarization::Unpolarized => unpol,
        Polarization::Polarized => 2.0 * unpol,
    })
}

/// Reduced coincidence count rate ΔR = ΔP·t_w·f, assuming exactly two
/// electrons per pulse.
pub fn reduced_rate(delta_p: f64, tw: f64, f: f64) -> f64 {
    delta_p * tw * f
}

/// Reduced rate and HBT criterion for a beam with η₁ single-electron and η₂
/// two-electron pulses per second: ΔR = [(η₂−η₁)·P⁰_incoh − η₂·P⁰]·t_w, and
/// the antibunching signal requires (η₂−η₁)/η₂ > P⁰/P⁰_incoh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedRate {
    pub delta_r: f64,
    /// None when η₂ = 0 (no two-electron pulses, no signal to speak of).
    pub criterion: Option<bool>,
}

pub fn mixed_rate(eta1: f64, eta2: f64, p0: f64, p_incoh0: f64, tw: f64) -> Result<MixedRate> {
    for (name, v) in [("eta1", eta1), ("eta2", eta2), ("p0", p0), ("p_incoh0", p_incoh0)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be >= 0, got {v:e}")));
        }
    }
    let delta_r = ((eta2 - eta1) * p_incoh0 - eta2 * p0) * tw;
    let criterion = if eta2 == 0.0 {
        None
    } else {
        Some((eta2 - eta1) / eta2 > p0 / p_incoh0)
    };
    Ok(MixedRate { delta_r, criterion })
}

/// Multielectron pulse bookkeeping: η electrons inside an actual pulse of
/// duration ΔT_e shrink the effective two-electron pulse duration to
/// T_pulse = 2ΔT_e/η and the interval count to N = 4ΔT_e/(η·T_c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultielectronPulse {
    pub eta_max: u32,
    pub t_pulse_eff: f64,
    pub n_eff: f64,
}

/// Maximum electron number η_max = 2ΔT_e/T_c, floored to an integer.
pub fn eta_max(dte: f64, tc: f64) -> Result<u32> {
    if !(dte > 0.0 && tc > 0.0) {
        return Err(Error::domain("pulse and coherence times must be positive".to_string()));
    }
    let exact = 2.0 * dte / tc;
    // Snap to the nearest integer when within rounding noise of one, so that
    // ratios like 2·(50 fs)/(10 fs) stay 10 despite the fs conversions.
    let nearest = exact.round();
    if (exact - nearest).abs() < 1e-9 * exact.max(1.0) {
        return Ok(nearest as u32);
    }
    let floored = exact.floor();
    log::warn!("eta_max = {exact} is not an integer; flooring to {floored}");
    Ok(floored as u32)
}

pub fn multielectron(eta: u32, dte: f64, tc: f64) -> Result<MultielectronPulse> {
    let eta_max = eta_max(dte, tc)?;
    if eta < 2 || eta > eta_max {
        return Err(Error::domain(format!(
            "eta = {eta} outside the Pauli-restricted range 2..={eta_max}"
        )));
    }
    let t_pulse_eff = 2.0 * dte / eta as f64;
    let n_eff = 4.0 * dte / (eta as f64 * tc);
    Ok(MultielectronPulse { eta_max, t_pulse_eff, n_eff })
}

/// Poisson probability of η electrons at mean ⟨η⟩, computed by the stable
/// multiplicative recurrence p_η = p_{η−1}·⟨η⟩/η from p₀ = e^{−⟨η⟩}.
pub fn poisson_pmf(eta: u32, mean: f64) -> f64 {
    let mut p = (-mean).exp();
    for k in 1..=eta {
        p *= mean / k as f64;
    }
    p
}

/// Poisson-averaged reduction of the joint probability density:
/// ⟨ΔP⟩ = Σ_{η=2}^{η_max} (η/η_max)·(P⁰_incoh/2)·Poisson(η; ⟨η⟩).
pub fn poisson_avg_delta_p(mean_eta: f64, dte: f64, tc: f64, p_incoh0: f64) -> Result<f64> {
    if !(mean_eta > 0.0) {
        return Err(Error::domain(format!("mean eta must be positive, got {mean_eta:e}")));
    }
    let eta_max = eta_max(dte, tc)?;
    if eta_max < 2 {
        return Err(Error::domain(format!(
            "eta_max = {eta_max} < 2: the pulse cannot carry an electron pair"
        )));
    }
    let mut acc = 0.0;
    for eta in 2..=eta_max {
        acc += eta as f64 / eta_max as f64 * (p_incoh0 / 2.0) * poisson_pmf(eta, mean_eta);
    }
    Ok(acc)
}

/// Mean kinetic energy (m/2)(D/T)² in eV.
pub fn kinetic_energy(params: &PhysicalParams) -> f64 {
    let v = params.distance_d / params.flight_t;
    j_to_ev(0.5 * params.mass * v * v)
}

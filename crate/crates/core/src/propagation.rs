//! Free-space propagation of temporal-slit amplitudes to a far-field
//! detector: the path-integral kernel, the adaptive slit quadrature, the
//! diffraction-in-time spectra and their analytic consistency predictors.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::{ELECTRON_MASS, HBAR};
use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Source/detector geometry and particle data, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Particle mass in kg.
    pub mass: f64,
    /// Reduced Planck constant in J·s.
    pub hbar: f64,
    /// Source-to-detector distance D in m.
    pub distance_d: f64,
    /// Anticoincidence (mean flight) time T in s.
    pub flight_t: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, distance_d: f64, flight_t: f64) -> Result<Self> {
        let p = PhysicalParams {
            mass,
            hbar: HBAR,
            distance_d,
            flight_t,
        };
        p.validate()?;
        Ok(p)
    }

    /// Electron of the given geometry.
    pub fn electron(distance_d: f64, flight_t: f64) -> Result<Self> {
        Self::new(ELECTRON_MASS, distance_d, flight_t)
    }

    /// Same geometry with the mass scaled, e.g. 2.0 for the two-electron
    /// "boson of mass 2m" comparison.
    pub fn with_mass_multiplier(&self, multiplier: f64) -> Result<Self> {
        Self::new(self.mass * multiplier, self.distance_d, self.flight_t)
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::domain(format!("mass must be positive, got {:e}", self.mass)));
        }
        if !(self.distance_d > 0.0 && self.distance_d.is_finite()) {
            return Err(Error::domain(format!(
                "distance_D must be positive, got {:e}",
                self.distance_d
            )));
        }
        if !(self.flight_t > 0.0 && self.flight_t.is_finite()) {
            return Err(Error::domain(format!(
                "flight_T must be positive, got {:e}",
                self.flight_t
            )));
        }
        let ke = 0.5 * self.mass * (self.distance_d / self.flight_t).powi(2);
        if !(ke > 0.0 && ke.is_finite()) {
            return Err(Error::domain("kinetic energy is not finite and positive".to_string()));
        }
        Ok(())
    }
}

/// A temporal slit: the shutter is open on [t_start, t_start + duration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalSlit {
    pub t_start: f64,
    pub duration_a: f64,
}

impl TemporalSlit {
    pub fn new(t_start: f64, duration_a: f64) -> Result<Self> {
        if !(duration_a > 0.0 && duration_a.is_finite()) {
            return Err(Error::domain(format!(
                "slit duration must be positive, got {duration_a:e}"
            )));
        }
        Ok(TemporalSlit { t_start, duration_a })
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration_a
    }
}

/// Uniform sampling of the detection-time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl DetectionGrid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_min < t_max) {
            return Err(Error::domain(format!(
                "grid requires t_min < t_max, got [{t_min:e}, {t_max:e}]"
            )));
        }
        if n_points < 2 {
            return Err(Error::domain(format!("grid requires n_points >= 2, got {n_points}")));
        }
        Ok(DetectionGrid { t_min, t_max, n_points })
    }

    /// Default window for a slit of duration `a`: the flight time T plus and
    /// minus three times the larger first-zero excursion of Eq.-45 type,
    /// clamped below at T/20 so the lower edge stays in the far field.
    pub fn centered_on_flight(params: &PhysicalParams, a: f64, n_points: usize) -> Result<Self> {
        let t = params.flight_t;
        let zeros = first_zero_times(a, params)?;
        let mut dev = t - zeros.t_trail;
        if let Some(lead) = zeros.t_lead {
            dev = dev.max(lead - t);
        }
        let t_min = (t - 3.0 * dev).max(t / 20.0);
        let t_max = t + 3.0 * dev;
        Self::new(t_min, t_max, n_points)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_min + self.spacing() * i as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }

    /// Trapezoid weight of grid point `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i == self.n_points - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoidal integral of samples on this grid.
    pub fn trapezoid<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        (0..self.n_points).map(|i| self.weight(i) * f(i)).sum()
    }
}

/// Adaptive-quadrature controls for the slit integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Trapezoid intervals per slit on the first pass.
    pub initial_samples_per_slit: usize,
    /// Stop once one doubling changes sup|φ|² by less than this, relative to
    /// the spectrum's own sup.
    pub refinement_tolerance: f64,
    pub max_doublings: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            initial_samples_per_slit: 64,
            refinement_tolerance: 1e-6,
            max_doublings: 12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_samples_per_slit < 8 {
            return Err(Error::domain(format!(
                "initial_samples_per_slit must be >= 8, got {}",
                self.initial_samples_per_slit
            )));
        }
        if !(self.refinement_tolerance > 0.0) {
            return Err(Error::domain(format!(
                "refinement_tolerance must be positive, got {:e}",
                self.refinement_tolerance
            )));
        }
        Ok(())
    }
}

/// Complex single-particle amplitude sampled on a detection-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub grid: DetectionGrid,
    pub values: Vec<Complex64>,
    pub normalized: bool,
}

impl AmplitudeTrace {
    /// Trapezoidal ∫|φ(t)|² dt over the grid window.
    pub fn norm_integral(&self) -> f64 {
        self.grid.trapezoid(|i| self.values[i].norm_sqr())
    }

    /// |φ(t)|² samples.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Real diffraction-in-time spectrum, normalized to unit time-integral.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub grid: DetectionGrid,
    pub values: Vec<f64>,
}

impl SpectrumTrace {
    /// Detection time of the global maximum.
    pub fn peak_time(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        self.grid.time(i)
    }

    pub fn peak_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Grid indices of strict local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        (1..self.values.len() - 1)
            .filter(|&i| self.values[i] < self.values[i - 1] && self.values[i] <= self.values[i + 1])
            .collect()
    }

    /// Parabolic refinement of a local minimum at interior grid index `j`.
    pub fn refine_minimum_at(&self, j: usize) -> Option<f64> {
        if j == 0 || j + 1 >= self.values.len() {
            return None;
        }
        let (y0, y1, y2) = (self.values[j - 1], self.values[j], self.values[j + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        let shift = if denom.abs() > 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
        Some(self.grid.time(j) + shift * self.grid.spacing())
    }

    /// Locate the local minimum nearest `t_near` and refine it with a
    /// three-point parabola. Returns `None` if no interior minimum exists.
    pub fn refine_minimum_near(&self, t_near: f64) -> Option<f64> {
        let minima = self.local_minima();
        let &j = minima
            .iter()
            .min_by(|&&a, &&b| {
                let da = (self.grid.time(a) - t_near).abs();
                let db = (self.grid.time(b) - t_near).abs();
                da.partial_cmp(&db).unwrap()
            })?;
        self.refine_minimum_at(j)
    }

    /// Central fringe width: the spacing between the two local minima that
    /// flank the global maximum.
    pub fn central_fringe_width(&self) -> Option<f64> {
        let minima = self.local_minima();
        let peak_idx = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
            .0;
        let left = *minima.iter().filter(|&&i| i < peak_idx).max()?;
        let right = *minima.iter().filter(|&&i| i > peak_idx).min()?;
        Some(self.refine_minimum_at(right)? - self.refine_minimum_at(left)?)
    }
}

/// Free-space path-integral kernel between a source event at `t_i` and a
/// detection event at `t_f`, for the fixed flight distance in `params`:
/// sqrt(m / (i·2πħ·Δt)) · exp(i·m·D² / (2ħ·Δt)) on the principal branch.
pub fn free_kernel(t_i: f64, t_f: f64, params: &PhysicalParams) -> Result<Complex64> {
    if !(t_f > t_i) {
        return Err(Error::AcausalPath { t_i, t_f });
    }
    Ok(kernel_unchecked(t_i, t_f, params))
}

#[inline]
fn kernel_unchecked(t_i: f64, t_f: f64, params: &PhysicalParams) -> Complex64 {
    let dt = t_f - t_i;
    let modulus = (params.mass / (2.0 * PI * params.hbar * dt)).sqrt();
    // 1/sqrt(i) = e^{-i π/4} on the principal branch.
    let phase = params.mass * params.distance_d * params.distance_d / (2.0 * params.hbar * dt)
        - PI / 4.0;
    Complex64::from_polar(modulus, phase)
}

/// Source plane-wave angular frequency ω = −m·D²/(2ħ·T²), the far-field
/// value that puts the constructive-interference peak at the flight time T.
/// Negative by convention; the source phase is e^{iωt}.
pub fn source_frequency(params: &PhysicalParams) -> f64 {
    -params.mass * params.distance_d * params.distance_d
        / (2.0 * params.hbar * params.flight_t * params.flight_t)
}

/// Residual of the exact constructive-interference phase equation for a slit
/// of duration `a` and source frequency `omega`:
/// (mD²/2ħT)·[1/(1+a/T) − 1] − ω·a.
///
/// With `omega` from [`source_frequency`] the residual is O(a/T) relative to
/// ω·a.
pub fn exact_phase_residual(a: f64, omega: f64, params: &PhysicalParams) -> f64 {
    let t = params.flight_t;
    let lead = params.mass * params.distance_d * params.distance_d / (2.0 * params.hbar * t);
    lead * (1.0 / (1.0 + a / t) - 1.0) - omega * a
}

/// Diffraction-in-space analog: wave-number κ = m·Δ/(ħ·τ) for a screen
/// offset Δ and fixed detection time τ.
pub fn spatial_wavenumber(delta: f64, tau: f64, mass: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("detection time must be positive, got {tau:e}")));
    }
    Ok(mass * delta / (HBAR * tau))
}

/// First zeros of the single-slit diffraction-in-time pattern,
/// t₀ = 1 / sqrt(±4πħ/(m·a·D²) + 1/T²).
///
/// The minus branch (leading edge, later than T) only exists while
/// 4πħ/(m·a·D²) < 1/T²; otherwise `t_lead` is reported absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstZeros {
    pub t_lead: Option<f64>,
    pub t_trail: f64,
}

pub fn first_zero_times(a: f64, params: &PhysicalParams) -> Result<FirstZeros> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("slit duration must be positive, got {a:e}")));
    }
    let d2 = params.distance_d * params.distance_d;
    let perturbation = 4.0 * PI * params.hbar / (params.mass * a * d2);
    let inv_t2 = 1.0 / (params.flight_t * params.flight_t);
    let t_trail = 1.0 / (perturbation + inv_t2).sqrt();
    let t_lead = if perturbation < inv_t2 {
        Some(1.0 / (inv_t2 - perturbation).sqrt())
    } else {
        None
    };
    Ok(FirstZeros { t_lead, t_trail })
}

/// Accumulated phase difference between the two boundary trajectories of a
/// slit, both arriving at detection time `t_det`:
/// ω·a + (mD²/2ħ)·[1/(t_det − t_end) − 1/(t_det − t_start)].
///
/// At a first zero of the pattern this equals ±2π.
pub fn boundary_phase_difference(slit: &TemporalSlit, t_det: f64, params: &PhysicalParams) -> Result<f64> {
    if !(t_det > slit.t_end()) {
        return Err(Error::AcausalPath { t_i: slit.t_end(), t_f: t_det });
    }
    let omega = source_frequency(params);
    let lead = params.mass * params.distance_d * params.distance_d / (2.0 * params.hbar);
    Ok(omega * slit.duration_a
        + lead * (1.0 / (t_det - slit.t_end()) - 1.0 / (t_det - slit.t_start)))
}

fn map_times(times: &[f64], f: impl Fn(f64) -> Complex64 + Sync) -> Vec<Complex64> {
    #[cfg(feature = "parallel")]
    {
        times.par_iter().map(|&t| f(t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        times.iter().map(|&t| f(t)).collect()
    }
}

/// Slit amplitude with a fixed trapezoid rule of `intervals` sub-intervals,
/// evaluated at arbitrary detection times (all later than the slit end).
///
/// φ(t) = ∫_slit e^{iω·t_src} K(t_src, t) dt_src. The quadrature sum runs in
/// a fixed order, so results are independent of the worker count.
pub fn slit_amplitude_at_times(
    slit: &TemporalSlit,
    times: &[f64],
    params: &PhysicalParams,
    intervals: usize,
) -> Result<Vec<Complex64>> {
    if let Some(&t) = times.iter().find(|&&t| t <= slit.t_end()) {
        return Err(Error::domain(format!(
            "detection time {t:e} s is not later than the slit end {:e} s",
            slit.t_end()
        )));
    }
    let omega = source_frequency(params);
    let n_nodes = intervals + 1;
    let h = slit.duration_a / intervals as f64;
    let nodes: Vec<f64> = (0..n_nodes).map(|q| slit.t_start + h * q as f64).collect();
    let weights: Vec<f64> = (0..n_nodes)
        .map(|q| if q == 0 || q == n_nodes - 1 { 0.5 * h } else { h })
        .collect();
    let mass = params.mass;
    let hbar = params.hbar;
    let half_action = mass * params.distance_d * params.distance_d / (2.0 * hbar);
    let values = map_times(times, |t| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&tq, &w) in nodes.iter().zip(weights.iter()) {
            let dt = t - tq;
            let modulus = w * (mass / (2.0 * PI * hbar * dt)).sqrt();
            let phase = omega * tq + half_action / dt - PI / 4.0;
            acc += Complex64::from_polar(modulus, phase);
        }
        acc
    });
    Ok(values)
}

/// Slit amplitude on a detection grid with a fixed trapezoid rule.
pub fn slit_amplitude_fixed(
    slit: &TemporalSlit,
    grid: &DetectionGrid,
    params: &PhysicalParams,
    intervals: usize,
) -> Result<AmplitudeTrace> {
    let values = slit_amplitude_at_times(slit, &grid.times(), params, intervals)?;
    Ok(AmplitudeTrace { grid: grid.clone(), values, normalized: false })
}

/// Adaptive slit amplitude: composite trapezoid with sample doubling until
/// the sup-norm change of |φ|², relative to sup|φ|², drops below the
/// configured tolerance. Returns the unnormalized trace together with the
/// interval count that converged.
pub fn slit_amplitude_adaptive(
    slit: &TemporalSlit,
    grid: &DetectionGrid,
    params: &PhysicalParams,
    quad: &QuadratureConfig,
) -> Result<(AmplitudeTrace, usize)> {
    quad.validate()?;
    let ratio = slit.duration_a / params.flight_t;
    if ratio >= 1e-3 {
        log::warn!(
            "far-field guard: a/T = {ratio:e} >= 1e-3; the plane-wave source \
             frequency is a far-field approximation"
        );
    }
    let mut intervals = quad.initial_samples_per_slit;
    let mut trace = slit_amplitude_fixed(slit, grid, params, intervals)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..quad.max_doublings {
        intervals *= 2;
        let next = slit_amplitude_fixed(slit, grid, params, intervals)?;
        let scale = next.values.iter().map(|v| v.norm_sqr()).fold(0.0_f64, f64::max);
        last_change = trace
            .values
            .iter()
            .zip(next.values.iter())
            .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
            .fold(0.0_f64, f64::max)
            / scale;
        trace = next;
        if last_change < quad.refinement_tolerance {
            return Ok((trace, intervals));
        }
    }
    Err(Error::Convergence { doublings: quad.max_doublings, last_change })
}

/// Adaptive slit amplitude (unnormalized).
pub fn slit_amplitude(
    slit: &TemporalSlit,
    grid: &DetectionGrid,
    params: &PhysicalParams,
    quad: &QuadratureConfig,
) -> Result<AmplitudeTrace> {
    slit_amplitude_adaptive(slit, grid, params, quad).map(|(trace, _)| trace)
}

/// Scale a trace so that ∫|φ(t)|² dt = 1 over its grid window.
pub fn normalize_trace(trace: &AmplitudeTrace) -> Result<AmplitudeTrace> {
    let norm = trace.norm_integral();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "trace has non-positive norm integral {norm:e}"
        )));
    }
    let scale = 1.0 / norm.sqrt();
    Ok(AmplitudeTrace {
        grid: trace.grid.clone(),
        values: trace.values.iter().map(|v| v * scale).collect(),
        normalized: true,
    })
}

/// Overlap ⟨φ_A|φ_B⟩ = ∫ φ_A*(t) φ_B(t) dt by trapezoid on the shared grid.
pub fn overlap(trace_a: &AmplitudeTrace, trace_b: &AmplitudeTrace) -> Result<Complex64> {
    if trace_a.grid != trace_b.grid {
        return Err(Error::GridMismatch);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..trace_a.grid.n_points {
        acc += trace_a.values[i].conj() * trace_b.values[i] * trace_a.grid.weight(i);
    }
    Ok(acc)
}

/// Coherent vs incoherent composition of several slits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitMode {
    Coherent,
    Incoherent,
}

fn check_disjoint(slits: &[TemporalSlit]) -> Result<()> {
    let mut sorted: Vec<&TemporalSlit> = slits.iter().collect();
    sorted.sort_by(|a, b| a.t_start.partial_cmp(&b.t_start).unwrap());
    for pair in sorted.windows(2) {
        if pair[1].t_start < pair[0].t_end() {
            return Err(Error::OverlappingSlits(
                pair[0].t_start,
                pair[0].t_end(),
                pair[1].t_start,
                pair[1].t_end(),
            ));
        }
    }
    Ok(())
}

/// Multi-slit diffraction-in-time spectrum, normalized to unit time-integral.
///
/// Coherent mode returns |Σ_k φ_k(t)|², incoherent mode Σ_k |φ_k(t)|²; for a
/// single slit the two are identical.
pub fn multi_slit_spectrum(
    slits: &[TemporalSlit],
    mode: SlitMode,
    grid: &DetectionGrid,
    params: &PhysicalParams,
    quad: &QuadratureConfig,
) -> Result<SpectrumTrace> {
    if slits.is_empty() {
        return Err(Error::domain("at least one slit is required".to_string()));
    }
    check_disjoint(slits)?;
    let traces: Vec<AmplitudeTrace> = slits
        .iter()
        .map(|s| slit_amplitude(s, grid, params, quad))
        .collect::<Result<_>>()?;
    let n = grid.n_points;
    let mut values = vec![0.0; n];
    match mode {
        SlitMode::Coherent => {
            for (i, v) in values.iter_mut().enumerate() {
                let sum: Complex64 = traces.iter().map(|t| t.values[i]).sum();
                *v = sum.norm_sqr();
            }
        }
        SlitMode::Incoherent => {
            for (i, v) in values.iter_mut().enumerate() {
                *v = traces.iter().map(|t| t.values[i].norm_sqr()).sum();
            }
        }
    }
    let integral = grid.trapezoid(|i| values[i]);
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "spectrum has non-positive integral {integral:e}"
        )));
    }
    for v in values.iter_mut() {
        *v /= integral;
    }
    Ok(SpectrumTrace { grid: grid.clone(), values })
}

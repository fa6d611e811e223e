//! Two-electron joint detection probability densities, reduction to delay
//! spectra P(τ), partial-coherence mixtures and the numeric HBT contrast.

use serde::{Deserialize, Serialize};

use crate::beamstats;
use crate::error::{Error, Result};
use crate::propagation::{
    normalize_trace, overlap, slit_amplitude_adaptive, slit_amplitude_fixed, AmplitudeTrace,
    DetectionGrid, PhysicalParams, QuadratureConfig, TemporalSlit,
};

/// Default cap on N for the exact pair enumeration.
pub const DEFAULT_EXACT_PAIR_CAP: u32 = 16;

/// Pulse/coherence timing of the source together with the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// Coherence time T_c in s.
    pub coherence_time_tc: f64,
    /// Pulse duration T_pulse in s.
    pub pulse_duration_tpulse: f64,
    pub params: PhysicalParams,
    /// N = 2·T_pulse/T_c, rounded to the nearest integer ≥ 2.
    pub interval_count_n: u32,
}

impl SourceSpec {
    pub fn new(coherence_time_tc: f64, pulse_duration_tpulse: f64, params: PhysicalParams) -> Result<Self> {
        let n = beamstats::interval_count(coherence_time_tc, pulse_duration_tpulse)?;
        Ok(SourceSpec {
            coherence_time_tc,
            pulse_duration_tpulse,
            params,
            interval_count_n: n,
        })
    }

    /// Interval (phase-space cell) duration a = T_c/2.
    pub fn interval_duration(&self) -> f64 {
        self.coherence_time_tc / 2.0
    }

    /// Interval number k (1-based) as a temporal slit [(k−1)a, k·a).
    pub fn slit(&self, k: u32) -> TemporalSlit {
        let a = self.interval_duration();
        TemporalSlit {
            t_start: (k - 1) as f64 * a,
            duration_a: a,
        }
    }
}

/// Exchange sign of a coherent two-electron spatial wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSign {
    Symmetric,
    Antisymmetric,
}

/// Symmetry class of a joint density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    Symmetric,
    Antisymmetric,
    Product,
}

/// Spin polarization of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Polarized,
    Unpolarized,
}

/// Joint detection probability density on the (t₁, t₂) plane, sampled on a
/// shared detection grid for both axes. Units s⁻².
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    pub grid: DetectionGrid,
    /// Row-major n×n samples.
    pub values: Vec<f64>,
    pub symmetry_class: SymmetryClass,
}

impl JointDensity {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_points + j]
    }

    /// ∫∫ values dt₁ dt₂ by the 2-D trapezoid rule.
    pub fn integral(&self) -> f64 {
        let n = self.grid.n_points;
        let mut acc = 0.0;
        for i in 0..n {
            let wi = self.grid.weight(i);
            let mut row = 0.0;
            for j in 0..n {
                row += self.grid.weight(j) * self.at(i, j);
            }
            acc += wi * row;
        }
        acc
    }
}

fn check_pair_inputs(a: &AmplitudeTrace, b: &AmplitudeTrace) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    if !a.normalized || !b.normalized {
        return Err(Error::NotNormalized);
    }
    Ok(())
}

/// Coherent pair density P_{S,AS}(t₁,t₂) = ½|φ₁(t₁)φ₂(t₂) ± φ₁(t₂)φ₂(t₁)|².
///
/// Expanding the square gives the product terms plus the two-electron
/// interference term ±2·Re[φ₁*(t₁)φ₂*(t₂)φ₁(t₂)φ₂(t₁)]; the direct form is
/// used so the antisymmetric diagonal vanishes exactly.
///
/// Expects |⟨φ₁|φ₂⟩| < 1e-3 (warns otherwise): the pair should originate
/// from disjoint slits so that cross-norm corrections stay negligible.
pub fn coherent_pair_density(
    phi1: &AmplitudeTrace,
    phi2: &AmplitudeTrace,
    sign: PairSign,
) -> Result<JointDensity> {
    check_pair_inputs(phi1, phi2)?;
    let ov = overlap(phi1, phi2)?.norm();
    if ov >= 1e-3 {
        log::warn!(
            "coherent pair overlap |<phi1|phi2>| = {ov:e} exceeds 1e-3; \
             norm corrections of order |overlap|^2 enter the joint density"
        );
    }
    let n = phi1.grid.n_points;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let direct = phi1.values[i] * phi2.values[j];
            let exchanged = phi1.values[j] * phi2.values[i];
            let amp = match sign {
                PairSign::Symmetric => direct + exchanged,
                PairSign::Antisymmetric => direct - exchanged,
            };
            values[i * n + j] = 0.5 * amp.norm_sqr();
        }
    }
    Ok(JointDensity {
        grid: phi1.grid.clone(),
        values,
        symmetry_class: match sign {
            PairSign::Symmetric => SymmetryClass::Symmetric,
            PairSign::Antisymmetric => SymmetryClass::Antisymmetric,
        },
    })
}

/// Incoherent pair density ½[|φ₁(t₁)|²|φ₃(t₂)|² + |φ₁(t₂)|²|φ₃(t₁)|²] with no
/// interference term.
pub fn incoherent_pair_density(phi1: &AmplitudeTrace, phi3: &AmplitudeTrace) -> Result<JointDensity> {
    check_pair_inputs(phi1, phi3)?;
    let n = phi1.grid.n_points;
    let g1 = phi1.intensity();
    let g3 = phi3.intensity();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = 0.5 * (g1[i] * g3[j] + g1[j] * g3[i]);
        }
    }
    Ok(JointDensity {
        grid: phi1.grid.clone(),
        values,
        symmetry_class: SymmetryClass::Product,
    })
}

/// How a joint density is reduced to a one-variable delay spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    /// P(τ) = ∫ joint(t, t+τ) dt, renormalized to unit integral in τ.
    Marginal,
    /// P(τ) = joint(T−τ/2, T+τ/2), unnormalized.
    Slice,
}

/// Provenance label of a delay spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumLabel {
    CohS,
    CohAS,
    Incoh,
    MixturePol,
    MixtureUnpol,
}

/// Joint detection probability density as a function of the detection delay
/// τ = t₂ − t₁. Marginal-mode spectra integrate to 1 (units s⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpectrum {
    pub delays: Vec<f64>,
    pub density: Vec<f64>,
    pub reduction_mode: ReductionMode,
    pub label: SpectrumLabel,
}

impl DelaySpectrum {
    /// Trapezoidal ∫ density dτ.
    pub fn integral(&self) -> f64 {
        trapezoid_nonuniform(&self.delays, &self.density)
    }

    /// Density at τ = 0, from the grid point nearest zero, with linear
    /// interpolation (and a warning) if zero is off-grid.
    pub fn value_at_zero(&self) -> f64 {
        let i = nearest_index(&self.delays, 0.0);
        if self.delays[i] == 0.0 {
            return self.density[i];
        }
        log::warn!("tau = 0 is off-grid; interpolating linearly around {:e}", self.delays[i]);
        let j = if self.delays[i] > 0.0 { i - 1 } else { i + 1 };
        let (ti, tj) = (self.delays[i], self.delays[j]);
        let (pi, pj) = (self.density[i], self.density[j]);
        pi + (pj - pi) * (0.0 - ti) / (tj - ti)
    }

    pub fn peak_value(&self) -> f64 {
        self.density.iter().cloned().fold(f64::MIN, f64::max)
    }
}

fn nearest_index(xs: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, &v) in xs.iter().enumerate() {
        let d = (v - x).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

fn trapezoid_nonuniform(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Marginal reduction without the final renormalization. Delays are exact
/// grid multiples τ = k·h, so the τ = 0 point is on-grid, and the strip sums
/// use trapezoid weights along the strip.
pub(crate) fn marginal_raw_reduction(joint: &JointDensity) -> (Vec<f64>, Vec<f64>) {
    let n = joint.grid.n_points;
    let h = joint.grid.spacing();
    let mut delays = Vec::with_capacity(2 * n - 1);
    let mut density = vec![0.0; 2 * n - 1];
    for k in 0..(2 * n - 1) {
        let offset = k as isize - (n as isize - 1);
        delays.push(offset as f64 * h);
    }
    for k in 0..n {
        let len = n - k;
        let p = if len < 2 {
            0.0
        } else {
            let mut acc = 0.0;
            for i in 0..len {
                let w = if i == 0 || i == len - 1 { 0.5 * h } else { h };
                acc += w * joint.at(i, i + k);
            }
            acc
        };
        // Exchange symmetry of the joint makes P(−τ) = P(τ).
        density[n - 1 + k] = p;
        density[n - 1 - k] = p;
    }
    (delays, density)
}

fn slice_raw(joint: &JointDensity, anticoincidence_t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = &joint.grid;
    if anticoincidence_t < grid.t_min || anticoincidence_t > grid.t_max {
        return Err(Error::domain(format!(
            "slice anchor T = {anticoincidence_t:e} s lies outside the grid \
             [{:e}, {:e}] s",
            grid.t_min, grid.t_max
        )));
    }
    let times = grid.times();
    let i_t = nearest_index(&times, anticoincidence_t);
    let reach = i_t.min(grid.n_points - 1 - i_t);
    if reach < grid.n_points / 4 {
        log::warn!(
            "slice delay window truncated to ±{:e} s by the grid edges",
            2.0 * reach as f64 * grid.spacing()
        );
    }
    let h = grid.spacing();
    let mut delays = Vec::with_capacity(2 * reach + 1);
    let mut density = Vec::with_capacity(2 * reach + 1);
    for k in -(reach as isize)..=(reach as isize) {
        delays.push(2.0 * k as f64 * h);
        let i = (i_t as isize - k) as usize;
        let j = (i_t as isize + k) as usize;
        density.push(joint.at(i, j));
    }
    Ok((delays, density))
}

fn renormalize(delays: &[f64], density: &mut [f64]) -> Result<()> {
    let integral = trapezoid_nonuniform(delays, density);
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "delay spectrum has non-positive integral {integral:e}"
        )));
    }
    for v in density.iter_mut() {
        *v /= integral;
    }
    Ok(())
}

fn label_for_class(class: SymmetryClass) -> SpectrumLabel {
    match class {
        SymmetryClass::Symmetric => SpectrumLabel::CohS,
        SymmetryClass::Antisymmetric => SpectrumLabel::CohAS,
        SymmetryClass::Product => SpectrumLabel::Incoh,
    }
}

/// Reduce a joint density to a delay spectrum. Marginal mode integrates over
/// the absolute arrival time and renormalizes to unit integral; slice mode
/// samples the anti-diagonal through the anticoincidence time T and is left
/// unnormalized.
pub fn delay_reduce(
    joint: &JointDensity,
    mode: ReductionMode,
    anticoincidence_t: f64,
) -> Result<DelaySpectrum> {
    let (delays, mut density) = match mode {
        ReductionMode::Marginal => marginal_raw_reduction(joint),
        ReductionMode::Slice => slice_raw(joint, anticoincidence_t)?,
    };
    if mode == ReductionMode::Marginal {
        renormalize(&delays, &mut density)?;
    }
    Ok(DelaySpectrum {
        delays,
        density,
        reduction_mode: mode,
        label: label_for_class(joint.symmetry_class),
    })
}

/// Coherent/incoherent weights of the maximally mixed pulse: w_coh = 2/N and
/// w_incoh = 1 − 2/N, so the pair sums to one exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureWeights {
    pub w_coh: f64,
    pub w_incoh: f64,
}

impl MixtureWeights {
    pub fn for_intervals(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("interval count must be >= 2, got {n}")));
        }
        let w_coh = 2.0 / n as f64;
        Ok(MixtureWeights { w_coh, w_incoh: 1.0 - w_coh })
    }
}

/// Mixture spectrum together with its component spectra. In marginal mode
/// every returned spectrum is renormalized to unit τ-integral; the mixture
/// itself is assembled from the shared-normalization raw reductions first and
/// renormalized once, so component ratios at τ = 0 are preserved.
#[derive(Debug, Clone)]
pub struct MixtureSpectra {
    pub mixture: DelaySpectrum,
    pub coh_s: DelaySpectrum,
    pub coh_as: DelaySpectrum,
    pub incoh: DelaySpectrum,
    pub weights: MixtureWeights,
}

pub(crate) struct SharedRule {
    grid: DetectionGrid,
    intervals: usize,
}

impl SharedRule {
    pub(crate) fn converge(source: &SourceSpec, grid: &DetectionGrid, quad: &QuadratureConfig) -> Result<Self> {
        let (_, intervals) =
            slit_amplitude_adaptive(&source.slit(1), grid, &source.params, quad)?;
        Ok(SharedRule { grid: grid.clone(), intervals })
    }

    /// All slit amplitudes share one converged quadrature rule so that
    /// pair-to-pair differences reflect only the slit geometry.
    pub(crate) fn trace(&self, source: &SourceSpec, k: u32) -> Result<AmplitudeTrace> {
        normalize_trace(&slit_amplitude_fixed(
            &source.slit(k),
            &self.grid,
            &source.params,
            self.intervals,
        )?)
    }
}

/// Default detection grid for a source: its interval duration on the §II
/// window rule with 2001 points.
pub fn default_grid(source: &SourceSpec) -> Result<DetectionGrid> {
    DetectionGrid::centered_on_flight(&source.params, source.interval_duration(), 2001)
}

fn reduce_for_mode(
    joint: &JointDensity,
    mode: ReductionMode,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>, SpectrumLabel)> {
    let (delays, density) = match mode {
        ReductionMode::Marginal => marginal_raw_reduction(joint),
        ReductionMode::Slice => slice_raw(joint, t)?,
    };
    Ok((delays, density, label_for_class(joint.symmetry_class)))
}

fn finish_spectrum(
    delays: Vec<f64>,
    mut density: Vec<f64>,
    mode: ReductionMode,
    label: SpectrumLabel,
) -> Result<DelaySpectrum> {
    if mode == ReductionMode::Marginal {
        renormalize(&delays, &mut density)?;
    }
    Ok(DelaySpectrum { delays, density, reduction_mode: mode, label })
}

fn mix_into(acc: &mut [f64], component: &[f64], weight: f64) {
    for (a, &c) in acc.iter_mut().zip(component.iter()) {
        *a += weight * c;
    }
}

fn assemble_mixture(
    pol: Polarization,
    weights: MixtureWeights,
    raw_s: &[f64],
    raw_as: &[f64],
    raw_incoh: &[f64],
    n: u32,
) -> (Vec<f64>, SpectrumLabel) {
    let mut mixture = vec![0.0; raw_as.len()];
    match pol {
        Polarization::Polarized => {
            mix_into(&mut mixture, raw_as, weights.w_coh);
            mix_into(&mut mixture, raw_incoh, weights.w_incoh);
            (mixture, SpectrumLabel::MixturePol)
        }
        Polarization::Unpolarized => {
            let nf = n as f64;
            mix_into(&mut mixture, raw_s, 1.0 / (2.0 * nf));
            mix_into(&mut mixture, raw_as, 3.0 / (2.0 * nf));
            mix_into(&mut mixture, raw_incoh, weights.w_incoh);
            (mixture, SpectrumLabel::MixtureUnpol)
        }
    }
}

/// Partial-coherence mixture spectrum with the representative pair layout:
/// coherent pair from intervals (1,2) and the incoherent representative from
/// intervals (1,3). Polarized: P = (2/N)·P_AS + (1−2/N)·P_incoh;
/// unpolarized: P = (1/2N)·P_S + (3/2N)·P_AS + (1−2/N)·P_incoh.
pub fn mixture_spectrum(
    source: &SourceSpec,
    pol: Polarization,
    mode: ReductionMode,
    quad: &QuadratureConfig,
) -> Result<MixtureSpectra> {
    let grid = default_grid(source)?;
    mixture_spectrum_on_grid(source, pol, mode, quad, &grid)
}

pub fn mixture_spectrum_on_grid(
    source: &SourceSpec,
    pol: Polarization,
    mode: ReductionMode,
    quad: &QuadratureConfig,
    grid: &DetectionGrid,
) -> Result<MixtureSpectra> {
    let n = source.interval_count_n;
    let weights = MixtureWeights::for_intervals(n)?;
    let rule = SharedRule::converge(source, grid, quad)?;
    let phi1 = rule.trace(source, 1)?;
    let phi2 = rule.trace(source, 2)?;
    let phi3 = rule.trace(source, 3)?;
    let t = source.params.flight_t;

    let (delays, raw_s, _) =
        reduce_for_mode(&coherent_pair_density(&phi1, &phi2, PairSign::Symmetric)?, mode, t)?;
    let (_, raw_as, _) =
        reduce_for_mode(&coherent_pair_density(&phi1, &phi2, PairSign::Antisymmetric)?, mode, t)?;
    let (_, raw_incoh, _) =
        reduce_for_mode(&incoherent_pair_density(&phi1, &phi3)?, mode, t)?;

    let (mixture, label) = assemble_mixture(pol, weights, &raw_s, &raw_as, &raw_incoh, n);
    Ok(MixtureSpectra {
        mixture: finish_spectrum(delays.clone(), mixture, mode, label)?,
        coh_s: finish_spectrum(delays.clone(), raw_s, mode, SpectrumLabel::CohS)?,
        coh_as: finish_spectrum(delays.clone(), raw_as, mode, SpectrumLabel::CohAS)?,
        incoh: finish_spectrum(delays, raw_incoh, mode, SpectrumLabel::Incoh)?,
        weights,
    })
}

/// Exact mixture: enumerates all N−1 adjacent coherent pairs and all
/// (N−1)(N−2)/2 incoherent pairs at their true slit positions, averages
/// uniformly within each class, then applies the mixture weights.
pub fn exact_mixture_spectrum(
    source: &SourceSpec,
    pol: Polarization,
    mode: ReductionMode,
    quad: &QuadratureConfig,
    pair_cap: Option<u32>,
) -> Result<MixtureSpectra> {
    let grid = default_grid(source)?;
    exact_mixture_spectrum_on_grid(source, pol, mode, quad, pair_cap, &grid)
}

pub fn exact_mixture_spectrum_on_grid(
    source: &SourceSpec,
    pol: Polarization,
    mode: ReductionMode,
    quad: &QuadratureConfig,
    pair_cap: Option<u32>,
    grid: &DetectionGrid,
) -> Result<MixtureSpectra> {
    let n = source.interval_count_n;
    let cap = pair_cap.unwrap_or(DEFAULT_EXACT_PAIR_CAP);
    if n > cap {
        return Err(Error::PairCountCap { n, cap });
    }
    let weights = MixtureWeights::for_intervals(n)?;
    let rule = SharedRule::converge(source, grid, quad)?;
    let traces: Vec<AmplitudeTrace> =
        (1..=n.max(3)).map(|k| rule.trace(source, k)).collect::<Result<_>>()?;
    let trace = |k: u32| &traces[(k - 1) as usize];
    let t = source.params.flight_t;

    let mut delays = Vec::new();
    let mut avg_s: Vec<f64> = Vec::new();
    let mut avg_as: Vec<f64> = Vec::new();
    let mut avg_incoh: Vec<f64> = Vec::new();

    let n_coherent = (n - 1) as f64;
    for k in 1..n {
        let joint_s = coherent_pair_density(trace(k), trace(k + 1), PairSign::Symmetric)?;
        let (d, raw, _) = reduce_for_mode(&joint_s, mode, t)?;
        if avg_s.is_empty() {
            delays = d;
            avg_s = vec![0.0; raw.len()];
            avg_as = vec![0.0; raw.len()];
            avg_incoh = vec![0.0; raw.len()];
        }
        mix_into(&mut avg_s, &raw, 1.0 / n_coherent);
        let joint_as = coherent_pair_density(trace(k), trace(k + 1), PairSign::Antisymmetric)?;
        let (_, raw, _) = reduce_for_mode(&joint_as, mode, t)?;
        mix_into(&mut avg_as, &raw, 1.0 / n_coherent);
    }

    let n_incoherent = ((n - 1) * (n - 2) / 2) as f64;
    if n >= 3 {
        for i in 1..=n {
            for j in (i + 2)..=n {
                let joint = incoherent_pair_density(trace(i), trace(j))?;
                let (_, raw, _) = reduce_for_mode(&joint, mode, t)?;
                mix_into(&mut avg_incoh, &raw, 1.0 / n_incoherent);
            }
        }
    } else {
        // N = 2 has no incoherent pairs; report the (1,3) representative,
        // which enters the mixture with weight zero.
        let joint = incoherent_pair_density(trace(1), trace(3))?;
        let (_, raw, _) = reduce_for_mode(&joint, mode, t)?;
        avg_incoh = raw;
    }

    let (mixture, label) = assemble_mixture(pol, weights, &avg_s, &avg_as, &avg_incoh, n);
    Ok(MixtureSpectra {
        mixture: finish_spectrum(delays.clone(), mixture, mode, label)?,
        coh_s: finish_spectrum(delays.clone(), avg_s, mode, SpectrumLabel::CohS)?,
        coh_as: finish_spectrum(delays.clone(), avg_as, mode, SpectrumLabel::CohAS)?,
        incoh: finish_spectrum(delays, avg_incoh, mode, SpectrumLabel::Incoh)?,
        weights,
    })
}

/// Numeric HBT contrast C = (P⁰_incoh − P⁰)/(P⁰_incoh + P⁰) evaluated at
/// τ = 0 on the shared delay grid.
pub fn numeric_contrast(mixture: &DelaySpectrum, incoh: &DelaySpectrum) -> Result<f64> {
    if mixture.delays != incoh.delays {
        return Err(Error::GridMismatch);
    }
    let p0 = mixture.value_at_zero();
    let p0_incoh = incoh.value_at_zero();
    if !(p0_incoh + p0 > 0.0) {
        return Err(Error::DegenerateInput(
            "contrast undefined: both spectra vanish at tau = 0".to_string(),
        ));
    }
    Ok((p0_incoh - p0) / (p0_incoh + p0))
}

//! Integration checks of the simulated diffraction-in-time patterns against
//! the closed-form predictors.

use pulsed_hbt::propagation::{
    boundary_phase_difference, first_zero_times, multi_slit_spectrum, normalize_trace, overlap,
    slit_amplitude, slit_amplitude_adaptive, slit_amplitude_fixed, DetectionGrid, PhysicalParams,
    QuadratureConfig, SlitMode, SpectrumTrace, TemporalSlit,
};
use pulsed_hbt::units::{fs_to_s, ns_to_s};

fn sect2_params() -> PhysicalParams {
    PhysicalParams::electron(0.05, ns_to_s(50.0)).unwrap()
}

fn single_slit_spectrum(a_fs: f64, n_points: usize) -> SpectrumTrace {
    let p = sect2_params();
    let a = fs_to_s(a_fs);
    let slit = TemporalSlit::new(0.0, a).unwrap();
    let grid = DetectionGrid::centered_on_flight(&p, a, n_points).unwrap();
    multi_slit_spectrum(&[slit], SlitMode::Coherent, &grid, &p, &QuadratureConfig::default())
        .unwrap()
}

#[test]
fn main_peak_sits_at_the_flight_time() {
    // On a 201-point window the grid spacing (~281 ps) absorbs the small
    // physical peak shift, so the maximum lands within one spacing of T.
    let spectrum = single_slit_spectrum(5.0, 201);
    let t = sect2_params().flight_t;
    let h = spectrum.grid.spacing();
    assert!(
        (spectrum.peak_time() - t).abs() <= h * 1.000001,
        "peak at {:e}, T = {t:e}, spacing {h:e}",
        spectrum.peak_time()
    );
    // On the fine default grid the kernel prefactor tilts the flat top a
    // little ahead of T; the shift stays below 0.25 ns for these parameters.
    let fine = single_slit_spectrum(5.0, 2001);
    assert!((fine.peak_time() - t).abs() < 0.25e-9);
}

#[test]
fn simulated_zeros_track_the_closed_form_and_pattern_is_asymmetric() {
    let p = sect2_params();
    let spectrum = single_slit_spectrum(5.0, 2001);
    let zeros = first_zero_times(fs_to_s(5.0), &p).unwrap();
    let lead = zeros.t_lead.unwrap();
    let sim_lead = spectrum.refine_minimum_near(lead).unwrap();
    let sim_trail = spectrum.refine_minimum_near(zeros.t_trail).unwrap();
    assert!((sim_lead - lead).abs() / (lead - p.flight_t).abs() < 5e-3);
    assert!((sim_trail - zeros.t_trail).abs() / (p.flight_t - zeros.t_trail).abs() < 5e-3);
    // Leading-edge excursion exceeds the trailing one.
    assert!(sim_lead - p.flight_t > p.flight_t - sim_trail);
}

#[test]
fn boundary_phase_hits_minus_two_pi_at_the_leading_zero() {
    let p = sect2_params();
    let a = fs_to_s(5.0);
    let slit = TemporalSlit::new(0.0, a).unwrap();
    let spectrum = single_slit_spectrum(5.0, 2001);
    let zeros = first_zero_times(a, &p).unwrap();
    let sim_lead = spectrum.refine_minimum_near(zeros.t_lead.unwrap()).unwrap();
    let sim_trail = spectrum.refine_minimum_near(zeros.t_trail).unwrap();
    let lead_phase = boundary_phase_difference(&slit, sim_lead, &p).unwrap();
    let trail_phase = boundary_phase_difference(&slit, sim_trail, &p).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    assert!((lead_phase + two_pi).abs() < 0.01 * two_pi, "leading phase {lead_phase}");
    assert!((trail_phase - two_pi).abs() < 0.01 * two_pi, "trailing phase {trail_phase}");
}

#[test]
fn double_slit_fringes_sit_under_the_incoherent_envelope() {
    let p = sect2_params();
    let a = fs_to_s(5.0);
    // Slit separation (gap) equal to the slit duration.
    let slits = [
        TemporalSlit::new(0.0, a).unwrap(),
        TemporalSlit::new(2.0 * a, a).unwrap(),
    ];
    let grid = DetectionGrid::centered_on_flight(&p, a, 1201).unwrap();
    let quad = QuadratureConfig::default();
    let coh = multi_slit_spectrum(&slits, SlitMode::Coherent, &grid, &p, &quad).unwrap();
    let inc = multi_slit_spectrum(&slits, SlitMode::Incoherent, &grid, &p, &quad).unwrap();
    // Fringed coherent curve, fringe-free envelope: many more local minima.
    let n_coh = coh.local_minima().len();
    let n_inc = inc.local_minima().len();
    assert!(n_coh > 2 * n_inc, "coherent minima {n_coh}, incoherent minima {n_inc}");
    // Peak bounded by twice the incoherent pattern at the same time, up to
    // the overlap-norm correction.
    let max_ratio = coh
        .values
        .iter()
        .zip(inc.values.iter())
        .filter(|(_, &i)| i > 1e-12 * inc.peak_value())
        .map(|(&c, &i)| c / i)
        .fold(f64::MIN, f64::max);
    assert!(max_ratio <= 2.0 * 1.005, "max coherent/incoherent ratio {max_ratio}");
    assert!(max_ratio > 1.8);
}

#[test]
fn single_slit_coherent_equals_incoherent_bitwise() {
    let p = sect2_params();
    let a = fs_to_s(5.0);
    let slit = TemporalSlit::new(0.0, a).unwrap();
    let grid = DetectionGrid::centered_on_flight(&p, a, 401).unwrap();
    let quad = QuadratureConfig::default();
    let coh = multi_slit_spectrum(&[slit], SlitMode::Coherent, &grid, &p, &quad).unwrap();
    let inc = multi_slit_spectrum(&[slit], SlitMode::Incoherent, &grid, &p, &quad).unwrap();
    for (c, i) in coh.values.iter().zip(inc.values.iter()) {
        assert_eq!(c.to_bits(), i.to_bits());
    }
}

#[test]
fn disjoint_slit_amplitudes_stay_nearly_orthogonal() {
    // Unitary propagation preserves source orthogonality; the residual on
    // the default window for the non-adjacent (1,3) slit pair bounds the
    // quadrature-plus-window error.
    let p = sect2_params();
    let a = fs_to_s(5.0);
    let grid = DetectionGrid::centered_on_flight(&p, a, 2001).unwrap();
    let quad = QuadratureConfig::default();
    let phi1 = normalize_trace(
        &slit_amplitude(&TemporalSlit::new(0.0, a).unwrap(), &grid, &p, &quad).unwrap(),
    )
    .unwrap();
    let phi3 = normalize_trace(
        &slit_amplitude(&TemporalSlit::new(2.0 * a, a).unwrap(), &grid, &p, &quad).unwrap(),
    )
    .unwrap();
    let ov = overlap(&phi1, &phi3).unwrap().norm();
    assert!(ov < 1e-3, "|overlap| = {ov:e}");
}

#[test]
fn doubling_beyond_convergence_barely_moves_the_spectrum() {
    let p = sect2_params();
    let a = fs_to_s(5.0);
    let slit = TemporalSlit::new(0.0, a).unwrap();
    let grid = DetectionGrid::centered_on_flight(&p, a, 401).unwrap();
    let quad = QuadratureConfig::default();
    let (converged, intervals) = slit_amplitude_adaptive(&slit, &grid, &p, &quad).unwrap();
    let doubled = slit_amplitude_fixed(&slit, &grid, &p, intervals * 2).unwrap();
    let scale = converged.intensity().iter().cloned().fold(f64::MIN, f64::max);
    let max_change = converged
        .intensity()
        .iter()
        .zip(doubled.intensity().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(max_change / scale < 2.0 * quad.refinement_tolerance);
}

#[test]
fn boson_mass_halves_the_fringe_period() {
    let p = sect2_params();
    let a = fs_to_s(5.0);
    let slits = [
        TemporalSlit::new(0.0, a).unwrap(),
        TemporalSlit::new(2.0 * a, a).unwrap(),
    ];
    let quad = QuadratureConfig::default();
    let central_fringe = |params: &PhysicalParams| {
        let grid = DetectionGrid::centered_on_flight(params, a, 2001).unwrap();
        let coh = multi_slit_spectrum(&slits, SlitMode::Coherent, &grid, params, &quad).unwrap();
        coh.central_fringe_width().unwrap()
    };
    let electron = central_fringe(&p);
    let boson = central_fringe(&p.with_mass_multiplier(2.0).unwrap());
    let ratio = boson / electron;
    assert!((ratio - 0.5).abs() < 0.02 * 0.5, "fringe period ratio {ratio}");
}

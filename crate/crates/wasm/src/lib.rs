//! Browser bindings: three interactive operations over the core simulator,
//! each taking the JSON scenario configuration and returning a JSON payload
//! ready for plotting. The `*_json` functions are plain Rust and are tested
//! natively; the `#[wasm_bindgen]` exports are thin wrappers over them.

use wasm_bindgen::prelude::*;

use pulsed_hbt::beamstats::contrast_analytic;
use pulsed_hbt::coincidence::{mixture_spectrum_on_grid, numeric_contrast, Polarization};
use pulsed_hbt::decoherence::{
    coherence_blocks, density_from_state, generalize_state, partial_trace, Subsystem,
};
use pulsed_hbt::propagation::{first_zero_times, multi_slit_spectrum, SlitMode};
use pulsed_hbt::scenarios::{parse_config, slit_row};
use pulsed_hbt::units::{fs_to_s, s_to_ns};
use pulsed_hbt::Error;

/// Single/double temporal-slit diffraction-in-time spectra.
pub fn dit_spectrum_json(config_json: &str) -> Result<String, Error> {
    let cfg = parse_config(config_json)?;
    let params = cfg.params()?;
    let a = fs_to_s(cfg.slit_fs.unwrap_or(cfg.t_c_fs / 2.0));
    let gap = cfg.separation_fs.map(fs_to_s).unwrap_or(a);
    let slits = slit_row(a, gap, cfg.slit_count)?;
    let grid = cfg.detection_grid(a)?;
    let quad = cfg.quadrature.to_config();
    let coherent = multi_slit_spectrum(&slits, SlitMode::Coherent, &grid, &params, &quad)?;
    let incoherent = multi_slit_spectrum(&slits, SlitMode::Incoherent, &grid, &params, &quad)?;
    let zeros = first_zero_times(a, &params)?;
    let doc = serde_json::json!({
        "t_ns": coherent.grid.times().iter().map(|&t| s_to_ns(t)).collect::<Vec<_>>(),
        "coherent": coherent.values,
        "incoherent": incoherent.values,
        "first_zero_lead_ns": zeros.t_lead.map(s_to_ns),
        "first_zero_trail_ns": s_to_ns(zeros.t_trail),
        "flight_t_ns": s_to_ns(params.flight_t),
        "slit_count": cfg.slit_count,
        "mass_multiplier": cfg.mass_multiplier,
    });
    Ok(doc.to_string())
}

/// Two-electron delay spectra with mixture components and contrasts.
pub fn hbt_spectrum_json(config_json: &str) -> Result<String, Error> {
    let cfg = parse_config(config_json)?;
    let source = cfg.source(cfg.t_pulse_fs)?;
    let grid = cfg.detection_grid(source.interval_duration())?;
    let quad = cfg.quadrature.to_config();
    let spectra = mixture_spectrum_on_grid(&source, cfg.polarization, cfg.mode, &quad, &grid)?;
    let n = source.interval_count_n;
    let doc = serde_json::json!({
        "tau_ns": spectra.mixture.delays.iter().map(|&t| s_to_ns(t)).collect::<Vec<_>>(),
        "p_s": spectra.coh_s.density,
        "p_as": spectra.coh_as.density,
        "p_incoh": spectra.incoh.density,
        "p_mix": spectra.mixture.density,
        "interval_count_n": n,
        "contrast_numeric": numeric_contrast(&spectra.mixture, &spectra.incoh)?,
        "contrast_analytic": contrast_analytic(n, cfg.polarization)?,
        "polarization": match cfg.polarization {
            Polarization::Polarized => "polarized",
            Polarization::Unpolarized => "unpolarized",
        },
    });
    Ok(doc.to_string())
}

/// Density matrices and coherence blocks for an N-interval emission.
pub fn decoherence_json(n: u32) -> Result<String, Error> {
    let psi = generalize_state(n as usize)?;
    let rho = density_from_state(&psi)?;
    let rho12 = partial_trace(&rho, Subsystem::Environment)?;
    let rho_bar = partial_trace(&rho12, Subsystem::Spin)?;
    let rho1 = partial_trace(&rho_bar, Subsystem::Particle2)?;
    let blocks: Vec<serde_json::Value> = coherence_blocks(&rho_bar)?
        .iter()
        .map(|b| {
            serde_json::json!({
                "orbitals": [b.labels.0, b.labels.1],
                "off_diagonal": b.off_diagonal,
                "coherent": b.coherent,
            })
        })
        .collect();
    let matrix = |m: &pulsed_hbt::decoherence::DensityMatrix| {
        let purity = m.purity();
        let purity = *purity.numer() as f64 / *purity.denom() as f64;
        serde_json::json!({
            "dim": m.dim(),
            "labels": m.basis.labels(),
            "entries": m.to_f64_rows(),
            "purity": purity,
        })
    };
    let doc = serde_json::json!({
        "intervals": n,
        "rho12_spin_avg": matrix(&rho_bar),
        "rho1": matrix(&rho1),
        "coherence_blocks": blocks,
    });
    Ok(doc.to_string())
}

/// Browser entry point: diffraction-in-time spectra.
#[wasm_bindgen]
pub fn dit_spectrum(config_json: &str) -> Result<String, JsError> {
    Ok(dit_spectrum_json(config_json)?)
}

/// Browser entry point: HBT delay spectra.
#[wasm_bindgen]
pub fn hbt_spectrum(config_json: &str) -> Result<String, JsError> {
    Ok(hbt_spectrum_json(config_json)?)
}

/// Browser entry point: decoherence density matrices.
#[wasm_bindgen]
pub fn decoherence_report(n: u32) -> Result<String, JsError> {
    Ok(decoherence_json(n)?)
}

//! Named scenario runners: JSON configuration, deterministic CSV emission,
//! and the pair-offset error table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamstats::{self, BeamStats};
use crate::coincidence::{
    self, DelaySpectrum, MixtureSpectra, Polarization, ReductionMode, SourceSpec,
};
use crate::decoherence::{self, DensityMatrix, Subsystem};
use crate::error::{Error, Result};
use crate::propagation::{
    DetectionGrid, PhysicalParams, QuadratureConfig, SlitMode, TemporalSlit,
};
use crate::units::{cm_to_m, fs_to_s, ns_to_s, ps_to_s, s_to_ns, MHZ};

/// Detection-grid overrides (ns). Both bounds or neither.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_min_ns: Option<f64>,
    pub t_max_ns: Option<f64>,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_min_ns: None, t_max_ns: None, n_points: 2001 }
    }
}

/// Quadrature controls, mirrored into [`QuadratureConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    pub initial_samples_per_slit: usize,
    pub refinement_tolerance: f64,
    pub max_doublings: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        QuadratureSettings {
            initial_samples_per_slit: q.initial_samples_per_slit,
            refinement_tolerance: q.refinement_tolerance,
            max_doublings: q.max_doublings,
        }
    }
}

impl QuadratureSettings {
    pub fn to_config(self) -> QuadratureConfig {
        QuadratureConfig {
            initial_samples_per_slit: self.initial_samples_per_slit,
            refinement_tolerance: self.refinement_tolerance,
            max_doublings: self.max_doublings,
        }
    }
}

/// Beam statistics for the `rates` scenario, in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub rep_rate_mhz: f64,
    pub window_ps: f64,
    pub acq_time_s: f64,
    pub eta1_per_s: f64,
    pub eta2_per_s: f64,
    pub mean_eta: f64,
    pub emission_rate_per_s: f64,
    pub actual_pulse_duration_fs: f64,
    pub electrons_per_pulse: f64,
    /// Reference incoherent level P⁰_incoh in s⁻¹ for the closed-form rate
    /// estimates (the simulated level at the default parameter set).
    pub p_incoh0_per_s: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            rep_rate_mhz: 80.0,
            window_ps: 26.0,
            acq_time_s: 1e5,
            eta1_per_s: 0.0,
            eta2_per_s: 8e7,
            mean_eta: 2.0,
            emission_rate_per_s: 1.6e8,
            actual_pulse_duration_fs: 50.0,
            electrons_per_pulse: 2.0,
            p_incoh0_per_s: 1.39e8,
        }
    }
}

impl RatesConfig {
    pub fn beam_stats(&self) -> BeamStats {
        BeamStats {
            rep_rate_f: self.rep_rate_mhz * MHZ,
            window_tw: ps_to_s(self.window_ps),
            acq_time: self.acq_time_s,
            eta1_rate: self.eta1_per_s,
            eta2_rate: self.eta2_per_s,
            mean_eta: self.mean_eta,
            emission_rate_re: self.emission_rate_per_s,
            actual_pulse_duration_dte: fs_to_s(self.actual_pulse_duration_fs),
        }
    }
}

/// Full scenario configuration. Unknown keys are rejected; every field has a
/// default, and the defaults are the §II / Figure-2 parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// dit | hbt | contrast | rates | decohere | error-table | energy-sweep
    /// (figure/table aliases accepted).
    pub scenario: Option<String>,
    pub t_c_fs: f64,
    pub t_pulse_fs: f64,
    /// Pulse durations for the hbt/contrast sweeps.
    pub pulse_durations_fs: Vec<f64>,
    pub d_cm: f64,
    pub t_ns: f64,
    pub mass_multiplier: f64,
    pub polarization: Polarization,
    pub mode: ReductionMode,
    pub exact_pairs: bool,
    pub exact_pair_cap: u32,
    /// Slit duration for the dit scenario; defaults to T_c/2.
    pub slit_fs: Option<f64>,
    pub slit_count: u32,
    /// Gap between slits for the dit scenario; defaults to the slit duration.
    pub separation_fs: Option<f64>,
    pub grid: GridConfig,
    pub quadrature: QuadratureSettings,
    pub energy_sweep_t_ns: Vec<f64>,
    pub error_pairs: Vec<(u32, u32)>,
    pub rates: RatesConfig,
    pub decohere_n: u32,
    pub svg: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: None,
            t_c_fs: 10.0,
            t_pulse_fs: 50.0,
            pulse_durations_fs: vec![10.0, 15.0, 25.0, 35.0, 50.0, 250.0],
            d_cm: 5.0,
            t_ns: 50.0,
            mass_multiplier: 1.0,
            polarization: Polarization::Unpolarized,
            mode: ReductionMode::Marginal,
            exact_pairs: false,
            exact_pair_cap: coincidence::DEFAULT_EXACT_PAIR_CAP,
            slit_fs: None,
            slit_count: 1,
            separation_fs: None,
            grid: GridConfig::default(),
            quadrature: QuadratureSettings::default(),
            energy_sweep_t_ns: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
            error_pairs: vec![(1, 3), (1, 10), (8, 10), (1, 50), (1, 100), (98, 100)],
            rates: RatesConfig::default(),
            decohere_n: 3,
            svg: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_c_fs", self.t_c_fs),
            ("t_pulse_fs", self.t_pulse_fs),
            ("d_cm", self.d_cm),
            ("t_ns", self.t_ns),
            ("mass_multiplier", self.mass_multiplier),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("field {name}: must be positive, got {v}")));
            }
        }
        if self.t_pulse_fs < self.t_c_fs {
            return Err(Error::Config(format!(
                "field t_pulse_fs: pulse duration {} fs is shorter than the \
                 coherence time {} fs",
                self.t_pulse_fs, self.t_c_fs
            )));
        }
        for &tp in &self.pulse_durations_fs {
            if tp < self.t_c_fs {
                return Err(Error::Config(format!(
                    "field pulse_durations_fs: duration {tp} fs is shorter than \
                     the coherence time {} fs",
                    self.t_c_fs
                )));
            }
        }
        if let Some(a) = self.slit_fs {
            if !(a > 0.0) {
                return Err(Error::Config(format!("field slit_fs: must be positive, got {a}")));
            }
        }
        if self.slit_count == 0 || self.slit_count > 8 {
            return Err(Error::Config(format!(
                "field slit_count: must be between 1 and 8, got {}",
                self.slit_count
            )));
        }
        if self.grid.n_points < 2 {
            return Err(Error::Config(format!(
                "field grid.n_points: must be >= 2, got {}",
                self.grid.n_points
            )));
        }
        if self.grid.t_min_ns.is_some() != self.grid.t_max_ns.is_some() {
            return Err(Error::Config(
                "field grid: a window override requires both t_min_ns and t_max_ns".to_string(),
            ));
        }
        self.quadrature.to_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.decohere_n < 3 {
            return Err(Error::Config(format!(
                "field decohere_n: must be >= 3, got {}",
                self.decohere_n
            )));
        }
        for &(i, j) in &self.error_pairs {
            if i == 0 || j == 0 || i >= j {
                return Err(Error::Config(format!(
                    "field error_pairs: pair ({i},{j}) must satisfy 1 <= i < j"
                )));
            }
        }
        self.rates.beam_stats().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::electron(cm_to_m(self.d_cm), ns_to_s(self.t_ns))?
            .with_mass_multiplier(self.mass_multiplier)
    }

    pub fn source(&self, t_pulse_fs: f64) -> Result<SourceSpec> {
        SourceSpec::new(fs_to_s(self.t_c_fs), fs_to_s(t_pulse_fs), self.params()?)
    }

    pub fn detection_grid(&self, slit_duration: f64) -> Result<DetectionGrid> {
        match (self.grid.t_min_ns, self.grid.t_max_ns) {
            (Some(lo), Some(hi)) => DetectionGrid::new(ns_to_s(lo), ns_to_s(hi), self.grid.n_points),
            _ => DetectionGrid::centered_on_flight(&self.params()?, slit_duration, self.grid.n_points),
        }
    }

    /// One-line summary with the derived interval count, used as the
    /// dry-run echo of the resolved configuration.
    pub fn summary(&self) -> Result<String> {
        let n = beamstats::interval_count(fs_to_s(self.t_c_fs), fs_to_s(self.t_pulse_fs))?;
        Ok(format!(
            "T_c = {} fs, T_pulse = {} fs (N = {n}), D = {} cm, T = {} ns, \
             mass multiplier {}, {:?}/{:?}",
            self.t_c_fs, self.t_pulse_fs, self.d_cm, self.t_ns, self.mass_multiplier,
            self.polarization, self.mode
        ))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }
}

/// Parse and validate a JSON scenario configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("line {}, column {}: {}", e.line(), e.column(), e))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Relative error of the incoherent maximum for one interval pair against
/// the (1,3) reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub pair: (u32, u32),
    pub rel_error: f64,
}

/// Max-value relative error of P_incoh^{i,j} (true slit offsets) against the
/// representative P_incoh^{1,3}, one row per requested pair. All amplitudes
/// share one converged quadrature rule so differences reflect only geometry.
pub fn error_table(pairs: &[(u32, u32)], cfg: &ScenarioConfig) -> Result<Vec<ErrorReport>> {
    for &(i, j) in pairs {
        if i == 0 || j == 0 || i >= j {
            return Err(Error::domain(format!("error pair ({i},{j}) must satisfy 1 <= i < j")));
        }
    }
    let source = cfg.source(cfg.t_pulse_fs)?;
    let grid = cfg.detection_grid(source.interval_duration())?;
    let quad = cfg.quadrature.to_config();
    let rule = coincidence::SharedRule::converge(&source, &grid, &quad)?;

    let mut needed: Vec<u32> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    needed.extend_from_slice(&[1, 3]);
    needed.sort_unstable();
    needed.dedup();
    let mut traces = std::collections::BTreeMap::new();
    for &k in &needed {
        traces.insert(k, rule.trace(&source, k)?);
    }
    let max_of = |i: u32, j: u32| -> Result<f64> {
        let joint = coincidence::incoherent_pair_density(&traces[&i], &traces[&j])?;
        let (_, density) = coincidence::marginal_raw_reduction(&joint);
        Ok(density.iter().cloned().fold(f64::MIN, f64::max))
    };
    let reference = max_of(1, 3)?;
    let mut reports = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let value = if (i, j) == (1, 3) { reference } else { max_of(i, j)? };
        reports.push(ErrorReport {
            pair: (i, j),
            rel_error: (value - reference).abs() / reference,
        });
    }
    Ok(reports)
}

fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_text(config_json: &str, extra_meta: &[String], columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config = {config_json}");
    for line in extra_meta {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", columns.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn number_for_filename(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x}").replace('.', "p")
    }
}

struct Emitter<'a> {
    out_dir: &'a Path,
    svg: bool,
    files: Vec<PathBuf>,
}

impl<'a> Emitter<'a> {
    fn new(out_dir: &'a Path, svg: bool) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        Ok(Emitter { out_dir, svg, files: Vec::new() })
    }

    fn emit_csv(&mut self, name: &str, content: &str, plot: bool) -> Result<()> {
        let path = self.out_dir.join(name);
        write_file(&path, content)?;
        self.files.push(path);
        if self.svg && plot {
            let svg = crate::svg::emit_svg(content)?;
            let path = self.out_dir.join(name.replace(".csv", ".svg"));
            write_file(&path, &svg)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn emit_raw(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        write_file(&path, content)?;
        self.files.push(path);
        Ok(())
    }
}

fn canonical_scenario(name: &str) -> Result<&'static str> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "dit" | "figure5" | "fig5" | "figure4" | "fig4" | "figure7" | "fig7" | "boson" => "dit",
        "hbt" | "figure2" | "fig2" => "hbt",
        "contrast" | "table1" => "contrast",
        "rates" => "rates",
        "decohere" | "decoherence" => "decohere",
        "error-table" | "error_table" | "table2" => "error-table",
        "energy-sweep" | "energy_sweep" | "figure3" | "fig3" => "energy-sweep",
        other => {
            return Err(Error::Config(format!(
                "unknown scenario '{other}' (expected dit, hbt, contrast, rates, \
                 decohere, error-table or energy-sweep)"
            )))
        }
    })
}

/// Run the configured scenario, writing deterministic CSV (and optional SVG)
/// files into `out_dir`. Returns the paths written.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let name = canonical_scenario(cfg.scenario.as_deref().unwrap_or("hbt"))?;
    let mut emitter = Emitter::new(out_dir, cfg.svg)?;
    match name {
        "dit" => run_dit(cfg, &mut emitter)?,
        "hbt" => run_hbt(cfg, &mut emitter)?,
        "contrast" => run_contrast(cfg, &mut emitter)?,
        "rates" => run_rates(cfg, &mut emitter)?,
        "decohere" => run_decohere(cfg, &mut emitter)?,
        "error-table" => run_error_table(cfg, &mut emitter)?,
        "energy-sweep" => run_energy_sweep(cfg, &mut emitter)?,
        _ => unreachable!(),
    }
    Ok(emitter.files)
}

/// Slit layout for the dit scenario: `count` slits of duration `a` separated
/// by gaps equal to `gap`.
pub fn slit_row(a: f64, gap: f64, count: u32) -> Result<Vec<TemporalSlit>> {
    (0..count)
        .map(|k| TemporalSlit::new(k as f64 * (a + gap), a))
        .collect()
}

fn run_dit(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let params = cfg.params()?;
    let a = fs_to_s(cfg.slit_fs.unwrap_or(cfg.t_c_fs / 2.0));
    let gap = cfg.separation_fs.map(fs_to_s).unwrap_or(a);
    let slits = slit_row(a, gap, cfg.slit_count)?;
    let grid = cfg.detection_grid(a)?;
    let quad = cfg.quadrature.to_config();
    let coherent = crate::propagation::multi_slit_spectrum(&slits, SlitMode::Coherent, &grid, &params, &quad)?;
    let incoherent =
        crate::propagation::multi_slit_spectrum(&slits, SlitMode::Incoherent, &grid, &params, &quad)?;
    let rows: Vec<Vec<f64>> = (0..grid.n_points)
        .map(|i| vec![s_to_ns(grid.time(i)), coherent.values[i], incoherent.values[i]])
        .collect();
    let meta = vec![format!(
        "slits = {} x {} fs, gap = {} fs, mass multiplier = {}",
        cfg.slit_count,
        cfg.slit_fs.unwrap_or(cfg.t_c_fs / 2.0),
        s_to_ns(gap) * 1e6,
        cfg.mass_multiplier
    )];
    let text = csv_text(&cfg.to_json(), &meta, &["t_ns", "coherent", "incoherent"], &rows);
    emitter.emit_csv("dit.csv", &text, true)
}

fn spectra_for(cfg: &ScenarioConfig, source: &SourceSpec) -> Result<MixtureSpectra> {
    let quad = cfg.quadrature.to_config();
    let grid = cfg.detection_grid(source.interval_duration())?;
    if cfg.exact_pairs {
        coincidence::exact_mixture_spectrum_on_grid(
            source,
            cfg.polarization,
            cfg.mode,
            &quad,
            Some(cfg.exact_pair_cap),
            &grid,
        )
    } else {
        coincidence::mixture_spectrum_on_grid(source, cfg.polarization, cfg.mode, &quad, &grid)
    }
}

fn run_hbt(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let durations = if cfg.pulse_durations_fs.is_empty() {
        vec![cfg.t_pulse_fs]
    } else {
        cfg.pulse_durations_fs.clone()
    };
    for &tp in &durations {
        let source = cfg.source(tp)?;
        let spectra = spectra_for(cfg, &source)?;
        let rows: Vec<Vec<f64>> = (0..spectra.mixture.delays.len())
            .map(|i| {
                vec![
                    s_to_ns(spectra.mixture.delays[i]),
                    spectra.coh_s.density[i],
                    spectra.coh_as.density[i],
                    spectra.incoh.density[i],
                    spectra.mixture.density[i],
                ]
            })
            .collect();
        let contrast = coincidence::numeric_contrast(&spectra.mixture, &spectra.incoh)?;
        let meta = vec![
            format!("t_pulse_fs = {tp}, interval_count_n = {}", source.interval_count_n),
            format!("numeric_contrast = {}", fmt(contrast)),
        ];
        let text = csv_text(
            &cfg.to_json(),
            &meta,
            &["tau_ns", "p_s", "p_as", "p_incoh", "p_mix"],
            &rows,
        );
        emitter.emit_csv(&format!("hbt_tp{}fs.csv", number_for_filename(tp)), &text, true)?;
    }
    Ok(())
}

fn run_contrast(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let tc = fs_to_s(cfg.t_c_fs);
    let stats = cfg.rates.beam_stats();
    let mut rows = Vec::new();
    for &tp in &cfg.pulse_durations_fs {
        let n = beamstats::interval_count(tc, fs_to_s(tp))?;
        let c_pol = beamstats::contrast_analytic(n, Polarization::Polarized)?;
        let c_unpol = beamstats::contrast_analytic(n, Polarization::Unpolarized)?;
        let dp_pol =
            beamstats::delta_p(tc, fs_to_s(tp), cfg.rates.p_incoh0_per_s, Polarization::Polarized)?;
        let dp_unpol = beamstats::delta_p(
            tc,
            fs_to_s(tp),
            cfg.rates.p_incoh0_per_s,
            Polarization::Unpolarized,
        )?;
        rows.push(vec![
            tp,
            n as f64,
            c_pol,
            c_unpol,
            c_pol / c_unpol,
            beamstats::reduced_rate(dp_pol, stats.window_tw, stats.rep_rate_f),
            beamstats::reduced_rate(dp_unpol, stats.window_tw, stats.rep_rate_f),
        ]);
    }
    let meta = vec![
        "rate columns follow the closed-form reduced rate ΔP·t_w·f with the configured \
         window; the published table's rate columns assume a different window"
            .to_string(),
    ];
    let text = csv_text(
        &cfg.to_json(),
        &meta,
        &["t_pulse_fs", "n", "c_pol", "c_unpol", "ratio_pol_unpol", "delta_r_pol_cps", "delta_r_unpol_cps"],
        &rows,
    );
    emitter.emit_csv("contrast.csv", &text, true)
}

fn run_rates(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let stats = cfg.rates.beam_stats();
    stats.validate()?;
    let tc = fs_to_s(cfg.t_c_fs);
    let tp = fs_to_s(cfg.t_pulse_fs);
    let p0_incoh = cfg.rates.p_incoh0_per_s;
    let n = beamstats::interval_count(tc, tp)?;
    let params = cfg.params()?;
    let dp_unpol = beamstats::delta_p(tc, tp, p0_incoh, Polarization::Unpolarized)?;
    let dp_pol = beamstats::delta_p(tc, tp, p0_incoh, Polarization::Polarized)?;
    let dr = beamstats::reduced_rate(dp_unpol, stats.window_tw, stats.rep_rate_f);
    // Mixed-beam criterion with P⁰ at the configured polarization.
    let p0 = p0_incoh
        * match cfg.polarization {
            Polarization::Polarized => (n as f64 - 2.0) / n as f64,
            Polarization::Unpolarized => (n as f64 - 1.0) / n as f64,
        };
    let mixed = beamstats::mixed_rate(stats.eta1_rate, stats.eta2_rate, p0, p0_incoh, stats.window_tw)?;
    let eta_max = beamstats::eta_max(stats.actual_pulse_duration_dte, tc)?;
    let poisson_avg =
        beamstats::poisson_avg_delta_p(stats.mean_eta, stats.actual_pulse_duration_dte, tc, p0_incoh)?;
    let degeneracy = beamstats::degeneracy(cfg.rates.electrons_per_pulse, tc, tp)?;

    let quantities: Vec<(&str, f64)> = vec![
        ("interval_count_n", n as f64),
        ("degeneracy", degeneracy),
        ("kinetic_energy_ev", beamstats::kinetic_energy(&params)),
        ("c_pol_analytic", beamstats::contrast_analytic(n, Polarization::Polarized)?),
        ("c_unpol_analytic", beamstats::contrast_analytic(n, Polarization::Unpolarized)?),
        ("p_incoh0_per_s", p0_incoh),
        ("delta_p_unpol_per_s", dp_unpol),
        ("delta_p_pol_per_s", dp_pol),
        ("reduced_rate_cps", dr),
        ("total_counts", dr * stats.acq_time),
        ("mixed_delta_r_cps", mixed.delta_r),
        (
            "criterion_satisfied",
            match mixed.criterion {
                Some(true) => 1.0,
                Some(false) => 0.0,
                None => f64::NAN,
            },
        ),
        ("eta_max", eta_max as f64),
        ("poisson_avg_delta_p_per_s", poisson_avg),
    ];
    let mut out = String::new();
    let _ = writeln!(out, "# config = {}", cfg.to_json());
    let _ = writeln!(
        out,
        "# closed-form beam analytics; criterion_satisfied is 1/0/nan (nan = no \
         two-electron pulses)"
    );
    let _ = writeln!(out, "quantity,value");
    for (name, value) in quantities {
        let _ = writeln!(out, "{name},{}", fmt(value));
    }
    emitter.emit_csv("rates.csv", &out, false)
}

fn matrix_csv(cfg_json: &str, rho: &DensityMatrix, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config = {cfg_json}");
    let _ = writeln!(out, "# {title}");
    let _ = writeln!(out, "# basis = {}", rho.basis.labels().join(" | "));
    let _ = writeln!(out, "# row-major; each cell printed as re,im");
    let d = rho.dim();
    for i in 0..d {
        let mut cells = Vec::with_capacity(2 * d);
        for j in 0..d {
            let z = rho.entry_complex(i, j);
            cells.push(fmt(z.re));
            cells.push(fmt(z.im));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn matrix_json(rho: &DensityMatrix) -> serde_json::Value {
    let d = rho.dim();
    let rows: Vec<serde_json::Value> = (0..d)
        .map(|i| {
            let row: Vec<serde_json::Value> = (0..d)
                .map(|j| {
                    let z = rho.entry_complex(i, j);
                    serde_json::json!([z.re, z.im])
                })
                .collect();
            serde_json::Value::Array(row)
        })
        .collect();
    serde_json::json!({
        "dim": d,
        "basis": rho.basis.labels(),
        "entries": rows,
    })
}

fn run_decohere(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let psi = decoherence::generalize_state(cfg.decohere_n as usize)?;
    let rho = decoherence::density_from_state(&psi)?;
    let rho12 = decoherence::partial_trace(&rho, Subsystem::Environment)?;
    let rho_bar = decoherence::partial_trace(&rho12, Subsystem::Spin)?;
    let rho1 = decoherence::partial_trace(&rho_bar, Subsystem::Particle2)?;
    let blocks = decoherence::coherence_blocks(&rho_bar)?;
    let cfg_json = cfg.to_json();

    emitter.emit_raw(
        "decohere_rho12.csv",
        &matrix_csv(&cfg_json, &rho12, "two-electron density matrix (environment traced out)"),
    )?;
    emitter.emit_raw(
        "decohere_rho12_spin_avg.csv",
        &matrix_csv(&cfg_json, &rho_bar, "spin-averaged two-electron density matrix"),
    )?;
    emitter.emit_raw(
        "decohere_rho1.csv",
        &matrix_csv(&cfg_json, &rho1, "single-electron density matrix"),
    )?;

    let blocks_json: Vec<serde_json::Value> = blocks
        .iter()
        .map(|b| {
            serde_json::json!({
                "orbitals": [b.labels.0, b.labels.1],
                "off_diagonal": b.off_diagonal,
                "coherent": b.coherent,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "intervals": cfg.decohere_n,
        "rho12": matrix_json(&rho12),
        "rho12_spin_avg": matrix_json(&rho_bar),
        "rho1": matrix_json(&rho1),
        "coherence_blocks": blocks_json,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json serialization cannot fail");
    emitter.emit_raw("decohere.json", &text)
}

fn run_error_table(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let reports = error_table(&cfg.error_pairs, cfg)?;
    let rows: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| vec![r.pair.0 as f64, r.pair.1 as f64, r.rel_error])
        .collect();
    let meta = vec!["relative error in max P_incoh against the (1,3) representative".to_string()];
    let text = csv_text(&cfg.to_json(), &meta, &["n_i", "n_j", "rel_error"], &rows);
    emitter.emit_csv("error_table.csv", &text, false)
}

fn run_energy_sweep(cfg: &ScenarioConfig, emitter: &mut Emitter) -> Result<()> {
    let quad = cfg.quadrature.to_config();
    let mut rows = Vec::new();
    for &t_ns in &cfg.energy_sweep_t_ns {
        let params = PhysicalParams::electron(cm_to_m(cfg.d_cm), ns_to_s(t_ns))?
            .with_mass_multiplier(cfg.mass_multiplier)?;
        let source = SourceSpec::new(fs_to_s(cfg.t_c_fs), fs_to_s(cfg.t_pulse_fs), params)?;
        let grid = match (cfg.grid.t_min_ns, cfg.grid.t_max_ns) {
            (Some(lo), Some(hi)) => DetectionGrid::new(ns_to_s(lo), ns_to_s(hi), cfg.grid.n_points)?,
            _ => DetectionGrid::centered_on_flight(&params, source.interval_duration(), cfg.grid.n_points)?,
        };
        let spectra = coincidence::mixture_spectrum_on_grid(
            &source,
            Polarization::Polarized,
            cfg.mode,
            &quad,
            &grid,
        )?;
        let ke = beamstats::kinetic_energy(&params);
        for i in 0..spectra.coh_as.delays.len() {
            rows.push(vec![ke, s_to_ns(spectra.coh_as.delays[i]), spectra.coh_as.density[i]]);
        }
    }
    let meta = vec![
        "fully coherent antisymmetric delay spectrum per kinetic energy; KE swept \
         via the flight time at fixed distance"
            .to_string(),
    ];
    let text = csv_text(&cfg.to_json(), &meta, &["ke_ev", "tau_ns", "p_as"], &rows);
    emitter.emit_csv("energy_sweep.csv", &text, false)
}

/// Width of the antibunching dip: delay of the spectrum's global maximum on
/// the positive-τ side (the dip at τ = 0 sits between two symmetric peaks).
pub fn dip_half_width(spectrum: &DelaySpectrum) -> f64 {
    let mut best = (0.0, f64::MIN);
    for (&tau, &p) in spectrum.delays.iter().zip(spectrum.density.iter()) {
        if tau >= 0.0 && p > best.1 {
            best = (tau, p);
        }
    }
    best.0
}

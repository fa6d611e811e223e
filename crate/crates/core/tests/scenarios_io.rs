//! Scenario runner and file-emission checks: determinism, config echo,
//! table identities and per-scenario output shapes.

use pulsed_hbt::coincidence::{
    mixture_spectrum_on_grid, numeric_contrast, Polarization, ReductionMode, SourceSpec,
};
use pulsed_hbt::propagation::{DetectionGrid, QuadratureConfig};
use pulsed_hbt::scenarios::{dip_half_width, parse_config, run_scenario, ScenarioConfig};
use pulsed_hbt::units::fs_to_s;

fn fast_config(scenario: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.scenario = Some(scenario.to_string());
    cfg.grid.n_points = 201;
    cfg.pulse_durations_fs = vec![10.0, 50.0];
    cfg.energy_sweep_t_ns = vec![30.0, 50.0];
    cfg.error_pairs = vec![(1, 3), (1, 10)];
    cfg
}

fn read(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn csv_bytes_are_identical_across_runs() {
    let cfg = fast_config("dit");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let files_a = run_scenario(&cfg, dir_a.path()).unwrap();
    let files_b = run_scenario(&cfg, dir_b.path()).unwrap();
    assert_eq!(files_a.len(), files_b.len());
    for (a, b) in files_a.iter().zip(files_b.iter()) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{a:?} differs");
    }
}

#[test]
fn every_csv_embeds_the_resolved_config() {
    let cfg = fast_config("hbt");
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    for f in &files {
        let text = read(f);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# config = {"), "missing config header in {f:?}");
        assert!(first.contains("\"t_c_fs\":10.0"));
        // The embedded config round-trips through the parser.
        let json = first.trim_start_matches("# config = ");
        let parsed = parse_config(json).unwrap();
        assert_eq!(parsed.t_pulse_fs, cfg.t_pulse_fs);
    }
}

#[test]
fn hbt_csv_has_the_five_columns_and_zero_delay_row() {
    let mut cfg = fast_config("hbt");
    cfg.pulse_durations_fs = vec![50.0];
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let text = read(&files[0]);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "tau_ns,p_s,p_as,p_incoh,p_mix");
    // An odd delay grid centred on zero carries an exact tau = 0 row.
    assert!(text.lines().any(|l| l.starts_with("0.00000000e0,")));
}

#[test]
fn contrast_table_identity_and_columns() {
    let mut cfg = fast_config("contrast");
    cfg.pulse_durations_fs = vec![10.0, 15.0, 25.0, 35.0, 50.0, 250.0];
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let text = read(&files[0]);
    let mut data = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("t_pulse_fs") {
            continue;
        }
        let row: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        data.push(row);
    }
    assert_eq!(data.len(), 6);
    for row in &data {
        let (n, c_pol, c_unpol, ratio) = (row[1], row[2], row[3], row[4]);
        // The exact 1e-12 identity is asserted on the analytic path in the
        // library tests; re-parsed 9-significant-digit prints carry ~5e-10
        // rounding of their own.
        let expected = (2.0 * n - 1.0) / (n - 1.0);
        assert!((ratio - expected).abs() <= 1e-8 * expected);
        assert!((c_pol / c_unpol - expected).abs() <= 1e-8 * expected);
        // Eq.-21-style rate columns: polarized is twice unpolarized.
        assert!((row[5] / row[6] - 2.0).abs() < 1e-7);
    }
}

#[test]
fn error_table_rows_are_nonnegative_with_zero_reference() {
    let cfg = fast_config("error-table");
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let text = read(&files[0]);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n_i"))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0][..2], [1.0, 3.0]);
    assert_eq!(rows[0][2], 0.0);
    for row in &rows {
        assert!(row[2] >= 0.0);
    }
}

#[test]
fn rates_scenario_lists_the_closed_form_quantities() {
    let cfg = fast_config("rates");
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let text = read(&files[0]);
    for key in [
        "interval_count_n,1.00000000e1",
        "delta_p_unpol_per_s,1.39000000e7",
        "reduced_rate_cps,2.89120000e4",
        "total_counts,2.89120000e9",
        "kinetic_energy_ev,2.84281505e0",
        "criterion_satisfied,1.00000000e0",
        "eta_max,1.00000000e1",
    ] {
        assert!(text.contains(key), "missing `{key}` in rates.csv:\n{text}");
    }
}

#[test]
fn decohere_scenario_exports_matrices_and_blocks() {
    let cfg = fast_config("decohere");
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|f| f.file_name().unwrap().to_str().unwrap()).collect();
    assert!(names.contains(&"decohere_rho12.csv"));
    assert!(names.contains(&"decohere_rho12_spin_avg.csv"));
    assert!(names.contains(&"decohere_rho1.csv"));
    assert!(names.contains(&"decohere.json"));

    let spin_avg = read(&files[1]);
    let data_rows: Vec<&str> =
        spin_avg.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_rows.len(), 6);
    // First row of the printed matrix: six cells of 1/8 with zero imaginary
    // parts, as re,im pairs.
    assert_eq!(
        data_rows[0],
        std::iter::repeat("1.25000000e-1,0.00000000e0")
            .take(6)
            .collect::<Vec<_>>()
            .join(",")
    );

    let doc: serde_json::Value = serde_json::from_str(&read(&files[3])).unwrap();
    assert_eq!(doc["rho12"]["dim"], 12);
    assert_eq!(doc["rho1"]["entries"][0][0][0], 0.375);
    let blocks = doc["coherence_blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    let ac = blocks.iter().find(|b| b["orbitals"][1] == "t_c" && b["orbitals"][0] == "t_a");
    assert_eq!(ac.unwrap()["coherent"], false);
}

#[test]
fn energy_sweep_dip_narrows_with_kinetic_energy() {
    // Directly verify the sweep's physical content: larger kinetic energy
    // (shorter flight time) narrows the antibunching dip.
    let quad = QuadratureConfig::default();
    let tc = fs_to_s(10.0);
    let mut widths = Vec::new();
    for t_ns in [50.0, 30.0, 15.0] {
        let params =
            pulsed_hbt::propagation::PhysicalParams::electron(0.05, t_ns * 1e-9).unwrap();
        let source = SourceSpec::new(tc, fs_to_s(10.0), params).unwrap();
        let grid = DetectionGrid::centered_on_flight(&params, tc / 2.0, 401).unwrap();
        let spectra = mixture_spectrum_on_grid(
            &source,
            Polarization::Polarized,
            ReductionMode::Marginal,
            &quad,
            &grid,
        )
        .unwrap();
        assert!(numeric_contrast(&spectra.mixture, &spectra.incoh).unwrap() > 0.99);
        widths.push(dip_half_width(&spectra.coh_as));
    }
    assert!(widths[0] > widths[1] && widths[1] > widths[2], "widths {widths:?}");
}

#[test]
fn energy_sweep_scenario_emits_the_surface() {
    let cfg = fast_config("energy-sweep");
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let text = read(&files[0]);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "ke_ev,tau_ns,p_as");
    let ke_values: std::collections::BTreeSet<String> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("ke_ev"))
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(ke_values.len(), 2);
}

#[test]
fn svg_flag_writes_plots_alongside_csv() {
    let mut cfg = fast_config("dit");
    cfg.svg = true;
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|f| f.file_name().unwrap().to_str().unwrap()).collect();
    assert!(names.contains(&"dit.csv"));
    assert!(names.contains(&"dit.svg"));
    let svg = read(files.iter().find(|f| f.extension().unwrap() == "svg").unwrap());
    assert!(svg.contains("coherent") && svg.contains("incoherent"));
}

#[test]
fn boson_alias_runs_the_double_slit_comparison() {
    let mut cfg = fast_config("figure7");
    cfg.slit_count = 2;
    cfg.mass_multiplier = 2.0;
    let dir = tempfile::tempdir().unwrap();
    let files = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(files[0].file_name().unwrap(), "dit.csv");
    let text = read(&files[0]);
    assert!(text.contains("\"mass_multiplier\":2.0"));
}

use std::f64::consts::PI;

use casimir_core::config::Config;
use casimir_core::curve::ForceCurve;
use casimir_core::pipeline::{fig3a_curves, reproduce_fig2, reproduce_fig3a, reproduce_fig3c, reproduce_fig3d, run_pipeline};

const NOMINAL_GEOMETRY: &str = "[geometry]\nperiod = 400nm\ntop_width = 185.3nm\nbottom_width = 199.1nm\ndepth = 98nm\nsidewall_angle = 94.6deg\nsphere_radius = 50um\n";

#[test]
fn perfect_conductor_override_reproduces_ideal_gradient() {
    let cfg = Config::parse("[materials]\nplate = perfect\ngrating = perfect\n[sweep]\nz = 100:500:200nm\n").unwrap();
    let curve = reproduce_fig3a(&cfg).unwrap();
    for (z, g) in curve.points() {
        let ideal = 2.0 * PI * 50e-6 * PI.powi(2) * 1.054_571_817e-34 * 299_792_458.0 / (240.0 * z.powi(4));
        assert!(((g - ideal) / ideal).abs() < 1e-3, "z = {z:e}: {g:e} vs {ideal:e}");
    }
}

#[test]
fn roughness_raises_gradient_and_curve_decreases() {
    let cfg = Config::parse("[roughness]\nenabled = true\nrms_plate = 4nm\nrms_grating = 0.6nm\n[sweep]\nz = 100:600:100nm\n").unwrap();
    let (smooth, rough) = fig3a_curves(&cfg).unwrap();
    assert!(rough.values[0] > smooth.values[0]);
    assert!(rough.values.windows(2).all(|w| w[1] < w[0]));
    assert!(smooth.values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn pfa_from_measured_flat_table_matches_computed_law() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "[sweep]\nz = 100:250:50nm\n";
    let computed = reproduce_fig3c(&Config::parse(&format!("{NOMINAL_GEOMETRY}{grid}")).unwrap()).unwrap();

    // tabulate the computed flat law densely and feed it back as a measurement
    let flat_cfg = Config::parse("[sweep]\nz = 90:360:5nm\n").unwrap();
    let (smooth, _) = fig3a_curves(&flat_cfg).unwrap();
    smooth.write_csv(dir.path().join("flat.csv")).unwrap();
    let text = format!("{NOMINAL_GEOMETRY}{grid}[measurement]\nflat = flat.csv\n");
    let measured = reproduce_fig3c(&Config::parse_in(&text, dir.path()).unwrap()).unwrap();
    for (a, b) in computed.values.iter().zip(&measured.values) {
        assert!(((a - b) / a).abs() < 2e-3, "{a:e} vs {b:e}");
    }
    assert!(measured.to_csv().contains("flat_law: measured"));
}

#[test]
fn flat_profile_gives_unit_rho() {
    let text = "[geometry]\nperiod = 100nm\ntop_width = 100nm\nbottom_width = 0nm\ndepth = 0nm\nsidewall_angle = 90deg\n\
                [sweep]\nz = 150:250:100nm\n[grating]\norders = 2\n";
    let r = reproduce_fig3d(&Config::parse(text).unwrap()).unwrap();
    for v in &r.rho.values {
        assert!((v - 1.0).abs() < 2e-3, "rho = {v}");
    }
    assert!(r.measured_rho.is_none() && r.sweep_csv.is_none());
}

#[test]
fn measured_rho_uses_supplied_gradients() {
    let dir = tempfile::tempdir().unwrap();
    // a "measurement" equal to 1.1 × the PFA prediction must give ρ = 1.1
    let grid = "[sweep]\nz = 100:250:50nm\n";
    let pfa = reproduce_fig3c(&Config::parse(&format!("{NOMINAL_GEOMETRY}{grid}")).unwrap()).unwrap();
    pfa.map_values(|_, v| 1.1 * v, "N/m", "measured")
        .write_csv(dir.path().join("grating.csv"))
        .unwrap();
    let text = format!("{NOMINAL_GEOMETRY}[sweep]\nz = 200nm\n[grating]\norders = 1\n[measurement]\ngrating = grating.csv\n");
    let r = reproduce_fig3d(&Config::parse_in(&text, dir.path()).unwrap()).unwrap();
    let m = r.measured_rho.unwrap();
    for v in &m.values {
        assert!((v - 1.1).abs() < 1e-9, "{v}");
    }
}

#[test]
fn corrugated_electrostatic_gradient_lies_below_flat() {
    let text = format!("{NOMINAL_GEOMETRY}[sweep]\nz = 100:600:250nm\n[electrostatics]\nvoltage_offset = 300mV\ncolumns = 80\ngap_rows = 12\ntrench_rows = 12\n");
    let (flat, grating) = reproduce_fig2(&Config::parse(&text).unwrap()).unwrap();
    for (f, g) in flat.values.iter().zip(&grating.values) {
        assert!(g < f && *g > 0.0);
    }
}

#[test]
fn outputs_carry_hash_and_settings() {
    let text = "[run]\npipeline = fig3a\n[sweep]\nz = 200:300:100nm\n";
    let cfg = Config::parse(text).unwrap();
    let out = run_pipeline(&cfg, None).unwrap();
    let csv = out.file("fig3a.csv").unwrap();
    assert!(csv.contains(&format!("# inputs_sha256: {}", cfg.hash())));
    assert!(csv.contains("# quadrature:"));
    let parsed = ForceCurve::from_csv(csv).unwrap();
    assert_eq!(parsed.len(), 2);
}

#[test]
fn unknown_pipeline_is_rejected() {
    let cfg = Config::parse("[run]\npipeline = fig9\n").unwrap();
    assert!(run_pipeline(&cfg, None).is_err());
    assert!(run_pipeline(&Config::parse("").unwrap(), None).is_err());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let configs = [
        "[run]\npipeline = fig3a\n[roughness]\nenabled = true\n[sweep]\nz = 100:300:100nm\n".to_string(),
        format!("[run]\npipeline = fig2\n{NOMINAL_GEOMETRY}[sweep]\nz = 150:350:200nm\n[electrostatics]\ncolumns = 60\ngap_rows = 10\ntrench_rows = 10\n"),
        format!("[run]\npipeline = fig3d\n{NOMINAL_GEOMETRY}[sweep]\nz = 200nm\n[grating]\norders = 2\ns_nodes = 8\nrho_nodes = 12\nkx_nodes = 4\n"),
    ];
    for text in &configs {
        let cfg = Config::parse(text).unwrap();
        let a = run_pipeline(&cfg, None).unwrap();
        let b = run_pipeline(&cfg, None).unwrap();
        assert_eq!(a.files, b.files);
    }
}

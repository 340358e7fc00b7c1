//! Fast invariant suites behind `--check`.

use std::f64::consts::PI;

use casimir_core::calibration::{
    find_residual_voltage, fit_calibration, synthesize_sweep, DistanceModel, FitSetup, ForceModel, SyntheticTruth,
    Weighting,
};
use casimir_core::config::Config;
use casimir_core::electrostatics::{small_gap_force, solve_corrugated_capacitor, sphere_plane_force, MeshControl, SpherePlaneES};
use casimir_core::geometry::GratingProfile;
use casimir_core::grating::{grating_pressure_curve, grating_reflection, GratingSystem, TruncationSpec};
use casimir_core::materials::{intrinsic_silicon_table, DielectricModel};
use casimir_core::pfa::{pfa_corrugated, pfa_share_topbottom, profile_average, FlatForceLaw, Provenance};
use casimir_core::pipeline::run_pipeline;
use casimir_core::planar::{casimir_pressure_planar, fresnel_te_tm, PlanarPair, QuadratureSpec};
use casimir_core::{Error, Result};

const HBAR: f64 = 1.054_571_817e-34;
const C: f64 = 299_792_458.0;
const EPS0: f64 = 8.854_187_812_8e-12;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn run(module: &str) -> Result<Vec<Check>> {
    match module {
        "materials" => materials(),
        "planar" => planar(),
        "pfa" => pfa(),
        "grating" => grating(),
        "electrostatics" => electrostatics(),
        "calibrate" => calibrate(),
        "pipeline" => pipeline(),
        other => Err(Error::Config(format!("no checks for {other}"))),
    }
}

fn materials() -> Result<Vec<Check>> {
    let models = [
        ("gold_drude", DielectricModel::gold_drude()),
        ("si_doped", DielectricModel::silicon_doped()),
        ("si_intrinsic", DielectricModel::Tabulated(intrinsic_silicon_table())),
    ];
    let mut out = Vec::new();
    for (label, m) in models {
        let mut prev = f64::INFINITY;
        let mut ok = true;
        for i in 0..=70 {
            let xi = 10f64.powf(11.0 + 0.1 * i as f64);
            let e = m.epsilon(xi)?.value().unwrap_or(f64::INFINITY);
            ok &= e >= 1.0 && e <= prev;
            prev = e;
        }
        out.push(check("epsilon_real_decreasing", ok, label.to_string()));
    }
    Ok(out)
}

fn planar() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for z in [100e-9, 300e-9, 1e-6] {
        let p = casimir_pressure_planar(&PlanarPair::ideal(), z, &QuadratureSpec::default())?;
        let exact = -PI * PI * HBAR * C / (240.0 * z.powi(4));
        let r = rel(p, exact);
        out.push(check("ideal_closed_form", r < 1e-3, format!("z = {:.0} nm, rel {r:.1e}", z * 1e9)));
    }
    let mut worst = 0.0f64;
    for m in [DielectricModel::gold_drude(), DielectricModel::silicon_doped()] {
        for i in 0..20 {
            let xi = 10f64.powf(12.0 + 0.25 * i as f64);
            let (te, tm) = fresnel_te_tm(&m, xi, 3.0 * xi / C)?;
            worst = worst.max(te.abs()).max(tm.abs());
        }
    }
    out.push(check("fresnel_passive", worst <= 1.0, format!("max |r| = {worst:.6}")));
    Ok(out)
}

fn pfa() -> Result<Vec<Check>> {
    let profile = GratingProfile::nominal();
    let mut out = Vec::new();
    let laws: [(&str, fn(f64) -> f64); 3] = [
        ("z^-3", |z| z.powi(-3)),
        ("z^-4", |z| z.powi(-4)),
        ("exp", |z| (-z / 80e-9).exp()),
    ];
    for (label, f) in laws {
        let law = FlatForceLaw::analytic(f);
        let z = 150e-9;
        let r = rel(pfa_corrugated(&law, &profile, z)?, profile_average(&law, &profile, z, 100_000)?);
        out.push(check("brute_force_equivalence", r < 1e-5, format!("{label}: rel {r:.1e}")));
    }
    let pair = PlanarPair::gold_silicon();
    let quad = QuadratureSpec::default();
    let law = FlatForceLaw::new(
        move |z| casimir_pressure_planar(&pair, z, &quad),
        Provenance::Computed,
        (0.0, f64::INFINITY),
    );
    for z in [100e-9, 200e-9, 300e-9] {
        let s = pfa_share_topbottom(&law, &profile, z)?;
        out.push(check("top_bottom_share", (s - 0.97).abs() <= 0.01, format!("z = {:.0} nm, share {s:.4}", z * 1e9)));
    }
    Ok(out)
}

fn grating() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let flat = GratingProfile::new(100e-9, 100e-9, 0.0, 0.0, 90.0)?;
    let system = GratingSystem::new(flat, DielectricModel::silicon_doped(), DielectricModel::gold_drude());
    let z = 300e-9;
    let p = grating_pressure_curve(&system, &[z], &TruncationSpec::default().with_order(2))?.values[0];
    let reference = casimir_pressure_planar(&PlanarPair::gold_silicon(), z, &QuadratureSpec::default())?;
    let r = rel(p, reference);
    out.push(check("flat_reduces_to_planar", r < 1e-3, format!("z = 300 nm, rel {r:.1e}")));
    let nominal = GratingProfile::nominal();
    let mut worst = 0.0f64;
    for (xi, kx, ky) in [(1e14, 0.0, 0.0), (5e14, 3e6, 1e7), (2e15, -7e6, 2e7)] {
        let r = grating_reflection(&nominal, &DielectricModel::silicon_doped(), xi, kx, ky, 4, 4)?;
        worst = worst.max(r.max_singular_value());
    }
    out.push(check("passivity", worst <= 1.0 + 1e-8, format!("max singular value {worst:.6}")));
    Ok(out)
}

fn electrostatics() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let zero = sphere_plane_force(&SpherePlaneES::new(50e-6, 100e-9, -0.2, -0.2)?, None)?;
    out.push(check("zero_at_residual_voltage", zero == 0.0, format!("F = {zero:e}")));
    let flat = GratingProfile::new(400e-9, 400e-9, 0.0, 0.0, 90.0)?;
    let z = 200e-9;
    let e = solve_corrugated_capacitor(&flat, z, 0.3, &MeshControl::default())?;
    let r = rel(e, EPS0 * 0.09 / (2.0 * z));
    out.push(check("flat_capacitor_energy", r < 1e-3, format!("rel {r:.1e}")));
    let dev = |d: f64| -> Result<f64> {
        let es = SpherePlaneES::new(50e-6, d, 0.3, 0.0)?;
        Ok(rel(sphere_plane_force(&es, None)?, small_gap_force(&es)))
    };
    let (a, b) = (dev(1e-6)?, dev(50e-9)?);
    out.push(check("series_approaches_asymptote", b < a, format!("{a:.2e} → {b:.2e}")));
    Ok(out)
}

fn calibrate() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (c, z0, v0) = (-614.0, 800e-9, -0.499);
    let model = ForceModel::SpherePlane { radius: 50e-6 };
    let lever_arm = 210e-6;
    let truth = SyntheticTruth {
        c,
        distance: DistanceModel { z0, lever_arm },
        residual_voltage: v0,
    };
    let pts: Vec<_> = (0..26).map(|i| (200e-9 + 20e-9 * i as f64, 0.0, v0 + 0.3)).collect();
    let data = synthesize_sweep(&model, &truth, &pts, None)?;
    let setup = FitSetup {
        lever_arm,
        residual_voltage: v0,
        z0_max: 5e-6,
        weighting: Weighting::Uniform,
    };
    let fit = fit_calibration(&data, &model, None, &setup)?;
    let (rc, rz) = (rel(fit.c, c), rel(fit.z0, z0));
    out.push(check("noiseless_round_trip", rc < 1e-6 && rz < 1e-6, format!("C rel {rc:.1e}, z0 rel {rz:.1e}")));
    let parabola: Vec<(f64, f64)> = (0..9)
        .map(|i| {
            let v = -0.9 + 0.1 * i as f64;
            (v, 3.0 * (v - v0).powi(2) - 2.0)
        })
        .collect();
    let vertex = find_residual_voltage(&parabola)?.v0;
    out.push(check("vertex_recovery", (vertex - v0).abs() < 1e-9, format!("V0 = {vertex:.9}")));
    Ok(out)
}

fn pipeline() -> Result<Vec<Check>> {
    let cfg = Config::parse("[run]\npipeline = fig3a\n[roughness]\nenabled = true\n[sweep]\nz = 100:300:100nm\n")?;
    let a = run_pipeline(&cfg, None)?;
    let b = run_pipeline(&cfg, None)?;
    Ok(vec![check("deterministic_output", a.files == b.files, format!("{} files", a.files.len()))])
}

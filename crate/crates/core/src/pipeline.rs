//! Figure reproduction recipes. Each pipeline is driven entirely by a
//! [`Config`] and produces CSV files stamped with the config hash and the
//! numerical settings. No step uses randomness.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::config::Config;
use crate::curve::ForceCurve;
use crate::electrostatics::{corrugated_sphere_force_gradient, sphere_plane_force_gradient, SpherePlaneES};
use crate::error::{Error, Result};
use crate::grating::{order_sweep, rho_ratio, GratingSystem};
use crate::pfa::{pfa_curve, FlatForceLaw, Provenance};
use crate::planar::{apply_roughness_correction, casimir_pressure_planar, planar_pressure_curve, PlanarPair};

pub const PIPELINES: &[&str] = &["fig3a", "fig3c", "fig3d", "fig2"];

const FIG3A_Z: &str = "100:600:25nm";
const FIG3D_Z: &str = "100:250:30nm";
const FIG2_Z: &str = "100:600:50nm";
const DEFAULT_PLATE: &str = "gold_drude";
const DEFAULT_GRATING: &str = "si_doped";

/// One named CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub files: Vec<OutputFile>,
    /// Non-fatal remarks, e.g. PFA validity.
    pub warnings: Vec<String>,
}

impl PipelineOutput {
    fn push_curve(&mut self, name: &str, curve: &ForceCurve) {
        self.files.push(OutputFile {
            name: name.to_string(),
            contents: curve.to_csv(),
        });
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.files
            .iter()
            .map(|f| {
                let path = dir.join(&f.name);
                std::fs::write(&path, &f.contents)?;
                Ok(path)
            })
            .collect()
    }
}

fn stamp(curve: ForceCurve, cfg: &Config, pipeline: &str) -> ForceCurve {
    let mut c = curve;
    let mut meta = vec![
        ("pipeline".to_string(), pipeline.to_string()),
        ("inputs_sha256".to_string(), cfg.hash()),
    ];
    meta.append(&mut c.metadata);
    c.metadata = meta;
    c
}

fn pair(cfg: &Config) -> Result<PlanarPair> {
    Ok(PlanarPair::new(
        cfg.material("plate", DEFAULT_PLATE)?,
        cfg.material("grating", DEFAULT_GRATING)?,
    ))
}

/// Smooth (uncorrected) and roughness-corrected sphere-plane force gradient
/// 2πR|P(z)| for the flat pair, N/m.
pub fn fig3a_curves(cfg: &Config) -> Result<(ForceCurve, ForceCurve)> {
    let zs = cfg.z_grid(FIG3A_Z)?;
    let quad = cfg.quadrature()?;
    let radius = cfg.experiment()?.sphere_radius;
    let pressure = planar_pressure_curve(&pair(cfg)?, &zs, &quad)?;
    let smooth = pressure.map_values(|_, p| 2.0 * PI * radius * p.abs(), "N/m", "force_gradient");
    let corrected = match cfg.roughness()? {
        Some(spec) => apply_roughness_correction(&smooth, &spec)?
            .with_meta("roughness", format!("rms_plate={:e} m, rms_grating={:e} m", spec.rms_a, spec.rms_b)),
        None => smooth.clone().with_meta("roughness", "off"),
    };
    Ok((
        stamp(smooth, cfg, "fig3a"),
        stamp(corrected.map_values(|_, v| v, "N/m", "force_gradient_rough"), cfg, "fig3a"),
    ))
}

/// Flat gold-silicon force gradient including roughness when configured.
pub fn reproduce_fig3a(cfg: &Config) -> Result<ForceCurve> {
    Ok(fig3a_curves(cfg)?.1)
}

/// Flat force-gradient law: the measured table from `[measurement] flat`
/// when given, otherwise the computed 2πR|P|.
pub fn flat_gradient_law(cfg: &Config) -> Result<FlatForceLaw> {
    if let Some(path) = cfg.path("measurement", "flat") {
        let curve = ForceCurve::read_csv(&path)?;
        return FlatForceLaw::from_curve(&curve, Provenance::MeasuredTable);
    }
    let pair = pair(cfg)?;
    let quad = cfg.quadrature()?;
    let radius = cfg.experiment()?.sphere_radius;
    Ok(FlatForceLaw::new(
        move |z| Ok(2.0 * PI * radius * casimir_pressure_planar(&pair, z, &quad)?.abs()),
        Provenance::Computed,
        (0.0, f64::INFINITY),
    ))
}

/// PFA force gradient on the corrugated surface, N/m.
pub fn reproduce_fig3c(cfg: &Config) -> Result<ForceCurve> {
    let zs = cfg.z_grid(FIG3D_Z)?;
    let law = flat_gradient_law(cfg)?;
    let source = match law.provenance {
        Provenance::MeasuredTable => "measured",
        _ => "computed",
    };
    let profile = cfg.profile()?;
    // PFA evaluations are independent per z
    let values = zs
        .par_iter()
        .map(|&z| crate::pfa::pfa_corrugated(&law, &profile, z))
        .collect::<Result<Vec<_>>>()?;
    let curve = ForceCurve::new(zs, values, "N/m", "pfa_force_gradient")
        .with_meta("flat_law", source)
        .with_meta("quadrature", cfg.quadrature()?.describe());
    Ok(stamp(curve, cfg, "fig3c"))
}

/// Theoretical ρ(z) plus, when `[measurement] grating` is given, the
/// measured ratio against the PFA of the flat law.
#[derive(Debug, Clone)]
pub struct Fig3d {
    pub rho: ForceCurve,
    pub exact: ForceCurve,
    pub pfa: ForceCurve,
    pub measured_rho: Option<ForceCurve>,
    pub sweep_csv: Option<String>,
}

pub fn reproduce_fig3d(cfg: &Config) -> Result<Fig3d> {
    let zs = cfg.z_grid(FIG3D_Z)?;
    let spec = cfg.truncation()?;
    let system = GratingSystem::new(
        cfg.profile()?,
        cfg.material("grating", DEFAULT_GRATING)?,
        cfg.material("plate", DEFAULT_PLATE)?,
    );
    let res = rho_ratio(&system, &zs, &spec)?;
    let measured_rho = match cfg.path("measurement", "grating") {
        Some(path) => {
            let measured = ForceCurve::read_csv(&path)?;
            let law = flat_gradient_law(cfg)?;
            let pfa = pfa_curve(&law, &system.profile, &measured.z, "N/m")?;
            let values = measured.values.iter().zip(&pfa.values).map(|(m, p)| m / p).collect();
            Some(stamp(
                ForceCurve::new(measured.z.clone(), values, "1", "rho_measured"),
                cfg,
                "fig3d",
            ))
        }
        None => None,
    };
    let sweep_csv = match cfg.order_sweep()? {
        Some(orders) => {
            let z = cfg
                .quantity("grating", "sweep_z", crate::units::Dimension::Length)?
                .unwrap_or(*zs.last().expect("non-empty grid"));
            let sweep = order_sweep(&system, z, &orders, &spec)?;
            let mut text = format!("# pipeline: fig3d\n# inputs_sha256: {}\n# truncation: {}\n", cfg.hash(), spec.describe());
            text.push_str(&sweep.to_csv());
            Some(text)
        }
        None => None,
    };
    let quad = format!("planar {}", cfg.quadrature()?.describe());
    Ok(Fig3d {
        rho: stamp(res.rho.with_meta("pfa_quadrature", &quad), cfg, "fig3d"),
        exact: stamp(res.exact, cfg, "fig3d"),
        pfa: stamp(res.pfa.with_meta("quadrature", &quad), cfg, "fig3d"),
        measured_rho,
        sweep_csv,
    })
}

/// Electrostatic force gradients at fixed V − V₀: the sphere-plane series
/// for the flat plate and FEM energies (via F = 2πR E) for the grating.
pub fn reproduce_fig2(cfg: &Config) -> Result<(ForceCurve, ForceCurve)> {
    let zs = cfg.z_grid(FIG2_Z)?;
    let radius = cfg.experiment()?.sphere_radius;
    let v = cfg
        .quantity("electrostatics", "voltage_offset", crate::units::Dimension::Voltage)?
        .unwrap_or(0.3);
    let profile = cfg.profile()?;
    let mesh = cfg.mesh()?;
    let flat = zs
        .iter()
        .map(|&z| sphere_plane_force_gradient(&SpherePlaneES::new(radius, z, v, 0.0)?))
        .collect::<Result<Vec<_>>>()?;
    let corrugated = zs
        .par_iter()
        .map(|&z| corrugated_sphere_force_gradient(&profile, z, v, radius, &mesh))
        .collect::<Result<Vec<_>>>()?;
    let flat = ForceCurve::new(zs.clone(), flat, "N/m", "es_gradient_flat").with_meta("voltage_offset_V", v);
    let corrugated = ForceCurve::new(zs, corrugated, "N/m", "es_gradient_grating")
        .with_meta("voltage_offset_V", v)
        .with_meta("mesh", format!("{}x({}+{})", mesh.columns, mesh.gap_rows, mesh.trench_rows));
    Ok((stamp(flat, cfg, "fig2"), stamp(corrugated, cfg, "fig2")))
}

/// Runs the pipeline named in `[run] pipeline` (or `name` when given).
pub fn run_pipeline(cfg: &Config, name: Option<&str>) -> Result<PipelineOutput> {
    let name = name
        .or(cfg.pipeline())
        .ok_or_else(|| Error::Config("no pipeline selected; set [run] pipeline".into()))?;
    let mut out = PipelineOutput::default();
    let radius = cfg.experiment()?.sphere_radius;
    match name {
        "fig3a" => {
            let (smooth, rough) = fig3a_curves(cfg)?;
            out.warnings.extend(smooth.z.iter().filter_map(|&z| crate::planar::pfa_validity_warning(z, radius)));
            out.push_curve("fig3a_smooth.csv", &smooth);
            out.push_curve("fig3a.csv", &rough);
        }
        "fig3c" => out.push_curve("fig3c_pfa.csv", &reproduce_fig3c(cfg)?),
        "fig3d" => {
            let r = reproduce_fig3d(cfg)?;
            out.push_curve("fig3d_rho.csv", &r.rho);
            out.push_curve("fig3d_exact.csv", &r.exact);
            out.push_curve("fig3d_pfa.csv", &r.pfa);
            if let Some(m) = &r.measured_rho {
                out.push_curve("fig3d_rho_measured.csv", m);
            }
            if let Some(s) = r.sweep_csv {
                out.files.push(OutputFile {
                    name: "fig3d_convergence.csv".into(),
                    contents: s,
                });
            }
        }
        "fig2" => {
            let (flat, grating) = reproduce_fig2(cfg)?;
            out.push_curve("fig2_flat.csv", &flat);
            out.push_curve("fig2_grating.csv", &grating);
        }
        other => {
            return Err(Error::Config(format!(
                "unknown pipeline {other:?}; expected one of {}",
                PIPELINES.join(", ")
            )))
        }
    }
    Ok(out)
}

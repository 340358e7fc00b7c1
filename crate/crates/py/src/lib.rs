//! Python module `casimir`: materials, geometry, planar Lifshitz, PFA,
//! grating ρ, electrostatics, calibration and the figure pipelines.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use casimir_core::calibration::{self as cal, FitSetup, ForceModel, FrequencyShiftSample, Weighting};
use casimir_core::config::{parse_material, Config};
use casimir_core::electrostatics::{self as es, MeshControl, SpherePlaneES};
use casimir_core::geometry::GratingProfile;
use casimir_core::grating::{self, GratingSystem, TruncationSpec};
use casimir_core::materials::{DielectricModel, Permittivity};
use casimir_core::pfa::{self, FlatForceLaw, Provenance};
use casimir_core::planar::{self, PlanarPair, QuadratureSpec};
use casimir_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical { .. } | Error::Fit(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for casimir_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Dielectric response, built from a spec string such as `"gold_drude"`,
/// `"si_doped"`, `"perfect"`, `"constant:11.7"` or `"drude:9eV:35meV"`.
#[pyclass(name = "Material", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMaterial {
    inner: DielectricModel,
    spec: String,
}

#[pymethods]
impl PyMaterial {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_material(spec, &|p| std::path::PathBuf::from(p)).py()?,
            spec: spec.to_string(),
        })
    }

    /// ε(iξ) for ξ in rad/s; `inf` for a perfect conductor.
    fn epsilon(&self, xi: f64) -> PyResult<f64> {
        Ok(match self.inner.epsilon(xi).py()? {
            Permittivity::Finite(e) => e,
            Permittivity::PerfectConductor => f64::INFINITY,
        })
    }

    fn __repr__(&self) -> String {
        format!("Material({:?})", self.spec)
    }
}

/// Trapezoidal corrugation; lengths in m, sidewall angle in degrees.
#[pyclass(name = "GratingProfile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: GratingProfile,
}

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (period, top_width, bottom_width, depth, sidewall_angle=90.0))]
    fn new(period: f64, top_width: f64, bottom_width: f64, depth: f64, sidewall_angle: f64) -> PyResult<Self> {
        Ok(Self {
            inner: GratingProfile::new(period, top_width, bottom_width, depth, sidewall_angle).py()?,
        })
    }

    #[staticmethod]
    fn nominal() -> Self {
        Self {
            inner: GratingProfile::nominal(),
        }
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period
    }

    #[getter]
    fn depth(&self) -> f64 {
        self.inner.depth
    }

    /// Area fractions (p1, p2, p3) of top, bottom and one sidewall.
    fn fractions(&self) -> (f64, f64, f64) {
        (self.inner.p1(), self.inner.p2(), self.inner.p3())
    }

    fn height(&self, x: f64) -> PyResult<f64> {
        self.inner.height_profile(x).py()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "GratingProfile(period={:e}, top_width={:e}, bottom_width={:e}, depth={:e}, sidewall_angle={})",
            p.period, p.top_width, p.bottom_width, p.depth, p.sidewall_angle
        )
    }
}

/// Lifshitz pressure between two half-spaces, Pa (negative = attractive).
#[pyfunction]
#[pyo3(signature = (material_a, material_b, z, xi_nodes=48, k_nodes=48, tolerance=1e-3))]
fn casimir_pressure_planar(
    py: Python<'_>,
    material_a: &PyMaterial,
    material_b: &PyMaterial,
    z: f64,
    xi_nodes: usize,
    k_nodes: usize,
    tolerance: f64,
) -> PyResult<f64> {
    let pair = PlanarPair::new(material_a.inner.clone(), material_b.inner.clone());
    let quad = QuadratureSpec {
        xi_nodes,
        k_nodes,
        tolerance,
        ..QuadratureSpec::default()
    };
    py.detach(|| planar::casimir_pressure_planar(&pair, z, &quad)).py()
}

/// Sphere-plane force gradient 2πR|P(z)|, N/m.
#[pyfunction]
fn force_gradient_sphere_plane(py: Python<'_>, material_a: &PyMaterial, material_b: &PyMaterial, z: f64, radius: f64) -> PyResult<f64> {
    let pair = PlanarPair::new(material_a.inner.clone(), material_b.inner.clone());
    py.detach(|| planar::force_gradient_sphere_plane(&pair, z, radius, &QuadratureSpec::default()))
        .py()
}

/// PFA on the corrugated surface from a sampled flat law (z in m).
#[pyfunction]
fn pfa_corrugated(profile: &PyProfile, z_table: Vec<f64>, values: Vec<f64>, z: f64) -> PyResult<f64> {
    if z_table.len() != values.len() {
        return Err(PyValueError::new_err("z_table and values differ in length"));
    }
    let curve = casimir_core::curve::ForceCurve::new(z_table, values, "", "flat");
    let law = FlatForceLaw::from_curve(&curve, Provenance::MeasuredTable).py()?;
    pfa::pfa_corrugated(&law, &profile.inner, z).py()
}

/// Share of the PFA force carried by top and bottom plateaus, using the
/// computed planar law of the two materials.
#[pyfunction]
fn pfa_share_topbottom(profile: &PyProfile, material_a: &PyMaterial, material_b: &PyMaterial, z: f64) -> PyResult<f64> {
    let pair = PlanarPair::new(material_a.inner.clone(), material_b.inner.clone());
    let quad = QuadratureSpec::default();
    let law = FlatForceLaw::new(
        move |z| planar::casimir_pressure_planar(&pair, z, &quad),
        Provenance::Computed,
        (0.0, f64::INFINITY),
    );
    pfa::pfa_share_topbottom(&law, &profile.inner, z).py()
}

/// ρ(z) = exact / PFA for a grating of `grating` facing a flat `plate`.
#[pyfunction]
#[pyo3(signature = (profile, grating_material, plate_material, zs, max_order=10))]
fn rho_ratio(
    py: Python<'_>,
    profile: &PyProfile,
    grating_material: &PyMaterial,
    plate_material: &PyMaterial,
    zs: Vec<f64>,
    max_order: usize,
) -> PyResult<Vec<f64>> {
    let system = GratingSystem::new(profile.inner, grating_material.inner.clone(), plate_material.inner.clone());
    let spec = TruncationSpec::default().with_order(max_order);
    let r = py.detach(|| grating::rho_ratio(&system, &zs, &spec)).py()?;
    Ok(r.rho.values)
}

/// Exact sphere-plane electrostatic force magnitude, N.
#[pyfunction]
#[pyo3(signature = (radius, gap, voltage, residual_voltage=0.0))]
fn sphere_plane_force(radius: f64, gap: f64, voltage: f64, residual_voltage: f64) -> PyResult<f64> {
    es::sphere_plane_force(&SpherePlaneES::new(radius, gap, voltage, residual_voltage).py()?, None).py()
}

#[pyfunction]
#[pyo3(signature = (radius, gap, voltage, residual_voltage=0.0))]
fn sphere_plane_force_gradient(radius: f64, gap: f64, voltage: f64, residual_voltage: f64) -> PyResult<f64> {
    es::sphere_plane_force_gradient(&SpherePlaneES::new(radius, gap, voltage, residual_voltage).py()?).py()
}

/// FEM energy per area between a flat electrode at gap `z` and the grating, J/m².
#[pyfunction]
#[pyo3(signature = (profile, z, voltage, columns=160, gap_rows=24, trench_rows=24))]
fn corrugated_capacitor_energy(
    py: Python<'_>,
    profile: &PyProfile,
    z: f64,
    voltage: f64,
    columns: usize,
    gap_rows: usize,
    trench_rows: usize,
) -> PyResult<f64> {
    let mesh = MeshControl {
        columns,
        gap_rows,
        trench_rows,
    };
    py.detach(|| es::solve_corrugated_capacitor(&profile.inner, z, voltage, &mesh)).py()
}

/// Fits C and z₀ to rows (z_piezo [m], θ [rad], V [V], Δf [Hz]) with the
/// sphere-plane model. Returns a dict with c, z0, sigma_c, sigma_z0, rms.
#[pyfunction]
#[pyo3(signature = (rows, radius=50e-6, lever_arm=210e-6, residual_voltage=0.0, z0_max=5e-6, relative_weights=false))]
fn fit_calibration(
    rows: Vec<(f64, f64, f64, f64)>,
    radius: f64,
    lever_arm: f64,
    residual_voltage: f64,
    z0_max: f64,
    relative_weights: bool,
) -> PyResult<BTreeMap<String, f64>> {
    let samples: Vec<FrequencyShiftSample> = rows
        .into_iter()
        .map(|(z_piezo, theta, voltage, delta_f)| FrequencyShiftSample {
            z_piezo,
            theta,
            voltage,
            delta_f,
        })
        .collect();
    let setup = FitSetup {
        lever_arm,
        residual_voltage,
        z0_max,
        weighting: if relative_weights { Weighting::Relative } else { Weighting::Uniform },
    };
    let fit = cal::fit_calibration(&samples, &ForceModel::SpherePlane { radius }, None, &setup).py()?;
    Ok(BTreeMap::from([
        ("c".to_string(), fit.c),
        ("z0".to_string(), fit.z0),
        ("sigma_c".to_string(), fit.sigma_c),
        ("sigma_z0".to_string(), fit.sigma_z0),
        ("rms".to_string(), fit.rms_residual),
    ]))
}

/// Vertex V₀ of the parabola through (V, Δf) points.
#[pyfunction]
fn find_residual_voltage(points: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(cal::find_residual_voltage(&points).py()?.v0)
}

/// Runs a pipeline from config text; returns {file name: CSV text}.
#[pyfunction]
#[pyo3(signature = (config_text, name=None))]
fn run_pipeline(py: Python<'_>, config_text: &str, name: Option<&str>) -> PyResult<BTreeMap<String, String>> {
    let cfg = Config::parse(config_text).py()?;
    let out = py.detach(|| casimir_core::pipeline::run_pipeline(&cfg, name)).py()?;
    Ok(out.files.into_iter().map(|f| (f.name, f.contents)).collect())
}

#[pymodule]
fn casimir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(casimir_pressure_planar, m)?)?;
    m.add_function(wrap_pyfunction!(force_gradient_sphere_plane, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_corrugated, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_share_topbottom, m)?)?;
    m.add_function(wrap_pyfunction!(rho_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_plane_force, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_plane_force_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(corrugated_capacitor_energy, m)?)?;
    m.add_function(wrap_pyfunction!(fit_calibration, m)?)?;
    m.add_function(wrap_pyfunction!(find_residual_voltage, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use casimir_core::calibration::{
    find_residual_voltage, fit_calibration, parse_samples, FitSetup, ForceModel, Weighting,
};
use casimir_core::config::Config;
use casimir_core::curve::ForceCurve;
use casimir_core::electrostatics::refinement_check;
use casimir_core::materials::Permittivity;
use casimir_core::pipeline::{flat_gradient_law, reproduce_fig2, reproduce_fig3c, reproduce_fig3d, run_pipeline};
use casimir_core::pfa::pfa_share_topbottom;
use casimir_core::planar::{planar_pressure_curve, PlanarPair};
use casimir_core::units::{parse_grid, parse_quantity, Dimension};
use casimir_core::{Error, Result};

use crate::checks;

#[derive(Parser, Debug)]
#[command(name = "casimir", version, about = "Casimir and electrostatic forces on corrugated surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Config file with unit-suffixed values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run this module's invariant checks instead of computing.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate ε(iξ) for a material.
    Materials(MaterialsArgs),
    /// Lifshitz pressure (or sphere-plane gradient) between flat plates.
    Planar(PlanarArgs),
    /// PFA force gradient on the corrugated surface.
    Pfa(PfaArgs),
    /// Exact grating force, ρ = exact / PFA and order convergence.
    Grating(GratingArgs),
    /// Electrostatic force gradients, flat series and corrugated FEM.
    Electrostatics(ElectrostaticsArgs),
    /// Fit C and z₀ (and V₀ when voltage sweeps are present).
    Calibrate(CalibrateArgs),
    /// Run a figure pipeline from a config.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
pub struct MaterialsArgs {
    #[command(flatten)]
    common: Common,
    /// Material spec, e.g. gold_drude, si_doped, drude:9eV:35meV.
    #[arg(long, default_value = "si_doped")]
    material: String,
    /// Imaginary-frequency grid.
    #[arg(long, default_value = "0.1:10:0.1eV")]
    xi: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanarArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    material_a: Option<String>,
    #[arg(long)]
    material_b: Option<String>,
    /// Separation grid, e.g. 100:600:25nm.
    #[arg(long)]
    z: Option<String>,
    /// Report the sphere-plane gradient 2πR|P| for this radius instead of P.
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PfaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    z: Option<String>,
    /// Measured flat force-gradient CSV (z_nm,value) replacing the computed law.
    #[arg(long)]
    flat_csv: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GratingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    z: Option<String>,
    /// Highest diffraction order N (2N+1 orders).
    #[arg(long)]
    orders: Option<usize>,
    /// Order cutoffs for a convergence sweep, e.g. 4:14:2.
    #[arg(long = "sweep-N")]
    sweep_n: Option<String>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ElectrostaticsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    z: Option<String>,
    /// Applied V − V₀, e.g. 0.3V.
    #[arg(long)]
    voltage: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Also report the energy change under mesh doubling at each z.
    #[arg(long)]
    refinement: bool,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelKind {
    /// Exact sphere-plane series.
    Eq3,
    /// FEM gradient of the configured corrugation.
    Fem,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    Relative,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep CSV: z_piezo_nm, theta_rad, V_volt, delta_f_hz.
    #[arg(long, required_unless_present = "check")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "eq3")]
    model: ModelKind,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    lever_arm: Option<String>,
    /// Residual potential; estimated from voltage parabolas when omitted.
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long, value_enum, default_value = "uniform")]
    weighting: WeightingArg,
    /// Upper bound of the z₀ search.
    #[arg(long, default_value = "5um")]
    z0_max: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    common: Common,
    /// Pipeline name; defaults to [run] pipeline.
    #[arg(long)]
    name: Option<String>,
    /// Output directory; defaults to [run] output, then `out`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

/// Returns `Ok(false)` when checks ran and at least one failed.
pub fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Materials(a) => run_checks_or("materials", &a.common, || materials(&a)),
        Command::Planar(a) => run_checks_or("planar", &a.common, || planar(&a)),
        Command::Pfa(a) => run_checks_or("pfa", &a.common, || pfa(&a)),
        Command::Grating(a) => run_checks_or("grating", &a.common, || grating(&a)),
        Command::Electrostatics(a) => run_checks_or("electrostatics", &a.common, || electrostatics(&a)),
        Command::Calibrate(a) => run_checks_or("calibrate", &a.common, || calibrate(&a)),
        Command::Pipeline(a) => run_checks_or("pipeline", &a.common, || pipeline(&a)),
    }
}

fn run_checks_or(module: &str, common: &Common, run: impl FnOnce() -> Result<()>) -> Result<bool> {
    if !common.check {
        run()?;
        return Ok(true);
    }
    let mut all = true;
    for c in checks::run(module)? {
        all &= c.passed;
        println!("check {module}/{}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    Ok(all)
}

fn load_config(common: &Common) -> Result<Config> {
    match &common.config {
        Some(path) => Config::load(path),
        None => Config::parse(""),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn stamped(curve: ForceCurve, cfg: &Config, command: &str) -> ForceCurve {
    let mut meta = vec![("command".to_string(), command.to_string()), ("inputs_sha256".to_string(), cfg.hash())];
    let mut c = curve;
    meta.append(&mut c.metadata);
    c.metadata = meta;
    c
}

fn materials(a: &MaterialsArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let model = casimir_core::config::parse_material(&a.material, &|p| PathBuf::from(p))?;
    let xis = parse_grid(&a.xi, Dimension::AngularFrequency)?;
    let mut out = format!("# material: {}\n# inputs_sha256: {}\nxi_rad_per_s,epsilon\n", a.material, cfg.hash());
    for xi in xis {
        match model.epsilon(xi)? {
            Permittivity::Finite(e) => writeln!(out, "{xi:.9e},{e:.12e}"),
            Permittivity::PerfectConductor => writeln!(out, "{xi:.9e},inf"),
        }
        .expect("string write");
    }
    emit(&out, a.output.as_deref())
}

fn planar(a: &PlanarArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(m) = &a.material_a {
        cfg.set("materials", "plate", m)?;
    }
    if let Some(m) = &a.material_b {
        cfg.set("materials", "grating", m)?;
    }
    if let Some(z) = &a.z {
        cfg.set("sweep", "z", z)?;
    }
    let pair = PlanarPair::new(cfg.material("plate", "gold_drude")?, cfg.material("grating", "si_doped")?);
    let zs = cfg.z_grid("100:600:25nm")?;
    let quad = cfg.quadrature()?;
    let pressure = planar_pressure_curve(&pair, &zs, &quad)?;
    let curve = match &a.radius {
        Some(r) => {
            let radius = parse_quantity(r, Dimension::Length)?;
            for z in &zs {
                if let Some(w) = casimir_core::planar::pfa_validity_warning(*z, radius) {
                    eprintln!("warning: {w}");
                }
            }
            pressure
                .map_values(|_, p| 2.0 * std::f64::consts::PI * radius * p.abs(), "N/m", "force_gradient")
                .with_meta("radius_m", radius)
        }
        None => pressure,
    };
    emit(&stamped(curve, &cfg, "planar").to_csv(), a.output.as_deref())
}

fn pfa(a: &PfaArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(z) = &a.z {
        cfg.set("sweep", "z", z)?;
    }
    if let Some(p) = &a.flat_csv {
        let abs = std::fs::canonicalize(p)?;
        cfg.set("measurement", "flat", &abs.to_string_lossy())?;
    }
    let curve = reproduce_fig3c(&cfg)?;
    let law = flat_gradient_law(&cfg)?;
    let profile = cfg.profile()?;
    for &z in &curve.z {
        eprintln!("z = {:.1} nm: top+bottom share {:.4}", z * 1e9, pfa_share_topbottom(&law, &profile, z)?);
    }
    emit(&curve.to_csv(), a.output.as_deref())
}

fn grating(a: &GratingArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(z) = &a.z {
        cfg.set("sweep", "z", z)?;
    }
    if let Some(n) = a.orders {
        cfg.set("grating", "orders", &n.to_string())?;
    }
    if let Some(s) = &a.sweep_n {
        cfg.set("grating", "sweep_orders", s)?;
    }
    let r = reproduce_fig3d(&cfg)?;
    for (z, rho) in r.rho.points() {
        println!("z = {:.1} nm  rho = {rho:.5}", z * 1e9);
    }
    let mut files = vec![
        ("grating_rho.csv", r.rho.to_csv()),
        ("grating_exact.csv", r.exact.to_csv()),
        ("grating_pfa.csv", r.pfa.to_csv()),
    ];
    if let Some(m) = &r.measured_rho {
        files.push(("grating_rho_measured.csv", m.to_csv()));
    }
    if let Some(s) = r.sweep_csv {
        files.push(("grating_convergence.csv", s));
    }
    write_files(&a.output_dir, &files)
}

fn electrostatics(a: &ElectrostaticsArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(z) = &a.z {
        cfg.set("sweep", "z", z)?;
    }
    if let Some(v) = &a.voltage {
        cfg.set("electrostatics", "voltage_offset", v)?;
    }
    if let Some(r) = &a.radius {
        cfg.set("geometry", "sphere_radius", r)?;
    }
    let (flat, grating) = reproduce_fig2(&cfg)?;
    let mut files = vec![("es_flat.csv", flat.to_csv()), ("es_grating.csv", grating.to_csv())];
    if a.refinement {
        let profile = cfg.profile()?;
        let mesh = cfg.mesh()?;
        let v = cfg.quantity("electrostatics", "voltage_offset", Dimension::Voltage)?.unwrap_or(0.3);
        let mut text = format!(
            "# inputs_sha256: {}\nz_nm,triangles,energy_J_per_m2,refined_triangles,refined_energy_J_per_m2,relative_change\n",
            cfg.hash()
        );
        for &z in &grating.z {
            let c = refinement_check(&profile, z, v, &mesh)?;
            writeln!(
                text,
                "{:.3},{},{:.12e},{},{:.12e},{:.3e}",
                z * 1e9,
                c.triangles,
                c.energy,
                c.refined_triangles,
                c.refined_energy,
                c.relative_change()
            )
            .expect("string write");
        }
        files.push(("es_refinement.csv", text));
    }
    write_files(&a.output_dir, &files)
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(r) = &a.radius {
        cfg.set("geometry", "sphere_radius", r)?;
    }
    if let Some(b) = &a.lever_arm {
        cfg.set("geometry", "lever_arm", b)?;
    }
    let input = a.input.as_ref().ok_or_else(|| Error::Config("--input is required".into()))?;
    let samples = parse_samples(&std::fs::read_to_string(input)?)?;
    let experiment = cfg.experiment()?;
    let mut report = String::new();

    // groups with ≥ 3 voltages at one piezo position give a V₀ estimate
    let mut groups: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for s in &samples {
        groups.entry((s.z_piezo * 1e12).round() as i64).or_default().push((s.voltage, s.delta_f));
    }
    let mut vertices = Vec::new();
    for (key, pts) in &groups {
        if let Ok(rv) = find_residual_voltage(pts) {
            if pts.len() >= 3 {
                writeln!(report, "V0 at z_piezo = {:.3} nm: {:.6} V", *key as f64 * 1e-3, rv.v0).expect("string write");
                vertices.push(rv.v0);
            }
        }
    }
    let v0 = match &a.v0 {
        Some(v) => parse_quantity(v, Dimension::Voltage)?,
        None if !vertices.is_empty() => vertices.iter().sum::<f64>() / vertices.len() as f64,
        None => 0.0,
    };
    writeln!(report, "V0 = {v0:.6} V").expect("string write");

    let model = match a.model {
        ModelKind::Eq3 => ForceModel::SpherePlane {
            radius: experiment.sphere_radius,
        },
        ModelKind::Fem => ForceModel::fem(&cfg.profile()?, experiment.sphere_radius, (50e-9, 3e-6), 24, &cfg.mesh()?)?,
    };
    let setup = FitSetup {
        lever_arm: experiment.lever_arm,
        residual_voltage: v0,
        z0_max: parse_quantity(&a.z0_max, Dimension::Length)?,
        weighting: match a.weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Relative => Weighting::Relative,
        },
    };
    let fit = fit_calibration(&samples, &model, None, &setup)?;
    report.push_str(&fit.report());
    emit(&report, a.output.as_deref())
}

fn pipeline(a: &PipelineArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let out = run_pipeline(&cfg, a.name.as_deref())?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let dir = a
        .output_dir
        .clone()
        .or_else(|| cfg.get("run", "output").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    for path in out.write_to(&dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

//! Run configuration: INI-style sections whose physical values all carry
//! units (`depth = 98nm`, `plasma = 9eV`).
//!
//! Material specs: `gold_drude`, `si_doped`, `perfect`, `constant:<ε>`,
//! `drude:<ω_p>:<γ>` (unit-suffixed), `table:<path>` and `si_table:<path>`
//! (doped-Si Drude term over a user intrinsic table). Relative paths resolve
//! against the config file's directory.

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::curve::inputs_hash;
use crate::electrostatics::MeshControl;
use crate::error::{Error, Result};
use crate::geometry::{ExperimentGeometry, GratingProfile};
use crate::grating::TruncationSpec;
use crate::materials::{load_tabulated_epsilon, DielectricModel, DrudeLorentzSilicon, DrudeParams};
use crate::planar::{QuadratureSpec, RoughnessSpec};
use crate::units::{parse_grid, parse_int_range, parse_quantity, Dimension};

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("run", &["pipeline", "output"]),
    (
        "geometry",
        &["period", "top_width", "bottom_width", "depth", "sidewall_angle", "sphere_radius", "lever_arm", "resonance"],
    ),
    ("materials", &["plate", "grating"]),
    ("roughness", &["enabled", "rms_plate", "rms_grating"]),
    ("sweep", &["z"]),
    ("quadrature", &["xi_nodes", "k_nodes", "tolerance"]),
    ("grating", &["orders", "slices", "s_nodes", "rho_nodes", "kx_nodes", "tolerance", "sweep_orders", "sweep_z"]),
    ("electrostatics", &["voltage_offset", "columns", "gap_rows", "trench_rows"]),
    ("measurement", &["flat", "grating"]),
];

#[derive(Debug, Clone)]
pub struct Config {
    ini: Ini,
    text: String,
    base_dir: PathBuf,
}

fn strip_comment(value: &str) -> &str {
    let cut = [" ;", " #", "\t;", "\t#"].iter().filter_map(|m| value.find(m)).min();
    cut.map_or(value, |i| &value[..i]).trim()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, Path::new("."))
    }

    pub fn parse_in(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse {
            line: e.line,
            message: e.msg.to_string(),
        })?;
        let cfg = Self {
            ini,
            text: text.to_string(),
            base_dir: base_dir.to_path_buf(),
        };
        cfg.check_keys()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_in(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn check_keys(&self) -> Result<()> {
        for (section, props) in self.ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key {k:?} must be inside a [section]")));
                }
                continue;
            };
            let allowed = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .ok_or_else(|| Error::Config(format!("unknown section [{section}]")))?
                .1;
            if let Some((k, _)) = props.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(Error::Config(format!("unknown key {k:?} in [{section}]")));
            }
        }
        Ok(())
    }

    /// Overrides one value (e.g. from a command-line flag). The override is
    /// recorded in the text so it is covered by [`Config::hash`].
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let allowed = KNOWN_KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k);
        if !allowed.is_some_and(|keys| keys.contains(&key)) {
            return Err(Error::Config(format!("unknown key {key:?} in [{section}]")));
        }
        self.ini.with_section(Some(section)).set(key, value);
        self.text.push_str(&format!("\n# override [{section}] {key} = {value}\n"));
        Ok(())
    }

    /// SHA-256 of the config text, stamped into every output.
    pub fn hash(&self) -> String {
        inputs_hash(&self.text)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(section)).and_then(|p| p.get(key)).map(strip_comment)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    pub fn quantity(&self, section: &str, key: &str, dim: Dimension) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| parse_quantity(v, dim).map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))))
            .transpose()
    }

    fn quantity_or(&self, section: &str, key: &str, dim: Dimension, default: f64) -> Result<f64> {
        Ok(self.quantity(section, key, dim)?.unwrap_or(default))
    }

    pub fn count(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("[{section}] {key}: expected a count, got {v:?}")))
            })
            .transpose()
    }

    pub fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("[{section}] {key}: expected a number, got {v:?}")))
            })
            .transpose()
    }

    pub fn flag(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.get(section, key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(Error::Config(format!("[{section}] {key}: expected true/false, got {v:?}"))),
            })
            .transpose()
    }

    pub fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get(section, key).map(|p| self.resolve(p))
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn pipeline(&self) -> Option<&str> {
        self.get("run", "pipeline")
    }

    /// Separation grid from `[sweep] z` (`start:stop:step<unit>` or a comma
    /// list such as `100nm, 150nm`), or `default` when absent.
    pub fn z_grid(&self, default: &str) -> Result<Vec<f64>> {
        parse_grid(self.get("sweep", "z").unwrap_or(default), Dimension::Length)
    }

    pub fn profile(&self) -> Result<GratingProfile> {
        let nominal = GratingProfile::nominal();
        let g = "geometry";
        GratingProfile::new(
            self.quantity_or(g, "period", Dimension::Length, nominal.period)?,
            self.quantity_or(g, "top_width", Dimension::Length, nominal.top_width)?,
            self.quantity_or(g, "bottom_width", Dimension::Length, nominal.bottom_width)?,
            self.quantity_or(g, "depth", Dimension::Length, nominal.depth)?,
            self.quantity_or(g, "sidewall_angle", Dimension::Angle, nominal.sidewall_angle)?,
        )
    }

    pub fn experiment(&self) -> Result<ExperimentGeometry> {
        let nominal = ExperimentGeometry::nominal();
        let g = "geometry";
        let mut e = ExperimentGeometry::new(
            self.quantity_or(g, "sphere_radius", Dimension::Length, nominal.sphere_radius)?,
            self.quantity_or(g, "lever_arm", Dimension::Length, nominal.lever_arm)?,
            self.quantity_or(g, "resonance", Dimension::Frequency, nominal.resonance_frequency)?,
        )?;
        e.quality_factor = nominal.quality_factor;
        Ok(e)
    }

    pub fn material(&self, key: &str, default: &str) -> Result<DielectricModel> {
        parse_material(self.get("materials", key).unwrap_or(default), &|p| self.resolve(p))
    }

    /// Roughness from `[roughness]`; `None` when the section is absent or
    /// disabled.
    pub fn roughness(&self) -> Result<Option<RoughnessSpec>> {
        if !self.has_section("roughness") || self.flag("roughness", "enabled")? == Some(false) {
            return Ok(None);
        }
        let nominal = RoughnessSpec::nominal();
        let spec = RoughnessSpec::gaussian(
            self.quantity_or("roughness", "rms_plate", Dimension::Length, nominal.rms_a)?,
            self.quantity_or("roughness", "rms_grating", Dimension::Length, nominal.rms_b)?,
        );
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let d = QuadratureSpec::default();
        let q = QuadratureSpec {
            xi_nodes: self.count("quadrature", "xi_nodes")?.unwrap_or(d.xi_nodes),
            k_nodes: self.count("quadrature", "k_nodes")?.unwrap_or(d.k_nodes),
            kx_nodes: d.kx_nodes,
            tolerance: self.number("quadrature", "tolerance")?.unwrap_or(d.tolerance),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        let d = TruncationSpec::default();
        let g = "grating";
        let spec = TruncationSpec {
            max_order: self.count(g, "orders")?.unwrap_or(d.max_order),
            n_slices: self.count(g, "slices")?.unwrap_or(d.n_slices),
            quadrature: QuadratureSpec {
                xi_nodes: self.count(g, "s_nodes")?.unwrap_or(d.quadrature.xi_nodes),
                k_nodes: self.count(g, "rho_nodes")?.unwrap_or(d.quadrature.k_nodes),
                kx_nodes: self.count(g, "kx_nodes")?.unwrap_or(d.quadrature.kx_nodes),
                tolerance: self.number(g, "tolerance")?.unwrap_or(d.quadrature.tolerance),
            },
        };
        spec.quadrature.validate()?;
        Ok(spec)
    }

    /// Order cutoffs for the convergence sweep, if requested.
    pub fn order_sweep(&self) -> Result<Option<Vec<usize>>> {
        self.get("grating", "sweep_orders").map(parse_int_range).transpose()
    }

    pub fn mesh(&self) -> Result<MeshControl> {
        let d = MeshControl::default();
        let e = "electrostatics";
        Ok(MeshControl {
            columns: self.count(e, "columns")?.unwrap_or(d.columns),
            gap_rows: self.count(e, "gap_rows")?.unwrap_or(d.gap_rows),
            trench_rows: self.count(e, "trench_rows")?.unwrap_or(d.trench_rows),
        })
    }
}

/// Parses a material spec (see module docs).
pub fn parse_material(spec: &str, resolve: &dyn Fn(&str) -> PathBuf) -> Result<DielectricModel> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind.trim() {
        "gold_drude" | "gold" => Ok(DielectricModel::gold_drude()),
        "si_doped" | "silicon" => Ok(DielectricModel::silicon_doped()),
        "perfect" | "pec" | "perfect_conductor" => Ok(DielectricModel::PerfectConductor),
        "constant" => {
            let eps: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("constant material needs a number, got {arg:?}")))?;
            if !(eps >= 1.0) {
                return Err(Error::Config(format!("constant permittivity {eps} must be ≥ 1")));
            }
            Ok(DielectricModel::Constant(eps))
        }
        "drude" => {
            let (wp, g) = arg
                .split_once(':')
                .ok_or_else(|| Error::Config("drude material is drude:<plasma>:<relaxation>".into()))?;
            Ok(DielectricModel::Drude(DrudeParams::new(
                parse_quantity(wp, Dimension::AngularFrequency)?,
                parse_quantity(g, Dimension::AngularFrequency)?,
            )?))
        }
        "table" => Ok(DielectricModel::Tabulated(load_tabulated_epsilon(resolve(arg.trim()))?)),
        "si_table" => Ok(DielectricModel::DrudeLorentz(DrudeLorentzSilicon {
            drude: DrudeParams::doped_silicon(),
            intrinsic: load_tabulated_epsilon(resolve(arg.trim()))?,
        })),
        other => Err(Error::Config(format!("unknown material {other:?}"))),
    }
}

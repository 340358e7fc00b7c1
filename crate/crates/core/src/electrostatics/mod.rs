//! Electrostatic calibration forces: the exact sphere-plane series and a
//! periodic-cell finite element solution for the corrugated surface.

mod fem;
mod sphere;

pub use fem::{
    build_mesh, corrugated_sphere_force, corrugated_sphere_force_gradient, refinement_check, solve_corrugated_capacitor,
    solve_on_mesh, FemSolution, Mesh2D, MeshControl, NodeTag, RefinementCheck,
};
pub use sphere::{
    small_gap_force, sphere_plane_force, sphere_plane_force_gradient, SpherePlaneES, SMALL_GAP_CROSSOVER,
};

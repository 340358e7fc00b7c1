//! Linear-triangle finite elements for the periodic corrugated capacitor.
//!
//! The cell spans one period with the trench centred at λ/2. The gap region
//! y ∈ [0, z] is a graded structured grid; trench rows below y = 0 are mapped
//! affinely between the two sidewalls and share the grid's columns across
//! the opening. Nodes cluster toward the ridge edges, where the field is
//! singular. The flat electrode y = z holds potential V, the grating is
//! grounded and the vertical cuts are identified.

use std::f64::consts::PI;

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};
use crate::geometry::GratingProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Electrode,
    Grating,
}

/// Cell counts of the structured mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshControl {
    /// Columns across one period.
    pub columns: usize,
    /// Rows across the gap above the ridge tops.
    pub gap_rows: usize,
    /// Rows through the trench depth.
    pub trench_rows: usize,
}

impl Default for MeshControl {
    /// 160 × 24 gap cells plus the trench: about 11,000 triangles.
    fn default() -> Self {
        Self {
            columns: 160,
            gap_rows: 24,
            trench_rows: 24,
        }
    }
}

impl MeshControl {
    /// Scales every direction by √2, doubling the triangle count.
    pub fn doubled(&self) -> Self {
        let s = |n: usize| ((n as f64) * std::f64::consts::SQRT_2).round() as usize;
        Self {
            columns: s(self.columns),
            gap_rows: s(self.gap_rows),
            trench_rows: s(self.trench_rows),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.columns < 8 || self.gap_rows < 2 || self.trench_rows < 2 {
            return Err(Error::Validation(format!("mesh too coarse: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<NodeTag>,
    /// (node on x = λ, node on x = 0) pairs identified by periodicity.
    pub periodic_pairs: Vec<(usize, usize)>,
    pub period: f64,
}

impl Mesh2D {
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// No inverted triangles and matching periodic cuts.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.triangles.iter().find(|t| !(self.signed_area(t) > 0.0)) {
            return Err(Error::numerical(format!("inverted or degenerate triangle {t:?}"), self.signed_area(t)));
        }
        for &(right, left) in &self.periodic_pairs {
            let (r, l) = (self.nodes[right], self.nodes[left]);
            if (r[0] - l[0] - self.period).abs() > 1e-9 * self.period || (r[1] - l[1]).abs() > 1e-12 * self.period {
                return Err(Error::numerical("periodic cuts do not conform", r[1] - l[1]));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.signed_area(t)).sum()
    }
}

/// u ∈ [0,1] → [0,1], clustered at both ends.
fn cluster_both(u: f64) -> f64 {
    0.5 * (1.0 - (PI * u).cos())
}

/// Clustered toward 1.
fn cluster_high(u: f64) -> f64 {
    (0.5 * PI * u).sin()
}

/// Clustered toward 0.
fn cluster_low(u: f64) -> f64 {
    1.0 - (0.5 * PI * u).cos()
}

fn split(total: usize, weights: [f64; 3]) -> [usize; 3] {
    let sum: f64 = weights.iter().sum();
    let mut counts = weights.map(|w| ((total as f64 * w / sum).round() as usize).max(2));
    let excess = counts.iter().sum::<usize>() as i64 - total as i64;
    counts[1] = (counts[1] as i64 - excess).max(2) as usize;
    counts
}

/// Builds the cell mesh for gap `z` above the ridge tops.
pub fn build_mesh(profile: &GratingProfile, z: f64, control: &MeshControl) -> Result<Mesh2D> {
    profile.validate()?;
    control.validate()?;
    if !(z > 0.0) {
        return Err(Error::domain(format!("gap must be positive, got {z:e}")));
    }
    let lambda = profile.period;
    let half_top = 0.5 * profile.top_width;
    let has_trench = profile.depth > 0.0 && profile.top_width < lambda;
    let opening = (half_top, lambda - half_top);

    // column positions along y = 0
    let mut xs = Vec::new();
    if has_trench && half_top > 0.0 {
        let [n_left, n_open, n_right] = split(control.columns, [half_top, opening.1 - opening.0, half_top]);
        xs.extend((0..n_left).map(|i| half_top * cluster_high(i as f64 / n_left as f64)));
        xs.extend((0..n_open).map(|i| opening.0 + (opening.1 - opening.0) * cluster_both(i as f64 / n_open as f64)));
        xs.extend((0..=n_right).map(|i| opening.1 + half_top * cluster_low(i as f64 / n_right as f64)));
    } else {
        xs.extend((0..=control.columns).map(|i| lambda * i as f64 / control.columns as f64));
    }
    let nx = xs.len();

    let mut nodes = Vec::new();
    let mut tags = Vec::new();
    let gap_index = |i: usize, j: usize| j * nx + i;
    for j in 0..=control.gap_rows {
        let y = if has_trench {
            z * cluster_low(j as f64 / control.gap_rows as f64)
        } else {
            z * j as f64 / control.gap_rows as f64
        };
        for (i, &x) in xs.iter().enumerate() {
            nodes.push([x, y]);
            let on_floor = j == 0 && (!has_trench || x <= opening.0 + 1e-15 * lambda || x >= opening.1 - 1e-15 * lambda);
            tags.push(if j == control.gap_rows {
                NodeTag::Electrode
            } else if on_floor {
                NodeTag::Grating
            } else {
                NodeTag::Interior
            });
            let _ = i;
        }
    }
    let mut triangles = Vec::new();
    let push_quad = |a: usize, b: usize, c: usize, d: usize, tris: &mut Vec<[usize; 3]>| {
        // a b (bottom left, right), d c (top left, right)
        tris.push([a, b, c]);
        tris.push([a, c, d]);
    };
    for j in 0..control.gap_rows {
        for i in 0..nx - 1 {
            push_quad(
                gap_index(i, j),
                gap_index(i + 1, j),
                gap_index(i + 1, j + 1),
                gap_index(i, j + 1),
                &mut triangles,
            );
        }
    }

    if has_trench {
        let first = xs.iter().position(|&x| (x - opening.0).abs() < 1e-15 * lambda).unwrap();
        let last = xs.iter().position(|&x| (x - opening.1).abs() < 1e-15 * lambda).unwrap();
        let s: Vec<f64> = xs[first..=last].iter().map(|x| (x - opening.0) / (opening.1 - opening.0)).collect();
        let run = profile.sidewall_run();
        let mut row_index = vec![(first..=last).map(|i| gap_index(i, 0)).collect::<Vec<_>>()];
        for m in 1..=control.trench_rows {
            let frac = cluster_both(m as f64 / control.trench_rows as f64);
            let y = -profile.depth * frac;
            let left = opening.0 + run * frac;
            let right = opening.1 - run * frac;
            let mut row = Vec::with_capacity(s.len());
            for (k, &sk) in s.iter().enumerate() {
                row.push(nodes.len());
                nodes.push([left + (right - left) * sk, y]);
                let wall = k == 0 || k == s.len() - 1 || m == control.trench_rows;
                tags.push(if wall { NodeTag::Grating } else { NodeTag::Interior });
            }
            row_index.push(row);
        }
        for m in 0..control.trench_rows {
            let (top, bottom) = (&row_index[m], &row_index[m + 1]);
            for k in 0..s.len() - 1 {
                push_quad(bottom[k], bottom[k + 1], top[k + 1], top[k], &mut triangles);
            }
        }
    }

    let periodic_pairs = (0..=control.gap_rows).map(|j| (gap_index(nx - 1, j), gap_index(0, j))).collect();
    let mesh = Mesh2D {
        nodes,
        triangles,
        tags,
        periodic_pairs,
        period: lambda,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Compressed sparse rows over the free degrees of freedom.
struct Csr {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_start = vec![0; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_start[r + 1] = cols.len();
                last = Some((r, c));
            }
        }
        for r in 1..=n {
            row_start[r] = row_start[r].max(row_start[r - 1]);
        }
        Self { row_start, cols, vals }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_start[r]..self.row_start[r + 1];
            *out = self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.row_start.len() - 1)
            .map(|r| {
                let span = self.row_start[r]..self.row_start[r + 1];
                self.cols[span.clone()]
                    .iter()
                    .zip(&self.vals[span])
                    .find(|(&c, _)| c == r)
                    .map_or(0.0, |(_, v)| *v)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients; returns (solution, iterations).
fn conjugate_gradient(a: &Csr, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let max_iter = 20 * n + 100;
    for iter in 0..max_iter {
        a.apply(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res < rel_tol {
            return Ok((x, iter + 1));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numerical(
        "conjugate gradients did not converge",
        dot(&r, &r).sqrt() / b_norm,
    ))
}

/// Potential solution on a mesh.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub potential: Vec<f64>,
    /// Field energy per unit electrode area, J/m².
    pub energy_per_area: f64,
    pub iterations: usize,
    pub triangles: usize,
}

fn local_stiffness(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (2.0 * area2);
        }
    }
    k
}

/// Solves ∇²φ = 0 with φ = V on the electrode and 0 on the grating.
pub fn solve_on_mesh(mesh: &Mesh2D, voltage: f64) -> Result<FemSolution> {
    let n_nodes = mesh.nodes.len();
    // periodic identification, then free-dof numbering
    let mut rep: Vec<usize> = (0..n_nodes).collect();
    for &(right, left) in &mesh.periodic_pairs {
        rep[right] = left;
    }
    let mut dof = vec![usize::MAX; n_nodes];
    let mut n_free = 0;
    for node in 0..n_nodes {
        if rep[node] == node && mesh.tags[node] == NodeTag::Interior {
            dof[node] = n_free;
            n_free += 1;
        }
    }
    let fixed = |node: usize| match mesh.tags[rep[node]] {
        NodeTag::Electrode => voltage,
        _ => 0.0,
    };
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; n_free];
    for t in &mesh.triangles {
        let k = local_stiffness(t.map(|i| mesh.nodes[i]));
        for a in 0..3 {
            let da = dof[rep[t[a]]];
            if da == usize::MAX {
                continue;
            }
            for b in 0..3 {
                let db = dof[rep[t[b]]];
                if db == usize::MAX {
                    rhs[da] -= k[a][b] * fixed(t[b]);
                } else {
                    triplets.push((da, db, k[a][b]));
                }
            }
        }
    }
    let matrix = Csr::from_triplets(n_free, triplets);
    let (x, iterations) = conjugate_gradient(&matrix, &rhs, 1e-12)?;
    let potential: Vec<f64> = (0..n_nodes)
        .map(|node| {
            let d = dof[rep[node]];
            if d == usize::MAX {
                fixed(node)
            } else {
                x[d]
            }
        })
        .collect();
    let mut energy = 0.0;
    for t in &mesh.triangles {
        let k = local_stiffness(t.map(|i| mesh.nodes[i]));
        let phi = t.map(|i| potential[i]);
        for a in 0..3 {
            for b in 0..3 {
                energy += phi[a] * k[a][b] * phi[b];
            }
        }
    }
    Ok(FemSolution {
        potential,
        energy_per_area: 0.5 * EPSILON_0 * energy / mesh.period,
        iterations,
        triangles: mesh.triangle_count(),
    })
}

/// Electrostatic energy per unit area between a flat electrode at gap `z`
/// above the ridge tops and the grounded grating, J/m².
pub fn solve_corrugated_capacitor(profile: &GratingProfile, z: f64, voltage: f64, control: &MeshControl) -> Result<f64> {
    let mesh = build_mesh(profile, z, control)?;
    Ok(solve_on_mesh(&mesh, voltage)?.energy_per_area)
}

/// Sphere-grating force from the PFA mapping F = 2πR E, N.
pub fn corrugated_sphere_force(
    profile: &GratingProfile,
    z: f64,
    voltage: f64,
    radius: f64,
    control: &MeshControl,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("sphere radius must be positive"));
    }
    Ok(2.0 * PI * radius * solve_corrugated_capacitor(profile, z, voltage, control)?)
}

/// |∂F/∂z| = 2πR |∂E/∂z| by a central difference on meshes that share
/// topology, N/m.
pub fn corrugated_sphere_force_gradient(
    profile: &GratingProfile,
    z: f64,
    voltage: f64,
    radius: f64,
    control: &MeshControl,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("sphere radius must be positive"));
    }
    let h = 1e-3 * z;
    let up = solve_corrugated_capacitor(profile, z + h, voltage, control)?;
    let down = solve_corrugated_capacitor(profile, z - h, voltage, control)?;
    Ok(2.0 * PI * radius * ((down - up) / (2.0 * h)).abs())
}

/// Energy at the given mesh and at twice the triangle count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementCheck {
    pub triangles: usize,
    pub energy: f64,
    pub refined_triangles: usize,
    pub refined_energy: f64,
}

impl RefinementCheck {
    pub fn relative_change(&self) -> f64 {
        ((self.refined_energy - self.energy) / self.energy).abs()
    }
}

pub fn refinement_check(profile: &GratingProfile, z: f64, voltage: f64, control: &MeshControl) -> Result<RefinementCheck> {
    let coarse = solve_on_mesh(&build_mesh(profile, z, control)?, voltage)?;
    let fine = solve_on_mesh(&build_mesh(profile, z, &control.doubled())?, voltage)?;
    Ok(RefinementCheck {
        triangles: coarse.triangles,
        energy: coarse.energy_per_area,
        refined_triangles: fine.triangles,
        refined_energy: fine.energy_per_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_capacitor_is_exact() {
        let flat = GratingProfile::new(400e-9, 400e-9, 0.0, 0.0, 90.0).unwrap();
        let z = 150e-9;
        let e = solve_corrugated_capacitor(&flat, z, 0.3, &MeshControl::default()).unwrap();
        let exact = EPSILON_0 * 0.09 / (2.0 * z);
        assert!(((e - exact) / exact).abs() < 1e-9, "{e:e} vs {exact:e}");
    }

    #[test]
    fn mesh_covers_the_cell() {
        let p = GratingProfile::nominal();
        let z = 150e-9;
        let mesh = build_mesh(&p, z, &MeshControl::default()).unwrap();
        let solid = p.period * p.depth - (p.top_width * p.depth + p.sidewall_run() * p.depth);
        let expected = p.period * z + solid;
        assert!(((mesh.area() - expected) / expected).abs() < 1e-12);
        assert!(mesh.triangle_count() > 10_000, "{}", mesh.triangle_count());
    }

    #[test]
    fn doubling_doubles_triangles() {
        let p = GratingProfile::nominal();
        let c = MeshControl::default();
        let a = build_mesh(&p, 1e-7, &c).unwrap().triangle_count() as f64;
        let b = build_mesh(&p, 1e-7, &c.doubled()).unwrap().triangle_count() as f64;
        assert!((b / a - 2.0).abs() < 0.1, "{a} → {b}");
    }

    #[test]
    fn potential_within_bounds() {
        let mesh = build_mesh(&GratingProfile::nominal(), 2e-7, &MeshControl::default()).unwrap();
        let sol = solve_on_mesh(&mesh, 1.0).unwrap();
        assert!(sol.potential.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
    }
}

//! Soap-film relaxation: gradient descent on total mesh area with the
//! rim constrained to a pipe wall.
//!
//! The film is a height field over a polar disk mesh. Interior nodes
//! move vertically; rim nodes slide along the wall, their planar radius
//! solved from the wall equation at their current height after every
//! step (the projection step), with the whole spoke rescaled so cells
//! stay well shaped. Descent directions are the area gradient
//! preconditioned by lumped vertex areas, with a backtracking line
//! search; accepted steps never increase the area.

use super::SolverError;
use crate::jet::{diff_partial, CompiledExpr, Expr, JetVar, VarLayout};

/// The pipe wall the film's rim slides on.
#[derive(Clone)]
pub enum Wall {
    /// Straight circular cylinder `t1^2 + t2^2 = radius^2`.
    Cylinder { radius: f64 },
    /// General level set `phi(t1, t2, y) = 0` in the zero-order chart;
    /// each vertical section `θ = const` must cut it in a single radius.
    LevelSet { phi: CompiledWall },
}

/// Compiled level-set wall: `phi` and its three partials.
#[derive(Clone)]
pub struct CompiledWall {
    pub phi_expr: Expr,
    phi: CompiledExpr,
    grad: [CompiledExpr; 3],
}

impl Wall {
    pub fn cylinder(radius: f64) -> Self {
        Wall::Cylinder { radius }
    }

    pub fn level_set(phi_expr: Expr) -> Result<Self, SolverError> {
        let layout = VarLayout::new(vec![
            JetVar::Independent(0),
            JetVar::Independent(1),
            JetVar::dependent_base(0, 2),
        ]);
        let phi = CompiledExpr::compile(&phi_expr, &layout)?;
        let grad = [
            CompiledExpr::compile(&diff_partial(&phi_expr, &JetVar::Independent(0)), &layout)?,
            CompiledExpr::compile(&diff_partial(&phi_expr, &JetVar::Independent(1)), &layout)?,
            CompiledExpr::compile(&diff_partial(&phi_expr, &JetVar::dependent_base(0, 2)), &layout)?,
        ];
        Ok(Wall::LevelSet { phi: CompiledWall { phi_expr, phi, grad } })
    }

    pub fn phi(&self, p: [f64; 3]) -> f64 {
        match self {
            Wall::Cylinder { radius } => p[0] * p[0] + p[1] * p[1] - radius * radius,
            Wall::LevelSet { phi } => phi.phi.eval(&p),
        }
    }

    pub fn gradient(&self, p: [f64; 3]) -> [f64; 3] {
        match self {
            Wall::Cylinder { .. } => [2.0 * p[0], 2.0 * p[1], 0.0],
            Wall::LevelSet { phi } => {
                [phi.grad[0].eval(&p), phi.grad[1].eval(&p), phi.grad[2].eval(&p)]
            }
        }
    }

    /// Unit outward-gradient normal at a wall point.
    pub fn normal(&self, p: [f64; 3]) -> Option<[f64; 3]> {
        let g = self.gradient(p);
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return None;
        }
        Some([g[0] / n, g[1] / n, g[2] / n])
    }

    /// Solves `phi(r cosθ, r sinθ, y) = 0` for the radius near `guess`
    /// (Newton, residual ≤ 1e-12).
    pub fn radius_at(&self, theta: f64, y: f64, guess: f64) -> Option<f64> {
        match self {
            Wall::Cylinder { radius } => Some(*radius),
            Wall::LevelSet { .. } => {
                let (c, s) = (theta.cos(), theta.sin());
                let mut r = guess.max(1e-3);
                for _ in 0..60 {
                    let p = [r * c, r * s, y];
                    let val = self.phi(p);
                    if val.abs() <= 1e-12 {
                        return Some(r);
                    }
                    let g = self.gradient(p);
                    let dr = g[0] * c + g[1] * s;
                    if !dr.is_finite() || dr.abs() < 1e-14 {
                        return None;
                    }
                    let step = val / dr;
                    r -= step.clamp(-0.5 * r, 0.5 * r);
                    if r <= 1e-6 {
                        return None;
                    }
                }
                None
            }
        }
    }

    /// `dr/dy` along the wall section at fixed `θ` (implicit function).
    fn radial_slope(&self, theta: f64, y: f64, r: f64) -> Option<f64> {
        match self {
            Wall::Cylinder { .. } => Some(0.0),
            Wall::LevelSet { .. } => {
                let (c, s) = (theta.cos(), theta.sin());
                let g = self.gradient([r * c, r * s, y]);
                let dr = g[0] * c + g[1] * s;
                if !dr.is_finite() || dr.abs() < 1e-14 {
                    return None;
                }
                Some(-g[2] / dr)
            }
        }
    }
}

/// Structured polar film mesh: one center node, `rings × sectors` nodes,
/// heights as the degrees of freedom, rim constrained to the wall.
#[derive(Clone)]
pub struct FilmMesh {
    pub rings: usize,
    pub sectors: usize,
    /// Heights: index 0 is the center, then ring-major.
    pub heights: Vec<f64>,
    /// Current rim radius per sector.
    pub boundary_radius: Vec<f64>,
    pub wall: Wall,
    tris: Vec<[usize; 3]>,
}

impl FilmMesh {
    fn node_index(&self, ring: usize, sector: usize) -> usize {
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.sectors + (sector % self.sectors)
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.rings * self.sectors
    }

    fn theta(&self, sector: usize) -> f64 {
        2.0 * std::f64::consts::PI * sector as f64 / self.sectors as f64
    }

    /// Planar radius fraction of a ring.
    fn rho(&self, ring: usize) -> f64 {
        ring as f64 / self.rings as f64
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.sectors).map(|j| self.node_index(self.rings, j)).collect()
    }

    pub fn position(&self, node: usize) -> [f64; 3] {
        if node == 0 {
            return [0.0, 0.0, self.heights[0]];
        }
        let ring = (node - 1) / self.sectors + 1;
        let sector = (node - 1) % self.sectors;
        let r = self.rho(ring) * self.boundary_radius[sector];
        let th = self.theta(sector);
        [r * th.cos(), r * th.sin(), self.heights[node]]
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.node_count()).map(|k| self.position(k)).collect()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    /// Builds the disk mesh over the wall's section, rim on the wall,
    /// heights from the given initial height field.
    pub fn disk(
        rings: usize,
        sectors: usize,
        wall: Wall,
        height: impl Fn(f64, f64) -> f64,
    ) -> Result<FilmMesh, SolverError> {
        if rings < 2 || sectors < 3 {
            return Err(SolverError::BadProblem(
                "film mesh needs at least 2 rings and 3 sectors".into(),
            ));
        }
        let mut mesh = FilmMesh {
            rings,
            sectors,
            heights: vec![0.0; 1 + rings * sectors],
            boundary_radius: vec![1.0; sectors],
            wall,
            tris: Vec::new(),
        };
        // rim first: solve the height/radius fixed point per sector
        for j in 0..sectors {
            let th = mesh.theta(j);
            let mut r = mesh.wall.radius_at(th, 0.0, 1.0).ok_or(SolverError::WallProjectionFailed {
                theta: th,
                y: 0.0,
            })?;
            let mut y = height(r * th.cos(), r * th.sin());
            for _ in 0..200 {
                let r_new = mesh.wall.radius_at(th, y, r).ok_or(SolverError::WallProjectionFailed {
                    theta: th,
                    y,
                })?;
                let y_new = height(r_new * th.cos(), r_new * th.sin());
                let moved = (r_new - r).abs() + (y_new - y).abs();
                r = r_new;
                y = y_new;
                if moved < 1e-14 {
                    break;
                }
            }
            mesh.boundary_radius[j] = r;
            mesh.heights[1 + (rings - 1) * sectors + j] = y;
        }
        // interior heights at the scaled planar positions
        mesh.heights[0] = height(0.0, 0.0);
        for i in 1..rings {
            for j in 0..sectors {
                let th = mesh.theta(j);
                let r = mesh.rho(i) * mesh.boundary_radius[j];
                let idx = mesh.node_index(i, j);
                mesh.heights[idx] = height(r * th.cos(), r * th.sin());
            }
        }
        // triangulation: center fan plus split quads, counterclockwise
        let mut tris = Vec::with_capacity(sectors * (2 * rings - 1));
        for j in 0..sectors {
            tris.push([0, mesh.node_index(1, j), mesh.node_index(1, j + 1)]);
        }
        for i in 1..rings {
            for j in 0..sectors {
                let a = mesh.node_index(i, j);
                let b = mesh.node_index(i + 1, j);
                let c = mesh.node_index(i + 1, j + 1);
                let d = mesh.node_index(i, j + 1);
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
        mesh.tris = tris;
        mesh.check_wall_residuals(1e-8)?;
        Ok(mesh)
    }

    fn check_wall_residuals(&self, tol: f64) -> Result<(), SolverError> {
        for &b in &self.boundary_indices() {
            let p = self.position(b);
            if self.wall.phi(p).abs() > tol {
                return Err(SolverError::WallProjectionFailed { theta: p[1].atan2(p[0]), y: p[2] });
            }
        }
        Ok(())
    }

    /// Total mesh area, or `None` when a cell degenerates (non-positive
    /// planar orientation) or values go non-finite.
    pub fn area(&self) -> Option<f64> {
        let pos = self.positions();
        let mut total = 0.0;
        for t in &self.tris {
            let (a, b, c) = (pos[t[0]], pos[t[1]], pos[t[2]]);
            // planar orientation must stay positive
            let planar = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if !(planar > 1e-14) {
                return None;
            }
            let n = cross(sub(b, a), sub(c, a));
            let area2 = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if !area2.is_finite() {
                return None;
            }
            total += 0.5 * area2;
        }
        Some(total)
    }

    /// Mean and standard deviation of the node heights.
    pub fn height_stats(&self) -> (f64, f64) {
        let n = self.heights.len() as f64;
        let mean = self.heights.iter().sum::<f64>() / n;
        let var = self.heights.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    /// Area gradient with respect to the heights, chained through the
    /// rim radii, plus lumped vertex areas for preconditioning.
    fn area_gradient(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let pos = self.positions();
        let node_count = self.node_count();
        let mut pos_grad = vec![[0.0f64; 3]; node_count];
        let mut lumped = vec![1e-12f64; node_count];
        for t in &self.tris {
            let (a, b, c) = (pos[t[0]], pos[t[1]], pos[t[2]]);
            let n = cross(sub(b, a), sub(c, a));
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if !(norm > 1e-14) {
                return None;
            }
            let nh = [n[0] / norm, n[1] / norm, n[2] / norm];
            let area = 0.5 * norm;
            for &k in t {
                lumped[k] += area / 3.0;
            }
            // ∇_A area = ((B-C) × n̂)/2, cyclic
            add_assign(&mut pos_grad[t[0]], scale(cross(sub(b, c), nh), 0.5));
            add_assign(&mut pos_grad[t[1]], scale(cross(sub(c, a), nh), 0.5));
            add_assign(&mut pos_grad[t[2]], scale(cross(sub(a, b), nh), 0.5));
        }
        let mut grad = vec![0.0; node_count];
        for k in 0..node_count {
            grad[k] = pos_grad[k][2];
        }
        // rim heights also move the whole spoke radially
        for j in 0..self.sectors {
            let b_idx = self.node_index(self.rings, j);
            let th = self.theta(j);
            let slope = self.wall.radial_slope(th, self.heights[b_idx], self.boundary_radius[j])?;
            if slope == 0.0 {
                continue;
            }
            let (c, s) = (th.cos(), th.sin());
            let mut radial = 0.0;
            for i in 1..=self.rings {
                let k = self.node_index(i, j);
                radial += self.rho(i) * (c * pos_grad[k][0] + s * pos_grad[k][1]);
            }
            grad[b_idx] += slope * radial;
        }
        Some((grad, lumped))
    }

    /// Re-solves the rim radii from the current rim heights (the
    /// projection step); residual `|phi| <= tol` afterwards.
    fn project_rim(&mut self, tol: f64) -> Result<(), SolverError> {
        for j in 0..self.sectors {
            let b_idx = self.node_index(self.rings, j);
            let th = self.theta(j);
            let y = self.heights[b_idx];
            let r = self
                .wall
                .radius_at(th, y, self.boundary_radius[j])
                .ok_or(SolverError::WallProjectionFailed { theta: th, y })?;
            self.boundary_radius[j] = r;
        }
        self.check_wall_residuals(tol)
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn add_assign(a: &mut [f64; 3], b: [f64; 3]) {
    a[0] += b[0];
    a[1] += b[1];
    a[2] += b[2];
}

#[derive(Debug, Clone, Copy)]
pub struct FilmSettings {
    pub max_iter: usize,
    /// Converged when the relative area decrease of an accepted step
    /// stays below this.
    pub area_tol: f64,
    /// Wall residual bound after each projection.
    pub wall_tol: f64,
}

impl Default for FilmSettings {
    fn default() -> Self {
        FilmSettings { max_iter: 200_000, area_tol: 1e-10, wall_tol: 1e-8 }
    }
}

#[derive(Clone)]
pub struct FilmRelaxation {
    pub mesh: FilmMesh,
    pub area: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Area after each accepted step (non-increasing).
    pub area_trace: Vec<f64>,
}

/// Relaxes the film: preconditioned gradient descent on the total area
/// with backtracking line search; rim nodes are projected back onto the
/// wall after every trial step, and a step is only accepted if the
/// post-projection area decreased. Area is therefore monotone over
/// accepted steps. Converged when the relative decrease per accepted
/// step falls below `area_tol` (twice in a row).
pub fn relax_film(mesh: &FilmMesh, settings: &FilmSettings) -> Result<FilmRelaxation, SolverError> {
    let mut mesh = mesh.clone();
    mesh.project_rim(settings.wall_tol)?;
    let mut area = mesh.area().ok_or(SolverError::MeshDegenerate { iteration: 0 })?;
    let mut area_trace = vec![area];
    // Barzilai-Borwein step sizes on the preconditioned gradient keep
    // this a plain descent method while escaping the slow-mode crawl of
    // fixed-step descent
    let mut step = 0.25f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (heights, precond grad)
    let mut small_steps = 0;
    let mut rejections_in_a_row = 0;
    for iteration in 1..=settings.max_iter {
        let (grad, lumped) = mesh
            .area_gradient()
            .ok_or(SolverError::MeshDegenerate { iteration })?;
        let pg: Vec<f64> = grad.iter().zip(&lumped).map(|(g, a)| g / a).collect();
        let slope: f64 = grad.iter().zip(&pg).map(|(g, d)| -g * d).sum();
        if slope >= 0.0 {
            // gradient is zero to rounding
            return Ok(FilmRelaxation { mesh, area, iterations: iteration, converged: true, area_trace });
        }
        let bb = prev.as_ref().and_then(|(h_old, pg_old)| {
            let mut sy = 0.0;
            let mut yy = 0.0;
            for ((h, ho), (g, go)) in
                mesh.heights.iter().zip(h_old).zip(pg.iter().zip(pg_old))
            {
                let si = h - ho;
                let yi = g - go;
                sy += si * yi;
                yy += yi * yi;
            }
            (sy > 0.0 && yy > 0.0).then(|| sy / yy)
        });
        let mut alpha = bb.unwrap_or(step * 1.8).clamp(1e-9, 64.0);
        prev = Some((mesh.heights.clone(), pg.clone()));
        let mut accepted = false;
        for _ in 0..50 {
            let mut trial = mesh.clone();
            for (h, d) in trial.heights.iter_mut().zip(&pg) {
                *h -= alpha * d;
            }
            if trial.project_rim(settings.wall_tol).is_ok() {
                if let Some(new_area) = trial.area() {
                    if new_area <= area + 1e-4 * alpha * slope {
                        let rel = (area - new_area) / new_area.abs().max(1e-300);
                        mesh = trial;
                        area = new_area;
                        area_trace.push(area);
                        step = alpha;
                        accepted = true;
                        rejections_in_a_row = 0;
                        if rel <= settings.area_tol {
                            small_steps += 1;
                            if small_steps >= 5 {
                                // BB steps fluctuate; only stop if a fresh
                                // steepest-descent probe also stalls
                                match probe_descent(&mesh, area, &pg, settings) {
                                    Some((better, better_area)) => {
                                        mesh = better;
                                        area = better_area;
                                        small_steps = 0;
                                        prev = None;
                                    }
                                    None => {
                                        return Ok(FilmRelaxation {
                                            mesh,
                                            area,
                                            iterations: iteration,
                                            converged: true,
                                            area_trace,
                                        });
                                    }
                                }
                            }
                        } else {
                            small_steps = 0;
                        }
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            rejections_in_a_row += 1;
            step = (step * 0.25).max(1e-12);
            prev = None;
            if rejections_in_a_row > 3 {
                // descent exhausted at floating-point resolution
                return Ok(FilmRelaxation { mesh, area, iterations: iteration, converged: true, area_trace });
            }
        }
    }
    Err(SolverError::FilmNonConvergence {
        iterations: settings.max_iter,
        last_rel_decrease: f64::NAN,
    })
}

/// Tries a sweep of steepest-descent steps; returns an improved mesh if
/// any of them decreases the area by more than the convergence
/// tolerance (relative).
fn probe_descent(
    mesh: &FilmMesh,
    area: f64,
    pg: &[f64],
    settings: &FilmSettings,
) -> Option<(FilmMesh, f64)> {
    let mut best: Option<(FilmMesh, f64)> = None;
    let mut alpha = 8.0f64;
    for _ in 0..24 {
        let mut trial = mesh.clone();
        for (h, d) in trial.heights.iter_mut().zip(pg) {
            *h -= alpha * d;
        }
        if trial.project_rim(settings.wall_tol).is_ok() {
            if let Some(new_area) = trial.area() {
                let current_best = best.as_ref().map(|(_, a)| *a).unwrap_or(area);
                if new_area < current_best {
                    best = Some((trial, new_area));
                }
            }
        }
        alpha *= 0.5;
    }
    let (trial, new_area) = best?;
    let rel = (area - new_area) / new_area.abs().max(1e-300);
    (rel > settings.area_tol).then_some((trial, new_area))
}

/// Wall-incidence report: angle between the film normal (area-weighted
/// average of adjacent cell normals) and the wall normal at each rim
/// node; deviation is measured from 90 degrees.
#[derive(Debug, Clone)]
pub struct OrthoReport {
    pub max_angle_deviation_deg: f64,
    pub mean_angle_deviation_deg: f64,
}

pub fn check_film_orthogonality(mesh: &FilmMesh) -> Result<OrthoReport, SolverError> {
    let pos = mesh.positions();
    let mut node_normal = vec![[0.0f64; 3]; mesh.node_count()];
    for t in mesh.triangles() {
        let n = cross(sub(pos[t[1]], pos[t[0]]), sub(pos[t[2]], pos[t[0]]));
        // n has twice the triangle area as magnitude: summing raw cross
        // products is the area-weighted average of unit normals
        for &k in t {
            add_assign(&mut node_normal[k], n);
        }
    }
    let mut max_dev: f64 = 0.0;
    let mut sum_dev = 0.0;
    let rim = mesh.boundary_indices();
    for &b in &rim {
        let fnorm = node_normal[b];
        let fl = (fnorm[0] * fnorm[0] + fnorm[1] * fnorm[1] + fnorm[2] * fnorm[2]).sqrt();
        let wall_normal = mesh
            .wall
            .normal(pos[b])
            .ok_or(SolverError::BadProblem("degenerate wall normal".into()))?;
        if fl < 1e-14 {
            return Err(SolverError::BadProblem("degenerate film normal".into()));
        }
        let dot = (fnorm[0] * wall_normal[0] + fnorm[1] * wall_normal[1] + fnorm[2] * wall_normal[2]) / fl;
        let angle = dot.clamp(-1.0, 1.0).acos().to_degrees();
        let dev = (angle - 90.0).abs();
        max_dev = max_dev.max(dev);
        sum_dev += dev;
    }
    Ok(OrthoReport {
        max_angle_deviation_deg: max_dev,
        mean_angle_deviation_deg: sum_dev / rim.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{parse, JetSpace, VarTable};

    fn tilted_pipe_wall(slope: f64) -> Wall {
        let space = JetSpace::new(2, 1, 1);
        let src = format!("(t1 - {slope}*y)^2 + t2^2 - 1");
        Wall::level_set(parse(&src, &space, &VarTable::ty(2)).unwrap()).unwrap()
    }

    #[test]
    fn flat_disk_is_a_fixed_point() {
        let mesh = FilmMesh::disk(12, 16, Wall::cylinder(1.0), |_, _| 0.7).unwrap();
        let before = mesh.area().unwrap();
        let relaxed = relax_film(&mesh, &FilmSettings::default()).unwrap();
        assert!(relaxed.converged);
        assert!((relaxed.area - before).abs() < 1e-12);
        let (_, std) = relaxed.mesh.height_stats();
        assert!(std < 1e-12, "std {std}");
    }

    #[test]
    fn tilted_film_relaxes_flat_and_orthogonal() {
        let mesh = FilmMesh::disk(24, 24, Wall::cylinder(1.0), |t1, _| 0.3 * t1).unwrap();
        let start_area = mesh.area().unwrap();
        let relaxed =
            relax_film(&mesh, &FilmSettings { area_tol: 1e-12, ..Default::default() }).unwrap();
        assert!(relaxed.converged);
        assert!(relaxed.area < start_area);
        let (_, std) = relaxed.mesh.height_stats();
        assert!(std < 1e-4, "height std {std}");
        let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
        assert!(ortho.max_angle_deviation_deg < 0.2, "max dev {}", ortho.max_angle_deviation_deg);
        // rim stays on the wall
        for &b in &relaxed.mesh.boundary_indices() {
            assert!(relaxed.mesh.wall.phi(relaxed.mesh.position(b)).abs() <= 1e-8);
        }
    }

    #[test]
    fn tilted_pipe_film_is_plane_orthogonal_to_axis() {
        // wall (t1 - c y)^2 + t2^2 = 1: the stationary film is the plane
        // y = -c t1 + const, orthogonal to the wall everywhere
        let c = 0.2;
        let mesh = FilmMesh::disk(24, 24, tilted_pipe_wall(c), |_, _| 0.0).unwrap();
        let relaxed =
            relax_film(&mesh, &FilmSettings { area_tol: 1e-12, ..Default::default() }).unwrap();
        assert!(relaxed.converged);
        let (mean, std) = relaxed.mesh.height_stats();
        assert!(std > 0.05, "film should be measurably non-flat, std {std}");
        let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
        assert!(ortho.max_angle_deviation_deg < 0.5, "max dev {}", ortho.max_angle_deviation_deg);
        let mut max_plane_err: f64 = 0.0;
        for k in 0..relaxed.mesh.node_count() {
            let p = relaxed.mesh.position(k);
            max_plane_err = max_plane_err.max((p[2] - (mean - c * p[0])).abs());
        }
        assert!(max_plane_err < 5e-3, "plane error {max_plane_err}");
        for &b in &relaxed.mesh.boundary_indices() {
            assert!(relaxed.mesh.wall.phi(relaxed.mesh.position(b)).abs() <= 1e-8);
        }
    }

    #[test]
    fn unrelaxed_tilt_fails_orthogonality() {
        let mesh = FilmMesh::disk(12, 16, Wall::cylinder(1.0), |t1, _| 0.5 * t1).unwrap();
        let ortho = check_film_orthogonality(&mesh).unwrap();
        assert!(ortho.max_angle_deviation_deg > 5.0);
    }

    #[test]
    fn area_gradient_matches_finite_differences() {
        let mesh = FilmMesh::disk(6, 8, tilted_pipe_wall(0.15), |t1, t2| {
            0.2 * t1 + 0.1 * t2 * t2
        })
        .unwrap();
        let (grad, _) = mesh.area_gradient().unwrap();
        let eps = 1e-6;
        for k in (0..mesh.node_count()).step_by(7) {
            let mut hi = mesh.clone();
            hi.heights[k] += eps;
            hi.project_rim(1e-8).unwrap();
            let mut lo = mesh.clone();
            lo.heights[k] -= eps;
            lo.project_rim(1e-8).unwrap();
            let fd = (hi.area().unwrap() - lo.area().unwrap()) / (2.0 * eps);
            assert!(
                (fd - grad[k]).abs() <= 1e-5 * (1.0 + grad[k].abs()),
                "node {k}: fd {fd} vs analytic {}",
                grad[k]
            );
        }
    }

    #[test]
    fn wall_radius_solver_matches_geometry() {
        let wall = tilted_pipe_wall(0.25);
        // section at θ=0: (r - 0.25 y)^2 = 1 -> r = 0.25 y + 1
        let r = wall.radius_at(0.0, 0.8, 1.0).unwrap();
        assert!((r - 1.2).abs() < 1e-10, "r = {r}");
        // θ = π/2: r^2 + (0.25 y)^2... wall: (0 - 0.25y)^2 + r^2 = 1
        let y = 0.8f64;
        let expected = (1.0 - (0.25 * y) * (0.25 * y)).sqrt();
        let r = wall.radius_at(std::f64::consts::FRAC_PI_2, y, 1.0).unwrap();
        assert!((r - expected).abs() < 1e-10);
    }
}

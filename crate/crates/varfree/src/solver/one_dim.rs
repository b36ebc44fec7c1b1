//! Discretized 1D free-boundary problems with sliding endpoints.
//!
//! The action of an order-1 density over `[t_0(σ_0), t_1(σ_1)]` is
//! discretized on a uniform grid whose endpoints ride on the boundary
//! curves. The objective is the exact action of the piecewise-linear
//! interpolant under midpoint quadrature: per cell, `L` is sampled at
//! the cell midpoint with the cell slope. This keeps the discrete
//! boundary terms consistent with the continuum integration by parts,
//! so optimality residuals shrink at O(N^-2); nodal-trapezoid variants
//! with one-sided end stencils lose an order at the endpoints. The
//! endpoint parameters are unknowns alongside the interior node values,
//! so domain variation is part of the same objective and no ghost
//! extension of `u` is needed. Reported nodal derivatives use centered
//! stencils inside and second-order one-sided stencils at the ends.

use super::optim::{self, LbfgsSettings};
use super::SolverError;
use crate::contact::{transversality_1d, BoundaryCurve};
use crate::jet::{diff_partial, evaluate, CompiledExpr, JetPoint, JetVar, MultiIndex, VarLayout};
use crate::variational::{euler_lagrange, Lagrangian};

/// Initial guess: endpoint parameters plus an interior profile.
#[derive(Debug, Clone)]
pub struct Initial1D {
    pub sigma0: f64,
    pub sigma1: f64,
    pub profile: Profile1D,
}

#[derive(Debug, Clone)]
pub enum Profile1D {
    /// Straight line between the initial endpoints.
    Linear,
    /// Explicit interior node values (length N-1).
    Values(Vec<f64>),
}

/// A 1D variational problem with free boundary values: an order-1
/// density and two disjoint boundary curves the endpoints slide along.
#[derive(Debug, Clone)]
pub struct Problem1D {
    pub lagrangian: Lagrangian,
    pub gamma0: BoundaryCurve,
    pub gamma1: BoundaryCurve,
    pub initial: Initial1D,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub max_iter: usize,
    /// Convergence: finite-difference gradient norm at the solution.
    pub gtol: f64,
    /// Step for the finite-difference gradient check.
    pub fd_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iter: 50_000, gtol: 1e-9, fd_step: 1e-5 }
    }
}

/// Converged discrete solution.
#[derive(Debug, Clone)]
pub struct DiscreteSolution1D {
    pub n_cells: usize,
    pub sigma0: f64,
    pub sigma1: f64,
    /// Node abscissas, length N+1, strictly increasing.
    pub grid: Vec<f64>,
    /// Node values, length N+1; endpoints lie on the curves exactly.
    pub values: Vec<f64>,
    /// Discrete derivative at each node (the solver's stencils).
    pub derivs: Vec<f64>,
    pub action: f64,
    pub iterations: usize,
    pub grad_norm_fd: f64,
    pub converged: bool,
}

struct CompiledCurve {
    t: CompiledExpr,
    y: CompiledExpr,
    dt: CompiledExpr,
    dy: CompiledExpr,
}

impl CompiledCurve {
    fn build(curve: &BoundaryCurve) -> Result<Self, SolverError> {
        let layout = VarLayout::new(vec![JetVar::Independent(0)]);
        let (tc, yc) = curve.components();
        let sigma = JetVar::Independent(0);
        Ok(CompiledCurve {
            t: CompiledExpr::compile(tc, &layout)?,
            y: CompiledExpr::compile(yc, &layout)?,
            dt: CompiledExpr::compile(&diff_partial(tc, &sigma), &layout)?,
            dy: CompiledExpr::compile(&diff_partial(yc, &sigma), &layout)?,
        })
    }

    fn at(&self, sigma: f64) -> (f64, f64) {
        (self.t.eval(&[sigma]), self.y.eval(&[sigma]))
    }

    fn tangent(&self, sigma: f64) -> (f64, f64) {
        (self.dt.eval(&[sigma]), self.dy.eval(&[sigma]))
    }
}

/// The differentiable discrete objective over `(σ_0, σ_1, v_1..v_{N-1})`
/// (pinned endpoints drop their σ from the unknown vector).
pub struct Objective1D {
    n_cells: usize,
    density: CompiledExpr,
    l_t: CompiledExpr,
    l_u: CompiledExpr,
    l_p: CompiledExpr,
    curve0: CompiledCurve,
    curve1: CompiledCurve,
    sigma0_fixed: f64,
    sigma1_fixed: f64,
    pub free0: bool,
    pub free1: bool,
}

/// Builds the discrete action. `N >= 8`.
pub fn discretize_action(problem: &Problem1D, n_cells: usize) -> Result<Objective1D, SolverError> {
    if n_cells < 8 {
        return Err(SolverError::TooFewCells(n_cells));
    }
    let l = &problem.lagrangian;
    if l.n() != 1 || l.m() != 1 || l.order() != 1 {
        return Err(SolverError::BadProblem(
            "1D solver needs a first-order density with n = m = 1".into(),
        ));
    }
    let layout = VarLayout::new(vec![
        JetVar::Independent(0),
        JetVar::dependent_base(0, 1),
        JetVar::dependent(0, MultiIndex::new(vec![1])),
    ]);
    let density = l.density();
    let obj = Objective1D {
        n_cells,
        density: CompiledExpr::compile(density, &layout)?,
        l_t: CompiledExpr::compile(&diff_partial(density, &JetVar::Independent(0)), &layout)?,
        l_u: CompiledExpr::compile(&diff_partial(density, &JetVar::dependent_base(0, 1)), &layout)?,
        l_p: CompiledExpr::compile(
            &diff_partial(density, &JetVar::dependent(0, MultiIndex::new(vec![1]))),
            &layout,
        )?,
        curve0: CompiledCurve::build(&problem.gamma0)?,
        curve1: CompiledCurve::build(&problem.gamma1)?,
        sigma0_fixed: problem.initial.sigma0,
        sigma1_fixed: problem.initial.sigma1,
        free0: !problem.gamma0.is_point(),
        free1: !problem.gamma1.is_point(),
    };
    Ok(obj)
}

/// Geometry of one evaluation: grid and node values.
struct Eval1D {
    h: f64,
    t0: f64,
    u: Vec<f64>,
}

impl Objective1D {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dof_len(&self) -> usize {
        (self.free0 as usize) + (self.free1 as usize) + self.n_cells - 1
    }

    pub fn sigmas(&self, z: &[f64]) -> (f64, f64) {
        let mut idx = 0;
        let s0 = if self.free0 {
            idx += 1;
            z[0]
        } else {
            self.sigma0_fixed
        };
        let s1 = if self.free1 { z[idx] } else { self.sigma1_fixed };
        (s0, s1)
    }

    fn interior_offset(&self) -> usize {
        (self.free0 as usize) + (self.free1 as usize)
    }

    /// Packs an initial unknown vector from the problem's guess.
    pub fn initial_vector(&self, initial: &Initial1D) -> Result<Vec<f64>, SolverError> {
        let n = self.n_cells;
        let mut z = Vec::with_capacity(self.dof_len());
        if self.free0 {
            z.push(initial.sigma0);
        }
        if self.free1 {
            z.push(initial.sigma1);
        }
        let (t0, u0) = self.curve0.at(initial.sigma0);
        let (t1, u1) = self.curve1.at(initial.sigma1);
        if !(t1 - t0).is_finite() || t1 - t0 <= 1e-9 * (1.0 + t0.abs() + t1.abs()) {
            return Err(SolverError::DegenerateInterval { t0, t1 });
        }
        match &initial.profile {
            Profile1D::Linear => {
                for j in 1..n {
                    z.push(u0 + (u1 - u0) * j as f64 / n as f64);
                }
            }
            Profile1D::Values(vals) => {
                if vals.len() != n - 1 {
                    return Err(SolverError::BadProblem(format!(
                        "expected {} interior values, got {}",
                        n - 1,
                        vals.len()
                    )));
                }
                z.extend_from_slice(vals);
            }
        }
        Ok(z)
    }

    fn geometry(&self, z: &[f64]) -> Option<Eval1D> {
        let n = self.n_cells;
        let (s0, s1) = self.sigmas(z);
        let (t0, u0) = self.curve0.at(s0);
        let (t1, u1) = self.curve1.at(s1);
        if !t0.is_finite() || !t1.is_finite() || !u0.is_finite() || !u1.is_finite() {
            return None;
        }
        let span = t1 - t0;
        if span <= 1e-9 * (1.0 + t0.abs() + t1.abs()) {
            return None;
        }
        let h = span / n as f64;
        let off = self.interior_offset();
        let mut u = Vec::with_capacity(n + 1);
        u.push(u0);
        u.extend_from_slice(&z[off..off + n - 1]);
        u.push(u1);
        Some(Eval1D { h, t0, u })
    }

    /// Discrete action; `None` off the feasible set.
    pub fn value(&self, z: &[f64]) -> Option<f64> {
        let geo = self.geometry(z)?;
        let n = self.n_cells;
        let mut acc = 0.0;
        for c in 0..n {
            let t_mid = geo.t0 + (c as f64 + 0.5) * geo.h;
            let u_mid = 0.5 * (geo.u[c] + geo.u[c + 1]);
            let slope = (geo.u[c + 1] - geo.u[c]) / geo.h;
            let val = self.density.eval(&[t_mid, u_mid, slope]);
            if !val.is_finite() {
                return None;
            }
            acc += val;
        }
        Some(geo.h * acc)
    }

    /// Analytic gradient of the discrete action.
    pub fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let geo = self.geometry(z)?;
        let n = self.n_cells;
        let h = geo.h;
        let nf = n as f64;
        let mut total_l = 0.0;
        let mut lt = vec![0.0; n];
        let mut lu = vec![0.0; n];
        let mut lp = vec![0.0; n];
        let mut slope = vec![0.0; n];
        for c in 0..n {
            let t_mid = geo.t0 + (c as f64 + 0.5) * h;
            let u_mid = 0.5 * (geo.u[c] + geo.u[c + 1]);
            slope[c] = (geo.u[c + 1] - geo.u[c]) / h;
            let slots = [t_mid, u_mid, slope[c]];
            let val = self.density.eval(&slots);
            lt[c] = self.l_t.eval(&slots);
            lu[c] = self.l_u.eval(&slots);
            lp[c] = self.l_p.eval(&slots);
            if !(val.is_finite() && lt[c].is_finite() && lu[c].is_finite() && lp[c].is_finite()) {
                return None;
            }
            total_l += val;
        }

        // ∂S/∂u_idx at fixed grid: each node touches its two cells
        let mut gu = vec![0.0; n + 1];
        for c in 0..n {
            gu[c] += 0.5 * h * lu[c] - lp[c];
            gu[c + 1] += 0.5 * h * lu[c] + lp[c];
        }

        let mut grad = vec![0.0; self.dof_len()];
        let off = self.interior_offset();
        grad[off..off + n - 1].copy_from_slice(&gu[1..n]);

        // endpoint parameters: value motion along the curve plus grid
        // stretching (h and the midpoints depend on σ)
        let (s0, s1) = self.sigmas(z);
        let mut idx = 0;
        if self.free0 {
            let (a_p, p_p) = self.curve0.tangent(s0);
            let dh = -a_p / nf;
            let mut g = gu[0] * p_p + dh * total_l;
            for c in 0..n {
                let dt_mid = a_p * (1.0 - (c as f64 + 0.5) / nf);
                g += h * (lt[c] * dt_mid + lp[c] * (-slope[c] / h) * dh);
            }
            grad[idx] = g;
            idx += 1;
        }
        if self.free1 {
            let (b_p, q_p) = self.curve1.tangent(s1);
            let dh = b_p / nf;
            let mut g = gu[n] * q_p + dh * total_l;
            for c in 0..n {
                let dt_mid = b_p * ((c as f64 + 0.5) / nf);
                g += h * (lt[c] * dt_mid + lp[c] * (-slope[c] / h) * dh);
            }
            grad[idx] = g;
        }
        Some(grad)
    }

    /// Central-difference gradient (the convergence certificate); the
    /// step scales with each component's magnitude.
    pub fn fd_gradient(&self, z: &[f64], eps: f64) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(z.len());
        let mut work = z.to_vec();
        for i in 0..z.len() {
            let x = z[i];
            let step = eps * (1.0 + x.abs());
            work[i] = x + step;
            let hi = self.value(&work)?;
            work[i] = x - step;
            let lo = self.value(&work)?;
            work[i] = x;
            out.push((hi - lo) / (2.0 * step));
        }
        Some(out)
    }

    /// Expands an unknown vector into the full solution description.
    /// Nodal derivatives are centered inside and second-order one-sided
    /// at the endpoints.
    pub fn solution_from(&self, z: &[f64]) -> Option<(f64, f64, Eval1DPublic)> {
        let (s0, s1) = self.sigmas(z);
        let geo = self.geometry(z)?;
        let n = self.n_cells;
        let h = geo.h;
        let grid = (0..=n).map(|k| geo.t0 + k as f64 * h).collect();
        let mut derivs = vec![0.0; n + 1];
        derivs[0] = (-3.0 * geo.u[0] + 4.0 * geo.u[1] - geo.u[2]) / (2.0 * h);
        for k in 1..n {
            derivs[k] = (geo.u[k + 1] - geo.u[k - 1]) / (2.0 * h);
        }
        derivs[n] = (3.0 * geo.u[n] - 4.0 * geo.u[n - 1] + geo.u[n - 2]) / (2.0 * h);
        Some((s0, s1, Eval1DPublic { grid, values: geo.u, derivs }))
    }
}

/// Grid data of a candidate solution.
pub struct Eval1DPublic {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

/// Minimizes the discrete action; converged means the central
/// finite-difference gradient norm over all unknowns is `<= gtol`.
/// Deterministic: no randomness anywhere in the pipeline.
pub fn minimize_1d(
    problem: &Problem1D,
    n_cells: usize,
    settings: &SolverSettings,
) -> Result<DiscreteSolution1D, SolverError> {
    let obj = discretize_action(problem, n_cells)?;
    let z0 = obj.initial_vector(&problem.initial)?;
    check_not_tangent(problem, &obj, &z0)?;

    let wrapped = |x: &[f64], g: &mut [f64]| -> Option<f64> {
        let value = obj.value(x)?;
        let grad = obj.gradient(x)?;
        g.copy_from_slice(&grad);
        Some(value)
    };
    // quasi-Newton into the basin, then damped Newton to squeeze the
    // stiff odd/even lattice mode of the centered-difference stencil
    let coarse = optim::minimize(
        &wrapped,
        &z0,
        &LbfgsSettings {
            max_iter: settings.max_iter,
            gtol: (settings.gtol * 0.5).max(1e-7),
            memory: 16,
        },
    );
    let mut res = optim::newton_refine(
        &wrapped,
        &coarse.x,
        &LbfgsSettings { max_iter: settings.max_iter, gtol: settings.gtol * 0.5, memory: 16 },
    );
    res.iterations += coarse.iterations;
    let fd = obj
        .fd_gradient(&res.x, settings.fd_step)
        .ok_or(SolverError::DegenerateInterval { t0: f64::NAN, t1: f64::NAN })?;
    let grad_norm_fd = fd.iter().map(|g| g * g).sum::<f64>().sqrt();
    let converged = grad_norm_fd <= settings.gtol;
    let (sigma0, sigma1, eval) = obj
        .solution_from(&res.x)
        .ok_or(SolverError::DegenerateInterval { t0: f64::NAN, t1: f64::NAN })?;
    let solution = DiscreteSolution1D {
        n_cells,
        sigma0,
        sigma1,
        grid: eval.grid,
        values: eval.values,
        derivs: eval.derivs,
        action: res.value,
        iterations: res.iterations,
        grad_norm_fd,
        converged,
    };
    if !converged {
        return Err(SolverError::NonConvergence1D { solution: Box::new(solution) });
    }
    Ok(solution)
}

/// The admissibility requirement: the initial graph must not be tangent
/// to a (non-degenerate) boundary curve at its endpoint.
fn check_not_tangent(
    problem: &Problem1D,
    obj: &Objective1D,
    z0: &[f64],
) -> Result<(), SolverError> {
    let Some((s0, s1, eval)) = obj.solution_from(z0) else {
        return Err(SolverError::DegenerateInterval { t0: f64::NAN, t1: f64::NAN });
    };
    let n = obj.n_cells();
    for (end, curve, sigma, slope) in [
        (0usize, &problem.gamma0, s0, eval.derivs[0]),
        (1usize, &problem.gamma1, s1, eval.derivs[n]),
    ] {
        if curve.is_point() {
            continue;
        }
        let (dt, dy) = curve
            .tangent(sigma)
            .map_err(|e| SolverError::BadProblem(e.to_string()))?;
        // graph tangent is (1, slope); parallel tangents = tangency
        let cross = dy - slope * dt;
        if cross.abs() < 1e-12 * (1.0 + dy.abs() + (slope * dt).abs()) {
            return Err(SolverError::TangentAtEndpoint(end));
        }
    }
    Ok(())
}

/// Central-difference directional derivative of the discrete action
/// along `(X0, X1, ξ)`; at a converged minimizer this is below the
/// gradient tolerance for every direction.
pub fn first_variation(
    obj: &Objective1D,
    solution: &DiscreteSolution1D,
    xi: &[f64],
    x0_speed: f64,
    x1_speed: f64,
    eps: f64,
) -> Result<f64, SolverError> {
    let n = obj.n_cells();
    if xi.len() != n - 1 {
        return Err(SolverError::BadProblem(format!(
            "expected {} interior variation values, got {}",
            n - 1,
            xi.len()
        )));
    }
    let mut z = Vec::with_capacity(obj.dof_len());
    let mut dir = Vec::with_capacity(obj.dof_len());
    if obj.free0 {
        z.push(solution.sigma0);
        dir.push(x0_speed);
    }
    if obj.free1 {
        z.push(solution.sigma1);
        dir.push(x1_speed);
    }
    z.extend_from_slice(&solution.values[1..n]);
    dir.extend_from_slice(xi);

    let eval_at = |t: f64| -> Option<f64> {
        let moved: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        obj.value(&moved)
    };
    let hi = eval_at(eps).ok_or(SolverError::DegenerateInterval { t0: f64::NAN, t1: f64::NAN })?;
    let lo = eval_at(-eps).ok_or(SolverError::DegenerateInterval { t0: f64::NAN, t1: f64::NAN })?;
    Ok((hi - lo) / (2.0 * eps))
}

/// Residuals of the symbolic optimality system on the discrete solution.
#[derive(Debug, Clone)]
pub struct Residual1DReport {
    /// max |E(L)| over interior nodes, second derivatives by central
    /// differences
    pub el_residual_max: f64,
    /// |transversality| at each endpoint (None when pinned)
    pub transversality_residual: [Option<f64>; 2],
    /// incidence angle between the path and each boundary curve, degrees
    pub incidence_angle_deg: [Option<f64>; 2],
    /// the O(N^-2) + gradient-tolerance scale these should be compared to
    pub expected_scale: f64,
}

pub fn check_residuals_1d(
    problem: &Problem1D,
    solution: &DiscreteSolution1D,
) -> Result<Residual1DReport, SolverError> {
    let l = &problem.lagrangian;
    let space = l.space();
    let el = euler_lagrange(&space, l)?.remove(0);
    let n = solution.n_cells;
    let h = solution.grid[1] - solution.grid[0];
    let mut el_max: f64 = 0.0;
    for k in 1..n {
        let u_xx = (solution.values[k + 1] - 2.0 * solution.values[k] + solution.values[k - 1])
            / (h * h);
        let mut p = JetPoint::new();
        p.set(JetVar::Independent(0), solution.grid[k]);
        p.set(JetVar::dependent_base(0, 1), solution.values[k]);
        p.set(JetVar::dependent(0, MultiIndex::new(vec![1])), solution.derivs[k]);
        p.set(JetVar::dependent(0, MultiIndex::new(vec![2])), u_xx);
        let val = evaluate(&el, &p).map_err(SolverError::from)?;
        el_max = el_max.max(val.abs());
    }

    let mut transversality = [None, None];
    let mut angles = [None, None];
    for (slot, curve, sigma, node) in [
        (0usize, &problem.gamma0, solution.sigma0, 0usize),
        (1usize, &problem.gamma1, solution.sigma1, n),
    ] {
        if curve.is_point() {
            continue;
        }
        let cond = transversality_1d(l, curve, sigma).map_err(|e| SolverError::BadProblem(e.to_string()))?;
        let mut p = JetPoint::new();
        p.set(JetVar::Independent(0), solution.grid[node]);
        p.set(JetVar::dependent_base(0, 1), solution.values[node]);
        p.set(JetVar::dependent(0, MultiIndex::new(vec![1])), solution.derivs[node]);
        transversality[slot] = Some(evaluate(&cond, &p).map_err(SolverError::from)?.abs());

        let (dt, dy) = curve.tangent(sigma).map_err(|e| SolverError::BadProblem(e.to_string()))?;
        let path = (1.0, solution.derivs[node]);
        let dot = dt * path.0 + dy * path.1;
        let cosang = dot / ((dt.hypot(dy)) * (path.0.hypot(path.1)));
        angles[slot] = Some(cosang.clamp(-1.0, 1.0).acos().to_degrees());
    }

    Ok(Residual1DReport {
        el_residual_max: el_max,
        transversality_residual: transversality,
        incidence_angle_deg: angles,
        expected_scale: h * h + solution.grad_norm_fd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{parse_with_order, JetSpace, VarTable};

    fn ty_lagr(src: &str) -> Lagrangian {
        let space = JetSpace::new(1, 1, 1);
        let density = parse_with_order(src, &space, &VarTable::ty(1), 1).unwrap();
        Lagrangian::new(1, 1, 1, density).unwrap()
    }

    fn param(src: &str) -> crate::jet::Expr {
        let space = JetSpace { n: 1, m: 0, cap: 0 };
        crate::jet::parse(src, &space, &VarTable::param("s")).unwrap()
    }

    fn loaded_string_problem() -> Problem1D {
        Problem1D {
            lagrangian: ty_lagr("y_t^2/2 + y"),
            gamma0: BoundaryCurve::point(0.0, 0.0),
            gamma1: BoundaryCurve::new(param("0*s + 1"), param("s")).unwrap(),
            initial: Initial1D { sigma0: 0.0, sigma1: -0.2, profile: Profile1D::Linear },
        }
    }

    #[test]
    fn too_few_cells_is_an_error() {
        let p = loaded_string_problem();
        assert!(matches!(discretize_action(&p, 4), Err(SolverError::TooFewCells(4))));
    }

    #[test]
    fn constant_density_integrates_exactly() {
        // L = L(y): objective equals L(y) * interval length for constant data
        let p = Problem1D {
            lagrangian: ty_lagr("y^2 + 1"),
            gamma0: BoundaryCurve::point(0.0, 2.0),
            gamma1: BoundaryCurve::new(param("0*s + 3"), param("s")).unwrap(),
            initial: Initial1D { sigma0: 0.0, sigma1: 2.0, profile: Profile1D::Linear },
        };
        let obj = discretize_action(&p, 16).unwrap();
        let z = obj.initial_vector(&p.initial).unwrap();
        // constant value 2 on [0, 3]: action = (4+1)*3
        let v = obj.value(&z).unwrap();
        assert!((v - 15.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn straight_line_dirichlet_action() {
        // L = y'^2/2 on a straight line: quadrature is exact, O(N^-2) claim trivial
        let p = Problem1D {
            lagrangian: ty_lagr("y_t^2/2"),
            gamma0: BoundaryCurve::point(0.0, 0.0),
            gamma1: BoundaryCurve::new(param("0*s + 2"), param("s")).unwrap(),
            initial: Initial1D { sigma0: 0.0, sigma1: 3.0, profile: Profile1D::Linear },
        };
        let obj = discretize_action(&p, 32).unwrap();
        let z = obj.initial_vector(&p.initial).unwrap();
        // slope 3/2 over length 2: action = (9/4)/2 * 2 = 9/4
        let v = obj.value(&z).unwrap();
        assert!((v - 2.25).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn analytic_gradient_matches_fd() {
        let p = Problem1D {
            lagrangian: ty_lagr("y_t^2/2 + sin(y)*t + y^2/4"),
            gamma0: BoundaryCurve::new(param("s^2 - 1"), param("s")).unwrap(),
            gamma1: BoundaryCurve::new(param("0*s + 2"), param("s + 1")).unwrap(),
            initial: Initial1D { sigma0: 0.3, sigma1: 0.4, profile: Profile1D::Linear },
        };
        let obj = discretize_action(&p, 12).unwrap();
        let mut z = obj.initial_vector(&p.initial).unwrap();
        // wiggle the profile so nothing is special
        for (k, v) in z.iter_mut().enumerate().skip(2) {
            *v += 0.05 * ((k as f64) * 1.7).sin();
        }
        let analytic = obj.gradient(&z).unwrap();
        let fd = obj.fd_gradient(&z, 1e-6).unwrap();
        for (k, (a, f)) in analytic.iter().zip(&fd).enumerate() {
            assert!(
                (a - f).abs() <= 1e-6 * (1.0 + a.abs()),
                "component {k}: analytic {a} vs fd {f}"
            );
        }
    }

    #[test]
    fn loaded_string_matches_closed_form() {
        // y'' = 1, y(0) = 0, y'(1) = 0  =>  y = t^2/2 - t
        let p = loaded_string_problem();
        let n = 100;
        let sol = minimize_1d(&p, n, &SolverSettings { gtol: 1e-10, ..Default::default() }).unwrap();
        assert!(sol.converged);
        let mut max_err: f64 = 0.0;
        for (t, v) in sol.grid.iter().zip(&sol.values) {
            max_err = max_err.max((v - (t * t / 2.0 - t)).abs());
        }
        assert!(max_err < 5e-3, "max error {max_err}");
        assert!(sol.derivs[n].abs() < 1e-3, "free-end slope {}", sol.derivs[n]);
        let report = check_residuals_1d(&p, &sol).unwrap();
        assert!(report.el_residual_max < 1e-3, "EL residual {}", report.el_residual_max);
        assert!(report.transversality_residual[1].unwrap() < 1e-3);
        assert!(report.transversality_residual[0].is_none());
    }

    #[test]
    fn dirichlet_between_vertical_lines_goes_flat() {
        // free values on both vertical lines: constant function, action 0
        let p = Problem1D {
            lagrangian: ty_lagr("y_t^2/2"),
            gamma0: BoundaryCurve::new(param("0*s"), param("s")).unwrap(),
            gamma1: BoundaryCurve::new(param("0*s + 1"), param("s")).unwrap(),
            initial: Initial1D { sigma0: 0.4, sigma1: -0.3, profile: Profile1D::Linear },
        };
        let sol = minimize_1d(&p, 24, &SolverSettings::default()).unwrap();
        assert!(sol.action.abs() < 1e-10, "action {}", sol.action);
        let spread = sol.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - sol.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-5, "spread {spread}");
    }

    #[test]
    fn first_variation_null_direction_is_zero() {
        let p = loaded_string_problem();
        let obj = discretize_action(&p, 16).unwrap();
        let sol = minimize_1d(&p, 16, &SolverSettings::default()).unwrap();
        let xi = vec![0.0; 15];
        let v = first_variation(&obj, &sol, &xi, 0.0, 0.0, 1e-4).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn first_variation_small_at_minimizer_negative_along_gradient_elsewhere() {
        let p = loaded_string_problem();
        let n = 64;
        let obj = discretize_action(&p, n).unwrap();
        let sol = minimize_1d(&p, n, &SolverSettings { gtol: 1e-10, ..Default::default() }).unwrap();
        // random directions at the minimizer
        let mut rng_state = 0x1234_5678u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..5 {
            let xi: Vec<f64> = (0..n - 1).map(|_| next()).collect();
            let v = first_variation(&obj, &sol, &xi, 0.0, next(), 1e-4).unwrap();
            assert!(v.abs() < 1e-5, "first variation {v}");
        }
        // at a non-critical point, minus the gradient is a descent direction
        let mut z = obj.initial_vector(&p.initial).unwrap();
        for v in z.iter_mut() {
            *v += 0.1;
        }
        let grad = obj.gradient(&z).unwrap();
        let fake_sol = {
            let (s0, s1, eval) = obj.solution_from(&z).unwrap();
            DiscreteSolution1D {
                n_cells: n,
                sigma0: s0,
                sigma1: s1,
                grid: eval.grid,
                values: eval.values,
                derivs: eval.derivs,
                action: obj.value(&z).unwrap(),
                iterations: 0,
                grad_norm_fd: f64::NAN,
                converged: false,
            }
        };
        let x1 = if obj.free1 { -grad[0] } else { 0.0 };
        let xi: Vec<f64> = grad[1..].iter().map(|g| -g).collect();
        let v = first_variation(&obj, &fake_sol, &xi, 0.0, x1, 1e-6).unwrap();
        assert!(v < 0.0, "descent direction should be strictly negative, got {v}");
    }

    #[test]
    fn tangent_initial_graph_is_rejected() {
        // boundary curve is horizontal; a flat initial graph is tangent
        let p = Problem1D {
            lagrangian: ty_lagr("y_t^2/2"),
            gamma0: BoundaryCurve::point(0.0, 1.0),
            gamma1: BoundaryCurve::new(param("s"), param("0*s + 1")).unwrap(),
            initial: Initial1D { sigma0: 0.0, sigma1: 1.0, profile: Profile1D::Linear },
        };
        assert!(matches!(
            minimize_1d(&p, 16, &SolverSettings::default()),
            Err(SolverError::TangentAtEndpoint(1))
        ));
    }
}

//! Structural invariants of the discretized solvers.

use varfree::contact::{transversality_1d, BoundaryCurve};
use varfree::jet::{evaluate, parse_with_order, JetPoint, JetSpace, JetVar, MultiIndex, VarTable};
use varfree::solver::{
    check_film_orthogonality, check_residuals_1d, discretize_action, first_variation, minimize_1d,
    relax_film, FilmMesh, FilmSettings, Initial1D, Problem1D, Profile1D, SolverSettings, Wall,
};
use varfree::variational::Lagrangian;

fn ty_lagr(src: &str) -> Lagrangian {
    let space = JetSpace::new(1, 1, 1);
    let density = parse_with_order(src, &space, &VarTable::ty(1), 1).unwrap();
    Lagrangian::new(1, 1, 1, density).unwrap()
}

fn pexpr(src: &str) -> varfree::jet::Expr {
    let space = JetSpace { n: 1, m: 0, cap: 0 };
    varfree::jet::parse(src, &space, &VarTable::param("s")).unwrap()
}

fn generic_problem() -> Problem1D {
    Problem1D {
        lagrangian: ty_lagr("y_t^2/2 + sin(y) + t*y"),
        gamma0: BoundaryCurve::point(0.0, 0.0),
        gamma1: BoundaryCurve::new(pexpr("0*s + 1"), pexpr("s")).unwrap(),
        initial: Initial1D { sigma0: 0.0, sigma1: -0.2, profile: Profile1D::Linear },
    }
}

/// The endpoint derivative of the discrete action along a vertical
/// boundary curve converges to the transversality form as the grid is
/// refined, even away from critical points (grid stretching is absent,
/// so the §2 endpoint term is isolated).
#[test]
fn endpoint_gradient_matches_transversality_on_vertical_curves() {
    let problem = Problem1D {
        lagrangian: ty_lagr("y_t^2/2 + sin(y)*t"),
        gamma0: BoundaryCurve::point(0.0, 0.3),
        gamma1: BoundaryCurve::new(pexpr("0*s + 1"), pexpr("2*s")).unwrap(),
        initial: Initial1D { sigma0: 0.0, sigma1: 0.25, profile: Profile1D::Linear },
    };
    let mut errs = Vec::new();
    for n in [64usize, 128] {
        // a fixed non-critical profile
        let profile = |t: f64| 0.3 + 0.2 * t * t - 0.1 * (3.0 * t).sin();
        let initial = Initial1D {
            sigma0: 0.0,
            sigma1: profile(1.0) / 2.0,
            profile: Profile1D::Values((1..n).map(|j| profile(j as f64 / n as f64)).collect()),
        };
        let obj = discretize_action(&problem, n).unwrap();
        let z = obj.initial_vector(&initial).unwrap();
        let fd = obj.fd_gradient(&z, 1e-6).unwrap();
        // dof layout: only sigma1 is free, then interior values
        let d_sigma1 = fd[0];
        // transversality form at the right endpoint jet
        let (_, _, eval) = obj.solution_from(&z).unwrap();
        let cond = transversality_1d(&problem.lagrangian, &problem.gamma1, initial.sigma1).unwrap();
        let mut p = JetPoint::new();
        p.set(JetVar::Independent(0), eval.grid[n]);
        p.set(JetVar::dependent_base(0, 1), eval.values[n]);
        p.set(JetVar::dependent(0, MultiIndex::new(vec![1])), eval.derivs[n]);
        let t_val = evaluate(&cond, &p).unwrap();
        errs.push((d_sigma1 - t_val).abs());
    }
    // second-order convergence of the endpoint identity
    assert!(errs[0] < 2e-3, "coarse error {}", errs[0]);
    let ratio = errs[0] / errs[1];
    assert!(
        (2.5..6.5).contains(&ratio),
        "expected ~4x improvement, got {ratio} ({errs:?})"
    );
}

/// At a converged minimizer the endpoint gradient and the transversality
/// residual vanish together (the ± identity at criticality).
#[test]
fn endpoint_gradient_and_transversality_vanish_together() {
    let problem = generic_problem();
    let n = 128;
    let sol = minimize_1d(&problem, n, &SolverSettings { gtol: 1e-10, ..Default::default() }).unwrap();
    let report = check_residuals_1d(&problem, &sol).unwrap();
    let t_res = report.transversality_residual[1].unwrap();
    let h = sol.grid[1] - sol.grid[0];
    assert!(
        t_res <= 10.0 * (h * h + sol.grad_norm_fd),
        "transversality {t_res} vs scale {}",
        h * h + sol.grad_norm_fd
    );
}

/// Transversality and EL residuals decrease at ~N^-2 between N and 2N.
#[test]
fn residuals_refine_at_second_order() {
    let problem = generic_problem();
    let mut t_res = Vec::new();
    let mut el_res = Vec::new();
    for n in [64usize, 128] {
        let sol = minimize_1d(&problem, n, &SolverSettings { gtol: 1e-10, ..Default::default() })
            .unwrap();
        let report = check_residuals_1d(&problem, &sol).unwrap();
        t_res.push(report.transversality_residual[1].unwrap());
        el_res.push(report.el_residual_max);
    }
    for (name, errs) in [("transversality", &t_res), ("EL", &el_res)] {
        let ratio = errs[0] / errs[1];
        assert!(
            (2.5..6.5).contains(&ratio),
            "{name}: expected ~4x, got {ratio} ({errs:?})"
        );
    }
}

/// Criticality: the first variation along random directions at a
/// reported solution stays within 10 * gtol * scale.
#[test]
fn first_variation_vanishes_at_solutions() {
    let problem = generic_problem();
    let n = 64;
    let gtol = 1e-9;
    let obj = discretize_action(&problem, n).unwrap();
    let sol = minimize_1d(&problem, n, &SolverSettings { gtol, ..Default::default() }).unwrap();
    let mut state = 0x5eed_1234u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    for _ in 0..20 {
        let xi: Vec<f64> = (0..n - 1).map(|_| next()).collect();
        let x1 = next();
        // direction scale ~ sqrt(dim)
        let scale = (n as f64).sqrt();
        let v = first_variation(&obj, &sol, &xi, 0.0, x1, 1e-5).unwrap();
        assert!(
            v.abs() <= 10.0 * gtol * scale + 1e-10,
            "first variation {v} exceeds 10*gtol*scale"
        );
    }
}

/// Film area is monotone over accepted steps, and the wall residual
/// stays within tolerance at every rim node of the result.
#[test]
fn film_area_is_monotone_and_rim_stays_on_wall() {
    let mesh = FilmMesh::disk(16, 20, Wall::cylinder(1.0), |t1, t2| 0.2 * t1 - 0.1 * t2).unwrap();
    let relaxed = relax_film(&mesh, &FilmSettings::default()).unwrap();
    assert!(relaxed.converged);
    for w in relaxed.area_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "area increased: {} -> {}", w[0], w[1]);
    }
    for &b in &relaxed.mesh.boundary_indices() {
        let p = relaxed.mesh.position(b);
        assert!(relaxed.mesh.wall.phi(p).abs() <= 1e-8);
    }
}

/// Film refinement: wall-incidence deviation decreases with the mesh.
#[test]
fn film_orthogonality_improves_with_refinement() {
    let space = JetSpace::new(2, 1, 1);
    let phi = parse_with_order("(t1 - 0.2*y)^2 + t2^2 - 1", &space, &VarTable::ty(2), 0).unwrap();
    let mut devs = Vec::new();
    for m in [16usize, 32] {
        let wall = Wall::level_set(phi.clone()).unwrap();
        let mesh = FilmMesh::disk(m, m, wall, |_, _| 0.0).unwrap();
        let relaxed =
            relax_film(&mesh, &FilmSettings { area_tol: 1e-12, ..Default::default() }).unwrap();
        let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
        devs.push(ortho.max_angle_deviation_deg);
    }
    assert!(
        devs[1] <= devs[0] + 1e-6,
        "deviation did not improve: {devs:?}"
    );
}

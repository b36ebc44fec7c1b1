use varfree::contact::BoundaryCurve;
use varfree::jet::{parse, parse_with_order, JetSpace, VarTable};
use varfree::solver::*;
use varfree::variational::Lagrangian;

fn ty_lagr(src: &str) -> Lagrangian {
    let space = JetSpace::new(1, 1, 1);
    let density = parse_with_order(src, &space, &VarTable::ty(1), 1).unwrap();
    Lagrangian::new(1, 1, 1, density).unwrap()
}

fn pexpr(src: &str) -> varfree::jet::Expr {
    let space = JetSpace { n: 1, m: 0, cap: 0 };
    parse(src, &space, &VarTable::param("s")).unwrap()
}

fn main() {
    // generic smooth problem: residual rates should be ~N^-2
    let p = Problem1D {
        lagrangian: ty_lagr("y_t^2/2 + sin(y) + t*y"),
        gamma0: BoundaryCurve::point(0.0, 0.0),
        gamma1: BoundaryCurve::new(pexpr("0*s + 1"), pexpr("s")).unwrap(),
        initial: Initial1D { sigma0: 0.0, sigma1: -0.2, profile: Profile1D::Linear },
    };
    println!("generic loaded problem:");
    for n in [50, 100, 200] {
        let t = std::time::Instant::now();
        let sol = minimize_1d(&p, n, &SolverSettings { gtol: 1e-10, ..Default::default() }).unwrap();
        let rep = check_residuals_1d(&p, &sol).unwrap();
        println!(
            "  N={n:4} transv={:.3e} el={:.3e} iters={} {:?}",
            rep.transversality_residual[1].unwrap(),
            rep.el_residual_max,
            sol.iterations,
            t.elapsed()
        );
    }

    // circle-to-circle geodesic
    let p = Problem1D {
        lagrangian: ty_lagr("sqrt(1 + y_t^2)"),
        gamma0: BoundaryCurve::new(pexpr("cos(s)"), pexpr("sin(s)")).unwrap(),
        gamma1: BoundaryCurve::new(pexpr("4 + cos(s)"), pexpr("sin(s)")).unwrap(),
        initial: Initial1D {
            sigma0: 0.4,
            sigma1: std::f64::consts::PI - 0.4,
            profile: Profile1D::Linear,
        },
    };
    println!("circle-to-circle:");
    for n in [100, 200] {
        let t = std::time::Instant::now();
        match minimize_1d(&p, n, &SolverSettings { gtol: 1e-9, ..Default::default() }) {
            Ok(sol) => {
                let rep = check_residuals_1d(&p, &sol).unwrap();
                println!(
                    "  N={n:4} len={:.8} angles=({:.4},{:.4}) iters={} {:?}",
                    sol.action,
                    rep.incidence_angle_deg[0].unwrap(),
                    rep.incidence_angle_deg[1].unwrap(),
                    sol.iterations,
                    t.elapsed()
                );
            }
            Err(e) => println!("  N={n:4} FAILED: {e}"),
        }
    }
}

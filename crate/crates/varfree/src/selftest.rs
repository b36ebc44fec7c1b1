//! Built-in invariant suite behind `varfree selftest`.
//!
//! Each check is a deterministic randomized test of one structural
//! property of the engine: derivation rules, operator identities,
//! transformation lifts. The CLI prints one line per check and exits
//! nonzero if any fails.

use crate::contact::{
    generalized_transversality, lift_first_order, transversality_1d, BoundaryCurve,
    PointTransformation,
};
use crate::jet::sample::{central_difference, random_expr, random_point, rng_from_seed, ExprGenConfig};
use crate::jet::{
    diff_partial, equivalent, evaluate, restrict_to_boundary, simplify, total_derivative,
    EquivOptions, Expr, JetPoint, JetSpace, JetVar, MultiIndex,
};
use crate::variational::{
    euler_lagrange, natural_boundary_conditions, normal_coboundary, relative_euler,
    tangential_coboundary, Lagrangian, TotalDiffOperator,
};
use rand::Rng;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, body: impl FnOnce() -> Result<String, String>) -> CheckResult {
    match body() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn opts(tol: f64) -> EquivOptions {
    EquivOptions { tol, ..Default::default() }
}

/// Runs the whole suite with the given seed and equivalence tolerance.
pub fn run(seed: u64, tol: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();

    out.push(check("total-derivative-commutation", || {
        let space = JetSpace::new(2, 1, 2).with_cap(6);
        let mut rng = rng_from_seed(seed ^ 0x01);
        let config = ExprGenConfig { order: 2, max_depth: 3, transcendental: true };
        for k in 0..6 {
            let e = random_expr(&space, &config, &mut rng);
            let dxy = total_derivative(&space, &total_derivative(&space, &e, 0).map_err(|e| e.to_string())?, 1)
                .map_err(|e| e.to_string())?;
            let dyx = total_derivative(&space, &total_derivative(&space, &e, 1).map_err(|e| e.to_string())?, 0)
                .map_err(|e| e.to_string())?;
            if !equivalent(&dxy, &dyx, &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("sample {k}: D_x D_y != D_y D_x"));
            }
        }
        Ok("6 random expressions, n = 2".into())
    }));

    out.push(check("leibniz-rule", || {
        let space = JetSpace::new(1, 1, 1).with_cap(4);
        let mut rng = rng_from_seed(seed ^ 0x02);
        let config = ExprGenConfig { order: 1, max_depth: 3, transcendental: true };
        for k in 0..6 {
            let a = random_expr(&space, &config, &mut rng);
            let b = random_expr(&space, &config, &mut rng);
            let lhs = total_derivative(&space, &Expr::mul2(a.clone(), b.clone()), 0)
                .map_err(|e| e.to_string())?;
            let rhs = Expr::add2(
                Expr::mul2(total_derivative(&space, &a, 0).map_err(|e| e.to_string())?, b.clone()),
                Expr::mul2(a.clone(), total_derivative(&space, &b, 0).map_err(|e| e.to_string())?),
            );
            if !equivalent(&lhs, &rhs, &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("sample {k}: Leibniz violated"));
            }
        }
        Ok("6 random products".into())
    }));

    out.push(check("partial-derivative-vs-finite-differences", || {
        let space = JetSpace::new(2, 1, 1);
        let mut rng = rng_from_seed(seed ^ 0x03);
        let config = ExprGenConfig::default();
        let mut tested = 0;
        while tested < 100 {
            let e = random_expr(&space, &config, &mut rng);
            let vars: Vec<JetVar> = e.vars().into_iter().collect();
            if vars.is_empty() {
                continue;
            }
            let v = vars[rng.random_range(0..vars.len())].clone();
            let p = random_point(&space, 1, &mut rng, -2.0, 2.0);
            let symbolic = diff_partial(&e, &v);
            let (Ok(s), Ok(f)) = (evaluate(&symbolic, &p), central_difference(&e, &v, &p, 1e-5))
            else {
                continue;
            };
            if (s - f).abs() > 1e-6 * (1.0 + s.abs()) {
                return Err(format!("point {tested}: symbolic {s} vs fd {f}"));
            }
            tested += 1;
        }
        Ok("100 random points, step 1e-5, rel tol 1e-6".into())
    }));

    out.push(check("simplify-preserves-value-and-is-idempotent", || {
        let space = JetSpace::new(2, 1, 2).with_cap(4);
        let mut rng = rng_from_seed(seed ^ 0x04);
        let config = ExprGenConfig { order: 2, max_depth: 4, transcendental: true };
        for k in 0..10 {
            let e = random_expr(&space, &config, &mut rng);
            let s1 = simplify(&e);
            if !equivalent(&e, &s1, &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("sample {k}: simplify changed the value"));
            }
            if simplify(&s1) != s1 {
                return Err(format!("sample {k}: simplify not idempotent"));
            }
        }
        Ok("10 random expressions".into())
    }));

    out.push(check("restriction-commutes-with-tangential-derivatives", || {
        let space = JetSpace::new(3, 1, 1).with_cap(4);
        let mut rng = rng_from_seed(seed ^ 0x05);
        let config = ExprGenConfig { order: 1, max_depth: 3, transcendental: true };
        for k in 0..6 {
            let e = random_expr(&space, &config, &mut rng);
            for axis in 0..2 {
                let a = restrict_to_boundary(&space, &total_derivative(&space, &e, axis).map_err(|e| e.to_string())?);
                let b = total_derivative(&space, &restrict_to_boundary(&space, &e), axis)
                    .map_err(|e| e.to_string())?;
                if !equivalent(&a, &b, &opts(tol)).map_err(|e| e.to_string())? {
                    return Err(format!("sample {k}, axis {axis}"));
                }
            }
        }
        Ok("6 random expressions, n = 3, axes 1..2".into())
    }));

    out.push(check("euler-operator-annihilates-divergences", || {
        let mut rng = rng_from_seed(seed ^ 0x06);
        for k in 0..5 {
            let n = 1 + (k % 2);
            let space = JetSpace::new(n, 1, 2).with_cap(4);
            let config = ExprGenConfig { order: 1, max_depth: 3, transcendental: true };
            let f = random_expr(&space, &config, &mut rng);
            let axis = k % n;
            let div = total_derivative(&space, &f, axis).map_err(|e| e.to_string())?;
            let lagr = Lagrangian::new(n, 1, 2, div).map_err(|e| e.to_string())?;
            let el = euler_lagrange(&space, &lagr).map_err(|e| e.to_string())?;
            if !equivalent(&el[0], &Expr::zero(), &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("sample {k}: E(D f) != 0"));
            }
        }
        Ok("5 random densities".into())
    }));

    out.push(check("boundary-operator-cross-check", || {
        let mut rng = rng_from_seed(seed ^ 0x07);
        for k in 0..4 {
            let (n, r) = [(1usize, 2u32), (2, 1), (2, 2), (3, 1)][k];
            let space = JetSpace::new(n, 1, r).with_cap(2 * r + 1);
            let config = ExprGenConfig { order: r, max_depth: 2, transcendental: false };
            let density = random_expr(&space, &config, &mut rng);
            let Ok(lagr) = Lagrangian::new(n, 1, r, density) else { continue };
            let nbc = natural_boundary_conditions(&space, &lagr).map_err(|e| e.to_string())?;
            let op = TotalDiffOperator::from_lagrangian(&lagr);
            let rel = relative_euler(&space, &op).map_err(|e| e.to_string())?;
            let el = euler_lagrange(&space, &lagr).map_err(|e| e.to_string())?;
            if !equivalent(&el[0], &rel.interior[0], &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("case {k}: interior mismatch"));
            }
            for (key, cond) in &nbc {
                let other = rel.boundary.get(key).cloned().unwrap_or_else(Expr::zero);
                if !equivalent(cond, &other, &opts(tol)).map_err(|e| e.to_string())? {
                    return Err(format!("case {k}: boundary mismatch at {key:?}"));
                }
            }
        }
        Ok("4 random Lagrangians, r <= 2, n <= 3".into())
    }));

    out.push(check("classical-free-end-forms", || {
        let mut rng = rng_from_seed(seed ^ 0x08);
        // r = 1: condition is the restricted normal momentum
        let space = JetSpace::new(2, 1, 1);
        let config = ExprGenConfig { order: 1, max_depth: 3, transcendental: true };
        for k in 0..3 {
            let density = random_expr(&space, &config, &mut rng);
            let Ok(lagr) = Lagrangian::new(2, 1, 1, density) else { continue };
            let nbc = natural_boundary_conditions(&space, &lagr).map_err(|e| e.to_string())?;
            let direct = simplify(&restrict_to_boundary(
                &space,
                &diff_partial(lagr.density(), &JetVar::Dependent { dep: 0, index: MultiIndex::new(vec![0, 1]) }),
            ));
            if nbc[&(0, 0)] != direct {
                return Err(format!("r=1 sample {k}: not the restricted momentum"));
            }
        }
        // r = 2, n = 1: the two classical conditions
        let space = JetSpace::new(1, 1, 2);
        let config = ExprGenConfig { order: 2, max_depth: 2, transcendental: false };
        for k in 0..3 {
            let density = random_expr(&space, &config, &mut rng);
            let Ok(lagr) = Lagrangian::new(1, 1, 2, density) else { continue };
            let nbc = natural_boundary_conditions(&space, &lagr).map_err(|e| e.to_string())?;
            let ux = JetVar::Dependent { dep: 0, index: MultiIndex::new(vec![1]) };
            let uxx = JetVar::Dependent { dep: 0, index: MultiIndex::new(vec![2]) };
            let alpha1 = simplify(&restrict_to_boundary(&space, &diff_partial(lagr.density(), &uxx)));
            let alpha0 = simplify(&restrict_to_boundary(
                &space,
                &Expr::sub(
                    diff_partial(lagr.density(), &ux),
                    total_derivative(&space, &diff_partial(lagr.density(), &uxx), 0)
                        .map_err(|e| e.to_string())?,
                ),
            ));
            if nbc[&(0, 1)] != alpha1 || nbc[&(0, 0)] != alpha0 {
                return Err(format!("r=2 sample {k}: classical forms mismatch"));
            }
        }
        Ok("6 random densities, exact symbolic match".into())
    }));

    out.push(check("area-momentum-vector-is-unit", || {
        for n in [1usize, 2, 3] {
            let space = JetSpace::new(n, 1, 1);
            let mut terms = vec![Expr::one()];
            for i in 0..n {
                terms.push(Expr::pow_int(Expr::dependent(0, MultiIndex::unit(n, i)), 2));
            }
            let density = Expr::sqrt(Expr::add(terms));
            let lagr = Lagrangian::new(n, 1, 1, density).map_err(|e| e.to_string())?;
            let h = generalized_transversality(&lagr).map_err(|e| e.to_string())?;
            let norm2 = Expr::add(h.iter().map(|c| Expr::pow_int(c.clone(), 2)).collect());
            if !equivalent(&norm2, &Expr::one(), &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("n = {n}: |H| != 1"));
            }
            let _ = space;
        }
        Ok("n = 1, 2, 3".into())
    }));

    out.push(check("contact-lift-maps-graphs-to-graphs", || {
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let x = Expr::independent(0);
        let u = Expr::var(JetVar::dependent_base(0, 1));
        let shear = PointTransformation::with_inverse(
            1,
            vec![Expr::sub(t.clone(), Expr::mul2(Expr::rational(3, 10), y.clone())), y.clone()],
            vec![Expr::add2(x.clone(), Expr::mul2(Expr::rational(3, 10), u.clone())), u.clone()],
        )
        .map_err(|e| e.to_string())?;
        let lift = lift_first_order(&shear).map_err(|e| e.to_string())?;
        let curve = |t: f64| 0.3 * (1.7 * t).sin() - 0.1 * t;
        let slope = |t: f64| 0.3 * 1.7 * (1.7 * t).cos() - 0.1;
        for k in 0..15 {
            let t0 = -1.0 + 0.14 * k as f64;
            let h = 1e-5;
            let img = |tt: f64| shear.apply(&[tt, curve(tt)]).map_err(|e| e.to_string());
            let (pp, pm) = (img(t0 + h)?, img(t0 - h)?);
            let numeric = (pp[1] - pm[1]) / (pp[0] - pm[0]);
            let mut jet = JetPoint::new();
            jet.set(JetVar::Independent(0), t0);
            jet.set(JetVar::dependent_base(0, 1), curve(t0));
            jet.set(JetVar::dependent(0, MultiIndex::new(vec![1])), slope(t0));
            let lifted = evaluate(&lift[0], &jet).map_err(|e| e.to_string())?;
            if (numeric - lifted).abs() > 1e-6 * (1.0 + lifted.abs()) {
                return Err(format!("t0 {t0}: slope {numeric} vs lift {lifted}"));
            }
        }
        Ok("15 points on a prolonged graph under a shear".into())
    }));

    out.push(check("spencer-coboundaries-are-annihilated", || {
        let space = JetSpace::new(2, 1, 2).with_cap(6);
        let mut rng = rng_from_seed(seed ^ 0x0b);
        let config = ExprGenConfig { order: 1, max_depth: 2, transcendental: false };
        let mut op = TotalDiffOperator::new(2, 1);
        op.set(0, MultiIndex::new(vec![1, 0]), random_expr(&space, &config, &mut rng));
        op.set(0, MultiIndex::zeros(2), random_expr(&space, &config, &mut rng));
        for (name, cob) in [
            ("tangential", tangential_coboundary(&space, 0, &op).map_err(|e| e.to_string())?),
            ("normal", normal_coboundary(&space, &op).map_err(|e| e.to_string())?),
        ] {
            let res = relative_euler(&space, &cob).map_err(|e| e.to_string())?;
            if !equivalent(&res.interior[0], &Expr::zero(), &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("{name}: interior not annihilated"));
            }
            for (key, b) in &res.boundary {
                if !equivalent(b, &Expr::zero(), &opts(tol)).map_err(|e| e.to_string())? {
                    return Err(format!("{name}: boundary {key:?} not annihilated"));
                }
            }
        }
        Ok("tangential and normal coboundaries".into())
    }));

    out.push(check("transversality-vs-momentum-contraction", || {
        // ν ∝ (y', -t') of the curve tangent against H reproduces the 1D form
        let space = JetSpace::new(1, 1, 1);
        let mut rng = rng_from_seed(seed ^ 0x0c);
        let config = ExprGenConfig { order: 1, max_depth: 3, transcendental: true };
        let pspace = JetSpace { n: 1, m: 0, cap: 0 };
        let s_var = Expr::independent(0);
        let gamma = BoundaryCurve::new(
            Expr::add2(Expr::pow_int(s_var.clone(), 2), s_var.clone()),
            Expr::sub(s_var.clone(), Expr::one()),
        )
        .map_err(|e| e.to_string())?;
        let _ = pspace;
        for k in 0..4 {
            let density = random_expr(&space, &config, &mut rng);
            let Ok(lagr) = Lagrangian::new(1, 1, 1, density) else { continue };
            let sigma0 = 0.3 + 0.2 * k as f64;
            let (dt, dy) = gamma.tangent(sigma0).map_err(|e| e.to_string())?;
            let h = generalized_transversality(&lagr).map_err(|e| e.to_string())?;
            let nu_dot_h = Expr::add2(
                Expr::mul2(Expr::float(dy), h[0].clone()),
                Expr::mul2(Expr::float(-dt), h[1].clone()),
            );
            let direct = transversality_1d(&lagr, &gamma, sigma0).map_err(|e| e.to_string())?;
            if !equivalent(&nu_dot_h, &direct, &opts(tol)).map_err(|e| e.to_string())? {
                return Err(format!("sample {k}: contraction mismatch"));
            }
        }
        Ok("4 random densities on a parabola boundary".into())
    }));

    out.push(check("sign-convention-negative-control", || {
        // flipping the boundary operator's sign must break the cross-check
        let space = JetSpace::new(2, 1, 1);
        let density = Expr::add2(
            Expr::mul2(
                Expr::rational(1, 2),
                Expr::pow_int(Expr::dependent(0, MultiIndex::new(vec![0, 1])), 2),
            ),
            Expr::var(JetVar::dependent_base(0, 2)),
        );
        let lagr = Lagrangian::new(2, 1, 1, density).map_err(|e| e.to_string())?;
        let nbc = natural_boundary_conditions(&space, &lagr).map_err(|e| e.to_string())?;
        let flipped = Expr::neg(nbc[&(0, 0)].clone());
        let op = TotalDiffOperator::from_lagrangian(&lagr);
        let rel = relative_euler(&space, &op).map_err(|e| e.to_string())?;
        if equivalent(&flipped, &rel.boundary[&(0, 0)], &opts(tol)).map_err(|e| e.to_string())? {
            return Err("sign flip went undetected".into());
        }
        Ok("flipped E^∂ is detected".into())
    }));

    out
}

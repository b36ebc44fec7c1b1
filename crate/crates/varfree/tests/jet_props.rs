//! Property tests for the jet expression engine.

use proptest::prelude::*;
use varfree::jet::{
    diff_partial, equivalent_default, parse, print_with, sample, simplify, total_derivative,
    Expr, JetSpace, JetVar, MultiIndex, VarTable,
};

/// proptest strategy: a random smooth expression via the crate's own
/// generator, keyed by a seed so shrinking stays meaningful.
fn expr_strategy(n: usize, order: u32) -> impl Strategy<Value = Expr> {
    any::<u64>().prop_map(move |seed| {
        let space = JetSpace::new(n, 1, order.max(1));
        let config = sample::ExprGenConfig { order, max_depth: 3, transcendental: true };
        sample::random_expr(&space, &config, &mut sample::rng_from_seed(seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn total_derivatives_commute(e in expr_strategy(2, 1)) {
        let space = JetSpace::new(2, 1, 1).with_cap(4);
        let dxy = total_derivative(&space, &total_derivative(&space, &e, 0).unwrap(), 1).unwrap();
        let dyx = total_derivative(&space, &total_derivative(&space, &e, 1).unwrap(), 0).unwrap();
        prop_assert!(equivalent_default(&dxy, &dyx).unwrap());
    }

    #[test]
    fn leibniz_rule(a in expr_strategy(1, 1), b in expr_strategy(1, 1)) {
        let space = JetSpace::new(1, 1, 1).with_cap(4);
        let lhs = total_derivative(&space, &Expr::mul2(a.clone(), b.clone()), 0).unwrap();
        let rhs = Expr::add2(
            Expr::mul2(total_derivative(&space, &a, 0).unwrap(), b.clone()),
            Expr::mul2(a.clone(), total_derivative(&space, &b, 0).unwrap()),
        );
        prop_assert!(equivalent_default(&lhs, &rhs).unwrap());
    }

    #[test]
    fn simplify_is_sound_and_idempotent(e in expr_strategy(2, 2)) {
        let s1 = simplify(&e);
        prop_assert!(equivalent_default(&e, &s1).unwrap(), "value changed");
        prop_assert_eq!(simplify(&s1), s1, "not idempotent");
    }

    #[test]
    fn printed_expressions_reparse_identically(e in expr_strategy(2, 1)) {
        let space = JetSpace::new(2, 1, 1);
        let table = VarTable::xu(2, 1);
        // the printer canonicalizes through simplify's normal form
        let s = simplify(&e);
        let printed = print_with(&s, &table);
        let reparsed = parse(&printed, &space, &table)
            .unwrap_or_else(|err| panic!("`{printed}` does not reparse: {err}"));
        prop_assert_eq!(reparsed, s, "printed form changed the tree: `{}`", printed);
    }

    #[test]
    fn restriction_commutes_with_tangential_derivatives(e in expr_strategy(2, 1)) {
        let space = JetSpace::new(2, 1, 1).with_cap(3);
        let a = varfree::jet::restrict_to_boundary(&space, &total_derivative(&space, &e, 0).unwrap());
        let b = total_derivative(&space, &varfree::jet::restrict_to_boundary(&space, &e), 0).unwrap();
        prop_assert!(equivalent_default(&a, &b).unwrap());
    }
}

#[test]
fn diff_partial_matches_finite_differences() {
    // chain-rule consistency against central differences: rel <= 1e-6
    // with step 1e-5 at 100 random points
    let space = JetSpace::new(2, 1, 1);
    let config = sample::ExprGenConfig::default();
    let mut rng = sample::rng_from_seed(0x00d1_ff00);
    let mut tested = 0;
    while tested < 100 {
        let e = sample::random_expr(&space, &config, &mut rng);
        let vars: Vec<JetVar> = e.vars().into_iter().collect();
        if vars.is_empty() {
            continue;
        }
        let v = vars[tested % vars.len()].clone();
        let p = sample::random_point(&space, 1, &mut rng, -2.0, 2.0);
        let symbolic = diff_partial(&e, &v);
        let (Ok(s), Ok(f)) = (
            varfree::jet::evaluate(&symbolic, &p),
            sample::central_difference(&e, &v, &p, 1e-5),
        ) else {
            continue;
        };
        assert!(
            (s - f).abs() <= 1e-6 * (1.0 + s.abs()),
            "symbolic {s} vs finite difference {f}"
        );
        tested += 1;
    }
}

#[test]
fn order_cap_must_be_raised_explicitly() {
    // D_x may not push past the cap silently
    let space = JetSpace::new(1, 1, 1); // cap 2
    let u_xx = Expr::dependent(0, MultiIndex::new(vec![2]));
    assert!(total_derivative(&space, &u_xx, 0).is_err());
    let raised = space.with_cap(3);
    assert!(total_derivative(&raised, &u_xx, 0).is_ok());
}

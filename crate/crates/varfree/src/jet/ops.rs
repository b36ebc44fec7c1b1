//! Fiberwise partial derivatives, total derivatives and boundary
//! restriction.

use super::expr::{Expr, Node, UnaryFn};
use super::{JetError, JetSpace, JetVar, MultiIndex};
use num_rational::Rational64;
use std::collections::BTreeMap;

/// Partial derivative `∂e/∂v`, treating every jet coordinate as an
/// independent fiber coordinate.
pub fn diff_partial(e: &Expr, v: &JetVar) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(w) => {
            if w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(terms) => Expr::add(terms.iter().map(|t| diff_partial(t, v)).collect()),
        Node::Product(factors) => {
            let mut terms = Vec::new();
            for (k, f) in factors.iter().enumerate() {
                let df = diff_partial(f, v);
                if df.is_zero() {
                    continue;
                }
                let mut rest: Vec<Expr> = factors.clone();
                rest[k] = df;
                terms.push(Expr::mul(rest));
            }
            Expr::add(terms)
        }
        Node::Power(base, q) => {
            let db = diff_partial(base, v);
            if db.is_zero() {
                return Expr::zero();
            }
            let coeff = Expr::rational(*q.numer(), *q.denom());
            let lower = Expr::pow(base.clone(), q - Rational64::from_integer(1));
            Expr::mul(vec![coeff, lower, db])
        }
        Node::Neg(inner) => Expr::neg(diff_partial(inner, v)),
        Node::Quotient(num, den) => {
            let dn = diff_partial(num, v);
            let dd = diff_partial(den, v);
            if dd.is_zero() {
                return Expr::div(dn, den.clone());
            }
            // (n/d)' = (n'd - n d')/d^2
            let numerator = Expr::sub(
                Expr::mul2(dn, den.clone()),
                Expr::mul2(num.clone(), dd),
            );
            Expr::div(numerator, Expr::pow_int(den.clone(), 2))
        }
        Node::Unary(f, arg) => {
            let da = diff_partial(arg, v);
            if da.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                UnaryFn::Sqrt => Expr::div(
                    Expr::one(),
                    Expr::mul2(Expr::int(2), Expr::sqrt(arg.clone())),
                ),
                UnaryFn::Sin => Expr::unary(UnaryFn::Cos, arg.clone()),
                UnaryFn::Cos => Expr::neg(Expr::unary(UnaryFn::Sin, arg.clone())),
                UnaryFn::Exp => Expr::unary(UnaryFn::Exp, arg.clone()),
                UnaryFn::Ln => Expr::div(Expr::one(), arg.clone()),
            };
            Expr::mul2(outer, da)
        }
    }
}

/// Total derivative `D_i(e) = ∂e/∂x^i + Σ u^j_{I+1_i} ∂e/∂u^j_I`.
///
/// Raises the jet order by one; errors when that would exceed the
/// space's order cap.
pub fn total_derivative(space: &JetSpace, e: &Expr, axis: usize) -> Result<Expr, JetError> {
    assert!(axis < space.n, "axis {axis} out of range for n={}", space.n);
    match e.node() {
        Node::Const(_) => Ok(Expr::zero()),
        Node::Var(v) => match v {
            JetVar::Independent(i) => Ok(if *i == axis { Expr::one() } else { Expr::zero() }),
            JetVar::Dependent { dep, index } => {
                let bumped = index.bump(axis);
                if bumped.order() > space.cap {
                    return Err(JetError::OrderCapExceeded {
                        order: bumped.order(),
                        cap: space.cap,
                    });
                }
                Ok(Expr::dependent(*dep, bumped))
            }
        },
        Node::Sum(terms) => {
            let mut out = Vec::with_capacity(terms.len());
            for t in terms {
                out.push(total_derivative(space, t, axis)?);
            }
            Ok(Expr::add(out))
        }
        Node::Product(factors) => {
            let mut terms = Vec::new();
            for (k, f) in factors.iter().enumerate() {
                let df = total_derivative(space, f, axis)?;
                if df.is_zero() {
                    continue;
                }
                let mut rest: Vec<Expr> = factors.clone();
                rest[k] = df;
                terms.push(Expr::mul(rest));
            }
            Ok(Expr::add(terms))
        }
        Node::Power(base, q) => {
            let db = total_derivative(space, base, axis)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            let coeff = Expr::rational(*q.numer(), *q.denom());
            let lower = Expr::pow(base.clone(), q - Rational64::from_integer(1));
            Ok(Expr::mul(vec![coeff, lower, db]))
        }
        Node::Neg(inner) => Ok(Expr::neg(total_derivative(space, inner, axis)?)),
        Node::Quotient(num, den) => {
            let dn = total_derivative(space, num, axis)?;
            let dd = total_derivative(space, den, axis)?;
            if dd.is_zero() {
                return Ok(Expr::div(dn, den.clone()));
            }
            let numerator = Expr::sub(
                Expr::mul2(dn, den.clone()),
                Expr::mul2(num.clone(), dd),
            );
            Ok(Expr::div(numerator, Expr::pow_int(den.clone(), 2)))
        }
        Node::Unary(f, arg) => {
            let da = total_derivative(space, arg, axis)?;
            if da.is_zero() {
                return Ok(Expr::zero());
            }
            let outer = match f {
                UnaryFn::Sqrt => Expr::div(
                    Expr::one(),
                    Expr::mul2(Expr::int(2), Expr::sqrt(arg.clone())),
                ),
                UnaryFn::Sin => Expr::unary(UnaryFn::Cos, arg.clone()),
                UnaryFn::Cos => Expr::neg(Expr::unary(UnaryFn::Sin, arg.clone())),
                UnaryFn::Exp => Expr::unary(UnaryFn::Exp, arg.clone()),
                UnaryFn::Ln => Expr::div(Expr::one(), arg.clone()),
            };
            Ok(Expr::mul2(outer, da))
        }
    }
}

/// `D_I`, the composition of total derivatives prescribed by the
/// multi-index. Total derivatives commute, so the application order is
/// immaterial; axes are applied in increasing order.
pub fn total_derivative_multi(
    space: &JetSpace,
    e: &Expr,
    index: &MultiIndex,
) -> Result<Expr, JetError> {
    assert_eq!(index.len(), space.n, "multi-index length must equal n");
    let mut acc = e.clone();
    for axis in 0..space.n {
        for _ in 0..index.entry(axis) {
            acc = total_derivative(space, &acc, axis)?;
        }
    }
    Ok(acc)
}

/// Substitutes the literal 0 for the variable `x^n`; jet variables are
/// untouched. This is the restriction to the flat boundary `{x^n = 0}`.
pub fn restrict_to_boundary(space: &JetSpace, e: &Expr) -> Expr {
    let mut map = BTreeMap::new();
    map.insert(JetVar::Independent(space.last_axis()), Expr::zero());
    e.substitute(&map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{equivalent_default, JetSpace};

    fn space1() -> JetSpace {
        JetSpace::new(1, 1, 1) // cap 2
    }

    fn u() -> Expr {
        Expr::dependent(0, MultiIndex::zeros(1))
    }

    fn u_x() -> Expr {
        Expr::dependent(0, MultiIndex::new(vec![1]))
    }

    fn x() -> Expr {
        Expr::independent(0)
    }

    #[test]
    fn power_rule() {
        // ∂(u_x^2/2)/∂u_x = u_x
        let e = Expr::div(Expr::pow_int(u_x(), 2), Expr::int(2));
        let d = diff_partial(&e, &JetVar::dependent(0, MultiIndex::new(vec![1])));
        assert!(equivalent_default(&d, &u_x()).unwrap());
    }

    #[test]
    fn chain_rule_sqrt() {
        // ∂ sqrt(1+u_x^2) / ∂u_x = u_x / sqrt(1+u_x^2)
        let w = Expr::sqrt(Expr::add2(Expr::one(), Expr::pow_int(u_x(), 2)));
        let d = diff_partial(&w, &JetVar::dependent(0, MultiIndex::new(vec![1])));
        let expected = Expr::div(u_x(), w.clone());
        assert!(equivalent_default(&d, &expected).unwrap());
    }

    #[test]
    fn absent_variable_gives_zero() {
        let e = Expr::mul2(x(), u());
        let d = diff_partial(&e, &JetVar::dependent(0, MultiIndex::new(vec![1])));
        assert!(d.is_zero());
    }

    #[test]
    fn total_derivative_of_dependent() {
        // D_x(u) = u_x
        let d = total_derivative(&space1(), &u(), 0).unwrap();
        assert_eq!(d, u_x());
    }

    #[test]
    fn total_derivative_leibniz_on_x_ux() {
        // D_x(x*u_x) = u_x + x*u_xx
        let e = Expr::mul2(x(), u_x());
        let d = total_derivative(&space1(), &e, 0).unwrap();
        let expected = Expr::add2(
            u_x(),
            Expr::mul2(x(), Expr::dependent(0, MultiIndex::new(vec![2]))),
        );
        assert!(equivalent_default(&d, &expected).unwrap());
    }

    #[test]
    fn total_derivative_of_square() {
        // D_t(y^2) = 2 y y'   (n=1 chart)
        let e = Expr::pow_int(u(), 2);
        let d = total_derivative(&space1(), &e, 0).unwrap();
        let expected = Expr::mul(vec![Expr::int(2), u(), u_x()]);
        assert!(equivalent_default(&d, &expected).unwrap());
    }

    #[test]
    fn multi_index_composition() {
        // D_{(2)}(u^2) = 2 u_x^2 + 2 u u_xx
        let space = space1();
        let e = Expr::pow_int(u(), 2);
        let d = total_derivative_multi(&space, &e, &MultiIndex::new(vec![2])).unwrap();
        let expected = Expr::add2(
            Expr::mul2(Expr::int(2), Expr::pow_int(u_x(), 2)),
            Expr::mul(vec![Expr::int(2), u(), Expr::dependent(0, MultiIndex::new(vec![2]))]),
        );
        assert!(equivalent_default(&d, &expected).unwrap());
        // empty multi-index is the identity
        let id = total_derivative_multi(&space, &e, &MultiIndex::zeros(1)).unwrap();
        assert_eq!(id, e);
    }

    #[test]
    fn mixed_second_derivative_n2() {
        // D_{(1,1)}(u) = u_xy
        let space = JetSpace::new(2, 1, 1);
        let d = total_derivative_multi(
            &space,
            &Expr::dependent(0, MultiIndex::zeros(2)),
            &MultiIndex::new(vec![1, 1]),
        )
        .unwrap();
        assert_eq!(d, Expr::dependent(0, MultiIndex::new(vec![1, 1])));
    }

    #[test]
    fn cap_is_enforced() {
        let space = JetSpace { n: 1, m: 1, cap: 1 };
        let err = total_derivative(&space, &u_x(), 0).unwrap_err();
        assert!(matches!(err, JetError::OrderCapExceeded { order: 2, cap: 1 }));
    }

    #[test]
    fn restriction_substitutes_zero() {
        let space = space1();
        // x*u_x -> 0
        let e = Expr::mul2(x(), u_x());
        assert!(restrict_to_boundary(&space, &e).is_zero());
        // u_x + exp(x) -> u_x + 1
        let e2 = Expr::add2(u_x(), Expr::unary(UnaryFn::Exp, x()));
        let r = restrict_to_boundary(&space, &e2);
        assert!(equivalent_default(&r, &Expr::add2(u_x(), Expr::one())).unwrap());
        // untouched when x^n is absent
        let e3 = Expr::pow_int(u_x(), 2);
        assert_eq!(restrict_to_boundary(&space, &e3), e3);
    }
}

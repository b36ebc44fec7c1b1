//! Expression trees over jet coordinates.
//!
//! Nodes are immutable and shared through `Arc`, so clones are cheap and
//! values are safe to hand across threads. Construction goes through the
//! smart constructors (`add`, `mul`, `pow`, ..) which fold constants and
//! absorb 0/1 locally; anything stronger is left to [`super::simplify`].

use super::{JetVar, MultiIndex};
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Numeric literal: exact rational when it came from integer or ratio
/// literals, float otherwise. Rational arithmetic falls back to float on
/// i64 overflow.
#[derive(Debug, Clone, Copy)]
pub enum Scalar {
    Rational(Rational64),
    Float(f64),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Rational(Rational64::from_integer(v))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Rational(Rational64::new(p, q))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Scalar::Rational(r) => r == Rational64::from_integer(1),
            Scalar::Float(x) => x == 1.0,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Scalar::Rational(r) => r < Rational64::zero(),
            Scalar::Float(x) => x < 0.0,
        }
    }

    pub fn add(self, other: Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => match a.checked_add(&b) {
                Some(c) => Scalar::Rational(c),
                None => Scalar::Float(self.to_f64() + other.to_f64()),
            },
            _ => Scalar::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(self, other: Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => match a.checked_mul(&b) {
                Some(c) => Scalar::Rational(c),
                None => Scalar::Float(self.to_f64() * other.to_f64()),
            },
            _ => Scalar::Float(self.to_f64() * other.to_f64()),
        }
    }

    pub fn recip(self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Float(x) => Scalar::Float(1.0 / x),
        })
    }

    /// Integer power, exact for rationals where it fits in i64.
    pub fn pow_i(self, e: i64) -> Scalar {
        match self {
            Scalar::Rational(r) => {
                let mut acc = Rational64::from_integer(1);
                let base = if e >= 0 { r } else { r.recip() };
                let mut ok = true;
                for _ in 0..e.unsigned_abs() {
                    match acc.checked_mul(&base) {
                        Some(c) => acc = c,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    Scalar::Rational(acc)
                } else {
                    Scalar::Float(self.to_f64().powi(e as i32))
                }
            }
            Scalar::Float(x) => Scalar::Float(x.powi(e as i32)),
        }
    }

    fn order_key(self) -> (u8, f64, i64, i64) {
        match self {
            Scalar::Rational(r) => (0, r.to_f64().unwrap_or(f64::NAN), *r.numer(), *r.denom()),
            Scalar::Float(x) => (1, x, 0, 0),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, va, pa, qa) = self.order_key();
        let (tb, vb, pb, qb) = other.order_key();
        ta.cmp(&tb)
            .then(va.total_cmp(&vb))
            .then(pa.cmp(&pb))
            .then(qa.cmp(&qb))
    }
}

/// Elementary unary functions admitted in densities and transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryFn {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Ln => x.ln(),
        }
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Const(Scalar),
    Var(JetVar),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Rational exponent; integer exponents have denominator 1.
    Power(Expr, Rational64),
    Neg(Expr),
    Quotient(Expr, Expr),
    Unary(UnaryFn, Expr),
}

/// A symbolic expression over jet coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    // ----- leaves -----

    pub fn constant(s: Scalar) -> Expr {
        Expr::wrap(Node::Const(s))
    }

    pub fn int(v: i64) -> Expr {
        Expr::constant(Scalar::int(v))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        Expr::constant(Scalar::ratio(p, q))
    }

    pub fn float(x: f64) -> Expr {
        Expr::constant(Scalar::Float(x))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: JetVar) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn independent(axis: usize) -> Expr {
        Expr::var(JetVar::Independent(axis))
    }

    pub fn dependent(dep: usize, index: MultiIndex) -> Expr {
        Expr::var(JetVar::Dependent { dep, index })
    }

    // ----- smart constructors -----

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(terms.len());
        let mut acc = Scalar::int(0);
        for t in terms {
            match t.node() {
                Node::Sum(inner) => {
                    for e in inner {
                        match e.node() {
                            Node::Const(c) => acc = acc.add(*c),
                            _ => flat.push(e.clone()),
                        }
                    }
                }
                Node::Const(c) => acc = acc.add(*c),
                _ => flat.push(t),
            }
        }
        if !acc.is_zero() {
            flat.push(Expr::constant(acc));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(flat)),
        }
    }

    pub fn add2(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, Expr::neg(b)])
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(factors.len());
        let mut acc = Scalar::int(1);
        let mut negate = false;
        for t in factors {
            match t.node() {
                Node::Product(inner) => {
                    for e in inner {
                        match e.node() {
                            Node::Const(c) => acc = acc.mul(*c),
                            Node::Neg(inner2) => {
                                negate = !negate;
                                flat.push(inner2.clone());
                            }
                            _ => flat.push(e.clone()),
                        }
                    }
                }
                Node::Const(c) => acc = acc.mul(*c),
                Node::Neg(inner) => {
                    negate = !negate;
                    flat.push(inner.clone());
                }
                _ => flat.push(t),
            }
        }
        if negate {
            acc = acc.neg();
        }
        if acc.is_zero() {
            return Expr::zero();
        }
        if !acc.is_one() {
            flat.insert(0, Expr::constant(acc));
        }
        match flat.len() {
            0 => Expr::one(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Product(flat)),
        }
    }

    pub fn mul2(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, b])
    }

    pub fn neg(e: Expr) -> Expr {
        match e.node() {
            Node::Const(c) => Expr::constant(c.neg()),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(e)),
        }
    }

    pub fn div(num: Expr, den: Expr) -> Expr {
        if let Node::Const(c) = den.node() {
            if let Some(r) = c.recip() {
                return Expr::mul2(Expr::constant(r), num);
            }
            // a literal zero denominator is malformed; keep the node so
            // evaluation reports it rather than silently folding
        }
        if num.is_zero() && !matches!(den.node(), Node::Const(c) if c.is_zero()) {
            return Expr::zero();
        }
        if den.is_one() {
            return num;
        }
        Expr::wrap(Node::Quotient(num, den))
    }

    pub fn pow(base: Expr, exponent: Rational64) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent == Rational64::from_integer(1) {
            return base;
        }
        if let Node::Const(c) = base.node() {
            if exponent.is_integer() {
                return Expr::constant(c.pow_i(*exponent.numer()));
            }
            if let Scalar::Float(x) = c {
                return Expr::float(x.powf(exponent.to_f64().unwrap()));
            }
        }
        if let Node::Power(inner, p) = base.node() {
            // (b^p)^q -> b^(pq) is sound for integer q
            if exponent.is_integer() {
                if let Some(pq) = p.checked_mul(&exponent) {
                    return Expr::pow(inner.clone(), pq);
                }
            }
        }
        Expr::wrap(Node::Power(base, exponent))
    }

    pub fn pow_int(base: Expr, e: i64) -> Expr {
        Expr::pow(base, Rational64::from_integer(e))
    }

    pub fn unary(f: UnaryFn, arg: Expr) -> Expr {
        if let Node::Const(c) = arg.node() {
            // fold exact special values; floats fold numerically
            match c {
                Scalar::Rational(r) => {
                    let folded = match (f, r) {
                        (UnaryFn::Sqrt, r) if r.is_zero() => Some(Expr::int(0)),
                        (UnaryFn::Sqrt, r) if *r == Rational64::from_integer(1) => Some(Expr::int(1)),
                        (UnaryFn::Sin, r) if r.is_zero() => Some(Expr::int(0)),
                        (UnaryFn::Cos, r) if r.is_zero() => Some(Expr::int(1)),
                        (UnaryFn::Exp, r) if r.is_zero() => Some(Expr::int(1)),
                        (UnaryFn::Ln, r) if *r == Rational64::from_integer(1) => Some(Expr::int(0)),
                        _ => None,
                    };
                    if let Some(e) = folded {
                        return e;
                    }
                }
                Scalar::Float(x) => return Expr::float(f.apply(*x)),
            }
        }
        Expr::wrap(Node::Unary(f, arg))
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::unary(UnaryFn::Sqrt, e)
    }

    // ----- inspection -----

    pub fn as_const(&self) -> Option<Scalar> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    /// All jet variables appearing in the tree.
    pub fn vars(&self) -> BTreeSet<JetVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<JetVar>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.clone());
            }
            Node::Sum(es) | Node::Product(es) => {
                for e in es {
                    e.collect_vars(out);
                }
            }
            Node::Power(e, _) | Node::Neg(e) | Node::Unary(_, e) => e.collect_vars(out),
            Node::Quotient(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Highest jet order among the variables of the expression.
    pub fn max_order(&self) -> u32 {
        self.vars().iter().map(|v| v.order()).max().unwrap_or(0)
    }

    pub fn contains_var(&self, v: &JetVar) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(w) => w == v,
            Node::Sum(es) | Node::Product(es) => es.iter().any(|e| e.contains_var(v)),
            Node::Power(e, _) | Node::Neg(e) | Node::Unary(_, e) => e.contains_var(v),
            Node::Quotient(a, b) => a.contains_var(v) || b.contains_var(v),
        }
    }

    /// Simultaneous substitution of variables by expressions. Variables
    /// absent from the map are kept.
    pub fn substitute(&self, map: &BTreeMap<JetVar, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Sum(es) => Expr::add(es.iter().map(|e| e.substitute(map)).collect()),
            Node::Product(es) => Expr::mul(es.iter().map(|e| e.substitute(map)).collect()),
            Node::Power(e, q) => Expr::pow(e.substitute(map), *q),
            Node::Neg(e) => Expr::neg(e.substitute(map)),
            Node::Quotient(a, b) => Expr::div(a.substitute(map), b.substitute(map)),
            Node::Unary(f, e) => Expr::unary(*f, e.substitute(map)),
        }
    }

    /// Number of nodes; used by tests to guard against blow-up.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Sum(es) | Node::Product(es) => 1 + es.iter().map(Expr::size).sum::<usize>(),
            Node::Power(e, _) | Node::Neg(e) | Node::Unary(_, e) => 1 + e.size(),
            Node::Quotient(a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u_x() -> Expr {
        Expr::dependent(0, MultiIndex::new(vec![1]))
    }

    #[test]
    fn constants_fold_exactly() {
        let e = Expr::add(vec![Expr::rational(1, 2), Expr::rational(1, 3)]);
        assert_eq!(e.as_const(), Some(Scalar::ratio(5, 6)));
        let p = Expr::mul(vec![Expr::int(0), u_x()]);
        assert!(p.is_zero());
    }

    #[test]
    fn division_by_constant_stays_rational() {
        let e = Expr::div(u_x(), Expr::int(2));
        match e.node() {
            Node::Product(fs) => assert_eq!(fs[0].as_const(), Some(Scalar::ratio(1, 2))),
            other => panic!("expected product, got {other:?}"),
        }
    }

    #[test]
    fn pow_folds_identities() {
        assert!(Expr::pow_int(u_x(), 0).is_one());
        assert_eq!(Expr::pow_int(u_x(), 1), u_x());
        assert_eq!(Expr::pow_int(Expr::int(3), 2).as_const(), Some(Scalar::int(9)));
        // nested integer power combines
        let e = Expr::pow_int(Expr::pow(u_x(), Rational64::new(1, 2)), 2);
        assert_eq!(e, u_x());
    }

    #[test]
    fn unary_folds_special_values() {
        assert!(Expr::unary(UnaryFn::Exp, Expr::zero()).is_one());
        assert!(Expr::unary(UnaryFn::Sin, Expr::zero()).is_zero());
        assert!(Expr::unary(UnaryFn::Ln, Expr::one()).is_zero());
    }

    #[test]
    fn substitution_rebuilds() {
        let mut map = BTreeMap::new();
        map.insert(JetVar::dependent(0, MultiIndex::new(vec![1])), Expr::int(0));
        let e = Expr::add2(u_x(), Expr::one());
        assert!(e.substitute(&map).is_one());
    }
}

//! Weak normal-form simplifier.
//!
//! Expressions are flattened to a sum of products over atomic factors
//! (variables, unary applications, irreducible sums), with constant
//! folding, 0/1 absorption and like-term collection. `sqrt` is folded
//! into rational exponents so that square roots merge with powers. The
//! form is idempotent and deterministic; it makes no claim of canonical
//! completeness — semantic identity is certified separately by
//! [`super::equivalent`].

use super::expr::{Expr, Node, Scalar, UnaryFn};
use num_rational::Rational64;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Term-count ceiling for distributing products over sums; larger
/// products are kept as atomic factors.
const EXPANSION_BUDGET: usize = 4096;

type Factors = BTreeMap<Expr, Rational64>;

#[derive(Debug, Clone)]
struct Term {
    coeff: Scalar,
    factors: Factors,
}

impl Term {
    fn constant(c: Scalar) -> Self {
        Term { coeff: c, factors: BTreeMap::new() }
    }

    fn negated(mut self) -> Self {
        self.coeff = self.coeff.neg();
        self
    }
}

pub fn simplify(e: &Expr) -> Expr {
    rebuild(collect(to_terms(e)))
}

fn merge_factor(factors: &mut Factors, base: Expr, q: Rational64) {
    if base.is_one() {
        return;
    }
    let entry = factors.entry(base).or_insert_with(Rational64::zero);
    *entry += q;
    if entry.is_zero() {
        // remove; need the key — retain pass below
    }
    factors.retain(|_, v| !v.is_zero());
}

fn to_terms(e: &Expr) -> Vec<Term> {
    match e.node() {
        Node::Const(c) => {
            if c.is_zero() {
                vec![]
            } else {
                vec![Term::constant(*c)]
            }
        }
        Node::Var(_) => {
            let mut f = BTreeMap::new();
            f.insert(e.clone(), Rational64::from_integer(1));
            vec![Term { coeff: Scalar::int(1), factors: f }]
        }
        Node::Neg(inner) => to_terms(inner).into_iter().map(Term::negated).collect(),
        Node::Sum(ts) => {
            let mut out = Vec::new();
            for t in ts {
                out.extend(to_terms(t));
            }
            collect_vec(out)
        }
        Node::Product(fs) => {
            let lists: Vec<Vec<Term>> = fs.iter().map(to_terms).collect();
            product_of_term_lists(lists)
        }
        Node::Power(base, q) => power_terms(base, *q),
        Node::Quotient(num, den) => {
            let ta = to_terms(num);
            // denominators are decomposed multiplicatively, never
            // distributed: a product of sums must stay a product of
            // sum-atoms or re-simplification would change the form
            let inv = factorize(den).and_then(invert_term);
            match inv {
                Some(inv) => collect_vec(
                    ta.into_iter().map(|t| mul_term(&t, &inv)).collect(),
                ),
                None => {
                    // denominator simplifies to zero: malformed; keep shape
                    let atom = Expr::div(rebuild(collect_vec(ta)), Expr::zero());
                    let mut f = BTreeMap::new();
                    f.insert(atom, Rational64::from_integer(1));
                    vec![Term { coeff: Scalar::int(1), factors: f }]
                }
            }
        }
        Node::Unary(UnaryFn::Sqrt, arg) => {
            let inner = simplify(arg);
            if let Some(c) = inner.as_const() {
                if let Scalar::Float(x) = c {
                    return to_terms(&Expr::float(x.sqrt()));
                }
            }
            let mut f = BTreeMap::new();
            merge_factor(&mut f, inner, Rational64::new(1, 2));
            vec![Term { coeff: Scalar::int(1), factors: f }]
        }
        Node::Unary(f_un, arg) => {
            let atom = Expr::unary(*f_un, simplify(arg));
            if let Node::Const(_) = atom.node() {
                return to_terms(&atom);
            }
            let mut f = BTreeMap::new();
            f.insert(atom, Rational64::from_integer(1));
            vec![Term { coeff: Scalar::int(1), factors: f }]
        }
    }
}

fn invert_term(t: Term) -> Option<Term> {
    let coeff = t.coeff.recip()?;
    let factors = t.factors.into_iter().map(|(b, q)| (b, -q)).collect();
    Some(Term { coeff, factors })
}

/// Converts an expression into a single multiplicative term
/// (coefficient times a power product of atoms) without distributing
/// over sums; irreducible sums become atoms. Returns `None` only when
/// the expression collapses to zero.
fn factorize(e: &Expr) -> Option<Term> {
    match e.node() {
        Node::Const(c) => {
            if c.is_zero() {
                None
            } else {
                Some(Term::constant(*c))
            }
        }
        Node::Var(_) => {
            let mut f = BTreeMap::new();
            f.insert(e.clone(), Rational64::from_integer(1));
            Some(Term { coeff: Scalar::int(1), factors: f })
        }
        Node::Neg(inner) => factorize(inner).map(Term::negated),
        Node::Product(fs) => {
            let mut acc = Term::constant(Scalar::int(1));
            for f in fs {
                acc = mul_term(&acc, &factorize(f)?);
            }
            Some(acc)
        }
        Node::Power(base, q) => {
            let inner = factorize(base)?;
            if q.is_integer() {
                let e_i = *q.numer();
                let coeff = inner.coeff.pow_i(e_i);
                let mut factors = BTreeMap::new();
                for (b, p) in inner.factors {
                    merge_factor(&mut factors, b, p * q);
                }
                Some(Term { coeff, factors })
            } else if inner.coeff.is_one()
                && inner.factors.len() == 1
                && inner.factors.values().next() == Some(&Rational64::from_integer(1))
            {
                let (b, _) = inner.factors.into_iter().next().unwrap();
                let mut factors = BTreeMap::new();
                merge_factor(&mut factors, b, *q);
                Some(Term { coeff: Scalar::int(1), factors })
            } else {
                let mut factors = BTreeMap::new();
                merge_factor(&mut factors, simplify(e), Rational64::from_integer(1));
                Some(Term { coeff: Scalar::int(1), factors })
            }
        }
        Node::Quotient(a, b) => {
            let ta = factorize(a)?;
            let tb = invert_term(factorize(b)?)?;
            Some(mul_term(&ta, &tb))
        }
        Node::Unary(UnaryFn::Sqrt, arg) => {
            let inner = simplify(arg);
            if let Some(Scalar::Float(x)) = inner.as_const() {
                return factorize(&Expr::float(x.sqrt()));
            }
            let mut f = BTreeMap::new();
            merge_factor(&mut f, inner, Rational64::new(1, 2));
            Some(Term { coeff: Scalar::int(1), factors: f })
        }
        Node::Unary(f_un, arg) => {
            let atom = Expr::unary(*f_un, simplify(arg));
            if atom.as_const().is_some() {
                return factorize(&atom);
            }
            let mut f = BTreeMap::new();
            f.insert(atom, Rational64::from_integer(1));
            Some(Term { coeff: Scalar::int(1), factors: f })
        }
        Node::Sum(_) => {
            let collected = collect_vec(to_terms(e));
            match collected.len() {
                0 => None,
                1 => collected.into_iter().next(),
                _ => {
                    let mut f = BTreeMap::new();
                    f.insert(rebuild(collected), Rational64::from_integer(1));
                    Some(Term { coeff: Scalar::int(1), factors: f })
                }
            }
        }
    }
}

fn mul_term(a: &Term, b: &Term) -> Term {
    let mut factors = a.factors.clone();
    for (base, q) in &b.factors {
        merge_factor(&mut factors, base.clone(), *q);
    }
    Term { coeff: a.coeff.mul(b.coeff), factors }
}

fn product_of_term_lists(lists: Vec<Vec<Term>>) -> Vec<Term> {
    let mut size = 1usize;
    for l in &lists {
        size = size.saturating_mul(l.len().max(1));
    }
    let lists = if size > EXPANSION_BUDGET {
        // keep multi-term operands atomic instead of distributing
        lists
            .into_iter()
            .map(|l| {
                if l.len() > 1 {
                    let atom = rebuild(collect_vec(l));
                    let mut f = BTreeMap::new();
                    f.insert(atom, Rational64::from_integer(1));
                    vec![Term { coeff: Scalar::int(1), factors: f }]
                } else {
                    l
                }
            })
            .collect()
    } else {
        lists
    };
    let mut acc = vec![Term::constant(Scalar::int(1))];
    for list in lists {
        if list.is_empty() {
            return vec![]; // a zero factor annihilates
        }
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for a in &acc {
            for b in &list {
                next.push(mul_term(a, b));
            }
        }
        acc = collect_vec(next);
    }
    acc
}

fn power_terms(base: &Expr, q: Rational64) -> Vec<Term> {
    let tb = to_terms(base);
    if tb.is_empty() {
        // 0^q
        return if q > Rational64::zero() { vec![] } else { to_terms(&Expr::pow(Expr::zero(), q)) };
    }
    if tb.len() == 1 {
        let t = tb.into_iter().next().unwrap();
        if q.is_integer() {
            let e_i = *q.numer();
            if e_i >= 0 || !t.coeff.is_zero() {
                let coeff = t.coeff.pow_i(e_i);
                let mut factors = BTreeMap::new();
                for (b, p) in t.factors {
                    merge_factor(&mut factors, b, p * q);
                }
                return vec![Term { coeff, factors }];
            }
        } else if t.coeff.is_one() && t.factors.len() == 1 {
            let (b, p) = t.factors.iter().next().unwrap();
            if *p == Rational64::from_integer(1) {
                let mut factors = BTreeMap::new();
                merge_factor(&mut factors, b.clone(), q);
                return vec![Term { coeff: Scalar::int(1), factors }];
            }
        }
        // fall through to the atomic case
        let mut f = BTreeMap::new();
        let mut inner = BTreeMap::new();
        for (b, p) in t.factors {
            merge_factor(&mut inner, b, p);
        }
        let rebuilt = rebuild(vec![Term { coeff: t.coeff, factors: inner }]);
        merge_factor(&mut f, rebuilt, q);
        return vec![Term { coeff: Scalar::int(1), factors: f }];
    }
    // multi-term base
    if q.is_integer() {
        let e_i = *q.numer();
        if e_i >= 2 && (tb.len() as u64).pow(e_i.min(16) as u32) <= EXPANSION_BUDGET as u64 {
            let lists = vec![tb; e_i as usize];
            return product_of_term_lists(lists);
        }
    }
    let atom = rebuild(collect_vec(tb));
    let mut f = BTreeMap::new();
    merge_factor(&mut f, atom, q);
    vec![Term { coeff: Scalar::int(1), factors: f }]
}

fn collect_vec(terms: Vec<Term>) -> Vec<Term> {
    let mut map: BTreeMap<Factors, Scalar> = BTreeMap::new();
    for t in terms {
        if t.coeff.is_zero() {
            continue;
        }
        match map.get_mut(&t.factors) {
            Some(c) => *c = c.add(t.coeff),
            None => {
                map.insert(t.factors, t.coeff);
            }
        }
    }
    map.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(factors, coeff)| Term { coeff, factors })
        .collect()
}

fn collect(terms: Vec<Term>) -> Vec<Term> {
    collect_vec(terms)
}

fn rebuild_factor(base: &Expr, q: Rational64) -> Expr {
    if q == Rational64::new(1, 2) {
        Expr::sqrt(base.clone())
    } else {
        Expr::pow(base.clone(), q)
    }
}

fn rebuild(terms: Vec<Term>) -> Expr {
    if terms.is_empty() {
        return Expr::zero();
    }
    let exprs: Vec<Expr> = terms
        .into_iter()
        .map(|t| {
            let mut num: Vec<Expr> = Vec::new();
            let mut den: Vec<Expr> = Vec::new();
            for (base, q) in &t.factors {
                if *q > Rational64::zero() {
                    num.push(rebuild_factor(base, *q));
                } else {
                    den.push(rebuild_factor(base, -*q));
                }
            }
            // negative coefficients go through an outer Neg so printed
            // output reparses to the identical tree
            let (coeff, negate) = if t.coeff.is_negative() {
                (t.coeff.neg(), true)
            } else {
                (t.coeff, false)
            };
            let numerator = if coeff.is_one() {
                Expr::mul(num)
            } else {
                let mut v = vec![Expr::constant(coeff)];
                v.extend(num);
                Expr::mul(v)
            };
            let unsigned = if den.is_empty() {
                numerator
            } else {
                Expr::div(numerator, Expr::mul(den))
            };
            if negate {
                Expr::neg(unsigned)
            } else {
                unsigned
            }
        })
        .collect();
    Expr::add(exprs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{equivalent_default, MultiIndex};

    fn u() -> Expr {
        Expr::dependent(0, MultiIndex::zeros(2))
    }

    fn u_x() -> Expr {
        Expr::dependent(0, MultiIndex::new(vec![1, 0]))
    }

    fn u_y() -> Expr {
        Expr::dependent(0, MultiIndex::new(vec![0, 1]))
    }

    #[test]
    fn zero_absorption() {
        let e = Expr::add2(Expr::mul2(Expr::zero(), u_x()), u());
        assert_eq!(simplify(&e), u());
    }

    #[test]
    fn cancellation() {
        // built without the smart constructors folding it away
        let e = Expr::add2(u_x(), Expr::neg(Expr::mul2(Expr::one(), u_x())));
        assert!(simplify(&e).is_zero());
    }

    #[test]
    fn commutative_collection() {
        let e = Expr::add2(Expr::mul2(u_x(), u_y()), Expr::mul2(u_y(), u_x()));
        let s = simplify(&e);
        let expected = Expr::mul(vec![Expr::int(2), u_x(), u_y()]);
        assert_eq!(s, simplify(&expected));
    }

    #[test]
    fn sqrt_merges_with_powers() {
        // sqrt(S) * sqrt(S) -> S
        let s_arg = Expr::add2(Expr::one(), Expr::pow_int(u_x(), 2));
        let e = Expr::mul2(Expr::sqrt(s_arg.clone()), Expr::sqrt(s_arg.clone()));
        assert!(equivalent_default(&simplify(&e), &s_arg).unwrap());
    }

    #[test]
    fn idempotent_on_samples() {
        let samples = vec![
            Expr::add(vec![
                Expr::mul2(Expr::int(3), Expr::pow_int(u_x(), 2)),
                Expr::neg(Expr::mul2(u_y(), u_x())),
                Expr::div(u(), Expr::add2(Expr::int(2), Expr::pow_int(u_y(), 2))),
            ]),
            Expr::pow(
                Expr::add2(Expr::one(), Expr::pow_int(u_x(), 2)),
                Rational64::new(3, 2),
            ),
            Expr::div(
                Expr::neg(Expr::dependent(0, MultiIndex::new(vec![2, 0]))),
                Expr::pow(
                    Expr::add2(Expr::one(), Expr::pow_int(u_x(), 2)),
                    Rational64::new(3, 2),
                ),
            ),
        ];
        for e in samples {
            let s1 = simplify(&e);
            let s2 = simplify(&s1);
            assert_eq!(s1, s2, "not idempotent on {e:?}");
            assert!(equivalent_default(&e, &s1).unwrap(), "changed value of {e:?}");
        }
    }
}

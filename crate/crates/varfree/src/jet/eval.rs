//! Numeric evaluation: a checked tree walker for one-off evaluation and
//! a compiled stack program for the solver's hot loops.

use super::expr::{Expr, Node, Scalar, UnaryFn};
use super::{JetSpace, JetVar};
use num_traits::ToPrimitive;
use std::collections::BTreeMap;
use thiserror::Error;

/// Assignment of real values to jet variables.
#[derive(Debug, Clone, Default)]
pub struct JetPoint {
    vals: BTreeMap<JetVar, f64>,
}

impl JetPoint {
    pub fn new() -> Self {
        JetPoint::default()
    }

    pub fn set(&mut self, v: JetVar, x: f64) -> &mut Self {
        self.vals.insert(v, x);
        self
    }

    pub fn get(&self, v: &JetVar) -> Option<f64> {
        self.vals.get(v).copied()
    }

    /// Point covering every chart variable up to `order`, all set to `x`.
    pub fn constant(space: &JetSpace, order: u32, x: f64) -> Self {
        let mut p = JetPoint::new();
        for v in space.vars_up_to(order) {
            p.set(v, x);
        }
        p
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unassigned variable {0:?}")]
    Unassigned(JetVar),
    #[error("division by zero in subtree `{0}`")]
    DivisionByZero(String),
    #[error("sqrt of negative value {1} in subtree `{0}`")]
    SqrtNegative(String, f64),
    #[error("ln of non-positive value {1} in subtree `{0}`")]
    LnNonPositive(String, f64),
    #[error("fractional power of negative base {1} in subtree `{0}`")]
    FractionalPowerNegative(String, f64),
    #[error("non-finite result in subtree `{0}`")]
    NonFinite(String),
}

fn describe(e: &Expr) -> String {
    // debug-printer name for error messages; kept short
    let s = crate::jet::print::print_canonical(e);
    if s.len() > 80 {
        format!("{}…", &s[..80])
    } else {
        s
    }
}

/// IEEE-double evaluation with domain checks; the offending subtree is
/// reported on violation.
pub fn evaluate(e: &Expr, p: &JetPoint) -> Result<f64, EvalError> {
    let v = eval_rec(e, p)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(describe(e)))
    }
}

fn eval_rec(e: &Expr, p: &JetPoint) -> Result<f64, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(c.to_f64()),
        Node::Var(v) => p.get(v).ok_or_else(|| EvalError::Unassigned(v.clone())),
        Node::Sum(terms) => {
            let mut acc = 0.0;
            for t in terms {
                acc += eval_rec(t, p)?;
            }
            Ok(acc)
        }
        Node::Product(factors) => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval_rec(f, p)?;
            }
            Ok(acc)
        }
        Node::Power(base, q) => {
            let b = eval_rec(base, p)?;
            if q.is_integer() {
                let e_i = *q.numer();
                if b == 0.0 && e_i < 0 {
                    return Err(EvalError::DivisionByZero(describe(base)));
                }
                Ok(b.powi(e_i as i32))
            } else {
                if b < 0.0 {
                    return Err(EvalError::FractionalPowerNegative(describe(base), b));
                }
                Ok(b.powf(q.to_f64().unwrap()))
            }
        }
        Node::Neg(inner) => Ok(-eval_rec(inner, p)?),
        Node::Quotient(num, den) => {
            let d = eval_rec(den, p)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero(describe(den)));
            }
            Ok(eval_rec(num, p)? / d)
        }
        Node::Unary(f, arg) => {
            let a = eval_rec(arg, p)?;
            match f {
                UnaryFn::Sqrt if a < 0.0 => Err(EvalError::SqrtNegative(describe(arg), a)),
                UnaryFn::Ln if a <= 0.0 => Err(EvalError::LnNonPositive(describe(arg), a)),
                _ => Ok(f.apply(a)),
            }
        }
    }
}

/// Slot assignment for compiled evaluation.
#[derive(Debug, Clone)]
pub struct VarLayout {
    vars: Vec<JetVar>,
    index: BTreeMap<JetVar, usize>,
}

impl VarLayout {
    pub fn new(vars: Vec<JetVar>) -> Self {
        let index = vars.iter().cloned().zip(0..).collect();
        VarLayout { vars, index }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn slot(&self, v: &JetVar) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn vars(&self) -> &[JetVar] {
        &self.vars
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Load(usize),
    Add(usize),
    Mul(usize),
    Neg,
    Div,
    PowI(i32),
    PowF(f64),
    Unary(UnaryFn),
}

/// An expression flattened to a postfix program over a slot array.
/// Domain violations surface as NaN/inf rather than errors; callers in
/// optimization loops reject non-finite objective values.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    max_stack: usize,
}

impl CompiledExpr {
    /// Compiles against a layout; every variable of `e` must have a slot.
    pub fn compile(e: &Expr, layout: &VarLayout) -> Result<CompiledExpr, EvalError> {
        let mut ops = Vec::new();
        compile_rec(e, layout, &mut ops)?;
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Add(k) | Op::Mul(k) => depth = depth - k + 1,
                Op::Div => depth -= 1,
                Op::Neg | Op::PowI(_) | Op::PowF(_) | Op::Unary(_) => {}
            }
            max_stack = max_stack.max(depth);
        }
        Ok(CompiledExpr { ops, max_stack })
    }

    pub fn eval(&self, slots: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.max_stack);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(s) => stack.push(slots[*s]),
                Op::Add(k) => {
                    let mut acc = 0.0;
                    for _ in 0..*k {
                        acc += stack.pop().unwrap();
                    }
                    stack.push(acc);
                }
                Op::Mul(k) => {
                    let mut acc = 1.0;
                    for _ in 0..*k {
                        acc *= stack.pop().unwrap();
                    }
                    stack.push(acc);
                }
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::Div => {
                    let d = stack.pop().unwrap();
                    let n = stack.pop().unwrap();
                    stack.push(n / d);
                }
                Op::PowI(e) => {
                    let b = stack.pop().unwrap();
                    stack.push(b.powi(*e));
                }
                Op::PowF(e) => {
                    let b = stack.pop().unwrap();
                    stack.push(b.powf(*e));
                }
                Op::Unary(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
            }
        }
        stack.pop().unwrap()
    }
}

fn compile_rec(e: &Expr, layout: &VarLayout, ops: &mut Vec<Op>) -> Result<(), EvalError> {
    match e.node() {
        Node::Const(c) => ops.push(Op::Const(match c {
            Scalar::Rational(r) => r.to_f64().unwrap(),
            Scalar::Float(x) => *x,
        })),
        Node::Var(v) => {
            let slot = layout.slot(v).ok_or_else(|| EvalError::Unassigned(v.clone()))?;
            ops.push(Op::Load(slot));
        }
        Node::Sum(terms) => {
            for t in terms {
                compile_rec(t, layout, ops)?;
            }
            ops.push(Op::Add(terms.len()));
        }
        Node::Product(factors) => {
            for f in factors {
                compile_rec(f, layout, ops)?;
            }
            ops.push(Op::Mul(factors.len()));
        }
        Node::Power(base, q) => {
            compile_rec(base, layout, ops)?;
            if q.is_integer() {
                ops.push(Op::PowI(*q.numer() as i32));
            } else {
                ops.push(Op::PowF(q.to_f64().unwrap()));
            }
        }
        Node::Neg(inner) => {
            compile_rec(inner, layout, ops)?;
            ops.push(Op::Neg);
        }
        Node::Quotient(num, den) => {
            compile_rec(num, layout, ops)?;
            compile_rec(den, layout, ops)?;
            ops.push(Op::Div);
        }
        Node::Unary(f, arg) => {
            compile_rec(arg, layout, ops)?;
            ops.push(Op::Unary(*f));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    fn u_x_var() -> JetVar {
        JetVar::dependent(0, MultiIndex::new(vec![1]))
    }

    #[test]
    fn square_evaluates() {
        let e = Expr::pow_int(Expr::var(u_x_var()), 2);
        let mut p = JetPoint::new();
        p.set(u_x_var(), 3.0);
        assert_eq!(evaluate(&e, &p).unwrap(), 9.0);
    }

    #[test]
    fn sqrt_identity_case() {
        let e = Expr::sqrt(Expr::add2(Expr::one(), Expr::pow_int(Expr::var(u_x_var()), 2)));
        let mut p = JetPoint::new();
        p.set(u_x_var(), 0.0);
        assert_eq!(evaluate(&e, &p).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let u = JetVar::dependent(0, MultiIndex::zeros(1));
        let e = Expr::div(Expr::one(), Expr::var(u.clone()));
        let mut p = JetPoint::new();
        p.set(u, 0.0);
        assert!(matches!(evaluate(&e, &p), Err(EvalError::DivisionByZero(_))));
    }

    #[test]
    fn compiled_matches_tree() {
        let e = Expr::add2(
            Expr::mul2(Expr::rational(3, 2), Expr::pow_int(Expr::var(u_x_var()), 3)),
            Expr::unary(UnaryFn::Sin, Expr::var(u_x_var())),
        );
        let layout = VarLayout::new(vec![u_x_var()]);
        let c = CompiledExpr::compile(&e, &layout).unwrap();
        for x in [-1.5, 0.0, 0.7, 2.0] {
            let mut p = JetPoint::new();
            p.set(u_x_var(), x);
            assert!((c.eval(&[x]) - evaluate(&e, &p).unwrap()).abs() < 1e-14);
        }
    }
}

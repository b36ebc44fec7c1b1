//! Symbolic expression engine over finite-order jet coordinates.
//!
//! A jet chart for `n` independent and `m` dependent variables has
//! coordinates `x^1..x^n` and `u^j_I`, where `I` is a multi-index of
//! derivative counts. Expressions over these coordinates are immutable
//! trees ([`Expr`]); the operations here are fiberwise partial
//! derivatives, total derivatives `D_i`, restriction to the boundary
//! chart `{x^n = 0}`, numeric evaluation, randomized equivalence
//! testing, and a deliberately weak normal-form simplifier.

mod equiv;
mod eval;
mod expr;
mod ops;
mod parse;
pub(crate) mod print;
pub mod sample;
mod simplify;

pub use equiv::{equivalent, equivalent_default, EquivOptions};
pub use eval::{evaluate, CompiledExpr, EvalError, JetPoint, VarLayout};
pub use expr::{Expr, Node, Scalar, UnaryFn};
pub use ops::{diff_partial, restrict_to_boundary, total_derivative, total_derivative_multi};
pub use parse::{parse, parse_with_order, ParseError, VarTable};
pub use print::print_with;
pub use simplify::simplify;

use std::fmt;
use thiserror::Error;

/// Exponent vector indexing a jet coordinate `u_I`; one entry per
/// independent variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex { entries }
    }

    /// The zero multi-index of length `n` (the dependent variable itself).
    pub fn zeros(n: usize) -> Self {
        MultiIndex { entries: vec![0; n] }
    }

    /// `1_i`: a single derivative along axis `axis` (0-based).
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut entries = vec![0; n];
        entries[axis] += 1;
        MultiIndex { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn entry(&self, axis: usize) -> u32 {
        self.entries[axis]
    }

    /// `|I|`, the total derivative order.
    pub fn order(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// `I + 1_i`.
    pub fn bump(&self, axis: usize) -> Self {
        let mut entries = self.entries.clone();
        entries[axis] += 1;
        MultiIndex { entries }
    }

    /// `I - α` in the convention `(i_1, .., i_{n-1}, i_n - α)`; defined
    /// only when `α ≤ i_n`.
    pub fn last_minus(&self, alpha: u32) -> Option<Self> {
        let last = *self.entries.last()?;
        if alpha > last {
            return None;
        }
        let mut entries = self.entries.clone();
        *entries.last_mut().unwrap() = last - alpha;
        Some(MultiIndex { entries })
    }

    /// The tangential part `(i_1, .., i_{n-1}, 0)`.
    pub fn with_last_zero(&self) -> Self {
        let mut entries = self.entries.clone();
        if let Some(last) = entries.last_mut() {
            *last = 0;
        }
        MultiIndex { entries }
    }

    /// All multi-indices of length `n` with `|I| ≤ max_order`, in
    /// lexicographic order. The fixed order keeps operator assembly
    /// deterministic.
    pub fn all_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0u32; n];
        loop {
            if current.iter().sum::<u32>() <= max_order {
                out.push(MultiIndex::new(current.clone()));
            }
            // odometer over [0, max_order]^n
            let mut axis = n;
            loop {
                if axis == 0 {
                    out.sort();
                    return out;
                }
                axis -= 1;
                if current[axis] < max_order {
                    current[axis] += 1;
                    for e in current.iter_mut().skip(axis + 1) {
                        *e = 0;
                    }
                    break;
                }
            }
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e)?;
        }
        write!(f, ")")
    }
}

/// A single jet-chart coordinate: `x^i` or `u^j_I` (0-based `i`, `j`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetVar {
    Independent(usize),
    Dependent { dep: usize, index: MultiIndex },
}

impl JetVar {
    pub fn independent(axis: usize) -> Self {
        JetVar::Independent(axis)
    }

    pub fn dependent(dep: usize, index: MultiIndex) -> Self {
        JetVar::Dependent { dep, index }
    }

    /// `u^j` itself (order zero).
    pub fn dependent_base(dep: usize, n: usize) -> Self {
        JetVar::Dependent { dep, index: MultiIndex::zeros(n) }
    }

    pub fn order(&self) -> u32 {
        match self {
            JetVar::Independent(_) => 0,
            JetVar::Dependent { index, .. } => index.order(),
        }
    }
}

/// Chart dimensions plus the order cap that total derivatives may not
/// exceed. The cap defaults to `2r` for an order-`r` problem (enough
/// for the Euler operator) and must be raised explicitly by callers
/// needing more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetSpace {
    pub n: usize,
    pub m: usize,
    pub cap: u32,
}

impl JetSpace {
    /// Space for an order-`r` problem, with the default cap `2r`.
    pub fn new(n: usize, m: usize, r: u32) -> Self {
        JetSpace { n, m, cap: 2 * r }
    }

    pub fn with_cap(self, cap: u32) -> Self {
        JetSpace { cap, ..self }
    }

    /// Index of the "normal" independent variable `x^n` (0-based).
    pub fn last_axis(&self) -> usize {
        self.n - 1
    }

    /// Checks that a variable belongs to this chart (order cap included).
    pub fn admits(&self, v: &JetVar) -> bool {
        match v {
            JetVar::Independent(i) => *i < self.n,
            JetVar::Dependent { dep, index } => {
                *dep < self.m && index.len() == self.n && index.order() <= self.cap
            }
        }
    }

    /// All chart variables of order at most `order`, deterministic order.
    pub fn vars_up_to(&self, order: u32) -> Vec<JetVar> {
        let mut out: Vec<JetVar> = (0..self.n).map(JetVar::Independent).collect();
        for dep in 0..self.m {
            for index in MultiIndex::all_up_to(self.n, order) {
                out.push(JetVar::Dependent { dep, index });
            }
        }
        out
    }
}

/// Errors from jet-space operations.
#[derive(Debug, Error)]
pub enum JetError {
    #[error("jet order {order} exceeds the configured order cap {cap}; raise the cap explicitly")]
    OrderCapExceeded { order: u32, cap: u32 },
    #[error("variable {0:?} does not belong to the chart (n={1}, m={2})")]
    ForeignVariable(JetVar, usize, usize),
    #[error("equivalence sampling exhausted after {redraws} redraws ({valid} valid of {trials} requested)")]
    SamplingExhausted { redraws: usize, valid: usize, trials: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order_and_bump() {
        let i = MultiIndex::new(vec![2, 0, 1]);
        assert_eq!(i.order(), 3);
        assert_eq!(i.bump(1), MultiIndex::new(vec![2, 1, 1]));
        assert_eq!(i.last_minus(1), Some(MultiIndex::new(vec![2, 0, 0])));
        assert_eq!(i.last_minus(2), None);
        assert_eq!(i.with_last_zero(), MultiIndex::new(vec![2, 0, 0]));
    }

    #[test]
    fn all_up_to_is_sorted_and_complete() {
        let all = MultiIndex::all_up_to(2, 2);
        // |I| <= 2 over 2 axes: (0,0),(0,1),(0,2),(1,0),(1,1),(2,0)
        assert_eq!(all.len(), 6);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(all.iter().all(|i| i.order() <= 2));
    }

    #[test]
    fn space_admits_checks_cap() {
        let space = JetSpace::new(2, 1, 1); // cap 2
        assert!(space.admits(&JetVar::dependent(0, MultiIndex::new(vec![1, 1]))));
        assert!(!space.admits(&JetVar::dependent(0, MultiIndex::new(vec![2, 1]))));
        assert!(!space.admits(&JetVar::independent(2)));
    }
}

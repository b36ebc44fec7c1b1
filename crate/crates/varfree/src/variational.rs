//! The Euler operator `E` and the boundary operator `E^∂`.
//!
//! For a density `L` of order `r`, component `j` of the Euler operator
//! is `Σ_{|I|≤r} (-1)^{|I|} D_I(∂L/∂u^j_I)`. The boundary operator acts
//! on the flat boundary chart `{x^n = 0}`: its `(j, α)` component is
//!
//! ```text
//! Σ_{|I|≤r, i_n>α} (-1)^{|I|-α-1}
//!     D_{I-i_n}( D_{x_n}^{i_n-α-1}(∂L/∂u^j_I) |_{x_n=0} )
//! ```
//!
//! where `D_{I-i_n}` uses only the tangential total derivatives
//! `D_1..D_{n-1}`. Both operators are also provided for a general total
//! differential operator `□ = a^I_j D_I^{(j)}`, whose class is the pair
//! `(E(□), E^∂(□))`; a density corresponds to `a^I_j = ∂L/∂u^j_I`, which
//! gives an independent cross-check path for the boundary conditions.
//!
//! Setting every interior component and every boundary component to
//! zero characterizes critical points with free boundary values: the
//! boundary components are the natural boundary conditions.

use crate::jet::{
    diff_partial, restrict_to_boundary, simplify, total_derivative, total_derivative_multi, Expr,
    JetError, JetSpace, JetVar, MultiIndex,
};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariationalError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("density uses variable {0:?} outside the declared chart")]
    ForeignVariable(JetVar),
    #[error("density has jet order {got}, above the declared order {declared}")]
    OrderAboveDeclared { got: u32, declared: u32 },
    #[error("invalid dimensions: n={n}, m={m}, r={r} (all must be >= 1)")]
    BadDimensions { n: usize, m: usize, r: u32 },
}

/// An order-`r` Lagrangian density over the `(n, m)` jet chart.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    n: usize,
    m: usize,
    order: u32,
    density: Expr,
}

impl Lagrangian {
    pub fn new(n: usize, m: usize, order: u32, density: Expr) -> Result<Self, VariationalError> {
        if n < 1 || m < 1 || order < 1 {
            return Err(VariationalError::BadDimensions { n, m, r: order });
        }
        let chart = JetSpace { n, m, cap: order };
        for v in density.vars() {
            if !chart.admits(&v) {
                if let JetVar::Dependent { ref index, dep } = v {
                    if dep < m && index.len() == n && index.order() > order {
                        return Err(VariationalError::OrderAboveDeclared {
                            got: index.order(),
                            declared: order,
                        });
                    }
                }
                return Err(VariationalError::ForeignVariable(v));
            }
        }
        Ok(Lagrangian { n, m, order, density })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn density(&self) -> &Expr {
        &self.density
    }

    /// The jet space sized for this problem (order cap `2r`).
    pub fn space(&self) -> JetSpace {
        JetSpace::new(self.n, self.m, self.order)
    }
}

/// A total differential operator `□ = Σ a^I_j D_I^{(j)}` with finitely
/// many nonzero coefficients.
#[derive(Debug, Clone)]
pub struct TotalDiffOperator {
    pub n: usize,
    pub m: usize,
    /// `(j, I) -> a^I_j`; BTreeMap keeps assembly deterministic.
    pub coefficients: BTreeMap<(usize, MultiIndex), Expr>,
}

impl TotalDiffOperator {
    pub fn new(n: usize, m: usize) -> Self {
        TotalDiffOperator { n, m, coefficients: BTreeMap::new() }
    }

    pub fn set(&mut self, dep: usize, index: MultiIndex, coeff: Expr) -> &mut Self {
        assert_eq!(index.len(), self.n);
        assert!(dep < self.m);
        if coeff.is_zero() {
            self.coefficients.remove(&(dep, index));
        } else {
            self.coefficients.insert((dep, index), coeff);
        }
        self
    }

    /// The operator with `a^I_j = ∂L/∂u^j_I`.
    pub fn from_lagrangian(lagrangian: &Lagrangian) -> Self {
        let mut op = TotalDiffOperator::new(lagrangian.n, lagrangian.m);
        for j in 0..lagrangian.m {
            for index in MultiIndex::all_up_to(lagrangian.n, lagrangian.order) {
                let a = diff_partial(
                    lagrangian.density(),
                    &JetVar::Dependent { dep: j, index: index.clone() },
                );
                op.set(j, index, a);
            }
        }
        op
    }

    /// Maximum normal order `i_n` over the nonzero coefficients.
    pub fn max_normal_order(&self) -> u32 {
        self.coefficients
            .keys()
            .map(|(_, index)| index.entry(index.len() - 1))
            .max()
            .unwrap_or(0)
    }
}

/// The pair `(E(□), E^∂(□))`: interior components per dependent
/// variable, boundary components indexed by `(j, α)` in the
/// `D_0^(j,α)` basis.
#[derive(Debug, Clone)]
pub struct EulerResult {
    pub interior: Vec<Expr>,
    pub boundary: BTreeMap<(usize, u32), Expr>,
}

/// `(-1)^k` as an exact integer expression.
fn sign(k: u32) -> Expr {
    if k % 2 == 0 {
        Expr::one()
    } else {
        Expr::int(-1)
    }
}

/// Euler operator of a Lagrangian: component `j` is
/// `Σ_{|I|≤r} (-1)^{|I|} D_I(∂L/∂u^j_I)`, simplified.
pub fn euler_lagrange(space: &JetSpace, lagrangian: &Lagrangian) -> Result<Vec<Expr>, VariationalError> {
    let mut out = Vec::with_capacity(lagrangian.m);
    for j in 0..lagrangian.m {
        let mut terms = Vec::new();
        for index in MultiIndex::all_up_to(lagrangian.n, lagrangian.order) {
            let a = diff_partial(
                lagrangian.density(),
                &JetVar::Dependent { dep: j, index: index.clone() },
            );
            if a.is_zero() {
                continue;
            }
            let derived = total_derivative_multi(space, &a, &index)?;
            terms.push(Expr::mul2(sign(index.order()), derived));
        }
        out.push(simplify(&Expr::add(terms)));
    }
    Ok(out)
}

/// Interior and boundary components of a general total differential
/// operator. The boundary accumulation is lexicographic in `(j, I)`
/// and then ascending in `α`, so the symbolic output is deterministic.
pub fn relative_euler(
    space: &JetSpace,
    op: &TotalDiffOperator,
) -> Result<EulerResult, VariationalError> {
    let mut interior: Vec<Vec<Expr>> = vec![Vec::new(); op.m];
    let mut boundary_terms: BTreeMap<(usize, u32), Vec<Expr>> = BTreeMap::new();
    // pre-seed every (j, α) with α < max i_n so zero components are
    // reported explicitly
    let max_in = op.max_normal_order();
    for j in 0..op.m {
        for alpha in 0..max_in {
            boundary_terms.entry((j, alpha)).or_default();
        }
    }
    for ((j, index), a) in &op.coefficients {
        // interior: (-1)^{|I|} D_I(a)
        let derived = total_derivative_multi(space, a, index)?;
        interior[*j].push(Expr::mul2(sign(index.order()), derived));

        // boundary: for α < i_n, the D_0^(j, i_n - α - 1) component
        // accumulates (-1)^{|I|-i_n} (-1)^α D_{I-i_n}( D_n^α(a)|_{x_n=0} )
        let i_n = index.entry(index.len() - 1);
        if i_n == 0 {
            continue;
        }
        let tangential = index.with_last_zero();
        let mut normal_derived = a.clone();
        for alpha in 0..i_n {
            if alpha > 0 {
                normal_derived = total_derivative(space, &normal_derived, space.last_axis())?;
            }
            let restricted = restrict_to_boundary(space, &normal_derived);
            let tangential_derived = total_derivative_multi(space, &restricted, &tangential)?;
            let term = Expr::mul(vec![
                sign(index.order() - i_n),
                sign(alpha),
                tangential_derived,
            ]);
            boundary_terms.entry((*j, i_n - alpha - 1)).or_default().push(term);
        }
    }
    let interior = interior
        .into_iter()
        .map(|terms| simplify(&Expr::add(terms)))
        .collect();
    let boundary = boundary_terms
        .into_iter()
        .map(|(k, terms)| (k, simplify(&Expr::add(terms))))
        .collect();
    Ok(EulerResult { interior, boundary })
}

/// Natural boundary conditions of a Lagrangian on the flat boundary
/// `{x^n = 0}`: the component map `(j, α) -> E^∂_{Y,α}`, `α = 0..r-1`,
/// padded with explicit zeros. Curved boundaries must be flattened by a
/// point transformation first.
pub fn natural_boundary_conditions(
    space: &JetSpace,
    lagrangian: &Lagrangian,
) -> Result<BTreeMap<(usize, u32), Expr>, VariationalError> {
    let r = lagrangian.order;
    let mut out: BTreeMap<(usize, u32), Vec<Expr>> = BTreeMap::new();
    for j in 0..lagrangian.m {
        for alpha in 0..r {
            out.entry((j, alpha)).or_default();
        }
    }
    for j in 0..lagrangian.m {
        for index in MultiIndex::all_up_to(lagrangian.n, r) {
            let i_n = index.entry(index.len() - 1);
            if i_n == 0 {
                continue;
            }
            let a = diff_partial(
                lagrangian.density(),
                &JetVar::Dependent { dep: j, index: index.clone() },
            );
            if a.is_zero() {
                continue;
            }
            let tangential = index.with_last_zero();
            let mut normal_derived = a;
            // the α-th condition takes k = i_n - α - 1 normal derivatives;
            // build them incrementally
            for k in 0..i_n {
                if k > 0 {
                    normal_derived = total_derivative(space, &normal_derived, space.last_axis())?;
                }
                let alpha = i_n - k - 1;
                if alpha >= r {
                    continue;
                }
                let restricted = restrict_to_boundary(space, &normal_derived);
                let tangential_derived = total_derivative_multi(space, &restricted, &tangential)?;
                let term = Expr::mul2(sign(index.order() - alpha - 1), tangential_derived);
                out.entry((j, alpha)).or_default().push(term);
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|(k, terms)| (k, simplify(&Expr::add(terms))))
        .collect())
}

/// `(-1)^{i-1} D_i ∘ □`, the Spencer coboundary of `□^i ⊗ d^{n-1}_i x`
/// for a tangential direction `i < n`.
pub fn tangential_coboundary(
    space: &JetSpace,
    axis: usize,
    op: &TotalDiffOperator,
) -> Result<TotalDiffOperator, VariationalError> {
    let composed = compose_with_total_derivative(space, axis, op)?;
    let s = sign(axis as u32); // (-1)^{i-1} with 1-based i == (-1)^axis 0-based
    Ok(scale(&composed, &s))
}

/// `(-1)^{n-1} (x_n D_n + 1) ∘ □`, the Spencer coboundary of
/// `□^n ⊗ x_n d^{n-1}_n x`.
pub fn normal_coboundary(
    space: &JetSpace,
    op: &TotalDiffOperator,
) -> Result<TotalDiffOperator, VariationalError> {
    let x_n = Expr::independent(space.last_axis());
    let d_n = compose_with_total_derivative(space, space.last_axis(), op)?;
    let mut out = TotalDiffOperator::new(op.n, op.m);
    for ((j, index), a) in &d_n.coefficients {
        add_coeff(&mut out, *j, index.clone(), Expr::mul2(x_n.clone(), a.clone()));
    }
    for ((j, index), a) in &op.coefficients {
        add_coeff(&mut out, *j, index.clone(), a.clone());
    }
    let s = sign((space.n as u32).saturating_sub(1));
    Ok(scale(&out, &s))
}

/// `D_i ∘ □` as a total differential operator:
/// `D_i(Σ a^I D_I f) = Σ D_i(a^I) D_I f + Σ a^I D_{I+1_i} f`.
fn compose_with_total_derivative(
    space: &JetSpace,
    axis: usize,
    op: &TotalDiffOperator,
) -> Result<TotalDiffOperator, VariationalError> {
    let mut out = TotalDiffOperator::new(op.n, op.m);
    for ((j, index), a) in &op.coefficients {
        add_coeff(&mut out, *j, index.clone(), total_derivative(space, a, axis)?);
        add_coeff(&mut out, *j, index.bump(axis), a.clone());
    }
    Ok(out)
}

fn add_coeff(op: &mut TotalDiffOperator, j: usize, index: MultiIndex, e: Expr) {
    if e.is_zero() {
        return;
    }
    let entry = op
        .coefficients
        .entry((j, index))
        .or_insert_with(Expr::zero);
    *entry = Expr::add2(entry.clone(), e);
    if entry.is_zero() {
        // keep the map free of stored zeros
    }
    op.coefficients.retain(|_, v| !v.is_zero());
}

fn scale(op: &TotalDiffOperator, factor: &Expr) -> TotalDiffOperator {
    let mut out = TotalDiffOperator::new(op.n, op.m);
    for ((j, index), a) in &op.coefficients {
        out.set(*j, index.clone(), Expr::mul2(factor.clone(), a.clone()));
    }
    out
}

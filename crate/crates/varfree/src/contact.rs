//! Contact lifts of point transformations and transversality conditions.
//!
//! A point transformation `F: (t, y) -> (x, u)` of the configuration
//! space lifts to first-order jets so that prolonged graphs map to
//! prolonged graphs. On a graph, each target derivative solves the
//! linear system `Σ_b u_b D_{t_a}(x^b) = D_{t_a}(u)`, so the lift comes
//! out Cramer-style as a ratio of determinants of total derivatives; for
//! `n = 1` this is `u' = (u_t + y' u_y)/(x_t + y' x_y)`. The determinant
//! `det(D_{x_a}(t^b))` of the inverse components is the total Jacobian,
//! the change-of-variables factor for Lagrangian densities.
//!
//! A first-order Lagrangian yields the momentum-energy vector
//! `H = (∂L/∂y_1, .., ∂L/∂y_n, y_i ∂L/∂y_i - L)`; the curved-boundary
//! natural boundary condition at a boundary point is `ν · H = 0` with
//! `ν` the boundary normal. The sign convention pairs `H` with the
//! Euclidean normal — for the area density `H` is the unit normal of the
//! graph itself — and the zero set is orientation-independent.
//! [`verify_naturality`] replays the flatten-then-derive route against
//! this direct form numerically.

use crate::jet::{
    diff_partial, evaluate, restrict_to_boundary, simplify, total_derivative, EvalError, Expr,
    JetError, JetPoint, JetSpace, JetVar, MultiIndex,
};
use crate::variational::{Lagrangian, VariationalError};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("transformation component {0} contains jet variables of order >= 1")]
    NonZeroOrderComponent(usize),
    #[error("expected {expected} components, got {got}")]
    WrongComponentCount { expected: usize, got: usize },
    #[error("inverse round-trip failed: max error {max_err:.3e} over sampled points")]
    InverseRoundTrip { max_err: f64 },
    #[error("transformation has no inverse components; symbolic inversion is not provided")]
    MissingInverse,
    #[error("singular lift: the total-Jacobian denominator vanishes identically")]
    SingularLift,
    #[error("boundary curve is irregular near sigma = {sigma}")]
    IrregularCurve { sigma: f64 },
    #[error("transformation is not boundary-friendly: max |x_n| = {max_residual:.3e} on the boundary")]
    NotBoundaryFriendly { max_residual: f64 },
    #[error("degenerate tangent frame or vanishing gradient at the requested point")]
    DegenerateFrame,
    #[error("point is not on the hypersurface: |phi| = {phi:.3e}")]
    OffSurface { phi: f64 },
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("lagrangian must be first order with m = 1 and n = {expected}")]
    LagrangianShape { expected: usize },
}

fn zero_order_only(e: &Expr) -> bool {
    e.vars().iter().all(|v| v.order() == 0)
}

/// Zero-order configuration point `(t^1, .., t^n, y)` as a jet point.
fn config_point(n: usize, coords: &[f64]) -> JetPoint {
    let mut p = JetPoint::new();
    for (i, &c) in coords.iter().take(n).enumerate() {
        p.set(JetVar::Independent(i), c);
    }
    p.set(JetVar::dependent_base(0, n), coords[n]);
    p
}

/// A smooth map `(t, y) -> (x, u)` of the `(n+1)`-dimensional
/// configuration space. Components are expressions in the zero-order
/// variables only; the optional inverse is required for pullbacks.
#[derive(Debug, Clone)]
pub struct PointTransformation {
    n: usize,
    /// `x^1(t,y), .., x^n(t,y), u(t,y)`.
    forward: Vec<Expr>,
    /// `t^1(x,u), .., t^n(x,u), y(x,u)` when supplied.
    inverse: Option<Vec<Expr>>,
}

impl PointTransformation {
    pub fn new(n: usize, forward: Vec<Expr>) -> Result<Self, ContactError> {
        if forward.len() != n + 1 {
            return Err(ContactError::WrongComponentCount { expected: n + 1, got: forward.len() });
        }
        for (k, c) in forward.iter().enumerate() {
            if !zero_order_only(c) {
                return Err(ContactError::NonZeroOrderComponent(k));
            }
        }
        Ok(PointTransformation { n, forward, inverse: None })
    }

    /// Attaches inverse components and verifies the composition
    /// round-trips numerically (tolerance 1e-8 at sampled points).
    pub fn with_inverse(
        n: usize,
        forward: Vec<Expr>,
        inverse: Vec<Expr>,
    ) -> Result<Self, ContactError> {
        let mut f = PointTransformation::new(n, forward)?;
        if inverse.len() != n + 1 {
            return Err(ContactError::WrongComponentCount { expected: n + 1, got: inverse.len() });
        }
        for (k, c) in inverse.iter().enumerate() {
            if !zero_order_only(c) {
                return Err(ContactError::NonZeroOrderComponent(k));
            }
        }
        f.inverse = Some(inverse);
        f.check_round_trip(1e-8)?;
        Ok(f)
    }

    pub fn identity(n: usize) -> Self {
        let mut forward: Vec<Expr> = (0..n).map(Expr::independent).collect();
        forward.push(Expr::var(JetVar::dependent_base(0, n)));
        PointTransformation { n, forward: forward.clone(), inverse: Some(forward) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self) -> &[Expr] {
        &self.forward
    }

    pub fn inverse(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    /// The inverse map as a transformation in its own right (forward and
    /// inverse components swapped).
    pub fn inverse_transformation(&self) -> Result<PointTransformation, ContactError> {
        let inverse = self.inverse.clone().ok_or(ContactError::MissingInverse)?;
        Ok(PointTransformation {
            n: self.n,
            forward: inverse,
            inverse: Some(self.forward.clone()),
        })
    }

    /// Applies the zero-order map to `(t^1.., y)`.
    pub fn apply(&self, coords: &[f64]) -> Result<Vec<f64>, ContactError> {
        let p = config_point(self.n, coords);
        let mut out = Vec::with_capacity(self.n + 1);
        for c in &self.forward {
            out.push(evaluate(c, &p)?);
        }
        Ok(out)
    }

    pub fn apply_inverse(&self, coords: &[f64]) -> Result<Vec<f64>, ContactError> {
        let inv = self.inverse.as_ref().ok_or(ContactError::MissingInverse)?;
        let p = config_point(self.n, coords);
        let mut out = Vec::with_capacity(self.n + 1);
        for c in inv {
            out.push(evaluate(c, &p)?);
        }
        Ok(out)
    }

    fn check_round_trip(&self, tol: f64) -> Result<(), ContactError> {
        let mut rng = StdRng::seed_from_u64(0x0f2e_55aa);
        let mut valid = 0;
        let mut attempts = 0;
        let mut max_err: f64 = 0.0;
        while valid < 20 && attempts < 400 {
            attempts += 1;
            let p: Vec<f64> = (0..=self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = match self.apply(&p) {
                Ok(q) => q,
                Err(_) => continue,
            };
            let back = match self.apply_inverse(&q) {
                Ok(b) => b,
                Err(_) => continue,
            };
            valid += 1;
            for (a, b) in p.iter().zip(back.iter()) {
                max_err = max_err.max((a - b).abs());
            }
        }
        if valid == 0 || max_err > tol {
            return Err(ContactError::InverseRoundTrip { max_err });
        }
        Ok(())
    }
}

/// Symbolic determinant by Laplace expansion; fine for the small `n`
/// this module handles.
fn det_expr(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => Expr::sub(
            Expr::mul2(m[0][0].clone(), m[1][1].clone()),
            Expr::mul2(m[0][1].clone(), m[1][0].clone()),
        ),
        k => {
            let mut terms = Vec::with_capacity(k);
            for col in 0..k {
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = Expr::mul2(m[0][col].clone(), det_expr(&minor));
                terms.push(if col % 2 == 0 { term } else { Expr::neg(term) });
            }
            Expr::add(terms)
        }
    }
}

fn det_f64(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        k => {
            let mut acc = 0.0;
            for col in 0..k {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let term = m[0][col] * det_f64(&minor);
                acc += if col % 2 == 0 { term } else { -term };
            }
            acc
        }
    }
}

/// Total-derivative matrix of the map's first `n` components and the
/// right-hand column of its last component, in the map's source chart.
fn lift_system(f: &PointTransformation) -> Result<(Vec<Vec<Expr>>, Vec<Expr>), ContactError> {
    let space = JetSpace::new(f.n, 1, 1);
    let mut matrix = Vec::with_capacity(f.n);
    let mut rhs = Vec::with_capacity(f.n);
    for a in 0..f.n {
        let mut row = Vec::with_capacity(f.n);
        for b in 0..f.n {
            row.push(total_derivative(&space, &f.forward[b], a)?);
        }
        matrix.push(row);
        rhs.push(total_derivative(&space, &f.forward[f.n], a)?);
    }
    Ok((matrix, rhs))
}

/// First-order contact lift: each target derivative `u_i` as an
/// expression in the source first-order jet variables `(t, y, y_1..y_n)`.
pub fn lift_first_order(f: &PointTransformation) -> Result<Vec<Expr>, ContactError> {
    let (matrix, rhs) = lift_system(f)?;
    let den = simplify(&det_expr(&matrix));
    if crate::jet::equivalent_default(&den, &Expr::zero())? {
        return Err(ContactError::SingularLift);
    }
    let mut out = Vec::with_capacity(f.n);
    for b in 0..f.n {
        let mut replaced = matrix.clone();
        for (a, row) in replaced.iter_mut().enumerate() {
            row[b] = rhs[a].clone();
        }
        out.push(Expr::div(simplify(&det_expr(&replaced)), den.clone()));
    }
    Ok(out)
}

/// The total Jacobian `det(D_{x_a}(t^b))` expressed in target jet
/// variables; for `n = 1` this is `D_x(t) = t_x + u' t_u`. Requires the
/// inverse components.
pub fn total_jacobian(f: &PointTransformation) -> Result<Expr, ContactError> {
    let g = f.inverse_transformation()?;
    let (matrix, _) = lift_system(&g)?;
    let jac = simplify(&det_expr(&matrix));
    if crate::jet::equivalent_default(&jac, &Expr::zero())? {
        return Err(ContactError::SingularLift);
    }
    Ok(jac)
}

/// Pullback of a first-order Lagrangian through `F`: compose with the
/// inverse map and inverse lift, then multiply by the total Jacobian.
/// Action integrals are preserved on matched graphs.
pub fn pullback_lagrangian(
    f: &PointTransformation,
    lagrangian: &Lagrangian,
) -> Result<Lagrangian, ContactError> {
    let n = f.n;
    if lagrangian.order() != 1 || lagrangian.m() != 1 || lagrangian.n() != n {
        return Err(ContactError::LagrangianShape { expected: n });
    }
    let g = f.inverse_transformation()?;
    let inverse_lift = lift_first_order(&g)?;
    let mut map = std::collections::BTreeMap::new();
    for i in 0..n {
        map.insert(JetVar::Independent(i), g.forward()[i].clone());
    }
    map.insert(JetVar::dependent_base(0, n), g.forward()[n].clone());
    for (i, lifted) in inverse_lift.iter().enumerate() {
        map.insert(
            JetVar::Dependent { dep: 0, index: MultiIndex::unit(n, i) },
            lifted.clone(),
        );
    }
    let composed = lagrangian.density().substitute(&map);
    let jac = total_jacobian(f)?;
    let density = simplify(&Expr::mul2(composed, jac));
    Ok(Lagrangian::new(n, 1, 1, density)?)
}

/// A parametrized boundary curve `σ -> (t_γ(σ), y_γ(σ))` in the plane;
/// components are expressions in a single parameter variable. A curve
/// collapsed to a point models a pinned endpoint.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    t_component: Expr,
    y_component: Expr,
    degenerate: bool,
}

impl BoundaryCurve {
    /// Regular curve; regularity `γ'(σ) != (0,0)` is checked at sampled
    /// parameters in `[-2, 2]`.
    pub fn new(t_component: Expr, y_component: Expr) -> Result<Self, ContactError> {
        for (k, c) in [&t_component, &y_component].into_iter().enumerate() {
            if !c
                .vars()
                .iter()
                .all(|v| matches!(v, JetVar::Independent(0)))
            {
                return Err(ContactError::NonZeroOrderComponent(k));
            }
        }
        let curve = BoundaryCurve { t_component, y_component, degenerate: false };
        for k in 0..=20 {
            let sigma = -2.0 + 0.2 * k as f64;
            if let Ok((dt, dy)) = curve.tangent(sigma) {
                if dt.hypot(dy) < 1e-12 {
                    return Err(ContactError::IrregularCurve { sigma });
                }
            }
        }
        Ok(curve)
    }

    /// The degenerate option: a boundary "curve" collapsed to a point,
    /// for mixed fixed/free endpoint problems.
    pub fn point(t: f64, y: f64) -> Self {
        BoundaryCurve {
            t_component: Expr::float(t),
            y_component: Expr::float(y),
            degenerate: true,
        }
    }

    pub fn is_point(&self) -> bool {
        self.degenerate
    }

    pub fn components(&self) -> (&Expr, &Expr) {
        (&self.t_component, &self.y_component)
    }

    fn param_point(sigma: f64) -> JetPoint {
        let mut p = JetPoint::new();
        p.set(JetVar::Independent(0), sigma);
        p
    }

    pub fn at(&self, sigma: f64) -> Result<(f64, f64), ContactError> {
        let p = Self::param_point(sigma);
        Ok((evaluate(&self.t_component, &p)?, evaluate(&self.y_component, &p)?))
    }

    /// `γ'(σ)`, evaluated from the symbolic derivative of the components.
    pub fn tangent(&self, sigma: f64) -> Result<(f64, f64), ContactError> {
        let p = Self::param_point(sigma);
        let dt = evaluate(&diff_partial(&self.t_component, &JetVar::Independent(0)), &p)?;
        let dy = evaluate(&diff_partial(&self.y_component, &JetVar::Independent(0)), &p)?;
        Ok((dt, dy))
    }
}

/// A boundary hypersurface of the `(t^1..t^n, y)` configuration space:
/// either a level set `Φ = 0` or a parametrization by `n` parameters.
#[derive(Debug, Clone)]
pub enum BoundaryHypersurface {
    LevelSet { n: usize, phi: Expr },
    Parametrized { n: usize, components: Vec<Expr> },
}

impl BoundaryHypersurface {
    pub fn level_set(n: usize, phi: Expr) -> Result<Self, ContactError> {
        if !zero_order_only(&phi) {
            return Err(ContactError::NonZeroOrderComponent(0));
        }
        Ok(BoundaryHypersurface::LevelSet { n, phi })
    }

    pub fn parametrized(n: usize, components: Vec<Expr>) -> Result<Self, ContactError> {
        if components.len() != n + 1 {
            return Err(ContactError::WrongComponentCount { expected: n + 1, got: components.len() });
        }
        Ok(BoundaryHypersurface::Parametrized { n, components })
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundaryHypersurface::LevelSet { n, .. } => *n,
            BoundaryHypersurface::Parametrized { n, .. } => *n,
        }
    }

    /// Unit normal, ordered `(t^1, .., t^n, y)`.
    ///
    /// For a level set, `point` is a configuration point on the surface
    /// (`|Φ| <= 1e-8`) and the normal is the normalized gradient. For a
    /// parametrization, `point` is the parameter vector and the normal
    /// is the signed-minor cross product of the tangent frame.
    pub fn normal(&self, point: &[f64]) -> Result<Vec<f64>, ContactError> {
        match self {
            BoundaryHypersurface::LevelSet { n, phi } => {
                let p = config_point(*n, point);
                let residual = evaluate(phi, &p)?;
                if residual.abs() > 1e-8 {
                    return Err(ContactError::OffSurface { phi: residual });
                }
                let mut grad = Vec::with_capacity(n + 1);
                for i in 0..*n {
                    grad.push(evaluate(&diff_partial(phi, &JetVar::Independent(i)), &p)?);
                }
                grad.push(evaluate(&diff_partial(phi, &JetVar::dependent_base(0, *n)), &p)?);
                normalize(grad)
            }
            BoundaryHypersurface::Parametrized { n, components } => {
                let mut p = JetPoint::new();
                for (i, &v) in point.iter().take(*n).enumerate() {
                    p.set(JetVar::Independent(i), v);
                }
                // frame rows: ∂(components)/∂param_a
                let mut frame = Vec::with_capacity(*n);
                for a in 0..*n {
                    let mut row = Vec::with_capacity(*n + 1);
                    for c in components {
                        row.push(evaluate(&diff_partial(c, &JetVar::Independent(a)), &p)?);
                    }
                    frame.push(row);
                }
                normalize(cross_product(&frame))
            }
        }
    }

    pub fn phi_residual(&self, point: &[f64]) -> Result<f64, ContactError> {
        match self {
            BoundaryHypersurface::LevelSet { n, phi } => {
                Ok(evaluate(phi, &config_point(*n, point))?)
            }
            BoundaryHypersurface::Parametrized { .. } => {
                Err(ContactError::Unsupported("phi residual needs a level set"))
            }
        }
    }
}

/// Generalized cross product of `n` row vectors in R^{n+1}: the unique
/// vector with `ν · w = det(rows.., w)`.
fn cross_product(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let minor: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != k)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let sign = if (n + 1 + k) % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * det_f64(&minor));
    }
    out
}

fn normalize(v: Vec<f64>) -> Result<Vec<f64>, ContactError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(ContactError::DegenerateFrame);
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}

/// The 1D endpoint transversality form
/// `y_γ'(σ0) ∂L/∂y' - t_γ'(σ0) (y' ∂L/∂y' - L)` as an expression in
/// `(t, y, y')`. Its zero at the endpoint jet is the curved-boundary
/// natural boundary condition.
pub fn transversality_1d(
    lagrangian: &Lagrangian,
    gamma: &BoundaryCurve,
    sigma0: f64,
) -> Result<Expr, ContactError> {
    if lagrangian.n() != 1 || lagrangian.m() != 1 || lagrangian.order() != 1 {
        return Err(ContactError::LagrangianShape { expected: 1 });
    }
    let (dt, dy) = gamma.tangent(sigma0)?;
    let y_prime = Expr::dependent(0, MultiIndex::new(vec![1]));
    let dl_dyp = diff_partial(lagrangian.density(), &JetVar::Dependent {
        dep: 0,
        index: MultiIndex::new(vec![1]),
    });
    let energy = Expr::sub(
        Expr::mul2(y_prime, dl_dyp.clone()),
        lagrangian.density().clone(),
    );
    Ok(simplify(&Expr::sub(
        Expr::mul2(Expr::float(dy), dl_dyp),
        Expr::mul2(Expr::float(dt), energy),
    )))
}

/// The momentum-energy vector
/// `H = (∂L/∂y_1, .., ∂L/∂y_n, y_i ∂L/∂y_i - L)` of a first-order
/// Lagrangian; the boundary condition at a point is `ν · H = 0`,
/// assembled by the caller with a [`BoundaryHypersurface`]. For the
/// area density, `H` is the unit normal of the graph.
pub fn generalized_transversality(lagrangian: &Lagrangian) -> Result<Vec<Expr>, ContactError> {
    if lagrangian.order() != 1 || lagrangian.m() != 1 {
        return Err(ContactError::LagrangianShape { expected: lagrangian.n() });
    }
    let n = lagrangian.n();
    let mut h = Vec::with_capacity(n + 1);
    let mut energy_terms = Vec::with_capacity(n + 1);
    for i in 0..n {
        let partial = diff_partial(lagrangian.density(), &JetVar::Dependent {
            dep: 0,
            index: MultiIndex::unit(n, i),
        });
        energy_terms.push(Expr::mul2(
            Expr::dependent(0, MultiIndex::unit(n, i)),
            partial.clone(),
        ));
        h.push(simplify(&partial));
    }
    energy_terms.push(Expr::neg(lagrangian.density().clone()));
    h.push(simplify(&Expr::add(energy_terms)));
    Ok(h)
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Parameter range for sampling the boundary.
    pub sigma_range: (f64, f64),
    /// Range for the random first-order jet components.
    pub jet_range: (f64, f64),
    /// Boundary-friendliness tolerance on |x_n| at mapped points.
    pub boundary_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 100,
            seed: 0x0bad_cafe,
            sigma_range: (-1.0, 1.0),
            jet_range: (-1.5, 1.5),
            boundary_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NaturalityReport {
    pub samples: usize,
    /// max |flat route - curved route| over the sampled boundary jets
    pub max_discrepancy: f64,
    /// max relative discrepancy |a-b| / (1 + max(|a|,|b|))
    pub max_relative: f64,
    /// worst |x_n| among mapped boundary points
    pub boundary_residual: f64,
}

impl NaturalityReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_relative <= tol
    }
}

/// What the boundary of the source problem is given as.
pub enum BoundarySpec<'a> {
    Curve(&'a BoundaryCurve),
    Surface(&'a BoundaryHypersurface),
}

/// Replays the naturality of the boundary operator numerically: at
/// sampled boundary jets, the flat-chart condition `∂L̃/∂u_n|_{x_n=0}`
/// of the pulled-back Lagrangian must agree with the transversality
/// form evaluated directly in the original coordinates.
///
/// `F` must map the given boundary into `{x_n = 0}` (checked at the
/// sampled points
/// before anything else).
pub fn verify_naturality(
    lagrangian: &Lagrangian,
    f: &PointTransformation,
    boundary: BoundarySpec<'_>,
    opts: &VerifyOptions,
) -> Result<NaturalityReport, ContactError> {
    let n = f.n();
    if lagrangian.order() != 1 || lagrangian.m() != 1 || lagrangian.n() != n {
        return Err(ContactError::LagrangianShape { expected: n });
    }
    let g = f.inverse_transformation()?;
    let mut rng = StdRng::seed_from_u64(opts.seed);

    // sample boundary points and check boundary-friendliness
    let mut points = Vec::with_capacity(opts.samples);
    let mut boundary_residual: f64 = 0.0;
    let mut attempts = 0;
    while points.len() < opts.samples && attempts < 40 * opts.samples {
        attempts += 1;
        let source: Vec<f64> = match boundary {
            BoundarySpec::Curve(curve) => {
                if n != 1 {
                    return Err(ContactError::Unsupported("curve boundary requires n = 1"));
                }
                let sigma = rng.random_range(opts.sigma_range.0..opts.sigma_range.1);
                match curve.at(sigma) {
                    Ok((t, y)) => vec![t, y],
                    Err(_) => continue,
                }
            }
            BoundarySpec::Surface(surface) => match surface {
                BoundaryHypersurface::Parametrized { components, .. } => {
                    let mut p = JetPoint::new();
                    for i in 0..n {
                        p.set(
                            JetVar::Independent(i),
                            rng.random_range(opts.sigma_range.0..opts.sigma_range.1),
                        );
                    }
                    let vals: Result<Vec<f64>, _> =
                        components.iter().map(|c| evaluate(c, &p)).collect();
                    match vals {
                        Ok(v) => v,
                        Err(_) => continue,
                    }
                }
                BoundaryHypersurface::LevelSet { .. } => {
                    return Err(ContactError::Unsupported(
                        "level-set boundaries need a parametrization for sampling",
                    ))
                }
            },
        };
        let image = match f.apply(&source) {
            Ok(q) => q,
            Err(_) => continue,
        };
        boundary_residual = boundary_residual.max(image[n - 1].abs());
        points.push((source, image));
    }
    if points.len() < opts.samples {
        return Err(ContactError::Unsupported(
            "could not sample enough boundary points inside the map's domain",
        ));
    }
    if boundary_residual > opts.boundary_tol {
        return Err(ContactError::NotBoundaryFriendly { max_residual: boundary_residual });
    }

    // flat route, symbolic once: NBC of the pullback at r = 1
    let pulled = pullback_lagrangian(f, lagrangian)?;
    let target_space = JetSpace::new(n, 1, 1);
    let dl_dun = diff_partial(pulled.density(), &JetVar::Dependent {
        dep: 0,
        index: MultiIndex::unit(n, n - 1),
    });
    let flat_nbc = restrict_to_boundary(&target_space, &dl_dun);

    // curved route pieces, symbolic once
    let lift = lift_first_order(f)?;
    let h_partials: Vec<Expr> = (0..n)
        .map(|i| {
            diff_partial(lagrangian.density(), &JetVar::Dependent {
                dep: 0,
                index: MultiIndex::unit(n, i),
            })
        })
        .collect();

    let mut max_discrepancy: f64 = 0.0;
    let mut max_relative: f64 = 0.0;
    let mut used = 0;
    for (source, image) in &points {
        // random source jet at the boundary point
        let mut source_jet = config_point(n, source);
        let mut jet_vals = Vec::with_capacity(n);
        for i in 0..n {
            let v = rng.random_range(opts.jet_range.0..opts.jet_range.1);
            jet_vals.push(v);
            source_jet.set(JetVar::Dependent { dep: 0, index: MultiIndex::unit(n, i) }, v);
        }

        // lifted target jet
        let lifted: Result<Vec<f64>, EvalError> =
            lift.iter().map(|e| evaluate(e, &source_jet)).collect();
        let lifted = match lifted {
            Ok(v) => v,
            Err(_) => continue, // singular lift at this sample
        };
        let mut target_jet = config_point(n, image);
        for (i, &v) in lifted.iter().enumerate() {
            target_jet.set(JetVar::Dependent { dep: 0, index: MultiIndex::unit(n, i) }, v);
        }

        // (a) flat-chart natural boundary condition of the pullback
        let a = match evaluate(&flat_nbc, &target_jet) {
            Ok(v) => v,
            Err(_) => continue,
        };

        // (b) transversality directly in source coordinates, contracted
        // against the boundary frame induced by the inverse map
        let b = {
            // frame rows: tangential x_a-partials then the u-partial of
            // (t^1..t^n, y), evaluated at the image point
            let image_point = config_point(n, image);
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
            for a_idx in 0..n - 1 {
                let mut row = Vec::with_capacity(n + 1);
                for c in g.forward() {
                    row.push(evaluate(&diff_partial(c, &JetVar::Independent(a_idx)), &image_point)?);
                }
                rows.push(row);
            }
            let mut u_row = Vec::with_capacity(n + 1);
            for c in g.forward() {
                u_row.push(evaluate(&diff_partial(c, &JetVar::dependent_base(0, n)), &image_point)?);
            }
            rows.push(u_row);

            // frame minors: ν_i = det(t-cols with y in slot i),
            // ν_last = det(t-cols); they pair with ∂L/∂y_i and
            // L - y_i ∂L/∂y_i respectively
            let mut value = 0.0;
            let mut energy = evaluate(lagrangian.density(), &source_jet)?;
            for i in 0..n {
                let mat: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|row| (0..n).map(|c| if c == i { row[n] } else { row[c] }).collect())
                    .collect();
                let hp = evaluate(&h_partials[i], &source_jet)?;
                value += det_f64(&mat) * hp;
                energy -= jet_vals[i] * hp;
            }
            let jac_mat: Vec<Vec<f64>> = rows.iter().map(|row| row[..n].to_vec()).collect();
            value + det_f64(&jac_mat) * energy
        };

        let diff = (a - b).abs();
        max_discrepancy = max_discrepancy.max(diff);
        max_relative = max_relative.max(diff / (1.0 + a.abs().max(b.abs())));
        used += 1;
    }
    if used == 0 {
        return Err(ContactError::SingularLift);
    }
    Ok(NaturalityReport {
        samples: used,
        max_discrepancy,
        max_relative,
        boundary_residual,
    })
}

/// The boundary curve traced by `{x_n = 0}` under the inverse map,
/// parametrized by the flat chart's `u` coordinate (n = 1 only).
pub fn induced_boundary_curve(f: &PointTransformation) -> Result<BoundaryCurve, ContactError> {
    if f.n() != 1 {
        return Err(ContactError::Unsupported("induced curve requires n = 1"));
    }
    let g = f.inverse_transformation()?;
    let mut map = std::collections::BTreeMap::new();
    map.insert(JetVar::Independent(0), Expr::zero());
    map.insert(JetVar::dependent_base(0, 1), Expr::independent(0));
    BoundaryCurve::new(g.forward()[0].substitute(&map), g.forward()[1].substitute(&map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{equivalent_default, parse_with_order, EquivOptions, VarTable};

    fn ty_lagr(src: &str, n: usize) -> Lagrangian {
        let space = JetSpace::new(n, 1, 1);
        let density = parse_with_order(src, &space, &VarTable::ty(n), 1).unwrap();
        Lagrangian::new(n, 1, 1, density).unwrap()
    }

    fn ty_expr(src: &str, n: usize) -> Expr {
        let space = JetSpace::new(n, 1, 1);
        parse_with_order(src, &space, &VarTable::ty(n), 1).unwrap()
    }

    fn param(src: &str) -> Expr {
        let space = JetSpace { n: 1, m: 0, cap: 0 };
        crate::jet::parse(src, &space, &VarTable::param("s")).unwrap()
    }

    fn rotation(theta: f64) -> PointTransformation {
        let (s, c) = theta.sin_cos();
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let forward = vec![
            Expr::sub(Expr::mul2(Expr::float(c), t.clone()), Expr::mul2(Expr::float(s), y.clone())),
            Expr::add2(Expr::mul2(Expr::float(s), t), Expr::mul2(Expr::float(c), y)),
        ];
        let x = Expr::independent(0);
        let u = Expr::var(JetVar::dependent_base(0, 1));
        let inverse = vec![
            Expr::add2(Expr::mul2(Expr::float(c), x.clone()), Expr::mul2(Expr::float(s), u.clone())),
            Expr::sub(Expr::mul2(Expr::float(c), u), Expr::mul2(Expr::float(s), x)),
        ];
        PointTransformation::with_inverse(1, forward, inverse).unwrap()
    }

    #[test]
    fn identity_lift_is_trivial() {
        let f = PointTransformation::identity(1);
        let lift = lift_first_order(&f).unwrap();
        assert_eq!(lift.len(), 1);
        assert_eq!(lift[0], Expr::dependent(0, MultiIndex::new(vec![1])));
        assert!(total_jacobian(&f).unwrap().is_one());
    }

    #[test]
    fn swap_lift_inverts_slope() {
        // x = y, u = t: u' = 1/y'
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let f = PointTransformation::with_inverse(
            1,
            vec![y.clone(), t.clone()],
            vec![y, t],
        )
        .unwrap();
        let lift = lift_first_order(&f).unwrap();
        let expected = Expr::div(Expr::one(), Expr::dependent(0, MultiIndex::new(vec![1])));
        assert!(equivalent_default(&lift[0], &expected).unwrap());
        // swap: t = u, so D_x(t) = u'
        let jac = total_jacobian(&f).unwrap();
        assert!(equivalent_default(&jac, &Expr::dependent(0, MultiIndex::new(vec![1]))).unwrap());
    }

    #[test]
    fn rotation_lift_matches_moebius_form() {
        // rotation by θ: u' = (sinθ + y' cosθ)/(cosθ - y' sinθ)
        let theta = 0.3;
        let f = rotation(theta);
        let lift = lift_first_order(&f).unwrap();
        let yp = Expr::dependent(0, MultiIndex::new(vec![1]));
        let expected = Expr::div(
            Expr::add2(Expr::float(theta.sin()), Expr::mul2(Expr::float(theta.cos()), yp.clone())),
            Expr::sub(Expr::float(theta.cos()), Expr::mul2(Expr::float(theta.sin()), yp)),
        );
        // compare away from the pole y' = cot θ
        let opts = EquivOptions::default().with_range(-1.5, 1.5);
        assert!(crate::jet::equivalent(&lift[0], &expected, &opts).unwrap());
    }

    #[test]
    fn lift_contact_property_on_graphs() {
        // the lifted slope equals the numeric slope of the image curve
        let f = rotation(0.25);
        let y_of_t = |t: f64| 0.4 * (1.3 * t).sin() + 0.2 * t;
        let dy_of_t = |t: f64| 0.4 * 1.3 * (1.3 * t).cos() + 0.2;
        let lift = lift_first_order(&f).unwrap();
        for k in 0..20 {
            let t0 = -1.0 + 0.1 * k as f64;
            let h = 1e-5;
            let img = |t: f64| f.apply(&[t, y_of_t(t)]).unwrap();
            let p_plus = img(t0 + h);
            let p_minus = img(t0 - h);
            let numeric_slope = (p_plus[1] - p_minus[1]) / (p_plus[0] - p_minus[0]);
            let mut jet = JetPoint::new();
            jet.set(JetVar::Independent(0), t0);
            jet.set(JetVar::dependent_base(0, 1), y_of_t(t0));
            jet.set(JetVar::dependent(0, MultiIndex::new(vec![1])), dy_of_t(t0));
            let lifted = evaluate(&lift[0], &jet).unwrap();
            assert!(
                (numeric_slope - lifted).abs() <= 1e-6 * (1.0 + lifted.abs()),
                "slope mismatch at t0={t0}: {numeric_slope} vs {lifted}"
            );
        }
    }

    #[test]
    fn inverse_lift_is_inverse_on_jets() {
        let f = rotation(0.4);
        let g = f.inverse_transformation().unwrap();
        let lift_f = lift_first_order(&f).unwrap();
        let lift_g = lift_first_order(&g).unwrap();
        for k in 0..10 {
            let (t, y, yp) = (0.3 * k as f64 - 1.0, 0.2 * k as f64 - 0.7, 0.25 * k as f64 - 1.2);
            let mut jet = JetPoint::new();
            jet.set(JetVar::Independent(0), t);
            jet.set(JetVar::dependent_base(0, 1), y);
            jet.set(JetVar::dependent(0, MultiIndex::new(vec![1])), yp);
            let up = evaluate(&lift_f[0], &jet).unwrap();
            let img = f.apply(&[t, y]).unwrap();
            let mut jet_img = JetPoint::new();
            jet_img.set(JetVar::Independent(0), img[0]);
            jet_img.set(JetVar::dependent_base(0, 1), img[1]);
            jet_img.set(JetVar::dependent(0, MultiIndex::new(vec![1])), up);
            let back = evaluate(&lift_g[0], &jet_img).unwrap();
            assert!((back - yp).abs() < 1e-9, "jet round-trip failed: {yp} vs {back}");
        }
    }

    #[test]
    fn dilation_jacobian_is_constant() {
        // t = 2x (inverse), i.e. x = t/2, u = y
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let x = Expr::independent(0);
        let u = Expr::var(JetVar::dependent_base(0, 1));
        let f = PointTransformation::with_inverse(
            1,
            vec![Expr::div(t, Expr::int(2)), y],
            vec![Expr::mul2(Expr::int(2), x), u],
        )
        .unwrap();
        let jac = total_jacobian(&f).unwrap();
        assert_eq!(jac.as_const().map(|c| c.to_f64()), Some(2.0));
        // L = y'^2/2 pulls back to u'^2/4
        let l = ty_lagr("y_t^2/2", 1);
        let pulled = pullback_lagrangian(&f, &l).unwrap();
        let expected = ty_expr("y_t^2/4", 1);
        assert!(equivalent_default(pulled.density(), &expected).unwrap());
    }

    #[test]
    fn identity_pullback_is_identity() {
        let l = ty_lagr("y_t^2/2 + sin(y)*t", 1);
        let f = PointTransformation::identity(1);
        let pulled = pullback_lagrangian(&f, &l).unwrap();
        assert!(equivalent_default(pulled.density(), l.density()).unwrap());
    }

    #[test]
    fn arclength_is_rotation_invariant() {
        let l = ty_lagr("sqrt(1 + y_t^2)", 1);
        let f = rotation(0.3); // small angle keeps the lift regular on the box
        let pulled = pullback_lagrangian(&f, &l).unwrap();
        let opts = EquivOptions::default().with_range(-1.5, 1.5);
        assert!(crate::jet::equivalent(pulled.density(), l.density(), &opts).unwrap());
    }

    #[test]
    fn transversality_arclength_is_orthogonality() {
        // L = sqrt(1+y'^2), generic curve: (y_γ' y' + t_γ')/sqrt(1+y'^2)
        let l = ty_lagr("sqrt(1 + y_t^2)", 1);
        let gamma = BoundaryCurve::new(param("s + 1"), param("2*s")).unwrap();
        let cond = transversality_1d(&l, &gamma, 0.5).unwrap();
        let expected = ty_expr("(2*y_t + 1)/sqrt(1 + y_t^2)", 1);
        assert!(equivalent_default(&cond, &expected).unwrap());
    }

    #[test]
    fn vertical_line_gives_flat_free_end() {
        // t_γ' = 0: condition reduces to y_γ' ∂L/∂y'
        let l = ty_lagr("y_t^2/2 + y", 1);
        let gamma = BoundaryCurve::new(param("1"), param("s")).unwrap();
        let cond = transversality_1d(&l, &gamma, 0.0).unwrap();
        assert!(equivalent_default(&cond, &ty_expr("y_t", 1)).unwrap());
    }

    #[test]
    fn horizontal_line_gives_energy_condition() {
        // L = y'^2/2, y_γ' = 0: condition is -t_γ' y'^2/2
        let l = ty_lagr("y_t^2/2", 1);
        let gamma = BoundaryCurve::new(param("s"), param("3")).unwrap();
        let cond = transversality_1d(&l, &gamma, 1.0).unwrap();
        assert!(equivalent_default(&cond, &ty_expr("-y_t^2/2", 1)).unwrap());
    }

    #[test]
    fn transversality_scales_with_parametrization() {
        let l = ty_lagr("sqrt(1 + y_t^2) + y^2", 1);
        let slow = BoundaryCurve::new(param("s"), param("s^2 + 1")).unwrap();
        let fast = BoundaryCurve::new(param("2*s"), param("4*s^2 + 1")).unwrap();
        // same point: slow at σ=1, fast at σ=1/2; tangents differ by 2
        let c_slow = transversality_1d(&l, &slow, 1.0).unwrap();
        let c_fast = transversality_1d(&l, &fast, 0.5).unwrap();
        let doubled = Expr::mul2(Expr::int(2), c_slow);
        assert!(equivalent_default(&c_fast, &doubled).unwrap());
    }

    #[test]
    fn area_h_is_unit_graph_normal() {
        let l = ty_lagr("sqrt(1 + y_t1^2 + y_t2^2)", 2);
        let h = generalized_transversality(&l).unwrap();
        let w = ty_expr("sqrt(1 + y_t1^2 + y_t2^2)", 2);
        let expected = [
            Expr::div(ty_expr("y_t1", 2), w.clone()),
            Expr::div(ty_expr("y_t2", 2), w.clone()),
            Expr::div(Expr::int(-1), w),
        ];
        for (got, want) in h.iter().zip(expected.iter()) {
            assert!(equivalent_default(got, want).unwrap());
        }
        // ‖H‖ = 1 identically
        let norm2 = Expr::add(h.iter().map(|c| Expr::pow_int(c.clone(), 2)).collect());
        assert!(equivalent_default(&norm2, &Expr::one()).unwrap());
    }

    #[test]
    fn h_without_gradient_dependence() {
        // L independent of all y_i: H = (0,..,0,-L)
        let l = ty_lagr("y^2 + t1*t2", 2);
        let h = generalized_transversality(&l).unwrap();
        assert!(h[0].is_zero());
        assert!(h[1].is_zero());
        assert!(equivalent_default(&h[2], &Expr::neg(l.density().clone())).unwrap());
    }

    #[test]
    fn h_at_n1_reduces_to_transversality() {
        // ν ∝ (y_γ', -t_γ') against H gives back transversality_1d
        let l = ty_lagr("y_t^2/2 + sin(y)", 1);
        let gamma = BoundaryCurve::new(param("s^2 + s"), param("s - 1")).unwrap();
        let sigma0 = 0.7;
        let (dt, dy) = gamma.tangent(sigma0).unwrap();
        let h = generalized_transversality(&l).unwrap();
        let nu_dot_h = Expr::add2(
            Expr::mul2(Expr::float(dy), h[0].clone()),
            Expr::mul2(Expr::float(-dt), h[1].clone()),
        );
        let direct = transversality_1d(&l, &gamma, sigma0).unwrap();
        assert!(equivalent_default(&nu_dot_h, &direct).unwrap());
    }

    #[test]
    fn level_set_normals() {
        // flat boundary Φ = t2 (n = 2): ν = (0, 1, 0)
        let flat = BoundaryHypersurface::level_set(2, Expr::independent(1)).unwrap();
        let nu = flat.normal(&[0.3, 0.0, 1.7]).unwrap();
        assert_eq!(nu, vec![0.0, 1.0, 0.0]);

        // cylinder wall Φ = t1^2 + t2^2 - 1 at (1, 0, y): radial
        let phi = Expr::sub(
            Expr::add2(
                Expr::pow_int(Expr::independent(0), 2),
                Expr::pow_int(Expr::independent(1), 2),
            ),
            Expr::one(),
        );
        let wall = BoundaryHypersurface::level_set(2, phi).unwrap();
        let nu = wall.normal(&[1.0, 0.0, 0.8]).unwrap();
        assert!((nu[0] - 1.0).abs() < 1e-12 && nu[1].abs() < 1e-12 && nu[2].abs() < 1e-12);

        // sphere Φ = t1^2 + t2^2 + y^2 - 1 at (0, 0, 1): vertical
        let phi = Expr::sub(
            Expr::add(vec![
                Expr::pow_int(Expr::independent(0), 2),
                Expr::pow_int(Expr::independent(1), 2),
                Expr::pow_int(Expr::var(JetVar::dependent_base(0, 2)), 2),
            ]),
            Expr::one(),
        );
        let sphere = BoundaryHypersurface::level_set(2, phi).unwrap();
        let nu = sphere.normal(&[0.0, 0.0, 1.0]).unwrap();
        assert!((nu[2] - 1.0).abs() < 1e-12);
        // off-surface point is rejected
        assert!(matches!(sphere.normal(&[0.5, 0.0, 0.0]), Err(ContactError::OffSurface { .. })));
    }

    #[test]
    fn parametrized_curve_normal_is_perpendicular() {
        let curve = BoundaryHypersurface::parametrized(
            1,
            vec![param("s^2"), param("s + 1")],
        )
        .unwrap();
        let nu = curve.normal(&[0.6]).unwrap();
        // tangent at s = 0.6 is (1.2, 1)
        assert!((nu[0] * 1.2 + nu[1] * 1.0).abs() < 1e-12);
        assert!(((nu[0] * nu[0] + nu[1] * nu[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naturality_identity_flat() {
        let l = ty_lagr("sqrt(1 + y_t^2)", 1);
        let f = PointTransformation::identity(1);
        // boundary: the y-axis {t = 0}
        let gamma = BoundaryCurve::new(param("0*s"), param("s"));
        // a constant-t component makes the curve regular via y' = 1
        let gamma = gamma.unwrap();
        let report =
            verify_naturality(&l, &f, BoundarySpec::Curve(&gamma), &VerifyOptions::default())
                .unwrap();
        assert!(report.max_discrepancy < 1e-12, "discrepancy {}", report.max_discrepancy);
    }

    #[test]
    fn naturality_rotation() {
        let theta = 0.3f64;
        let l = ty_lagr("sqrt(1 + y_t^2)", 1);
        let f = rotation(theta);
        // the line mapped to {x = 0} is spanned by (sin θ, cos θ)... x = c t - s y = 0
        // i.e. direction (s, c) scaled: γ(σ) = σ (sinθ, cosθ)
        let gamma = BoundaryCurve::new(
            Expr::mul2(Expr::float(theta.sin()), param("s")),
            Expr::mul2(Expr::float(theta.cos()), param("s")),
        )
        .unwrap();
        let report =
            verify_naturality(&l, &f, BoundarySpec::Curve(&gamma), &VerifyOptions::default())
                .unwrap();
        assert!(report.within(1e-9), "relative discrepancy {}", report.max_relative);
    }

    #[test]
    fn naturality_rejects_wrong_boundary() {
        let l = ty_lagr("sqrt(1 + y_t^2)", 1);
        let f = rotation(0.3);
        let gamma = BoundaryCurve::new(param("s"), param("0*s + 1")).unwrap();
        assert!(matches!(
            verify_naturality(&l, &f, BoundarySpec::Curve(&gamma), &VerifyOptions::default()),
            Err(ContactError::NotBoundaryFriendly { .. })
        ));
    }

    #[test]
    fn missing_inverse_is_an_error() {
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let f = PointTransformation::new(1, vec![t, y]).unwrap();
        assert!(matches!(total_jacobian(&f), Err(ContactError::MissingInverse)));
    }

    #[test]
    fn bad_inverse_fails_round_trip() {
        let t = Expr::independent(0);
        let y = Expr::var(JetVar::dependent_base(0, 1));
        let x = Expr::independent(0);
        let u = Expr::var(JetVar::dependent_base(0, 1));
        let res = PointTransformation::with_inverse(
            1,
            vec![Expr::mul2(Expr::int(2), t), y],
            vec![Expr::mul2(Expr::int(3), x), u],
        );
        assert!(matches!(res, Err(ContactError::InverseRoundTrip { .. })));
    }
}

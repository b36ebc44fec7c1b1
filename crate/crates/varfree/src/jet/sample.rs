//! Random smooth expressions and jet points for randomized testing.
//!
//! Generated expressions stay inside a wide domain on the default
//! sampling box: denominators are offset squares, `sqrt`/`ln` arguments
//! are kept positive, and magnitudes are kept moderate so that identity
//! checks are not drowned by cancellation noise.

use super::expr::{Expr, UnaryFn};
use super::{JetPoint, JetSpace, JetVar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy)]
pub struct ExprGenConfig {
    /// Maximum jet order of generated variables.
    pub order: u32,
    pub max_depth: usize,
    /// Allow sin/cos/exp/sqrt leaves-of-depth nodes.
    pub transcendental: bool,
}

impl Default for ExprGenConfig {
    fn default() -> Self {
        ExprGenConfig { order: 1, max_depth: 3, transcendental: true }
    }
}

pub fn rng_from_seed(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A random smooth expression over the chart's variables up to
/// `config.order`.
pub fn random_expr(space: &JetSpace, config: &ExprGenConfig, rng: &mut StdRng) -> Expr {
    gen_expr(space, config, rng, config.max_depth)
}

fn random_var(space: &JetSpace, order: u32, rng: &mut StdRng) -> Expr {
    let vars = space.vars_up_to(order);
    Expr::var(vars[rng.random_range(0..vars.len())].clone())
}

fn small_const(rng: &mut StdRng) -> Expr {
    let p = rng.random_range(-3i64..=3);
    let q = rng.random_range(1i64..=3);
    if p == 0 {
        Expr::int(1)
    } else {
        Expr::rational(p, q)
    }
}

fn gen_expr(space: &JetSpace, config: &ExprGenConfig, rng: &mut StdRng, depth: usize) -> Expr {
    if depth == 0 {
        return if rng.random_bool(0.75) {
            random_var(space, config.order, rng)
        } else {
            small_const(rng)
        };
    }
    let pick = rng.random_range(0..10);
    match pick {
        0..=3 => {
            let k = rng.random_range(2..=3);
            Expr::add((0..k).map(|_| gen_expr(space, config, rng, depth - 1)).collect())
        }
        4..=6 => {
            let a = gen_expr(space, config, rng, depth - 1);
            let b = gen_expr(space, config, rng, depth - 1);
            Expr::mul(vec![small_const(rng), a, b])
        }
        7 => Expr::pow_int(gen_expr(space, config, rng, depth - 1), rng.random_range(2..=3)),
        8 if config.transcendental => {
            let f = match rng.random_range(0..3) {
                0 => UnaryFn::Sin,
                1 => UnaryFn::Cos,
                _ => UnaryFn::Exp,
            };
            // damp exp arguments to keep magnitudes moderate
            let arg = gen_expr(space, config, rng, depth.saturating_sub(2));
            let arg = if f == UnaryFn::Exp {
                Expr::mul2(Expr::rational(1, 4), arg)
            } else {
                arg
            };
            Expr::unary(f, arg)
        }
        8 => {
            let a = gen_expr(space, config, rng, depth - 1);
            Expr::pow_int(a, 2)
        }
        _ => {
            // safe quotient: denominator bounded away from zero
            let num = gen_expr(space, config, rng, depth - 1);
            let den = Expr::add2(
                Expr::int(2),
                Expr::pow_int(gen_expr(space, config, rng, depth.saturating_sub(2)), 2),
            );
            Expr::div(num, den)
        }
    }
}

/// A random smooth expression guaranteed to depend on at least one
/// variable (re-rolls constants).
pub fn random_nonconstant_expr(
    space: &JetSpace,
    config: &ExprGenConfig,
    rng: &mut StdRng,
) -> Expr {
    loop {
        let e = random_expr(space, config, rng);
        if !e.vars().is_empty() {
            return e;
        }
    }
}

/// Uniform random jet point over all chart variables up to `order`.
pub fn random_point(space: &JetSpace, order: u32, rng: &mut StdRng, low: f64, high: f64) -> JetPoint {
    let mut p = JetPoint::new();
    for v in space.vars_up_to(order) {
        p.set(v, rng.random_range(low..high));
    }
    p
}

/// Central finite-difference approximation of `∂e/∂v` at `p`.
pub fn central_difference(
    e: &Expr,
    v: &JetVar,
    p: &JetPoint,
    step: f64,
) -> Result<f64, super::eval::EvalError> {
    let x = p.get(v).expect("point must cover v");
    let mut hi = p.clone();
    hi.set(v.clone(), x + step);
    let mut lo = p.clone();
    lo.set(v.clone(), x - step);
    Ok((super::eval::evaluate(e, &hi)? - super::eval::evaluate(e, &lo)?) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::evaluate;

    #[test]
    fn generated_expressions_evaluate_on_the_box() {
        let space = JetSpace::new(2, 1, 1);
        let mut rng = rng_from_seed(7);
        let config = ExprGenConfig::default();
        let mut ok = 0;
        for _ in 0..50 {
            let e = random_expr(&space, &config, &mut rng);
            let p = random_point(&space, 1, &mut rng, -2.0, 2.0);
            if evaluate(&e, &p).is_ok() {
                ok += 1;
            }
        }
        // wide domains by construction: the vast majority must evaluate
        assert!(ok >= 48, "only {ok}/50 evaluated");
    }
}

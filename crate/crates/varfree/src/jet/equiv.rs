//! Randomized equivalence testing.
//!
//! Canonical simplification is deliberately weak in this crate; symbolic
//! identity claims are certified by point evaluation instead: two
//! expressions are accepted as equivalent when they agree within a
//! relative tolerance at every sampled point. Samples are uniform per
//! coordinate; points violating a domain condition (division by zero,
//! sqrt of a negative, ..) are redrawn up to a bounded budget.

use super::eval::{evaluate, JetPoint};
use super::expr::Expr;
use super::{JetError, JetVar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy)]
pub struct EquivOptions {
    pub trials: usize,
    pub tol: f64,
    /// Per-coordinate sampling interval.
    pub low: f64,
    pub high: f64,
    /// Redraw budget as a multiple of `trials`.
    pub redraw_factor: usize,
    pub seed: u64,
}

impl Default for EquivOptions {
    fn default() -> Self {
        EquivOptions {
            trials: 200,
            tol: 1e-9,
            low: -2.0,
            high: 2.0,
            redraw_factor: 20,
            seed: 0x5eed_0001,
        }
    }
}

impl EquivOptions {
    pub fn with_range(mut self, low: f64, high: f64) -> Self {
        self.low = low;
        self.high = high;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// True iff `|a(p) - b(p)| <= tol * (1 + |a(p)|)` at every sampled point.
pub fn equivalent(a: &Expr, b: &Expr, opts: &EquivOptions) -> Result<bool, JetError> {
    let mut vars: BTreeSet<JetVar> = a.vars();
    vars.extend(b.vars());
    let vars: Vec<JetVar> = vars.into_iter().collect();
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let budget = opts.redraw_factor.saturating_mul(opts.trials);
    let mut redraws = 0usize;
    let mut valid = 0usize;
    while valid < opts.trials {
        let mut p = JetPoint::new();
        for v in &vars {
            p.set(v.clone(), rng.random_range(opts.low..opts.high));
        }
        let va = match evaluate(a, &p) {
            Ok(v) => v,
            Err(_) => {
                redraws += 1;
                if redraws > budget {
                    return Err(JetError::SamplingExhausted { redraws, valid, trials: opts.trials });
                }
                continue;
            }
        };
        let vb = match evaluate(b, &p) {
            Ok(v) => v,
            Err(_) => {
                redraws += 1;
                if redraws > budget {
                    return Err(JetError::SamplingExhausted { redraws, valid, trials: opts.trials });
                }
                continue;
            }
        };
        if (va - vb).abs() > opts.tol * (1.0 + va.abs()) {
            return Ok(false);
        }
        valid += 1;
    }
    Ok(true)
}

/// [`equivalent`] at the default settings (200 points, tol 1e-9,
/// uniform samples in [-2, 2], fixed seed).
pub fn equivalent_default(a: &Expr, b: &Expr) -> Result<bool, JetError> {
    equivalent(a, b, &EquivOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    fn u_x() -> Expr {
        Expr::dependent(0, MultiIndex::new(vec![1]))
    }

    #[test]
    fn binomial_identity() {
        // (u_x + 1)^2 == u_x^2 + 2 u_x + 1
        let a = Expr::pow_int(Expr::add2(u_x(), Expr::one()), 2);
        let b = Expr::add(vec![
            Expr::pow_int(u_x(), 2),
            Expr::mul2(Expr::int(2), u_x()),
            Expr::one(),
        ]);
        assert!(equivalent_default(&a, &b).unwrap());
    }

    #[test]
    fn detects_offset() {
        let a = u_x();
        let b = Expr::add2(u_x(), Expr::rational(1, 1000));
        assert!(!equivalent_default(&a, &b).unwrap());
    }

    #[test]
    fn empty_domain_exhausts_sampling() {
        // sqrt(-1 - u_x^2) violates the domain at every sample
        let bad = Expr::sqrt(Expr::sub(Expr::int(-1), Expr::pow_int(u_x(), 2)));
        assert!(matches!(
            equivalent_default(&bad, &Expr::zero()),
            Err(JetError::SamplingExhausted { .. })
        ));
    }
}

//! L-BFGS with backtracking line search.
//!
//! The objective returns `None` for infeasible points (degenerate
//! interval, inverted mesh); the line search treats those as ordinary
//! failures and backtracks.

/// Objective: writes the gradient into `grad` and returns the value, or
/// `None` if the point is infeasible.
pub trait Objective {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[f64], &mut [f64]) -> Option<f64>,
{
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self(x, grad)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsSettings {
    pub max_iter: usize,
    pub gtol: f64,
    pub memory: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        LbfgsSettings { max_iter: 50_000, gtol: 1e-9, memory: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn minimize(obj: &dyn Objective, x0: &[f64], settings: &LbfgsSettings) -> LbfgsResult {
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; dim];
    let mut value = match obj.eval(&x, &mut grad) {
        Some(v) => v,
        None => {
            return LbfgsResult { x, value: f64::NAN, grad_norm: f64::NAN, iterations: 0, converged: false }
        }
    };
    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho_list: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..settings.max_iter {
        let gnorm = norm(&grad);
        if gnorm <= settings.gtol {
            return LbfgsResult { x, value, grad_norm: gnorm, iterations, converged: true };
        }
        iterations += 1;

        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let k = s_list.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let a = rho_list[i] * dot(&s_list[i], &dir);
            alphas[i] = a;
            for (d, y) in dir.iter_mut().zip(&y_list[i]) {
                *d -= a * y;
            }
        }
        if k > 0 {
            let last = k - 1;
            let scale = dot(&s_list[last], &y_list[last]) / dot(&y_list[last], &y_list[last]);
            if scale.is_finite() && scale > 0.0 {
                for d in dir.iter_mut() {
                    *d *= scale;
                }
            }
        }
        for i in 0..k {
            let b = rho_list[i] * dot(&y_list[i], &dir);
            for (d, s) in dir.iter_mut().zip(&s_list[i]) {
                *d += (alphas[i] - b) * s;
            }
        }

        // ensure a descent direction
        let mut slope = dot(&dir, &grad);
        if !slope.is_finite() || slope >= 0.0 {
            s_list.clear();
            y_list.clear();
            rho_list.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }

        // backtracking Armijo line search
        let mut step = if k == 0 { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut new_x = vec![0.0; dim];
        let mut new_grad = vec![0.0; dim];
        let mut accepted = false;
        for _ in 0..60 {
            for ((nx, &xi), d) in new_x.iter_mut().zip(&x).zip(&dir) {
                *nx = xi + step * d;
            }
            if let Some(v) = obj.eval(&new_x, &mut new_grad) {
                if v <= value + 1e-4 * step * slope {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // stalled: the quadratic model cannot make progress
            return LbfgsResult { x, value, grad_norm: gnorm, iterations, converged: gnorm <= settings.gtol };
        }

        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            s_list.push(s);
            y_list.push(y);
            rho_list.push(1.0 / sy);
            if s_list.len() > settings.memory {
                s_list.remove(0);
                y_list.remove(0);
                rho_list.remove(0);
            }
        }
        x = new_x;
        grad.copy_from_slice(&new_grad);
        value = obj.eval(&x, &mut grad).unwrap_or(value);
    }
    let gnorm = norm(&grad);
    LbfgsResult { x, value, grad_norm: gnorm, iterations, converged: gnorm <= settings.gtol }
}

/// Dense symmetric solve by Gaussian elimination with partial pivoting.
/// Returns `None` on (numerical) singularity.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Damped-Newton refinement with a finite-difference Hessian of the
/// analytic gradient. Used as a second phase once a quasi-Newton run is
/// in the basin: stiff low-eigenvalue modes (e.g. the weakly coupled
/// odd/even lattice mode of centered differences) converge in a few
/// steps instead of thousands.
pub fn newton_refine(obj: &dyn Objective, x0: &[f64], settings: &LbfgsSettings) -> LbfgsResult {
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; dim];
    let mut value = match obj.eval(&x, &mut grad) {
        Some(v) => v,
        None => {
            return LbfgsResult { x, value: f64::NAN, grad_norm: f64::NAN, iterations: 0, converged: false }
        }
    };
    let mut iterations = 0;
    let max_newton = 80;
    for _ in 0..max_newton {
        let gnorm = norm(&grad);
        if gnorm <= settings.gtol {
            return LbfgsResult { x, value, grad_norm: gnorm, iterations, converged: true };
        }
        iterations += 1;

        // symmetric FD Hessian from the analytic gradient
        let mut hess = vec![vec![0.0; dim]; dim];
        let mut gp = vec![0.0; dim];
        let mut gm = vec![0.0; dim];
        let mut xw = x.clone();
        let mut ok = true;
        for i in 0..dim {
            let h = 1e-6 * (1.0 + x[i].abs());
            xw[i] = x[i] + h;
            let vp = obj.eval(&xw, &mut gp);
            xw[i] = x[i] - h;
            let vm = obj.eval(&xw, &mut gm);
            xw[i] = x[i];
            if vp.is_none() || vm.is_none() {
                ok = false;
                break;
            }
            for j in 0..dim {
                hess[i][j] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        if !ok {
            break;
        }
        for i in 0..dim {
            for j in 0..i {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }

        // Levenberg damping until the step is a descent direction that
        // the line search accepts
        let mut lambda = 0.0;
        let mut moved = false;
        for _ in 0..12 {
            let mut damped = hess.clone();
            if lambda > 0.0 {
                for (i, row) in damped.iter_mut().enumerate() {
                    row[i] += lambda;
                }
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(dir) = solve_dense(damped, rhs) else {
                lambda = if lambda == 0.0 { 1e-8 } else { lambda * 100.0 };
                continue;
            };
            let slope = dot(&dir, &grad);
            if !slope.is_finite() || slope >= 0.0 {
                lambda = if lambda == 0.0 { 1e-8 } else { lambda * 100.0 };
                continue;
            }
            let mut step = 1.0;
            let mut new_x = vec![0.0; dim];
            let mut new_grad = vec![0.0; dim];
            let mut accepted = false;
            for _ in 0..40 {
                for ((nx, &xi), d) in new_x.iter_mut().zip(&x).zip(&dir) {
                    *nx = xi + step * d;
                }
                if let Some(v) = obj.eval(&new_x, &mut new_grad) {
                    // accept on value decrease (up to rounding) or on a
                    // solid gradient reduction; near the basin floor the
                    // value is flat to machine precision while the
                    // gradient still has room to fall
                    if v <= value + 1e-12 * (1.0 + value.abs()) || norm(&new_grad) < 0.5 * gnorm {
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if accepted {
                x = new_x;
                grad = new_grad;
                value = obj.eval(&x, &mut grad).unwrap_or(value);
                moved = true;
                break;
            }
            lambda = if lambda == 0.0 { 1e-8 } else { lambda * 100.0 };
        }
        if !moved {
            break;
        }
    }
    let gnorm = norm(&grad);
    LbfgsResult { x, value, grad_norm: gnorm, iterations, converged: gnorm <= settings.gtol }
}

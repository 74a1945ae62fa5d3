//! Quasi-Newton minimization (BFGS on the inverse Hessian) with a
//! backtracking line search.
//!
//! Objectives return `+inf` for infeasible points; the line search simply
//! backs off from them.

use nalgebra::{DMatrix, DVector};

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    pub gtol: f64,
    pub xtol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense symmetric inverse-Hessian approximation, row-major.
struct InverseHessian {
    n: usize,
    h: Vec<f64>,
    fresh: bool,
}

impl InverseHessian {
    fn identity(n: usize) -> Self {
        let mut h = vec![0.0; n * n];
        (0..n).for_each(|i| h[i * n + i] = 1.0);
        Self { n, h, fresh: true }
    }

    fn direction(&self, g: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| -dot(&self.h[i * self.n..(i + 1) * self.n], g)).collect()
    }

    fn update(&mut self, s: &[f64], y: &[f64]) {
        let sy = dot(s, y);
        if !(sy > 1e-12 * norm(s) * norm(y)) {
            return;
        }
        let n = self.n;
        if self.fresh {
            // rescale the identity to the observed curvature before the first update
            let scale = sy / dot(y, y);
            self.h.iter_mut().for_each(|v| *v *= scale);
            self.fresh = false;
        }
        let rho = 1.0 / sy;
        let hy: Vec<f64> = (0..n).map(|i| dot(&self.h[i * n..(i + 1) * n], y)).collect();
        let yhy = dot(y, &hy);
        let coef = (1.0 + rho * yhy) * rho;
        for i in 0..n {
            for j in 0..n {
                self.h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub(crate) fn minimize<F>(f: F, x0: Vec<f64>, opts: &BfgsOptions) -> BfgsOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    if n == 0 || !fx.is_finite() {
        let converged = n == 0 && fx.is_finite();
        return BfgsOutcome { x, f: fx, grad: g, n_iter: 0, converged };
    }
    let mut h = InverseHessian::identity(n);
    let mut iter = 0;
    while iter < opts.max_iter {
        if norm(&g) < opts.gtol {
            return BfgsOutcome { x, f: fx, grad: g, n_iter: iter, converged: true };
        }
        iter += 1;
        let mut d = h.direction(&g);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = InverseHessian::identity(n);
            d = h.direction(&g);
            slope = dot(&g, &d);
        }
        let alpha0 = if h.fresh { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
        match line_search(&f, &x, fx, &g, &d, slope, alpha0) {
            Some((x_new, f_new, g_new)) => {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let step = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                let stalled = step < opts.xtol * scale && (fx - f_new).abs() <= 1e-15 * fx.abs().max(1.0);
                h.update(&s, &y);
                x = x_new;
                fx = f_new;
                g = g_new;
                if stalled {
                    break;
                }
            }
            None if !h.fresh => h = InverseHessian::identity(n),
            None => break,
        }
    }
    // only runs that stalled early are polished; the iteration budget is a hard cap
    if iter < opts.max_iter && norm(&g) >= opts.gtol && norm(&g) < POLISH_BELOW {
        (x, fx, g) = newton_polish(&f, x, fx, g, opts.gtol);
    }
    let converged = norm(&g) < opts.gtol;
    BfgsOutcome { x, f: fx, grad: g, n_iter: iter, converged }
}

type Point = (Vec<f64>, f64, Vec<f64>);

fn line_search<F>(f: &F, x: &[f64], fx: f64, g: &[f64], d: &[f64], slope: f64, alpha0: f64) -> Option<Point>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let g_norm = norm(g);
    let noise = 4.0 * f64::EPSILON * fx.abs().max(1.0);
    let mut alpha = alpha0;
    for _ in 0..MAX_BACKTRACKS {
        let x_new: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f_new, g_new) = f(&x_new);
        if f_new.is_finite() {
            if f_new <= fx + ARMIJO_C1 * alpha * slope {
                return Some((x_new, f_new, g_new));
            }
            // near the optimum the sufficient-decrease test drowns in rounding;
            // accept steps that keep f within noise and shrink the gradient
            if f_new <= fx + noise && norm(&g_new) < g_norm {
                return Some((x_new, f_new, g_new));
            }
            let denom = 2.0 * (f_new - fx - slope * alpha);
            let quad = if denom > 0.0 { -slope * alpha * alpha / denom } else { 0.5 * alpha };
            alpha = quad.clamp(0.1 * alpha, 0.5 * alpha);
        } else {
            alpha *= 0.2;
        }
    }
    None
}

/// Gradient norm under which a stalled run is handed to [`newton_polish`].
const POLISH_BELOW: f64 = 1e-1;
const POLISH_STEPS: usize = 6;

/// Newton steps on a Hessian built from central differences of the
/// gradient. Near the optimum the function value is flat to rounding, so
/// line searches on `f` stall; these steps are judged by the gradient norm,
/// with `f` allowed to rise only by rounding noise.
fn newton_polish<F>(f: &F, mut x: Vec<f64>, mut fx: f64, mut g: Vec<f64>, gtol: f64) -> Point
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x.len();
    for _ in 0..POLISH_STEPS {
        if norm(&g) < gtol {
            break;
        }
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-5 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, gp) = f(&xp);
            let (fm, gm) = f(&xm);
            if !(fp.is_finite() && fm.is_finite()) {
                return (x, fx, g);
            }
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let Some(step) = hess.lu().solve(&DVector::from_column_slice(&g)) else { break };
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
        let x_new: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
        let (f_new, g_new) = f(&x_new);
        // sums of hundreds of special-function terms are only good to ~1e-14 relative
        let noise = 1e-12 * fx.abs().max(1.0);
        if !(f_new <= fx + noise && norm(&g_new) < norm(&g)) {
            break;
        }
        (x, fx, g) = (x_new, f_new, g_new);
    }
    (x, fx, g)
}

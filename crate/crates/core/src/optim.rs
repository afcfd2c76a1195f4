//! Box-constrained minimizers used by the likelihood fits.
//!
//! * [`bfgs`]: projected quasi-Newton with an Armijo backtracking search along
//!   the projected path. Variables sitting on a bound with the gradient
//!   pointing outward are frozen for the iteration; the inverse-Hessian
//!   approximation is reset whenever that active set changes.
//! * [`newton_polish`]: a few Newton steps with a finite-difference Hessian of
//!   the analytic gradient, accepted only if they do not increase the objective.
//! * [`nelder_mead`]: derivative-free simplex search, points clamped into the box.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn clamp(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Components whose gradient pushes against an active bound.
    fn active(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| (xi <= self.lower[i] && gi > 0.0) || (xi >= self.upper[i] && gi < 0.0))
            .collect()
    }

    pub fn projected_grad_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let active = self.active(x, g);
        g.iter()
            .zip(&active)
            .filter(|(_, &a)| !a)
            .map(|(gi, _)| gi * gi)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Projected-gradient (Euclidean) norm threshold.
    pub grad_tol: f64,
    /// Relative objective change threshold.
    pub rel_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 500,
            grad_tol: 1e-7,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest allowed step (infinity norm) in one iteration.
const MAX_STEP: f64 = 5.0;

pub fn bfgs<F>(mut fg: F, x0: &[f64], bounds: &Bounds, opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut g = vec![0.0; dim];
    let mut f = fg(&x, &mut g);
    let mut h = identity(dim);
    let mut h_is_identity = true;
    let mut active = bounds.active(&x, &g);
    let mut small_changes = 0;
    let mut converged = false;
    let mut iterations = 0;

    if !f.is_finite() {
        return Minimum {
            grad_norm: f64::INFINITY,
            x,
            f,
            iterations,
            converged,
        };
    }

    let mut gn = vec![0.0; dim];
    while iterations < opts.max_iter {
        if bounds.projected_grad_norm(&x, &g) <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let now_active = bounds.active(&x, &g);
        if now_active != active {
            h = identity(dim);
            h_is_identity = true;
            active = now_active;
        }

        let mut d = direction(&h, &g, &active);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(dim);
            h_is_identity = true;
            d = direction(&h, &g, &active);
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax > MAX_STEP {
            let s = MAX_STEP / dmax;
            d.iter_mut().for_each(|v| *v *= s);
        }

        // Armijo backtracking along the projected path.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            bounds.clamp(&mut xn);
            let fnew = fg(&xn, &mut gn);
            let decrease: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if fnew.is_finite() && fnew <= f + 1e-4 * decrease {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if h_is_identity {
                break;
            }
            h = identity(dim);
            h_is_identity = true;
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        if sy > 1e-12 * (ss * yy).sqrt() && sy > 0.0 {
            if h_is_identity {
                let scale = sy / yy;
                h = identity(dim).into_iter().map(|v| v * scale).collect();
            }
            bfgs_update(&mut h, &s, &y, sy);
            h_is_identity = false;
        }

        let change = (f - fnew).abs();
        x = xn;
        f = fnew;
        std::mem::swap(&mut g, &mut gn);
        if change <= opts.rel_tol * f.abs().max(1.0) {
            small_changes += 1;
            if small_changes >= 2 {
                converged = true;
                break;
            }
        } else {
            small_changes = 0;
        }
    }

    Minimum {
        grad_norm: bounds.projected_grad_norm(&x, &g),
        x,
        f,
        iterations,
        converged,
    }
}

fn identity(dim: usize) -> Vec<f64> {
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        h[i * dim + i] = 1.0;
    }
    h
}

fn direction(h: &[f64], g: &[f64], active: &[bool]) -> Vec<f64> {
    let dim = g.len();
    (0..dim)
        .map(|i| {
            if active[i] {
                0.0
            } else {
                -(0..dim).filter(|&j| !active[j]).map(|j| h[i * dim + j] * g[j]).sum::<f64>()
            }
        })
        .collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..dim).map(|i| (0..dim).map(|j| h[i * dim + j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..dim {
        for j in 0..dim {
            h[i * dim + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Newton refinement with a central-difference Hessian of the gradient.
///
/// Each step must not increase the objective (beyond rounding) and must
/// shrink the projected gradient, otherwise polishing stops.
pub fn newton_polish<F>(mut fg: F, start: Minimum, bounds: &Bounds, steps: usize) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = start.x.len();
    let mut best = start;
    let mut g = vec![0.0; dim];
    let f0 = fg(&best.x, &mut g);
    if !f0.is_finite() {
        return best;
    }
    best.f = f0;
    best.grad_norm = bounds.projected_grad_norm(&best.x, &g);
    for _ in 0..steps {
        if best.grad_norm == 0.0 {
            break;
        }
        let active = bounds.active(&best.x, &g);
        let free: Vec<usize> = (0..dim).filter(|&i| !active[i]).collect();
        if free.is_empty() {
            break;
        }
        let mut hess = DMatrix::<f64>::zeros(free.len(), free.len());
        let (mut gp, mut gm) = (vec![0.0; dim], vec![0.0; dim]);
        for (cj, &j) in free.iter().enumerate() {
            let hstep = 1e-5 * best.x[j].abs().max(1.0);
            let mut xp = best.x.clone();
            let mut xm = best.x.clone();
            xp[j] += hstep;
            xm[j] -= hstep;
            fg(&xp, &mut gp);
            fg(&xm, &mut gm);
            for (ci, &i) in free.iter().enumerate() {
                hess[(ci, cj)] = (gp[i] - gm[i]) / (2.0 * hstep);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -g[i]));
        let Some(chol) = hess.cholesky() else { break };
        let step = chol.solve(&rhs);
        let mut xn = best.x.clone();
        for (ci, &i) in free.iter().enumerate() {
            xn[i] += step[ci];
        }
        bounds.clamp(&mut xn);
        let mut gn = vec![0.0; dim];
        let fnew = fg(&xn, &mut gn);
        let gnorm = bounds.projected_grad_norm(&xn, &gn);
        if fnew.is_finite() && fnew <= best.f + 1e-13 * best.f.abs().max(1.0) && gnorm < best.grad_norm {
            best.x = xn;
            best.f = fnew;
            best.grad_norm = gnorm;
            best.iterations += 1;
            g = gn;
        } else {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Spread of objective values across the simplex at which to stop.
    pub ftol: f64,
    /// Initial simplex edge length.
    pub step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 200,
            ftol: 1e-9,
            step: 0.1,
        }
    }
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut eval = |x: &mut Vec<f64>| {
        bounds.clamp(x);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut base = x0.to_vec();
    let fb = eval(&mut base);
    simplex.push((base.clone(), fb));
    for i in 0..dim {
        let mut p = base.clone();
        p[i] += opts.step;
        if p[i] > bounds.upper[i] {
            p[i] = base[i] - opts.step;
        }
        let fp = eval(&mut p);
        simplex.push((p, fp));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[dim].1);
        if (worst - best).abs() <= opts.ftol * best.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|p| p.0[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let mut xr = along(-1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let mut xc = if fr < simplex[dim].1 { along(-0.5) } else { along(0.5) };
            let fc = eval(&mut xc);
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut xs: Vec<f64> = b.iter().zip(&p.0).map(|(bi, pi)| bi + 0.5 * (pi - bi)).collect();
                    let fs = eval(&mut xs);
                    *p = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        grad_norm: f64::NAN,
        iterations,
        converged,
    }
}

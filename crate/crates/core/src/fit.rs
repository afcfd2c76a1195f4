//! Maximum likelihood for plain, hurdle and zero-inflated models.
//!
//! Hurdle fits separate: `φ̂ = 1 − m/n` and θ̂ maximizes the zero-truncated
//! likelihood of the nonzero part. Zero-inflated fits start from the same
//! truncated optimum θ*; if `m/n ≤ 1 − p₀(θ*)` that is the answer (with
//! `φ̂ = 1 − (m/n)/(1 − p₀(θ*))`), otherwise the profile likelihood in
//! `ψ(θ) = min(m/n, 1 − p₀(θ))` is maximized. Where `1 − p₀(θ) < m/n` that
//! profile is the plain baseline likelihood, so the plain MLE seeds the search
//! and a simplex polish handles the kink on the switching set.
//!
//! Optimization runs on log-transformed positive parameters and the logit of
//! NB's `p`, from several deterministic starting points.

use crate::baselines::{bounds, BaselineParams, Family, DEGENERATE_P0};
use crate::data::CountVector;
use crate::error::{Error, Result};
use crate::optim::{bfgs, nelder_mead, newton_polish, BfgsOptions, Bounds, Minimum, NelderMeadOptions};
use crate::zero_models::{ZeroKind, ZeroModifiedModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Projected-gradient norm at which a start is declared converged.
    pub tol: f64,
    /// Relative objective change at which a start is declared converged.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Number of deterministic starting points (1 to 5).
    pub starts: usize,
    /// Simplex iterations for the non-smooth zero-inflated profile.
    pub polish_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-7,
            rel_tol: 1e-10,
            max_iter: 500,
            starts: 5,
            polish_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    HurdleClosed,
    #[serde(rename = "ZICase1")]
    ZiCase1,
    #[serde(rename = "ZICase2")]
    ZiCase2,
    BaselineOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ZeroModifiedModel,
    pub n: usize,
    pub m: usize,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm_at_solution: f64,
    pub case_tag: CaseTag,
    /// Two converged starts ended more than 1e-6 apart in log-likelihood.
    pub starts_disagree: bool,
    /// BB only: fitted trial count rounded to an integer no smaller than max(Y).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials_rounded: Option<u64>,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.model.baseline.family()
    }

    pub fn kind(&self) -> ZeroKind {
        self.model.kind
    }

    /// Estimates in the order (φ, θ₁, …) for zero-modified models, θ otherwise.
    pub fn estimates(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4);
        if self.model.kind != ZeroKind::None {
            v.push(self.model.phi);
        }
        v.extend(self.model.baseline.to_vec());
        v
    }

    pub fn parameter_names(&self) -> Vec<&'static str> {
        let mut v = Vec::with_capacity(4);
        if self.model.kind != ZeroKind::None {
            v.push("phi");
        }
        v.extend_from_slice(self.family().param_names());
        v
    }
}

/// `−Σ_{Yᵢ≠0} ln f_tr(Yᵢ | θ)` and its gradient in θ.
pub fn truncated_neg_loglik(params: &BaselineParams, data: &CountVector) -> Result<(f64, Vec<f64>)> {
    if data.m() == 0 {
        return Err(Error::InsufficientData(
            "the truncated likelihood needs at least one nonzero observation".into(),
        ));
    }
    params.check_truncatable()?;
    let mut g = vec![0.0; params.family().n_params()];
    let v = eval(params, data.nonzero_table(), true, &mut g);
    Ok((v, g))
}

/// `−Σ ln f_θ(Yᵢ)` of the plain baseline and its gradient in θ.
pub fn neg_loglik(params: &BaselineParams, data: &CountVector) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if let BaselineParams::BetaBin(b) = params {
        if data.max() as f64 > b.n {
            return Err(Error::OutsideSupport {
                family: params.family().key(),
                y: data.max(),
            });
        }
    }
    let table: Vec<(u64, usize)> = data.table().collect();
    let mut g = vec![0.0; params.family().n_params()];
    let v = eval(params, &table, false, &mut g);
    Ok((v, g))
}

fn eval(params: &BaselineParams, table: &[(u64, usize)], truncated: bool, grad: &mut [f64]) -> f64 {
    let dim = grad.len();
    let mut buf = [0.0f64; 3];
    grad.fill(0.0);
    let mut value = 0.0;
    let mut count = 0.0;
    for &(y, c) in table {
        let c = c as f64;
        count += c;
        value -= c * params.log_pmf(y);
        params.grad_log_pmf_into(y, &mut buf[..dim]);
        for (g, b) in grad.iter_mut().zip(&buf[..dim]) {
            *g -= c * b;
        }
    }
    if truncated {
        value += count * params.log_one_minus_p0();
        params.grad_log_p0_into(&mut buf[..dim]);
        let odds = params.p0() / params.one_minus_p0();
        for (g, b) in grad.iter_mut().zip(&buf[..dim]) {
            *g -= count * odds * b;
        }
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Transform {
    Log,
    Logit,
}

impl Transform {
    fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Log => x.ln(),
            Transform::Logit => (x / (1.0 - x)).ln(),
        }
    }

    fn inverse(self, u: f64) -> f64 {
        match self {
            Transform::Log => u.exp(),
            Transform::Logit => 1.0 / (1.0 + (-u).exp()),
        }
    }

    /// dθ/du at θ.
    fn jacobian(self, x: f64) -> f64 {
        match self {
            Transform::Log => x,
            Transform::Logit => x * (1.0 - x),
        }
    }
}

/// Optimization problem in transformed coordinates.
struct Problem {
    family: Family,
    table: Vec<(u64, usize)>,
    truncated: bool,
    transforms: Vec<Transform>,
    natural: Vec<(f64, f64)>,
    bounds: Bounds,
}

impl Problem {
    fn new(family: Family, data: &CountVector, truncated: bool) -> Problem {
        let table: Vec<(u64, usize)> = if truncated {
            data.nonzero_table().to_vec()
        } else {
            data.table().collect()
        };
        let (transforms, natural) = match family {
            Family::Poisson => (vec![Transform::Log], vec![bounds::LAMBDA]),
            Family::NegBin => (vec![Transform::Log, Transform::Logit], vec![bounds::R, bounds::P]),
            Family::BetaBin => {
                let lo = (data.max() as f64).max(1.0);
                (
                    vec![Transform::Log; 3],
                    vec![(lo, bounds::TRIALS_MAX), bounds::SHAPE, bounds::SHAPE],
                )
            }
            Family::BetaNegBin => (vec![Transform::Log; 3], vec![bounds::R, bounds::SHAPE, bounds::SHAPE]),
        };
        let bounds = Bounds {
            lower: transforms.iter().zip(&natural).map(|(t, b)| t.forward(b.0)).collect(),
            upper: transforms.iter().zip(&natural).map(|(t, b)| t.forward(b.1)).collect(),
        };
        Problem {
            family,
            table,
            truncated,
            transforms,
            natural,
            bounds,
        }
    }

    fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.transforms)
            .zip(&self.natural)
            .map(|((&ui, t), &(lo, hi))| t.inverse(ui).clamp(lo, hi))
            .collect()
    }

    fn to_transformed(&self, theta: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = theta
            .iter()
            .zip(&self.transforms)
            .zip(&self.natural)
            .map(|((&x, t), &(lo, hi))| t.forward(x.clamp(lo, hi)))
            .collect();
        self.bounds.clamp(&mut u);
        u
    }

    fn params(&self, u: &[f64]) -> Option<BaselineParams> {
        BaselineParams::from_slice(self.family, &self.to_natural(u)).ok()
    }

    /// Objective and gradient in transformed coordinates.
    fn value_grad(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let Some(params) = self.params(u) else {
            return f64::INFINITY;
        };
        if self.truncated && params.p0() >= DEGENERATE_P0 {
            return f64::INFINITY;
        }
        let v = eval(&params, &self.table, self.truncated, grad);
        let theta = params.to_vec();
        for ((g, t), x) in grad.iter_mut().zip(&self.transforms).zip(&theta) {
            *g *= t.jacobian(*x);
        }
        if v.is_finite() && grad.iter().all(|g| g.is_finite()) {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Deterministic moment-based starting point in natural coordinates.
fn initial_theta(family: Family, data: &CountVector, truncated: bool) -> Vec<f64> {
    let (mean, var) = if truncated {
        data.nonzero_moments()
    } else {
        data.moments()
    };
    let mean = mean.max(1e-3);
    match family {
        Family::Poisson => vec![mean],
        Family::NegBin => {
            if var > mean * (1.0 + 1e-8) {
                vec![mean * mean / (var - mean), 1.0 - mean / var]
            } else {
                vec![1.0, mean / (1.0 + mean)]
            }
        }
        Family::BetaBin => vec![(data.max() as f64).max(1.0), 1.0, 1.0],
        Family::BetaNegBin => vec![1.0, 2.0, 1.0],
    }
}

const START_OFFSETS: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [0.5, 0.5, 0.5],
    [-0.5, -0.5, -0.5],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, -1.0],
];

struct MultiStart {
    best: Minimum,
    iterations: usize,
    disagree: bool,
}

fn multi_start(problem: &Problem, theta0: &[f64], opts: &FitOptions) -> MultiStart {
    let base = problem.to_transformed(theta0);
    let bfgs_opts = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.tol,
        rel_tol: opts.rel_tol,
    };
    let f = |u: &[f64], g: &mut [f64]| problem.value_grad(u, g);
    let mut results: Vec<Minimum> = Vec::new();
    for offset in START_OFFSETS.iter().take(opts.starts.clamp(1, START_OFFSETS.len())) {
        let mut u: Vec<f64> = base.iter().zip(offset).map(|(b, o)| b + o).collect();
        problem.bounds.clamp(&mut u);
        results.push(bfgs(f, &u, &problem.bounds, &bfgs_opts));
    }
    let iterations = results.iter().map(|r| r.iterations).sum();
    let converged: Vec<f64> = results.iter().filter(|r| r.converged && r.f.is_finite()).map(|r| r.f).collect();
    let disagree = converged.iter().any(|a| converged.iter().any(|b| (a - b).abs() > 1e-6));
    // Lowest objective wins; near-ties go to the earliest start.
    let mut best_idx = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.f < results[best_idx].f - 1e-10 {
            best_idx = i;
        }
    }
    let best = results.swap_remove(best_idx);
    let best = newton_polish(f, best, &problem.bounds, 5);
    let converged = best.converged || best.grad_norm <= opts.tol;
    MultiStart {
        best: Minimum { converged, ..best },
        iterations,
        disagree,
    }
}

fn check_data(data: &CountVector) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if data.m() == 0 {
        return Err(Error::AllZero { n: data.n() });
    }
    Ok(())
}

fn trials_rounded(params: &BaselineParams, data: &CountVector) -> Option<u64> {
    params.support_max().map(|t| t.max(data.max()))
}

/// Optimum of the zero-truncated likelihood of the nonzero part.
struct Truncated {
    params: BaselineParams,
    run: MultiStart,
}

fn fit_truncated(family: Family, data: &CountVector, opts: &FitOptions) -> Result<Truncated> {
    let problem = Problem::new(family, data, true);
    let run = multi_start(&problem, &initial_theta(family, data, true), opts);
    if !run.best.f.is_finite() {
        return Err(Error::NotConverged("truncated likelihood is not finite at any start".into()));
    }
    let params = problem
        .params(&run.best.x)
        .ok_or_else(|| Error::NotConverged("optimizer left the parameter domain".into()))?;
    Ok(Truncated { params, run })
}

/// Hurdle MLE: `φ̂ = 1 − m/n`, θ̂ from the truncated likelihood.
pub fn fit_hurdle(family: Family, data: &CountVector, opts: &FitOptions) -> Result<FitResult> {
    check_data(data)?;
    let (n, m) = (data.n(), data.m());
    let phi = 1.0 - m as f64 / n as f64;
    let t = fit_truncated(family, data, opts)?;
    let model = ZeroModifiedModel::hurdle(t.params, phi)?;
    Ok(FitResult {
        model,
        n,
        m,
        loglik: model.log_likelihood(data),
        converged: t.run.best.converged,
        iterations: t.run.iterations,
        grad_norm_at_solution: t.run.best.grad_norm,
        case_tag: CaseTag::HurdleClosed,
        starts_disagree: t.run.disagree,
        trials_rounded: trials_rounded(&t.params, data),
    })
}

/// Plain baseline MLE.
pub fn fit_baseline(family: Family, data: &CountVector, opts: &FitOptions) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let problem = Problem::new(family, data, false);
    let run = multi_start(&problem, &initial_theta(family, data, false), opts);
    let params = problem
        .params(&run.best.x)
        .filter(|_| run.best.f.is_finite())
        .ok_or_else(|| Error::NotConverged("baseline likelihood is not finite at any start".into()))?;
    let model = ZeroModifiedModel::plain(params);
    Ok(FitResult {
        model,
        n: data.n(),
        m: data.m(),
        loglik: model.log_likelihood(data),
        converged: run.best.converged,
        iterations: run.iterations,
        grad_norm_at_solution: run.best.grad_norm,
        case_tag: CaseTag::BaselineOnly,
        starts_disagree: run.disagree,
        trials_rounded: trials_rounded(&params, data),
    })
}

/// Zero-inflated MLE by the two-case procedure.
pub fn fit_zero_inflated(family: Family, data: &CountVector, opts: &FitOptions) -> Result<FitResult> {
    check_data(data)?;
    let (n, m) = (data.n(), data.m());
    let ratio = m as f64 / n as f64;
    let t = fit_truncated(family, data, opts)?;
    let q_star = t.params.one_minus_p0();

    if ratio <= q_star {
        let phi = (1.0 - ratio / q_star).clamp(0.0, 1.0);
        let model = ZeroModifiedModel::inflated(t.params, phi)?;
        return Ok(FitResult {
            model,
            n,
            m,
            loglik: model.log_likelihood(data),
            converged: t.run.best.converged,
            iterations: t.run.iterations,
            grad_norm_at_solution: t.run.best.grad_norm,
            case_tag: CaseTag::ZiCase1,
            starts_disagree: t.run.disagree,
            trials_rounded: trials_rounded(&t.params, data),
        });
    }

    // Case 2: maximize the ψ-profile. Candidate seeds are the plain MLE (the
    // profile's smooth branch where 1 − p₀ < m/n) and θ*.
    let plain = Problem::new(family, data, false);
    let plain_run = multi_start(&plain, &initial_theta(family, data, false), opts);
    let truncated = Problem::new(family, data, true);
    let zeros = (n - m) as f64;
    let profile = |u: &[f64]| -> f64 {
        let Some(params) = truncated.params(u) else {
            return f64::INFINITY;
        };
        let q = params.one_minus_p0();
        let mut g = [0.0; 3];
        let trunc = eval(&params, &truncated.table, true, &mut g[..family.n_params()]);
        let psi = ratio.min(q);
        let zero_term = if zeros > 0.0 { zeros * (-psi).ln_1p() } else { 0.0 };
        let v = trunc - zero_term - m as f64 * psi.ln();
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let nm_opts = NelderMeadOptions {
        max_iter: opts.polish_iter,
        ..NelderMeadOptions::default()
    };
    let seeds = [plain_run.best.x.clone(), truncated.to_transformed(&t.params.to_vec())];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut values = Vec::new();
    for seed in &seeds {
        let start = profile(seed);
        let polished = nelder_mead(profile, seed, &truncated.bounds, &nm_opts);
        let cand = if polished.f < start { (polished.x, polished.f) } else { (seed.clone(), start) };
        values.push(cand.1);
        if best.as_ref().is_none_or(|b| cand.1 < b.1 - 1e-10) {
            best = Some(cand);
        }
    }
    let (u, _) = best.expect("two seeds");
    let params = truncated
        .params(&u)
        .ok_or_else(|| Error::NotConverged("profile optimum left the parameter domain".into()))?;
    let q = params.one_minus_p0();
    let psi = ratio.min(q);
    let phi = (1.0 - psi / q).clamp(0.0, 1.0);
    let model = ZeroModifiedModel::inflated(params, phi)?;

    // Gradient of whichever smooth branch holds at the solution.
    let mut g = vec![0.0; family.n_params()];
    let branch = if q < ratio { &plain } else { &truncated };
    branch.value_grad(&u, &mut g);
    let grad_norm = branch.bounds.projected_grad_norm(&u, &g);

    Ok(FitResult {
        model,
        n,
        m,
        loglik: model.log_likelihood(data),
        converged: plain_run.best.converged && t.run.best.converged,
        iterations: t.run.iterations + plain_run.iterations,
        grad_norm_at_solution: grad_norm,
        case_tag: CaseTag::ZiCase2,
        starts_disagree: t.run.disagree || plain_run.disagree || (values[0] - values[1]).abs() > 1e-6,
        trials_rounded: trials_rounded(&params, data),
    })
}

/// Dispatches on the zero-modification kind.
pub fn fit_model(family: Family, kind: ZeroKind, data: &CountVector, opts: &FitOptions) -> Result<FitResult> {
    match kind {
        ZeroKind::None => fit_baseline(family, data, opts),
        ZeroKind::Hurdle => fit_hurdle(family, data, opts),
        ZeroKind::Inflated => fit_zero_inflated(family, data, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[u64]) -> CountVector {
        CountVector::new(v.to_vec())
    }

    /// Root of `λ = ȳ(1 − e^{−λ})` by bisection.
    fn truncated_poisson_root(ybar: f64) -> f64 {
        let (mut lo, mut hi) = (1e-12, ybar);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - ybar * (1.0 - (-mid).exp()) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn test_truncated_neg_loglik_two_ones() {
        let lambda = 1.3;
        let p = BaselineParams::poisson(lambda).unwrap();
        let (v, g) = truncated_neg_loglik(&p, &cv(&[0, 1, 1])).unwrap();
        let ftr = (-lambda).exp() * lambda / (1.0 - (-lambda).exp());
        assert!((v + 2.0 * ftr.ln()).abs() < 1e-13);
        // d/dλ of −2 ln f_tr = −2 (1/λ − 1 − e^{−λ}/(1 − e^{−λ}))
        let e = (-lambda).exp();
        let want = -2.0 * (1.0 / lambda - 1.0 - e / (1.0 - e));
        assert!((g[0] - want).abs() < 1e-12);
        assert!(matches!(truncated_neg_loglik(&p, &cv(&[0, 0])), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn test_gradients_match_finite_differences() {
        let data = cv(&[0, 0, 1, 2, 2, 3, 5, 0, 7, 1, 4]);
        let grid = [
            BaselineParams::poisson(2.2).unwrap(),
            BaselineParams::neg_bin(1.7, 0.45).unwrap(),
            BaselineParams::beta_bin(9.4, 1.3, 2.1).unwrap(),
            BaselineParams::beta_neg_bin(1.5, 3.0, 2.0).unwrap(),
        ];
        for p in grid {
            for trunc in [true, false] {
                let f = |q: &BaselineParams| {
                    if trunc {
                        truncated_neg_loglik(q, &data).unwrap().0
                    } else {
                        neg_loglik(q, &data).unwrap().0
                    }
                };
                let (_, g) = if trunc { truncated_neg_loglik(&p, &data) } else { neg_loglik(&p, &data) }.unwrap();
                let theta = p.to_vec();
                for i in 0..theta.len() {
                    let h = 1e-6 * theta[i].abs().max(1e-3);
                    let (mut a, mut b) = (theta.clone(), theta.clone());
                    a[i] += h;
                    b[i] -= h;
                    let fa = f(&BaselineParams::from_slice(p.family(), &a).unwrap());
                    let fb = f(&BaselineParams::from_slice(p.family(), &b).unwrap());
                    let fd = (fa - fb) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1.0), "{p:?} trunc={trunc} i={i}: {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn test_hurdle_phi_exact_and_poisson_root() {
        let data = cv(&[0, 0, 0, 0, 0, 0, 0, 2, 2, 2]);
        let fit = fit_hurdle(Family::Poisson, &data, &FitOptions::default()).unwrap();
        assert_eq!(fit.model.phi, 1.0 - 3.0 / 10.0);
        assert!(fit.converged);
        let lam = fit.model.baseline.to_vec()[0];
        assert!((lam - truncated_poisson_root(2.0)).abs() < 1e-8, "{lam}");
        assert!((lam - 1.593_624_260_040_040_1).abs() < 1e-8);
        assert_eq!(fit.case_tag, CaseTag::HurdleClosed);
    }

    #[test]
    fn test_hurdle_all_zero_and_no_zero() {
        assert!(matches!(
            fit_hurdle(Family::Poisson, &cv(&[0, 0, 0]), &FitOptions::default()),
            Err(Error::AllZero { n: 3 })
        ));
        let fit = fit_hurdle(Family::Poisson, &cv(&[1, 2, 3]), &FitOptions::default()).unwrap();
        assert_eq!(fit.model.phi, 0.0);
        assert!(fit.loglik.is_finite());
    }

    #[test]
    fn test_hurdle_separability_under_extra_zeros() {
        let data = cv(&[0, 3, 1, 4, 1, 5, 9, 2, 6, 0, 5, 3]);
        for family in Family::ALL {
            let a = fit_hurdle(family, &data, &FitOptions::default()).unwrap();
            let b = fit_hurdle(family, &data.with_extra_zeros(17), &FitOptions::default()).unwrap();
            for (x, y) in a.model.baseline.to_vec().iter().zip(b.model.baseline.to_vec()) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{family}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn test_zip_case_one_example() {
        let data = cv(&[0, 0, 0, 0, 0, 0, 1, 2, 3, 2]);
        let fit = fit_zero_inflated(Family::Poisson, &data, &FitOptions::default()).unwrap();
        assert_eq!(fit.case_tag, CaseTag::ZiCase1);
        let lam = fit.model.baseline.to_vec()[0];
        assert!((lam - 1.593_624_260_040_040_1).abs() < 1e-8);
        assert!((fit.model.phi - 0.497_999_610_033_609_9).abs() < 1e-8, "{}", fit.model.phi);
        let q = fit.model.baseline.one_minus_p0();
        assert!(0.4 <= q);
        let lhs = 1.0 - (fit.model.phi + (1.0 - fit.model.phi) * fit.model.baseline.p0());
        assert!((lhs - (1.0 - fit.model.phi) * q).abs() < 1e-12);
    }

    #[test]
    fn test_zip_case_two_all_nonzero_beats_case_one_candidate() {
        let data = cv(&[1, 1, 2, 1, 3, 1, 2, 1]);
        let fit = fit_zero_inflated(Family::Poisson, &data, &FitOptions::default()).unwrap();
        assert_eq!(fit.case_tag, CaseTag::ZiCase2);
        assert_eq!(fit.model.phi, 0.0);
        // The plain Poisson MLE is the sample mean here.
        let lam = fit.model.baseline.to_vec()[0];
        assert!((lam - 1.5).abs() < 1e-7, "{lam}");
        let t = fit_truncated(Family::Poisson, &data, &FitOptions::default()).unwrap();
        let cand = ZeroModifiedModel::inflated(t.params, 0.0).unwrap();
        assert!(fit.loglik >= cand.log_likelihood(&data));
    }

    #[test]
    fn test_baseline_poisson_mean_and_bb_support() {
        let fit = fit_baseline(Family::Poisson, &cv(&[1, 2, 3]), &FitOptions::default()).unwrap();
        assert!((fit.model.baseline.to_vec()[0] - 2.0).abs() < 1e-8);
        let data = cv(&[0, 9, 3, 2, 4, 0, 1, 5]);
        let bb = fit_baseline(Family::BetaBin, &data, &FitOptions::default()).unwrap();
        assert!(bb.model.baseline.to_vec()[0] >= 9.0);
        assert!(bb.trials_rounded.unwrap() >= 9);
        assert!(bb.loglik.is_finite());
    }

    #[test]
    fn test_mle_beats_random_neighbours() {
        use rand::Rng;
        let data = ZeroModifiedModel::inflated(BaselineParams::neg_bin(2.0, 0.6).unwrap(), 0.3)
            .unwrap()
            .sample(400, 3);
        let fit = fit_zero_inflated(Family::NegBin, &data, &FitOptions::default()).unwrap();
        let mut rng = crate::rng::seeded(1);
        let theta = fit.model.baseline.to_vec();
        for _ in 0..100 {
            let phi = (fit.model.phi + rng.gen_range(-1e-3..1e-3)).clamp(0.0, 1.0);
            let t: Vec<f64> = theta.iter().map(|x| x * (1.0 + rng.gen_range(-1e-3..1e-3))).collect();
            let other = ZeroModifiedModel::inflated(BaselineParams::from_slice(Family::NegBin, &t).unwrap(), phi).unwrap();
            assert!(fit.loglik >= other.log_likelihood(&data) - 1e-9);
        }
    }
}

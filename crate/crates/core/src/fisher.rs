//! Fisher information of plain, hurdle and zero-inflated models, and Wald
//! confidence intervals built from it.
//!
//! With `g = ∇ ln p₀(θ)`, `E H = E_θ[∇² ln f_θ(Y)]` and `π₀ = φ + (1 − φ)p₀`,
//! the per-observation information matrices (ordered φ, θ) are
//!
//! ```text
//! hurdle:  [ 1/(φ(1−φ))   0                                       ]
//!          [ 0            −(1−φ)/(1−p₀) · (E H + p₀/(1−p₀) g gᵀ)  ]
//!
//! ZI:      [ (1−p₀)/(π₀(1−φ))   (p₀/π₀) gᵀ                 ]
//!          [ (p₀/π₀) g          −(1−φ)(E H + φ p₀/π₀ g gᵀ)  ]
//! ```
//!
//! `E H` is computed by summing a central-difference Hessian of the analytic
//! gradient over the support (tail mass 1e-12). Poisson hurdle, NB hurdle and
//! ZIP also have closed forms, which are used by default.

use crate::baselines::{BaselineParams, Family, NegBinParams};
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::specfun::psi1;
use crate::zero_models::{ZeroKind, ZeroModifiedModel};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Tail mass ignored by support sums.
pub const EXPECTATION_TAIL: f64 = 1e-12;

/// Condition number above which the information is treated as singular.
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    /// Symmetric matrix ordered (φ, θ₁, …, θ_p), or θ only for plain models.
    pub entries: DMatrix<f64>,
    /// `true` when the entries are for a single observation.
    pub per_observation: bool,
    pub names: Vec<&'static str>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn scaled(&self, n: usize) -> FisherMatrix {
        FisherMatrix {
            entries: &self.entries * n as f64,
            per_observation: false,
            names: self.names.clone(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Ratio of the largest to the smallest eigenvalue magnitude.
    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        let max = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Inverse of a positive definite matrix, or a singularity error.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let condition = self.condition_number();
        if !(condition.is_finite() && condition <= MAX_CONDITION) || self.eigenvalues()[0] <= 0.0 {
            return Err(Error::SingularFisher { condition });
        }
        self.entries
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(Error::SingularFisher { condition })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub parameter: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// `E_θ[∇² ln f_θ(Y)]` per observation, by support summation of a
/// central-difference Hessian of the analytic gradient.
pub fn expected_hessian(params: &BaselineParams) -> DMatrix<f64> {
    let d = params.discretized();
    let theta = d.to_vec();
    let dim = theta.len();
    let top = d.support_cutoff(EXPECTATION_TAIL);
    let weights: Vec<f64> = (0..=top).map(|y| d.pmf(y)).collect();
    let expected_grad = |t: &[f64]| -> Vec<f64> {
        let p = BaselineParams::from_slice(d.family(), t).expect("perturbed parameters stay valid");
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (y, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            p.grad_log_pmf_into(y as u64, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += w * b;
            }
        }
        acc
    };
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let step = fd_step(d.family(), j, theta[j]);
        let (mut plus, mut minus) = (theta.clone(), theta.clone());
        plus[j] += step;
        minus[j] -= step;
        let (gp, gm) = (expected_grad(&plus), expected_grad(&minus));
        for i in 0..dim {
            h[(i, j)] = (gp[i] - gm[i]) / (plus[j] - minus[j]);
        }
    }
    (&h + h.transpose()) * 0.5
}

fn fd_step(family: Family, index: usize, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    if family == Family::NegBin && index == 1 {
        // keep p ± h inside (0, 1)
        h.min(0.5 * x.min(1.0 - x))
    } else if x - h <= 0.0 {
        0.5 * x
    } else {
        h
    }
}

/// `A = Ψ₁(r) − E Ψ₁(Y′ + r)` for `Y′ ~ NB(r, p)`.
///
/// Summed as `Σ_{y≥1} f(y) (Ψ₁(r) − Ψ₁(y + r))`, whose terms are all
/// nonnegative, so no cancellation occurs.
pub fn expected_trigamma_term(params: &NegBinParams) -> f64 {
    let b = BaselineParams::NegBin(*params);
    let top = b.support_cutoff(EXPECTATION_TAIL);
    let t0 = psi1(params.r);
    (1..=top).map(|y| b.pmf(y) * (t0 - psi1(y as f64 + params.r))).sum()
}

fn outer(g: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(g.len(), g.len(), |i, j| g[i] * g[j])
}

fn names(model: &ZeroModifiedModel) -> Vec<&'static str> {
    let mut v = Vec::with_capacity(4);
    if model.kind != ZeroKind::None {
        v.push("phi");
    }
    v.extend_from_slice(model.baseline.family().param_names());
    v
}

/// Assembles the (φ, θ) matrix from its blocks.
fn assemble(f11: f64, cross: &[f64], f22: &DMatrix<f64>) -> DMatrix<f64> {
    let p = cross.len();
    let mut m = DMatrix::zeros(p + 1, p + 1);
    m[(0, 0)] = f11;
    for i in 0..p {
        m[(0, i + 1)] = cross[i];
        m[(i + 1, 0)] = cross[i];
        for j in 0..p {
            m[(i + 1, j + 1)] = f22[(i, j)];
        }
    }
    m
}

fn hurdle_generic(model: &ZeroModifiedModel) -> DMatrix<f64> {
    let b = model.baseline.discretized();
    let (phi, p0) = (model.phi, b.p0());
    let q = b.one_minus_p0();
    let g = b.grad_log_p0();
    let f22 = (expected_hessian(&b) + outer(&g) * (p0 / q)) * (-(1.0 - phi) / q);
    assemble(1.0 / (phi * (1.0 - phi)), &vec![0.0; g.len()], &f22)
}

fn zi_generic(model: &ZeroModifiedModel) -> DMatrix<f64> {
    let b = model.baseline.discretized();
    let (phi, p0) = (model.phi, b.p0());
    let pi0 = phi + (1.0 - phi) * p0;
    let g = b.grad_log_p0();
    let f11 = b.one_minus_p0() / (pi0 * (1.0 - phi));
    let cross: Vec<f64> = g.iter().map(|gi| p0 / pi0 * gi).collect();
    let f22 = (expected_hessian(&b) + outer(&g) * (phi * p0 / pi0)) * (-(1.0 - phi));
    assemble(f11, &cross, &f22)
}

/// Per-observation closed forms: Poisson hurdle, NB hurdle and ZIP.
fn closed_form(model: &ZeroModifiedModel) -> Option<DMatrix<f64>> {
    let phi = model.phi;
    match (model.kind, model.baseline) {
        (ZeroKind::Hurdle, BaselineParams::Poisson(p)) => {
            let lam = p.lambda;
            let e = (-lam).exp();
            let q = -(-lam).exp_m1();
            let f22 = (1.0 - phi) / q * (1.0 / lam - e / q);
            Some(assemble(1.0 / (phi * (1.0 - phi)), &[0.0], &DMatrix::from_element(1, 1, f22)))
        }
        (ZeroKind::Hurdle, BaselineParams::NegBin(nb)) => {
            let (r, p) = (nb.r, nb.p);
            let q = 1.0 - p;
            let ln_q = (-p).ln_1p();
            let qr = (r * ln_q).exp();
            let one_m_qr = -(r * ln_q).exp_m1();
            let a = expected_trigamma_term(&nb);
            let base = DMatrix::from_row_slice(2, 2, &[a, 1.0 / q, 1.0 / q, r / (p * q * q)]);
            let gg = DMatrix::from_row_slice(
                2,
                2,
                &[ln_q * ln_q, -r * ln_q / q, -r * ln_q / q, r * r / (q * q)],
            );
            let f22 = (base - gg * (qr / one_m_qr)) * ((1.0 - phi) / one_m_qr);
            Some(assemble(1.0 / (phi * (1.0 - phi)), &[0.0, 0.0], &f22))
        }
        (ZeroKind::Inflated, BaselineParams::Poisson(p)) => {
            let lam = p.lambda;
            let e = (-lam).exp();
            let pi0 = phi + (1.0 - phi) * e;
            let f11 = -(-lam).exp_m1() / (pi0 * (1.0 - phi));
            let f12 = -e / pi0;
            let f22 = (1.0 - phi) * (1.0 / lam - phi * e / pi0);
            Some(DMatrix::from_row_slice(2, 2, &[f11, f12, f12, f22]))
        }
        _ => None,
    }
}

/// Which evaluation path to use for the information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherPath {
    /// Closed form where one exists, numeric otherwise.
    Auto,
    /// Always the support-summed numeric expectation.
    Numeric,
}

fn check_phi(model: &ZeroModifiedModel) -> Result<()> {
    let phi = model.phi;
    let bad = match model.kind {
        ZeroKind::Hurdle => !(phi > 0.0 && phi < 1.0),
        ZeroKind::Inflated => !(0.0..1.0).contains(&phi),
        ZeroKind::None => false,
    };
    if bad {
        Err(Error::Boundary { phi })
    } else {
        Ok(())
    }
}

/// Per-observation information matrix of any model.
pub fn information(model: &ZeroModifiedModel, path: FisherPath) -> Result<FisherMatrix> {
    check_phi(model)?;
    if model.kind == ZeroKind::Hurdle {
        model.baseline.discretized().check_truncatable()?;
    }
    let closed = if path == FisherPath::Auto { closed_form(model) } else { None };
    let entries = match (closed, model.kind) {
        (Some(m), _) => m,
        (None, ZeroKind::Hurdle) => hurdle_generic(model),
        (None, ZeroKind::Inflated) => zi_generic(model),
        (None, ZeroKind::None) => -expected_hessian(&model.baseline),
    };
    Ok(FisherMatrix {
        entries,
        per_observation: true,
        names: names(model),
    })
}

/// Information of `n` observations from a hurdle model.
pub fn fisher_hurdle(model: &ZeroModifiedModel, n: usize) -> Result<FisherMatrix> {
    if model.kind != ZeroKind::Hurdle {
        return Err(Error::InvalidParameter("fisher_hurdle needs a hurdle model".into()));
    }
    information(model, FisherPath::Auto).map(|f| f.scaled(n))
}

/// Information of `n` observations from a zero-inflated model.
pub fn fisher_zero_inflated(model: &ZeroModifiedModel, n: usize) -> Result<FisherMatrix> {
    if model.kind != ZeroKind::Inflated {
        return Err(Error::InvalidParameter("fisher_zero_inflated needs a zero-inflated model".into()));
    }
    information(model, FisherPath::Auto).map(|f| f.scaled(n))
}

/// Information of `n` observations from the plain baseline.
pub fn fisher_baseline(params: &BaselineParams, n: usize) -> FisherMatrix {
    information(&ZeroModifiedModel::plain(*params), FisherPath::Auto)
        .expect("plain models have no boundary")
        .scaled(n)
}

/// Score `∇ ln f(y)` of the model in (φ, θ) (θ only for plain models).
pub fn score(model: &ZeroModifiedModel, y: u64) -> Result<Vec<f64>> {
    let b = &model.baseline;
    let phi = model.phi;
    let dim = b.family().n_params();
    let mut out = Vec::with_capacity(dim + 1);
    match model.kind {
        ZeroKind::None => return b.grad_log_pmf(y),
        ZeroKind::Hurdle => {
            if y == 0 {
                out.push(1.0 / phi);
                out.extend(std::iter::repeat_n(0.0, dim));
            } else {
                out.push(-1.0 / (1.0 - phi));
                let g = b.grad_log_pmf(y)?;
                let g0 = b.grad_log_p0();
                let odds = b.p0() / b.one_minus_p0();
                out.extend(g.iter().zip(&g0).map(|(a, c)| a + odds * c));
            }
        }
        ZeroKind::Inflated => {
            if y == 0 {
                let p0 = b.p0();
                let pi0 = phi + (1.0 - phi) * p0;
                out.push(b.one_minus_p0() / pi0);
                out.extend(b.grad_log_p0().iter().map(|g| (1.0 - phi) * p0 * g / pi0));
            } else {
                out.push(-1.0 / (1.0 - phi));
                out.extend(b.grad_log_pmf(y)?);
            }
        }
    }
    Ok(out)
}

/// Two-sided standard normal quantile for a confidence level.
pub fn z_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 * (1.0 + level)))
}

/// Asymptotic standard errors of the fitted parameters, ordered as
/// [`FitResult::estimates`].
///
/// Hurdle fits use the block structure (φ̂ and θ̂ are asymptotically
/// independent); zero-inflated fits invert the full matrix.
pub fn standard_errors(fit: &FitResult) -> Result<Vec<f64>> {
    let model = &fit.model;
    let n = fit.n;
    match model.kind {
        ZeroKind::Hurdle => {
            check_phi(model)?;
            let full = information(model, FisherPath::Auto)?.scaled(n);
            let p = full.dim() - 1;
            let block = FisherMatrix {
                entries: full.entries.view((1, 1), (p, p)).into_owned(),
                per_observation: false,
                names: full.names[1..].to_vec(),
            };
            let inv = block.inverse()?;
            let mut se = vec![(model.phi * (1.0 - model.phi) / n as f64).sqrt()];
            se.extend((0..p).map(|i| inv[(i, i)].sqrt()));
            Ok(se)
        }
        ZeroKind::Inflated => {
            if model.phi <= 0.0 {
                return Err(Error::Boundary { phi: model.phi });
            }
            let inv = information(model, FisherPath::Auto)?.scaled(n).inverse()?;
            Ok((0..inv.nrows()).map(|i| inv[(i, i)].sqrt()).collect())
        }
        ZeroKind::None => {
            let inv = information(model, FisherPath::Auto)?.scaled(n).inverse()?;
            Ok((0..inv.nrows()).map(|i| inv[(i, i)].sqrt()).collect())
        }
    }
}

/// Wald intervals `estimate ± z·SE`.
///
/// Suppressed with [`Error::Boundary`] when φ̂ sits on 0 or 1, where the
/// normal approximation does not hold.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<ConfidenceInterval>> {
    let z = z_quantile(level)?;
    let se = standard_errors(fit)?;
    Ok(fit
        .parameter_names()
        .into_iter()
        .zip(fit.estimates())
        .zip(se)
        .map(|((name, est), s)| ConfidenceInterval {
            parameter: name.to_string(),
            estimate: est,
            standard_error: s,
            lower: est - z * s,
            upper: est + z * s,
            level,
        })
        .collect())
}

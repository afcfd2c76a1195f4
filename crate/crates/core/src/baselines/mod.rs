//! Baseline count families: Poisson, negative binomial (NB), beta binomial
//! (BB) and beta negative binomial (BNB).
//!
//! Everything is evaluated in the log domain through [`crate::specfun`], so
//! large counts never overflow the gamma-function ratios. For each family the
//! module provides the log-pmf, the zero probability `p₀(θ) = f_θ(0)`,
//! analytic gradients of `ln f_θ(y)` and `ln p₀(θ)` with respect to the
//! natural parameters, the zero-truncated log-pmf, the cdf and a seeded
//! sampler.
//!
//! Parameter order (used by every gradient, Fisher matrix and optimizer
//! vector in the crate):
//!
//! | family | θ            |
//! |--------|--------------|
//! | Poisson| (λ)          |
//! | NB     | (r, p)       |
//! | BB     | (n, α, β)    |
//! | BNB    | (r, α, β)    |
//!
//! The BB trial count `n` is a continuous parameter for likelihood purposes.
//! Distribution-level operations (cdf, sampling, support enumeration) use the
//! integer trial count `round(n)`, see [`BaselineParams::discretized`].

pub mod sampling;

use crate::data::CountVector;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::specfun::{lbeta, lgamma, psi};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Hard cap on the number of support points summed for infinite supports.
pub const MAX_SUPPORT_TERMS: u64 = 10_000_000;

/// Tail mass left out when summing over an infinite support.
pub const DEFAULT_TAIL: f64 = 1e-10;

/// `p₀` at or above this makes the zero-truncated distribution undefined.
pub const DEGENERATE_P0: f64 = 1.0 - 1e-12;

/// Optimization box bounds for each parameter.
pub mod bounds {
    pub const LAMBDA: (f64, f64) = (1e-8, 1e8);
    pub const R: (f64, f64) = (1e-8, 1e6);
    pub const P: (f64, f64) = (1e-10, 1.0 - 1e-10);
    pub const SHAPE: (f64, f64) = (1e-8, 1e6);
    /// Upper bound for the BB trial count; the lower bound is `max(Y)`.
    pub const TRIALS_MAX: f64 = 1e8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "poisson")]
    Poisson,
    #[serde(rename = "nb")]
    NegBin,
    #[serde(rename = "bb")]
    BetaBin,
    #[serde(rename = "bnb")]
    BetaNegBin,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Poisson,
        Family::NegBin,
        Family::BetaBin,
        Family::BetaNegBin,
    ];

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Poisson => &["lambda"],
            Family::NegBin => &["r", "p"],
            Family::BetaBin => &["n", "alpha", "beta"],
            Family::BetaNegBin => &["r", "alpha", "beta"],
        }
    }

    /// CLI spelling.
    pub fn key(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::NegBin => "nb",
            Family::BetaBin => "bb",
            Family::BetaNegBin => "bnb",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Family::Poisson => "P",
            Family::NegBin => "NB",
            Family::BetaBin => "BB",
            Family::BetaNegBin => "BNB",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "p" => Ok(Family::Poisson),
            "nb" | "negbin" | "negative-binomial" => Ok(Family::NegBin),
            "bb" | "betabin" | "beta-binomial" => Ok(Family::BetaBin),
            "bnb" | "betanegbin" | "beta-negative-binomial" => Ok(Family::BetaNegBin),
            other => Err(Error::Usage(format!(
                "unknown family '{other}' (expected poisson|nb|bb|bnb)"
            ))),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub lambda: f64,
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        Ok(PoissonParams {
            lambda: positive("lambda", lambda)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinParams {
    pub r: f64,
    pub p: f64,
}

impl NegBinParams {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
        }
        Ok(NegBinParams {
            r: positive("r", r)?,
            p,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBinParams {
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BetaBinParams {
    pub fn new(n: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter(format!("n must be finite and >= 1, got {n}")));
        }
        Ok(BetaBinParams {
            n,
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }

    /// Integer trial count used for the distribution's support.
    pub fn trials(&self) -> u64 {
        self.n.round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaNegBinParams {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BetaNegBinParams {
    pub fn new(r: f64, alpha: f64, beta: f64) -> Result<Self> {
        Ok(BetaNegBinParams {
            r: positive("r", r)?,
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }
}

/// Parameters θ of one baseline family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BaselineParams {
    #[serde(rename = "poisson")]
    Poisson(PoissonParams),
    #[serde(rename = "nb")]
    NegBin(NegBinParams),
    #[serde(rename = "bb")]
    BetaBin(BetaBinParams),
    #[serde(rename = "bnb")]
    BetaNegBin(BetaNegBinParams),
}

impl BaselineParams {
    pub fn poisson(lambda: f64) -> Result<Self> {
        PoissonParams::new(lambda).map(BaselineParams::Poisson)
    }

    pub fn neg_bin(r: f64, p: f64) -> Result<Self> {
        NegBinParams::new(r, p).map(BaselineParams::NegBin)
    }

    pub fn beta_bin(n: f64, alpha: f64, beta: f64) -> Result<Self> {
        BetaBinParams::new(n, alpha, beta).map(BaselineParams::BetaBin)
    }

    pub fn beta_neg_bin(r: f64, alpha: f64, beta: f64) -> Result<Self> {
        BetaNegBinParams::new(r, alpha, beta).map(BaselineParams::BetaNegBin)
    }

    /// Builds a parameter record from a θ vector in the family's order.
    pub fn from_slice(family: Family, theta: &[f64]) -> Result<Self> {
        if theta.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                theta.len()
            )));
        }
        match family {
            Family::Poisson => Self::poisson(theta[0]),
            Family::NegBin => Self::neg_bin(theta[0], theta[1]),
            Family::BetaBin => Self::beta_bin(theta[0], theta[1], theta[2]),
            Family::BetaNegBin => Self::beta_neg_bin(theta[0], theta[1], theta[2]),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            BaselineParams::Poisson(_) => Family::Poisson,
            BaselineParams::NegBin(_) => Family::NegBin,
            BaselineParams::BetaBin(_) => Family::BetaBin,
            BaselineParams::BetaNegBin(_) => Family::BetaNegBin,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            BaselineParams::Poisson(PoissonParams { lambda }) => vec![lambda],
            BaselineParams::NegBin(NegBinParams { r, p }) => vec![r, p],
            BaselineParams::BetaBin(BetaBinParams { n, alpha, beta }) => vec![n, alpha, beta],
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => vec![r, alpha, beta],
        }
    }

    /// BB with the trial count rounded to an integer; other families unchanged.
    pub fn discretized(&self) -> BaselineParams {
        match *self {
            BaselineParams::BetaBin(b) => BaselineParams::BetaBin(BetaBinParams {
                n: b.n.round(),
                ..b
            }),
            other => other,
        }
    }

    /// Largest support point for finite supports (BB), `None` otherwise.
    pub fn support_max(&self) -> Option<u64> {
        match self {
            BaselineParams::BetaBin(b) => Some(b.trials()),
            _ => None,
        }
    }

    /// `ln f_θ(y)`; `−∞` outside the support.
    pub fn log_pmf(&self, y: u64) -> f64 {
        let yf = y as f64;
        match *self {
            BaselineParams::Poisson(PoissonParams { lambda }) => {
                if y == 0 {
                    -lambda
                } else {
                    yf * lambda.ln() - lambda - lgamma(yf + 1.0)
                }
            }
            BaselineParams::NegBin(NegBinParams { r, p }) => {
                let tail = r * (-p).ln_1p();
                if y == 0 {
                    tail
                } else {
                    lgamma(yf + r) - lgamma(yf + 1.0) - lgamma(r) + yf * p.ln() + tail
                }
            }
            BaselineParams::BetaBin(BetaBinParams { n, alpha, beta }) => {
                if yf > n {
                    return f64::NEG_INFINITY;
                }
                lgamma(n + 1.0) - lgamma(yf + 1.0) - lgamma(n - yf + 1.0)
                    + lbeta(yf + alpha, n - yf + beta)
                    - lbeta(alpha, beta)
            }
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => {
                lgamma(r + yf) - lgamma(r) - lgamma(yf + 1.0) + lbeta(alpha + r, beta + yf)
                    - lbeta(alpha, beta)
            }
        }
    }

    pub fn pmf(&self, y: u64) -> f64 {
        self.log_pmf(y).exp()
    }

    /// `ln p₀(θ)`; the same code path as `log_pmf(0)`.
    pub fn log_p0(&self) -> f64 {
        self.log_pmf(0)
    }

    pub fn p0(&self) -> f64 {
        self.log_p0().exp()
    }

    /// `1 − p₀(θ)` without cancellation when `p₀` is small.
    pub fn one_minus_p0(&self) -> f64 {
        -self.log_p0().exp_m1()
    }

    /// `ln(1 − p₀(θ))`.
    pub fn log_one_minus_p0(&self) -> f64 {
        log1m_exp(self.log_p0())
    }

    fn in_support(&self, y: u64) -> bool {
        match self {
            BaselineParams::BetaBin(b) => y as f64 <= b.n,
            _ => true,
        }
    }

    /// ∂ ln f_θ(y) / ∂θ.
    pub fn grad_log_pmf(&self, y: u64) -> Result<Vec<f64>> {
        if !self.in_support(y) {
            return Err(Error::OutsideSupport {
                family: self.family().key(),
                y,
            });
        }
        let mut g = vec![0.0; self.family().n_params()];
        self.grad_log_pmf_into(y, &mut g);
        Ok(g)
    }

    /// ∂ ln p₀(θ) / ∂θ.
    pub fn grad_log_p0(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.family().n_params()];
        self.grad_log_p0_into(&mut g);
        g
    }

    /// Unchecked gradient of `ln f_θ(y)`, written into `out`.
    pub(crate) fn grad_log_pmf_into(&self, y: u64, out: &mut [f64]) {
        let yf = y as f64;
        match *self {
            BaselineParams::Poisson(PoissonParams { lambda }) => {
                out[0] = yf / lambda - 1.0;
            }
            BaselineParams::NegBin(NegBinParams { r, p }) => {
                out[0] = if y == 0 { 0.0 } else { psi(yf + r) - psi(r) } + (-p).ln_1p();
                out[1] = yf / p - r / (1.0 - p);
            }
            BaselineParams::BetaBin(BetaBinParams { n, alpha, beta }) => {
                let d_nab = psi(n + alpha + beta);
                let d_ab = psi(alpha + beta);
                let d_nyb = psi(n - yf + beta);
                out[0] = psi(n + 1.0) - psi(n - yf + 1.0) + d_nyb - d_nab;
                out[1] = psi(yf + alpha) - d_nab + d_ab - psi(alpha);
                out[2] = d_nyb - d_nab + d_ab - psi(beta);
            }
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => {
                let d_all = psi(alpha + r + beta + yf);
                let d_ar = psi(alpha + r);
                let d_ab = psi(alpha + beta);
                out[0] = if y == 0 { 0.0 } else { psi(r + yf) - psi(r) } + d_ar - d_all;
                out[1] = d_ar - d_all - psi(alpha) + d_ab;
                out[2] = if y == 0 { 0.0 } else { psi(beta + yf) - psi(beta) } - d_all + d_ab;
            }
        }
    }

    pub(crate) fn grad_log_p0_into(&self, out: &mut [f64]) {
        match *self {
            BaselineParams::Poisson(_) => out[0] = -1.0,
            BaselineParams::NegBin(NegBinParams { r, p }) => {
                out[0] = (-p).ln_1p();
                out[1] = -r / (1.0 - p);
            }
            BaselineParams::BetaBin(BetaBinParams { n, alpha, beta }) => {
                let d_nab = psi(n + alpha + beta);
                let d_nb = psi(n + beta);
                let d_ab = psi(alpha + beta);
                out[0] = d_nb - d_nab;
                out[1] = d_ab - d_nab;
                out[2] = d_nb + d_ab - d_nab - psi(beta);
            }
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => {
                let d_all = psi(alpha + r + beta);
                let d_ar = psi(alpha + r);
                let d_ab = psi(alpha + beta);
                out[0] = d_ar - d_all;
                out[1] = d_ar - d_all - psi(alpha) + d_ab;
                out[2] = d_ab - d_all;
            }
        }
    }

    /// `ln f_tr(y | θ) = ln f_θ(y) − ln(1 − p₀(θ))` for `y ≥ 1`.
    pub fn truncated_log_pmf(&self, y: u64) -> Result<f64> {
        if y == 0 {
            return Err(Error::OutsideSupport {
                family: "zero-truncated baseline",
                y,
            });
        }
        self.check_truncatable()?;
        Ok(self.log_pmf(y) - self.log_one_minus_p0())
    }

    pub(crate) fn check_truncatable(&self) -> Result<()> {
        let p0 = self.p0();
        if p0 >= DEGENERATE_P0 {
            Err(Error::DegenerateAtZero { p0 })
        } else {
            Ok(())
        }
    }

    /// `F_θ(y) = P(Y ≤ y)` by partial summation of the pmf.
    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() || y < 0.0 {
            return 0.0;
        }
        let d = self.discretized();
        let k = if y >= MAX_SUPPORT_TERMS as f64 {
            MAX_SUPPORT_TERMS
        } else {
            y.floor() as u64
        };
        if let Some(top) = d.support_max() {
            if k >= top {
                return 1.0;
            }
        }
        let mut s = 0.0;
        for j in 0..=k {
            s += d.pmf(j);
        }
        s.min(1.0)
    }

    /// Cumulative probabilities `F(0), …, F(k_max)` of the discretized model.
    pub fn cdf_table(&self, k_max: u64) -> Vec<f64> {
        let d = self.discretized();
        let mut out = Vec::with_capacity(k_max as usize + 1);
        let mut s = 0.0;
        for j in 0..=k_max {
            s += d.pmf(j);
            out.push(s.min(1.0));
        }
        out
    }

    /// Smallest `y*` with `F(y*) ≥ 1 − tail`, capped at [`MAX_SUPPORT_TERMS`]
    /// (and at the trial count for BB).
    pub fn support_cutoff(&self, tail: f64) -> u64 {
        let d = self.discretized();
        if let Some(top) = d.support_max() {
            return top;
        }
        let target = 1.0 - tail;
        let mut s = 0.0;
        let mut y = 0u64;
        loop {
            s += d.pmf(y);
            if s >= target || y >= MAX_SUPPORT_TERMS {
                return y;
            }
            y += 1;
        }
    }

    /// One draw from the (discretized) distribution.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            BaselineParams::Poisson(PoissonParams { lambda }) => sampling::poisson(rng, lambda),
            BaselineParams::NegBin(NegBinParams { r, p }) => sampling::negative_binomial(rng, r, p),
            BaselineParams::BetaBin(b) => sampling::beta_binomial(rng, b.trials(), b.alpha, b.beta),
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => {
                sampling::beta_negative_binomial(rng, r, alpha, beta)
            }
        }
    }

    /// `count` iid draws, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> CountVector {
        let mut rng = seeded(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Steps between exact re-evaluations in [`PmfStream`].
const RESYNC_EVERY: u64 = 256;

/// `f(0), f(1), …` of a baseline by the ratio recurrence
/// `ln f(y+1) = ln f(y) + ln(f(y+1)/f(y))`, re-anchored on the exact
/// log-pmf every [`RESYNC_EVERY`] steps.
#[derive(Debug, Clone)]
pub struct PmfStream {
    params: BaselineParams,
    y: u64,
    log_f: f64,
}

impl PmfStream {
    pub fn new(params: BaselineParams) -> Self {
        PmfStream {
            log_f: params.log_pmf(0),
            params,
            y: 0,
        }
    }

    fn log_ratio(&self, y: u64) -> f64 {
        let yf = y as f64;
        match self.params {
            BaselineParams::Poisson(PoissonParams { lambda }) => lambda.ln() - (yf + 1.0).ln(),
            BaselineParams::NegBin(NegBinParams { r, p }) => p.ln() + ((yf + r) / (yf + 1.0)).ln(),
            BaselineParams::BetaBin(BetaBinParams { n, alpha, beta }) => {
                if yf + 1.0 > n {
                    f64::NEG_INFINITY
                } else {
                    ((n - yf) * (yf + alpha) / ((yf + 1.0) * (n - yf - 1.0 + beta))).ln()
                }
            }
            BaselineParams::BetaNegBin(BetaNegBinParams { r, alpha, beta }) => {
                ((r + yf) * (beta + yf) / ((yf + 1.0) * (alpha + r + beta + yf))).ln()
            }
        }
    }
}

impl Iterator for PmfStream {
    /// `(y, f(y))`.
    type Item = (u64, f64);

    fn next(&mut self) -> Option<(u64, f64)> {
        let out = (self.y, self.log_f.exp());
        let next = self.y + 1;
        self.log_f = if next.is_multiple_of(RESYNC_EVERY) {
            self.params.log_pmf(next)
        } else {
            self.log_f + self.log_ratio(self.y)
        };
        self.y = next;
        Some(out)
    }
}

/// `ln(1 − eˣ)` for `x ≤ 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

//! Zero-modified count distributions.
//!
//! * **Hurdle** (zero-altered): `f(0) = φ`, `f(y) = (1 − φ) f_tr(y | θ)` for
//!   `y ≥ 1`, where `f_tr` is the zero-truncated baseline.
//! * **Zero-inflated**: `f(0) = φ + (1 − φ) p₀(θ)`, `f(y) = (1 − φ) f_θ(y)`.
//! * **None**: the plain baseline (φ is ignored and kept at 0).
//!
//! `φ` may sit exactly on 0 or 1; log-probabilities are then `−∞` where the
//! corresponding branch has no mass.

use crate::baselines::{BaselineParams, PmfStream, MAX_SUPPORT_TERMS};
use crate::data::CountVector;
use crate::error::{Error, Result};
use crate::rng::seeded;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Above this `p₀` the hurdle sampler inverts the truncated cdf instead of
/// rejecting zeros from the baseline sampler.
const REJECTION_MAX_P0: f64 = 0.9;

/// Tail mass ignored by the truncated inversion table.
const INVERSION_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZeroKind {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "zi")]
    Inflated,
    #[serde(rename = "hurdle")]
    Hurdle,
}

impl ZeroKind {
    pub const ALL: [ZeroKind; 3] = [ZeroKind::None, ZeroKind::Inflated, ZeroKind::Hurdle];

    pub fn key(self) -> &'static str {
        match self {
            ZeroKind::None => "none",
            ZeroKind::Inflated => "zi",
            ZeroKind::Hurdle => "hurdle",
        }
    }
}

impl fmt::Display for ZeroKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ZeroKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "plain" => Ok(ZeroKind::None),
            "zi" | "inflated" | "zero-inflated" => Ok(ZeroKind::Inflated),
            "hurdle" | "za" | "zero-altered" => Ok(ZeroKind::Hurdle),
            other => Err(Error::Usage(format!(
                "unknown kind '{other}' (expected none|zi|hurdle)"
            ))),
        }
    }
}

/// A baseline together with its zero modification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroModifiedModel {
    pub baseline: BaselineParams,
    pub kind: ZeroKind,
    pub phi: f64,
}

impl ZeroModifiedModel {
    pub fn new(baseline: BaselineParams, kind: ZeroKind, phi: f64) -> Result<Self> {
        if kind == ZeroKind::None {
            return Ok(Self::plain(baseline));
        }
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::InvalidParameter(format!("phi must lie in [0, 1], got {phi}")));
        }
        if kind == ZeroKind::Hurdle && phi < 1.0 {
            baseline.discretized().check_truncatable()?;
        }
        Ok(ZeroModifiedModel { baseline, kind, phi })
    }

    pub fn plain(baseline: BaselineParams) -> Self {
        ZeroModifiedModel {
            baseline,
            kind: ZeroKind::None,
            phi: 0.0,
        }
    }

    pub fn hurdle(baseline: BaselineParams, phi: f64) -> Result<Self> {
        Self::new(baseline, ZeroKind::Hurdle, phi)
    }

    pub fn inflated(baseline: BaselineParams, phi: f64) -> Result<Self> {
        Self::new(baseline, ZeroKind::Inflated, phi)
    }

    /// `P(Y = 0)` under the model.
    pub fn prob_zero(&self) -> f64 {
        match self.kind {
            ZeroKind::None => self.baseline.p0(),
            ZeroKind::Hurdle => self.phi,
            ZeroKind::Inflated => self.phi + (1.0 - self.phi) * self.baseline.p0(),
        }
    }

    /// Log-probability of `y` under the model.
    pub fn log_pmf(&self, y: u64) -> f64 {
        let b = &self.baseline;
        match self.kind {
            ZeroKind::None => b.log_pmf(y),
            ZeroKind::Hurdle => {
                if y == 0 {
                    self.phi.ln()
                } else if self.phi >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (-self.phi).ln_1p() + b.log_pmf(y) - b.log_one_minus_p0()
                }
            }
            ZeroKind::Inflated => {
                if y == 0 {
                    self.prob_zero().ln()
                } else {
                    (-self.phi).ln_1p() + b.log_pmf(y)
                }
            }
        }
    }

    /// Log-likelihood of a whole sample.
    pub fn log_likelihood(&self, data: &CountVector) -> f64 {
        data.table()
            .map(|(y, c)| {
                let lp = self.log_pmf(y);
                // 0 · ln 0 = 0 never arises here: observed values have c ≥ 1.
                c as f64 * lp
            })
            .sum()
    }

    /// Model cdf `P(Y ≤ y)` (BB trial count rounded, see
    /// [`BaselineParams::discretized`]).
    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() || y < 0.0 {
            return 0.0;
        }
        let k = if y >= u64::MAX as f64 { u64::MAX } else { y.floor() as u64 };
        self.cdf_at_sorted(&[k])[0]
    }

    /// Cdf at ascending `points`, by one streaming pass over the pmf.
    ///
    /// The pass stops once the summed mass is within 1e-13 of one or after
    /// [`MAX_SUPPORT_TERMS`] terms; later points get the cdf reached there.
    pub fn cdf_at_sorted(&self, points: &[u64]) -> Vec<f64> {
        debug_assert!(points.windows(2).all(|w| w[0] <= w[1]));
        let d = self.baseline.discretized();
        let top = d.support_max().unwrap_or(u64::MAX);
        let q = d.one_minus_p0();
        let phi = self.phi;
        let mut stream = PmfStream::new(d);
        // Mass on 0..=y and on 1..=y of the baseline.
        let (mut all, mut positive) = (0.0f64, 0.0f64);
        let mut next_y = 0u64;
        let mut done = false;
        points
            .iter()
            .map(|&point| {
                while !done && next_y <= point {
                    let (y, f) = stream.next().expect("infinite stream");
                    all += f;
                    if y >= 1 {
                        positive += f;
                    }
                    next_y = y + 1;
                    if y >= top || all >= 1.0 - 1e-13 || y >= MAX_SUPPORT_TERMS {
                        done = true;
                    }
                }
                let base_all = if point >= top { 1.0 } else { all.min(1.0) };
                let v = match self.kind {
                    ZeroKind::None => base_all,
                    ZeroKind::Inflated => phi + (1.0 - phi) * base_all,
                    ZeroKind::Hurdle => {
                        if phi >= 1.0 || point >= top {
                            1.0
                        } else {
                            phi + (1.0 - phi) * (positive / q)
                        }
                    }
                };
                v.min(1.0)
            })
            .collect()
    }

    /// Cumulative probabilities at `0, 1, …, k_max`.
    pub fn cdf_table(&self, k_max: u64) -> Vec<f64> {
        let d = self.baseline.discretized();
        let top = d.support_max().unwrap_or(u64::MAX);
        let mut out = Vec::with_capacity(k_max as usize + 1);
        match self.kind {
            ZeroKind::None => return d.cdf_table(k_max),
            ZeroKind::Inflated => {
                let phi = self.phi;
                let mut s = 0.0;
                for j in 0..=k_max {
                    if j <= top {
                        s += d.pmf(j);
                    }
                    out.push((phi + (1.0 - phi) * s).min(1.0));
                }
            }
            ZeroKind::Hurdle => {
                let phi = self.phi;
                let denom = d.one_minus_p0();
                // Σ_{k=1}^{j} f(k) directly, avoiding F(j) − p₀ cancellation.
                let mut s = 0.0;
                for j in 0..=k_max {
                    if j >= 1 && j <= top && phi < 1.0 {
                        s += d.pmf(j);
                    }
                    let v = if phi >= 1.0 { 1.0 } else { phi + (1.0 - phi) * (s / denom) };
                    out.push(v.min(1.0));
                }
            }
        }
        out
    }

    /// Reusable sampler; builds the truncated inversion table once if needed.
    pub fn sampler(&self) -> ZmSampler {
        let d = self.baseline.discretized();
        let table = if self.kind == ZeroKind::Hurdle && self.phi < 1.0 && d.p0() > REJECTION_MAX_P0 {
            Some(truncated_table(&d))
        } else {
            None
        };
        ZmSampler {
            baseline: d,
            kind: self.kind,
            phi: self.phi,
            truncated_cdf: table,
        }
    }

    /// `count` iid draws, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> CountVector {
        let mut rng = seeded(seed);
        self.sampler().sample(&mut rng, count)
    }
}

fn truncated_table(d: &BaselineParams) -> Vec<f64> {
    let denom = d.one_minus_p0();
    let top = d.support_max().unwrap_or(MAX_SUPPORT_TERMS);
    let mut cum = Vec::new();
    let mut s = 0.0;
    let mut y = 1u64;
    while y <= top {
        s += d.pmf(y) / denom;
        cum.push(s);
        if s >= 1.0 - INVERSION_TAIL {
            break;
        }
        y += 1;
    }
    cum
}

/// Two-stage sampler: a zero indicator, then a baseline or truncated draw.
#[derive(Debug, Clone)]
pub struct ZmSampler {
    baseline: BaselineParams,
    kind: ZeroKind,
    phi: f64,
    /// Cumulative truncated probabilities at y = 1, 2, …
    truncated_cdf: Option<Vec<f64>>,
}

impl ZmSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.kind {
            ZeroKind::None => self.baseline.draw(rng),
            ZeroKind::Inflated => {
                if rng.gen::<f64>() < self.phi {
                    0
                } else {
                    self.baseline.draw(rng)
                }
            }
            ZeroKind::Hurdle => {
                if rng.gen::<f64>() < self.phi {
                    0
                } else {
                    self.draw_truncated(rng)
                }
            }
        }
    }

    fn draw_truncated<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.truncated_cdf {
            Some(cum) => {
                let u: f64 = rng.gen::<f64>() * cum.last().copied().unwrap_or(1.0);
                let idx = cum.partition_point(|&c| c < u);
                (idx.min(cum.len().saturating_sub(1)) + 1) as u64
            }
            None => loop {
                let y = self.baseline.draw(rng);
                if y != 0 {
                    return y;
                }
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> CountVector {
        (0..count).map(|_| self.draw(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::DEFAULT_TAIL;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn models() -> Vec<ZeroModifiedModel> {
        let bases = [
            BaselineParams::poisson(2.0).unwrap(),
            BaselineParams::neg_bin(2.0, 0.5).unwrap(),
            BaselineParams::beta_bin(8.0, 1.5, 2.0).unwrap(),
            BaselineParams::beta_neg_bin(2.0, 5.0, 1.5).unwrap(),
        ];
        let mut out = Vec::new();
        for b in bases {
            out.push(ZeroModifiedModel::plain(b));
            for phi in [0.0, 0.3, 0.85] {
                out.push(ZeroModifiedModel::hurdle(b, phi).unwrap());
                out.push(ZeroModifiedModel::inflated(b, phi).unwrap());
            }
        }
        out
    }

    #[test]
    fn test_log_pmf_examples() {
        let pois = BaselineParams::poisson(2.0).unwrap();
        let h = ZeroModifiedModel::hurdle(pois, 0.3).unwrap();
        assert!((h.log_pmf(0) - 0.3f64.ln()).abs() < 1e-15);
        let z = ZeroModifiedModel::inflated(pois, 0.0).unwrap();
        for y in 0..10 {
            assert!((z.log_pmf(y) - pois.log_pmf(y)).abs() < 1e-14);
        }
        let half = BaselineParams::poisson(2f64.ln()).unwrap();
        let z = ZeroModifiedModel::inflated(half, 0.5).unwrap();
        assert!((z.log_pmf(0) - 0.75f64.ln()).abs() < 1e-15);
        // boundary φ
        let h0 = ZeroModifiedModel::hurdle(pois, 0.0).unwrap();
        assert_eq!(h0.log_pmf(0), f64::NEG_INFINITY);
        let h1 = ZeroModifiedModel::hurdle(pois, 1.0).unwrap();
        assert_eq!(h1.log_pmf(3), f64::NEG_INFINITY);
        assert_eq!(h1.log_pmf(0), 0.0);
    }

    #[test]
    fn test_invalid_models() {
        let pois = BaselineParams::poisson(2.0).unwrap();
        assert!(ZeroModifiedModel::hurdle(pois, 1.2).is_err());
        assert!(ZeroModifiedModel::inflated(pois, -0.1).is_err());
        let degenerate = BaselineParams::poisson(1e-14).unwrap();
        assert!(ZeroModifiedModel::hurdle(degenerate, 0.5).is_err());
        assert!(ZeroModifiedModel::hurdle(degenerate, 1.0).is_ok());
    }

    #[test]
    fn test_normalization_and_cdf_consistency() {
        for m in models() {
            let top = m.baseline.support_cutoff(DEFAULT_TAIL);
            let pm: Vec<f64> = (0..=top).map(|y| m.log_pmf(y).exp()).collect();
            let total: f64 = pm.iter().sum();
            assert!((total - 1.0).abs() <= 1e-8, "{m:?}: {total}");
            let table = m.cdf_table(top.min(60));
            let mut s = 0.0;
            for (y, c) in table.iter().enumerate() {
                s += pm[y];
                assert!((s - c).abs() <= 1e-8, "{m:?} y={y}");
            }
            assert!(table.windows(2).all(|w| w[1] >= w[0] - 1e-15));
            assert_eq!(m.cdf(-1.0), 0.0);
            assert!((m.cdf(1e9) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn test_cdf_examples() {
        let nb = BaselineParams::neg_bin(2.0, 0.5).unwrap();
        let h = ZeroModifiedModel::hurdle(nb, 0.3).unwrap();
        assert!((h.cdf(0.0) - 0.3).abs() < 1e-15);
        let half = BaselineParams::poisson(2f64.ln()).unwrap();
        let z = ZeroModifiedModel::inflated(half, 0.5).unwrap();
        assert!((z.cdf(0.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn test_hurdle_and_zi_coincide_when_p0_vanishes() {
        // p₀ underflows to 0 for a large Poisson rate.
        let b = BaselineParams::poisson(800.0).unwrap();
        assert_eq!(b.p0(), 0.0);
        let h = ZeroModifiedModel::hurdle(b, 0.4).unwrap();
        let z = ZeroModifiedModel::inflated(b, 0.4).unwrap();
        for y in [0u64, 1, 700, 800, 900] {
            assert_eq!(h.log_pmf(y), z.log_pmf(y));
        }
    }

    #[test]
    fn test_sampling_zero_fraction_and_phi_one() {
        let pois = BaselineParams::poisson(2.0).unwrap();
        let all = ZeroModifiedModel::hurdle(pois, 1.0).unwrap().sample(1000, 1);
        assert_eq!(all.zeros(), 1000);
        let h = ZeroModifiedModel::hurdle(pois, 0.7).unwrap();
        let s = h.sample(100_000, 99);
        let frac = s.zeros() as f64 / 1e5;
        assert!((frac - 0.7).abs() <= 0.007);
        assert_eq!(s, h.sample(100_000, 99));
    }

    fn chi_square_pvalue(sample: &CountVector, probs: &[(u64, f64)]) -> f64 {
        // cells with expected count ≥ 5; the remainder is pooled
        let n = sample.n() as f64;
        let mut observed = std::collections::HashMap::new();
        for &y in sample.values() {
            *observed.entry(y).or_insert(0usize) += 1;
        }
        let mut stat = 0.0;
        let mut cells = 0;
        let (mut rest_obs, mut rest_exp) = (n, n);
        for &(y, p) in probs {
            let e = n * p;
            if e < 5.0 {
                continue;
            }
            let o = *observed.get(&y).unwrap_or(&0) as f64;
            stat += (o - e).powi(2) / e;
            rest_obs -= o;
            rest_exp -= e;
            cells += 1;
        }
        if rest_exp >= 5.0 {
            stat += (rest_obs - rest_exp).powi(2) / rest_exp;
            cells += 1;
        }
        1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn test_truncated_sampling_follows_truncated_pmf() {
        // Rejection path (p₀ small) and inversion path (p₀ > 0.9).
        for b in [
            BaselineParams::neg_bin(2.0, 0.5).unwrap(),
            BaselineParams::poisson(0.05).unwrap(),
            BaselineParams::neg_bin(0.05, 0.6).unwrap(),
            BaselineParams::beta_bin(6.0, 0.3, 3.0).unwrap(),
        ] {
            let m = ZeroModifiedModel::hurdle(b, 0.0).unwrap();
            let s = m.sample(100_000, 2024);
            assert_eq!(s.zeros(), 0);
            let probs: Vec<(u64, f64)> =
                (1..200).map(|y| (y, b.truncated_log_pmf(y).unwrap().exp())).collect();
            let p = chi_square_pvalue(&s, &probs);
            assert!(p > 0.001, "{b:?}: p = {p}");
        }
    }

    #[test]
    fn test_zi_phi_zero_matches_baseline_in_distribution() {
        let nb = BaselineParams::neg_bin(2.0, 0.5).unwrap();
        let a = ZeroModifiedModel::inflated(nb, 0.0).unwrap().sample(50_000, 5);
        let b = nb.sample(50_000, 6);
        // two-sample KS on integer support
        let top = a.max().max(b.max());
        let (mut fa, mut fb, mut d) = (0.0, 0.0, 0.0f64);
        let ca = crate::gof::empirical_counts(&a, top);
        let cb = crate::gof::empirical_counts(&b, top);
        for k in 0..=top as usize {
            fa += ca[k] as f64 / 5e4;
            fb += cb[k] as f64 / 5e4;
            d = d.max((fa - fb).abs());
        }
        // 1.63 · sqrt(2/n) is the 1% critical value
        assert!(d < 1.63 * (2.0f64 / 5e4).sqrt(), "D = {d}");
    }

    #[test]
    fn test_kind_parsing() {
        for k in ZeroKind::ALL {
            assert_eq!(k.key().parse::<ZeroKind>().unwrap(), k);
        }
        assert!("both".parse::<ZeroKind>().is_err());
    }
}

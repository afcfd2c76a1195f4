//! Draws from the baseline families.
//!
//! Poisson is sampled directly: sequential inversion for small rates and
//! the PTRS transformed-rejection method (Hörmann, 1993) above
//! [`INVERSION_MAX_RATE`]. The compound families are exact mixtures:
//! NB = Poisson(Gamma), BB = Binomial(Beta), BNB = NB(Beta).

use crate::specfun::lgamma;
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma};

pub const INVERSION_MAX_RATE: f64 = 30.0;

/// Gamma mixing rates above this are clamped before the Poisson draw.
const MAX_RATE: f64 = 1e15;

pub fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let lambda = lambda.min(MAX_RATE);
    if lambda <= INVERSION_MAX_RATE {
        poisson_inversion(rng, lambda)
    } else {
        poisson_ptrs(rng, lambda)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cum = p;
    // The cap only matters when u lands within rounding of 1.
    while u > cum && k < 10_000 {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -lambda + k * loglam - lgamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// NB with pmf `Γ(y+r)/(y! Γ(r)) p^y (1−p)^r`, as Poisson(Gamma(r, p/(1−p))).
pub fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, r: f64, p: f64) -> u64 {
    if !(p > 0.0) {
        return 0;
    }
    let scale = p / (1.0 - p);
    let rate = match Gamma::new(r, scale) {
        Ok(g) => g.sample(rng),
        Err(_) => return 0,
    };
    poisson(rng, rate)
}

pub fn beta_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, alpha: f64, beta: f64) -> u64 {
    let p = draw_beta(rng, alpha, beta);
    match Binomial::new(n, p) {
        Ok(b) => b.sample(rng),
        Err(_) => 0,
    }
}

/// BNB: the NB failure probability `1 − p` is Beta(α, β).
pub fn beta_negative_binomial<R: Rng + ?Sized>(rng: &mut R, r: f64, alpha: f64, beta: f64) -> u64 {
    let q = draw_beta(rng, alpha, beta);
    if !(q > 0.0) {
        return poisson(rng, MAX_RATE);
    }
    negative_binomial(rng, r, 1.0 - q)
}

fn draw_beta<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    match Beta::new(alpha, beta) {
        Ok(d) => d.sample(rng).clamp(0.0, 1.0),
        Err(_) => alpha / (alpha + beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn mean_var(xs: &[u64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let v = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
        (m, v)
    }

    #[test]
    fn test_poisson_both_regimes_moments() {
        for &lambda in &[0.3, 3.0, 29.0, 31.0, 250.0, 1e5] {
            let mut rng = seeded(11);
            let xs: Vec<u64> = (0..100_000).map(|_| poisson(&mut rng, lambda)).collect();
            let (m, v) = mean_var(&xs);
            let se = (lambda / xs.len() as f64).sqrt();
            assert!((m - lambda).abs() < 5.0 * se, "lambda={lambda} mean={m}");
            assert!((v / lambda - 1.0).abs() < 0.03, "lambda={lambda} var={v}");
        }
    }

    #[test]
    fn test_negative_binomial_moments() {
        let (r, p) = (2.0, 0.5);
        let mut rng = seeded(5);
        let xs: Vec<u64> = (0..200_000).map(|_| negative_binomial(&mut rng, r, p)).collect();
        let (m, v) = mean_var(&xs);
        let mu = r * p / (1.0 - p);
        let var = mu / (1.0 - p);
        assert!((m - mu).abs() < 5.0 * (var / xs.len() as f64).sqrt());
        assert!((v / var - 1.0).abs() < 0.05);
    }

    #[test]
    fn test_zero_rate_edge_cases() {
        let mut rng = seeded(1);
        assert_eq!(poisson(&mut rng, 0.0), 0);
        assert_eq!(negative_binomial(&mut rng, 2.0, 0.0), 0);
        assert_eq!(beta_binomial(&mut rng, 0, 1.0, 1.0), 0);
    }
}

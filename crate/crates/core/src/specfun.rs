//! Log-gamma, digamma, trigamma and log-beta for positive real arguments.
//!
//! All three gamma-family functions use the same scheme: shift the argument
//! upward with the functional recurrence until it is at least [`SHIFT_TO`],
//! then evaluate the Stirling / Bernoulli asymptotic series. Log-gamma
//! additionally switches to the Taylor series of `ln Γ(1 + z)` close to the
//! roots at 1 and 2, where the shifted form loses relative accuracy to
//! cancellation.
//!
//! The `PositiveReal`-taking functions are the validated surface; the `f64`
//! versions ([`lgamma`], [`psi`], [`psi1`], [`lbeta`]) skip validation and
//! return `NaN` outside the domain. Those are what the likelihood code uses in
//! its inner loops.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Recurrence shift target for the asymptotic expansions.
const SHIFT_TO: f64 = 10.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// B_{2k} for k = 1..=9.
const BERNOULLI_2K: [f64; 9] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
];

/// ζ(k) for k = 2..=25.
const ZETA: [f64; 24] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_369_9,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308_0,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307_0,
    1.000_015_282_259_408_7,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265_0,
    1.000_001_908_212_716_6,
    1.000_000_953_962_033_9,
    1.000_000_476_932_986_8,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926_0,
    1.000_000_059_608_189_1,
    1.000_000_029_803_503_5,
];

/// Strictly positive, finite real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(PositiveReal(value))
        } else {
            Err(Error::Domain {
                function: "PositiveReal",
                value,
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PositiveReal {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        PositiveReal::new(value)
    }
}

/// `ln Γ(x)`.
pub fn log_gamma(x: PositiveReal) -> f64 {
    lgamma(x.get())
}

/// Digamma `Ψ(x) = Γ'(x)/Γ(x)`.
pub fn digamma(x: PositiveReal) -> f64 {
    psi(x.get())
}

/// Trigamma `Ψ₁(x) = Ψ'(x)`.
pub fn trigamma(x: PositiveReal) -> f64 {
    psi1(x.get())
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b)`.
pub fn log_beta(a: PositiveReal, b: PositiveReal) -> f64 {
    lbeta(a.get(), b.get())
}

/// Checked variant of [`lgamma`] for callers holding a raw `f64`.
pub fn try_log_gamma(x: f64) -> Result<f64> {
    check("log_gamma", x).map(lgamma)
}

pub fn try_digamma(x: f64) -> Result<f64> {
    check("digamma", x).map(psi)
}

pub fn try_trigamma(x: f64) -> Result<f64> {
    check("trigamma", x).map(psi1)
}

pub fn try_log_beta(a: f64, b: f64) -> Result<f64> {
    let a = check("log_beta", a)?;
    let b = check("log_beta", b)?;
    Ok(lbeta(a, b))
}

fn check(function: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain { function, value: x })
    }
}

/// Unchecked `ln Γ(x)`; `NaN` for `x ≤ 0` or non-finite input.
pub fn lgamma(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NAN;
    }
    if (x - 1.0).abs() <= 0.2 {
        return lgamma1p_series(x - 1.0);
    }
    if (x - 2.0).abs() <= 0.2 {
        // Γ(2 + z) = (1 + z) Γ(1 + z)
        let z = x - 2.0;
        return z.ln_1p() + lgamma1p_series(z);
    }
    if x >= SHIFT_TO {
        return stirling(x);
    }
    // ln Γ(x) = ln Γ(x + k) − ln(x (x+1) ... (x+k−1))
    let mut prod = 1.0;
    let mut z = x;
    while z < SHIFT_TO {
        prod *= z;
        z += 1.0;
    }
    stirling(z) - prod.ln()
}

/// `ln Γ(1 + z)` by its Taylor series; accurate for `|z| ≤ 0.2`.
fn lgamma1p_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = -z;
    for (i, zeta) in ZETA.iter().enumerate() {
        let k = (i + 2) as f64;
        zk *= -z;
        sum += zeta * zk / k;
    }
    -EULER_GAMMA * z + sum
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut corr = 0.0;
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        let two_k = 2.0 * (k + 1) as f64;
        corr += b / (two_k * (two_k - 1.0)) * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + corr
}

/// Unchecked digamma; `NaN` for `x ≤ 0` or non-finite input.
pub fn psi(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NAN;
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < SHIFT_TO {
        shift += 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut pow = inv2;
    let mut series = 0.0;
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        series += b / (2.0 * (k + 1) as f64) * pow;
        pow *= inv2;
    }
    z.ln() - 0.5 / z - series - shift
}

/// Unchecked trigamma; `NaN` for `x ≤ 0` or non-finite input.
pub fn psi1(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NAN;
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < SHIFT_TO {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut pow = inv2 * inv;
    let mut series = 0.0;
    for b in BERNOULLI_2K.iter() {
        series += b * pow;
        pow *= inv2;
    }
    inv + 0.5 * inv2 + series + shift
}

/// Unchecked `ln B(a, b)`.
pub fn lbeta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

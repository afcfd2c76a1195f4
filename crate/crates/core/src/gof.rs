//! Discrete Kolmogorov–Smirnov statistic and the parametric-bootstrap p-value.
//!
//! The bootstrap follows the resample / refit / simulate scheme: for each
//! replicate the data are resampled with replacement, the model is refit, a
//! fresh sample of size n is drawn from the refit model, and the KS distance
//! between that sample and the refit model is recorded. The p-value is
//! `(#{D⁽ᵇ⁾ > Dₙ} + 1)/(B′ + 1)` over the B′ replicates whose refit succeeded.

use crate::baselines::Family;
use crate::data::CountVector;
use crate::error::Result;
use crate::fit::{fit_model, FitOptions, FitResult};
use crate::rng::{child_seed, seeded};
use crate::zero_models::{ZeroKind, ZeroModifiedModel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Number of observations equal to each of `0, 1, …, top`.
pub fn empirical_counts(data: &CountVector, top: u64) -> Vec<usize> {
    let mut out = vec![0usize; top as usize + 1];
    for (y, c) in data.table() {
        if y <= top {
            out[y as usize] += c;
        }
    }
    out
}

/// `sup_x |F̂ₙ(x) − F(x)|` for an integer-valued sample.
///
/// Both step functions jump only at integers. Between two consecutive
/// observed values `a < b` the empirical cdf is flat while the model cdf
/// rises, so the supremum over `[a, b)` is reached at `a` or at `b − 1`.
/// Beyond the largest observation `F̂ₙ = 1` and `|1 − F|` only shrinks.
/// The model cdf is therefore needed only at each atom and just below it.
pub fn ks_statistic(data: &CountVector, model: &ZeroModifiedModel) -> f64 {
    let n = data.n();
    if n == 0 {
        return 0.0;
    }
    let atoms: Vec<(u64, usize)> = data.table().collect();
    let mut points = Vec::with_capacity(2 * atoms.len());
    for &(y, _) in &atoms {
        if y > 0 && points.last() != Some(&(y - 1)) {
            points.push(y - 1);
        }
        points.push(y);
    }
    let cdf = model.cdf_at_sorted(&points);
    let at = |y: u64| cdf[points.binary_search(&y).expect("queried point")];
    let mut cum = 0usize;
    let mut d = 0.0f64;
    for &(y, c) in &atoms {
        let before = cum as f64 / n as f64;
        if y > 0 {
            d = d.max((before - at(y - 1)).abs());
        }
        cum += c;
        d = d.max((cum as f64 / n as f64 - at(y)).abs());
    }
    d.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub b: usize,
    pub seed: u64,
    /// Resample the data before each refit. Disabling it refits the original
    /// data every time, so replicates simulate from θ̂ directly.
    pub resample: bool,
    pub fit: FitOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            b: DEFAULT_BOOTSTRAP,
            seed: 0,
            resample: true,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub d_n: f64,
    pub p_value: f64,
    pub b: usize,
    /// Statistics of the successful replicates, in replicate order.
    pub replicate_stats: Vec<f64>,
    pub seed: u64,
    pub fit_failures: usize,
    pub resample: bool,
}

/// Fits the model to `data` and runs the bootstrap against that fit.
pub fn bootstrap_ks_pvalue(
    data: &CountVector,
    family: Family,
    kind: ZeroKind,
    opts: &BootstrapOptions,
) -> Result<KsReport> {
    let fit = fit_model(family, kind, data, &opts.fit)?;
    Ok(bootstrap_ks_with_fit(data, &fit, opts))
}

/// Bootstrap p-value for an existing fit of `data`.
///
/// Replicate `i` draws from its own generator seeded by
/// `child_seed(opts.seed, i)`, so the report does not depend on how
/// replicates are scheduled across threads.
pub fn bootstrap_ks_with_fit(data: &CountVector, fit: &FitResult, opts: &BootstrapOptions) -> KsReport {
    let d_n = ks_statistic(data, &fit.model);
    let (family, kind) = (fit.family(), fit.kind());
    let n = data.n();
    let stats: Vec<Option<f64>> = (0..opts.b as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(child_seed(opts.seed, i));
            let refit = if opts.resample {
                let values = data.values();
                let resampled: CountVector = (0..n).map(|_| values[rng.gen_range(0..n)]).collect();
                fit_model(family, kind, &resampled, &opts.fit).ok()?
            } else {
                fit.clone()
            };
            let simulated = refit.model.sampler().sample(&mut rng, n);
            Some(ks_statistic(&simulated, &refit.model))
        })
        .collect();
    let replicate_stats: Vec<f64> = stats.into_iter().flatten().collect();
    let exceed = replicate_stats.iter().filter(|&&d| d > d_n).count();
    KsReport {
        d_n,
        p_value: (exceed + 1) as f64 / (replicate_stats.len() + 1) as f64,
        b: opts.b,
        fit_failures: opts.b - replicate_stats.len(),
        replicate_stats,
        seed: opts.seed,
        resample: opts.resample,
    }
}

//! Simulation checks of the estimators, standard errors and the bootstrap test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use sparsefit::baselines::{BaselineParams, Family};
use sparsefit::cli::{run_scan, CountTable, ModelSpec, ScanOptions};
use sparsefit::fisher::{expected_trigamma_term, fisher_zero_inflated, standard_errors};
use sparsefit::fit::{fit_model, FitOptions};
use sparsefit::gof::{bootstrap_ks_pvalue, BootstrapOptions};
use sparsefit::specfun::psi1;
use sparsefit::zero_models::{ZeroKind, ZeroModifiedModel};

fn within_three_se(family: Family, kind: ZeroKind, truth: &ZeroModifiedModel, n: usize, seed: u64) {
    let data = truth.sample(n, seed);
    let fit = fit_model(family, kind, &data, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let se = standard_errors(&fit).unwrap();
    let mut want = vec![truth.phi];
    want.extend(truth.baseline.to_vec());
    if kind == ZeroKind::None {
        want.remove(0);
    }
    for ((est, se), t) in fit.estimates().iter().zip(&se).zip(&want) {
        assert!((est - t).abs() <= 3.0 * se, "{:?}: {est} vs {t} (se {se})", fit.parameter_names());
    }
}

#[test]
fn nb_hurdle_recovers_truth() {
    let truth = ZeroModifiedModel::hurdle(BaselineParams::neg_bin(3.0, 0.6).unwrap(), 0.4).unwrap();
    within_three_se(Family::NegBin, ZeroKind::Hurdle, &truth, 5000, 21);
}

#[test]
fn plain_nb_recovers_truth() {
    let truth = ZeroModifiedModel::plain(BaselineParams::neg_bin(2.0, 0.5).unwrap());
    within_three_se(Family::NegBin, ZeroKind::None, &truth, 5000, 22);
}

#[test]
fn zip_weight_shrinks_to_zero_without_inflation() {
    let truth = ZeroModifiedModel::inflated(BaselineParams::poisson(1.2).unwrap(), 0.0).unwrap();
    let data = truth.sample(5000, 23);
    let fit = fit_model(Family::Poisson, ZeroKind::Inflated, &data, &FitOptions::default()).unwrap();
    // The estimate sits on the boundary, so take the spread from the information at the truth.
    let info = fisher_zero_inflated(&truth, 5000).unwrap();
    let se_phi = info.inverse().unwrap()[(0, 0)].sqrt();
    assert!(fit.model.phi <= 3.0 * se_phi, "phi_hat {} vs 3 se {}", fit.model.phi, 3.0 * se_phi);
    assert!((fit.model.baseline.to_vec()[0] - 1.2).abs() < 0.1);
}

#[test]
fn trigamma_term_matches_monte_carlo() {
    // Independent sampler: NB as a gamma mixture of Poissons.
    let (r, p) = (2.0, 0.5);
    let gamma = Gamma::new(r, p / (1.0 - p)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 1_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..draws {
        let lam: f64 = gamma.sample(&mut rng);
        let y = if lam > 0.0 { Poisson::new(lam).unwrap().sample(&mut rng) } else { 0.0 };
        let v = psi1(r) - psi1(y + r);
        sum += v;
        sq += v * v;
    }
    let mean = sum / draws as f64;
    let sd = (sq / draws as f64 - mean * mean).sqrt();
    let a = expected_trigamma_term(&sparsefit::baselines::NegBinParams::new(r, p).unwrap());
    assert!((a - mean).abs() <= 3.0 * sd / (draws as f64).sqrt(), "{a} vs {mean}");
}

#[test]
fn bootstrap_test_rarely_rejects_a_true_zip() {
    let truth = ZeroModifiedModel::inflated(BaselineParams::poisson(3.0).unwrap(), 0.4).unwrap();
    let accepted = (0..10)
        .filter(|&s| {
            let data = truth.sample(200, 1000 + s);
            let opts = BootstrapOptions { b: 199, seed: s, ..Default::default() };
            bootstrap_ks_pvalue(&data, Family::Poisson, ZeroKind::Inflated, &opts).unwrap().p_value > 0.05
        })
        .count();
    assert!(accepted >= 9, "accepted {accepted} of 10");
}

#[test]
fn scan_prefers_overdispersed_models_on_zinb_features() {
    let truth = ZeroModifiedModel::inflated(BaselineParams::neg_bin(1.0, 0.8).unwrap(), 0.4).unwrap();
    let counts: Vec<Vec<u64>> = (0..50).map(|i| truth.sample(100, 500 + i).values().to_vec()).collect();
    let table = CountTable::new(
        (0..50).map(|i| format!("f{i}")).collect(),
        (0..100).map(|j| format!("S{j}")).collect(),
        counts,
    )
    .unwrap();
    let models: Vec<ModelSpec> = ["poisson", "zip", "ph", "zinb", "zibnb"].iter().map(|k| k.parse().unwrap()).collect();
    let opts = ScanOptions {
        models,
        alpha: 0.05,
        bootstrap: BootstrapOptions { b: 49, seed: 4, ..Default::default() },
    };
    let report = run_scan(&table, &opts);
    let count = |k: &str| report.summary.iter().find(|s| s.model == k).unwrap().number;
    for good in ["zinb", "zibnb"] {
        for bad in ["poisson", "zip", "ph"] {
            assert!(count(good) > count(bad), "{good} {} vs {bad} {}", count(good), count(bad));
        }
    }
    assert!(count("zinb") >= 40);
}

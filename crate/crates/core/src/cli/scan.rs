//! Fit-and-test scan over every feature of a count table.

use super::table::CountTable;
use crate::baselines::Family;
use crate::error::{Error, Result};
use crate::fit::fit_model;
use crate::gof::{bootstrap_ks_with_fit, BootstrapOptions};
use crate::rng::child_seed;
use crate::zero_models::ZeroKind;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

/// One of the twelve family × zero-modification combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub family: Family,
    pub kind: ZeroKind,
}

impl ModelSpec {
    /// Report order: plain, zero-inflated, hurdle.
    pub const ALL: [ModelSpec; 12] = {
        const fn m(family: Family, kind: ZeroKind) -> ModelSpec {
            ModelSpec { family, kind }
        }
        use Family::*;
        use ZeroKind::*;
        [
            m(Poisson, None),
            m(NegBin, None),
            m(BetaBin, None),
            m(BetaNegBin, None),
            m(Poisson, Inflated),
            m(NegBin, Inflated),
            m(BetaBin, Inflated),
            m(BetaNegBin, Inflated),
            m(Poisson, Hurdle),
            m(NegBin, Hurdle),
            m(BetaBin, Hurdle),
            m(BetaNegBin, Hurdle),
        ]
    };

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&m| m == self).expect("every spec is listed")
    }

    pub fn key(self) -> &'static str {
        const KEYS: [&str; 12] = [
            "poisson", "nb", "bb", "bnb", "zip", "zinb", "zibb", "zibnb", "ph", "nbh", "bbh", "bnbh",
        ];
        KEYS[self.index()]
    }

    pub fn label(self) -> &'static str {
        const LABELS: [&str; 12] = [
            "Poisson",
            "negative binomial (NB)",
            "beta binomial (BB)",
            "beta negative binomial (BNB)",
            "zero-inflated Poisson (ZIP)",
            "zero-inflated negative binomial (ZINB)",
            "zero-inflated beta binomial (ZIBB)",
            "zero-inflated beta negative binomial (ZIBNB)",
            "Poisson hurdle (PH)",
            "negative binomial hurdle (NBH)",
            "beta binomial hurdle (BBH)",
            "beta negative binomial hurdle (BNBH)",
        ];
        LABELS[self.index()]
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ModelSpec::ALL
            .into_iter()
            .find(|m| m.key() == key)
            .ok_or_else(|| Error::Usage(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub models: Vec<ModelSpec>,
    pub alpha: f64,
    /// `seed` here is the master seed of the scan.
    pub bootstrap: BootstrapOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub feature_id: String,
    pub model: &'static str,
    pub phi: Option<f64>,
    pub theta: Vec<(&'static str, f64)>,
    pub loglik: Option<f64>,
    pub d_n: Option<f64>,
    pub p_value: Option<f64>,
    pub converged: bool,
    pub fit_failures: usize,
    pub error: Option<String>,
}

impl ScanRecord {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value.is_some_and(|p| p > alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: &'static str,
    pub label: &'static str,
    pub number: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub alpha: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub resample: bool,
    pub n_features: usize,
    pub models: Vec<&'static str>,
    pub summary: Vec<SummaryRow>,
    pub features: Vec<ScanRecord>,
}

/// Seed for one (feature, model) job. Uses the model's position among all
/// twelve so that a subset scan reproduces the same per-model results.
pub fn job_seed(master: u64, feature: usize, model: ModelSpec) -> u64 {
    child_seed(child_seed(master, feature as u64), model.index() as u64)
}

pub fn run_scan(table: &CountTable, opts: &ScanOptions) -> ScanReport {
    let jobs: Vec<(usize, ModelSpec)> = (0..table.n_features())
        .flat_map(|f| opts.models.iter().map(move |&m| (f, m)))
        .collect();
    let features: Vec<ScanRecord> = jobs
        .par_iter()
        .map(|&(f, spec)| scan_one(table, f, spec, opts))
        .collect();
    let n_features = table.n_features();
    let summary = opts
        .models
        .iter()
        .map(|&spec| {
            let number = features
                .iter()
                .filter(|r| r.model == spec.key() && r.passes(opts.alpha))
                .count();
            SummaryRow {
                model: spec.key(),
                label: spec.label(),
                number,
                percentage: 100.0 * number as f64 / n_features as f64,
            }
        })
        .collect();
    ScanReport {
        alpha: opts.alpha,
        bootstrap: opts.bootstrap.b,
        seed: opts.bootstrap.seed,
        resample: opts.bootstrap.resample,
        n_features,
        models: opts.models.iter().map(|m| m.key()).collect(),
        summary,
        features,
    }
}

fn scan_one(table: &CountTable, feature: usize, spec: ModelSpec, opts: &ScanOptions) -> ScanRecord {
    let data = table.row(feature);
    let mut record = ScanRecord {
        feature_id: table.feature_ids[feature].clone(),
        model: spec.key(),
        phi: None,
        theta: Vec::new(),
        loglik: None,
        d_n: None,
        p_value: None,
        converged: false,
        fit_failures: 0,
        error: None,
    };
    let fit = match fit_model(spec.family, spec.kind, &data, &opts.bootstrap.fit) {
        Ok(f) => f,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let boot = BootstrapOptions {
        seed: job_seed(opts.bootstrap.seed, feature, spec),
        ..opts.bootstrap
    };
    let ks = bootstrap_ks_with_fit(&data, &fit, &boot);
    record.phi = (spec.kind != ZeroKind::None).then_some(fit.model.phi);
    record.theta = spec
        .family
        .param_names()
        .iter()
        .copied()
        .zip(fit.model.baseline.to_vec())
        .collect();
    record.loglik = Some(fit.loglik);
    record.d_n = Some(ks.d_n);
    record.p_value = Some(ks.p_value);
    record.converged = fit.converged;
    record.fit_failures = ks.fit_failures;
    record
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ScanReport {
    pub fn features_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "feature_id",
            "model",
            "phi",
            "theta",
            "loglik",
            "d_n",
            "p_value",
            "pass",
            "converged",
            "fit_failures",
            "error",
        ];
        w.write_record(header).expect("in-memory write");
        for r in &self.features {
            let theta = r
                .theta
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                r.feature_id.clone(),
                r.model.to_string(),
                opt(r.phi),
                theta,
                opt(r.loglik),
                opt(r.d_n),
                opt(r.p_value),
                r.passes(self.alpha).to_string(),
                r.converged.to_string(),
                r.fit_failures.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "distribution", "number", "percentage", "features", "alpha"])
            .expect("in-memory write");
        for s in &self.summary {
            w.write_record([
                s.model.to_string(),
                s.label.to_string(),
                s.number.to_string(),
                format!("{:.1}", s.percentage),
                self.n_features.to_string(),
                self.alpha.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Aggregate table in plain text.
    pub fn summary_text(&self) -> String {
        let width = self.summary.iter().map(|s| s.label.len()).max().unwrap_or(12).max(12);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Features passing the KS gate (p-value > {}) out of {}",
            self.alpha, self.n_features
        );
        let _ = writeln!(s, "{:<width$}  {:>6}  {:>10}", "Distribution", "Number", "Percentage");
        for r in &self.summary {
            let _ = writeln!(s, "{:<width$}  {:>6}  {:>9.1}%", r.label, r.number, r.percentage);
        }
        s
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("features.csv"), self.features_csv()).map_err(io)?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv()).map_err(io)?;
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_model_keys_round_trip() {
        for m in ModelSpec::ALL {
            assert_eq!(m.key().parse::<ModelSpec>().unwrap(), m);
        }
        assert_eq!("ZIBNB".parse::<ModelSpec>().unwrap().label(), "zero-inflated beta negative binomial (ZIBNB)");
        assert!("zig".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn test_toy_table_scan_records_every_feature() {
        let toy = "species,S1,S2,S3,S4,S5,S6\nA,0,0,102,0,3,0\nB,13,0,0,75,0,0\nC,0,14,0,0,138,0\n";
        let table = CountTable::parse(toy.as_bytes()).unwrap();
        let opts = ScanOptions {
            models: vec![ModelSpec::ALL[8], ModelSpec::ALL[4]],
            alpha: 0.05,
            bootstrap: BootstrapOptions {
                b: 19,
                seed: 3,
                ..Default::default()
            },
        };
        let report = run_scan(&table, &opts);
        assert_eq!(report.features.len(), 6);
        for s in &report.summary {
            let count = report
                .features
                .iter()
                .filter(|r| r.model == s.model && r.passes(report.alpha))
                .count();
            assert_eq!(count, s.number);
            assert!(s.number <= report.n_features);
        }
    }
}

//! Observed count samples.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A sample `Y₁ … Yₙ` of nonnegative counts.
///
/// Besides the raw values it caches the number of nonzero observations `m`
/// and a sorted frequency table of the distinct nonzero values, which is what
/// every likelihood in the crate actually iterates over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<u64>", into = "Vec<u64>")]
pub struct CountVector {
    values: Vec<u64>,
    zeros: usize,
    nonzero: Vec<(u64, usize)>,
    max: u64,
}

impl CountVector {
    pub fn new(values: Vec<u64>) -> Self {
        let mut table: BTreeMap<u64, usize> = BTreeMap::new();
        let mut zeros = 0;
        for &y in &values {
            if y == 0 {
                zeros += 1;
            } else {
                *table.entry(y).or_insert(0) += 1;
            }
        }
        let max = values.iter().copied().max().unwrap_or(0);
        CountVector {
            values,
            zeros,
            nonzero: table.into_iter().collect(),
            max,
        }
    }

    /// Sample size `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Number of nonzero observations `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.values.len() - self.zeros
    }

    #[inline]
    pub fn zeros(&self) -> usize {
        self.zeros
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct nonzero values with their multiplicities, ascending.
    pub fn nonzero_table(&self) -> &[(u64, usize)] {
        &self.nonzero
    }

    /// Distinct values including zero (if present) with multiplicities, ascending.
    pub fn table(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        let zero = (self.zeros > 0).then_some((0u64, self.zeros));
        zero.into_iter().chain(self.nonzero.iter().copied())
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.sum() / self.n() as f64
    }

    /// Mean and (population) variance of the nonzero part.
    pub fn nonzero_moments(&self) -> (f64, f64) {
        moments(self.nonzero.iter().copied())
    }

    /// Mean and (population) variance of the full sample.
    pub fn moments(&self) -> (f64, f64) {
        moments(self.table())
    }

    fn sum(&self) -> f64 {
        self.nonzero.iter().map(|&(y, c)| y as f64 * c as f64).sum()
    }

    /// Same sample with `k` extra zeros appended.
    pub fn with_extra_zeros(&self, k: usize) -> CountVector {
        let mut v = self.values.clone();
        v.extend(std::iter::repeat_n(0, k));
        CountVector::new(v)
    }
}

fn moments(table: impl Iterator<Item = (u64, usize)>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for (y, c) in table {
        let (y, c) = (y as f64, c as f64);
        n += c;
        s += c * y;
        s2 += c * y * y;
    }
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = s / n;
    (mean, (s2 / n - mean * mean).max(0.0))
}

impl From<Vec<u64>> for CountVector {
    fn from(v: Vec<u64>) -> Self {
        CountVector::new(v)
    }
}

impl From<CountVector> for Vec<u64> {
    fn from(c: CountVector) -> Self {
        c.values
    }
}

impl FromIterator<u64> for CountVector {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        CountVector::new(iter.into_iter().collect())
    }
}

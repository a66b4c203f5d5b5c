//! Zipf content popularity, request sampling and the hitting probability.

use rand::Rng;

use crate::error::{Error, Result};

/// Request probabilities `ρ_1..ρ_m` of a content library, most popular first.
///
/// Immutable once built; share it freely between workers.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    gamma_r: f64,
    rho: Vec<f64>,
    prefix: Vec<f64>,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl PopularityProfile {
    /// Zipf law `ρ_κ = κ^{-γ} / Σ_η η^{-γ}` over a library of `m` contents.
    ///
    /// The normalizer is summed directly with compensation; no zeta-function
    /// shortcut is taken.
    pub fn zipf(m: usize, gamma_r: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyLibrary);
        }
        if !gamma_r.is_finite() || gamma_r < 0.0 {
            return Err(Error::InvalidSkew(gamma_r));
        }

        let weights: Vec<f64> = (1..=m).map(|k| (k as f64).powf(-gamma_r)).collect();
        // Sum smallest-first so the tail is not swallowed by the head.
        let mut norm = CompensatedSum::default();
        for w in weights.iter().rev() {
            norm.add(*w);
        }
        let norm = norm.value();
        let rho: Vec<f64> = weights.iter().map(|w| w / norm).collect();

        let mut acc = CompensatedSum::default();
        let prefix = rho
            .iter()
            .map(|r| {
                acc.add(*r);
                acc.value()
            })
            .collect();

        Ok(PopularityProfile {
            gamma_r,
            rho,
            prefix,
        })
    }

    /// Library size `m`.
    pub fn library_size(&self) -> usize {
        self.rho.len()
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }

    /// `ρ_κ` for `κ = 1..m`, stored zero-based.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Partial sums `Σ_{κ≤n} ρ_κ` for `n = 1..m`, stored zero-based.
    pub fn hit_prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// Probability that a request falls on one of the contents cached by
    /// `n_users` users, i.e. `Σ_{κ=1}^{N} ρ_κ`.
    pub fn hitting_probability(&self, n_users: usize) -> Result<f64> {
        self.check_users(n_users)?;
        Ok(self.prefix[n_users - 1].min(1.0))
    }

    pub(crate) fn check_users(&self, n_users: usize) -> Result<()> {
        if n_users == 0 {
            return Err(Error::NoUsers);
        }
        if n_users > self.library_size() {
            return Err(Error::TooManyUsers {
                n_users,
                library_size: self.library_size(),
            });
        }
        Ok(())
    }

    /// Draws a content index in `1..=m` with probability `ρ_κ`.
    ///
    /// Inverse-CDF lookup by binary search over the stored prefix sums.
    pub fn sample_request<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.prefix.partition_point(|&p| p <= u);
        idx.min(self.rho.len() - 1) + 1
    }
}

/// Builds a Zipf profile; shorthand for [`PopularityProfile::zipf`].
pub fn build_zipf(m: usize, gamma_r: f64) -> Result<PopularityProfile> {
    PopularityProfile::zipf(m, gamma_r)
}

/// `Σ_{κ=1}^{N} ρ_κ` for the profile; rejects `n_users > m`.
pub fn hitting_probability(profile: &PopularityProfile, n_users: usize) -> Result<f64> {
    profile.hitting_probability(n_users)
}

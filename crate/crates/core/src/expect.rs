//! Population-level expectations for two cohorts of sizes `N₁`, `N₂` whose
//! members are pairwise compatible with probability `p`.

use crate::error::{Error, Result};
use crate::model::AgeProfile;
use crate::special_fn::{phi, UnitProb};

/// An age group with a head count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cohort {
    pub n: u64,
    pub profile: AgeProfile,
}

/// Largest cohort accepted by [`at_least_k_exact`].
pub const MAX_EXACT_N: u64 = 10_000_000;

/// Expected number of compatible pairs, `N₁N₂p`.
pub fn expected_pairs(n1: u64, n2: u64, p: UnitProb) -> f64 {
    n1 as f64 * n2 as f64 * p.value()
}

/// Mean number of compatible counterparts of one person among `n`, `Np`.
pub fn mean_counterparts(n: u64, p: UnitProb) -> f64 {
    n as f64 * p.value()
}

/// `1 - (1-p)^n`, evaluated as `-expm1(n·ln(1-p))`.
fn any_success(n: u64, p: f64) -> f64 {
    if n == 0 || p == 0.0 {
        0.0
    } else if p == 1.0 {
        1.0
    } else {
        -(n as f64 * (-p).ln_1p()).exp_m1()
    }
}

/// Expected number of people in a group of `n_self` who have at least one
/// compatible counterpart among `n_other`: `N_self[1 - (1-p)^{N_other}]`.
pub fn expected_with_at_least_one(n_self: u64, n_other: u64, p: UnitProb) -> f64 {
    n_self as f64 * any_success(n_other, p.value())
}

/// Exact binomial upper tail `P(m ≥ k)` for `m ~ Bin(n, p)`.
///
/// Terms are accumulated in log space from the recurrence
/// `t_{m+1} = t_m · (n-m)/(m+1) · p/(1-p)`, summing whichever side of `k`
/// holds less mass.
pub fn at_least_k_exact(k: u64, n: u64, p: UnitProb) -> Result<UnitProb> {
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    if n > MAX_EXACT_N {
        return Err(Error::domain(format!(
            "exact binomial tail supports n <= {MAX_EXACT_N}, got {n}"
        )));
    }
    let p = p.value();
    if k == 0 {
        return Ok(UnitProb::ONE);
    }
    if k == 1 {
        return Ok(UnitProb::clamped(any_success(n, p)));
    }
    if p == 0.0 {
        return Ok(UnitProb::ZERO);
    }
    if p == 1.0 {
        return Ok(UnitProb::ONE);
    }

    let nf = n as f64;
    let log_odds = p.ln() - (-p).ln_1p();
    let mode = ((nf + 1.0) * p).floor().min(nf);
    let mut log_term = nf * (-p).ln_1p();
    // terms up to k-1 form the lower tail
    let upper_is_smaller = (k as f64) > mode;

    let mut acc = LogSum::default();
    let mut m = 0u64;
    if upper_is_smaller {
        while m < k {
            log_term += ((nf - m as f64) / (m as f64 + 1.0)).ln() + log_odds;
            m += 1;
        }
        // beyond the mode the terms shrink monotonically
        loop {
            acc.add(log_term);
            if m == n || log_term < acc.log_total() - 40.0 {
                break;
            }
            log_term += ((nf - m as f64) / (m as f64 + 1.0)).ln() + log_odds;
            m += 1;
        }
        Ok(UnitProb::clamped(acc.log_total().exp()))
    } else {
        while m < k {
            acc.add(log_term);
            log_term += ((nf - m as f64) / (m as f64 + 1.0)).ln() + log_odds;
            m += 1;
        }
        Ok(UnitProb::clamped(-acc.log_total().exp_m1()))
    }
}

/// Running `ln Σ exp(xᵢ)`.
#[derive(Debug, Default)]
struct LogSum {
    max: Option<f64>,
    scaled: f64,
}

impl LogSum {
    fn add(&mut self, x: f64) {
        match self.max {
            None => {
                self.max = Some(x);
                self.scaled = 1.0;
            }
            Some(m) if x <= m => self.scaled += (x - m).exp(),
            Some(m) => {
                self.scaled = self.scaled * (m - x).exp() + 1.0;
                self.max = Some(x);
            }
        }
    }

    fn log_total(&self) -> f64 {
        match self.max {
            None => f64::NEG_INFINITY,
            Some(m) => m + self.scaled.ln(),
        }
    }
}

/// `N > 9·max(p/(1-p), (1-p)/p)`, the condition under which the normal
/// approximation of the binomial tail is trusted.
pub fn normal_approx_valid(n: u64, p: UnitProb) -> Result<bool> {
    let p = p.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::domain(format!(
            "validity check needs 0 < p < 1, got {p}"
        )));
    }
    let q = 1.0 - p;
    Ok(n as f64 > 9.0 * (p / q).max(q / p))
}

/// A normal-approximation tail together with its validity verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalTail {
    pub prob: UnitProb,
    /// False when `N > 9·max(p/q, q/p)` fails and the value should not be
    /// trusted.
    pub valid: bool,
}

/// Normal approximation of `P(m ≥ k)`, integrating the Gaussian from 0 to `k`
/// without continuity correction:
///
/// `1 - Φ((k - Np)/√(Np(1-p))) + Φ(-√(Np/(1-p)))`
pub fn at_least_k_normal(k: u64, n: u64, p: UnitProb) -> Result<NormalTail> {
    let valid = normal_approx_valid(n, p)?;
    let p = p.value();
    let mean = n as f64 * p;
    let sd = (mean * (1.0 - p)).sqrt();
    if sd == 0.0 {
        return Err(Error::domain("normal approximation needs n > 0"));
    }
    let value = phi((mean - k as f64) / sd) + phi(-(mean / (1.0 - p)).sqrt());
    Ok(NormalTail {
        prob: UnitProb::clamped(value),
        valid,
    })
}

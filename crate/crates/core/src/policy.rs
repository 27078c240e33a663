//! Age-limit inversion and the "half your age plus seven" audit.
//!
//! A mental-age limit `x` with a limit probability `p` maps to a chronological
//! limit through the quantile function:
//!
//! * minimum: `μ_min = x_min / (1 + s·Φ⁻¹(1 - p_min))`
//! * maximum: `μ_max = x_max / (1 + s·Φ⁻¹(p_max))`

use crate::compat::window_mass;
use crate::error::{nonnegative, positive, Error, Result};
use crate::special_fn::{quantile_raw, UnitProb};

/// The fixed point of the half-your-age-plus-seven rule.
pub const HYAPS_FIXED_POINT: f64 = 14.0;

/// Error-term threshold `14/μ` beyond which the inverted rule is flagged as
/// far from proportional.
pub const HYAPS_ERROR_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Min,
    Max,
}

/// A mental-age limit with the share of a cohort required to satisfy it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeLimitSpec {
    pub kind: LimitKind,
    x_limit: f64,
    p_limit: UnitProb,
    s: f64,
}

impl AgeLimitSpec {
    pub fn new(kind: LimitKind, x_limit: f64, p_limit: UnitProb, s: f64) -> Result<Self> {
        Ok(AgeLimitSpec {
            kind,
            x_limit: positive("mental age limit", x_limit)?,
            p_limit: open_unit("limit probability", p_limit)?,
            s: positive("s", s)?,
        })
    }

    pub fn x_limit(&self) -> f64 {
        self.x_limit
    }

    pub fn p_limit(&self) -> UnitProb {
        self.p_limit
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

fn open_unit(name: &str, p: UnitProb) -> Result<UnitProb> {
    if p.value() > 0.0 && p.value() < 1.0 {
        Ok(p)
    } else {
        Err(Error::domain(format!(
            "{name} must lie in (0, 1), got {}",
            p.value()
        )))
    }
}

/// `1 + s·Φ⁻¹(1-p)` for minima, `1 + s·Φ⁻¹(p)` for maxima.
fn limit_factor(kind: LimitKind, s: f64, p: UnitProb) -> f64 {
    let z = match kind {
        LimitKind::Min => -quantile_raw(p.value()),
        LimitKind::Max => quantile_raw(p.value()),
    };
    1.0 + s * z
}

/// Chronological limit implied by a mental-age limit.
pub fn chrono_limit(spec: &AgeLimitSpec) -> Result<f64> {
    let factor = limit_factor(spec.kind, spec.s, spec.p_limit);
    if factor <= 0.0 {
        return Err(Error::domain(format!(
            "limit probability {} is too extreme for s = {} (1 + s·z = {factor})",
            spec.p_limit.value(),
            spec.s
        )));
    }
    Ok(spec.x_limit / factor)
}

/// `μ_min = x_min / (1 + s·Φ⁻¹(1 - p_min))`
pub fn chrono_min_age(x_min: f64, p_min: UnitProb, s: f64) -> Result<f64> {
    chrono_limit(&AgeLimitSpec::new(LimitKind::Min, x_min, p_min, s)?)
}

/// `μ_max = x_max / (1 + s·Φ⁻¹(p_max))`
pub fn chrono_max_age(x_max: f64, p_max: UnitProb, s: f64) -> Result<f64> {
    chrono_limit(&AgeLimitSpec::new(LimitKind::Max, x_max, p_max, s)?)
}

/// Mental-age limit implied by a chronological limit, the algebraic inverse
/// of [`chrono_limit`].
pub fn mental_limit_from_chrono(
    mu_limit: f64,
    s: f64,
    p_limit: UnitProb,
    kind: LimitKind,
) -> Result<f64> {
    let mu_limit = positive("chronological limit", mu_limit)?;
    let s = positive("s", s)?;
    let p_limit = open_unit("limit probability", p_limit)?;
    Ok(mu_limit * limit_factor(kind, s, p_limit))
}

/// `(μ/2 + 7, 2μ - 14)`: the rule's youngest and oldest acceptable partner.
pub fn hyaps_bounds(mu: f64) -> Result<(f64, f64)> {
    let mu = positive("age", mu)?;
    Ok((0.5 * mu + 7.0, 2.0 * mu - HYAPS_FIXED_POINT))
}

/// Compatibility of a person aged `mu` with someone `delta` years older,
/// with `σ₁ = s₁μ`, `σ₂ = s₂(μ+Δ)` and `d = tσ₁`:
///
/// `Φ((Δ/μ + ts₁)/√(s₁² + s₂²(1+Δ/μ)²)) - Φ((Δ/μ - ts₁)/√(…))`
pub fn rule_probability(mu: f64, delta: f64, s1: f64, s2: f64, t: f64) -> Result<UnitProb> {
    let mu = positive("age", mu)?;
    let delta = nonnegative("delta", delta)?;
    rule_probability_at_ratio(delta / mu, s1, s2, t)
}

/// [`rule_probability`] as a function of `m = Δ/μ` alone.
pub fn rule_probability_at_ratio(m: f64, s1: f64, s2: f64, t: f64) -> Result<UnitProb> {
    let m = nonnegative("delta/mu", m)?;
    let s1 = positive("s1", s1)?;
    let s2 = positive("s2", s2)?;
    if !(t.is_finite() && t >= 1.0) {
        return Err(Error::domain(format!(
            "t must be >= 1 (d at least min sigma), got {t}"
        )));
    }
    Ok(UnitProb::clamped(rule_mass(m, s1, s2, t)))
}

fn rule_mass(m: f64, s1: f64, s2: f64, t: f64) -> f64 {
    let spread = (s1 * s1 + s2 * s2 * (1.0 + m) * (1.0 + m)).sqrt();
    window_mass(m, t * s1, spread)
}

/// One row of the half-your-age-plus-seven audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleAuditPoint {
    /// Younger age.
    pub mu: f64,
    /// Maximum upward difference allowed by the inverted rule, `μ - 14`.
    pub delta: f64,
    pub p_min: UnitProb,
}

impl RuleAuditPoint {
    /// `Δ/μ = 1 - 14/μ`
    pub fn ratio(&self) -> f64 {
        self.delta / self.mu
    }

    /// `14/μ`, the deviation of the rule from proportionality.
    pub fn error_term(&self) -> f64 {
        HYAPS_FIXED_POINT / self.mu
    }

    /// Whether `14/μ` exceeds 0.05, i.e. `μ < 280`.
    pub fn far_from_proportional(&self) -> bool {
        self.error_term() > HYAPS_ERROR_TOLERANCE
    }
}

/// An age the audit could not evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub mu: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleAudit {
    pub points: Vec<RuleAuditPoint>,
    pub skipped: Vec<Skipped>,
}

impl RuleAudit {
    /// Largest minus smallest `p_min` over the evaluated ages.
    pub fn spread(&self) -> f64 {
        let values = self.points.iter().map(|pt| pt.p_min.value());
        let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = values.fold(f64::INFINITY, f64::min);
        if self.points.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

/// Evaluates the inverted rule `μ_max = 2μ - 14` at every age of the grid.
/// Ages at or below the fixed point 14 are skipped.
pub fn audit_hyaps(mu_grid: &[f64], s1: f64, s2: f64, t: f64) -> Result<RuleAudit> {
    // validates s1, s2 and t once
    rule_probability_at_ratio(0.0, s1, s2, t)?;
    let mut audit = RuleAudit::default();
    for &mu in mu_grid {
        if mu.is_nan() || mu <= HYAPS_FIXED_POINT || mu.is_infinite() {
            audit.skipped.push(Skipped {
                mu,
                reason: format!("age {mu} is not above the rule's fixed point 14"),
            });
            continue;
        }
        let delta = mu - HYAPS_FIXED_POINT;
        audit.points.push(RuleAuditPoint {
            mu,
            delta,
            p_min: rule_probability(mu, delta, s1, s2, t)?,
        });
    }
    Ok(audit)
}

const M_CAP: f64 = 64.0;
const P_TOL: f64 = 1e-10;

/// Finds `m > 0` with `rule_probability(Δ = mμ) = p_min` by bisection.
///
/// The bracket `[0, m_hi]` starts at `m_hi = 1` and doubles until the
/// probability drops below `p_min`, up to `m_hi = 64`.
pub fn solve_m(p_min: UnitProb, s1: f64, s2: f64, t: f64) -> Result<f64> {
    let target = p_min.value();
    let p_same = rule_probability_at_ratio(0.0, s1, s2, t)?.value();
    if !(target > 0.0 && target < p_same) {
        return Err(Error::NoRoot(format!(
            "p_min = {target} must lie in (0, {p_same}), the same-age probability for s1 = {s1}, s2 = {s2}, t = {t}"
        )));
    }
    let f = |m: f64| rule_mass(m, s1, s2, t) - target;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > M_CAP {
            return Err(Error::NoRoot(format!(
                "p_min = {target} is not reached for m <= {M_CAP}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = f(mid);
        if value.abs() <= P_TOL || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection for p_min = {target} did not converge"
    )))
}

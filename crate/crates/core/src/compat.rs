//! Compatibility probabilities: the chance that two people's mental ages lie
//! within `d` years of each other.

use crate::error::{nonnegative, positive, Error, Result};
use crate::model::Gaussian;
use crate::special_fn::{erf_raw, phi, UnitProb};

/// How the allowed mental-age difference is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// Absolute half-width `d` in years.
    Absolute(f64),
    /// Multiple `t` of `min(σ₁, σ₂)`.
    Relative(f64),
}

/// Two mental-age densities and an allowed difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatQuery {
    pub first: Gaussian,
    pub second: Gaussian,
    window: Window,
}

impl CompatQuery {
    pub fn new(first: Gaussian, second: Gaussian, window: Window) -> Result<Self> {
        match window {
            Window::Absolute(d) => {
                nonnegative("d", d)?;
            }
            Window::Relative(t) => {
                nonnegative("t", t)?;
            }
        }
        Ok(CompatQuery {
            first,
            second,
            window,
        })
    }

    pub fn with_d(first: Gaussian, second: Gaussian, d: f64) -> Result<Self> {
        Self::new(first, second, Window::Absolute(d))
    }

    pub fn with_t(first: Gaussian, second: Gaussian, t: f64) -> Result<Self> {
        Self::new(first, second, Window::Relative(t))
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `min(σ₁, σ₂)`, the unit of the dimensionless window `t`.
    pub fn sigma_min(&self) -> f64 {
        self.first.sigma().min(self.second.sigma())
    }

    /// The absolute allowed difference `d` in years.
    pub fn d(&self) -> f64 {
        match self.window {
            Window::Absolute(d) => d,
            Window::Relative(t) => t * self.sigma_min(),
        }
    }

    /// The same query with the two people exchanged.
    pub fn swapped(&self) -> Self {
        CompatQuery {
            first: self.second,
            second: self.first,
            window: self.window,
        }
    }
}

/// `Φ((shift + d)/spread) - Φ((shift - d)/spread)`.
///
/// Symmetric in the sign of `shift`; written as a difference of upper tails
/// so that far-apart groups keep relative precision.
pub(crate) fn window_mass(shift: f64, d: f64, spread: f64) -> f64 {
    let shift = shift.abs();
    phi((d - shift) / spread) - phi((-d - shift) / spread)
}

/// Probability that the mental ages of two randomly chosen people from the
/// two groups differ by at most `d`:
///
/// `p = Φ((μ₁-μ₂+d)/√(σ₁²+σ₂²)) - Φ((μ₁-μ₂-d)/√(σ₁²+σ₂²))`
pub fn compat_prob(q: &CompatQuery) -> UnitProb {
    let diff = crate::model::convolve_diff(&q.first, &q.second);
    UnitProb::clamped(window_mass(diff.mu(), q.d(), diff.sigma()))
}

/// Compatibility with a person of exactly known mental age `x1`.
pub fn compat_prob_known(d: f64, x1: f64, g: &Gaussian) -> Result<UnitProb> {
    let d = nonnegative("d", d)?;
    if !x1.is_finite() {
        return Err(Error::domain("x1 must be finite"));
    }
    Ok(UnitProb::clamped(window_mass(x1 - g.mu(), d, g.sigma())))
}

/// Which profile served as the same-age reference of a normalized probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// The query's second person was already the younger one.
    Second,
    /// The query's first person was younger; inputs were swapped.
    First,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub p0: f64,
    /// Same-age probability of the younger group, `erf(d/(2σ_young))`.
    pub same_age: UnitProb,
    pub reference: Reference,
}

/// `p₀ = p(d; μ₁,σ₁,μ₂,σ₂) / p(d; μ₂,σ₂,μ₂,σ₂)` with μ₂ the younger age.
///
/// The inputs are reordered when needed so that the denominator always uses
/// the younger profile; [`Normalized::reference`] reports which one.
pub fn compat_prob_normalized(q: &CompatQuery) -> Result<Normalized> {
    let d = q.d();
    if d <= 0.0 {
        return Err(Error::domain("normalized probability needs d > 0"));
    }
    let (older, younger, reference) = if q.second.mu() <= q.first.mu() {
        (q.first, q.second, Reference::Second)
    } else {
        (q.second, q.first, Reference::First)
    };
    let ordered = CompatQuery::with_d(older, younger, d)?;
    let same_age = UnitProb::clamped(erf_raw(d / (2.0 * younger.sigma())));
    Ok(Normalized {
        p0: compat_prob(&ordered).value() / same_age.value(),
        same_age,
        reference,
    })
}

/// Same-age compatibility for `d = tσ`: `erf(t/2)`, whatever μ and σ.
pub fn same_age_prob(t: f64) -> Result<UnitProb> {
    let t = nonnegative("t", t)?;
    Ok(UnitProb::clamped(erf_raw(t / 2.0)))
}

/// Mass of `g` on `[x_lo, x_hi]`.
pub fn range_prob(x_lo: f64, x_hi: f64, g: &Gaussian) -> Result<UnitProb> {
    if x_lo.is_nan() || x_hi.is_nan() || x_lo > x_hi {
        return Err(Error::domain(format!("empty range [{x_lo}, {x_hi}]")));
    }
    let lo = (x_lo - g.mu()) / g.sigma();
    let hi = (x_hi - g.mu()) / g.sigma();
    // upper tails above the mean keep precision
    let p = if lo > 0.0 {
        phi(-lo) - phi(-hi)
    } else {
        phi(hi) - phi(lo)
    };
    Ok(UnitProb::clamped(p))
}

/// Mass within `d` of the mean: `erf(d/(√2σ))`.
pub fn symmetric_prob(d: f64, g: &Gaussian) -> Result<UnitProb> {
    let d = nonnegative("d", d)?;
    Ok(UnitProb::clamped(erf_raw(
        d / (std::f64::consts::SQRT_2 * g.sigma()),
    )))
}

/// `P(x ≥ x0) = 1 - Φ((x0 - μ)/σ)`
pub fn at_least(x0: f64, g: &Gaussian) -> Result<UnitProb> {
    let x0 = crate::error::finite("x0", x0)?;
    Ok(UnitProb::clamped(phi((g.mu() - x0) / g.sigma())))
}

/// `P(x ≤ x0) = Φ((x0 - μ)/σ)`
pub fn at_most(x0: f64, g: &Gaussian) -> Result<UnitProb> {
    let x0 = crate::error::finite("x0", x0)?;
    Ok(UnitProb::clamped(g.cdf(x0)))
}

/// Compatibility in terms of the age ratio `r = μ₁/μ₂ ≥ 1`, with
/// `σᵢ = sᵢμᵢ` and `d = tσ₂`. Depends on the ages only through `r`.
pub fn compat_prob_ratio_form(r: f64, s1: f64, s2: f64, t: f64) -> Result<UnitProb> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::domain(format!(
            "age ratio must be >= 1 (put the older person first), got {r}"
        )));
    }
    let s1 = positive("s1", s1)?;
    let s2 = positive("s2", s2)?;
    let t = nonnegative("t", t)?;
    let spread = (s1 * s1 * r * r + s2 * s2).sqrt();
    Ok(UnitProb::clamped(window_mass(r - 1.0, s2 * t, spread)))
}

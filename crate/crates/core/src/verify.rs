//! Error analysis of the closed form and the two independent oracles used to
//! check it.
//!
//! [`quad_oracle`] integrates the defining double integral numerically and
//! [`mc_oracle`] samples random pairs; neither goes through the convolution
//! identity that [`crate::compat::compat_prob`] relies on.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compat::CompatQuery;
use crate::error::{nonnegative, positive, Error, Result};
use crate::special_fn::{normal_cdf, phi, UnitProb};

/// Mean and width of the Gaussian factor of the integrand on one slice
/// `x₂ = x₁ + Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceParams {
    pub mu12: f64,
    pub sigma12: f64,
}

/// `μ₁₂ = ((μ₂-Δ)σ₁² + μ₁σ₂²)/(σ₁²+σ₂²)`, `σ₁₂ = σ₁σ₂/√(σ₁²+σ₂²)`
pub fn slice_params(q: &CompatQuery, delta: f64) -> SliceParams {
    let (m1, s1) = (q.first.mu(), q.first.sigma());
    let (m2, s2) = (q.second.mu(), q.second.sigma());
    let v = s1 * s1 + s2 * s2;
    SliceParams {
        mu12: ((m2 - delta) * s1 * s1 + m1 * s2 * s2) / v,
        sigma12: s1 * s2 / v.sqrt(),
    }
}

/// Bounds on the share of each slice that falls at negative mental age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBound {
    /// `Φ(-μ₁₂/σ₁₂)` at the worst slice `Δ = d`.
    pub slice: f64,
    /// `Φ(-(μ₂-d)/σ₂)`, valid when `μ₁/σ₁ = μ₂/σ₂`.
    pub closed: f64,
    pub worst_slice: SliceParams,
}

pub fn truncation_bound(q: &CompatQuery) -> TruncationBound {
    let d = q.d();
    // μ₁₂ decreases in Δ, so Δ = d is the worst slice
    let worst_slice = slice_params(q, d);
    TruncationBound {
        slice: phi(-worst_slice.mu12 / worst_slice.sigma12),
        closed: phi(-(q.second.mu() - d) / q.second.sigma()),
        worst_slice,
    }
}

/// Uncertainties of the allowed difference and the two standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    d_err: f64,
    sigma1_err: f64,
    sigma2_err: f64,
}

impl ErrorBudget {
    pub fn new(d_err: f64, sigma1_err: f64, sigma2_err: f64) -> Result<Self> {
        Ok(ErrorBudget {
            d_err: nonnegative("d error", d_err)?,
            sigma1_err: nonnegative("sigma1 error", sigma1_err)?,
            sigma2_err: nonnegative("sigma2 error", sigma2_err)?,
        })
    }

    pub fn d_err(&self) -> f64 {
        self.d_err
    }

    pub fn sigma1_err(&self) -> f64 {
        self.sigma1_err
    }

    pub fn sigma2_err(&self) -> f64 {
        self.sigma2_err
    }
}

struct PropagationTerms {
    /// `Δd/√(2πS) [e₊ + e₋]`
    from_d: f64,
    /// `(σ₁Δσ₁+σ₂Δσ₂)/(√(2π)S^{3/2}) |(D+d)e₊ - (D-d)e₋|`
    from_sigma: f64,
}

fn propagation_terms(q: &CompatQuery, budget: &ErrorBudget) -> PropagationTerms {
    let (s1, s2) = (q.first.sigma(), q.second.sigma());
    let shift = q.first.mu() - q.second.mu();
    let d = q.d();
    let var = s1 * s1 + s2 * s2;
    let e_plus = (-0.5 * (shift + d).powi(2) / var).exp();
    let e_minus = (-0.5 * (shift - d).powi(2) / var).exp();
    let from_d = budget.d_err / (2.0 * PI * var).sqrt() * (e_plus + e_minus);
    let from_sigma = (s1 * budget.sigma1_err + s2 * budget.sigma2_err)
        / ((2.0 * PI).sqrt() * var.powf(1.5))
        * ((shift + d) * e_plus - (shift - d) * e_minus).abs();
    PropagationTerms { from_d, from_sigma }
}

/// First-order uncertainty `Δp` of the compatibility probability.
pub fn error_propagation(q: &CompatQuery, budget: &ErrorBudget) -> f64 {
    let terms = propagation_terms(q, budget);
    terms.from_d + terms.from_sigma
}

/// Ratio of the σ-driven to the d-driven part of `Δp` in its printed closed
/// form: `|(μ₁-μ₂)·tanh[2d(μ₁-μ₂)/S] + d| (σ₁Δσ₁+σ₂Δσ₂) / (S·Δd)`.
///
/// This does not equal the quotient of the two parts of
/// [`error_propagation`] unless `μ₁ = μ₂`; see
/// [`error_ratio_from_propagation`] for that.
pub fn error_ratio(q: &CompatQuery, budget: &ErrorBudget) -> Result<f64> {
    if budget.d_err <= 0.0 {
        return Err(Error::domain("error ratio needs a positive d error"));
    }
    let (s1, s2) = (q.first.sigma(), q.second.sigma());
    let shift = q.first.mu() - q.second.mu();
    let d = q.d();
    let var = s1 * s1 + s2 * s2;
    Ok((shift * (2.0 * d * shift / var).tanh() + d).abs()
        * (s1 * budget.sigma1_err + s2 * budget.sigma2_err)
        / (var * budget.d_err))
}

/// `Δp|_{Δd=0} / Δp|_{Δσ=0}` computed directly from the two parts of
/// [`error_propagation`]; analytically `|d - (μ₁-μ₂)tanh[d(μ₁-μ₂)/S]|·(…)`.
pub fn error_ratio_from_propagation(q: &CompatQuery, budget: &ErrorBudget) -> Result<f64> {
    if budget.d_err <= 0.0 {
        return Err(Error::domain("error ratio needs a positive d error"));
    }
    let terms = propagation_terms(q, budget);
    Ok(terms.from_sigma / terms.from_d)
}

/// `((a+b)/(1+c), 2(a+b))`, the range of the error ratio for
/// `d = aσ₁`, `μ₁-μ₂ = bσ₁`, `σ₁ = cσ₂` and equal error budgets.
pub fn error_ratio_bounds(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v.is_finite() && v > 1.0) {
            return Err(Error::domain(format!("{name} must exceed 1, got {v}")));
        }
    }
    Ok(((a + b) / (1.0 + c), 2.0 * (a + b)))
}

// --- quadrature oracle ---------------------------------------------------

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1] by Newton iteration on `P_n`.
    fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussLegendre { nodes, weights }
    }

    fn integrate(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| (GaussLegendre::new(10), GaussLegendre::new(20)))
}

const QUAD_TOL: f64 = 1e-12;
const QUAD_MAX_DEPTH: u32 = 40;
const QUAD_INITIAL_PANELS: usize = 16;

/// Adaptive bisection, comparing a 10-point and a 20-point Gauss rule on each
/// panel. The absolute tolerance is shared out in proportion to panel width.
pub fn adaptive_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (coarse, fine) = rules();
    let width = b - a;
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = (0..QUAD_INITIAL_PANELS)
        .rev()
        .map(|i| {
            let lo = a + width * i as f64 / QUAD_INITIAL_PANELS as f64;
            let hi = a + width * (i + 1) as f64 / QUAD_INITIAL_PANELS as f64;
            (lo, hi, 0)
        })
        .collect();
    while let Some((lo, hi, depth)) = stack.pop() {
        let rough = coarse.integrate(&f, lo, hi);
        let good = fine.integrate(&f, lo, hi);
        if (good - rough).abs() <= tol * (hi - lo) / width {
            total += good;
        } else if depth >= QUAD_MAX_DEPTH {
            return Err(Error::Numerical(format!(
                "quadrature did not converge on [{lo}, {hi}]"
            )));
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// Numerical evaluation of `∫dx₁ g₁(x₁) ∫_{x₁-d}^{x₁+d} g₂(x₂) dx₂`.
///
/// The inner integral is a difference of normal CDFs; the outer one runs over
/// `[min μ - 10σ_max, max μ + 10σ_max]` with [`adaptive_integrate`].
pub fn quad_oracle(q: &CompatQuery) -> Result<UnitProb> {
    let (g1, g2) = (q.first, q.second);
    let d = q.d();
    let sigma_max = g1.sigma().max(g2.sigma());
    let lo = g1.mu().min(g2.mu()) - 10.0 * sigma_max;
    let hi = g1.mu().max(g2.mu()) + 10.0 * sigma_max;
    let inner = |x1: f64| -> f64 {
        let upper = normal_cdf((x1 + d - g2.mu()) / g2.sigma()).map_or(0.0, f64::from);
        let lower = normal_cdf((x1 - d - g2.mu()) / g2.sigma()).map_or(0.0, f64::from);
        g1.pdf(x1) * (upper - lower)
    };
    let value = adaptive_integrate(inner, lo, hi, QUAD_TOL)?;
    UnitProb::new(value.clamp(0.0, 1.0))
}

// --- Monte-Carlo oracle ----------------------------------------------------

pub const MIN_MC_SAMPLES: u64 = 10_000;
const MC_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: UnitProb,
    /// `√(p̂(1-p̂)/n)`
    pub stderr: f64,
}

/// Uniform on `[0, 1)` from the top 53 bits.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Counts `|x₁ - x₂| ≤ d` over `n` pairs drawn from one ChaCha stream.
fn mc_chunk(q: &CompatQuery, d: f64, n: u64, seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let (g1, g2) = (q.first, q.second);
    let mut hits = 0;
    for _ in 0..n {
        // Box-Muller: exactly two uniforms per pair
        let u1 = 1.0 - unit_f64(&mut rng);
        let u2 = unit_f64(&mut rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (2.0 * PI * u2).sin_cos();
        let x1 = g1.mu() + g1.sigma() * r * cos;
        let x2 = g2.mu() + g2.sigma() * r * sin;
        if (x1 - x2).abs() <= d {
            hits += 1;
        }
    }
    hits
}

/// Monte-Carlo estimate of the compatibility probability.
///
/// Samples are split into chunks of 65 536; chunk `i` uses the ChaCha8 stream
/// `i` of `seed`, so the result depends only on `(seed, samples)`.
pub fn mc_oracle(q: &CompatQuery, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::domain(format!(
            "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let d = q.d();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .map(|i| {
            let n = MC_CHUNK.min(samples - i * MC_CHUNK);
            mc_chunk(q, d, n, seed, i)
        })
        .sum();
    let p_hat = hits as f64 / samples as f64;
    Ok(McEstimate {
        estimate: UnitProb::new(p_hat)?,
        stderr: (p_hat * (1.0 - p_hat) / samples as f64).sqrt(),
    })
}

/// A query with `d = aσ₁`, `μ₁ - μ₂ = bσ₁` and `σ₁ = cσ₂`.
pub fn abc_query(a: f64, b: f64, c: f64, sigma2: f64) -> Result<CompatQuery> {
    let sigma2 = positive("sigma2", sigma2)?;
    let sigma1 = c * sigma2;
    let mu2 = 50.0;
    CompatQuery::with_d(
        crate::model::Gaussian::new(mu2 + b * sigma1, sigma1)?,
        crate::model::Gaussian::new(mu2, sigma2)?,
        a * sigma1,
    )
}

//! Age profiles, Gaussian mental-age densities and the statistics of
//! same-age mental-age differences.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::error::{finite, positive, Error, Result};
use crate::special_fn::{phi, FRAC_1_SQRT_2PI};

/// Lower and upper edge of the empirically supported σ/μ band.
pub const SUPPORTED_S: (f64, f64) = (0.1, 0.2);

/// A normal density of mental age with mean `mu` and standard deviation
/// `sigma` (both in years).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    mu: f64,
    sigma: f64,
}

impl Gaussian {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        Ok(Gaussian {
            mu: finite("mu", mu)?,
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        FRAC_1_SQRT_2PI / self.sigma * (-0.5 * z * z).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        phi((x - self.mu) / self.sigma)
    }
}

/// Density value at `x`. Peaks at `1/(√(2π)σ)` for `x = μ`.
pub fn gaussian_pdf(x: f64, g: &Gaussian) -> f64 {
    g.pdf(x)
}

/// Density of the difference `x₁ - x₂` of two independent mental ages:
/// `N(μ₁, σ₁²) ∗ N(-μ₂, σ₂²) = N(μ₁ - μ₂, σ₁² + σ₂²)`.
pub fn convolve_diff(g1: &Gaussian, g2: &Gaussian) -> Gaussian {
    Gaussian {
        mu: g1.mu - g2.mu,
        sigma: (g1.variance() + g2.variance()).sqrt(),
    }
}

/// A chronological age `mu` with a constant relative dispersion `s = σ/μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeProfile {
    mu: f64,
    s: f64,
}

impl AgeProfile {
    pub fn new(mu: f64, s: f64) -> Result<Self> {
        Ok(AgeProfile {
            mu: positive("age", mu)?,
            s: positive("s", s)?,
        })
    }

    /// Builds a profile from an explicit standard deviation, `s = σ/μ`.
    pub fn with_sigma(mu: f64, sigma: f64) -> Result<Self> {
        let mu = positive("age", mu)?;
        let sigma = positive("sigma", sigma)?;
        Self::new(mu, sigma / mu)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma(&self) -> f64 {
        self.s * self.mu
    }

    pub fn gaussian(&self) -> Gaussian {
        Gaussian {
            mu: self.mu,
            sigma: self.sigma(),
        }
    }

    /// Whether `s` lies in the band `[0.1, 0.2]` backed by test-score data.
    pub fn in_supported_band(&self) -> bool {
        (SUPPORTED_S.0..=SUPPORTED_S.1).contains(&self.s)
    }
}

impl From<AgeProfile> for Gaussian {
    fn from(p: AgeProfile) -> Gaussian {
        p.gaussian()
    }
}

/// Statistics of `|x₁ - x₂|` for two people of the same chronological age.
///
/// The difference is `N(0, 2σ²)`; folding it at zero gives a half-normal with
/// scale `σ_d = √2 σ`, mean `(2/√π)σ` and dispersion `σ√(2(1 - 2/π))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    pub sigma_d: f64,
    pub mean_d: f64,
    pub disp_d: f64,
}

pub fn same_age_diff_stats(sigma: f64) -> Result<DiffStats> {
    let sigma = positive("sigma", sigma)?;
    Ok(DiffStats {
        sigma_d: SQRT_2 * sigma,
        mean_d: FRAC_2_SQRT_PI * sigma,
        disp_d: sigma * (2.0 * (1.0 - 2.0 / PI)).sqrt(),
    })
}

/// Half-normal density of `d = |x₁ - x₂|` within one cohort, i.e. twice the
/// `N(0, 2σ²)` density on `d ≥ 0`.
pub fn half_normal_pdf(d: f64, sigma: f64) -> f64 {
    if d < 0.0 {
        return 0.0;
    }
    let sd = SQRT_2 * sigma;
    let z = d / sd;
    2.0 * FRAC_1_SQRT_2PI / sd * (-0.5 * z * z).exp()
}

/// Range of sensible allowed differences `d`, anchored at `σ = min(σ₁, σ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scope {
    pub lower: f64,
    pub upper: f64,
}

/// `σ ≤ d ≤ (⟨d⟩ + σ̂_d)`, which is `σ ≤ d ≤ 1.981σ` with `σ = min(σ₁, σ₂)`.
pub fn d_scope(sigma1: f64, sigma2: f64) -> Result<Scope> {
    let sigma = positive("sigma1", sigma1)?.min(positive("sigma2", sigma2)?);
    let stats = same_age_diff_stats(sigma)?;
    Ok(Scope {
        lower: sigma,
        upper: stats.mean_d + stats.disp_d,
    })
}

/// The window multiple `t` at the upper edge of [`d_scope`], ≈ 1.981.
pub fn scope_upper_t() -> f64 {
    FRAC_2_SQRT_PI + (2.0 * (1.0 - 2.0 / PI)).sqrt()
}

impl std::str::FromStr for Gaussian {
    type Err = Error;

    /// Parses `mu,sigma`.
    fn from_str(s: &str) -> Result<Self> {
        let (mu, sigma) = s
            .split_once(',')
            .ok_or_else(|| Error::domain(format!("expected `mu,sigma`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::domain(format!("bad number `{v}`: {e}")))
        };
        Gaussian::new(parse(mu)?, parse(sigma)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule, used only as an independent check here.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut sum = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn pdf_examples() {
        let g = Gaussian::new(3.0, 1.0).unwrap();
        assert!((gaussian_pdf(3.0, &g) - 0.39894).abs() < 1e-5);
        let peak = g.pdf(3.0);
        assert!((g.pdf(4.0) - peak * (-0.5f64).exp()).abs() < 1e-15);
        assert!((g.pdf(2.0) - peak * (-0.5f64).exp()).abs() < 1e-15);
        let g = Gaussian::new(18.0, 2.7).unwrap();
        let mass = simpson(|x| g.pdf(x), 18.0 - 8.0 * 2.7, 18.0 + 8.0 * 2.7, 4000);
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_gaussians() {
        assert!(Gaussian::new(1.0, 0.0).is_err());
        assert!(Gaussian::new(1.0, -1.0).is_err());
        assert!(Gaussian::new(f64::NAN, 1.0).is_err());
        assert!(AgeProfile::new(0.0, 0.1).is_err());
        assert!(AgeProfile::new(10.0, 0.0).is_err());
    }

    #[test]
    fn convolution_examples() {
        let c = convolve_diff(
            &Gaussian::new(5.0, 3.0).unwrap(),
            &Gaussian::new(5.0, 4.0).unwrap(),
        );
        assert_eq!((c.mu(), c.sigma()), (0.0, 5.0));

        let g = Gaussian::new(7.0, 1.3).unwrap();
        let c = convolve_diff(&g, &g);
        assert_eq!(c.mu(), 0.0);
        assert!((c.sigma() - SQRT_2 * 1.3).abs() < 1e-15);
    }

    #[test]
    fn convolution_matches_numerical_convolution() {
        let g1 = Gaussian::new(18.0, 1.8).unwrap();
        let g2 = Gaussian::new(14.0, 1.4).unwrap();
        let c = convolve_diff(&g1, &g2);
        assert_eq!(c.mu(), 4.0);
        assert!((c.sigma() - 5.2f64.sqrt()).abs() < 1e-15);
        // density of x1 - x2 at z is ∫ g1(x) g2(x - z) dx
        for &z in &[-1.0, 2.0, 4.0, 5.5, 9.0] {
            let num = simpson(|x| g1.pdf(x) * g2.pdf(x - z), 0.0, 40.0, 8000);
            assert!((num - c.pdf(z)).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn diff_stats_examples() {
        let s = same_age_diff_stats(1.0).unwrap();
        assert!((s.sigma_d - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((s.mean_d - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-15);
        assert!((s.disp_d - 0.85255).abs() < 5e-5);
        assert!((s.mean_d - 1.128).abs() < 1e-3);
        assert!((s.disp_d - 0.853).abs() < 1e-3);
        let s2 = same_age_diff_stats(2.0).unwrap();
        assert_eq!(s2.sigma_d, 2.0 * s.sigma_d);
        assert_eq!(s2.mean_d, 2.0 * s.mean_d);
        assert_eq!(s2.disp_d, 2.0 * s.disp_d);
        assert!(same_age_diff_stats(0.0).is_err());
        // lower scope edge argument: <d> - disp ≈ 0.276σ < σ
        assert!((s.mean_d - s.disp_d - 0.276).abs() < 1e-3);
    }

    #[test]
    fn half_normal_moments_by_quadrature() {
        let sigma = 1.7;
        let stats = same_age_diff_stats(sigma).unwrap();
        let top = 12.0 * sigma;
        let mass = simpson(|d| half_normal_pdf(d, sigma), 0.0, top, 20_000);
        assert!((mass - 1.0).abs() < 1e-9);
        let mean = simpson(|d| d * half_normal_pdf(d, sigma), 0.0, top, 20_000);
        assert!((mean - stats.mean_d).abs() < 1e-9);
        let var = simpson(
            |d| (d - mean).powi(2) * half_normal_pdf(d, sigma),
            0.0,
            top,
            20_000,
        );
        assert!((var.sqrt() - stats.disp_d).abs() < 1e-9);
    }

    #[test]
    fn scope_examples() {
        let s = d_scope(1.8, 1.4).unwrap();
        assert_eq!(s.lower, 1.4);
        assert!((s.upper - 2.7734).abs() < 1e-3);
        let s = d_scope(2.0, 2.0).unwrap();
        assert!((s.upper - 3.962).abs() < 1e-3);
        let s = d_scope(3.0, 2.4).unwrap();
        assert_eq!(s.lower, 2.4);
        assert!((s.upper - 4.754).abs() < 1e-3);
        assert!((scope_upper_t() - 1.981).abs() < 1e-3);
        assert!(d_scope(0.0, 1.0).is_err());
    }

    #[test]
    fn profile_band() {
        let p = AgeProfile::new(20.0, 0.15).unwrap();
        assert!(p.in_supported_band());
        assert!((p.sigma() - 3.0).abs() < 1e-15);
        assert!(!AgeProfile::new(20.0, 0.3).unwrap().in_supported_band());
        let q = AgeProfile::with_sigma(20.0, 3.0).unwrap();
        assert!((q.s() - 0.15).abs() < 1e-15);
        let g: Gaussian = "14, 1.4".parse().unwrap();
        assert_eq!((g.mu(), g.sigma()), (14.0, 1.4));
    }
}

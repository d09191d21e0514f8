//! Scalar large-deviation calculators: semicircular moments and moment
//! generating function, the Gaussian/semicircular mixture log-MGF, a numerical
//! Fenchel–Legendre transform and the resulting LDP upper bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad;

/// A real law described by its log moment generating function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarLaw {
    GaussianStd,
    /// Semicircular law centered at `a` with radius `r`.
    Semicircle { a: f64, r: f64 },
    /// `(1−θ)·N(0,1) + θ·semicircle(0, 2)` at the level of moment generating functions.
    Mixture { theta: f64 },
}

impl ScalarLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarLaw::GaussianStd => Ok(()),
            ScalarLaw::Semicircle { r, .. } if !(r > 0.0) => {
                Err(Error::Parameter(format!("semicircle radius must be > 0, got {r}")))
            }
            ScalarLaw::Mixture { theta } if !(0.0..=1.0).contains(&theta) => {
                Err(Error::Parameter(format!("mixture weight must lie in [0, 1], got {theta}")))
            }
            _ => Ok(()),
        }
    }

    /// `Λ(λ) = log E e^{λX}`.
    pub fn log_mgf(&self, lam: f64) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            ScalarLaw::GaussianStd => 0.5 * lam * lam,
            ScalarLaw::Semicircle { a, r } => a * lam + semicircle_log_mgf(0.5 * r * lam),
            ScalarLaw::Mixture { theta } => mixture_log_mgf(theta, lam)?,
        })
    }

    pub fn is_centered(&self) -> bool {
        match *self {
            ScalarLaw::Semicircle { a, .. } => a == 0.0,
            _ => true,
        }
    }
}

/// `∫ t^order dγ_{a,r}(t)` where `γ_{a,r}` has density `(2/(πr²))√(r² − (t−a)²)`.
///
/// Substituting `t = a + r x` leaves the weight `(2/π)√(1 − x²)`, integrated
/// exactly by a Gauss–Chebyshev rule of the second kind.
pub fn semicircle_moment(order: u32, a: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("semicircle radius must be > 0, got {r}")));
    }
    let nodes = order as usize / 2 + 8;
    let sum: f64 = quad::chebyshev_u_rule(nodes)
        .iter()
        .map(|&(x, w)| w * (a + r * x).powi(order as i32))
        .sum();
    Ok(2.0 / PI * sum)
}

/// Above this `|λ|` the MGF series is summed in log space.
const LOG_SPACE_CUTOFF: f64 = 100.0;

/// `M(λ) = ∫ e^{λt} dγ_{0,2}(t) = Σ_n λ^{2n} / ((n+1)! n!) = I₁(2λ)/λ`.
pub fn semicircle_mgf(lam: f64) -> f64 {
    if lam.abs() >= LOG_SPACE_CUTOFF {
        return semicircle_log_mgf(lam).exp();
    }
    let x = lam * lam;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        term *= x / ((n + 1.0) * (n + 2.0));
        sum += term;
        n += 1.0;
        if term <= f64::EPSILON * 1e-3 * sum {
            return sum;
        }
    }
}

/// `log M(λ)`, finite for every real `λ`.
pub fn semicircle_log_mgf(lam: f64) -> f64 {
    let l = lam.abs();
    if l < LOG_SPACE_CUTOFF {
        return semicircle_mgf(lam).ln();
    }
    // terms peak near n ≈ |λ|; the window below covers them to double precision
    let ln_l = l.ln();
    let last = (l + 40.0 * l.sqrt() + 50.0) as u64;
    let log_term = |n: u64| {
        let nf = n as f64;
        2.0 * nf * ln_l - ln_gamma(nf + 2.0) - ln_gamma(nf + 1.0)
    };
    let top = (0..=last).map(log_term).fold(f64::NEG_INFINITY, f64::max);
    top + (0..=last).map(|n| (log_term(n) - top).exp()).sum::<f64>().ln()
}

/// Independent route to `M(λ)`: Gauss–Chebyshev quadrature of `e^{λt}`
/// against the semicircle density on `[−2, 2]`.
pub fn semicircle_mgf_quadrature(lam: f64, nodes: usize) -> f64 {
    2.0 / PI * quad::chebyshev_u_rule(nodes).iter().map(|&(x, w)| w * (2.0 * lam * x).exp()).sum::<f64>()
}

/// `Λ_θ(λ) = log((1−θ) e^{λ²/2} + θ M(λ))`, evaluated with log-sum-exp.
pub fn mixture_log_mgf(theta: f64, lam: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Parameter(format!("mixture weight must lie in [0, 1], got {theta}")));
    }
    let gauss = 0.5 * lam * lam;
    if theta == 0.0 {
        return Ok(gauss);
    }
    let semi = semicircle_log_mgf(lam);
    if theta == 1.0 {
        return Ok(semi);
    }
    let x = (1.0 - theta).ln() + gauss;
    let y = theta.ln() + semi;
    let top = x.max(y);
    Ok(top + ((x - top).exp() + (y - top).exp()).ln())
}

/// Both sides of `|Λ_θ(λ) − λ²/2 − log(1−θ)| ≤ (θ/(1−θ)) e^{2|λ| − λ²/2}`.
///
/// The semicircular part is supported in `[−2, 2]`, so `M(λ) ≤ e^{2|λ|}` on
/// either side of zero.
pub fn check_mixture_bound(theta: f64, lam: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("mixture bound needs theta in (0, 1), got {theta}")));
    }
    // Λ_θ − λ²/2 − log(1−θ) = log(1 + (θ/(1−θ)) M(λ) e^{−λ²/2}), kept free of cancellation
    let ratio = theta.ln() - (1.0 - theta).ln() + semicircle_log_mgf(lam) - 0.5 * lam * lam;
    let lhs = ratio.exp().ln_1p();
    let rhs = theta / (1.0 - theta) * (2.0 * lam.abs() - 0.5 * lam * lam).exp();
    Ok((lhs, rhs))
}

/// Search window for the Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreSearch {
    pub lam_lo: f64,
    pub lam_hi: f64,
    pub grid_n: usize,
    pub refine_tol: f64,
    /// For a centered law, `Λ*(x)` is a supremum over `λ ≥ 0` when `x ≥ 0`
    /// (and over `λ ≤ 0` when `x ≤ 0`).
    pub centered: bool,
}

impl Default for LegendreSearch {
    fn default() -> Self {
        Self { lam_lo: -50.0, lam_hi: 50.0, grid_n: 2001, refine_tol: 1e-10, centered: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionEval {
    pub x: f64,
    pub value: f64,
    pub argmax_lambda: f64,
    pub search: LegendreSearch,
}

/// `Λ*(x) = sup_λ [λx − Λ(λ)]` by a grid scan followed by golden-section
/// refinement around the best grid point (the objective is concave).
pub fn fenchel_legendre<F: Fn(f64) -> f64>(logmgf: F, x: f64, search: &LegendreSearch) -> Result<RateFunctionEval> {
    if search.grid_n < 3 || !(search.lam_lo < search.lam_hi) {
        return Err(Error::Window("need lam_lo < lam_hi and at least 3 grid points".into()));
    }
    let (mut lo, mut hi) = (search.lam_lo, search.lam_hi);
    if search.centered {
        if x >= 0.0 {
            lo = lo.max(0.0);
        }
        if x <= 0.0 {
            hi = hi.min(0.0);
        }
        if lo > hi {
            return Err(Error::Window(format!("window [{}, {}] excludes lambda = 0", search.lam_lo, search.lam_hi)));
        }
    }
    let objective = |lam: f64| lam * x - logmgf(lam);
    let step = (hi - lo) / (search.grid_n - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY, 0usize);
    for i in 0..search.grid_n {
        let lam = if step == 0.0 { lo } else { lo + step * i as f64 };
        let v = objective(lam);
        if !v.is_finite() {
            return Err(Error::Window(format!("log-MGF is not finite at lambda = {lam}")));
        }
        if v > best.1 {
            best = (lam, v, i);
        }
    }
    let (mut arg, mut value) = (best.0, best.1);
    if step > 0.0 {
        let a = lo + step * best.2.saturating_sub(1) as f64;
        let b = (lo + step * (best.2 + 1) as f64).min(hi);
        let (ra, rv) = quad::golden_max(objective, a, b, search.refine_tol);
        if rv > value {
            arg = ra;
            value = rv;
        }
    }
    Ok(RateFunctionEval { x, value, argmax_lambda: arg, search: *search })
}

/// Rate function of a named law.
pub fn rate_function(law: &ScalarLaw, x: f64, search: &LegendreSearch) -> Result<RateFunctionEval> {
    law.validate()?;
    let search = LegendreSearch { centered: search.centered && law.is_centered(), ..*search };
    fenchel_legendre(|l| law.log_mgf(l).unwrap_or(f64::NAN), x, &search)
}

/// Number of levels `s ≥ t` scanned by [`ldp_upper_bound`].
const UPPER_GRID: usize = 41;

/// `−inf_{s ≥ t} Λ*(s)`, the exponential rate bounding `P(S_n/n ≥ t)`.
///
/// Scans `Λ*` on `[t, t + 4 max(1, |t|)]` (plus `s = 0` when `0 ≥ t`). For a
/// centered law `Λ*` is convex with minimum `0` at the origin, so for `t > 0`
/// the infimum sits at `s = t`.
pub fn ldp_upper_bound<F: Fn(f64) -> f64>(logmgf: F, t: f64, search: &LegendreSearch) -> Result<f64> {
    let span = 4.0 * t.abs().max(1.0);
    let mut levels: Vec<f64> = (0..UPPER_GRID).map(|i| t + span * i as f64 / (UPPER_GRID - 1) as f64).collect();
    if t <= 0.0 {
        levels.push(0.0);
    }
    let mut inf = f64::INFINITY;
    for s in levels {
        inf = inf.min(fenchel_legendre(&logmgf, s, search)?.value);
    }
    Ok(-inf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalan(n: usize) -> f64 {
        // C_{n+1} = Σ C_i C_{n−i}
        let mut c = vec![1.0f64];
        for m in 0..n {
            c.push((0..=m).map(|i| c[i] * c[m - i]).sum());
        }
        c[n]
    }

    #[test]
    fn semicircle_moment_examples() {
        assert!((semicircle_moment(0, 0.7, 1.3).unwrap() - 1.0).abs() < 1e-14);
        assert!(semicircle_moment(1, 0.0, 2.0).unwrap().abs() < 1e-14);
        for (n, expect) in [(1, 1.0), (2, 2.0), (3, 5.0), (4, 14.0)] {
            let m = semicircle_moment(2 * n, 0.0, 2.0).unwrap();
            assert!((m - expect).abs() < 1e-10 * expect);
            assert_eq!(catalan(n as usize), expect);
        }
        for n in 0..=6 {
            let m = semicircle_moment(2 * n, 0.0, 2.0).unwrap();
            assert!((m - catalan(n as usize)).abs() < 1e-8);
            assert!(semicircle_moment(2 * n + 1, 0.0, 2.0).unwrap().abs() < 1e-10);
        }
        // shifted law: mean a, variance r²/4
        assert!((semicircle_moment(1, 1.5, 2.0).unwrap() - 1.5).abs() < 1e-13);
        assert!((semicircle_moment(2, 1.5, 2.0).unwrap() - (2.25 + 1.0)).abs() < 1e-13);
        assert!(semicircle_moment(2, 0.0, 0.0).is_err());
    }

    #[test]
    fn mgf_examples() {
        assert_eq!(semicircle_mgf(0.0), 1.0);
        assert!((semicircle_mgf(1.0) - 1.590_636_854_637_329).abs() < 1e-12);
        assert!((semicircle_mgf(1.0) - semicircle_mgf_quadrature(1.0, 64)).abs() < 1e-8);
        assert!(semicircle_mgf(3.0) >= 3f64.exp() / 4.0);
        for i in -50..=50 {
            let lam = 0.1 * i as f64;
            let a = semicircle_mgf(lam);
            assert!((a - semicircle_mgf_quadrature(lam, 128)).abs() < 1e-8 * a);
        }
    }

    #[test]
    fn log_space_series_joins_direct_sum() {
        // log(I₁(2λ)/λ) from an arbitrary-precision evaluation
        assert!((semicircle_log_mgf(99.999_999) - 191.824_850_904_373_55).abs() < 1e-11);
        assert!((semicircle_log_mgf(100.0) - 191.824_852_889_392_4).abs() < 1e-11);
        assert!(semicircle_log_mgf(1000.0).is_finite());
    }

    #[test]
    fn mixture_examples() {
        assert_eq!(mixture_log_mgf(0.0, 1.7).unwrap(), 0.5 * 1.7 * 1.7);
        assert!((mixture_log_mgf(1.0, 1.2).unwrap() - semicircle_mgf(1.2).ln()).abs() < 1e-15);
        let v = mixture_log_mgf(0.5, 1.0).unwrap();
        assert!((v - (0.5 * 0.5f64.exp() + 0.5 * 1.590_636_8).ln()).abs() < 1e-7);
        assert!(mixture_log_mgf(1.1, 0.0).is_err());
        assert!(mixture_log_mgf(0.3, 200.0).unwrap().is_finite());
    }

    #[test]
    fn mixture_bound_examples() {
        let (l, r) = check_mixture_bound(0.5, 0.0).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        let (l, r) = check_mixture_bound(0.1, -5.0).unwrap();
        assert!(l <= r);
        let mut prev = f64::INFINITY;
        for lam in [4.0, 6.0, 8.0, 10.0, 12.0] {
            let (l, r) = check_mixture_bound(0.3, lam).unwrap();
            assert!(l <= r && l < prev);
            prev = l;
        }
        assert!(prev < 1e-10);
        assert!(check_mixture_bound(0.0, 1.0).is_err());
        assert!(check_mixture_bound(1.0, 1.0).is_err());
    }

    #[test]
    fn legendre_examples() {
        let s = LegendreSearch::default();
        let r = fenchel_legendre(|l| 0.5 * l * l, 1.0, &s).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8 && (r.argmax_lambda - 1.0).abs() < 1e-4);
        let semi = rate_function(&ScalarLaw::Semicircle { a: 0.0, r: 2.0 }, 1.0, &s).unwrap();
        assert!(semi.value <= 4f64.ln() && semi.value > 0.0);
        for law in [ScalarLaw::GaussianStd, ScalarLaw::Mixture { theta: 0.4 }, ScalarLaw::Semicircle { a: 0.0, r: 2.0 }] {
            assert!(rate_function(&law, 0.0, &s).unwrap().value.abs() < 1e-12);
        }
        let bad = LegendreSearch { lam_lo: 2.0, lam_hi: 1.0, ..s };
        assert!(fenchel_legendre(|l| 0.5 * l * l, 1.0, &bad).is_err());
        let excluded = LegendreSearch { lam_lo: -2.0, lam_hi: -1.0, ..s };
        assert!(fenchel_legendre(|l| 0.5 * l * l, 1.0, &excluded).is_err());
        assert!(matches!(fenchel_legendre(|l| 1.0 / (l - 0.5), 1.0, &LegendreSearch { grid_n: 3, lam_lo: 0.0, lam_hi: 1.0, ..s }), Err(Error::Window(_))));
    }

    #[test]
    fn ldp_upper_examples() {
        let s = LegendreSearch::default();
        assert!((ldp_upper_bound(|l| 0.5 * l * l, 1.0, &s).unwrap() + 0.5).abs() < 1e-8);
        let semi = |l: f64| semicircle_log_mgf(l);
        assert!(ldp_upper_bound(semi, 1.0, &s).unwrap() >= -(4f64.ln()));
        assert!(ldp_upper_bound(semi, 0.0, &s).unwrap().abs() < 1e-12);
        assert!(ldp_upper_bound(|l| 0.5 * l * l, -1.0, &s).unwrap().abs() < 1e-12);
    }
}

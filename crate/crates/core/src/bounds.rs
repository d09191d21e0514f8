//! Closed-form tail and moment bounds for sums of independent bounded
//! self-adjoint summands, plus the selector bounds used in compressed sensing.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Aggregated moment data of a sum `Σ a_j`: the variance proxy `S = Σ σ_j²`,
/// the uniform bound `R = sup_j M_j` and the number of summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentProfile {
    pub variance: f64,
    pub bound: f64,
    pub terms: usize,
}

impl MomentProfile {
    pub fn new(variance: f64, bound: f64, terms: usize) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Parameter(format!("variance proxy S must be finite and >= 0, got {variance}")));
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::Parameter(format!("uniform bound R must be finite and > 0, got {bound}")));
        }
        if terms == 0 {
            return Err(Error::Parameter("profile needs at least one summand".into()));
        }
        Ok(Self { variance, bound, terms })
    }

    /// Aggregates per-summand `(σ_j², M_j)` pairs.
    pub fn from_terms<I: IntoIterator<Item = (f64, f64)>>(terms: I) -> Result<Self> {
        let (mut s, mut r, mut n) = (0.0, 0.0f64, 0usize);
        for (var, m) in terms {
            s += var;
            r = r.max(m);
            n += 1;
        }
        Self::new(s, r, n)
    }

    fn require_variance(&self, what: &str) -> Result<()> {
        if self.variance == 0.0 {
            return Err(Error::Degenerate(format!("{what} bound is undefined for S = 0")));
        }
        Ok(())
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("threshold t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Below this argument `phi` switches to its Taylor series.
const PHI_SERIES_CUTOFF: f64 = 1e-4;

/// Bennett's function `φ(x) = (1+x) log(1+x) − x`.
pub fn phi(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("phi is defined for x >= 0, got {x}")));
    }
    if x < PHI_SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k x^k / (k(k−1))
        let mut sum = 0.0;
        let mut pow = x * x;
        for k in 2..9 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * pow / (k * (k - 1)) as f64;
            pow *= x;
        }
        return Ok(sum);
    }
    Ok((1.0 + x) * x.ln_1p() - x)
}

/// Bennett tail `exp(−(S/R²) φ(tR/S))`.
pub fn bennett_tail(prof: &MomentProfile, t: f64) -> Result<f64> {
    check_t(t)?;
    prof.require_variance("Bennett")?;
    let (s, r) = (prof.variance, prof.bound);
    Ok((-(s / (r * r)) * phi(t * r / s)?).exp())
}

/// Bernstein tail `exp(−t² / (2S + (2/3) t R))`.
pub fn bernstein_tail(prof: &MomentProfile, t: f64) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let denom = 2.0 * prof.variance + 2.0 / 3.0 * t * prof.bound;
    Ok((-t * t / denom).exp())
}

/// Prohorov tail `exp(−(t/(2R)) arcsinh(tR/(2S)))`.
pub fn prohorov_tail(prof: &MomentProfile, t: f64) -> Result<f64> {
    check_t(t)?;
    prof.require_variance("Prohorov")?;
    let (s, r) = (prof.variance, prof.bound);
    Ok((-(t / (2.0 * r)) * (t * r / (2.0 * s)).asinh()).exp())
}

/// Minimizer `λ = (1/R) log(1 + tR/S)` of the exponential Chebyshev bound.
pub fn chernoff_lambda_opt(prof: &MomentProfile, t: f64) -> Result<f64> {
    check_t(t)?;
    prof.require_variance("Chernoff")?;
    let (s, r) = (prof.variance, prof.bound);
    Ok((t * r / s).ln_1p() / r)
}

/// Bound before optimizing the Chernoff parameter:
/// `exp(−λt + (S/R²)(e^{λR} − 1 − λR))`.
#[cfg(test)]
fn chernoff_bound_at(prof: &MomentProfile, lambda: f64, t: f64) -> f64 {
    let (s, r) = (prof.variance, prof.bound);
    let x = lambda * r;
    (-lambda * t + s / (r * r) * (x.exp_m1() - x)).exp()
}

/// Which closed-form tail bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailBound {
    Bennett,
    Bernstein,
    Prohorov,
}

impl TailBound {
    pub const ALL: [TailBound; 3] = [TailBound::Bennett, TailBound::Bernstein, TailBound::Prohorov];

    pub fn eval(self, prof: &MomentProfile, t: f64) -> Result<f64> {
        match self {
            TailBound::Bennett => bennett_tail(prof, t),
            TailBound::Bernstein => bernstein_tail(prof, t),
            TailBound::Prohorov => prohorov_tail(prof, t),
        }
    }
}

impl fmt::Display for TailBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailBound::Bennett => "bennett",
            TailBound::Bernstein => "bernstein",
            TailBound::Prohorov => "prohorov",
        })
    }
}

/// Explicit-constant moment bound `‖Σ a_j‖_p ≤ 4(√(Sp) + Rp)`, `p ≥ 2`.
pub fn rosenthal_bound(prof: &MomentProfile, p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("Rosenthal bound needs finite p >= 2, got {p}")));
    }
    Ok(4.0 * ((prof.variance * p).sqrt() + prof.bound * p))
}

/// Upper incomplete Gamma value and the elementary bound `2 e^{−p} p^{α−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaCheck {
    pub gamma_val: f64,
    pub bound: f64,
}

impl GammaCheck {
    pub fn holds(&self) -> bool {
        self.gamma_val <= self.bound
    }
}

/// Computes `Γ(α, p) = ∫_p^∞ e^{−t} t^{α−1} dt` by adaptive quadrature together
/// with the bound `2 e^{−p} p^{α−1}`, valid when `p ≥ 2α − 2`.
pub fn incomplete_gamma_upper_check(alpha: f64, p: f64) -> Result<GammaCheck> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be finite and >= 1, got {alpha}")));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be finite and > 0, got {p}")));
    }
    if p < 2.0 * alpha - 2.0 {
        return Err(Error::Precondition(format!("lemma requires p >= 2*alpha - 2 (alpha = {alpha}, p = {p})")));
    }
    // Γ(α, p) = e^{−p} p^{α−1} ∫_0^∞ e^{−u} (1 + u/p)^{α−1} du
    let scale = (-p + (alpha - 1.0) * p.ln()).exp();
    let integral = quad::integrate_to_infinity(|u| (-u + (alpha - 1.0) * (u / p).ln_1p()).exp(), 0.0, 1e-12, 0.0)?;
    Ok(GammaCheck { gamma_val: scale * integral, bound: 2.0 * scale })
}

/// Parameters of the random-selector moment bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorParams {
    /// Population size.
    pub m: usize,
    /// Expected number of selected indices.
    pub k: f64,
    /// Uniform operator-norm bound on the summands.
    pub r: f64,
    /// Selection rate `k/m`.
    pub lambda: f64,
    /// Absolute constant of the moment inequality (unknown; configurable).
    pub c_const: f64,
}

impl SelectorParams {
    pub fn new(m: usize, k: f64, r: f64, c_const: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("population size m must be >= 1".into()));
        }
        if !(k > 0.0) || k > m as f64 {
            return Err(Error::Parameter(format!("expected count k must lie in (0, m], got {k}")));
        }
        if !(r >= 0.0) || !(c_const > 0.0) {
            return Err(Error::Parameter("r must be >= 0 and C > 0".into()));
        }
        Ok(Self { m, k, r, lambda: k / m as f64, c_const })
    }
}

/// Selector moment bound `C · max(√(2pr/k), pr/k)` for `p ≥ 2.5`.
///
/// The `2` under the root is the cost of the symmetrization step, which turns
/// the constant of the symmetric inequality into `√2 C`.
pub fn cs_moment_bound(sel: &SelectorParams, p: f64) -> Result<f64> {
    if !(p >= 2.5) || !p.is_finite() {
        return Err(Error::Parameter(format!("selector moment bound needs finite p >= 2.5, got {p}")));
    }
    let ratio = p * sel.r / sel.k;
    Ok(sel.c_const * (2.0 * ratio).sqrt().max(ratio))
}

/// Tail bound for the selector sum at level `tε`, with `ε² = r/k`:
/// `tr(1) e^{−t²/(2C²e)}` when `tε ≤ C`, otherwise `tr(1) e^{−t/(2Ceε)}`.
pub fn cs_tail_bound(t: f64, eps: f64, c_const: f64, trace_of_1: f64) -> Result<f64> {
    if !(c_const > 0.0) || !(eps > 0.0) || !(trace_of_1 > 0.0) {
        return Err(Error::Parameter("C, eps and tr(1) must be positive".into()));
    }
    if t * t < 2.5 * c_const * c_const * E {
        return Err(Error::Precondition(format!("requires t^2 >= 2.5 C^2 e (t = {t}, C = {c_const})")));
    }
    if t < 2.5 * c_const * E * eps {
        return Err(Error::Precondition(format!("requires t >= 2.5 C e eps (t = {t}, C = {c_const}, eps = {eps})")));
    }
    let exponent = if t * eps <= c_const {
        t * t / (2.0 * c_const * c_const * E)
    } else {
        t / (2.0 * c_const * E * eps)
    };
    Ok(trace_of_1 * (-exponent).exp())
}

//! Random Hermitian ensembles, the Monte Carlo harness and exact scalar oracles.
//!
//! Every ensemble is a sum `Σ_j c_j A_j` of fixed Hermitian coefficient
//! matrices `A_j` with independent mean-zero scalar coefficients `c_j`. The
//! noncommutative probability of an event `a ≥ t` is the expected normalized
//! eigenvalue count `E τ(1_{[t,∞)}(a))`, which is what the harness averages.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bounds::{MomentProfile, TailBound};
use crate::csfourier::DftSystem;
use crate::error::{Error, Result};
use crate::rng::{self, RandomStream};
use crate::spectral::{self, HermitianMatrix, MatrixLiteral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// `a_j = (δ_j − λ) A_j` with `δ_j ~ Bernoulli(λ)` and diagonal `A_j`.
    SelectorDiagonal,
    /// `a_j = ε_j A_j` with Rademacher signs.
    RademacherFixed,
    /// `a_j = u_j A_j` with `u_j ~ Uniform[−1, 1]`.
    BoundedUniform,
    /// `a_j = (δ_j − λ) n y_j^T ⊗ y_j^T` for DFT rows restricted to a support.
    FourierSelector,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 4] = [
        EnsembleKind::SelectorDiagonal,
        EnsembleKind::RademacherFixed,
        EnsembleKind::BoundedUniform,
        EnsembleKind::FourierSelector,
    ];

    fn short_name(self) -> &'static str {
        match self {
            EnsembleKind::SelectorDiagonal => "selector",
            EnsembleKind::RademacherFixed => "rademacher",
            EnsembleKind::BoundedUniform => "uniform",
            EnsembleKind::FourierSelector => "fourier",
        }
    }

    fn is_selector(self) -> bool {
        matches!(self, EnsembleKind::SelectorDiagonal | EnsembleKind::FourierSelector)
    }
}

/// A family of independent mean-zero bounded random Hermitian summands.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    kind: EnsembleKind,
    coefficients: Vec<HermitianMatrix>,
    norms: Vec<f64>,
    lambda: f64,
    support: Option<(usize, Vec<usize>)>,
}

/// Selection rate used by the built-in selector ensembles.
pub const BUILTIN_LAMBDA: f64 = 0.25;

impl EnsembleSpec {
    fn with_coefficients(kind: EnsembleKind, coefficients: Vec<HermitianMatrix>, lambda: f64) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::Parameter("ensemble needs at least one summand".into()))?;
        let d = first.dim();
        if let Some(bad) = coefficients.iter().find(|a| a.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
        }
        if kind.is_selector() && !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Parameter(format!("selection rate must lie in (0, 1], got {lambda}")));
        }
        let norms = coefficients.iter().map(HermitianMatrix::op_norm).collect();
        Ok(Self { kind, coefficients, norms, lambda, support: None })
    }

    pub fn rademacher(coefficients: Vec<HermitianMatrix>) -> Result<Self> {
        Self::with_coefficients(EnsembleKind::RademacherFixed, coefficients, 1.0)
    }

    pub fn bounded_uniform(coefficients: Vec<HermitianMatrix>) -> Result<Self> {
        Self::with_coefficients(EnsembleKind::BoundedUniform, coefficients, 1.0)
    }

    pub fn selector_diagonal(coefficients: Vec<HermitianMatrix>, lambda: f64) -> Result<Self> {
        Self::with_coefficients(EnsembleKind::SelectorDiagonal, coefficients, lambda)
    }

    /// Selector over the `n` DFT rows restricted to `support`, with rate `λ = k/n`.
    pub fn fourier_selector(n: usize, support: &[usize], lambda: f64) -> Result<Self> {
        let dft = DftSystem::new(n)?;
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::Parameter("Fourier support must be non-empty".into()));
        }
        let coefficients = (0..n)
            .map(|j| dft.scaled_row_projector(j, &support))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Self::with_coefficients(EnsembleKind::FourierSelector, coefficients, lambda)?;
        spec.support = Some((n, support));
        Ok(spec)
    }

    /// Built-in ensemble of the given kind, dimension and number of terms.
    ///
    /// Scalar (`d = 1`) ensembles use `A_j = 1`. Otherwise the coefficients are
    /// fixed pseudo-random matrices of unit operator norm (diagonal with
    /// entries in `[0, 1]` for the selector kind). The Fourier kind uses the
    /// `n`-point DFT restricted to `T = {0, …, d−1}`.
    pub fn builtin(kind: EnsembleKind, dim: usize, n_terms: usize) -> Result<Self> {
        if dim == 0 || n_terms == 0 {
            return Err(Error::Parameter("built-in ensembles need d >= 1 and n >= 1".into()));
        }
        let mut rng = rng::stream(0x5eed_0000 + (dim as u64) * 1000 + n_terms as u64);
        let unit = |rng: &mut RandomStream| {
            if dim == 1 {
                return HermitianMatrix::identity(1);
            }
            let a = spectral::random_hermitian(dim, rng);
            let norm = a.op_norm();
            a.scale(1.0 / norm)
        };
        match kind {
            EnsembleKind::RademacherFixed => Self::rademacher((0..n_terms).map(|_| unit(&mut rng)).collect()),
            EnsembleKind::BoundedUniform => Self::bounded_uniform((0..n_terms).map(|_| unit(&mut rng)).collect()),
            EnsembleKind::SelectorDiagonal => {
                let coefficients = (0..n_terms)
                    .map(|_| {
                        let mut diag: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                        let top = diag.iter().cloned().fold(0.0, f64::max);
                        diag.iter_mut().for_each(|x| *x /= top);
                        HermitianMatrix::diagonal(&diag)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::selector_diagonal(coefficients, BUILTIN_LAMBDA)
            }
            EnsembleKind::FourierSelector => {
                if dim > n_terms {
                    return Err(Error::Parameter(format!("Fourier support size {dim} exceeds n = {n_terms}")));
                }
                let support: Vec<usize> = (0..dim).collect();
                Self::fourier_selector(n_terms, &support, BUILTIN_LAMBDA)
            }
        }
    }

    /// Parses built-in names of the form `<kind>-d<dim>-n<terms>`, e.g.
    /// `rademacher-d1-n10`, with kind one of `selector`, `rademacher`,
    /// `uniform`, `fourier`.
    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unknown ensemble name '{name}' (expected <kind>-d<dim>-n<terms>)"));
        let mut parts = name.split('-');
        let (Some(kind), Some(d), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let kind = EnsembleKind::ALL
            .into_iter()
            .find(|k| k.short_name() == kind)
            .ok_or_else(bad)?;
        let d = d.strip_prefix('d').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let n = n.strip_prefix('n').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        Self::builtin(kind, d, n)
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].dim()
    }

    pub fn n_terms(&self) -> usize {
        self.coefficients.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coefficients(&self) -> &[HermitianMatrix] {
        &self.coefficients
    }

    /// DFT size and support for the Fourier kind.
    pub fn fourier_support(&self) -> Option<(usize, &[usize])> {
        self.support.as_ref().map(|(n, t)| (*n, t.as_slice()))
    }

    /// Per-summand `(σ_j², M_j)` with `σ_j² = ‖E a_j²‖` and `M_j` the almost-sure norm bound.
    pub fn term_profiles(&self) -> Vec<(f64, f64)> {
        let lam = self.lambda;
        self.norms
            .iter()
            .map(|&a| match self.kind {
                EnsembleKind::RademacherFixed => (a * a, a),
                EnsembleKind::BoundedUniform => (a * a / 3.0, a),
                EnsembleKind::SelectorDiagonal | EnsembleKind::FourierSelector => {
                    (lam * (1.0 - lam) * a * a, lam.max(1.0 - lam) * a)
                }
            })
            .collect()
    }

    /// `Σ_j M_j`, an almost-sure bound on the norm of the sum.
    pub fn total_bound(&self) -> f64 {
        self.term_profiles().iter().map(|p| p.1).sum()
    }

    /// Draws the scalar coefficients `c_j` of one sample.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let lam = self.lambda;
        (0..self.n_terms())
            .map(|_| match self.kind {
                EnsembleKind::RademacherFixed => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                EnsembleKind::BoundedUniform => rng.random_range(-1.0..=1.0),
                EnsembleKind::SelectorDiagonal | EnsembleKind::FourierSelector => {
                    let delta = if rng.random::<f64>() < lam { 1.0 } else { 0.0 };
                    delta - lam
                }
            })
            .collect()
    }

    pub fn to_config(&self) -> EnsembleConfig {
        let (n, support) = match &self.support {
            Some((n, t)) => (Some(*n), Some(t.clone())),
            None => (None, None),
        };
        EnsembleConfig {
            kind: self.kind,
            lambda: self.kind.is_selector().then_some(self.lambda),
            coefficients: if self.support.is_some() {
                None
            } else {
                Some(self.coefficients.iter().map(HermitianMatrix::to_literal).collect())
            },
            n,
            support,
            builtin: None,
        }
    }
}

/// Serializable description of an ensemble: either a built-in name or
/// explicit coefficient matrices / Fourier data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<MatrixLiteral>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    /// Built-in name (`<kind>-d<dim>-n<terms>`); overrides the other fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<EnsembleSpec> {
        if let Some(name) = &self.builtin {
            return EnsembleSpec::from_name(name);
        }
        let lambda = || self.lambda.ok_or_else(|| Error::Parameter("selector ensembles need lambda".into()));
        let coefficients = || -> Result<Vec<HermitianMatrix>> {
            self.coefficients
                .as_ref()
                .ok_or_else(|| Error::Parameter("ensemble needs coefficient matrices".into()))?
                .iter()
                .map(HermitianMatrix::from_literal)
                .collect()
        };
        match self.kind {
            EnsembleKind::RademacherFixed => EnsembleSpec::rademacher(coefficients()?),
            EnsembleKind::BoundedUniform => EnsembleSpec::bounded_uniform(coefficients()?),
            EnsembleKind::SelectorDiagonal => EnsembleSpec::selector_diagonal(coefficients()?, lambda()?),
            EnsembleKind::FourierSelector => {
                let n = self.n.ok_or_else(|| Error::Parameter("Fourier ensemble needs n".into()))?;
                let support = self.support.as_ref().ok_or_else(|| Error::Parameter("Fourier ensemble needs support".into()))?;
                EnsembleSpec::fourier_selector(n, support, lambda()?)
            }
        }
    }
}

/// Analytic moment profile `(S, R)` of an ensemble.
pub fn profile_of(spec: &EnsembleSpec) -> Result<MomentProfile> {
    MomentProfile::from_terms(spec.term_profiles())
}

/// One draw of `Σ_j a_j`.
pub fn sample_sum(spec: &EnsembleSpec, stream: &mut RandomStream) -> HermitianMatrix {
    let coeffs = spec.sample_coefficients(stream);
    let mut sum = HermitianMatrix::zeros(spec.dim());
    if cfg!(debug_assertions) {
        for ((c, a), (_, bound)) in coeffs.iter().zip(&spec.norms).zip(spec.term_profiles()) {
            debug_assert!(c.abs() * a <= bound * (1.0 + 1e-12), "summand exceeds its norm bound");
        }
    }
    for (c, a) in coeffs.iter().zip(&spec.coefficients) {
        if *c != 0.0 {
            sum.axpy(*c, a);
        }
    }
    sum
}

/// Eigenvalues of `trials` independent draws, trial `i` using stream `(seed, i)`.
pub fn sample_spectra(spec: &EnsembleSpec, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| sample_sum(spec, &mut rng::trial_stream(seed, i)).eigenvalues())
        .collect()
}

/// Monte Carlo estimate of a `[0,1]`-valued expectation with a Hoeffding interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Half-width `√(log(2/δ) / (2N))` of the two-sided Hoeffding interval at
/// confidence `1 − δ` for the mean of `N` samples in `[0, 1]`.
pub fn hoeffding_half_width(trials: usize, confidence: f64) -> f64 {
    let delta = 1.0 - confidence;
    ((2.0 / delta).ln() / (2.0 * trials as f64)).sqrt()
}

fn check_trials(trials: usize, confidence: f64) -> Result<()> {
    if trials < 100 {
        return Err(Error::Parameter(format!("at least 100 trials are required, got {trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Parameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    Ok(())
}

fn tail_from_spectra(spectra: &[Vec<f64>], t: f64, seed: u64, confidence: f64) -> TailEstimate {
    let trials = spectra.len();
    // fixed ascending-trial reduction order
    let sum: f64 = spectra.iter().map(|ev| spectral::tail_fraction(ev, t)).sum();
    let mean = sum / trials as f64;
    let hw = hoeffding_half_width(trials, confidence);
    TailEstimate { t, mean, ci_low: mean - hw, ci_high: mean + hw, trials, seed }
}

/// Estimates `E τ(1_{[t,∞)}(Σ a_j))` over `trials` draws.
pub fn estimate_tail(spec: &EnsembleSpec, t: f64, trials: usize, seed: u64, confidence: f64) -> Result<TailEstimate> {
    check_trials(trials, confidence)?;
    let spectra = sample_spectra(spec, trials, seed);
    Ok(tail_from_spectra(&spectra, t, seed, confidence))
}

/// Empirical `(E τ|Σ a_j|^p)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    /// Delta-method standard error of `value` (0 for `p = ∞`).
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Estimates the `L_p` norm of the sum under the product tracial state
/// `E ⊗ tr/d`. For `p = ∞` the largest observed operator norm is returned.
pub fn estimate_pnorm(spec: &EnsembleSpec, p: f64, trials: usize, seed: u64) -> Result<MomentEstimate> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    if trials < 2 {
        return Err(Error::Parameter("at least 2 trials are required".into()));
    }
    let spectra = sample_spectra(spec, trials, seed);
    if p.is_infinite() {
        let value = spectra
            .iter()
            .map(|ev| spectral::schatten_from_singular_values(ev, p, true))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        return Ok(MomentEstimate { p, value, stderr: 0.0, trials, seed });
    }
    let powers = spectra
        .iter()
        .map(|ev| spectral::schatten_from_singular_values(ev, p, true).map(|v| v.powf(p)))
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let mean = powers.iter().sum::<f64>() / n;
    let var = powers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let value = mean.powf(1.0 / p);
    let stderr = if mean > 0.0 { value / (p * mean) * (var / n).sqrt() } else { 0.0 };
    Ok(MomentEstimate { p, value, stderr, trials, seed })
}

/// Bound values at one threshold, keyed by kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub bennett: f64,
    pub bernstein: f64,
    pub prohorov: f64,
}

impl BoundValues {
    pub fn get(&self, kind: TailBound) -> f64 {
        match kind {
            TailBound::Bennett => self.bennett,
            TailBound::Bernstein => self.bernstein,
            TailBound::Prohorov => self.prohorov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRecord {
    pub t: f64,
    pub empirical: TailEstimate,
    pub bounds: BoundValues,
    pub pass: bool,
    pub violations: Vec<TailBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub profile: MomentProfile,
    pub records: Vec<DominanceRecord>,
    pub pass: bool,
}

impl DominanceReport {
    /// Turns a failing report into an error listing every `(t, bound)` violation.
    pub fn ensure(&self) -> Result<()> {
        if self.pass {
            return Ok(());
        }
        let list: Vec<String> = self
            .records
            .iter()
            .flat_map(|r| r.violations.iter().map(move |k| format!("(t = {}, {k})", r.t)))
            .collect();
        Err(Error::Verification(format!("empirical tail exceeds bound at {}", list.join(", "))))
    }
}

/// Bound value at `t`, taking the `S → 0` limit (a sum that vanishes almost
/// surely) where the closed form is 0/0, and `1` for `t < 0`.
fn bound_or_limit(kind: TailBound, prof: &MomentProfile, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(1.0);
    }
    match kind.eval(prof, t) {
        Err(Error::Degenerate(_)) => Ok(if t > 0.0 { 0.0 } else { 1.0 }),
        other => other,
    }
}

/// Checks that the lower confidence limit of the empirical spectral tail lies
/// below each closed-form bound at every grid point. All grid points share
/// the same draws.
pub fn verify_dominance(
    spec: &EnsembleSpec,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
    confidence: f64,
) -> Result<DominanceReport> {
    check_trials(trials, confidence)?;
    let profile = profile_of(spec)?;
    let spectra = sample_spectra(spec, trials, seed);
    let mut records = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let empirical = tail_from_spectra(&spectra, t, seed, confidence);
        let bounds = BoundValues {
            bennett: bound_or_limit(TailBound::Bennett, &profile, t)?,
            bernstein: bound_or_limit(TailBound::Bernstein, &profile, t)?,
            prohorov: bound_or_limit(TailBound::Prohorov, &profile, t)?,
        };
        let violations: Vec<TailBound> = TailBound::ALL
            .into_iter()
            .filter(|&k| empirical.ci_low > bounds.get(k))
            .collect();
        records.push(DominanceRecord { t, empirical, bounds, pass: violations.is_empty(), violations });
    }
    let pass = records.iter().all(|r| r.pass);
    Ok(DominanceReport { profile, records, pass })
}

/// An evenly spaced grid of `points` thresholds on `(0, hi]`.
pub fn default_t_grid(spec: &EnsembleSpec, points: usize) -> Result<Vec<f64>> {
    let prof = profile_of(spec)?;
    // span up to a few standard deviations, capped by the almost-sure bound
    let hi = (4.0 * prof.variance.sqrt() + 2.0 * prof.bound).min(spec.total_bound()).max(prof.bound);
    Ok((1..=points).map(|i| hi * i as f64 / points as f64).collect())
}

fn ln_binomial(m: u64, j: u64) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((m - j) as f64 + 1.0)
}

fn log_sum_exp(logs: impl Iterator<Item = f64>) -> f64 {
    let logs: Vec<f64> = logs.filter(|l| *l > f64::NEG_INFINITY).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

/// Exact `(E |(1/k) Σ_{i≤m} δ_i − 1|^p)^{1/p}` for i.i.d. `δ_i ~ Bernoulli(λ)`,
/// summed over the binomial law in log space.
pub fn selector_moment_exact(m: u64, lam: f64, k: f64, p: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Parameter("m must be >= 1".into()));
    }
    if !(lam > 0.0 && lam <= 1.0) {
        return Err(Error::Parameter(format!("selection rate must lie in (0, 1], got {lam}")));
    }
    if !(k > 0.0) || !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("need k > 0 and finite p >= 1 (k = {k}, p = {p})")));
    }
    let (ln_lam, ln_rest) = (lam.ln(), (1.0 - lam).ln());
    let log_moment = log_sum_exp((0..=m).map(|j| {
        let weight = match (j, m - j) {
            (_, 0) => j as f64 * ln_lam,
            (0, _) => m as f64 * ln_rest,
            _ => ln_binomial(m, j) + j as f64 * ln_lam + (m - j) as f64 * ln_rest,
        };
        weight + p * (j as f64 / k - 1.0).abs().ln()
    }));
    Ok((log_moment / p).exp())
}

/// Exact `‖g‖_p = (E|g|^p)^{1/p}` for a standard Gaussian `g`:
/// `(2^{p/2} Γ((p+1)/2) / √π)^{1/p}`. Even integer `p` uses the double
/// factorial `(p−1)!!` directly.
pub fn gaussian_pnorm_exact(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::Parameter(format!("p must be finite and >= 1, got {p}")));
    }
    if p.fract() == 0.0 && (p as u64) % 2 == 0 && p <= 300.0 {
        let moment: f64 = (1..p as u64).step_by(2).map(|i| i as f64).product();
        return Ok(moment.powf(1.0 / p));
    }
    let ln_moment = 0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln();
    Ok((ln_moment / p).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowerBoundVariant {
    FixedGamma,
    OptimizedGamma,
}

/// One numerically checked inequality of a lower-bound chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ChainStep {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundWitness {
    pub gamma: f64,
    pub a: f64,
    pub m: u64,
    pub k: f64,
    pub j: u64,
    /// Exact selector moment at `(m, λ = a, k, p = m)`.
    pub exact_moment: f64,
    /// `C √(p/k)`, the part attributed to the square-function term.
    pub square_term: f64,
    /// `k (exact − C √(p/k))`: the smallest `f(p)` consistent with the exact moment.
    pub implied_f: f64,
    pub steps: Vec<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundF {
    pub variant: LowerBoundVariant,
    pub p: f64,
    pub c_const: f64,
    pub lower: f64,
    pub witness: LowerBoundWitness,
}

impl LowerBoundF {
    pub fn chain_holds(&self) -> bool {
        self.witness.steps.iter().all(|s| s.holds)
    }
}

/// Lower bound on the coefficient `f(p)` of the `p`-term in a selector
/// moment inequality `‖(1/k)Σδ_i − 1‖_p ≤ C√(p/k) + f(p)/k`, obtained by
/// testing it on a single selector sum with `m = p` terms and a tiny rate.
pub fn lower_bound_f(p: f64, c_const: f64, variant: LowerBoundVariant) -> Result<LowerBoundF> {
    if !(p >= 1.0) || !p.is_finite() || !(c_const > 0.0) {
        return Err(Error::Parameter(format!("need finite p >= 1 and C > 0 (p = {p}, C = {c_const})")));
    }
    let m = p.round() as u64;
    let (gamma, a, lower) = match variant {
        LowerBoundVariant::FixedGamma => {
            let a = (7.0f64 / 8.0).powi(3) / (32.0 * c_const).powi(4);
            if a > 0.125 {
                return Err(Error::Precondition(format!("rate a = {a} must be <= 1/8")));
            }
            if a <= 2f64.powf(-p) {
                return Err(Error::Precondition(format!("rate a = {a:e} must exceed 2^-p = {:e}", 2f64.powf(-p))));
            }
            let lower = a.powf(0.25) * (7.0f64 / 8.0).powf(0.75) / 32.0 * p;
            (0.25, a, lower)
        }
        LowerBoundVariant::OptimizedGamma => {
            if c_const < 1.5 {
                return Err(Error::Precondition(format!("optimized variant requires C >= 1.5, got {c_const}")));
            }
            let gamma = 1.0 / (2.0 * (8.0 * std::f64::consts::E.powi(2) * c_const).ln());
            let base = gamma / (8.0 * std::f64::consts::E * c_const);
            let a = base.powf(2.0 / (1.0 - 2.0 * gamma));
            let lower = base.powf(1.0 / (1.0 - 2.0 * gamma)) * c_const * p;
            (gamma, a, lower)
        }
    };
    let k = a * m as f64;
    let j = (gamma * m as f64).ceil() as u64;
    let exact_moment = selector_moment_exact(m, a, k, m as f64)?;
    let square_term = c_const * (p / k).sqrt();
    let implied_f = k * (exact_moment - square_term);

    let mf = m as f64;
    let binom_root = (ln_binomial(m, j) / mf).exp();
    let dev = (j as f64 / k - 1.0).abs();
    // single binomial term of the p-th moment with p = m
    let single_term = dev * binom_root * a.powf(j as f64 / mf) * (1.0 - a).powf(1.0 - j as f64 / mf);
    let mut steps = Vec::new();
    match variant {
        LowerBoundVariant::FixedGamma => {
            let low = a.powf(gamma - 1.0) * (1.0 - a).powf(1.0 - gamma);
            let mid = 0.125 * a.powf(gamma - 1.0 + 1.0 / mf) * (1.0 - a).powf(1.0 - gamma);
            steps.push(ChainStep::le("2 <= 1/(4a) <= gamma/a <= j/k", 2.0, (1.0 / (4.0 * a)).min(gamma / a).min(j as f64 / k)));
            steps.push(ChainStep::le("1/(8a) <= |j/k - 1|", 1.0 / (8.0 * a), dev));
            steps.push(ChainStep::le("1 <= binom(m,j)^(1/m)", 1.0, binom_root));
            steps.push(ChainStep::le("binom(m,j)^(1/m) <= 2", binom_root, 2.0));
            steps.push(ChainStep::le("single term <= exact moment", single_term, exact_moment));
            steps.push(ChainStep::le("(1/8) a^(gamma-1+1/m) (1-a)^(1-gamma) <= single term", mid, single_term));
            steps.push(ChainStep::le("(1/16) a^(gamma-1) (1-a)^(1-gamma) <= (1/8) a^(gamma-1+1/m) (1-a)^(1-gamma)", low / 16.0, mid));
            steps.push(ChainStep::le("32 C a^(1/4) <= (1-a)^(3/4)", 32.0 * c_const * a.powf(0.25), (1.0 - a).powf(0.75)));
            steps.push(ChainStep::le(
                "2 C a^(-1/2) <= (1/16) ((1-a)/a)^(3/4)",
                2.0 * c_const / a.sqrt(),
                ((1.0 - a) / a).powf(0.75) / 16.0,
            ));
            steps.push(ChainStep::le("C sqrt(p/k) < exact moment", square_term, exact_moment));
            steps.push(ChainStep::le("lower <= implied f(p)", lower, implied_f));
            let c0 = (7.0f64 / 8.0).powf(1.5) / 1024.0;
            steps.push(ChainStep::le("c0 p / C <= lower", c0 * p / c_const, lower * (1.0 + 1e-12)));
        }
        LowerBoundVariant::OptimizedGamma => {
            let e = std::f64::consts::E;
            let explicit = p / (32.0 * 2f64.sqrt() * e.powf(1.5 + 2.0 / e) * (8.0 * e * e * c_const).ln());
            steps.push(ChainStep::le("gamma <= 1/4", gamma, 0.25));
            steps.push(ChainStep::le("a <= gamma/2", a, gamma / 2.0));
            steps.push(ChainStep::le("single term <= exact moment", single_term, exact_moment));
            steps.push(ChainStep::le("C sqrt(p/k) < exact moment", square_term, exact_moment));
            steps.push(ChainStep::le("explicit closed form <= lower", explicit, lower));
        }
    }
    Ok(LowerBoundF {
        variant,
        p,
        c_const,
        lower,
        witness: LowerBoundWitness { gamma, a, m, k, j, exact_moment, square_term, implied_f, steps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_rademacher(n: usize) -> EnsembleSpec {
        EnsembleSpec::rademacher(vec![HermitianMatrix::identity(1); n]).unwrap()
    }

    #[test]
    fn profiles() {
        let p = profile_of(&EnsembleSpec::rademacher(vec![HermitianMatrix::identity(3); 5]).unwrap()).unwrap();
        assert_eq!((p.variance, p.bound, p.terms), (5.0, 1.0, 5));
        let s = EnsembleSpec::selector_diagonal(vec![HermitianMatrix::identity(2); 8], 0.5).unwrap();
        let p = profile_of(&s).unwrap();
        assert_eq!((p.variance, p.bound), (2.0, 0.5));
        let u = EnsembleSpec::bounded_uniform(vec![HermitianMatrix::diagonal(&[2.0, 0.0]).unwrap(); 3]).unwrap();
        let p = profile_of(&u).unwrap();
        assert!((p.variance - 4.0).abs() < 1e-14);
        assert!((p.bound - 2.0).abs() < 1e-14);
        let f = EnsembleSpec::fourier_selector(16, &[0, 1], 0.25).unwrap();
        let p = profile_of(&f).unwrap();
        assert!((p.variance - 16.0 * 0.1875 * 4.0).abs() < 1e-10);
        assert!((p.bound - 0.75 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn names() {
        let s = EnsembleSpec::from_name("rademacher-d1-n10").unwrap();
        assert_eq!((s.kind(), s.dim(), s.n_terms()), (EnsembleKind::RademacherFixed, 1, 10));
        let s = EnsembleSpec::from_name("fourier-d4-n8").unwrap();
        assert_eq!(s.fourier_support(), Some((8, &[0usize, 1, 2, 3][..])));
        assert!(EnsembleSpec::from_name("gauss-d1-n2").is_err());
        assert!(EnsembleSpec::from_name("rademacher-d1").is_err());
        assert!(EnsembleSpec::from_name("fourier-d9-n8").is_err());
    }

    #[test]
    fn builtin_coefficients_have_unit_norm() {
        for kind in EnsembleKind::ALL {
            let s = EnsembleSpec::builtin(kind, 4, 8).unwrap();
            for a in s.coefficients() {
                let expect = if kind == EnsembleKind::FourierSelector { 4.0 } else { 1.0 };
                assert!((a.op_norm() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let s = EnsembleSpec::builtin(EnsembleKind::SelectorDiagonal, 2, 3).unwrap();
        let cfg = s.to_config();
        let back = cfg.build().unwrap();
        assert_eq!(profile_of(&back).unwrap(), profile_of(&s).unwrap());
        let json = r#"{"kind": "fourier-selector", "n": 16, "support": [0, 1], "lambda": 0.25}"#;
        let cfg: EnsembleConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.build().unwrap().dim(), 2);
        assert!(serde_json::from_str::<EnsembleConfig>(r#"{"kind": "rademacher-fixed", "bogus": 1}"#).is_err());
    }

    #[test]
    fn sample_sum_examples() {
        let s = EnsembleSpec::selector_diagonal(vec![HermitianMatrix::identity(2); 5], 1.0).unwrap();
        let mut rng = rng::stream(1);
        assert_eq!(sample_sum(&s, &mut rng), HermitianMatrix::zeros(2));

        let a = HermitianMatrix::diagonal(&[1.0, -1.0]).unwrap();
        let s = EnsembleSpec::rademacher(vec![a.clone()]).unwrap();
        let mut plus = 0;
        for i in 0..2000 {
            let x = sample_sum(&s, &mut rng::trial_stream(2, i));
            if x == a {
                plus += 1;
            } else {
                assert_eq!(x, a.scale(-1.0));
            }
        }
        assert!((plus as f64 / 2000.0 - 0.5).abs() < 0.05);

        for kind in EnsembleKind::ALL {
            let s = EnsembleSpec::builtin(kind, 4, 8).unwrap();
            for i in 0..50 {
                let x = sample_sum(&s, &mut rng::trial_stream(3, i));
                assert!(x.op_norm() <= s.total_bound() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn coefficients_are_centered() {
        for kind in EnsembleKind::ALL {
            let s = EnsembleSpec::builtin(kind, 2, 3).unwrap();
            let draws: Vec<Vec<f64>> = (0..10_000).map(|i| s.sample_coefficients(&mut rng::trial_stream(4, i))).collect();
            for j in 0..3 {
                let xs: Vec<f64> = draws.iter().map(|d| d[j]).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
                assert!(mean.abs() <= 5.0 * sd / 100.0, "{kind:?} term {j}: mean {mean}");
            }
        }
    }

    #[test]
    fn tail_extremes_and_scalar_case() {
        let s = EnsembleSpec::builtin(EnsembleKind::BoundedUniform, 3, 4).unwrap();
        let far = s.total_bound() + 1.0;
        assert_eq!(estimate_tail(&s, -far, 200, 1, 0.999).unwrap().mean, 1.0);
        assert_eq!(estimate_tail(&s, far, 200, 1, 0.999).unwrap().mean, 0.0);

        // P(all four signs +) = 1/16
        let est = estimate_tail(&scalar_rademacher(4), 4.0, 20_000, 9, 0.999).unwrap();
        assert!(est.ci_low <= 1.0 / 16.0 && 1.0 / 16.0 <= est.ci_high);
        let hw = hoeffding_half_width(20_000, 0.999);
        assert!((est.ci_high - est.ci_low - 2.0 * hw).abs() < 1e-15);
        assert!(estimate_tail(&s, 0.0, 99, 1, 0.999).is_err());
    }

    #[test]
    fn pnorm_examples() {
        let s = EnsembleSpec::selector_diagonal(vec![HermitianMatrix::identity(1); 4], 1.0).unwrap();
        assert_eq!(estimate_pnorm(&s, 3.0, 100, 1).unwrap().value, 0.0);
        for p in [1.0, 2.5, 7.0] {
            assert_eq!(estimate_pnorm(&scalar_rademacher(1), p, 100, 1).unwrap().value, 1.0);
        }
        let est = estimate_pnorm(&scalar_rademacher(2), 2.0, 20_000, 3).unwrap();
        assert!((est.value - 2f64.sqrt()).abs() <= 3.0 * est.stderr, "{est:?}");
        assert!(estimate_pnorm(&scalar_rademacher(2), 0.5, 100, 1).is_err());
    }

    #[test]
    fn reproducible() {
        let s = EnsembleSpec::builtin(EnsembleKind::RademacherFixed, 4, 8).unwrap();
        let a = estimate_tail(&s, 1.0, 500, 42, 0.999).unwrap();
        let b = estimate_tail(&s, 1.0, 500, 42, 0.999).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let a = estimate_pnorm(&s, 4.0, 500, 42).unwrap();
        let b = estimate_pnorm(&s, 4.0, 500, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn dominance_examples() {
        let s = EnsembleSpec::selector_diagonal(vec![HermitianMatrix::identity(2); 6], 1.0).unwrap();
        let rep = verify_dominance(&s, &[0.5, 1.0], 200, 1, 0.999).unwrap();
        assert!(rep.pass);
        assert!(rep.records.iter().all(|r| r.empirical.mean == 0.0));

        let s = scalar_rademacher(10);
        let rep = verify_dominance(&s, &[10.0], 10_000, 7, 0.999).unwrap();
        assert!(rep.pass);
        let b = rep.records[0].bounds.bennett;
        assert!(2f64.powi(-10) <= b);

        let s = EnsembleSpec::fourier_selector(16, &[0, 1], 0.25).unwrap();
        let grid = default_t_grid(&s, 8).unwrap();
        let rep = verify_dominance(&s, &grid, 10_000, 11, 0.999).unwrap();
        rep.ensure().unwrap();
    }

    #[test]
    fn dominance_failure_lists_violations() {
        let report = DominanceReport {
            profile: MomentProfile::new(1.0, 1.0, 1).unwrap(),
            records: vec![DominanceRecord {
                t: 2.0,
                empirical: TailEstimate { t: 2.0, mean: 1.0, ci_low: 0.9, ci_high: 1.0, trials: 100, seed: 0 },
                bounds: BoundValues { bennett: 0.1, bernstein: 0.95, prohorov: 0.2 },
                pass: false,
                violations: vec![TailBound::Bennett, TailBound::Prohorov],
            }],
            pass: false,
        };
        let msg = report.ensure().unwrap_err().to_string();
        assert!(msg.contains("(t = 2, bennett)") && msg.contains("(t = 2, prohorov)"));
    }

    #[test]
    fn selector_moment_examples() {
        // enumeration oracle for Binomial(4, 1/2)
        let probs = [1.0, 4.0, 6.0, 4.0, 1.0].map(|c| c / 16.0);
        let brute: f64 = probs.iter().enumerate().map(|(j, q)| q * (j as f64 / 2.0 - 1.0).powi(2)).sum();
        assert!((brute - 0.25).abs() < 1e-15);
        assert!((selector_moment_exact(4, 0.5, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(selector_moment_exact(6, 1.0, 6.0, 3.0).unwrap(), 0.0);
        assert!((selector_moment_exact(2, 0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(selector_moment_exact(2, 0.0, 1.0, 1.0).is_err());
        assert!(selector_moment_exact(2, 1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_pnorm_exact(2.0).unwrap(), 1.0);
        assert!((gaussian_pnorm_exact(4.0).unwrap() - 3f64.powf(0.25)).abs() < 1e-12);
        assert!((gaussian_pnorm_exact(4.0).unwrap() - 1.316_074).abs() < 1e-6);
        let big = gaussian_pnorm_exact(200.0).unwrap();
        assert!((big / (200.0 / std::f64::consts::E).sqrt() - 1.0).abs() < 0.02);
        // log-Gamma path agrees with the double factorial path nearby
        let near = gaussian_pnorm_exact(4.0 + 1e-9).unwrap();
        assert!((near - gaussian_pnorm_exact(4.0).unwrap()).abs() < 1e-8);
        assert!(gaussian_pnorm_exact(0.5).is_err());
    }

    #[test]
    fn lower_bound_fixed_gamma() {
        let r = lower_bound_f(64.0, 1.0, LowerBoundVariant::FixedGamma).unwrap();
        let expect = (7.0f64 / 8.0).powf(1.5) / 1024.0 * 64.0;
        assert!((r.lower - expect).abs() < 1e-15);
        assert!(r.chain_holds(), "{:#?}", r.witness.steps);
        let r2 = lower_bound_f(128.0, 1.0, LowerBoundVariant::FixedGamma).unwrap();
        assert!((r2.lower - 2.0 * r.lower).abs() < 1e-15);
        // a = (7/8)^3 / 32^4 is below 2^-16
        assert!(matches!(lower_bound_f(16.0, 1.0, LowerBoundVariant::FixedGamma), Err(Error::Precondition(_))));
    }

    #[test]
    fn lower_bound_optimized_gamma() {
        let r = lower_bound_f(64.0, 1.5, LowerBoundVariant::OptimizedGamma).unwrap();
        let e = std::f64::consts::E;
        let gamma = 1.0 / (2.0 * (8.0 * e * e * 1.5f64).ln());
        let expect = (gamma / (8.0 * e * 1.5)).powf(1.0 / (1.0 - 2.0 * gamma)) * 1.5 * 64.0;
        assert!((r.lower - expect).abs() < 1e-15);
        assert!(r.lower > 0.0);
        assert!(r.chain_holds(), "{:#?}", r.witness.steps);
        assert!(lower_bound_f(64.0, 1.0, LowerBoundVariant::OptimizedGamma).is_err());
    }
}

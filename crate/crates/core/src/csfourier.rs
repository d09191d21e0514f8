//! Partial-Fourier compressed sensing: DFT rows, Bernoulli row selectors,
//! the deviation of the restricted Gram matrix from the identity, restricted
//! isometry constants, and ℓ1 recovery by basis pursuit.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{hoeffding_half_width, TailEstimate};
use crate::error::{Error, Result};
use crate::rng::{self, RandomStream};
use crate::spectral::HermitianMatrix;

/// Rows `y_ω[t] = n^{-1/2} e^{−2πiωt/n}` of the unitary DFT matrix.
#[derive(Debug, Clone)]
pub struct DftSystem {
    n: usize,
    rows: Vec<Vec<Complex64>>,
}

impl DftSystem {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("DFT size must be >= 1".into()));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let rows = (0..n)
            .map(|w| {
                (0..n)
                    .map(|t| {
                        // reduce ωt mod n before forming the angle
                        let phase = -2.0 * PI * ((w * t) % n) as f64 / n as f64;
                        Complex64::from_polar(scale, phase)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, w: usize) -> &[Complex64] {
        &self.rows[w]
    }

    fn check_support(&self, support: &[usize]) -> Result<()> {
        if support.is_empty() {
            return Err(Error::Parameter("support must be non-empty".into()));
        }
        if let Some(&bad) = support.iter().find(|&&t| t >= self.n) {
            return Err(Error::Parameter(format!("support index {bad} outside 0..{}", self.n)));
        }
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("support has repeated indices".into()));
        }
        Ok(())
    }

    /// `n · y_j^T ⊗ y_j^T` on `C^T`, entries `n conj(y_j[t]) y_j[t']`.
    pub fn scaled_row_projector(&self, j: usize, support: &[usize]) -> Result<HermitianMatrix> {
        self.check_support(support)?;
        let y = &self.rows[j];
        let s = support.len();
        let nf = self.n as f64;
        let m = DMatrix::from_fn(s, s, |a, b| y[support[a]].conj() * y[support[b]] * nf);
        Ok(HermitianMatrix::from_hermitian_unchecked(m))
    }

    /// `Σ_ω y_ω ⊗ y_ω`, which is the identity for a unitary system.
    pub fn resolution_of_identity(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        for y in &self.rows {
            for a in 0..n {
                for b in 0..n {
                    out[(a, b)] += y[a].conj() * y[b];
                }
            }
        }
        out
    }

    /// Full Gram matrix `Φ*Φ = Σ_{i∈Ω} conj(y_i) y_iᵀ` on all of `C^n`.
    pub fn gram(&self, draw: &SelectorDraw) -> DMatrix<Complex64> {
        // circulant: entry (t, t') depends only on t' − t mod n
        let n = self.n;
        let first: Vec<Complex64> = (0..n)
            .map(|d| draw.omega.iter().map(|&i| self.rows[i][0].conj() * self.rows[i][d]).sum())
            .collect();
        DMatrix::from_fn(n, n, |a, b| first[(b + n - a) % n])
    }
}

/// The random row set `Ω = {i : δ_i = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorDraw {
    pub n: usize,
    pub k_expected: f64,
    pub omega: Vec<usize>,
}

impl SelectorDraw {
    /// A fixed row set (sorted and deduplicated).
    pub fn from_rows(n: usize, k_expected: f64, rows: &[usize]) -> Result<Self> {
        let mut omega = rows.to_vec();
        omega.sort_unstable();
        omega.dedup();
        if omega.iter().any(|&i| i >= n) {
            return Err(Error::Parameter(format!("row index outside 0..{n}")));
        }
        Ok(Self { n, k_expected, omega })
    }

    pub fn all(n: usize) -> Self {
        Self { n, k_expected: n as f64, omega: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Includes each of the `n` rows independently with probability `k/n`.
pub fn draw_selectors(n: usize, k: f64, stream: &mut RandomStream) -> Result<SelectorDraw> {
    if !(k > 0.0) || k > n as f64 {
        return Err(Error::Parameter(format!("expected count k must lie in (0, n], got {k} for n = {n}")));
    }
    let rate = k / n as f64;
    let omega = (0..n).filter(|_| stream.random::<f64>() < rate).collect();
    Ok(SelectorDraw { n, k_expected: k, omega })
}

/// `G_T = Φ_T* Φ_T` with entries `Σ_{i∈Ω} conj(y_i[t]) y_i[t']`, `t, t' ∈ T`.
pub fn gram_on_support(dft: &DftSystem, draw: &SelectorDraw, support: &[usize]) -> Result<HermitianMatrix> {
    dft.check_support(support)?;
    let s = support.len();
    let mut g = DMatrix::zeros(s, s);
    for &i in &draw.omega {
        let y = dft.row(i);
        for a in 0..s {
            for b in 0..s {
                g[(a, b)] += y[support[a]].conj() * y[support[b]];
            }
        }
    }
    Ok(HermitianMatrix::from_hermitian_unchecked(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Scale by `n/k` with `k` the expected row count.
    ExpectedK,
    /// Scale by `n/|Ω|`.
    RealizedK,
}

fn deviation_from_gram(g: &HermitianMatrix, scale: f64) -> f64 {
    g.eigenvalues().iter().fold(0.0f64, |m, &l| m.max((scale * l - 1.0).abs()))
}

fn normalization_scale(draw: &SelectorDraw, normalization: Normalization) -> Result<f64> {
    let kappa = match normalization {
        Normalization::ExpectedK => draw.k_expected,
        Normalization::RealizedK => {
            if draw.is_empty() {
                return Err(Error::Degenerate("realized-k normalization with empty row set".into()));
            }
            draw.len() as f64
        }
    };
    Ok(draw.n as f64 / kappa)
}

/// Operator norm of `(n/κ) G_T − I_T`.
pub fn deviation_norm(dft: &DftSystem, draw: &SelectorDraw, support: &[usize], normalization: Normalization) -> Result<f64> {
    let scale = normalization_scale(draw, normalization)?;
    Ok(deviation_from_gram(&gram_on_support(dft, draw, support)?, scale))
}

/// Empirical probability that the deviation reaches `t_eps` for a fixed support,
/// next to the matching exponential bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvertibilityTail {
    pub t_eps: f64,
    pub empirical: TailEstimate,
    /// `ε = √(s/k)`.
    pub eps: f64,
    /// `t = t_eps / ε`.
    pub t: f64,
    /// `s e^{−t²/(2C²e)}`.
    pub bound: f64,
    /// Whether `tε ≤ C`, the range in which the bound is claimed.
    pub in_range: bool,
}

/// Deviation norms (expected-k normalization) of `trials` independent row draws.
pub fn sample_deviations(dft: &DftSystem, k: f64, support: &[usize], trials: usize, seed: u64) -> Result<Vec<f64>> {
    dft.check_support(support)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let draw = draw_selectors(dft.n(), k, &mut rng::trial_stream(seed, i))?;
            deviation_norm(dft, &draw, support, Normalization::ExpectedK)
        })
        .collect()
}

/// Tail curve of the deviation norm over a grid of levels, all levels sharing draws.
#[allow(clippy::too_many_arguments)]
pub fn invertibility_tail_curve(
    n: usize,
    k: f64,
    s: usize,
    support: &[usize],
    t_eps_grid: &[f64],
    trials: usize,
    seed: u64,
    c_const: f64,
    confidence: f64,
) -> Result<Vec<InvertibilityTail>> {
    if support.len() != s {
        return Err(Error::Parameter(format!("support has {} indices but s = {s}", support.len())));
    }
    if trials == 0 || !(c_const > 0.0) {
        return Err(Error::Parameter("need trials >= 1 and C > 0".into()));
    }
    let dft = DftSystem::new(n)?;
    let devs = sample_deviations(&dft, k, support, trials, seed)?;
    let eps = (s as f64 / k).sqrt();
    let hw = hoeffding_half_width(trials, confidence);
    Ok(t_eps_grid
        .iter()
        .map(|&t_eps| {
            let hits = devs.iter().filter(|&&d| d >= t_eps).count();
            let mean = hits as f64 / trials as f64;
            let t = t_eps / eps;
            InvertibilityTail {
                t_eps,
                empirical: TailEstimate { t: t_eps, mean, ci_low: mean - hw, ci_high: mean + hw, trials, seed },
                eps,
                t,
                bound: s as f64 * (-t * t / (2.0 * c_const * c_const * E)).exp(),
                in_range: t_eps <= c_const,
            }
        })
        .collect())
}

/// Single-level version of [`invertibility_tail_curve`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_invertibility_tail(
    n: usize,
    k: f64,
    s: usize,
    support: &[usize],
    t_eps: f64,
    trials: usize,
    seed: u64,
    c_const: f64,
) -> Result<InvertibilityTail> {
    Ok(invertibility_tail_curve(n, k, s, support, &[t_eps], trials, seed, c_const, 0.999)?[0])
}

/// Restricted isometry data for sparsity `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipResult {
    pub s: usize,
    pub delta: f64,
    pub alpha_star: f64,
    pub lam_max: f64,
    pub lam_min: f64,
    pub supports_examined: u64,
    pub exact: bool,
}

impl RipResult {
    fn from_extremes(s: usize, lam_max: f64, lam_min: f64, supports_examined: u64, exact: bool) -> Result<Self> {
        if !(lam_max > 0.0) {
            return Err(Error::Degenerate("Gram matrices vanish (empty row set)".into()));
        }
        let lam_min = lam_min.max(0.0);
        // sup_T ‖αG_T − I‖ = max(αλ̄ − 1, 1 − αλ̲), minimized where both agree
        let sum = lam_max + lam_min;
        Ok(Self {
            s,
            delta: (lam_max - lam_min) / sum,
            alpha_star: 2.0 / sum,
            lam_max,
            lam_min,
            supports_examined,
            exact,
        })
    }
}

/// Number of `s`-subsets of an `n`-set, saturating at `u64::MAX`.
pub fn binomial(n: usize, s: usize) -> u64 {
    if s > n {
        return 0;
    }
    let s = s.min(n - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Maximum number of supports [`rip_constant_exact`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

fn principal_submatrix(g: &DMatrix<Complex64>, support: &[usize]) -> HermitianMatrix {
    let s = support.len();
    HermitianMatrix::from_hermitian_unchecked(DMatrix::from_fn(s, s, |a, b| g[(support[a], support[b])]))
}

fn extremes(g: &DMatrix<Complex64>, support: &[usize]) -> (f64, f64) {
    let ev = principal_submatrix(g, support).eigenvalues();
    (ev[ev.len() - 1], ev[0])
}

/// Calls `f` on every `s`-subset of `lo..n` prefixed by `prefix`, in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(prefix: &mut Vec<usize>, lo: usize, n: usize, s: usize, f: &mut F) {
    if prefix.len() == s {
        f(prefix);
        return;
    }
    let need = s - prefix.len();
    for i in lo..=n - need {
        prefix.push(i);
        for_each_combination(prefix, i + 1, n, s, f);
        prefix.pop();
    }
}

/// `Δ_s = inf_{α>0} sup_{|T|≤s} ‖α G_T − I‖` by enumerating every support.
///
/// Only supports of size exactly `s` are visited: every smaller support's
/// Gram is a principal submatrix of a size-`s` one, and by Cauchy interlacing
/// its extreme eigenvalues lie inside those of the larger matrix.
pub fn rip_constant_exact(dft: &DftSystem, draw: &SelectorDraw, s: usize) -> Result<RipResult> {
    let n = dft.n();
    if s == 0 || s > n {
        return Err(Error::Parameter(format!("sparsity must lie in 1..={n}, got {s}")));
    }
    let count = binomial(n, s);
    if count > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!(
            "C({n}, {s}) = {count} supports exceeds {ENUMERATION_BUDGET}; use the sampled estimate"
        )));
    }
    let g = dft.gram(draw);
    let (lam_max, lam_min) = (0..=n - s)
        .into_par_iter()
        .map(|first| {
            let mut acc = (f64::NEG_INFINITY, f64::INFINITY);
            let mut prefix = vec![first];
            for_each_combination(&mut prefix, first + 1, n, s, &mut |t| {
                let (hi, lo) = extremes(&g, t);
                acc = (acc.0.max(hi), acc.1.min(lo));
            });
            acc
        })
        .reduce(|| (f64::NEG_INFINITY, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    RipResult::from_extremes(s, lam_max, lam_min, count, true)
}

/// Lower estimate of `Δ_s` from `num_supports` uniformly random supports.
///
/// Supports are drawn sequentially from `stream`, so a larger sample with the
/// same stream contains the smaller one.
pub fn rip_constant_sampled(
    dft: &DftSystem,
    draw: &SelectorDraw,
    s: usize,
    num_supports: usize,
    stream: &mut RandomStream,
) -> Result<RipResult> {
    let n = dft.n();
    if s == 0 || s > n {
        return Err(Error::Parameter(format!("sparsity must lie in 1..={n}, got {s}")));
    }
    if num_supports == 0 {
        return Err(Error::Parameter("need at least one support".into()));
    }
    let g = dft.gram(draw);
    if num_supports as u64 >= binomial(n, s) {
        let exact = rip_constant_exact(dft, draw, s)?;
        return Ok(RipResult { exact: false, ..exact });
    }
    let (mut lam_max, mut lam_min) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..num_supports {
        let mut t = index::sample(stream, n, s).into_vec();
        t.sort_unstable();
        let (hi, lo) = extremes(&g, &t);
        lam_max = lam_max.max(hi);
        lam_min = lam_min.min(lo);
    }
    RipResult::from_extremes(s, lam_max, lam_min, num_supports as u64, false)
}

/// `sup_{|T|=s} ‖α G_T − I‖` at a given `α`, by enumeration.
pub fn rip_distortion_at(dft: &DftSystem, draw: &SelectorDraw, s: usize, alpha: f64) -> Result<f64> {
    let n = dft.n();
    if binomial(n, s) > ENUMERATION_BUDGET {
        return Err(Error::Budget("too many supports".into()));
    }
    let g = dft.gram(draw);
    let mut worst = 0.0f64;
    for_each_combination(&mut Vec::new(), 0, n, s, &mut |t| {
        let (hi, lo) = extremes(&g, t);
        worst = worst.max((alpha * hi - 1.0).abs()).max((alpha * lo - 1.0).abs());
    });
    Ok(worst)
}

/// Splitting-method parameters for basis pursuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisPursuitParams {
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
}

impl Default for BasisPursuitParams {
    fn default() -> Self {
        Self { rho: 1.0, max_iter: 50_000, tol_primal: 1e-9, tol_dual: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPursuitOutput {
    pub f: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Basis pursuit on a fixed row set: the selected DFT rows `Φ` and the
/// pseudoinverse `Φ⁺ = Φ*(ΦΦ*)⁻¹` are built once and shared by every solve.
#[derive(Debug, Clone)]
pub struct BasisPursuitSolver {
    phi: DMatrix<Complex64>,
    pinv: DMatrix<Complex64>,
}

fn soft_threshold(v: Complex64, thresh: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= thresh {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((mag - thresh) / mag)
    }
}

impl BasisPursuitSolver {
    pub fn new(dft: &DftSystem, draw: &SelectorDraw) -> Result<Self> {
        if draw.is_empty() {
            return Err(Error::Degenerate("basis pursuit needs a non-empty row set".into()));
        }
        if draw.n != dft.n() {
            return Err(Error::DimensionMismatch { expected: dft.n(), got: draw.n });
        }
        let n = dft.n();
        let phi = DMatrix::from_fn(draw.len(), n, |r, c| dft.row(draw.omega[r])[c]);
        let outer = &phi * phi.adjoint();
        let inv = outer
            .cholesky()
            .ok_or_else(|| Error::Degenerate("selected rows are linearly dependent".into()))?
            .inverse();
        let pinv = phi.adjoint() * inv;
        Ok(Self { phi, pinv })
    }

    pub fn measure(&self, f: &[Complex64]) -> Vec<Complex64> {
        (&self.phi * DVector::from_column_slice(f)).iter().copied().collect()
    }

    fn project(&self, v: &DVector<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
        v - &self.pinv * (&self.phi * v - b)
    }

    /// Solves `min ‖f‖₁ subject to Φf = b` by alternating an affine projection
    /// with complex soft-thresholding. The returned vector is the projection
    /// of the final sparse iterate onto the constraint set.
    pub fn solve(&self, b: &[Complex64], params: &BasisPursuitParams) -> Result<BasisPursuitOutput> {
        if b.len() != self.phi.nrows() {
            return Err(Error::DimensionMismatch { expected: self.phi.nrows(), got: b.len() });
        }
        if !(params.rho > 0.0) || params.max_iter == 0 {
            return Err(Error::Parameter("need rho > 0 and max_iter >= 1".into()));
        }
        let n = self.phi.ncols();
        let b = DVector::from_column_slice(b);
        let thresh = 1.0 / params.rho;
        let mut z = self.project(&DVector::zeros(n), &b);
        let mut u = DVector::<Complex64>::zeros(n);
        let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < params.max_iter {
            iterations += 1;
            let x = self.project(&(&z - &u), &b);
            let z_old = z;
            z = (&x + &u).map(|v| soft_threshold(v, thresh));
            u += &x - &z;
            r_norm = (&x - &z).norm();
            s_norm = params.rho * (&z - &z_old).norm();
            let scale_p = 1.0 + x.norm().max(z.norm());
            let scale_d = 1.0 + params.rho * u.norm();
            if r_norm <= params.tol_primal * scale_p && s_norm <= params.tol_dual * scale_d {
                converged = true;
                break;
            }
        }
        let f = self.project(&z, &b);
        Ok(BasisPursuitOutput {
            f: f.iter().copied().collect(),
            iterations,
            converged,
            primal_residual: r_norm,
            dual_residual: s_norm,
        })
    }
}

/// One-shot basis pursuit.
pub fn basis_pursuit(
    dft: &DftSystem,
    draw: &SelectorDraw,
    b: &[Complex64],
    params: &BasisPursuitParams,
) -> Result<BasisPursuitOutput> {
    BasisPursuitSolver::new(dft, draw)?.solve(b, params)
}

/// Relative error at or below which a recovery counts as exact.
pub const EXACT_RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub f_true: Vec<Complex64>,
    pub f_hat: Vec<Complex64>,
    pub residual: f64,
    pub rel_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub exact: bool,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Measures `f_true` on the solver's rows and runs basis pursuit.
pub fn recover(solver: &BasisPursuitSolver, f_true: Vec<Complex64>, params: &BasisPursuitParams) -> Result<RecoveryResult> {
    let b = solver.measure(&f_true);
    let out = solver.solve(&b, params)?;
    let measured = solver.measure(&out.f);
    let residual = l2(&measured.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let diff: Vec<Complex64> = out.f.iter().zip(&f_true).map(|(x, y)| x - y).collect();
    let rel_error = l2(&diff) / l2(&f_true);
    Ok(RecoveryResult {
        f_true,
        f_hat: out.f,
        residual,
        rel_error,
        iterations: out.iterations,
        converged: out.converged,
        exact: rel_error <= EXACT_RECOVERY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeLaw {
    /// Unit-modulus entries with uniform random phase.
    Unit,
    /// Standard complex Gaussian entries.
    ComplexGaussian,
}

/// A random `s`-sparse signal in `C^n` with uniformly chosen support.
pub fn random_sparse_signal(n: usize, s: usize, law: AmplitudeLaw, rng: &mut RandomStream) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    for t in index::sample(rng, n, s).into_vec() {
        f[t] = match law {
            AmplitudeLaw::Unit => Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()),
            AmplitudeLaw::ComplexGaussian => {
                let v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) / 2f64.sqrt();
                // a zero amplitude would lower the sparsity
                if v.norm() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    v
                }
            }
        };
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub n: usize,
    pub s: usize,
    pub k: f64,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub mean_rows: f64,
    pub mean_iterations: f64,
}

fn summarize(n: usize, s: usize, k: f64, outcomes: &[(bool, usize, usize)], confidence: f64) -> RecoverySummary {
    let trials = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.0).count();
    let fraction = successes as f64 / trials as f64;
    let hw = hoeffding_half_width(trials, confidence);
    let tf = trials as f64;
    RecoverySummary {
        n,
        s,
        k,
        trials,
        successes,
        fraction,
        ci_low: (fraction - hw).max(0.0),
        ci_high: (fraction + hw).min(1.0),
        confidence,
        mean_rows: outcomes.iter().map(|o| o.2 as f64).sum::<f64>() / tf,
        mean_iterations: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / tf,
    }
}

/// Success rate of basis pursuit on random `s`-sparse signals measured by
/// random Bernoulli row sets of expected size `k`. Trial `i` draws its
/// support, amplitudes and rows from stream `(seed, i)`; an empty row set
/// counts as a failure.
#[allow(clippy::too_many_arguments)]
pub fn recovery_experiment(
    n: usize,
    s: usize,
    k: f64,
    trials: usize,
    seed: u64,
    law: AmplitudeLaw,
    params: &BasisPursuitParams,
    confidence: f64,
) -> Result<RecoverySummary> {
    if s == 0 || s > n {
        return Err(Error::Parameter(format!("sparsity must lie in 1..={n}, got {s}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let dft = DftSystem::new(n)?;
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::trial_stream(seed, i);
            let f = random_sparse_signal(n, s, law, &mut rng);
            let draw = draw_selectors(n, k, &mut rng)?;
            if draw.is_empty() {
                return Ok((false, 0, 0));
            }
            let solver = BasisPursuitSolver::new(&dft, &draw)?;
            let r = recover(&solver, f, params)?;
            Ok((r.exact, r.iterations, draw.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(n, s, k, &outcomes, confidence))
}

/// Like [`recovery_experiment`] but with one fixed row set for every trial.
pub fn recovery_on_rows(
    dft: &DftSystem,
    draw: &SelectorDraw,
    s: usize,
    trials: usize,
    seed: u64,
    law: AmplitudeLaw,
    params: &BasisPursuitParams,
) -> Result<RecoverySummary> {
    let n = dft.n();
    if s == 0 || s > n || trials == 0 {
        return Err(Error::Parameter("need 1 <= s <= n and trials >= 1".into()));
    }
    let solver = BasisPursuitSolver::new(dft, draw)?;
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let f = random_sparse_signal(n, s, law, &mut rng::trial_stream(seed, i));
            let r = recover(&solver, f, params)?;
            Ok((r.exact, r.iterations, draw.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(n, s, draw.k_expected, &outcomes, 0.99))
}

/// Expected row count guaranteeing the restricted isometry property with
/// high probability, and the matching failure probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipSampleSize {
    /// `8C²e(M+1) s² log(n/s)`.
    pub k: f64,
    /// `s² e^s (n/s)^{−Ms}`.
    pub failure_probability: f64,
}

pub fn sample_size_for_rip(s: usize, n: usize, precision: f64, c_const: f64) -> Result<RipSampleSize> {
    if s == 0 || 2 * s > n {
        return Err(Error::Precondition(format!("requires 1 <= s <= n/2 (s = {s}, n = {n})")));
    }
    if !(precision >= 0.0) || !(c_const > 0.0) {
        return Err(Error::Parameter("precision M must be >= 0 and C > 0".into()));
    }
    let (sf, nf) = (s as f64, n as f64);
    let ratio = nf / sf;
    Ok(RipSampleSize {
        k: 8.0 * c_const * c_const * E * (precision + 1.0) * sf * sf * ratio.ln(),
        failure_probability: sf * sf * sf.exp() * ratio.powf(-precision * sf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn dft_examples() {
        let d = DftSystem::new(1).unwrap();
        assert_eq!(d.row(0), &[Complex64::new(1.0, 0.0)]);
        let d = DftSystem::new(4).unwrap();
        assert!(d.row(0).iter().all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-15));
        let d = DftSystem::new(8).unwrap();
        let id = DMatrix::<Complex64>::identity(8, 8);
        assert!(max_abs(&(d.resolution_of_identity() - id)) < 1e-12);
        assert!(DftSystem::new(0).is_err());
    }

    #[test]
    fn selector_draw_examples() {
        let mut rng = rng::stream(1);
        assert_eq!(draw_selectors(10, 10.0, &mut rng).unwrap().omega, (0..10).collect::<Vec<_>>());
        assert!(draw_selectors(10, 11.0, &mut rng).is_err());
        assert!(draw_selectors(10, 0.0, &mut rng).is_err());
        let mut total = 0usize;
        for i in 0..10_000 {
            total += draw_selectors(100, 25.0, &mut rng::trial_stream(2, i)).unwrap().len();
        }
        let mean = total as f64 / 1e4;
        let se = (100.0 * 0.25 * 0.75 / 1e4f64).sqrt();
        assert!((mean - 25.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn gram_examples() {
        let d = DftSystem::new(6).unwrap();
        let g = gram_on_support(&d, &SelectorDraw::all(6), &[1, 3, 4]).unwrap();
        assert!(max_abs(&(g.matrix() - DMatrix::identity(3, 3))) < 1e-14);
        let d2 = DftSystem::new(2).unwrap();
        let one = SelectorDraw::from_rows(2, 1.0, &[0]).unwrap();
        let g = gram_on_support(&d2, &one, &[0]).unwrap();
        assert!((g.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(gram_on_support(&d2, &one, &[2]).is_err());
        let draw = draw_selectors(12, 5.0, &mut rng::stream(3)).unwrap();
        let g = gram_on_support(&DftSystem::new(12).unwrap(), &draw, &[0, 2, 5, 7]).unwrap();
        assert!(g.eigenvalues()[0] >= -1e-12);
    }

    #[test]
    fn circulant_gram_matches_direct() {
        let d = DftSystem::new(10).unwrap();
        let draw = draw_selectors(10, 4.0, &mut rng::stream(9)).unwrap();
        let full = d.gram(&draw);
        let support: Vec<usize> = (0..10).collect();
        let direct = gram_on_support(&d, &draw, &support).unwrap();
        assert!(max_abs(&(full - direct.matrix())) < 1e-14);
    }

    #[test]
    fn deviation_examples() {
        let d = DftSystem::new(5).unwrap();
        let v = deviation_norm(&d, &SelectorDraw::all(5), &[0, 2], Normalization::ExpectedK).unwrap();
        assert!(v < 1e-14);
        let d2 = DftSystem::new(2).unwrap();
        let one = SelectorDraw::from_rows(2, 1.0, &[0]).unwrap();
        assert!(deviation_norm(&d2, &one, &[0], Normalization::ExpectedK).unwrap() < 1e-15);
        let v = deviation_norm(&d2, &one, &[0, 1], Normalization::ExpectedK).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let empty = SelectorDraw::from_rows(2, 1.0, &[]).unwrap();
        assert!(matches!(deviation_norm(&d2, &empty, &[0], Normalization::RealizedK), Err(Error::Degenerate(_))));
    }

    #[test]
    fn invertibility_tail_examples() {
        let r = estimate_invertibility_tail(16, 16.0, 2, &[0, 1], 0.1, 200, 1, 2.0).unwrap();
        assert_eq!(r.empirical.mean, 0.0);
        let grid: Vec<f64> = (1..=10).map(|i| 0.25 * i as f64).collect();
        let curve = invertibility_tail_curve(16, 8.0, 2, &[0, 1], &grid, 10_000, 5, 2.0, 0.999).unwrap();
        assert!(curve.windows(2).all(|w| w[1].empirical.mean <= w[0].empirical.mean));
        assert!(curve.iter().all(|c| (0.0..=1.0).contains(&c.empirical.mean)));
        assert!((curve[0].eps - 0.5).abs() < 1e-15);
        assert!(estimate_invertibility_tail(16, 8.0, 3, &[0, 1], 0.5, 100, 1, 2.0).is_err());
    }

    #[test]
    fn rip_exact_examples() {
        let d = DftSystem::new(8).unwrap();
        let r = rip_constant_exact(&d, &SelectorDraw::all(8), 3).unwrap();
        assert!(r.delta.abs() < 1e-14 && (r.alpha_star - 1.0).abs() < 1e-14);
        let d2 = DftSystem::new(2).unwrap();
        let one = SelectorDraw::from_rows(2, 1.0, &[0]).unwrap();
        let r = rip_constant_exact(&d2, &one, 1).unwrap();
        assert!((r.lam_max - 0.5).abs() < 1e-15 && (r.lam_min - 0.5).abs() < 1e-15);
        assert!(r.delta.abs() < 1e-15 && (r.alpha_star - 2.0).abs() < 1e-14);
        let r = rip_constant_exact(&d2, &one, 2).unwrap();
        assert!((r.lam_max - 1.0).abs() < 1e-14 && r.lam_min.abs() < 1e-14);
        assert!((r.delta - 1.0).abs() < 1e-14);
        let empty = SelectorDraw::from_rows(2, 1.0, &[]).unwrap();
        assert!(matches!(rip_constant_exact(&d2, &empty, 1), Err(Error::Degenerate(_))));
        let big = DftSystem::new(64).unwrap();
        assert!(matches!(rip_constant_exact(&big, &SelectorDraw::all(64), 6), Err(Error::Budget(_))));
    }

    #[test]
    fn rip_formula_is_self_consistent() {
        let d = DftSystem::new(12).unwrap();
        for seed in 0..5 {
            let draw = draw_selectors(12, 6.0, &mut rng::stream(seed)).unwrap();
            let r = rip_constant_exact(&d, &draw, 3).unwrap();
            if r.lam_min > 0.0 {
                let at = rip_distortion_at(&d, &draw, 3, r.alpha_star).unwrap();
                assert!((at - r.delta).abs() < 1e-10);
                // moving α off the optimum can only increase the distortion
                assert!(rip_distortion_at(&d, &draw, 3, r.alpha_star * 1.01).unwrap() >= r.delta - 1e-12);
                assert!(rip_distortion_at(&d, &draw, 3, r.alpha_star * 0.99).unwrap() >= r.delta - 1e-12);
            }
        }
    }

    #[test]
    fn interlacing_justifies_fixed_size_enumeration() {
        let d = DftSystem::new(9).unwrap();
        let draw = draw_selectors(9, 4.0, &mut rng::stream(4)).unwrap();
        let r3 = rip_constant_exact(&d, &draw, 3).unwrap();
        let r2 = rip_constant_exact(&d, &draw, 2).unwrap();
        assert!(r2.lam_max <= r3.lam_max + 1e-14 && r2.lam_min >= r3.lam_min - 1e-14);
    }

    #[test]
    fn rip_sampled_examples() {
        let d = DftSystem::new(7).unwrap();
        let draw = draw_selectors(7, 4.0, &mut rng::stream(6)).unwrap();
        let exact = rip_constant_exact(&d, &draw, 2).unwrap();
        let all = rip_constant_sampled(&d, &draw, 2, 21, &mut rng::stream(1)).unwrap();
        assert_eq!(all.delta, exact.delta);
        assert!(!all.exact);

        let d = DftSystem::new(64).unwrap();
        let draw = draw_selectors(64, 32.0, &mut rng::stream(8)).unwrap();
        let mut prev = 0.0;
        for count in [10, 50, 200, 500] {
            let r = rip_constant_sampled(&d, &draw, 2, count, &mut rng::stream(99)).unwrap();
            assert!(r.delta >= prev);
            assert!((0.0..=1.0).contains(&r.delta));
            prev = r.delta;
        }
        let exact = rip_constant_exact(&d, &draw, 2).unwrap();
        assert!(prev <= exact.delta + 1e-12);
    }

    #[test]
    fn basis_pursuit_examples() {
        let d = DftSystem::new(8).unwrap();
        let all = SelectorDraw::all(8);
        let mut f = vec![Complex64::new(0.0, 0.0); 8];
        f[3] = Complex64::new(1.0, 0.0);
        let solver = BasisPursuitSolver::new(&d, &all).unwrap();
        let r = recover(&solver, f.clone(), &BasisPursuitParams::default()).unwrap();
        assert!(r.rel_error <= 1e-8, "{r:?}");

        // full measurements determine f = Ψ* b
        let dense: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 - 3.0, 0.5 * i as f64)).collect();
        let b = solver.measure(&dense);
        let out = solver.solve(&b, &BasisPursuitParams::default()).unwrap();
        let err: f64 = out.f.iter().zip(&dense).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8);

        let draw = SelectorDraw::from_rows(8, 4.0, &[0, 2, 5]).unwrap();
        let out = basis_pursuit(&d, &draw, &[Complex64::new(0.0, 0.0); 3], &BasisPursuitParams::default()).unwrap();
        assert!(out.f.iter().all(|z| z.norm() == 0.0));
        let empty = SelectorDraw::from_rows(8, 4.0, &[]).unwrap();
        assert!(basis_pursuit(&d, &empty, &[], &BasisPursuitParams::default()).is_err());
        assert!(basis_pursuit(&d, &draw, &[Complex64::new(0.0, 0.0); 2], &BasisPursuitParams::default()).is_err());
    }

    #[test]
    fn basis_pursuit_is_feasible_even_when_stopped_early() {
        let d = DftSystem::new(32).unwrap();
        let draw = draw_selectors(32, 12.0, &mut rng::stream(3)).unwrap();
        let solver = BasisPursuitSolver::new(&d, &draw).unwrap();
        let f = random_sparse_signal(32, 3, AmplitudeLaw::ComplexGaussian, &mut rng::stream(4));
        let b = solver.measure(&f);
        let params = BasisPursuitParams { max_iter: 5, ..Default::default() };
        let out = solver.solve(&b, &params).unwrap();
        assert!(!out.converged);
        let resid: f64 = solver.measure(&out.f).iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(resid <= params.tol_primal * (1.0 + l2(&b)));
    }

    #[test]
    fn recovery_examples() {
        let p = BasisPursuitParams::default();
        let r = recovery_experiment(16, 3, 16.0, 20, 1, AmplitudeLaw::ComplexGaussian, &p, 0.99).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert!(recovery_experiment(16, 0, 8.0, 5, 1, AmplitudeLaw::Unit, &p, 0.99).is_err());
    }

    #[test]
    fn sample_size_examples() {
        let a = sample_size_for_rip(2, 64, 1.0, 1.0).unwrap();
        assert!((a.k - 64.0 * E * 32f64.ln()).abs() < 1e-10);
        assert!((a.failure_probability - 4.0 * E * E / 1024.0).abs() < 1e-14);
        let b = sample_size_for_rip(2, 64, 0.0, 1.0).unwrap();
        assert!((a.k / b.k - 2.0).abs() < 1e-12);
        assert!(sample_size_for_rip(33, 64, 1.0, 1.0).is_err());
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(64, 4), 635_376);
        assert_eq!(binomial(3, 4), 0);
    }
}

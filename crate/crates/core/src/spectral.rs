//! Finite-dimensional trace calculus on complex Hermitian matrices.
//!
//! All traces here are normalized unless stated otherwise: `τ(x) = tr(x) / d`,
//! so `τ(1) = 1`. Spectral projections and matrix functions are evaluated
//! through the eigendecomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry `‖A − A*‖ / ‖A‖` above which construction is refused.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

/// A complex self-adjoint `d×d` matrix.
///
/// Constructors symmetrize to `(A + A*)/2` and record how far the input was
/// from Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
    asymmetry: f64,
}

/// JSON matrix literal `{"dim": d, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl HermitianMatrix {
    /// Builds a Hermitian matrix from a square complex matrix.
    ///
    /// Rejects empty or non-square input, non-finite entries, and inputs whose
    /// anti-Hermitian part exceeds `ASYMMETRY_TOLERANCE` relative to the norm.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::Input("matrix dimension must be at least 1".into()));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        let adj = m.adjoint();
        let skew = frobenius(&(&m - &adj)) * 0.5;
        let scale = frobenius(&m);
        let asymmetry = if scale > 0.0 { skew / scale } else { 0.0 };
        if asymmetry > ASYMMETRY_TOLERANCE {
            return Err(Error::Input(format!(
                "matrix is not Hermitian (relative asymmetry {asymmetry:e})"
            )));
        }
        let data = (m + adj).scale(0.5);
        Ok(Self { data, asymmetry })
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        Self::from_real(DMatrix::from_fn(d, d, |i, j| if i == j { values[i] } else { 0.0 }))
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: DMatrix::identity(dim, dim), asymmetry: 0.0 }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: DMatrix::zeros(dim, dim), asymmetry: 0.0 }
    }

    /// Wraps a matrix already known to be exactly Hermitian (e.g. built from
    /// sums of `v v*`). Only the diagonal imaginary parts are cleaned.
    pub(crate) fn from_hermitian_unchecked(mut data: DMatrix<Complex64>) -> Self {
        for i in 0..data.nrows() {
            data[(i, i)].im = 0.0;
        }
        Self { data, asymmetry: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    /// Relative size of the anti-Hermitian part removed at construction.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { data: self.data.scale(c), asymmetry: 0.0 }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(Self { data: &self.data + &other.data, asymmetry: 0.0 })
    }

    /// `self += c * other` without reallocating.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        self.data.zip_apply(&other.data, |a, b| *a += b * c);
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.data.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Operator norm, the largest absolute eigenvalue.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Normalized trace `tr(A)/d` (real for Hermitian input).
    pub fn normalized_trace(&self) -> f64 {
        self.data.trace().re / self.dim() as f64
    }

    /// Applies a real function through the spectral decomposition.
    pub fn map_spectrum<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let es = eigh(self);
        let v = &es.eigenvectors;
        let fl = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            es.eigenvalues.len(),
            es.eigenvalues.iter().map(|&l| Complex64::new(f(l), 0.0)),
        ));
        Self::from_hermitian_unchecked(v * fl * v.adjoint())
    }

    /// Matrix exponential `e^A` via the eigendecomposition.
    pub fn exp(&self) -> Self {
        self.map_spectrum(f64::exp)
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        let d = self.dim();
        MatrixLiteral {
            dim: d,
            re: (0..d).map(|i| (0..d).map(|j| self.data[(i, j)].re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| self.data[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        let d = lit.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&lit.re) || !rows_ok(&lit.im) {
            return Err(Error::Input(format!("matrix literal is not {d}x{d}")));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| Complex64::new(lit.re[i][j], lit.im[i][j])))
    }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) and unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenSystem {
    /// Rebuilds `V Λ V*`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let d = self.eigenvalues.len();
        let mut out = DMatrix::zeros(d, d);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let col = self.eigenvectors.column(k);
            out += (&col * col.adjoint()).scale(l);
        }
        out
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Entries are finite by construction of `HermitianMatrix`, so this cannot fail.
pub fn eigh(a: &HermitianMatrix) -> EigenSystem {
    let se = a.data.clone().symmetric_eigen();
    let d = a.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |r, c| se.eigenvectors[(r, order[c])]);
    EigenSystem { eigenvalues, eigenvectors }
}

/// Normalized trace of the spectral projection onto `[t, ∞)`:
/// the fraction of eigenvalues `λ ≥ t`.
pub fn tail_trace(a: &HermitianMatrix, t: f64) -> f64 {
    tail_fraction(&a.eigenvalues(), t)
}

/// `#{λ ≥ t} / len` for an eigenvalue list.
pub fn tail_fraction(eigenvalues: &[f64], t: f64) -> f64 {
    let above = eigenvalues.iter().filter(|&&l| l >= t).count();
    above as f64 / eigenvalues.len() as f64
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("Schatten exponent must be >= 1, got {p}")));
    }
    Ok(())
}

/// Schatten norm from singular values; `p = f64::INFINITY` gives the largest one.
pub fn schatten_from_singular_values(sv: &[f64], p: f64, normalized: bool) -> Result<f64> {
    check_exponent(p)?;
    let top = sv.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if p.is_infinite() || top == 0.0 {
        return Ok(top);
    }
    // factor out the largest value so that s^p cannot overflow
    let mut sum: f64 = sv.iter().map(|&s| (s.abs() / top).powf(p)).sum();
    if normalized {
        sum /= sv.len() as f64;
    }
    Ok(top * sum.powf(1.0 / p))
}

/// Schatten `p`-norm of a Hermitian matrix, `(τ|A|^p)^{1/p}` when `normalized`.
pub fn schatten_norm(a: &HermitianMatrix, p: f64, normalized: bool) -> Result<f64> {
    schatten_from_singular_values(&a.eigenvalues(), p, normalized)
}

/// Schatten `p`-norm of an arbitrary square complex matrix via its singular values.
pub fn schatten_norm_general(x: &DMatrix<Complex64>, p: f64, normalized: bool) -> Result<f64> {
    check_exponent(p)?;
    let sv: Vec<f64> = x.clone().singular_values().iter().copied().collect();
    schatten_from_singular_values(&sv, p, normalized)
}

/// Layer-cake evaluation `p ∫_0^∞ t^{p-1} τ(1_{(t,∞)}(A)) dt` for positive `A`.
///
/// The distribution function is a step function between sorted eigenvalues,
/// so the integral is summed in closed form.
pub fn pnorm_via_tail(a: &HermitianMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::Parameter("layer-cake formula needs finite p".into()));
    }
    let mut ev = a.eigenvalues();
    if let Some(&low) = ev.first() {
        if low < -1e-12 {
            return Err(Error::Domain(format!("matrix is not positive semidefinite (eigenvalue {low:e})")));
        }
    }
    for l in ev.iter_mut() {
        *l = l.max(0.0);
    }
    let d = ev.len() as f64;
    let mut total = 0.0;
    let mut prev = 0.0f64;
    for (i, &l) in ev.iter().enumerate() {
        // on (prev, l) exactly d - i eigenvalues exceed t
        let above = (ev.len() - i) as f64;
        total += above / d * (l.powf(p) - prev.powf(p));
        prev = l;
    }
    Ok(total)
}

/// Both sides of `τ(e^{A+B}) ≤ τ(e^{A/2} e^B e^{A/2})`.
pub fn golden_thompson_gap(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<(f64, f64)> {
    let sum = a.add(b)?;
    let lhs = sum.exp().normalized_trace();
    let half = a.scale(0.5).exp();
    let m = half.matrix() * b.exp().matrix() * half.matrix();
    let rhs = m.trace().re / a.dim() as f64;
    Ok((lhs, rhs))
}

/// A GUE-like random Hermitian matrix: `(G + G*)/2` with standard complex
/// Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let h = (&g + g.adjoint()).scale(0.5);
    HermitianMatrix::from_hermitian_unchecked(h)
}

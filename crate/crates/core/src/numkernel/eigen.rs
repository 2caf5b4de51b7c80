//! General complex eigendecomposition with biorthonormal left/right
//! eigenvectors, and the Drazin inverse built from it.

use nalgebra::linalg::Schur;

use super::{CMatrix, LinearMap, C64};
use crate::error::{Error, Result};

/// Relative tolerance on eigenpair residuals, `‖Ax − λx‖ ≤ tol·‖A‖`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;

/// Default relative zero tolerance for steady-state detection, measured
/// against the spectral radius.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

// Eigenvector matrices more ill-conditioned than this are treated as defective.
const MAX_CONDITION: f64 = 1e12;

/// Eigenvalues with right eigenvectors as columns of `right` and left
/// eigenvectors as rows of `left`, normalized so that `left · right = I`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub right: CMatrix,
    pub left: CMatrix,
    /// 1-norm condition number of the right eigenvector matrix.
    pub condition: f64,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Indices of eigenvalues within `rel_tol · spectral_radius` of zero.
    pub fn near_zero(&self, rel_tol: f64) -> Vec<usize> {
        let tol = rel_tol * self.spectral_radius();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() <= tol)
            .map(|(i, _)| i)
            .collect()
    }
}

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
/// Small pivots are clamped the way LAPACK's `trevc` does, which yields valid
/// eigenvectors inside a degenerate but non-defective eigenspace.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let t_norm = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * t_norm;
    let mut vecs = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        vecs[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * vecs[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            vecs[(i, k)] = -acc / denom;
        }
        let norm = vecs.column(k).norm();
        if norm > 0.0 {
            let scaled = vecs.column(k) / C64::new(norm, 0.0);
            vecs.set_column(k, &scaled);
        }
    }
    vecs
}

/// Dense eigendecomposition of a general complex matrix.
///
/// Uses the complex Schur form `A = Q T Q*`, back substitution on `T` for the
/// right eigenvectors and `X⁻¹` for the left ones, which makes the pair
/// biorthonormal by construction. Defective (or numerically defective)
/// matrices are rejected rather than perturbed.
pub fn eig_matrix(a: &CMatrix) -> Result<Spectrum> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let a_norm = a.norm();
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(1)).ok_or_else(|| {
        Error::NonConvergence {
            what: "Schur decomposition",
            norm: a_norm,
            detail: format!("no convergence for {n}x{n} matrix"),
        }
    })?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut right = &q * triangular_eigenvectors(&t);
    for k in 0..n {
        let norm = right.column(k).norm();
        let scaled = right.column(k) / C64::new(norm, 0.0);
        right.set_column(k, &scaled);
    }
    let left = right.clone().try_inverse().ok_or(Error::Defective {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&right) * one_norm(&left);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Defective { condition });
    }
    let tol = EIG_RESIDUAL_TOL * a_norm.max(f64::MIN_POSITIVE);
    for k in 0..n {
        let x = right.column(k);
        let r = a * x - x * values[k];
        if r.norm() > tol {
            return Err(Error::Defective { condition });
        }
    }
    Ok(Spectrum {
        values,
        right,
        left,
        condition,
    })
}

/// Eigendecomposition of an operator or superoperator.
pub fn eig<M: LinearMap>(a: &M) -> Result<Spectrum> {
    eig_matrix(a.entries())
}

/// Drazin inverse `Σ_{λ≠0} λ⁻¹ |x⟩⟨y|` over the non-zero spectrum.
///
/// `zero_tol` is relative to the spectral radius. At most one eigenvalue may
/// fall inside it; more than one is a degenerate steady space.
pub fn drazin<M: LinearMap>(l: &M, zero_tol: f64) -> Result<M> {
    let spectrum = eig(l)?;
    drazin_from_spectrum(l, &spectrum, zero_tol)
}

/// Same as [`drazin`] with a precomputed spectrum of `l`.
pub fn drazin_from_spectrum<M: LinearMap>(l: &M, spectrum: &Spectrum, zero_tol: f64) -> Result<M> {
    let zeros = spectrum.near_zero(zero_tol);
    if zeros.len() > 1 {
        return Err(Error::DegenerateSteadyState {
            count: zeros.len(),
            tol: zero_tol * spectrum.spectral_radius(),
        });
    }
    let n = spectrum.values.len();
    let mut scaled_right = spectrum.right.clone();
    for k in 0..n {
        let factor = if zeros.contains(&k) {
            C64::new(0.0, 0.0)
        } else {
            spectrum.values[k].inv()
        };
        let col = scaled_right.column(k) * factor;
        scaled_right.set_column(k, &col);
    }
    Ok(l.with_entries(scaled_right * &spectrum.left))
}

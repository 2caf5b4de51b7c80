use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::{CMatrix, LinearMap, C64};
use crate::error::{Error, Result};

/// Dense operator on a finite Hilbert space.
///
/// `dims` records the subsystem dimensions whose product is the total
/// dimension; a plain operator carries a single subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: CMatrix,
    dims: Vec<usize>,
}

impl Operator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::DimensionMismatch("operator of dimension 0".into()));
        }
        let dims = vec![entries.nrows()];
        Ok(Self { entries, dims })
    }

    /// Attaches a subsystem structure. The product of `dims` must equal the
    /// operator dimension.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let product: usize = dims.iter().product();
        if product != self.dim() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {dims:?} do not multiply to {}",
                self.dim()
            )));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
            dims: vec![dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
            dims: vec![dim],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let entries = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self {
            entries,
            dims: vec![n],
        }
    }

    /// Builds a real operator from row-major data.
    pub fn from_real_rows(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} operator",
                data.len()
            )));
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(data[i * dim + j], 0.0)
        }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            entries: DMatrix::from_fn(dim, dim, f),
            dims: vec![dim],
        }
    }

    /// Validates and wraps a density matrix: Hermitian, unit trace and
    /// eigenvalues no lower than `-tol`.
    pub fn density_matrix(entries: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(entries)?;
        op.check_density(tol)?;
        Ok(op)
    }

    /// Validates and wraps a Hamiltonian (Hermitian within `tol`).
    pub fn hamiltonian(entries: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(entries)?;
        if !op.is_hermitian(tol) {
            return Err(Error::InvalidParameter(
                "Hamiltonian is not Hermitian".into(),
            ));
        }
        Ok(op)
    }

    pub fn check_density(&self, tol: f64) -> Result<()> {
        if !self
            .entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if !self.is_hermitian(tol) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = self
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        self * other + other * self
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Self {
            entries: &self.entries * factor,
            dims: self.dims.clone(),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (&self.entries - self.entries.adjoint())
            .iter()
            .all(|z| z.norm() <= tol * scale)
    }

    pub fn hermitian_part(&self) -> Operator {
        Self {
            entries: (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0),
            dims: self.dims.clone(),
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self
            .hermitian_part()
            .entries
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    /// Trace norm of the Hermitian part.
    pub fn trace_norm(&self) -> f64 {
        self.hermitian_eigenvalues().iter().map(|v| v.abs()).sum()
    }

    /// Tr(self · rho).
    pub fn expectation_in(&self, rho: &Operator) -> Result<C64> {
        if self.dim() != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable dim {} vs state dim {}",
                self.dim(),
                rho.dim()
            )));
        }
        // Tr(AB) = sum_ij A_ij B_ji without forming the product.
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[(i, j)] * rho.entries[(j, i)];
            }
        }
        Ok(acc)
    }
}

impl LinearMap for Operator {
    fn entries(&self) -> &CMatrix {
        &self.entries
    }

    fn with_entries(&self, entries: CMatrix) -> Self {
        Self {
            entries,
            dims: self.dims.clone(),
        }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator {
            entries: &self.entries * &rhs.entries,
            dims: self.dims.clone(),
        }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator {
            entries: &self.entries + &rhs.entries,
            dims: self.dims.clone(),
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator {
            entries: &self.entries - &rhs.entries,
            dims: self.dims.clone(),
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.entries += &rhs.entries;
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Kronecker product. The result carries the concatenated subsystem dims, so
/// `kron(a, b)` orders `a` as the more significant subsystem.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator {
        entries: a.entries.kronecker(&b.entries),
        dims,
    }
}

/// Kronecker product of a list of operators, left to right.
pub fn kron_all(ops: &[&Operator]) -> Operator {
    let mut iter = ops.iter();
    let first = (*iter.next().expect("kron_all needs at least one operator")).clone();
    iter.fold(first, |acc, op| kron(&acc, op))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identities() {
        let i2 = Operator::identity(2);
        assert_eq!(kron(&i2, &i2).entries(), Operator::identity(4).entries());
        let p = Operator::from_diagonal(&[1.0, 0.0]);
        assert_eq!(
            kron(&p, &p).entries(),
            Operator::from_diagonal(&[1.0, 0.0, 0.0, 0.0]).entries()
        );
        assert_eq!(kron(&p, &i2).dims(), &[2, 2]);
    }

    #[test]
    fn kron_matches_index_arithmetic() {
        let a = Operator::from_fn(2, |i, j| C64::new((i * 2 + j) as f64, 1.0));
        let b = Operator::from_fn(3, |i, j| C64::new(0.5 * i as f64, (j as f64) - 1.0));
        let k = kron(&a, &b);
        for i in 0..6 {
            for j in 0..6 {
                let expect = a.get(i / 3, j / 3) * b.get(i % 3, j % 3);
                assert_eq!(k.get(i, j), expect);
            }
        }
    }

    #[test]
    fn rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(Operator::new(m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn density_validation() {
        let rho = Operator::from_diagonal(&[0.25, 0.75]);
        assert!(rho.check_density(1e-12).is_ok());
        let bad = Operator::from_diagonal(&[1.5, -0.5]);
        assert!(bad.check_density(1e-12).is_err());
        let not_unit = Operator::from_diagonal(&[0.5, 0.6]);
        assert!(not_unit.check_density(1e-12).is_err());
    }

    #[test]
    fn trace_norm_of_difference() {
        let a = Operator::from_diagonal(&[1.0, 0.0]);
        let b = Operator::from_diagonal(&[0.0, 1.0]);
        assert!(((&a - &b).trace_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn expectation_is_trace_of_product() {
        let a = Operator::from_fn(3, |i, j| C64::new(i as f64, j as f64));
        let b = Operator::from_fn(3, |i, j| C64::new(1.0 + j as f64, -(i as f64)));
        let direct = (&a * &b).trace();
        assert!((a.expectation_in(&b).unwrap() - direct).norm() < 1e-13);
        assert!(a.expectation_in(&Operator::identity(2)).is_err());
        assert_eq!(
            Operator::identity(2)
                .expectation_in(&Operator::identity(2))
                .unwrap(),
            c(2.0)
        );
    }
}

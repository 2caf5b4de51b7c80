use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::DVector;

use super::{CMatrix, LinearMap, Operator, C64};
use crate::error::{Error, Result};

/// Column-stacked vectorization: entry `(i, j)` lands at index `i + j * dim`.
pub fn vectorize(a: &Operator) -> DVector<C64> {
    // nalgebra storage is column-major, which is exactly column stacking.
    DVector::from_column_slice(a.entries().as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &DVector<C64>) -> Result<Operator> {
    let len = v.len();
    let dim = (len as f64).sqrt().round() as usize;
    if dim == 0 || dim * dim != len {
        return Err(Error::NotPerfectSquare(len));
    }
    Operator::new(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// The vectorized identity `<1|`, so that `<1|vec(A)> = Tr A`.
pub fn vectorized_identity(dim: usize) -> DVector<C64> {
    vectorize(&Operator::identity(dim))
}

/// Linear map on operators, stored as a `dim² × dim²` matrix acting on
/// column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    entries: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, entries: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dim {dim} needs {n}x{n}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    /// `rho -> a · rho · b`, i.e. `bᵀ ⊗ a`.
    pub fn sandwich(a: &Operator, b: &Operator) -> Self {
        Self {
            dim: a.dim(),
            entries: b.entries().transpose().kronecker(a.entries()),
        }
    }

    /// `rho -> a · rho`.
    pub fn left(a: &Operator) -> Self {
        Self::sandwich(a, &Operator::identity(a.dim()))
    }

    /// `rho -> rho · b`.
    pub fn right(b: &Operator) -> Self {
        Self::sandwich(&Operator::identity(b.dim()), b)
    }

    /// Unitary part of a master equation, `rho -> -i[h, rho]`.
    pub fn hamiltonian(h: &Operator) -> Self {
        let minus_i = C64::new(0.0, -1.0);
        let comm = &Self::left(h) - &Self::right(h);
        comm.scale(minus_i)
    }

    /// Builds the matrix of an arbitrary linear map by applying it to the
    /// elementary matrices `E_ij`.
    pub fn from_map(dim: usize, mut f: impl FnMut(&Operator) -> Operator) -> Self {
        let n = dim * dim;
        let mut entries = CMatrix::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, j)] = C64::new(1.0, 0.0);
                let basis = Operator::zeros(dim).with_entries(m);
                let image = vectorize(&f(&basis));
                entries.set_column(i + j * dim, &image);
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dim {} applied to dim {}",
                self.dim,
                rho.dim()
            )));
        }
        let out = devectorize(&(&self.entries * vectorize(rho)))?;
        out.with_dims(rho.dims().to_vec())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: &self.entries * factor,
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Largest deviation of `<1| S` from zero, i.e. how far the map is from
    /// annihilating traces.
    pub fn trace_defect(&self) -> f64 {
        let one = vectorized_identity(self.dim);
        (one.transpose() * &self.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl LinearMap for Superoperator {
    fn entries(&self) -> &CMatrix {
        &self.entries
    }

    fn with_entries(&self, entries: CMatrix) -> Self {
        Self {
            dim: self.dim,
            entries,
        }
    }
}

impl<'a> Add<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl<'a> Sub<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl<'a> Mul<&'a Superoperator> for &'a Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: &'a Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            entries: &self.entries * &rhs.entries,
        }
    }
}

impl AddAssign<&Superoperator> for Superoperator {
    fn add_assign(&mut self, rhs: &Superoperator) {
        self.entries += &rhs.entries;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_identity() {
        let v = vectorize(&Operator::identity(2));
        let expect = [1.0, 0.0, 0.0, 1.0];
        for (z, e) in v.iter().zip(expect) {
            assert_eq!(*z, C64::new(e, 0.0));
        }
    }

    #[test]
    fn column_stacking_order() {
        let a = Operator::from_real_rows(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = vectorize(&a);
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn devectorize_rejects_bad_length() {
        let v = DVector::from_element(5, C64::new(1.0, 0.0));
        assert_eq!(devectorize(&v), Err(Error::NotPerfectSquare(5)));
    }

    #[test]
    fn identity_functional_is_trace() {
        let a = Operator::from_fn(3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let tr = (vectorized_identity(3).transpose() * vectorize(&a))[(0, 0)];
        assert_eq!(tr, a.trace());
    }

    #[test]
    fn sandwich_matches_products() {
        let a = Operator::from_fn(3, |i, j| C64::new(i as f64 + 0.5, j as f64));
        let b = Operator::from_fn(3, |i, j| C64::new(1.0 - j as f64, 0.25 * i as f64));
        let rho = Operator::from_fn(3, |i, j| C64::new((i * j) as f64, 1.0));
        let via_super = Superoperator::sandwich(&a, &b).apply(&rho).unwrap();
        let direct = &(&a * &rho) * &b;
        assert!((&via_super - &direct).norm() < 1e-12);
    }

    #[test]
    fn from_map_reproduces_sandwich() {
        let a = Operator::from_fn(2, |i, j| C64::new(i as f64, 1.0 + j as f64));
        let b = Operator::from_fn(2, |i, j| C64::new(j as f64 - 1.0, i as f64));
        let s = Superoperator::from_map(2, |x| &(&a * x) * &b);
        assert!((&s - &Superoperator::sandwich(&a, &b)).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_part_annihilates_trace() {
        let h = Operator::from_fn(3, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else if i < j {
                C64::new(0.3, 0.1)
            } else {
                C64::new(0.3, -0.1)
            }
        });
        assert!(Superoperator::hamiltonian(&h).trace_defect() < 1e-14);
    }
}

//! Dense square complex matrices with serde support and Hermitian
//! eigensolvers.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, CoreResult};
use crate::rng::CounterRng;

/// Dimension cap; everything in this crate runs at desk scale.
pub const MAX_DIM: usize = 64;

/// Adjoint symmetry class of a matrix slot or value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointClass {
    Hermitian,
    AntiHermitian,
    General,
}

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> CoreResult<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(CoreError::DimOutOfRange { dim, max: MAX_DIM });
        }
        if entries.len() != dim * dim {
            return Err(CoreError::DimMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        let m = Self { dim, entries };
        m.check_finite("matrix construction")?;
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn diagonal_real(values: &[f64]) -> Self {
        Self::diagonal(
            &values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    /// Random Hermitian draw: `(G + G†)/2` with iid standard normal real
    /// and imaginary parts scaled by `scale`. Diagonal entries are then
    /// real N(0, scale²); off-diagonal real/imag parts N(0, scale²/2).
    pub fn random_hermitian(dim: usize, scale: f64, rng: &mut CounterRng) -> Self {
        let g = Self::from_fn(dim, |_, _| {
            Complex64::new(scale * rng.normal(), scale * rng.normal())
        });
        g.add(&g.adjoint()).scale_re(0.5)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn check_finite(&self, context: &str) -> CoreResult<()> {
        if self
            .entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(CoreError::NonFinite {
                context: context.to_string(),
            });
        }
        Ok(())
    }

    fn check_same_dim(&self, other: &Self) -> CoreResult<()> {
        if self.dim != other.dim {
            return Err(CoreError::DimMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix add dimension mismatch");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix sub dimension mismatch");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, factor: Complex64) {
        assert_eq!(self.dim, other.dim, "matrix axpy dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += factor * b;
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix mul dimension mismatch");
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self {
            dim: n,
            entries: out,
        }
    }

    /// Matrix-vector product `out = M v` without allocation.
    pub fn mul_vec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        assert_eq!(v.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = &self.entries[i * n..(i + 1) * n];
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[i] = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.entries[j * n + i].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.frobenius_norm().max(1e-300);
        self.sub(&self.adjoint()).frobenius_norm() <= rel_tol * scale
    }

    pub fn is_anti_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.frobenius_norm().max(1e-300);
        self.add(&self.adjoint()).frobenius_norm() <= rel_tol * scale
    }

    /// Classify against the 1e-12 relative Frobenius tolerance.
    pub fn adjoint_class(&self) -> AdjointClass {
        if self.is_hermitian(1e-12) {
            AdjointClass::Hermitian
        } else if self.is_anti_hermitian(1e-12) {
            AdjointClass::AntiHermitian
        } else {
            AdjointClass::General
        }
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    /// Anti-Hermitian part `(M − M†)/2`.
    pub fn anti_hermitian_part(&self) -> Self {
        self.sub(&self.adjoint()).scale_re(0.5)
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entries[i * self.dim + j])
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> CoreResult<Vec<f64>> {
        if !self.is_hermitian(1e-10) {
            return Err(CoreError::InvalidInput(
                "hermitian_eigenvalues requires a Hermitian matrix".into(),
            ));
        }
        let eig = self.to_nalgebra().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }

    /// Full eigensystem of a Hermitian matrix: `(eigenvalues, columns)`,
    /// eigenvalues ascending with matching orthonormal eigenvectors.
    pub fn hermitian_eigensystem(&self) -> CoreResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
        if !self.is_hermitian(1e-10) {
            return Err(CoreError::InvalidInput(
                "hermitian_eigensystem requires a Hermitian matrix".into(),
            ));
        }
        let eig = self.to_nalgebra().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim).collect();
        let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let sorted_vals = order.iter().map(|&k| vals[k]).collect();
        let vecs = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        Ok((sorted_vals, vecs))
    }

    /// Eigenvalues of an anti-Hermitian matrix (purely imaginary),
    /// computed through the Hermitian transform `iM`.
    pub fn anti_hermitian_eigenvalues(&self) -> CoreResult<Vec<Complex64>> {
        if !self.is_anti_hermitian(1e-8) {
            return Err(CoreError::InvalidInput(
                "anti_hermitian_eigenvalues requires an anti-Hermitian matrix".into(),
            ));
        }
        let herm = self.scale(Complex64::new(0.0, 1.0)).hermitian_part();
        let vals = herm.hermitian_eigenvalues()?;
        Ok(vals.into_iter().map(|v| Complex64::new(0.0, -v)).collect())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatrixWire {
            dim: self.dim,
            re: self.entries.iter().map(|z| z.re).collect(),
            im: self.entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = MatrixWire::deserialize(deserializer)?;
        if wire.re.len() != wire.dim * wire.dim || wire.im.len() != wire.dim * wire.dim {
            return Err(D::Error::custom("matrix entry count does not match dim"));
        }
        let entries = wire
            .re
            .iter()
            .zip(&wire.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(wire.dim, entries).map_err(D::Error::custom)
    }
}

/// Real part of the trace; errors on non-finite entries.
pub fn trace_real(m: &ComplexMatrix) -> CoreResult<f64> {
    m.check_finite("trace_real")?;
    Ok(m.trace().re)
}

/// `AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> CoreResult<ComplexMatrix> {
    a.check_same_dim(b)?;
    Ok(a.mul(b).sub(&b.mul(a)))
}

/// `AB + BA`.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> CoreResult<ComplexMatrix> {
    a.check_same_dim(b)?;
    Ok(a.mul(b).add(&b.mul(a)))
}

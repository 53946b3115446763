//! Dense complex linear algebra for small quantum systems.
//!
//! Everything here is sized for desk-scale problems (dimension well below 64),
//! so matrices are plain row-major `Vec<Complex64>` buffers and the only heavy
//! routine, the Hermitian eigendecomposition, is delegated to `nalgebra`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance for Hermiticity and unit trace.
pub const HERM_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as "positive semidefinite".
pub const PSD_TOL: f64 = 1e-10;
/// Slack allowed on probabilities before they are rejected.
pub const PROB_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries cannot fill a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|u><v|`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &ComplexMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity, `max |M - M†|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() < tol
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * other.data[k * other.cols + i];
            }
        }
        acc
    }

    /// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
    /// unitary whose columns are the matching eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square(), "eigh needs a square matrix");
        let n = self.rows;
        let h = self.hermitian_part();
        let m = DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†` for a Hermitian matrix.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let (values, vectors) = self.eigh();
        let mapped: Vec<f64> = values.into_iter().map(f).collect();
        vectors.matmul(&ComplexMatrix::diagonal(&mapped)).matmul(&vectors.adjoint())
    }

    /// Positive square root; eigenvalues below zero are clipped first.
    pub fn sqrt_psd(&self) -> ComplexMatrix {
        self.map_spectrum(|v| v.max(0.0).sqrt())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("ket", "zero-dimensional"));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > HERM_TOL {
            return Err(Error::invalid("ket", format!("squared norm {norm2} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("ket", "cannot normalize a zero vector"));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.projector() }
    }

    pub fn conj(&self) -> Ket {
        Ket { amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect() }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("density matrix", "not square"));
        }
        let defect = matrix.hermitian_defect();
        if defect >= HERM_TOL {
            return Err(Error::invalid("density matrix", format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERM_TOL || tr.im.abs() > HERM_TOL {
            return Err(Error::invalid("density matrix", format!("trace {tr} is not 1")));
        }
        let min = matrix.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::invalid("density matrix", format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            matrix: ComplexMatrix,
        }
        let raw = Raw::deserialize(de)?;
        DensityMatrix::new(raw.matrix).map_err(serde::de::Error::custom)
    }
}

/// Outcome-indexed effects summing to the identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::invalid("povm", "no elements"));
        };
        let dim = first.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (b, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(Error::invalid("povm", format!("element {b} is not {dim}x{dim}")));
            }
            let defect = e.hermitian_defect();
            if defect >= HERM_TOL {
                return Err(Error::invalid("povm", format!("element {b} not Hermitian (defect {defect:e})")));
            }
            let min = e.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::invalid("povm", format!("element {b} has eigenvalue {min:e}")));
            }
            sum = &sum + e;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev >= HERM_TOL {
            return Err(Error::invalid("povm", format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements })
    }

    /// Rank-one projective measurement onto an orthonormal basis.
    pub fn from_basis(basis: &[Ket]) -> Result<Self> {
        Self::new(basis.iter().map(Ket::projector).collect())
    }

    pub fn computational(dim: usize) -> Self {
        Self { elements: (0..dim).map(|k| Ket::basis(dim, k).projector()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, b: usize) -> &ComplexMatrix {
        &self.elements[b]
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            elements: Vec<ComplexMatrix>,
        }
        let raw = Raw::deserialize(de)?;
        Povm::new(raw.elements).map_err(serde::de::Error::custom)
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Traces out `which` from an operator on `A ⊗ B`, returning the operator on
/// the remaining factor.
pub fn partial_trace(m: &ComplexMatrix, dim_a: usize, dim_b: usize, which: Subsystem) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if m.rows() != n || m.cols() != n {
        return Err(Error::Dimension(format!("{}x{} operator is not on a {dim_a}x{dim_b} bipartite space", m.rows(), m.cols())));
    }
    Ok(match which {
        Subsystem::A => ComplexMatrix::from_fn(dim_b, dim_b, |k, l| (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()),
        Subsystem::B => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()),
    })
}

/// `Tr(effect · ρ)`, clamped to `[0, 1]` when within [`PROB_TOL`] of it.
pub fn born_prob(state: &DensityMatrix, effect: &ComplexMatrix) -> Result<f64> {
    if effect.rows() != state.dim() || effect.cols() != state.dim() {
        return Err(Error::Dimension(format!(
            "{}x{} effect on a {}-dimensional state",
            effect.rows(),
            effect.cols(),
            state.dim()
        )));
    }
    let p = effect.trace_product(state.matrix()).re;
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
        return Err(Error::ProbabilityRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`; equals `|<ψ|φ>|²` on pure states.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("fidelity of {} and {} dimensional states", a.dim(), b.dim())));
    }
    // A pure argument makes the fidelity an expectation value; this avoids
    // square roots of round-off sized eigenvalues.
    for (pure, other) in [(a, b), (b, a)] {
        let (values, vectors) = pure.matrix().eigh();
        let n = values.len();
        if values[n - 1] > 1.0 - 1e-12 {
            let psi: Vec<Complex64> = (0..n).map(|i| vectors[(i, n - 1)]).collect();
            let v = other.matrix().apply(&psi);
            let e: Complex64 = psi.iter().zip(&v).map(|(p, q)| p.conj() * q).sum();
            return Ok(e.re.clamp(0.0, 1.0));
        }
    }
    let root = a.matrix().sqrt_psd();
    let inner = root.matmul(b.matrix()).matmul(&root);
    let (values, _) = inner.eigh();
    let cut = 1e-14 * values.last().copied().unwrap_or(0.0).abs();
    let t: f64 = values.into_iter().filter(|&v| v > cut).map(f64::sqrt).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(i4, ComplexMatrix::identity(4));

        let p = kron(&Ket::basis(2, 0).projector(), &Ket::basis(2, 1).projector());
        assert_eq!(p, Ket::basis(4, 1).projector());
    }

    #[test]
    fn kron_matches_index_formula() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let b = ComplexMatrix::from_fn(3, 3, |k, l| c((k * 3 + l) as f64, -(k as f64)));
        let m = kron(&a, &b);
        assert_eq!((m.rows(), m.cols()), (6, 6));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert_eq!(m[(3 * i + k, 3 * j + l)], a[(i, j)] * b[(k, l)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = Ket::normalized(vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap().projector();
        let sigma =
            ComplexMatrix::from_fn(
                3,
                3,
                |i, j| {
                    if i == j {
                        c([0.5, 0.3, 0.2][i], 0.0)
                    } else {
                        c(0.05, 0.01 * (i as f64 - j as f64))
                    }
                },
            );
        let reduced = partial_trace(&kron(&rho, &sigma), 2, 3, Subsystem::A).unwrap();
        assert!(reduced.max_abs_diff(&sigma) < 1e-14);
        let other = partial_trace(&kron(&rho, &sigma), 2, 3, Subsystem::B).unwrap();
        assert!(other.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn partial_trace_of_maximally_entangled_qutrits() {
        let s = 1.0 / 3f64.sqrt();
        let mut amps = vec![c(0.0, 0.0); 9];
        for k in 0..3 {
            amps[4 * k] = c(s, 0.0);
        }
        let phi = Ket::new(amps).unwrap();
        let reduced = partial_trace(&phi.projector(), 3, 3, Subsystem::A).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(3).scale(1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(partial_trace(&ComplexMatrix::identity(5), 2, 3, Subsystem::A).is_err());
    }

    #[test]
    fn born_rule_basics() {
        let zero = Ket::basis(2, 0).density();
        assert_eq!(born_prob(&zero, &Ket::basis(2, 0).projector()).unwrap(), 1.0);
        assert_eq!(born_prob(&zero, &Ket::basis(2, 1).projector()).unwrap(), 0.0);

        let mixed = DensityMatrix::maximally_mixed(3);
        let v = Ket::normalized(vec![c(1.0, 0.0), c(0.3, -0.2), c(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(born_prob(&mixed, &v.projector()).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn born_rejects_overlarge_effects() {
        let zero = Ket::basis(2, 0).density();
        let err = born_prob(&zero, &ComplexMatrix::identity(2).scale(1.5)).unwrap_err();
        assert!(matches!(err, Error::ProbabilityRange { .. }));
    }

    #[test]
    fn fidelity_cases() {
        let a = Ket::basis(3, 0).density();
        let b = Ket::basis(3, 1).density();
        assert_abs_diff_eq!(fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), 0.0, epsilon = 1e-12);

        let psi = Ket::normalized(vec![c(0.2, 0.1), c(0.7, 0.0), c(-0.3, 0.4)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(fidelity(&mixed, &psi.density()).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&psi.density(), &mixed).unwrap(), 1.0 / 3.0, epsilon = 1e-12);

        let phi = Ket::normalized(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)]).unwrap();
        let overlap = psi.inner(&phi).norm_sqr();
        assert_abs_diff_eq!(fidelity(&psi.density(), &phi.density()).unwrap(), overlap, epsilon = 1e-10);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diagonal(&[1.2, -0.2])).is_err());
        let mut m = ComplexMatrix::diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diagonal(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(vec![ComplexMatrix::diagonal(&[1.0, 0.0])]).is_err());
        assert!(Povm::new(vec![]).is_err());
        assert!(Povm::new(vec![ComplexMatrix::diagonal(&[1.5, 0.0]), ComplexMatrix::diagonal(&[-0.5, 1.0])]).is_err());
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(Povm::new(vec![half.clone(), half]).is_ok());
    }

    #[test]
    fn complex_matrix_from_rows_checks_length() {
        assert!(ComplexMatrix::from_rows(2, 2, vec![c(1.0, 0.0); 3]).is_err());
    }
}

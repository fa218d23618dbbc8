//! Reduced density matrices of fragments, their spectra, entropies and
//! distances.
//!
//! Two independent routes build the same reduced states:
//!
//! * [`oracle`] evolves the full `2^{N+1}` state vector and traces out the
//!   complement. Exponential in `N`; used to validate everything else.
//! * [`rho_fragment_analytic`] and [`rho_sys_fragment_analytic`] assemble the
//!   reduced state entry by entry from products of single-spin factors, at a
//!   cost of `O(4^{#F} N)`.
//!
//! The analytic route drops diagonal unitaries acting only on the kept
//! subsystem (intra-fragment interaction phases, and for `ρ_SF` the
//! system–fragment phases as well), so its matrices are unitarily equivalent
//! to the oracle's, not equal. Compare spectra, never entries.
//!
//! Basis convention shared by both routes: environment spin `i` is bit `i` of
//! a basis index, the system sits above the environment, and a clear bit
//! means `+1` (or `↑`).

mod assemble;
pub mod oracle;

pub use assemble::{
    rho_fragment_analytic, rho_fragment_analytic_with_cap, rho_fragment_equilibrium, rho_sys_fragment_analytic,
    rho_sys_fragment_analytic_with_cap, DEFAULT_FRAGMENT_CAP,
};
pub use oracle::{evolve_statevector, partial_trace, DEFAULT_ORACLE_CAP};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues in `[−CLAMP_TOL, 0)` are rounding noise and are set to zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Hermiticity and trace tolerance for explicitly constructed matrices.
pub const MATRIX_TOL: f64 = 1e-12;

/// A Hermitian, unit-trace matrix over `log₂(dim)` qubits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Validate and wrap explicit entries.
    pub fn from_entries(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::NotDensityMatrix {
                reason: format!("dimension {dim} is not a power of two"),
            });
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        let rho = DensityMatrix { dim, data };
        rho.check(MATRIX_TOL)?;
        Ok(rho)
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        DensityMatrix { dim, data }
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        let mut data = Vec::with_capacity(dim * dim);
        for x in amplitudes {
            for y in amplitudes {
                data.push(x * y.conj());
            }
        }
        DensityMatrix::from_entries(dim, data)
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let dim = probabilities.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, &p) in probabilities.iter().enumerate() {
            data[i * dim + i] = Complex64::new(p, 0.0);
        }
        DensityMatrix::from_entries(dim, data)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Replace `M` by `(M + M†)/2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// Check Hermiticity and unit trace to `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return Err(Error::NotDensityMatrix {
                        reason: format!("not Hermitian at ({i}, {j})"),
                    });
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > tol {
            return Err(Error::NotDensityMatrix {
                reason: format!("trace {tr} != 1"),
            });
        }
        Ok(())
    }

    /// Reduced state on the qubits set in `keep_mask`, kept qubits ordered by
    /// ascending position.
    pub fn partial_trace(&self, keep_mask: u64) -> Result<DensityMatrix> {
        let n = self.n_qubits();
        if n < 64 && keep_mask >> n != 0 {
            return Err(Error::param("keep_mask", "selects qubits outside the matrix"));
        }
        let kept = oracle::scatter_table(keep_mask, n);
        let traced = oracle::scatter_table(!keep_mask & ((1u64 << n) - 1), n);
        let dk = kept.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dk * dk];
        for (x, &px) in kept.iter().enumerate() {
            for (xp, &pxp) in kept.iter().enumerate() {
                data[x * dk + xp] = traced
                    .iter()
                    .map(|&py| self.get((px | py) as usize, (pxp | py) as usize))
                    .sum();
            }
        }
        Ok(DensityMatrix { dim: dk, data })
    }

    /// `self − other` as a plain Hermitian matrix (not a density matrix).
    fn difference(&self, other: &DensityMatrix) -> Result<Vec<Complex64>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(x, y)| x - y).collect())
    }
}

/// Eigenvalues of a Hermitian matrix, unsorted. Real input uses the real
/// symmetric solver.
pub(crate) fn hermitian_eigenvalues(dim: usize, data: &[Complex64]) -> Vec<f64> {
    if dim == 1 {
        return vec![data[0].re];
    }
    if data.iter().all(|z| z.im == 0.0) {
        let m = DMatrix::<f64>::from_fn(dim, dim, |i, j| data[i * dim + j].re);
        m.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let m = DMatrix::<Complex64>::from_fn(dim, dim, |i, j| data[i * dim + j]);
        m.symmetric_eigenvalues().iter().copied().collect()
    }
}

/// Eigenvalues of a density matrix, clamped, renormalized and sorted in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Wrap an explicit probability vector; sorts it in descending order.
    pub fn from_values(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Spectrum { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > tol).count()
    }

    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }

    /// The `n` largest eigenvalues, zero padded.
    pub fn leading(&self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigenvalues.iter().copied().take(n).collect();
        v.resize(n, 0.0);
        v
    }
}

pub fn spectrum(rho: &DensityMatrix) -> Result<Spectrum> {
    let mut ev = hermitian_eigenvalues(rho.dim, &rho.data);
    for l in &mut ev {
        if *l < -CLAMP_TOL {
            return Err(Error::NegativeEigenvalue { value: *l });
        }
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    let total: f64 = ev.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NotDensityMatrix {
            reason: "spectrum sums to zero".into(),
        });
    }
    for l in &mut ev {
        *l /= total;
    }
    Ok(Spectrum::from_values(ev))
}

/// `−Σ λ ln λ` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(s: &Spectrum) -> f64 {
    s.eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(spectrum(rho)?.entropy())
}

/// `‖ρ₁ − ρ₂‖₁ / 2`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    let diff = r1.difference(r2)?;
    Ok(0.5 * hermitian_eigenvalues(r1.dim, &diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Hilbert–Schmidt (Frobenius) norm of `ρ₁ − ρ₂`.
pub fn hs_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    let diff = r1.difference(r2)?;
    Ok(diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn entropy_of_mixed_and_pure() {
        for k in 0..5 {
            let rho = DensityMatrix::maximally_mixed(k);
            assert_abs_diff_eq!(entropy(&rho).unwrap(), k as f64 * LN_2, epsilon = 1e-12);
        }
        let s = 0.5f64.sqrt();
        let rho = DensityMatrix::pure(&[c(s), Complex64::new(0.0, s)]).unwrap();
        assert_abs_diff_eq!(entropy(&rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_weight_entropy() {
        let rho = DensityMatrix::diagonal(&[0.09, 0.21, 0.21, 0.49]).unwrap();
        let direct: f64 = [0.09f64, 0.21, 0.21, 0.49].iter().map(|l| -l * l.ln()).sum();
        let h = entropy(&rho).unwrap();
        assert_abs_diff_eq!(h, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 1.2217286, epsilon = 1e-6);
    }

    #[test]
    fn negative_eigenvalue_is_an_error() {
        let rho = DensityMatrix::from_raw(2, vec![c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(matches!(spectrum(&rho), Err(Error::NegativeEigenvalue { .. })));
        let rho = DensityMatrix::from_raw(2, vec![c(1.0 + 1e-12), c(0.0), c(0.0), c(-1e-12)]);
        let s = spectrum(&rho).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 0.0]);
    }

    #[test]
    fn validation() {
        assert!(DensityMatrix::from_entries(3, vec![c(1.0); 9]).is_err());
        assert!(DensityMatrix::from_entries(2, vec![c(0.5), c(0.1), c(0.2), c(0.5)]).is_err());
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn distances() {
        let up = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        let down = DensityMatrix::pure(&[c(0.0), c(1.0)]).unwrap();
        assert_eq!(trace_distance(&up, &up).unwrap(), 0.0);
        assert_abs_diff_eq!(trace_distance(&up, &down).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hs_distance(&up, &down).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(trace_distance(&up, &mixed).is_err());
    }

    #[test]
    fn partial_trace_of_density_matrix() {
        // |00⟩ + |11⟩ over two qubits
        let s = 0.5f64.sqrt();
        let bell = DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let half = bell.partial_trace(0b01).unwrap();
        assert_abs_diff_eq!(half.get(0, 0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(half.get(1, 1).re, 0.5, epsilon = 1e-15);
        assert_eq!(half.get(0, 1), c(0.0));
        let all = bell.partial_trace(0b11).unwrap();
        assert_eq!(all, bell);
        let none = bell.partial_trace(0).unwrap();
        assert_eq!(none.dim(), 1);
        assert_abs_diff_eq!(none.get(0, 0).re, 1.0, epsilon = 1e-15);
    }

    fn random_density(dim: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // G G† / tr
        let g: Vec<Complex64> = (0..dim * dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = (0..dim).map(|k| g[i * dim + k] * g[j * dim + k].conj()).sum();
            }
        }
        let tr: f64 = (0..dim).map(|i| data[i * dim + i].re).sum();
        data.iter_mut().for_each(|z| *z /= tr);
        let mut rho = DensityMatrix::from_raw(dim, data);
        rho.hermitize();
        rho
    }

    proptest! {
        #[test]
        fn trace_norm_bounded_by_hs_norm(seed in 0u64..10_000) {
            let r1 = random_density(8, seed);
            let r2 = random_density(8, seed.wrapping_add(77_777));
            let t = trace_distance(&r1, &r2).unwrap();
            let hs = hs_distance(&r1, &r2).unwrap();
            prop_assert!(t <= 8f64.sqrt() * hs / 2.0 + 1e-12);
            prop_assert!(t <= 1.0 + 1e-12);
            let s = spectrum(&r1).unwrap();
            prop_assert!((s.eigenvalues().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

//! Real polynomials in the monomial basis, coefficients in descending powers.

use crate::scalar::{sc, Scalar, C};
use nalgebra::DMatrix;

/// Leading coefficients with absolute value below this are trimmed away.
pub const TRIM_TOL: f64 = 1e-12;

/// Real-coefficient polynomial, `coeffs[0]` multiplying the highest power.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    /// Build a polynomial, trimming leading coefficients below [`TRIM_TOL`].
    /// An all-zero input collapses to the zero polynomial `[0]`.
    pub fn new(coeffs: Vec<T>) -> Self {
        let tol = sc::<T>(TRIM_TOL);
        let mut start = 0;
        while start + 1 < coeffs.len() && coeffs[start].abs() < tol {
            start += 1;
        }
        let coeffs = coeffs[start..].to_vec();
        if coeffs.is_empty() {
            return Self {
                coeffs: vec![T::zero()],
            };
        }
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> T {
        self.coeffs[0]
    }

    /// Constant term (value at s = 0).
    pub fn constant_term(&self) -> T {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == T::zero()
    }

    /// Number of trailing (s = 0 root) coefficients that are exactly ~zero.
    pub fn trailing_zeros(&self) -> usize {
        let tol = sc::<T>(TRIM_TOL);
        self.coeffs
            .iter()
            .rev()
            .take_while(|c| c.abs() < tol)
            .count()
            .min(self.degree())
    }

    /// Divide out `k` trailing zero coefficients (a factor of s^k).
    pub fn strip_trailing_zeros(&self, k: usize) -> Self {
        assert!(k <= self.trailing_zeros() || k == 0);
        Self::new(self.coeffs[..self.coeffs.len() - k].to_vec())
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![T::zero(); n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            out[n - self.coeffs.len() + i] += a;
        }
        for (i, &b) in other.coeffs.iter().enumerate() {
            out[n - other.coeffs.len() + i] += b;
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: C<T>) -> C<T> {
        let mut acc = C::<T>::new(T::zero(), T::zero());
        for &c in &self.coeffs {
            acc = acc * s + C::new(c, T::zero());
        }
        acc
    }

    pub fn eval_real(&self, x: T) -> T {
        let mut acc = T::zero();
        for &c in &self.coeffs {
            acc = acc * x + c;
        }
        acc
    }

    /// Roots via companion-matrix eigenvalues. The zero polynomial and
    /// constants have no roots.
    pub fn roots(&self) -> Vec<C<T>> {
        let n = self.degree();
        if n == 0 || self.is_zero() {
            return Vec::new();
        }
        let lead = self.leading();
        let mut m = DMatrix::<T>::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = T::one();
        }
        for j in 0..n {
            // char poly monic: s^n + c_{n-1} s^{n-1} + ... + c_0
            m[(n - 1, j)] = -self.coeffs[self.coeffs.len() - 1 - j] / lead;
        }
        m.complex_eigenvalues().iter().cloned().collect()
    }

    /// Reconstruct a real polynomial `lead * prod (s - r_i)` from a root set
    /// that is (approximately) closed under conjugation. Imaginary residue
    /// from near-conjugate pairing is discarded.
    pub fn from_roots(lead: T, roots: &[C<T>]) -> Self {
        let mut acc = vec![C::<T>::new(lead, T::zero())];
        for &r in roots {
            let mut next = vec![C::<T>::new(T::zero(), T::zero()); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }
}

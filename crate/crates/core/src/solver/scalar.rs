use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;

/// Field of matrix entries: `f64` for real-symmetric problems, `Complex64`
/// for general Hermitian ones.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn from_real(x: f64) -> Self;
    /// Narrow a complex value; the real type keeps only the real part.
    fn from_complex(z: Complex64) -> Self;
    fn to_complex(self) -> Complex64;
    fn random<R: Rng>(rng: &mut R) -> Self;

    fn scale(self, s: f64) -> Self {
        self * Self::from_real(s)
    }

    /// Eigendecomposition of a dense Hermitian matrix given in column-major
    /// order. Returns ascending eigenvalues and column-major eigenvectors.
    fn eigh(n: usize, a: &[Self]) -> (Vec<f64>, Vec<Self>);
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn random<R: Rng>(rng: &mut R) -> Self {
        rng.gen::<f64>() - 0.5
    }

    fn eigh(n: usize, a: &[Self]) -> (Vec<f64>, Vec<Self>) {
        let m = Mat::<f64>::from_fn(n, n, |i, j| a[i + j * n]);
        let e = m.selfadjoint_eigendecomposition(Side::Lower);
        let s = e.s().column_vector();
        let u = e.u();
        let values = (0..n).map(|i| s.read(i)).collect();
        let mut vectors = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                vectors[i + j * n] = u.read(i, j);
            }
        }
        (values, vectors)
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn random<R: Rng>(rng: &mut R) -> Self {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    }
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }

    fn eigh(n: usize, a: &[Self]) -> (Vec<f64>, Vec<Self>) {
        let m = Mat::<c64>::from_fn(n, n, |i, j| {
            let z = a[i + j * n];
            c64::new(z.re, z.im)
        });
        let e = m.selfadjoint_eigendecomposition(Side::Lower);
        let s = e.s().column_vector();
        let u = e.u();
        let values = (0..n).map(|i| s.read(i).re).collect();
        let mut vectors = vec![Complex64::zero(); n * n];
        for j in 0..n {
            for i in 0..n {
                let z = u.read(i, j);
                vectors[i + j * n] = Complex64::new(z.re, z.im);
            }
        }
        (values, vectors)
    }
}

/// `<x|y>` (conjugate-linear in `x`).
pub fn dot<S: Scalar>(x: &[S], y: &[S]) -> S {
    x.iter().zip(y).fold(S::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<S: Scalar>(x: &[S]) -> f64 {
    x.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}

/// `y += a x`.
pub fn axpy<S: Scalar>(a: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_real_and_complex() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let (vals, vecs) = f64::eigh(2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);

        // [[1, -i], [i, 1]] has eigenvalues 0 and 2
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let (vals, vecs) = Complex64::eigh(2, &[one, i, -i, one]);
        assert!(vals[0].abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
        let v = [vecs[0], vecs[1]];
        let hv = [one * v[0] - i * v[1], i * v[0] + one * v[1]];
        assert!(hv.iter().all(|z| z.norm() < 1e-14));
    }
}

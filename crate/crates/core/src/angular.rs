//! Angular-momentum algebra for integer angular momenta.
//!
//! Wigner 3j symbols are evaluated from the Racah sum in exact rational
//! arithmetic and only rounded to `f64` at the end, so products of symbols
//! inside matrix elements carry no accumulated cancellation error.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::basis::RotorState;
use crate::error::{Error, Result};

/// Arguments of a Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreeJArgs {
    pub j1: i32,
    pub j2: i32,
    pub j3: i32,
    pub m1: i32,
    pub m2: i32,
    pub m3: i32,
}

impl ThreeJArgs {
    pub fn new(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Self {
        Self { j1, j2, j3, m1, m2, m3 }
    }

    fn validate(&self) -> Result<()> {
        for (j, m) in [(self.j1, self.m1), (self.j2, self.m2), (self.j3, self.m3)] {
            if j < 0 {
                return Err(Error::AngularArgs(format!("negative angular momentum j = {j}")));
            }
            if m.abs() > j {
                return Err(Error::AngularArgs(format!("projection |m| = {} exceeds j = {j}", m.abs())));
            }
        }
        Ok(())
    }

    /// Legal arguments for which the symbol vanishes by selection rules.
    pub fn is_selection_zero(&self) -> bool {
        self.m1 + self.m2 + self.m3 != 0
            || self.j3 < (self.j1 - self.j2).abs()
            || self.j3 > self.j1 + self.j2
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    (2..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn factorial_product(args: &[i32]) -> BigInt {
    args.iter().map(|&n| factorial(n)).product()
}

fn three_j_cache() -> &'static RwLock<HashMap<ThreeJArgs, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<ThreeJArgs, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn racah_exact(a: ThreeJArgs) -> f64 {
    let ThreeJArgs { j1, j2, j3, m1, m2, m3 } = a;

    let t_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let t_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);

    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let denom = factorial_product(&[
            t,
            j3 - j2 + t + m1,
            j3 - j1 + t - m2,
            j1 + j2 - j3 - t,
            j1 - t - m1,
            j2 - t + m2,
        ]);
        let term = BigRational::new(BigInt::one(), denom);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }

    // square of the symbol: sum^2 * triangle * projection factorials
    let triangle = BigRational::new(
        factorial_product(&[j1 + j2 - j3, j1 - j2 + j3, -j1 + j2 + j3]),
        factorial(j1 + j2 + j3 + 1),
    );
    let projections = BigRational::from_integer(factorial_product(&[
        j1 + m1,
        j1 - m1,
        j2 + m2,
        j2 - m2,
        j3 + m3,
        j3 - m3,
    ]));
    let squared = &sum * &sum * triangle * projections;
    let magnitude = squared
        .to_f64()
        .expect("3j magnitude is finite for supported arguments")
        .sqrt();

    let phase_odd = (j1 - j2 - m3).rem_euclid(2) == 1;
    let negative = sum.is_negative() != phase_odd;
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly `0.0` for legal arguments that violate the projection sum
/// or the triangle rule, and an error for negative `j` or `|m| > j`.
pub fn wigner3j(args: ThreeJArgs) -> Result<f64> {
    args.validate()?;
    if args.is_selection_zero() {
        return Ok(0.0);
    }
    if let Some(&v) = three_j_cache().read().expect("3j cache poisoned").get(&args) {
        return Ok(v);
    }
    let value = racah_exact(args);
    three_j_cache()
        .write()
        .expect("3j cache poisoned")
        .insert(args, value);
    Ok(value)
}

/// Shorthand for [`wigner3j`] with positional arguments.
pub fn w3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    wigner3j(ThreeJArgs::new(j1, j2, j3, m1, m2, m3))
}

/// Clebsch–Gordan coefficient `<j1 m1, j2 m2 | j3 m3>`.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j3: i32, m3: i32) -> Result<f64> {
    let args = ThreeJArgs::new(j1, j2, j3, m1, m2, -m3);
    args.validate()?;
    if m3 != m1 + m2 {
        return Ok(0.0);
    }
    let phase = if (j1 - j2 + m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(phase * f64::from(2 * j3 + 1).sqrt() * wigner3j(args)?)
}

/// Matrix element `<j k m| D^{J*}_{p,q} |j' k' m'>` of a conjugated Wigner
/// D-matrix between symmetric-top states, with `p` the laboratory and `q`
/// the molecule-fixed index.
///
/// The value is exactly zero unless `m = m' + p` and `k = k' + q`.
pub fn dmatrix_element(bra: RotorState, rank: i32, lab: i32, body: i32, ket: RotorState) -> Result<f64> {
    if rank < 0 || lab.abs() > rank || body.abs() > rank {
        return Err(Error::AngularArgs(format!(
            "D-matrix indices out of range: J = {rank}, p = {lab}, q = {body}"
        )));
    }
    if bra.m != ket.m + lab || bra.k != ket.k + body {
        return Ok(0.0);
    }
    let (j, jp) = (bra.j as i32, ket.j as i32);
    let phase = if (bra.m + bra.k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let lab_part = w3j(j, rank, jp, -bra.m, lab, ket.m)?;
    if lab_part == 0.0 {
        return Ok(0.0);
    }
    let body_part = w3j(j, rank, jp, -bra.k, body, ket.k)?;
    Ok(phase * f64::from((2 * j + 1) * (2 * jp + 1)).sqrt() * lab_part * body_part)
}

/// Rank-1 spherical components `(v_{-1}, v_0, v_{+1})` of a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalVector {
    pub minus: Complex64,
    pub zero: Complex64,
    pub plus: Complex64,
}

impl SphericalVector {
    /// Component with spherical index `s` in `-1..=1`.
    pub fn component(&self, s: i32) -> Complex64 {
        match s {
            -1 => self.minus,
            0 => self.zero,
            1 => self.plus,
            _ => Complex64::zero(),
        }
    }
}

/// `v_0 = v_z`, `v_{±1} = ∓(v_x ± i v_y)/√2`.
pub fn cartesian_to_spherical(v: [Complex64; 3]) -> SphericalVector {
    let [x, y, z] = v;
    let i = Complex64::i();
    SphericalVector {
        minus: (x - i * y) / std::f64::consts::SQRT_2,
        zero: z,
        plus: -(x + i * y) / std::f64::consts::SQRT_2,
    }
}

pub fn cartesian_to_spherical_real(v: [f64; 3]) -> SphericalVector {
    cartesian_to_spherical(v.map(|c| Complex64::new(c, 0.0)))
}

pub fn spherical_to_cartesian(v: SphericalVector) -> [Complex64; 3] {
    let i = Complex64::i();
    let s = std::f64::consts::SQRT_2;
    [
        (v.minus - v.plus) / s,
        i * (v.minus + v.plus) / s,
        v.zero,
    ]
}

/// Coupling coefficient `<1 p', 1 p-p' | 2 p>` of the rank-2 tensor product
/// of two rank-1 tensors; zero outside the legal index range.
pub fn rank2_product_coefficient(p: i32, p_prime: i32) -> f64 {
    if p.abs() > 2 || p_prime.abs() > 1 || (p - p_prime).abs() > 1 {
        return 0.0;
    }
    clebsch_gordan(1, p_prime, 1, p - p_prime, 2, p).expect("indices validated above")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn st(j: u32, k: i32, m: i32) -> RotorState {
        RotorState { j, k, m }
    }

    #[test]
    fn three_j_examples() {
        assert_relative_eq!(w3j(1, 1, 2, 0, 0, 0).unwrap(), (2.0f64 / 15.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(w3j(1, 1, 0, 1, -1, 0).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        assert_eq!(w3j(1, 1, 3, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(w3j(1, 1, 1, 0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn three_j_rejects_illegal_arguments() {
        assert!(w3j(-1, 1, 1, 0, 0, 0).is_err());
        assert!(w3j(1, 1, 1, 2, -2, 0).is_err());
        // legal zero is not an error
        assert_eq!(w3j(2, 2, 2, 1, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_j_j_0() {
        for j in 0..10 {
            for m in -j..=j {
                let expected = if (j - m) % 2 == 0 { 1.0 } else { -1.0 } / f64::from(2 * j + 1).sqrt();
                assert_relative_eq!(w3j(j, j, 0, m, -m, 0).unwrap(), expected, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn large_j_stays_accurate() {
        // (j1 j2 J; m1 m2 -M) with J = j1 + j2 has the closed form
        // (-1)^(j1-j2+M) sqrt((2j1)!(2j2)!(J+M)!(J-M)! / ((2J+1)!(j1+m1)!(j1-m1)!(j2+m2)!(j2-m2)!))
        let f = |n: i32| factorial(n).to_f64().unwrap();
        let (j1, j2) = (15, 14);
        let jj = j1 + j2;
        for (m1, m2) in [(3, -5), (-15, -14), (15, -14), (0, 0), (-7, 9)] {
            let mm = m1 + m2;
            let sq = f(2 * j1) * f(2 * j2) * f(jj + mm) * f(jj - mm)
                / (f(2 * jj + 1) * f(j1 + m1) * f(j1 - m1) * f(j2 + m2) * f(j2 - m2));
            let sign = if (j1 - j2 + mm).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(w3j(j1, j2, jj, m1, m2, -mm).unwrap(), sign * sq.sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn clebsch_gordan_examples() {
        assert_relative_eq!(clebsch_gordan(1, 0, 1, 0, 2, 0).unwrap(), (2.0f64 / 3.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(clebsch_gordan(1, 1, 1, -1, 0, 0).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        for j in 0..6 {
            for m in -j..=j {
                assert_relative_eq!(clebsch_gordan(j, m, 0, 0, j, m).unwrap(), 1.0, max_relative = 1e-14);
            }
        }
        assert_eq!(clebsch_gordan(1, 1, 1, 0, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn dmatrix_examples() {
        let v = dmatrix_element(st(0, 0, 0), 1, 0, 0, st(1, 0, 0)).unwrap();
        assert_relative_eq!(v, 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        assert_eq!(dmatrix_element(st(0, 0, 0), 1, 1, 0, st(1, 0, 0)).unwrap(), 0.0);
        let v = dmatrix_element(st(2, 0, 0), 1, 0, 0, st(1, 0, 0)).unwrap();
        assert_relative_eq!(v, 2.0 / 15f64.sqrt(), max_relative = 1e-14);
        assert!(dmatrix_element(st(0, 0, 0), 1, 2, 0, st(1, 0, 0)).is_err());
    }

    #[test]
    fn spherical_examples() {
        let z = cartesian_to_spherical_real([0.0, 0.0, 1.0]);
        assert_eq!(z.minus, Complex64::zero());
        assert_eq!(z.zero, Complex64::new(1.0, 0.0));
        assert_eq!(z.plus, Complex64::zero());
        let x = cartesian_to_spherical_real([1.0, 0.0, 0.0]);
        assert_relative_eq!(x.minus.re, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(x.plus.re, -1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(x.zero, Complex64::zero());

        let back = spherical_to_cartesian(x);
        assert!((back[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(back[1].norm() < 1e-15 && back[2].norm() < 1e-15);
        let zero = spherical_to_cartesian(cartesian_to_spherical_real([0.0; 3]));
        assert!(zero.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn real_vector_has_conjugate_symmetric_components() {
        let s = cartesian_to_spherical_real([0.3, -1.2, 0.7]);
        assert_eq!(s.zero.im, 0.0);
        assert!((s.plus + s.minus.conj()).norm() < 1e-15);
    }

    #[test]
    fn rank2_coefficients() {
        assert_relative_eq!(rank2_product_coefficient(0, 0), (2.0f64 / 3.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(rank2_product_coefficient(2, 1), 1.0, max_relative = 1e-14);
        assert_relative_eq!(rank2_product_coefficient(0, 1), 1.0 / 6f64.sqrt(), max_relative = 1e-14);
        assert_eq!(rank2_product_coefficient(2, -1), 0.0);
        assert_eq!(rank2_product_coefficient(3, 1), 0.0);
    }
}

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::scalar::Scalar;
use super::Parity;
use crate::basis::{BasisSet, RotorState};
use crate::hamiltonian::rotor_element;
use crate::molecule::RotorModel;

/// Dominant-component weight below which a label is reported as uncertain.
pub const LABEL_CERTAINTY: f64 = 0.5;

/// Single-rotor asymmetric-top eigenvectors per `j`, columns ordered by
/// ascending energy so that column `c` carries `τ = c - j`.
#[derive(Debug, Clone)]
pub struct TauTable {
    /// `vectors[j]` is `(2j+1)²`, column-major, rows indexed by `k + j`.
    vectors: Vec<Vec<f64>>,
}

impl TauTable {
    pub fn new(model: &RotorModel, j_max: u32) -> Self {
        let vectors = (0..=j_max)
            .map(|j| {
                let n = (2 * j + 1) as usize;
                let ji = j as i32;
                let mut h = vec![0.0; n * n];
                for (r, kr) in (-ji..=ji).enumerate() {
                    for (c, kc) in (-ji..=ji).enumerate() {
                        h[r + c * n] = rotor_element(model, &RotorState::new(j, kr, 0), &RotorState::new(j, kc, 0));
                    }
                }
                f64::eigh(n, &h).1
            })
            .collect();
        TauTable { vectors }
    }

    /// Amplitudes `<j τ m|ψ>` for all τ given `<j k m|ψ>` for `k = -j..j`.
    fn project(&self, j: u32, amplitudes: &[Complex64]) -> Vec<Complex64> {
        let n = amplitudes.len();
        let u = &self.vectors[j as usize];
        (0..n)
            .map(|tau| (0..n).map(|k| amplitudes[k] * u[k + tau * n]).sum())
            .collect()
    }

    fn transform_pair(&self, j1: u32, j2: u32, c: &[Complex64]) -> Vec<Complex64> {
        // c is (2j1+1) x (2j2+1) row-major in (k1, k2)
        let (n1, n2) = ((2 * j1 + 1) as usize, (2 * j2 + 1) as usize);
        let mut half = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k1 in 0..n1 {
            let row = self.project(j2, &c[k1 * n2..(k1 + 1) * n2]);
            half[k1 * n2..(k1 + 1) * n2].copy_from_slice(&row);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for t2 in 0..n2 {
            let col: Vec<Complex64> = (0..n1).map(|k1| half[k1 * n2 + t2]).collect();
            for (t1, v) in self.project(j1, &col).into_iter().enumerate() {
                out[t1 * n2 + t2] = v;
            }
        }
        out
    }
}

/// How states are labelled.
#[derive(Debug, Clone)]
pub enum LabelScheme {
    /// `(j̄, m̄, P)`.
    Linear,
    /// `(j̄, k, m̄, P)` with `k = k1 + k2`.
    Symmetric,
    /// `(j̄, τ̄, m̄, P)` with `τ = τ1 + τ2`.
    Asymmetric(TauTable),
    /// `j̄` only.
    JOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateLabel {
    pub j: u32,
    pub k: Option<i32>,
    pub tau: Option<i32>,
    pub m: Option<i32>,
    pub parity: Parity,
    /// Weight of the dominant `(j, k|τ, m)` component.
    pub weight: f64,
}

impl StateLabel {
    pub fn is_certain(&self) -> bool {
        self.weight >= LABEL_CERTAINTY
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{}", self.j)?;
        if let Some(k) = self.k {
            write!(f, ".k{k}")?;
        }
        if let Some(t) = self.tau {
            write!(f, ".tau{t}")?;
        }
        if let Some(m) = self.m {
            write!(f, ".m{m}")?;
        }
        match self.parity {
            Parity::Even => f.write_str(".P+")?,
            Parity::Odd => f.write_str(".P-")?,
            Parity::Mixed => f.write_str(".P?")?,
            Parity::NotApplicable => {}
        }
        if !self.is_certain() {
            f.write_str("?")?;
        }
        Ok(())
    }
}

type Key = (u32, i32, i32);

fn accumulate(weights: &mut BTreeMap<Key, f64>, key: Key, w: f64) {
    if w > 0.0 {
        *weights.entry(key).or_insert(0.0) += w;
    }
}

/// Label a state from its dominant component over `basis`.
pub fn label_state(basis: &BasisSet, vector: &[Complex64], scheme: &LabelScheme, parity: Parity) -> StateLabel {
    let mut weights: BTreeMap<Key, f64> = BTreeMap::new();
    let single = basis.single_states();
    match scheme {
        LabelScheme::Asymmetric(table) => {
            if basis.is_pair() {
                let jm = basis.j_max();
                for j1 in 0..=jm {
                    for j2 in 0..=jm {
                        let (i1, i2) = (j1 as i32, j2 as i32);
                        let (n1, n2) = ((2 * j1 + 1) as usize, (2 * j2 + 1) as usize);
                        for m1 in -i1..=i1 {
                            for m2 in -i2..=i2 {
                                let mut c = vec![Complex64::new(0.0, 0.0); n1 * n2];
                                let mut any = false;
                                for (a, k1) in (-i1..=i1).enumerate() {
                                    for (b, k2) in (-i2..=i2).enumerate() {
                                        let sa = basis.single_index(&RotorState::new(j1, k1, m1));
                                        let sb = basis.single_index(&RotorState::new(j2, k2, m2));
                                        if let (Some(sa), Some(sb)) = (sa, sb) {
                                            if let Some(idx) = basis.pair_index_of_factors(sa, sb) {
                                                c[a * n2 + b] = vector[idx];
                                                any = true;
                                            }
                                        }
                                    }
                                }
                                if !any {
                                    continue;
                                }
                                let d = table.transform_pair(j1, j2, &c);
                                for t1 in 0..n1 {
                                    for t2 in 0..n2 {
                                        let tau = t1 as i32 - i1 + t2 as i32 - i2;
                                        accumulate(&mut weights, (j1 + j2, tau, m1 + m2), d[t1 * n2 + t2].norm_sqr());
                                    }
                                }
                            }
                        }
                    }
                }
            } else {
                for j in 0..=basis.j_max() {
                    let ji = j as i32;
                    for m in -ji..=ji {
                        let amps: Vec<Complex64> = (-ji..=ji)
                            .map(|k| {
                                basis.single_index(&RotorState::new(j, k, m)).map_or(Complex64::new(0.0, 0.0), |i| vector[i])
                            })
                            .collect();
                        for (t, a) in table.project(j, &amps).into_iter().enumerate() {
                            accumulate(&mut weights, (j, t as i32 - ji, m), a.norm_sqr());
                        }
                    }
                }
            }
        }
        _ => {
            let with_k = matches!(scheme, LabelScheme::Symmetric);
            let with_m = !matches!(scheme, LabelScheme::JOnly);
            for (i, c) in vector.iter().enumerate() {
                let (j, k, m) = if basis.is_pair() {
                    let (a, b) = basis.pair_factors(i);
                    let (s1, s2) = (single[a], single[b]);
                    (s1.j + s2.j, s1.k + s2.k, s1.m + s2.m)
                } else {
                    let s = single[i];
                    (s.j, s.k, s.m)
                };
                let key = (j, if with_k { k } else { 0 }, if with_m { m } else { 0 });
                accumulate(&mut weights, key, c.norm_sqr());
            }
        }
    }
    let (&(j, kt, m), &weight) = weights
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
        .unwrap_or((&(0, 0, 0), &0.0));
    StateLabel {
        j,
        k: matches!(scheme, LabelScheme::Symmetric).then_some(kt),
        tau: matches!(scheme, LabelScheme::Asymmetric(_)).then_some(kt),
        m: (!matches!(scheme, LabelScheme::JOnly)).then_some(m),
        parity: if basis.is_pair() { parity } else { Parity::NotApplicable },
        weight,
    }
}

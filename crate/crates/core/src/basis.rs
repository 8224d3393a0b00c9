//! Truncated symmetric-top bases for one and two rotors.
//!
//! States are ordered lexicographically in `(j, k, m)` for a single rotor and
//! in `(j1, k1, m1, j2, k2, m2)` for a pair, so a pair ordinal is determined
//! by the ordinals of its two single-rotor factors.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::molecule::RotorClass;

/// Symmetric-top state `|j k m>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RotorState {
    pub j: u32,
    pub k: i32,
    pub m: i32,
}

impl RotorState {
    pub fn new(j: u32, k: i32, m: i32) -> Self {
        RotorState { j, k, m }
    }

    pub fn is_valid(&self) -> bool {
        let j = self.j as i32;
        self.k.abs() <= j && self.m.abs() <= j
    }
}

impl fmt::Display for RotorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{} {} {}>", self.j, self.k, self.m)
    }
}

/// Two-rotor product state `|j1 k1 m1, j2 k2 m2>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairState {
    pub s1: RotorState,
    pub s2: RotorState,
}

impl PairState {
    pub fn new(s1: RotorState, s2: RotorState) -> Self {
        PairState { s1, s2 }
    }

    pub fn swapped(&self) -> PairState {
        PairState { s1: self.s2, s2: self.s1 }
    }

    pub fn m_total(&self) -> i32 {
        self.s1.m + self.s2.m
    }

    pub fn k_total(&self) -> i32 {
        self.s1.k + self.s2.k
    }
}

/// Optional conserved-quantity constraint on a pair basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Sector {
    pub m_total: Option<i32>,
    pub k_total: Option<i32>,
}

impl Sector {
    pub const NONE: Sector = Sector { m_total: None, k_total: None };

    pub fn m(m_total: i32) -> Sector {
        Sector { m_total: Some(m_total), k_total: None }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.m_total.is_none() && self.k_total.is_none()
    }

    fn admits(&self, p: &PairState) -> bool {
        self.m_total.is_none_or(|m| p.m_total() == m) && self.k_total.is_none_or(|k| p.k_total() == k)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.m_total, self.k_total) {
            (None, None) => f.write_str("-"),
            (Some(m), None) => write!(f, "m={m}"),
            (None, Some(k)) => write!(f, "k={k}"),
            (Some(m), Some(k)) => write!(f, "m={m}/k={k}"),
        }
    }
}

const ABSENT: u32 = u32::MAX;

/// Ordered, indexed basis for one rotor or for a pair of rotors.
#[derive(Debug, Clone)]
pub struct BasisSet {
    class: RotorClass,
    j_max: u32,
    sector: Sector,
    single: Vec<RotorState>,
    /// Pair ordinals as (single, single) ordinals; empty for single-rotor bases.
    pairs: Vec<(u32, u32)>,
    /// Dense map from `a * n_single + b` to pair ordinal.
    pair_lookup: Vec<u32>,
}

fn enumerate_single(linear: bool, j_max: u32) -> Vec<RotorState> {
    let mut out = Vec::new();
    for j in 0..=j_max {
        let ji = j as i32;
        let k_range = if linear { 0..=0 } else { -ji..=ji };
        for k in k_range {
            for m in -ji..=ji {
                out.push(RotorState { j, k, m });
            }
        }
    }
    out
}

/// Dimension of the single-rotor basis up to `j_max`.
pub fn single_dimension(linear: bool, j_max: u32) -> usize {
    (0..=j_max as usize)
        .map(|j| if linear { 2 * j + 1 } else { (2 * j + 1) * (2 * j + 1) })
        .sum()
}

/// Single-rotor basis of all states with `j <= j_max`.
pub fn build_single_basis(class: RotorClass, j_max: u32) -> BasisSet {
    let single = enumerate_single(class == RotorClass::Linear, j_max);
    BasisSet { class, j_max, sector: Sector::NONE, single, pairs: Vec::new(), pair_lookup: Vec::new() }
}

/// Two-rotor product basis, optionally restricted to a sector.
pub fn build_pair_basis(class: RotorClass, j_max: u32, sector: Sector) -> Result<BasisSet> {
    if sector.k_total.is_some() && class == RotorClass::Asymmetric {
        return Err(Error::Basis("k_total is not conserved for asymmetric tops".into()));
    }
    let single = enumerate_single(class == RotorClass::Linear, j_max);
    let n = single.len();
    let mut pairs = Vec::new();
    let mut pair_lookup = vec![ABSENT; n * n];
    for (a, s1) in single.iter().enumerate() {
        for (b, s2) in single.iter().enumerate() {
            if sector.admits(&PairState::new(*s1, *s2)) {
                pair_lookup[a * n + b] = pairs.len() as u32;
                pairs.push((a as u32, b as u32));
            }
        }
    }
    Ok(BasisSet { class, j_max, sector, single, pairs, pair_lookup })
}

impl BasisSet {
    pub fn class(&self) -> RotorClass {
        self.class
    }

    pub fn is_linear(&self) -> bool {
        self.class == RotorClass::Linear
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn is_pair(&self) -> bool {
        !self.pair_lookup.is_empty()
    }

    pub fn dim(&self) -> usize {
        if self.is_pair() {
            self.pairs.len()
        } else {
            self.single.len()
        }
    }

    /// The underlying single-rotor states (all `j <= j_max`).
    pub fn single_states(&self) -> &[RotorState] {
        &self.single
    }

    /// Ordinal of a single-rotor state in [`Self::single_states`].
    pub fn single_index(&self, s: &RotorState) -> Option<usize> {
        if !s.is_valid() || s.j > self.j_max {
            return None;
        }
        let j = s.j as usize;
        let ji = s.j as i32;
        if self.is_linear() {
            if s.k != 0 {
                return None;
            }
            Some(j * j + (s.m + ji) as usize)
        } else {
            // sum_{j' < j} (2j'+1)^2 = j (2j-1)(2j+1) / 3
            let offset = j * (2 * j + 1) * (2 * j).saturating_sub(1) / 3;
            Some(offset + (s.k + ji) as usize * (2 * j + 1) + (s.m + ji) as usize)
        }
    }

    pub fn single_state(&self, i: usize) -> RotorState {
        self.single[i]
    }

    /// Single-rotor ordinals of pair state `i`.
    pub fn pair_factors(&self, i: usize) -> (usize, usize) {
        let (a, b) = self.pairs[i];
        (a as usize, b as usize)
    }

    pub fn pair_state(&self, i: usize) -> PairState {
        let (a, b) = self.pair_factors(i);
        PairState::new(self.single[a], self.single[b])
    }

    /// Pair ordinal from single-rotor ordinals, if the state is in this basis.
    pub fn pair_index_of_factors(&self, a: usize, b: usize) -> Option<usize> {
        let n = self.single.len();
        if a >= n || b >= n {
            return None;
        }
        match self.pair_lookup[a * n + b] {
            ABSENT => None,
            idx => Some(idx as usize),
        }
    }

    pub fn pair_index(&self, p: &PairState) -> Option<usize> {
        let a = self.single_index(&p.s1)?;
        let b = self.single_index(&p.s2)?;
        self.pair_index_of_factors(a, b)
    }

    pub fn states(&self) -> Vec<PairState> {
        (0..self.pairs.len()).map(|i| self.pair_state(i)).collect()
    }

    pub fn m_total(&self, i: usize) -> i32 {
        if self.is_pair() {
            self.pair_state(i).m_total()
        } else {
            self.single[i].m
        }
    }

    pub fn k_total(&self, i: usize) -> i32 {
        if self.is_pair() {
            self.pair_state(i).k_total()
        } else {
            self.single[i].k
        }
    }

    /// Total `j1 + j2` (or `j`) of state `i`.
    pub fn j_total(&self, i: usize) -> u32 {
        if self.is_pair() {
            let p = self.pair_state(i);
            p.s1.j + p.s2.j
        } else {
            self.single[i].j
        }
    }

    /// Split a pair basis into sub-bases of fixed `m_total` and/or `k_total`.
    ///
    /// Each block carries its states' ordinals in `self`, in ascending order.
    pub fn sector_blocks(&self, by_m: bool, by_k: bool) -> Result<Vec<SectorBlock>> {
        if !self.is_pair() {
            return Err(Error::Basis("sector blocking requires a pair basis".into()));
        }
        if by_k && self.class == RotorClass::Asymmetric {
            return Err(Error::Basis("k_total is not conserved for asymmetric tops".into()));
        }
        let mut groups: BTreeMap<Sector, Vec<usize>> = BTreeMap::new();
        for i in 0..self.dim() {
            let p = self.pair_state(i);
            let key = Sector {
                m_total: if by_m { Some(p.m_total()) } else { self.sector.m_total },
                k_total: if by_k { Some(p.k_total()) } else { self.sector.k_total },
            };
            groups.entry(key).or_default().push(i);
        }
        let n = self.single.len();
        Ok(groups
            .into_iter()
            .map(|(sector, parent_indices)| {
                let mut pair_lookup = vec![ABSENT; n * n];
                let pairs: Vec<(u32, u32)> = parent_indices.iter().map(|&i| self.pairs[i]).collect();
                for (idx, &(a, b)) in pairs.iter().enumerate() {
                    pair_lookup[a as usize * n + b as usize] = idx as u32;
                }
                SectorBlock {
                    basis: BasisSet {
                        class: self.class,
                        j_max: self.j_max,
                        sector,
                        single: self.single.clone(),
                        pairs,
                        pair_lookup,
                    },
                    parent_indices,
                }
            })
            .collect())
    }
}

/// A sector sub-basis together with its embedding into the parent basis.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub basis: BasisSet,
    pub parent_indices: Vec<usize>,
}

/// Permutation mapping the ordinal of `(s1, s2)` to that of `(s2, s1)`.
pub fn exchange_permutation(basis: &BasisSet) -> Result<Vec<usize>> {
    if !basis.is_pair() {
        return Err(Error::Basis("exchange permutation needs a pair basis".into()));
    }
    (0..basis.dim())
        .map(|i| {
            let (a, b) = basis.pair_factors(i);
            basis.pair_index_of_factors(b, a).ok_or_else(|| {
                Error::Basis(format!("sector {} is not closed under exchange", basis.sector()))
            })
        })
        .collect()
}

//! Matrix elements of the rotational, Stark and dipole-dipole terms and
//! sparse Hermitian assembly over a [`BasisSet`].
//!
//! Everything is dimensionless: energies in units of the first molecule's
//! middle rotational constant, separations in its `r_B`, dipoles in its `|d|`
//! and the field as `ε = dE/B`. The intermolecular axis is the laboratory `Z`
//! axis and the field lies in the `XZ` plane at angle `θ` from `Z`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::angular::dmatrix_element;
use crate::basis::{BasisSet, PairState, RotorState};
use crate::error::{Error, Result};
use crate::molecule::{MoleculeSpec, RotorModel};

/// Static field `ε (cosθ e_Z + sinθ e_X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub epsilon: f64,
    pub theta_deg: f64,
}

impl FieldConfig {
    pub fn new(epsilon: f64, theta_deg: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Hamiltonian(format!("field magnitude must be finite and >= 0, got {epsilon}")));
        }
        if !theta_deg.is_finite() {
            return Err(Error::Hamiltonian("field angle must be finite".into()));
        }
        Ok(FieldConfig { epsilon, theta_deg })
    }

    pub fn zero() -> Self {
        FieldConfig { epsilon: 0.0, theta_deg: 0.0 }
    }

    pub fn along_z(epsilon: f64) -> Self {
        FieldConfig { epsilon, theta_deg: 0.0 }
    }

    /// True when `M_total` is conserved: zero field or a field along `±Z`.
    pub fn conserves_m(&self) -> bool {
        self.epsilon == 0.0 || self.theta_deg.rem_euclid(180.0) == 0.0
    }

    /// Cartesian `(E_X, E_Y, E_Z)`; exact zeros are kept exact at the axes.
    pub fn cartesian(&self) -> [f64; 3] {
        let t = self.theta_deg.rem_euclid(360.0);
        let (s, c) = if t == 0.0 {
            (0.0, 1.0)
        } else if t == 90.0 {
            (1.0, 0.0)
        } else if t == 180.0 {
            (0.0, -1.0)
        } else if t == 270.0 {
            (-1.0, 0.0)
        } else {
            t.to_radians().sin_cos()
        };
        [self.epsilon * s, 0.0, self.epsilon * c]
    }

    /// Laboratory spherical component `E_p`, `p` in `-1..=1`.
    pub fn spherical(&self, p: i32) -> f64 {
        let [x, _, z] = self.cartesian();
        match p {
            0 => z,
            1 => -x / std::f64::consts::SQRT_2,
            -1 => x / std::f64::consts::SQRT_2,
            _ => 0.0,
        }
    }
}

fn f_pm(j: u32, k: i32, sign: i32) -> f64 {
    let jj = f64::from(j) * f64::from(j + 1);
    let k = f64::from(k);
    let s = f64::from(sign);
    let a = jj - k * (k + s);
    let b = jj - (k + s) * (k + 2.0 * s);
    (a.max(0.0) * b.max(0.0)).sqrt()
}

/// `<bra|H_rot|ket>` for a dimensionless rotor model.
pub fn rotor_element(model: &RotorModel, bra: &RotorState, ket: &RotorState) -> f64 {
    if bra.j != ket.j || bra.m != ket.m {
        return 0.0;
    }
    let jj = f64::from(bra.j) * f64::from(bra.j + 1);
    let [x, y, z] = model.constants;
    if model.linear {
        return if bra.k == 0 && ket.k == 0 { x * jj } else { 0.0 };
    }
    let dk = bra.k - ket.k;
    if dk == 0 {
        let k2 = f64::from(ket.k * ket.k);
        0.5 * (x + y) * (jj - k2) + z * k2
    } else if dk.abs() == 2 && x != y {
        0.25 * (x - y) * f_pm(ket.j, ket.k, dk.signum())
    } else {
        0.0
    }
}

/// `<bra|H_rot|ket>` in units of the molecule's own middle constant.
pub fn h_rot_element(spec: &MoleculeSpec, bra: &RotorState, ket: &RotorState) -> f64 {
    rotor_element(&spec.rotor_model(), bra, ket)
}

/// Laboratory spherical dipole element `<bra|d_p|ket> = Σ_q D^{1*}_{p q} d_q`.
pub fn dipole_element(model: &RotorModel, p: i32, bra: &RotorState, ket: &RotorState) -> Complex64 {
    let q = bra.k - ket.k;
    if q.abs() > 1 || bra.m != ket.m + p || (bra.j as i32 - ket.j as i32).abs() > 1 {
        return Complex64::zero();
    }
    let dq = model.dipole_component(q);
    if dq.is_zero() {
        return Complex64::zero();
    }
    let d = dmatrix_element(*bra, 1, p, q, *ket).expect("rank-1 indices are in range");
    dq * d
}

/// `<bra|H_dc|ket> = -Σ_p (-1)^p <bra|d_p|ket> E_{-p}`.
pub fn stark_element(model: &RotorModel, field: &FieldConfig, bra: &RotorState, ket: &RotorState) -> Complex64 {
    let p = bra.m - ket.m;
    if p.abs() > 1 {
        return Complex64::zero();
    }
    let e = field.spherical(-p);
    if e == 0.0 {
        return Complex64::zero();
    }
    let sign = if p == 0 { 1.0 } else { -1.0 };
    -dipole_element(model, p, bra, ket) * (sign * e)
}

/// `<bra|H_dc|ket>` in the molecule's own units.
pub fn h_dc_element(spec: &MoleculeSpec, field: &FieldConfig, bra: &RotorState, ket: &RotorState) -> Complex64 {
    stark_element(&spec.rotor_model(), field, bra, ket)
}

fn dd_coefficient(p: i32, r: f64) -> f64 {
    let w = if p == 0 { 2.0 } else { 1.0 };
    -w / (r * r * r)
}

/// `<bra|H_dd|ket>` for two dimensionless rotor models at separation `r` along `Z`.
pub fn dipole_dipole_element(
    m1: &RotorModel,
    m2: &RotorModel,
    r: f64,
    bra: &PairState,
    ket: &PairState,
) -> Result<Complex64> {
    check_separation(r)?;
    let p = bra.s1.m - ket.s1.m;
    if p.abs() > 1 || bra.s2.m - ket.s2.m != -p {
        return Ok(Complex64::zero());
    }
    let a = dipole_element(m1, p, &bra.s1, &ket.s1);
    if a.is_zero() {
        return Ok(Complex64::zero());
    }
    let b = dipole_element(m2, -p, &bra.s2, &ket.s2);
    Ok(a * b * dd_coefficient(p, r))
}

/// `<bra|H_dd|ket>` with the two specs expressed in the first molecule's units.
pub fn h_dd_element(spec1: &MoleculeSpec, spec2: &MoleculeSpec, r: f64, bra: &PairState, ket: &PairState) -> Result<Complex64> {
    let (m1, m2) = pair_models(spec1, spec2);
    dipole_dipole_element(&m1, &m2, r, bra, ket)
}

/// Rotor models of a pair in the units of the first molecule.
pub fn pair_models(spec1: &MoleculeSpec, spec2: &MoleculeSpec) -> (RotorModel, RotorModel) {
    let (b, d) = (spec1.b_ghz, spec1.dipole_magnitude());
    (spec1.rotor_model_in_units(b, d), spec2.rotor_model_in_units(b, d))
}

fn check_separation(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Hamiltonian(format!("separation must be finite and > 0, got {r}")));
    }
    Ok(())
}

/// Hermitian matrix stored as its upper triangle (including the diagonal) in
/// canonical `(row, col)` order with exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    real: bool,
}

impl SparseHermitian {
    /// Build from arbitrary `(row, col, value)` entries. Entries below the
    /// diagonal are conjugated onto the upper triangle; duplicates are summed.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        let mut upper: Vec<(u32, u32, Complex64)> = Vec::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::Hamiltonian(format!("entry ({r}, {c}) outside dimension {dim}")));
            }
            if r <= c {
                upper.push((r as u32, c as u32, v));
            } else {
                upper.push((c as u32, r as u32, v.conj()));
            }
        }
        upper.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows = Vec::with_capacity(upper.len());
        let mut cols = Vec::with_capacity(upper.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(upper.len());
        for (r, c, v) in upper {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("non-empty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        Ok(Self::from_sorted(dim, rows, cols, vals))
    }

    fn from_sorted(dim: usize, rows: Vec<u32>, cols: Vec<u32>, vals: Vec<Complex64>) -> Self {
        let keep: Vec<bool> = vals.iter().map(|v| !v.is_zero()).collect();
        let filter = |xs: Vec<u32>| xs.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect();
        let rows: Vec<u32> = filter(rows);
        let cols: Vec<u32> = filter(cols);
        let vals: Vec<Complex64> = vals.into_iter().filter(|v| !v.is_zero()).collect();
        let real = vals.iter().all(|v| v.im == 0.0);
        SparseHermitian { dim, rows, cols, vals, real }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseHermitian { dim, rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), real: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// True when every stored value has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Stored upper-triangle entries `(row, col, value)` with `row <= col`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.vals)
            .map(|((&r, &c), &v)| (r as usize, c as usize, v))
    }

    /// Element `H[i][j]`, reconstructing the lower triangle by conjugation.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (r, c, conj) = if i <= j { (i, j, false) } else { (j, i, true) };
        let start = self.rows.partition_point(|&x| (x as usize) < r);
        let end = self.rows.partition_point(|&x| (x as usize) <= r);
        match self.cols[start..end].binary_search(&(c as u32)) {
            Ok(pos) => {
                let v = self.vals[start + pos];
                if conj {
                    v.conj()
                } else {
                    v
                }
            }
            Err(_) => Complex64::zero(),
        }
    }

    /// Full dense matrix in row-major order.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::zero(); n * n];
        for (r, c, v) in self.entries() {
            out[r * n + c] = v;
            if r != c {
                out[c * n + r] = v.conj();
            }
        }
        out
    }

    /// Largest `|H_ii - conj(H_ii)|`; the only place a stored triangle can
    /// break Hermiticity.
    pub fn diagonal_imaginary_residual(&self) -> f64 {
        self.entries().filter(|(r, c, _)| r == c).map(|(_, _, v)| 2.0 * v.im.abs()).fold(0.0, f64::max)
    }

    /// `y = H x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::zero(); self.dim];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
            if r != c {
                y[c] += v.conj() * x[r];
            }
        }
        y
    }

    /// Principal submatrix on `indices` (which must be ascending).
    pub fn submatrix(&self, indices: &[usize]) -> SparseHermitian {
        let mut map = vec![u32::MAX; self.dim];
        for (new, &old) in indices.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (r, c, v) in self.entries() {
            let (nr, nc) = (map[r], map[c]);
            if nr != u32::MAX && nc != u32::MAX {
                rows.push(nr);
                cols.push(nc);
                vals.push(v);
            }
        }
        SparseHermitian::from_sorted(indices.len(), rows, cols, vals)
    }

    /// Gershgorin lower bound on the smallest eigenvalue.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let mut diag = vec![0.0; self.dim];
        let mut radius = vec![0.0; self.dim];
        for (r, c, v) in self.entries() {
            if r == c {
                diag[r] = v.re;
            } else {
                radius[r] += v.norm();
                radius[c] += v.norm();
            }
        }
        diag.iter().zip(&radius).map(|(d, s)| d - s).fold(f64::INFINITY, f64::min)
    }

    /// Write the coordinate dump: `#` header lines followed by one
    /// `row col real imag` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W, params: &[(String, String)]) -> Result<()> {
        writeln!(w, "# rotorspec coordinate matrix (upper triangle, 0-based, Hermitian)")?;
        writeln!(w, "# dim {}", self.dim)?;
        writeln!(w, "# nnz {}", self.nnz())?;
        writeln!(w, "# real {}", self.real)?;
        for (k, v) in params {
            writeln!(w, "# param {k} {v}")?;
        }
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Read a coordinate dump written by [`Self::write_coordinate`].
    pub fn read_coordinate<R: BufRead>(r: R) -> Result<(SparseHermitian, Vec<(String, String)>)> {
        let mut dim = None;
        let mut params = Vec::new();
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |msg: &str| Error::MatrixFile(format!("line {}: {msg}", lineno + 1));
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.trim().splitn(3, ' ');
                match (parts.next(), parts.next(), parts.next()) {
                    (Some("dim"), Some(n), None) => dim = Some(n.parse::<usize>().map_err(|_| bad("bad dim"))?),
                    (Some("param"), Some(k), v) => params.push((k.to_string(), v.unwrap_or("").to_string())),
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("expected 'row col real imag'"));
            }
            let row: usize = f[0].parse().map_err(|_| bad("bad row"))?;
            let col: usize = f[1].parse().map_err(|_| bad("bad col"))?;
            let re: f64 = f[2].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = f[3].parse().map_err(|_| bad("bad imaginary part"))?;
            entries.push((row, col, Complex64::new(re, im)));
        }
        let dim = dim.ok_or_else(|| Error::MatrixFile("missing '# dim' header".into()))?;
        Ok((SparseHermitian::from_entries(dim, entries)?, params))
    }
}

/// Nonzero single-rotor matrix elements by row: `rows[a] = [(a', <a|O|a'>)]`.
pub type OperatorRows = Vec<Vec<(u32, Complex64)>>;

fn candidate_kets(basis: &BasisSet, bra: &RotorState, dm: i32, dj_max: i32, dk: &[i32]) -> Vec<usize> {
    let mut out = Vec::new();
    for dj in -dj_max..=dj_max {
        let j = bra.j as i32 + dj;
        if j < 0 {
            continue;
        }
        for &q in dk {
            let ket = RotorState::new(j as u32, bra.k - q, bra.m - dm);
            if let Some(idx) = basis.single_index(&ket) {
                out.push(idx);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Rows of the laboratory dipole component `d_p` on the single-rotor states of `basis`.
pub fn dipole_rows(model: &RotorModel, basis: &BasisSet, p: i32) -> OperatorRows {
    let states = basis.single_states();
    let qs: Vec<i32> = (-1..=1).filter(|&q| !model.dipole_component(q).is_zero()).collect();
    states
        .iter()
        .map(|bra| {
            candidate_kets(basis, bra, p, 1, &qs)
                .into_iter()
                .filter_map(|b| {
                    let v = dipole_element(model, p, bra, &states[b]);
                    (!v.is_zero()).then_some((b as u32, v))
                })
                .collect()
        })
        .collect()
}

/// Rows of the single-rotor `H_rot + H_dc` on the single-rotor states of `basis`.
pub fn single_rows(model: &RotorModel, field: &FieldConfig, basis: &BasisSet) -> OperatorRows {
    let states = basis.single_states();
    let dipole: Vec<OperatorRows> = (-1..=1).map(|p| dipole_rows(model, basis, p)).collect();
    states
        .iter()
        .enumerate()
        .map(|(a, bra)| {
            let mut row: Vec<(u32, Complex64)> = Vec::new();
            for b in candidate_kets(basis, bra, 0, 0, &[-2, 0, 2]) {
                let v = rotor_element(model, bra, &states[b]);
                if v != 0.0 {
                    row.push((b as u32, Complex64::new(v, 0.0)));
                }
            }
            for p in -1..=1 {
                let e = field.spherical(-p);
                if e == 0.0 {
                    continue;
                }
                let sign = if p == 0 { -1.0 } else { 1.0 };
                for &(b, d) in &dipole[(p + 1) as usize][a] {
                    row.push((b, d * (sign * e)));
                }
            }
            merge_row(row)
        })
        .collect()
}

fn merge_row(mut row: Vec<(u32, Complex64)>) -> Vec<(u32, Complex64)> {
    row.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(u32, Complex64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

fn check_sector_policy(basis: &BasisSet, m1: &RotorModel, m2: &RotorModel, field: &FieldConfig) -> Result<()> {
    let sector = basis.sector();
    if sector.m_total.is_some() && !field.conserves_m() {
        return Err(Error::SectorPolicy(format!(
            "an m_total sector needs a field along Z or zero field, got θ = {}°",
            field.theta_deg
        )));
    }
    if sector.k_total.is_some() && !(m1.conserves_k() && m2.conserves_k()) {
        return Err(Error::SectorPolicy("a k_total sector needs k-conserving rotors".into()));
    }
    Ok(())
}

fn check_models(basis: &BasisSet, models: &[&RotorModel]) -> Result<()> {
    for m in models {
        if m.linear != basis.is_linear() {
            return Err(Error::Hamiltonian("rotor model and basis disagree on linearity".into()));
        }
    }
    Ok(())
}

/// Pair Hamiltonian from dimensionless rotor models.
pub fn assemble_models(
    m1: &RotorModel,
    m2: &RotorModel,
    r: f64,
    field: &FieldConfig,
    basis: &BasisSet,
) -> Result<SparseHermitian> {
    check_separation(r)?;
    if !basis.is_pair() {
        return Err(Error::Hamiltonian("pair assembly needs a pair basis".into()));
    }
    check_models(basis, &[m1, m2])?;
    check_sector_policy(basis, m1, m2, field)?;

    let h1 = single_rows(m1, field, basis);
    let h2 = single_rows(m2, field, basis);
    let d1: Vec<OperatorRows> = (-1..=1).map(|p| dipole_rows(m1, basis, p)).collect();
    let d2: Vec<OperatorRows> = (-1..=1).map(|p| dipole_rows(m2, basis, p)).collect();

    let row_entries: Vec<Vec<(u32, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|i| {
            let (a, b) = basis.pair_factors(i);
            let mut row = Vec::new();
            let mut push = |a2: usize, b2: usize, v: Complex64| {
                if let Some(j) = basis.pair_index_of_factors(a2, b2) {
                    if j >= i {
                        row.push((j as u32, v));
                    }
                }
            };
            for &(a2, v) in &h1[a] {
                push(a2 as usize, b, v);
            }
            for &(b2, v) in &h2[b] {
                push(a, b2 as usize, v);
            }
            for p in -1..=1i32 {
                let c = dd_coefficient(p, r);
                for &(a2, v1) in &d1[(p + 1) as usize][a] {
                    for &(b2, v2) in &d2[(1 - p) as usize][b] {
                        push(a2 as usize, b2 as usize, v1 * v2 * c);
                    }
                }
            }
            merge_row(row)
        })
        .collect();

    let nnz = row_entries.iter().map(Vec::len).sum();
    let mut rows = Vec::with_capacity(nnz);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for (i, row) in row_entries.into_iter().enumerate() {
        for (c, v) in row {
            rows.push(i as u32);
            cols.push(c);
            vals.push(v);
        }
    }
    Ok(SparseHermitian::from_sorted(basis.dim(), rows, cols, vals))
}

/// Pair Hamiltonian `H_rot⊗1 + 1⊗H_rot + H_dc⊗1 + 1⊗H_dc + H_dd`.
pub fn assemble(
    spec1: &MoleculeSpec,
    spec2: &MoleculeSpec,
    r: f64,
    field: &FieldConfig,
    basis: &BasisSet,
) -> Result<SparseHermitian> {
    let (m1, m2) = pair_models(spec1, spec2);
    assemble_models(&m1, &m2, r, field, basis)
}

/// Single-rotor Hamiltonian from a dimensionless model.
pub fn single_assemble_model(model: &RotorModel, field: &FieldConfig, basis: &BasisSet) -> Result<SparseHermitian> {
    if basis.is_pair() {
        return Err(Error::Hamiltonian("single-molecule assembly needs a single-rotor basis".into()));
    }
    check_models(basis, &[model])?;
    let rows = single_rows(model, field, basis);
    let mut rs = Vec::new();
    let mut cs = Vec::new();
    let mut vs = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        for (c, v) in row {
            if c as usize >= i {
                rs.push(i as u32);
                cs.push(c);
                vs.push(v);
            }
        }
    }
    Ok(SparseHermitian::from_sorted(basis.dim(), rs, cs, vs))
}

/// Single-rotor Hamiltonian `H_rot + H_dc` in the molecule's own units.
pub fn single_molecule_assemble(spec: &MoleculeSpec, field: &FieldConfig, basis: &BasisSet) -> Result<SparseHermitian> {
    single_assemble_model(&spec.rotor_model(), field, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_pair_basis, build_single_basis, exchange_permutation, Sector};
    use crate::molecule::{builtin, RotorClass};
    use approx::assert_relative_eq;

    fn st(j: u32, k: i32, m: i32) -> RotorState {
        RotorState::new(j, k, m)
    }

    #[test]
    fn rotor_examples() {
        let lin = builtin("linear").unwrap();
        assert_eq!(h_rot_element(&lin, &st(1, 0, 0), &st(1, 0, 0)), 2.0);

        let chf3 = builtin("CHF3").unwrap();
        let model = chf3.rotor_model_in_units(1.0, 1.0);
        for k in [-1, 1] {
            assert_relative_eq!(rotor_element(&model, &st(1, k, 0), &st(1, k, 0)), 16.0214, max_relative = 1e-12);
        }

        let prop = builtin("propanediol-R").unwrap();
        let model = prop.rotor_model_in_units(1.0, 1.0);
        assert_relative_eq!(rotor_element(&model, &st(1, 1, 0), &st(1, -1, 0)), 0.425, max_relative = 1e-12);
        assert_relative_eq!(rotor_element(&model, &st(1, -1, 0), &st(1, 1, 0)), 0.425, max_relative = 1e-12);
        assert_eq!(rotor_element(&model, &st(1, 1, 0), &st(2, 1, 0)), 0.0);
    }

    #[test]
    fn stark_examples() {
        let lin = builtin("linear").unwrap();
        let eps = 0.7;
        let fz = FieldConfig::along_z(eps);
        assert_relative_eq!(h_dc_element(&lin, &fz, &st(0, 0, 0), &st(1, 0, 0)).re, -eps / 3f64.sqrt(), max_relative = 1e-14);
        assert_eq!(h_dc_element(&lin, &fz, &st(0, 0, 0), &st(1, 0, 1)), Complex64::zero());
        let fx = FieldConfig::new(eps, 90.0).unwrap();
        let v = h_dc_element(&lin, &fx, &st(0, 0, 0), &st(1, 0, -1));
        assert_relative_eq!(v.re, -eps / 6f64.sqrt(), max_relative = 1e-14);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn dipole_dipole_examples() {
        let lin = builtin("linear").unwrap();
        let z = PairState::new(st(0, 0, 0), st(0, 0, 0));
        assert_eq!(h_dd_element(&lin, &lin, 1.0, &z, &z).unwrap(), Complex64::zero());
        let e = PairState::new(st(1, 0, 0), st(1, 0, 0));
        assert_relative_eq!(h_dd_element(&lin, &lin, 1.0, &z, &e).unwrap().re, -2.0 / 3.0, max_relative = 1e-14);
        let f = PairState::new(st(1, 0, 1), st(1, 0, 0));
        assert_eq!(h_dd_element(&lin, &lin, 1.0, &z, &f).unwrap(), Complex64::zero());
        assert!(h_dd_element(&lin, &lin, 0.0, &z, &e).is_err());
    }

    #[test]
    fn small_linear_pair_structure() {
        let lin = builtin("linear").unwrap();
        let basis = build_pair_basis(RotorClass::Linear, 1, Sector::NONE).unwrap();
        let h = assemble(&lin, &lin, 1.0, &FieldConfig::zero(), &basis).unwrap();
        assert_eq!(h.dim(), 16);
        // for k = 0 rotors each dipole changes j by exactly one, so the only
        // off-diagonal blocks are (0,0)<->(1,1) and the resonant (0,1)<->(1,0)
        let mut blocks = std::collections::BTreeSet::new();
        for (r, c, _) in h.entries().filter(|(r, c, _)| r != c) {
            let (p, q) = (basis.pair_state(r), basis.pair_state(c));
            assert_eq!(p.s1.j.abs_diff(q.s1.j), 1, "{p:?} -> {q:?}");
            assert_eq!(p.s2.j.abs_diff(q.s2.j), 1, "{p:?} -> {q:?}");
            assert_eq!(p.m_total(), q.m_total());
            blocks.insert(((p.s1.j, p.s2.j), (q.s1.j, q.s2.j)));
        }
        let expected: std::collections::BTreeSet<_> = [((0, 0), (1, 1)), ((0, 1), (1, 0))].into_iter().collect();
        assert_eq!(blocks, expected);
        assert!(h.is_real());
    }

    #[test]
    fn single_molecule_zero_field() {
        let lin = builtin("linear").unwrap();
        let basis = build_single_basis(RotorClass::Linear, 3);
        let h = single_molecule_assemble(&lin, &FieldConfig::zero(), &basis).unwrap();
        for (r, c, v) in h.entries() {
            assert_eq!(r, c);
            let j = f64::from(basis.single_state(r).j);
            assert_eq!(v.re, j * (j + 1.0));
        }
        let chf3 = builtin("CHF3").unwrap();
        let basis = build_single_basis(RotorClass::OblateSymmetric, 2);
        let h = single_molecule_assemble(&chf3, &FieldConfig::zero(), &basis).unwrap();
        let model = chf3.rotor_model();
        let a = model.constants[0];
        let c = model.constants[2];
        for (r, cc, v) in h.entries() {
            assert_eq!(r, cc);
            let s = basis.single_state(r);
            let jj = f64::from(s.j * (s.j + 1));
            let k2 = f64::from(s.k * s.k);
            assert_relative_eq!(v.re, a * jj + (c - a) * k2, max_relative = 1e-14);
        }
    }

    #[test]
    fn dipole_rows_hermitian_conjugate() {
        let prop = builtin("propanediol-S").unwrap();
        let model = prop.rotor_model();
        let basis = build_single_basis(RotorClass::Asymmetric, 3);
        let dp = dipole_rows(&model, &basis, 1);
        let dm = dipole_rows(&model, &basis, -1);
        let lookup = |rows: &OperatorRows, a: usize, b: usize| {
            rows[a].iter().find(|(c, _)| *c as usize == b).map_or(Complex64::zero(), |(_, v)| *v)
        };
        for a in 0..basis.dim() {
            for &(b, v) in &dp[a] {
                // d_{-1} = -(d_{+1})^†
                let w = lookup(&dm, b as usize, a);
                assert!((w + v.conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn hermitian_and_exchange_symmetric() {
        let prop = builtin("propanediol-R").unwrap();
        let basis = build_pair_basis(RotorClass::Asymmetric, 2, Sector::NONE).unwrap();
        let h = assemble(&prop, &prop, 0.8, &FieldConfig::new(1.3, 30.0).unwrap(), &basis).unwrap();
        assert!(!h.is_real());
        assert_eq!(h.diagonal_imaginary_residual(), 0.0);
        let perm = exchange_permutation(&basis).unwrap();
        let mut worst: f64 = 0.0;
        for (r, c, v) in h.entries() {
            worst = worst.max((h.get(perm[r], perm[c]) - v).norm());
        }
        assert!(worst < 1e-12, "exchange commutator {worst}");
    }

    #[test]
    fn m_sector_policy() {
        let lin = builtin("linear").unwrap();
        let basis = build_pair_basis(RotorClass::Linear, 1, Sector::m(0)).unwrap();
        assert!(matches!(
            assemble(&lin, &lin, 1.0, &FieldConfig::new(1.0, 10.0).unwrap(), &basis),
            Err(Error::SectorPolicy(_))
        ));
        assert!(assemble(&lin, &lin, 1.0, &FieldConfig::along_z(1.0), &basis).is_ok());
    }

    #[test]
    fn coordinate_round_trip() {
        let prop = builtin("propanediol-R").unwrap();
        let basis = build_pair_basis(RotorClass::Asymmetric, 1, Sector::NONE).unwrap();
        let h = assemble(&prop, &prop, 1.1, &FieldConfig::new(0.5, 45.0).unwrap(), &basis).unwrap();
        let mut buf = Vec::new();
        h.write_coordinate(&mut buf, &[("r".into(), "1.1".into())]).unwrap();
        let (back, params) = SparseHermitian::read_coordinate(&buf[..]).unwrap();
        assert_eq!(back, h);
        assert_eq!(params, vec![("r".to_string(), "1.1".to_string())]);
    }

    #[test]
    fn from_entries_canonicalises() {
        let i = Complex64::i();
        let h = SparseHermitian::from_entries(
            3,
            vec![(1, 0, 2.0 + i), (0, 1, Complex64::new(1.0, -1.0)), (2, 2, Complex64::new(4.0, 0.0)), (0, 2, Complex64::zero())],
        )
        .unwrap();
        assert_eq!(h.nnz(), 2);
        assert_eq!(h.get(0, 1), Complex64::new(3.0, -2.0));
        assert_eq!(h.get(1, 0), Complex64::new(3.0, 2.0));
        assert!(SparseHermitian::from_entries(2, vec![(2, 0, Complex64::new(1.0, 0.0))]).is_err());
    }
}

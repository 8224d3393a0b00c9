//! Laboratory-frame dipole expectation values of eigenstates.

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::angular::{spherical_to_cartesian, SphericalVector};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::hamiltonian::{dipole_rows, OperatorRows};
use crate::molecule::RotorModel;
use crate::solver::EigenSolution;

const NORM_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-8;

/// General sparse matrix in row-sorted coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(u32, u32, Complex64)>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|&(r, c, v)| (r as usize, c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        match self.entries.binary_search_by_key(&(r as u32, c as u32), |&(a, b, _)| (a, b)) {
            Ok(i) => self.entries[i].2,
            Err(_) => Complex64::zero(),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::zero(); self.dim];
        for &(r, c, v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
        y
    }
}

/// Which molecule an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Molecule {
    First,
    Second,
}

fn pair_rows(basis: &BasisSet, rows: &OperatorRows, which: Molecule, i: usize) -> Vec<(usize, Complex64)> {
    if !basis.is_pair() {
        return rows[i].iter().map(|&(c, v)| (c as usize, v)).collect();
    }
    let (a, b) = basis.pair_factors(i);
    let mut out: Vec<(usize, Complex64)> = match which {
        Molecule::First => rows[a]
            .iter()
            .filter_map(|&(a2, v)| basis.pair_index_of_factors(a2 as usize, b).map(|j| (j, v)))
            .collect(),
        Molecule::Second => rows[b]
            .iter()
            .filter_map(|&(b2, v)| basis.pair_index_of_factors(a, b2 as usize).map(|j| (j, v)))
            .collect(),
    };
    out.sort_by_key(|&(j, _)| j);
    out
}

/// Laboratory spherical component `d_p` of one molecule's dipole on `basis`,
/// identity on the other molecule. Dipoles are in the units of `model`.
pub fn dipole_operator(basis: &BasisSet, model: &RotorModel, which: Molecule, p: i32) -> Result<SparseOperator> {
    if p.abs() > 1 {
        return Err(Error::Observable(format!("spherical index {p} out of range")));
    }
    let rows = dipole_rows(model, basis, p);
    let mut entries = Vec::new();
    for i in 0..basis.dim() {
        for (j, v) in pair_rows(basis, &rows, which, i) {
            entries.push((i as u32, j as u32, v));
        }
    }
    Ok(SparseOperator { dim: basis.dim(), entries })
}

/// `<v|O|v>` for an operator given by single-rotor rows.
fn expectation(basis: &BasisSet, rows: &OperatorRows, which: Molecule, v: &[Complex64]) -> Complex64 {
    (0..basis.dim())
        .into_par_iter()
        .map(|i| {
            if v[i].is_zero() {
                return Complex64::zero();
            }
            let s: Complex64 = pair_rows(basis, rows, which, i).into_iter().map(|(j, x)| x * v[j]).sum();
            v[i].conj() * s
        })
        .sum()
}

/// Cartesian `(X, Y, Z)` expectation of a dipole from its spherical expectations.
fn cartesian_expectation(sph: [Complex64; 3]) -> Result<[f64; 3]> {
    let c = spherical_to_cartesian(SphericalVector { minus: sph[0], zero: sph[1], plus: sph[2] });
    let scale = c.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if let Some(z) = c.iter().find(|z| z.im.abs() > IMAG_TOL * scale) {
        return Err(Error::Observable(format!("dipole expectation has imaginary residue {:e}", z.im)));
    }
    Ok(c.map(|z| z.re))
}

/// Dipole expectations of one state, in units of the first molecule's `|d|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDipoles {
    pub molecule1: [f64; 3],
    /// `None` for single-molecule bases.
    pub molecule2: Option<[f64; 3]>,
    /// Pair average `<d_1 + d_2>/2`, or the molecule's own value.
    pub average: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipoleReport {
    pub states: Vec<StateDipoles>,
    /// Mean of `average` over each degenerate group (basis-rotation invariant).
    pub group_average: Vec<[f64; 3]>,
}

/// Per-molecule rows of `d_{-1}, d_0, d_{+1}`.
pub struct DipoleRows {
    rows: Vec<[OperatorRows; 3]>,
}

impl DipoleRows {
    pub fn new(basis: &BasisSet, models: &[RotorModel]) -> Self {
        DipoleRows {
            rows: models
                .iter()
                .map(|m| [dipole_rows(m, basis, -1), dipole_rows(m, basis, 0), dipole_rows(m, basis, 1)])
                .collect(),
        }
    }
}

/// Dipole expectations of a single normalised state.
pub fn state_dipoles(basis: &BasisSet, rows: &DipoleRows, v: &[Complex64]) -> Result<StateDipoles> {
    let norm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    if (norm2.sqrt() - 1.0).abs() > NORM_TOL {
        return Err(Error::Observable(format!("state is not normalised (norm {})", norm2.sqrt())));
    }
    let mol = |idx: usize, which: Molecule| -> Result<[f64; 3]> {
        let r = &rows.rows[idx];
        cartesian_expectation([
            expectation(basis, &r[0], which, v),
            expectation(basis, &r[1], which, v),
            expectation(basis, &r[2], which, v),
        ])
    };
    let d1 = mol(0, Molecule::First)?;
    if basis.is_pair() {
        let second = if rows.rows.len() > 1 { 1 } else { 0 };
        let d2 = mol(second, Molecule::Second)?;
        let average = [0, 1, 2].map(|i| 0.5 * (d1[i] + d2[i]));
        Ok(StateDipoles { molecule1: d1, molecule2: Some(d2), average })
    } else {
        Ok(StateDipoles { molecule1: d1, molecule2: None, average: d1 })
    }
}

/// Dipole expectations of every state of `solution`. `models` holds one
/// model for a single rotor or the two models of a pair, all in the units of
/// the first molecule.
pub fn expectation_dipoles(solution: &EigenSolution, basis: &BasisSet, models: &[RotorModel]) -> Result<DipoleReport> {
    if models.is_empty() || (basis.is_pair() && models.len() != 2) {
        return Err(Error::Observable("one model per molecule is required".into()));
    }
    let rows = DipoleRows::new(basis, models);
    let states = solution
        .vectors
        .iter()
        .map(|v| state_dipoles(basis, &rows, v))
        .collect::<Result<Vec<_>>>()?;
    let group_average = solution
        .groups
        .iter()
        .map(|g| {
            let mut acc = [0.0; 3];
            for &i in g {
                for (a, s) in acc.iter_mut().zip(states[i].average) {
                    *a += s;
                }
            }
            acc.map(|a| a / g.len() as f64)
        })
        .collect();
    Ok(DipoleReport { states, group_average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_pair_basis, build_single_basis, Sector};
    use crate::hamiltonian::{assemble, single_molecule_assemble, FieldConfig};
    use crate::molecule::{builtin, RotorClass};
    use crate::solver::{solve_layout, SectorProblem, SolverOptions, Symmetries};

    fn whole(h: crate::hamiltonian::SparseHermitian) -> Vec<SectorProblem> {
        vec![SectorProblem { sector: Sector::NONE, parent_indices: None, matrix: h }]
    }

    #[test]
    fn operator_examples() {
        let model = builtin("linear").unwrap().rotor_model();
        let basis = build_single_basis(RotorClass::Linear, 2);
        let d0 = dipole_operator(&basis, &model, Molecule::First, 0).unwrap();
        assert!((d0.get(0, 2).re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        for p in -1..=1 {
            let op = dipole_operator(&basis, &model, Molecule::First, p).unwrap();
            for (r, c, _) in op.entries() {
                assert_eq!(basis.single_state(r).m, basis.single_state(c).m + p);
            }
        }
        let dp = dipole_operator(&basis, &model, Molecule::First, 1).unwrap();
        let dm = dipole_operator(&basis, &model, Molecule::First, -1).unwrap();
        for (r, c, v) in dp.entries() {
            assert!((dm.get(c, r) + v.conj()).norm() < 1e-15);
        }
        assert!(dipole_operator(&basis, &model, Molecule::First, 2).is_err());
    }

    fn zero_field_report(name: &str, class: RotorClass) -> (DipoleReport, Vec<Vec<usize>>) {
        let spec = builtin(name).unwrap();
        let model = spec.rotor_model();
        let basis = build_pair_basis(class, 1, Sector::NONE).unwrap();
        let h = assemble(&spec, &spec, 1.0, &FieldConfig::zero(), &basis).unwrap();
        let sym = Symmetries { m_total: true, k_total: model.conserves_k(), exchange: true };
        let sol = solve_layout(&whole(h), &basis, &sym, &SolverOptions { n_states: 20, ..Default::default() }, 1e-8).unwrap();
        (expectation_dipoles(&sol, &basis, &[model, model]).unwrap(), sol.groups)
    }

    #[test]
    fn zero_field_states_have_no_dipole() {
        for (name, class) in [("linear", RotorClass::Linear), ("propanediol-R", RotorClass::Asymmetric)] {
            let (rep, _) = zero_field_report(name, class);
            for s in &rep.states {
                assert!(s.average.iter().all(|x| x.abs() < 1e-10), "{name}: {:?}", s.average);
            }
        }
    }

    #[test]
    fn symmetric_top_zero_field_dipole_cancels_within_groups() {
        let (rep, groups) = zero_field_report("CHF3", RotorClass::OblateSymmetric);
        for g in &rep.group_average {
            assert!(g.iter().all(|x| x.abs() < 1e-10), "{g:?}");
        }
        // definite-k members of a ±k doublet carry opposite first-order dipoles
        assert!(rep.states.iter().any(|s| s.average[2].abs() > 0.1));
        assert!(groups.iter().any(|g| g.len() > 1));
    }

    #[test]
    fn weak_field_ground_state() {
        let spec = builtin("linear").unwrap();
        let basis = build_single_basis(RotorClass::Linear, 8);
        let h = single_molecule_assemble(&spec, &FieldConfig::along_z(0.1), &basis).unwrap();
        let sym = Symmetries { m_total: true, ..Default::default() };
        let sol = solve_layout(&whole(h), &basis, &sym, &SolverOptions { n_states: 1, ..Default::default() }, 1e-8).unwrap();
        let rep = expectation_dipoles(&sol, &basis, &[spec.rotor_model()]).unwrap();
        assert!((rep.states[0].average[2] - 0.1 / 3.0).abs() < 1e-3);
        assert!(rep.states[0].average[0].abs() < 1e-12);
    }

    #[test]
    fn pair_along_z_has_no_transverse_dipole_and_equal_molecules() {
        let spec = builtin("linear").unwrap();
        let model = spec.rotor_model();
        let basis = build_pair_basis(RotorClass::Linear, 3, Sector::NONE).unwrap();
        let h = assemble(&spec, &spec, 1.0, &FieldConfig::along_z(4.0), &basis).unwrap();
        let sym = Symmetries { m_total: true, k_total: false, exchange: true };
        let sol = solve_layout(&whole(h), &basis, &sym, &SolverOptions { n_states: 12, ..Default::default() }, 1e-8).unwrap();
        let rep = expectation_dipoles(&sol, &basis, &[model, model]).unwrap();
        for s in &rep.states {
            assert!(s.average[0].abs() < 1e-10 && s.average[1].abs() < 1e-10);
            let d2 = s.molecule2.unwrap();
            for i in 0..3 {
                assert!((s.molecule1[i] - d2[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unnormalised_vector_is_rejected() {
        let spec = builtin("linear").unwrap();
        let basis = build_single_basis(RotorClass::Linear, 1);
        let rows = DipoleRows::new(&basis, &[spec.rotor_model()]);
        let v = vec![Complex64::new(1.0, 0.0); 4];
        assert!(state_dipoles(&basis, &rows, &v).is_err());
    }
}

//! Lowest eigenpairs of assembled Hamiltonians, degeneracy grouping,
//! symmetry-adapted rotation of degenerate groups, and exchange parity.

pub mod csr;
pub mod labels;
pub mod lanczos;
pub mod scalar;
pub mod tracking;

use std::fmt;

use num_complex::Complex64;
use num_traits::Zero;

use crate::basis::{exchange_permutation, BasisSet, Sector};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHermitian;
use csr::Csr;
use lanczos::{lowest_eigenpairs, LanczosOptions};
use scalar::{dot, Scalar};

pub use labels::{label_state, LabelScheme, StateLabel, TauTable};
pub use tracking::{track_states, TrackMatch, TRACK_THRESHOLD};

/// Dimension at or below which [`Method::Auto`] uses a dense solve.
pub const DEFAULT_DENSE_THRESHOLD: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_DEG_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0x5eed_1234;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Dense,
    Lanczos,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Dense => "dense",
            Method::Lanczos => "lanczos",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub n_states: usize,
    pub tol: f64,
    pub method: Method,
    pub seed: u64,
    pub block_size: usize,
    /// Krylov search-space size; `0` picks one from `n_states`.
    pub max_basis: usize,
    pub max_restarts: usize,
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_states: 40,
            tol: DEFAULT_TOL,
            method: Method::Auto,
            seed: DEFAULT_SEED,
            block_size: 4,
            max_basis: 0,
            max_restarts: 3000,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
        }
    }
}

/// Raw lowest eigenpairs of one matrix.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub method: Method,
}

fn residual<S: Scalar>(a: &Csr<S>, lambda: f64, x: &[S]) -> f64 {
    let mut ax = a.apply_new(x);
    scalar::axpy(S::from_real(-lambda), x, &mut ax);
    scalar::norm(&ax)
}

fn run<S: Scalar>(h: &SparseHermitian, n: usize, opts: &SolverOptions, method: Method) -> Result<EigenPairs> {
    let csr = Csr::<S>::from_hermitian(h);
    let dim = h.dim();
    match method {
        Method::Dense => {
            let (vals, vecs) = S::eigh(dim, &csr.to_dense());
            let mut vectors = Vec::with_capacity(n);
            let mut residuals = Vec::with_capacity(n);
            for i in 0..n {
                let x = &vecs[i * dim..(i + 1) * dim];
                residuals.push(residual(&csr, vals[i], x));
                vectors.push(x.iter().map(|v| v.to_complex()).collect());
            }
            Ok(EigenPairs { values: vals[..n].to_vec(), vectors, residuals, matvecs: n, method })
        }
        _ => {
            let block = opts.block_size.max(1);
            let max_basis = if opts.max_basis > 0 { opts.max_basis } else { (2 * n + 4 * block).max(48) };
            let lo = LanczosOptions {
                n,
                tol: opts.tol,
                block,
                max_basis,
                max_restarts: opts.max_restarts,
                seed: opts.seed,
            };
            let res = lowest_eigenpairs(&csr, &lo)?;
            Ok(EigenPairs {
                values: res.values,
                vectors: res.vectors.into_iter().map(|v| v.into_iter().map(|x| x.to_complex()).collect()).collect(),
                residuals: res.residuals,
                matvecs: res.matvecs,
                method: Method::Lanczos,
            })
        }
    }
}

/// The `n` algebraically smallest eigenpairs of `h`.
pub fn solve_lowest(h: &SparseHermitian, opts: &SolverOptions) -> Result<EigenPairs> {
    if opts.n_states == 0 {
        return Err(Error::Solver("at least one eigenpair must be requested".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Solver(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = opts.n_states.min(h.dim());
    if n == 0 {
        return Ok(EigenPairs { values: vec![], vectors: vec![], residuals: vec![], matvecs: 0, method: Method::Dense });
    }
    let method = match opts.method {
        Method::Auto if h.dim() <= opts.dense_threshold => Method::Dense,
        Method::Auto => Method::Lanczos,
        m => m,
    };
    if h.is_real() {
        run::<f64>(h, n, opts, method)
    } else {
        run::<Complex64>(h, n, opts, method)
    }
}

/// Maximal runs of sorted `values` whose consecutive gaps are below `dtol`.
pub fn group_degenerate(values: &[f64], dtol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - values[*g.last().unwrap()] < dtol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Exchange parity of a pair eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
    /// Single molecules or distinct species.
    NotApplicable,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "+",
            Parity::Odd => "-",
            Parity::Mixed => "mixed",
            Parity::NotApplicable => "n/a",
        })
    }
}

/// Conserved quantities used to fix the basis inside degenerate groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Symmetries {
    pub m_total: bool,
    pub k_total: bool,
    pub exchange: bool,
}

/// One symmetry block of a layout basis with its assembled matrix.
#[derive(Debug, Clone)]
pub struct SectorProblem {
    pub sector: Sector,
    /// Ordinals of the block's states in the layout basis; `None` when the
    /// block is the whole layout.
    pub parent_indices: Option<Vec<usize>>,
    pub matrix: SparseHermitian,
}

/// Sorted eigenpairs over a layout basis with symmetry annotations.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub sectors: Vec<Sector>,
    pub parity: Vec<Parity>,
    /// `<P>` after symmetry rotation; `NaN` when exchange does not apply.
    pub parity_expectation: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub group_of: Vec<usize>,
    /// Non-degenerate states whose `|<P>|` is not close to one.
    pub parity_flags: Vec<usize>,
    pub matvecs: usize,
    pub methods: Vec<Method>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// Largest `|<v_i|v_j> - δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let d = dot(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Extra eigenpairs solved beyond the request so that a degenerate group at
/// the cut can be completed.
pub const GUARD_STATES: usize = 8;

/// Solve every sector block, merge the lowest states over the layout basis,
/// group degeneracies and rotate each group onto `M_total`, `K_total` and
/// exchange eigenstates as allowed by `symmetries`.
///
/// The report holds `opts.n_states` states, extended to the end of the
/// degenerate group that straddles the cut.
pub fn solve_layout(
    problems: &[SectorProblem],
    layout: &BasisSet,
    symmetries: &Symmetries,
    opts: &SolverOptions,
    deg_tol: f64,
) -> Result<EigenSolution> {
    let dim = layout.dim();
    let n_int = (opts.n_states + GUARD_STATES).min(dim);
    let mut order: Vec<(f64, usize)> =
        problems.iter().enumerate().map(|(i, p)| (p.matrix.gershgorin_lower_bound(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    struct Candidate {
        value: f64,
        problem: usize,
        local: usize,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut solved: Vec<Option<EigenPairs>> = vec![None; problems.len()];
    let mut matvecs = 0;
    let mut methods = Vec::new();
    for &(bound, pi) in &order {
        if candidates.len() >= n_int {
            let mut vals: Vec<f64> = candidates.iter().map(|c| c.value).collect();
            vals.sort_by(f64::total_cmp);
            if bound > vals[n_int - 1] + deg_tol {
                continue;
            }
        }
        let p = &problems[pi];
        if p.matrix.dim() == 0 {
            continue;
        }
        let sub = SolverOptions { n_states: n_int.min(p.matrix.dim()), ..opts.clone() };
        let pairs = solve_lowest(&p.matrix, &sub)?;
        matvecs += pairs.matvecs;
        if !methods.contains(&pairs.method) {
            methods.push(pairs.method);
        }
        for (local, &value) in pairs.values.iter().enumerate() {
            candidates.push(Candidate { value, problem: pi, local });
        }
        solved[pi] = Some(pairs);
    }
    candidates.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.problem.cmp(&b.problem)).then(a.local.cmp(&b.local)));
    candidates.truncate(n_int);

    let mut values = Vec::with_capacity(candidates.len());
    let mut vectors = Vec::with_capacity(candidates.len());
    let mut residuals = Vec::with_capacity(candidates.len());
    for c in &candidates {
        let pairs = solved[c.problem].as_ref().expect("solved above");
        let local = &pairs.vectors[c.local];
        let full = match &problems[c.problem].parent_indices {
            None => local.clone(),
            Some(idx) => {
                let mut v = vec![Complex64::zero(); dim];
                for (&parent, &x) in idx.iter().zip(local) {
                    v[parent] = x;
                }
                v
            }
        };
        values.push(c.value);
        vectors.push(full);
        residuals.push(pairs.residuals[c.local]);
    }

    let mut groups = group_degenerate(&values, deg_tol);
    // report n states, completing the group at the cut when it closes inside the guard
    let mut keep = 0;
    for g in &groups {
        if keep >= opts.n_states.min(dim) {
            break;
        }
        keep = g.last().unwrap() + 1;
    }
    groups.retain(|g| g[0] < keep);
    values.truncate(keep);
    vectors.truncate(keep);
    residuals.truncate(keep);

    let perm = if symmetries.exchange && layout.is_pair() { Some(exchange_permutation(layout)?) } else { None };
    let m_diag: Vec<f64> = (0..dim).map(|i| f64::from(layout.m_total(i))).collect();
    let k_diag: Vec<f64> = (0..dim).map(|i| f64::from(layout.k_total(i))).collect();

    let mut parity_expectation = vec![f64::NAN; keep];
    let mut m_vals = vec![f64::NAN; keep];
    let mut k_vals = vec![f64::NAN; keep];
    for g in &groups {
        let mut clusters: Vec<Vec<usize>> = vec![g.clone()];
        if symmetries.m_total {
            clusters = refine(&mut vectors, clusters, &|v| diag_apply(&m_diag, v), &mut m_vals);
        }
        if symmetries.k_total {
            clusters = refine(&mut vectors, clusters, &|v| diag_apply(&k_diag, v), &mut k_vals);
        }
        if let Some(perm) = &perm {
            refine(&mut vectors, clusters, &|v| perm_apply(perm, v), &mut parity_expectation);
        }
    }

    let mut group_of = vec![0; keep];
    for (gi, g) in groups.iter().enumerate() {
        for &i in g {
            group_of[i] = gi;
        }
    }
    let mut parity = vec![Parity::NotApplicable; keep];
    let mut parity_flags = Vec::new();
    if perm.is_some() {
        for i in 0..keep {
            let p = parity_expectation[i];
            let single = groups[group_of[i]].len() == 1;
            parity[i] = if single {
                if p.abs() > 0.99 {
                    if p > 0.0 {
                        Parity::Even
                    } else {
                        Parity::Odd
                    }
                } else {
                    parity_flags.push(i);
                    Parity::Mixed
                }
            } else if (p - 1.0).abs() < 1e-6 {
                Parity::Even
            } else if (p + 1.0).abs() < 1e-6 {
                Parity::Odd
            } else {
                Parity::Mixed
            };
        }
    }
    let sectors = (0..keep)
        .map(|i| Sector {
            m_total: symmetries.m_total.then(|| m_vals[i].round() as i32),
            k_total: symmetries.k_total.then(|| k_vals[i].round() as i32),
        })
        .collect();

    Ok(EigenSolution {
        values,
        vectors,
        residuals,
        sectors,
        parity,
        parity_expectation,
        groups,
        group_of,
        parity_flags,
        matvecs,
        methods,
    })
}

fn diag_apply(d: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    d.iter().zip(v).map(|(a, x)| x * *a).collect()
}

fn perm_apply(perm: &[usize], v: &[Complex64]) -> Vec<Complex64> {
    perm.iter().map(|&j| v[j]).collect()
}

/// Diagonalise `op` inside each cluster of states, rotate the vectors onto
/// its eigenvectors, store the eigenvalues in `out` and split clusters by
/// distinct (integer-spaced) eigenvalue.
fn refine(
    vectors: &mut [Vec<Complex64>],
    clusters: Vec<Vec<usize>>,
    op: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    out: &mut [f64],
) -> Vec<Vec<usize>> {
    let mut next = Vec::new();
    for cluster in clusters {
        let g = cluster.len();
        let images: Vec<Vec<Complex64>> = cluster.iter().map(|&i| op(&vectors[i])).collect();
        if g == 1 {
            out[cluster[0]] = dot(&vectors[cluster[0]], &images[0]).re;
            next.push(cluster);
            continue;
        }
        let mut gm = vec![Complex64::zero(); g * g];
        for a in 0..g {
            for b in 0..g {
                gm[a + b * g] = dot(&vectors[cluster[a]], &images[b]);
            }
        }
        for a in 0..g {
            for b in 0..a {
                let avg = 0.5 * (gm[a + b * g] + gm[b + a * g].conj());
                gm[a + b * g] = avg;
                gm[b + a * g] = avg.conj();
            }
        }
        let (ev, y) = Complex64::eigh(g, &gm);
        let old: Vec<Vec<Complex64>> = cluster.iter().map(|&i| vectors[i].clone()).collect();
        for (col, &target) in cluster.iter().enumerate() {
            let mut v = vec![Complex64::zero(); old[0].len()];
            for (a, oa) in old.iter().enumerate() {
                scalar::axpy(y[a + col * g], oa, &mut v);
            }
            vectors[target] = v;
            out[target] = ev[col];
        }
        let mut current = vec![cluster[0]];
        for col in 1..g {
            if ev[col] - ev[col - 1] > 0.5 {
                next.push(std::mem::take(&mut current));
            }
            current.push(cluster[col]);
        }
        next.push(current);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_pair_basis, build_single_basis};
    use crate::hamiltonian::{assemble, single_molecule_assemble, FieldConfig};
    use crate::molecule::{builtin, RotorClass};

    #[test]
    fn grouping_examples() {
        let g = group_degenerate(&[0.0, 2.0 - 1e-12, 2.0, 2.0 + 1e-12], 1e-8);
        assert_eq!(g, vec![vec![0], vec![1, 2, 3]]);
        assert_eq!(group_degenerate(&[], 1e-8), Vec::<Vec<usize>>::new());
        assert_eq!(group_degenerate(&[1.0, 1.5], 1e-8).len(), 2);
    }

    #[test]
    fn zero_matrix_gives_zero_spectrum() {
        let h = SparseHermitian::zeros(30);
        for method in [Method::Dense, Method::Lanczos] {
            let res = solve_lowest(&h, &SolverOptions { n_states: 5, method, ..Default::default() }).unwrap();
            assert!(res.values.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn propanediol_j1_block() {
        let spec = builtin("propanediol-R").unwrap();
        let basis = build_single_basis(RotorClass::Asymmetric, 1);
        let h = single_molecule_assemble(&spec, &FieldConfig::zero(), &basis).unwrap();
        let res = solve_lowest(&h, &SolverOptions { n_states: 4, ..Default::default() }).unwrap();
        // j = 1 has a threefold m degeneracy per level
        let h_full = solve_lowest(&h, &SolverOptions { n_states: 10, ..Default::default() }).unwrap();
        assert_eq!(res.values[0], 0.0);
        let b = spec.b_ghz;
        let expected = [6.430, 11.36205, 12.21205];
        for (level, e) in expected.iter().enumerate() {
            for m in 0..3 {
                let got = h_full.values[1 + 3 * level + m] * b;
                assert!(((got - e) / e).abs() < 1e-9, "{got} vs {e}");
            }
        }
    }

    #[test]
    fn lanczos_matches_dense_on_linear_pair() {
        let lin = builtin("linear").unwrap();
        let basis = build_pair_basis(RotorClass::Linear, 3, Sector::NONE).unwrap();
        let h = assemble(&lin, &lin, 0.9, &FieldConfig::new(2.0, 30.0).unwrap(), &basis).unwrap();
        let base = SolverOptions { n_states: 20, ..Default::default() };
        let d = solve_lowest(&h, &SolverOptions { method: Method::Dense, ..base.clone() }).unwrap();
        let l = solve_lowest(&h, &SolverOptions { method: Method::Lanczos, ..base }).unwrap();
        for i in 0..20 {
            assert!((d.values[i] - l.values[i]).abs() < 1e-9);
            assert!(l.residuals[i] <= 1e-10 * d.values[i].abs().max(1.0));
        }
    }

    #[test]
    fn complex_path_matches_dense() {
        let prop = builtin("propanediol-S").unwrap();
        let basis = build_pair_basis(RotorClass::Asymmetric, 2, Sector::NONE).unwrap();
        let h = assemble(&prop, &prop, 1.5, &FieldConfig::new(1.0, 60.0).unwrap(), &basis).unwrap();
        assert!(!h.is_real());
        let base = SolverOptions { n_states: 12, ..Default::default() };
        let d = solve_lowest(&h, &SolverOptions { method: Method::Dense, ..base.clone() }).unwrap();
        let l = solve_lowest(&h, &SolverOptions { method: Method::Lanczos, ..base }).unwrap();
        for i in 0..12 {
            assert!((d.values[i] - l.values[i]).abs() < 1e-9);
        }
    }

    fn sector_problems(basis: &BasisSet, h_of: impl Fn(&BasisSet) -> SparseHermitian) -> Vec<SectorProblem> {
        basis
            .sector_blocks(true, false)
            .unwrap()
            .into_iter()
            .map(|b| SectorProblem { sector: b.basis.sector(), matrix: h_of(&b.basis), parent_indices: Some(b.parent_indices) })
            .collect()
    }

    #[test]
    fn sector_union_matches_unsectored() {
        let lin = builtin("linear").unwrap();
        let field = FieldConfig::along_z(1.5);
        let basis = build_pair_basis(RotorClass::Linear, 3, Sector::NONE).unwrap();
        let h = assemble(&lin, &lin, 1.0, &field, &basis).unwrap();
        let opts = SolverOptions { n_states: 25, ..Default::default() };
        let sym = Symmetries { m_total: true, k_total: false, exchange: true };
        let whole = solve_layout(
            &[SectorProblem { sector: Sector::NONE, parent_indices: None, matrix: h }],
            &basis,
            &sym,
            &opts,
            1e-8,
        )
        .unwrap();
        let blocked = solve_layout(&sector_problems(&basis, |b| assemble(&lin, &lin, 1.0, &field, b).unwrap()), &basis, &sym, &opts, 1e-8).unwrap();
        assert_eq!(whole.len(), blocked.len());
        for i in 0..whole.len() {
            assert!((whole.values[i] - blocked.values[i]).abs() < 1e-9);
        }
        assert!(blocked.orthonormality_error() < 1e-10);
        assert!(whole.orthonormality_error() < 1e-10);
        for sol in [&whole, &blocked] {
            for i in 0..sol.len() {
                assert!(sol.parity_flags.is_empty());
                let p = sol.parity_expectation[i];
                assert!((p.abs() - 1.0).abs() < 1e-10, "state {i}: <P> = {p}");
            }
        }
    }

    #[test]
    fn large_r_parities() {
        let lin = builtin("linear").unwrap();
        let basis = build_pair_basis(RotorClass::Linear, 2, Sector::NONE).unwrap();
        let problems = sector_problems(&basis, |b| assemble(&lin, &lin, 20.0, &FieldConfig::zero(), b).unwrap());
        let sym = Symmetries { m_total: true, k_total: false, exchange: true };
        let sol = solve_layout(&problems, &basis, &sym, &SolverOptions { n_states: 7, ..Default::default() }, 1e-8).unwrap();
        assert_eq!(sol.parity[0], Parity::Even);
        // the six (0,1)/(1,0) states: three even and three odd, one of each per m
        let excited = &sol.parity[1..7];
        assert_eq!(excited.iter().filter(|p| **p == Parity::Even).count(), 3);
        assert_eq!(excited.iter().filter(|p| **p == Parity::Odd).count(), 3);
    }
}

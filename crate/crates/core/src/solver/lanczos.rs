//! Thick-restart block Lanczos with full reorthogonalisation.
//!
//! The search space `V` is kept orthonormal together with a pending block
//! `P ⊥ V` such that `A V ⊂ span(V, P)`. Expanding appends `P` to `V` and
//! orthogonalises `A P` into the next pending block; restarting compresses
//! `V` onto its lowest Ritz vectors, which preserves the invariant exactly.
//! Because of that invariant the residual of a Ritz pair `(θ, V y)` is
//! `P (B y_last)` where `B` is the coupling of the most recent block, so
//! convergence is monitored without forming Ritz vectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::csr::Csr;
use super::scalar::{axpy, dot, norm, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub n: usize,
    pub tol: f64,
    pub block: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LanczosResult<S> {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<S>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub restarts: usize,
}

const DEFICIENT: f64 = 1e-10;

/// Orthogonalise `x` against the union of `a` and `b`, two classical
/// Gram–Schmidt passes.
fn project_out<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>], x: &mut [S]) {
    for _ in 0..2 {
        let coeffs: Vec<S> = a.iter().chain(b).map(|v| dot(v, x)).collect();
        for (v, c) in a.iter().chain(b).zip(coeffs) {
            axpy(-c, v, x);
        }
    }
}

fn normalise_if_independent<S: Scalar>(mut x: Vec<S>, before: f64) -> Option<Vec<S>> {
    let after = norm(&x);
    if before > 0.0 && after > DEFICIENT * before {
        let inv = 1.0 / after;
        x.iter_mut().for_each(|v| *v = v.scale(inv));
        Some(x)
    } else {
        None
    }
}

/// Random unit vector orthogonal to `a` and `b`, or `None` if the space is exhausted.
fn random_orthogonal<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>], dim: usize, rng: &mut ChaCha8Rng) -> Option<Vec<S>> {
    if a.len() + b.len() >= dim {
        return None;
    }
    for _ in 0..4 {
        let mut x: Vec<S> = (0..dim).map(|_| S::random(rng)).collect();
        let before = norm(&x);
        project_out(a, b, &mut x);
        if let Some(x) = normalise_if_independent(x, before) {
            return Some(x);
        }
    }
    None
}

/// Orthonormalise `candidates` against `basis` and one another. Columns that
/// collapse are replaced by random orthogonal vectors while room remains.
fn orthonormal_block<S: Scalar>(basis: &[Vec<S>], candidates: Vec<Vec<S>>, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<S>> {
    let mut out: Vec<Vec<S>> = Vec::with_capacity(candidates.len());
    for mut x in candidates {
        let before = norm(&x);
        project_out(basis, &out, &mut x);
        let vector = normalise_if_independent(x, before).or_else(|| random_orthogonal(basis, &out, dim, rng));
        match vector {
            Some(v) => out.push(v),
            None => break,
        }
    }
    out
}

fn random_block<S: Scalar>(basis: &[Vec<S>], count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<S>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        match random_orthogonal(basis, &out, dim, rng) {
            Some(x) => out.push(x),
            None => break,
        }
    }
    out
}

/// Lowest `opts.n` eigenpairs of `a`.
pub fn lowest_eigenpairs<S: Scalar>(a: &Csr<S>, opts: &LanczosOptions) -> Result<LanczosResult<S>> {
    let dim = a.dim();
    let nev = opts.n.min(dim);
    if nev == 0 {
        return Ok(LanczosResult { values: vec![], vectors: vec![], residuals: vec![], matvecs: 0, restarts: 0 });
    }
    let block = opts.block.clamp(1, nev);
    let mmax = opts.max_basis.max(nev + 2 * block).min(dim);
    let keep = (nev + (mmax - nev) / 2).min(mmax.saturating_sub(block)).max(nev.min(mmax));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut v: Vec<Vec<S>> = Vec::with_capacity(mmax);
    // column-major projected matrix with leading dimension mmax
    let mut t = vec![S::zero(); mmax * mmax];
    let mut pending = random_block(&v, block, dim, &mut rng);
    // coupling of the last appended block into the current pending block
    let mut coupling: Vec<Vec<S>> = Vec::new();
    let mut last_block = 0..0;
    let mut matvecs = 0;
    let mut restarts = 0;

    loop {
        while !pending.is_empty() && v.len() + pending.len() <= mmax {
            let start = v.len();
            let ap: Vec<Vec<S>> = pending.iter().map(|p| a.apply_new(p)).collect();
            matvecs += ap.len();
            v.append(&mut pending);
            for (c, w) in ap.iter().enumerate() {
                let col = start + c;
                for (i, vi) in v.iter().enumerate().take(col + 1) {
                    t[i + col * mmax] = dot(vi, w);
                }
            }
            last_block = start..v.len();
            pending = orthonormal_block(&v, ap.clone(), dim, &mut rng);
            coupling = pending.iter().map(|p| ap.iter().map(|w| dot(p, w)).collect()).collect();
        }

        let m = v.len();
        let mut tm = vec![S::zero(); m * m];
        for col in 0..m {
            for row in 0..=col {
                let x = t[row + col * mmax];
                tm[row + col * m] = x;
                tm[col + row * m] = x.conj();
            }
            tm[col + col * m] = S::from_real(t[col + col * mmax].re());
        }
        let (theta, y) = S::eigh(m, &tm);

        let estimate = |i: usize| -> f64 {
            coupling
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(last_block.clone())
                        .fold(S::zero(), |acc, (&b, r)| acc + b * y[r + i * m])
                        .abs2()
                })
                .sum::<f64>()
                .sqrt()
        };
        let tol_of = |lambda: f64| opts.tol * lambda.abs().max(1.0);
        let all_estimated = (0..nev).all(|i| estimate(i) <= tol_of(theta[i]));

        if all_estimated || m == dim {
            let mut vectors = Vec::with_capacity(nev);
            let mut residuals = Vec::with_capacity(nev);
            for i in 0..nev {
                let mut x = vec![S::zero(); dim];
                for (r, vr) in v.iter().enumerate() {
                    axpy(y[r + i * m], vr, &mut x);
                }
                let inv = 1.0 / norm(&x);
                x.iter_mut().for_each(|z| *z = z.scale(inv));
                let mut ax = a.apply_new(&x);
                matvecs += 1;
                axpy(S::from_real(-theta[i]), &x, &mut ax);
                residuals.push(norm(&ax));
                vectors.push(x);
            }
            let bad = (0..nev).filter(|&i| residuals[i] > tol_of(theta[i])).count();
            if bad == 0 || m == dim {
                return Ok(LanczosResult { values: theta[..nev].to_vec(), vectors, residuals, matvecs, restarts });
            }
            if restarts >= opts.max_restarts {
                return Err(Error::NotConverged { requested: nev, unconverged: bad, iterations: matvecs });
            }
        } else if restarts >= opts.max_restarts {
            let bad = (0..nev).filter(|&i| estimate(i) > tol_of(theta[i])).count();
            return Err(Error::NotConverged { requested: nev, unconverged: bad, iterations: matvecs });
        }

        if pending.is_empty() {
            // the search space is invariant but not yet complete: reseed
            pending = random_block(&v, block, dim, &mut rng);
        }

        // thick restart onto the lowest `keep` Ritz vectors
        let k = keep.min(m);
        let mut compressed = Vec::with_capacity(mmax);
        for i in 0..k {
            let mut x = vec![S::zero(); dim];
            for (r, vr) in v.iter().enumerate() {
                axpy(y[r + i * m], vr, &mut x);
            }
            compressed.push(x);
        }
        v = compressed;
        t.iter_mut().for_each(|z| *z = S::zero());
        for (i, &th) in theta.iter().enumerate().take(k) {
            t[i + i * mmax] = S::from_real(th);
        }
        // the next expansion always follows and resets the coupling
        coupling.clear();
        last_block = 0..0;
        restarts += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::SparseHermitian;
    use num_complex::Complex64;

    fn tridiagonal(n: usize) -> SparseHermitian {
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, Complex64::new(2.0 + (i % 7) as f64 * 0.01, 0.0)));
            if i + 1 < n {
                e.push((i, i + 1, Complex64::new(-1.0, 0.0)));
            }
        }
        SparseHermitian::from_entries(n, e).unwrap()
    }

    fn opts(n: usize) -> LanczosOptions {
        LanczosOptions { n, tol: 1e-11, block: 3, max_basis: 40, max_restarts: 500, seed: 7 }
    }

    #[test]
    fn agrees_with_dense() {
        let h = tridiagonal(300);
        let csr = Csr::<f64>::from_hermitian(&h);
        let res = lowest_eigenpairs(&csr, &opts(6)).unwrap();
        let (dense, _) = f64::eigh(300, &csr.to_dense());
        for i in 0..6 {
            assert!((res.values[i] - dense[i]).abs() < 1e-9, "{} vs {}", res.values[i], dense[i]);
            assert!(res.residuals[i] < 1e-10);
        }
    }

    #[test]
    fn degenerate_spectrum_within_block() {
        // direct sum of three copies of the same tridiagonal matrix
        let base = tridiagonal(60);
        let mut e = Vec::new();
        for copy in 0..3 {
            for (r, c, v) in base.entries() {
                e.push((r + 60 * copy, c + 60 * copy, v));
            }
        }
        let h = SparseHermitian::from_entries(180, e).unwrap();
        let csr = Csr::<f64>::from_hermitian(&h);
        let res = lowest_eigenpairs(&csr, &opts(6)).unwrap();
        let (dense, _) = f64::eigh(180, &csr.to_dense());
        for i in 0..6 {
            assert!((res.values[i] - dense[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn small_space_is_exhausted_exactly() {
        let h = tridiagonal(10);
        let csr = Csr::<Complex64>::from_hermitian(&h);
        let res = lowest_eigenpairs(&csr, &LanczosOptions { n: 10, ..opts(10) }).unwrap();
        let (dense, _) = Complex64::eigh(10, &csr.to_dense());
        for i in 0..10 {
            assert!((res.values[i] - dense[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix() {
        let h = SparseHermitian::zeros(50);
        let csr = Csr::<f64>::from_hermitian(&h);
        let res = lowest_eigenpairs(&csr, &opts(4)).unwrap();
        assert!(res.values.iter().all(|v| *v == 0.0));
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&res.vectors[i], &res.vectors[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let h = tridiagonal(200);
        let csr = Csr::<f64>::from_hermitian(&h);
        let a = lowest_eigenpairs(&csr, &opts(4)).unwrap();
        let b = lowest_eigenpairs(&csr, &opts(4)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}

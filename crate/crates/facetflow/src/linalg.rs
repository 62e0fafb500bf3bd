//! Sparse direct factorizations and a Jacobi-preconditioned conjugate
//! gradient. Everything runs sequentially so repeated runs are bit-identical.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Error, Result};

pub type SparseMatrix = SparseColMat<usize, f64>;

/// Builds an `n x n` matrix; duplicate entries are summed.
pub fn sparse_from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
    let t: Vec<_> = entries
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(n, n, &t)
        .map_err(|e| Error::Factorization(format!("triplet assembly: {e:?}")))
}

/// `y = A x`.
pub fn sparse_matvec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let vals = a.val();
    for (c, &xc) in x.iter().enumerate() {
        for k in cp[c]..cp[c + 1] {
            y[ri[k]] += vals[k] * xc;
        }
    }
    y
}

pub fn sparse_diagonal(a: &SparseMatrix) -> Vec<f64> {
    let mut d = vec![0.0; a.nrows()];
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let vals = a.val();
    for (c, dc) in d.iter_mut().enumerate() {
        for k in cp[c]..cp[c + 1] {
            if ri[k] == c {
                *dc += vals[k];
            }
        }
    }
    d
}

pub enum Factor {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

impl Factor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = match self {
            Factor::Cholesky(f) => f.solve(&rhs),
            Factor::Lu(f) => f.solve(&rhs),
        };
        (0..b.len()).map(|i| x[i]).collect()
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, Factor::Cholesky(_))
    }
}

/// Direct solver that keeps the symbolic analysis while the sparsity
/// pattern stays the same.
#[derive(Default)]
pub struct DirectSolver {
    pattern: Option<(Vec<usize>, Vec<usize>)>,
    llt: Option<SymbolicLlt<usize>>,
    lu: Option<SymbolicLu<usize>>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn sync_pattern(&mut self, a: &SparseMatrix) {
        let cp = a.symbolic().col_ptr();
        let ri = a.symbolic().row_idx();
        let same = matches!(&self.pattern, Some((c, r)) if c.as_slice() == cp && r.as_slice() == ri);
        if !same {
            self.pattern = Some((cp.to_vec(), ri.to_vec()));
            self.llt = None;
            self.lu = None;
        }
    }

    /// Cholesky when `spd`, falling back to LU if it breaks down.
    pub fn factor(&mut self, a: &SparseMatrix, spd: bool) -> Result<Factor> {
        self.sync_pattern(a);
        if spd {
            if self.llt.is_none() {
                self.llt = Some(
                    SymbolicLlt::try_new(a.symbolic(), Side::Lower)
                        .map_err(|e| Error::Factorization(format!("symbolic cholesky: {e:?}")))?,
                );
            }
            let sym = self.llt.clone().expect("symbolic factor present");
            if let Ok(f) = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower) {
                return Ok(Factor::Cholesky(f));
            }
        }
        if self.lu.is_none() {
            self.lu = Some(
                SymbolicLu::try_new(a.symbolic())
                    .map_err(|e| Error::Factorization(format!("symbolic lu: {e:?}")))?,
            );
        }
        let sym = self.lu.clone().expect("symbolic factor present");
        Lu::try_new_with_symbolic(sym, a.as_ref())
            .map(Factor::Lu)
            .map_err(|e| Error::Factorization(format!("lu: {e:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||r_k|| / ||b||`, starting with the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradient for a symmetric positive-definite
/// `apply`. `diag`, when given, is used as a Jacobi preconditioner.
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x0: Option<&[f64]>,
    diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
        };
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => z.iter_mut().zip(r.iter().zip(d)).for_each(|(z, (r, d))| *z = r / d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![dot(&r, &r).sqrt() / bnorm];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while *history.last().unwrap() > tol && iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        history.push(dot(&r, &r).sqrt() / bnorm);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let converged = *history.last().unwrap() <= tol;
    CgOutcome {
        x,
        iterations,
        residual_history: history,
        converged,
    }
}

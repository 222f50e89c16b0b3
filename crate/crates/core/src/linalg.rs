//! Sparse symmetric systems and Jacobi-preconditioned conjugate gradients.
//!
//! Reductions are summed over fixed-size chunks and the partial sums are
//! combined sequentially, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::{Error, Real, Result};

const CHUNK: usize = 2048;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Csr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    let k = vals.len() - 1;
                    vals[k] = vals[k] + v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).fold(T::zero(), |acc, (c, v)| acc + v * x[c]);
        });
    }

    /// `max |K_ij - K_ji|`.
    pub fn max_asymmetry(&self) -> T {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .fold(T::zero(), |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let partial: Vec<T> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).fold(T::zero(), |acc, (&p, &q)| acc + p * q))
        .collect();
    partial.into_iter().fold(T::zero(), |acc, v| acc + v)
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, &xi)| *yi = *yi + alpha * xi);
}

pub(crate) struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// Solves `K x = b` for symmetric positive definite `K`, starting from zero.
pub(crate) fn pcg<T: Real>(k: &Csr<T>, b: &[T], tol: T, max_iter: usize) -> Result<CgOutcome<T>> {
    let n = k.n();
    let bnorm = dot(b, b).sqrt();
    if !bnorm.is_finite() {
        return Err(Error::Numeric("non-finite right-hand side".into()));
    }
    if bnorm == T::zero() {
        return Ok(CgOutcome { x: vec![T::zero(); n], iterations: 0, relative_residual: T::zero() });
    }
    let inv_diag: Vec<T> = k
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut q = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut best = T::infinity();
    for it in 1..=max_iter {
        k.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > T::zero()) {
            return Err(Error::Numeric(format!("conjugate gradients broke down (p·Kp = {pq})")));
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        let res = dot(&r, &r).sqrt() / bnorm;
        if !res.is_finite() {
            return Err(Error::Numeric("non-finite residual in conjugate gradients".into()));
        }
        best = best.min(res);
        if res <= tol {
            return Ok(CgOutcome { x, iterations: it, relative_residual: res });
        }
        z.par_iter_mut()
            .zip(r.par_iter().zip(inv_diag.par_iter()))
            .for_each(|(zi, (&ri, &di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, &zi)| *pi = zi + beta * *pi);
    }
    Err(Error::NonConvergence { iterations: max_iter, best_residual: best.as_f64() })
}

//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver for symmetric positive (semi)definite systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::float::{ceil, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n × n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[s..e].binary_search(&j) {
            Ok(k) => self.vals[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once `‖b − A x‖ ≤ rel_tol · ‖b‖`.
    pub rel_tol: f64,
    /// Defaults to `50·√n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Relative residual `‖b − A x‖ / ‖b‖` recomputed from the returned `x`.
    pub residual: f64,
}

/// How the constant null space of a pure Neumann matrix is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullSpace {
    /// The matrix is nonsingular.
    None,
    /// `A·1 = 0`; the right-hand side must be consistent and residuals are
    /// kept orthogonal to constants.
    Constants,
    /// Row and column of this index are removed (its value fixed at zero).
    Pinned(usize),
}

/// Jacobi-preconditioned conjugate gradients starting from zero.
pub fn pcg(a: &Csr, b: &[f64], null: NullSpace, opts: CgOptions) -> Result<(Vec<f64>, CgReport)> {
    let n = a.dim();
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| ceil(50.0 * sqrt(n as f64)) as usize)
        .max(1);
    let mask = |v: &mut [f64]| match null {
        NullSpace::Pinned(p) => v[p] = 0.0,
        NullSpace::Constants => {
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        NullSpace::None => {}
    };
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if let NullSpace::Pinned(p) = null {
        r[p] = 0.0;
    }
    let bnorm = norm(&r);
    if bnorm == 0.0 {
        return Ok((x, CgReport { iterations: 0, residual: 0.0 }));
    }
    mask(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    if let NullSpace::Pinned(p) = null {
        z[p] = 0.0;
    }
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        if let NullSpace::Pinned(k) = null {
            ap[k] = 0.0;
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged { iterations: it, history });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        mask(&mut r);
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= opts.rel_tol {
            let residual = true_residual(a, &x, b, null) / bnorm;
            return Ok((x, CgReport { iterations: it, residual }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if let NullSpace::Pinned(k) = null {
            z[k] = 0.0;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, history })
}

fn true_residual(a: &Csr, x: &[f64], b: &[f64], null: NullSpace) -> f64 {
    let mut r = a.mul(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    if let NullSpace::Pinned(p) = null {
        r[p] = 0.0;
    }
    norm(&r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![8.0, 2.0]);
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = laplacian_1d(50);
        let exact: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b = a.mul(&exact);
        let (x, rep) = pcg(&a, &b, NullSpace::None, CgOptions::default()).unwrap();
        assert!(rep.residual <= 1e-11);
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn cg_handles_constant_null_space() {
        // Neumann Laplacian on a path graph
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = Csr::from_triplets(n, t);
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        b[n - 1] = -1.0;
        let (x, rep) = pcg(&a, &b, NullSpace::Constants, CgOptions::default()).unwrap();
        assert!(rep.residual <= 1e-11);
        assert!((x[0] - x[n - 1] - (n - 1) as f64).abs() < 1e-9);
        let (y, _) = pcg(&a, &b, NullSpace::Pinned(5), CgOptions::default()).unwrap();
        assert_eq!(y[5], 0.0);
        assert!((y[0] - y[n - 1] - (n - 1) as f64).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_history() {
        let a = laplacian_1d(400);
        let b = vec![1.0; 400];
        let err = pcg(&a, &b, NullSpace::None, CgOptions { rel_tol: 1e-14, max_iter: Some(3) }).unwrap_err();
        match err {
            Error::NotConverged { iterations, history } => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}

//! Small dense square matrices (row-major).

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from nested rows; `None` if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    /// `x^T * self`
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += *xi * *a;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        Self::from_fn(n * m, |r, c| self[(r / m, c / m)] * other[(r % m, c % m)])
    }

    /// Sparsity pattern reachability: `true` if every state reaches every other.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n;
        (0..n).all(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if !seen[j] && self[(i, j)] > T::zero() {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        })
    }

    /// Primitive (irreducible and aperiodic) by Wielandt's bound:
    /// the pattern power `(n-1)^2 + 1` is strictly positive.
    pub fn is_primitive(&self) -> bool {
        let n = self.n;
        if n == 0 {
            return false;
        }
        let pattern: Vec<bool> = self.data.iter().map(|x| *x > T::zero()).collect();
        let mut power = pattern.clone();
        let steps = (n - 1) * (n - 1);
        for _ in 0..steps {
            let mut next = vec![false; n * n];
            for i in 0..n {
                for k in 0..n {
                    if power[i * n + k] {
                        for j in 0..n {
                            if pattern[k * n + j] {
                                next[i * n + j] = true;
                            }
                        }
                    }
                }
            }
            power = next;
            if power.iter().all(|b| *b) {
                return true;
            }
        }
        power.iter().all(|b| *b)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> SquareMatrix<U> {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|x| f(*x)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Cholesky factor `L` (lower, row-major `n×n`) of a symmetric positive
/// semi-definite matrix. Zero pivots within `tol` are accepted and their
/// column is zeroed; a pivot below `-tol` yields `None`.
pub fn cholesky_psd<T: Real>(a: &[Vec<T>], tol: T) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -tol {
            return None;
        }
        if d <= tol {
            // semi-definite direction: the remaining column must vanish too
            for i in (j + 1)..n {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if s.abs() > tol.sqrt() {
                    return None;
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

use super::BivariateCopula;
use crate::scalar::Real;

/// Default number of grid intervals per axis (257 nodes).
pub const DEFAULT_INTERVALS: usize = 256;

/// A copula sampled on a uniform `(n+1)×(n+1)` lattice with bilinear
/// interpolation between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCopula<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> GridCopula<T> {
    /// Builds from nodal values `values[i*(n+1) + j] = C(i/n, j/n)`.
    pub fn from_values(n: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), (n + 1) * (n + 1), "grid size mismatch");
        Self { n, values }
    }

    pub fn sample(c: &impl BivariateCopula<T>, n: usize) -> Self {
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                values.push(c.value(Self::node_of(n, i), Self::node_of(n, j)));
            }
        }
        Self { n, values }
    }

    fn node_of(n: usize, i: usize) -> T {
        T::from_usize_lossy(i) / T::from_usize_lossy(n)
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn node(&self, i: usize) -> T {
        Self::node_of(self.n, i)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * (self.n + 1) + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Largest nodal difference to another grid of the same resolution.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    /// Largest nodal difference to any bivariate copula.
    pub fn max_abs_diff_to(&self, c: &impl BivariateCopula<T>) -> T {
        let mut worst = T::zero();
        for i in 0..=self.n {
            for j in 0..=self.n {
                let d = (self.at(i, j) - c.value(self.node(i), self.node(j))).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Cell index and fractional offset; the upper edge belongs to the last cell.
    fn locate(&self, x: T) -> (usize, T) {
        let scaled = x.max(T::zero()).min(T::one()) * T::from_usize_lossy(self.n);
        let i = scaled.floor().to_usize().unwrap_or(0).min(self.n - 1);
        (i, scaled - T::from_usize_lossy(i))
    }
}

impl<T: Real> BivariateCopula<T> for GridCopula<T> {
    fn value(&self, u: T, v: T) -> T {
        let (i, fu) = self.locate(u);
        let (j, fv) = self.locate(v);
        let one = T::one();
        self.at(i, j) * (one - fu) * (one - fv)
            + self.at(i + 1, j) * fu * (one - fv)
            + self.at(i, j + 1) * (one - fu) * fv
            + self.at(i + 1, j + 1) * fu * fv
    }

    fn partial_u(&self, u: T, v: T) -> T {
        let (i, _) = self.locate(u);
        let (j, fv) = self.locate(v);
        let n = T::from_usize_lossy(self.n);
        let lo = self.at(i + 1, j) - self.at(i, j);
        let hi = self.at(i + 1, j + 1) - self.at(i, j + 1);
        (lo * (T::one() - fv) + hi * fv) * n
    }

    fn partial_v(&self, u: T, v: T) -> T {
        let (i, fu) = self.locate(u);
        let (j, _) = self.locate(v);
        let n = T::from_usize_lossy(self.n);
        let lo = self.at(i, j + 1) - self.at(i, j);
        let hi = self.at(i + 1, j + 1) - self.at(i + 1, j);
        (lo * (T::one() - fu) + hi * fu) * n
    }
}

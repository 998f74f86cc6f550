//! Finite-state chains: transitions from copulas, stationary laws, joint
//! composition and the no-Granger check.

use serde::{Deserialize, Serialize};

use crate::copula::{BivariateCopula, CopulaSpec};
use crate::error::{Error, Result};
use crate::numeric::SquareMatrix;
use crate::scalar::Real;

const STOCHASTIC_TOL: f64 = 1e-12;
/// Second differences in `(-CLAMP_TOL, 0)` are treated as rounding noise.
const CLAMP_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 1_000_000;

/// Ordered states with real values (capacity levels, power levels, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedStateSpace<T> {
    labels: Vec<String>,
    values: Vec<T>,
}

impl<T: Real> OrderedStateSpace<T> {
    pub fn new(labels: Vec<String>, values: Vec<T>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("state space is empty".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("state values must be strictly increasing".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate state label {l:?}")));
            }
        }
        Ok(Self { labels, values })
    }

    /// States `0, 1, …, n-1` labelled by their index.
    pub fn indexed(n: usize) -> Self {
        Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
            values: (0..n).map(T::from_usize_lossy).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// A probability vector over a finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistribution<T> {
    probs: Vec<T>,
}

impl<T: Real> MarginalDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let tol = T::tol(STOCHASTIC_TOL);
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        if probs.iter().any(|p| !(*p >= -tol)) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p.max(T::zero())).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![T::one() / T::from_usize_lossy(n); n],
        }
    }

    /// A point mass on state `i` of `n`.
    pub fn point(n: usize, i: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[i] = T::one();
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// `F(i) = Σ_{s ≤ i} p(s)`, with the last entry pinned to exactly 1.
    pub fn cdf(&self) -> Vec<T> {
        let mut acc = T::zero();
        let mut out: Vec<T> = self
            .probs
            .iter()
            .map(|p| {
                acc += *p;
                acc
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = T::one();
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

/// A row-stochastic matrix, optionally tagged with its step in a
/// time-inhomogeneous sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix<T> {
    matrix: SquareMatrix<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_index: Option<usize>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn new(matrix: SquareMatrix<T>) -> Result<Self> {
        let tol = T::tol(STOCHASTIC_TOL);
        if matrix.dim() == 0 {
            return Err(Error::InvalidParameter("empty transition matrix".into()));
        }
        for i in 0..matrix.dim() {
            let row = matrix.row(i);
            if row.iter().any(|p| !(*p >= -tol && *p <= T::one() + tol)) {
                return Err(Error::InvalidParameter(format!("row {i} has entries outside [0, 1]")));
            }
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol {
                return Err(Error::InvalidParameter(format!("row {i} sums to {total}, not 1")));
            }
        }
        Ok(Self {
            matrix,
            time_index: None,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = SquareMatrix::from_rows(rows).ok_or(Error::DimensionMismatch {
            expected: rows.len(),
            got: rows.iter().map(Vec::len).find(|l| *l != rows.len()).unwrap_or(0),
        })?;
        Self::new(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: SquareMatrix::identity(n),
            time_index: None,
        }
    }

    pub fn with_time_index(mut self, step: usize) -> Self {
        self.time_index = Some(step);
        self
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time_index
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.matrix.rows()
    }

    /// `ϖ P`.
    pub fn propagate(&self, varpi: &MarginalDistribution<T>) -> MarginalDistribution<T> {
        MarginalDistribution {
            probs: self.matrix.vec_mul(varpi.probs()),
        }
    }

    /// CSV with header `from,to,prob`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("from,to,prob\n");
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out.push_str(&format!("{i},{j},{}\n", self.get(i, j)));
            }
        }
        out
    }
}

/// Transition matrix whose one-step joint law has copula `copula` with the
/// given marginals: `p_ij` is the rectangle mass of `C` on the marginal-CDF
/// lattice divided by `ϖ_i`.
pub fn transition_from_copula<T: Real>(
    copula: &impl BivariateCopula<T>,
    marginal_now: &MarginalDistribution<T>,
    marginal_next: &MarginalDistribution<T>,
) -> Result<TransitionMatrix<T>> {
    let n = marginal_now.len();
    if marginal_next.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: marginal_next.len(),
        });
    }
    copula.ensure_bivariate()?;
    for (i, p) in marginal_now.probs().iter().chain(marginal_next.probs()).enumerate() {
        if *p <= T::zero() {
            return Err(Error::ZeroMassState(i % n));
        }
    }
    let f = marginal_now.cdf();
    let g = marginal_next.cdf();
    let lattice = |i: Option<usize>, j: Option<usize>| match (i, j) {
        (Some(i), Some(j)) => copula.value(f[i], g[j]),
        _ => T::zero(),
    };
    let clamp = T::tol(CLAMP_TOL);
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        let below = i.checked_sub(1);
        for j in 0..n {
            let left = j.checked_sub(1);
            let mass = lattice(Some(i), Some(j)) - lattice(below, Some(j)) - lattice(Some(i), left)
                + lattice(below, left);
            if mass < -clamp {
                return Err(Error::InfeasibleCopula {
                    step: None,
                    from: i,
                    to: j,
                    value: mass.as_f64(),
                });
            }
            m[(i, j)] = mass.max(T::zero()) / marginal_now.probs()[i];
        }
        let total: T = m.row(i).iter().copied().sum();
        for j in 0..n {
            m[(i, j)] /= total;
        }
    }
    TransitionMatrix::new(m)
}

/// `Σ_{s ≤ x} ϖ(s) P(s, s' ≤ y)` at every pair of state thresholds.
pub fn joint_lattice<T: Real>(varpi: &MarginalDistribution<T>, p: &TransitionMatrix<T>) -> Vec<Vec<T>> {
    let n = p.dim();
    let mut out = vec![vec![T::zero(); n]; n];
    for x in 0..n {
        for y in 0..n {
            let prev = if x > 0 { out[x - 1][y] } else { T::zero() };
            let row: T = (0..=y).map(|j| p.get(x, j)).sum();
            out[x][y] = prev + varpi.probs()[x] * row;
        }
    }
    out
}

/// Stationary distribution of a primitive chain by power iteration from
/// the uniform vector.
pub fn stationary_distribution<T: Real>(p: &TransitionMatrix<T>) -> Result<MarginalDistribution<T>> {
    if !p.matrix().is_primitive() {
        return Err(Error::NonErgodic);
    }
    let n = p.dim();
    let tol = T::tol(POWER_TOL);
    let mut pi = vec![T::one() / T::from_usize_lossy(n); n];
    for _ in 0..POWER_MAX_ITER {
        let mut next = p.matrix().vec_mul(&pi);
        let total: T = next.iter().copied().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        pi = next;
        if change < tol {
            return Ok(MarginalDistribution { probs: pi });
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
    })
}

/// A chain over the product of several coordinate state spaces. Joint
/// states are enumerated lexicographically with the first coordinate most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointChain<T> {
    pub dims: Vec<usize>,
    pub transitions: TransitionMatrix<T>,
}

impl<T: Real> JointChain<T> {
    pub fn coordinates(&self, state: usize) -> Vec<usize> {
        decode(&self.dims, state)
    }
}

fn decode(dims: &[usize], mut state: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, d) in dims.iter().enumerate().rev() {
        out[k] = state % d;
        state /= d;
    }
    out
}

/// Joint chain of independently evolving coordinates.
///
/// Exact composition requires spatial independence: the product copula, or a
/// Gaussian copula whose correlation matrix is the identity. Any other
/// spatial copula is rejected with [`Error::UnsupportedSpatialCopula`].
pub fn compose_joint_chain<T: Real>(
    components: &[(OrderedStateSpace<T>, TransitionMatrix<T>)],
    spatial: &CopulaSpec<T>,
) -> Result<JointChain<T>> {
    let independent = match spatial {
        CopulaSpec::Product => true,
        CopulaSpec::Gaussian(g) => {
            let c = g.correlation();
            (0..c.len()).all(|i| (0..c.len()).all(|j| i == j || c[i][j] == T::zero()))
        }
        _ => false,
    };
    if !independent {
        return Err(Error::UnsupportedSpatialCopula(spatial.family_name().into()));
    }
    if components.is_empty() {
        return Err(Error::InvalidParameter("no component chains".into()));
    }
    for (space, p) in components {
        if space.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: p.dim(),
            });
        }
    }
    let mut joint = components[0].1.matrix().clone();
    for (_, p) in &components[1..] {
        joint = joint.kron(p.matrix());
    }
    Ok(JointChain {
        dims: components.iter().map(|(s, _)| s.len()).collect(),
        transitions: TransitionMatrix::new(joint)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoGrangerReport<T> {
    pub pass: bool,
    pub max_residual: T,
}

/// Checks that the next-step law of `coordinate` depends on the current
/// joint state only through that coordinate's own current value.
pub fn check_no_granger<T: Real>(joint: &JointChain<T>, coordinate: usize) -> Result<NoGrangerReport<T>> {
    let dims = &joint.dims;
    if coordinate >= dims.len() {
        return Err(Error::InvalidParameter(format!("coordinate {coordinate} out of range")));
    }
    let p = &joint.transitions;
    let n = p.dim();
    let d = dims[coordinate];
    // next-step marginal of the coordinate, for every joint state
    let marginals: Vec<Vec<T>> = (0..n)
        .map(|s| {
            let mut q = vec![T::zero(); d];
            for t in 0..n {
                q[decode(dims, t)[coordinate]] += p.get(s, t);
            }
            q
        })
        .collect();
    let mut worst = T::zero();
    for a in 0..n {
        let ca = decode(dims, a)[coordinate];
        for (b, mb) in marginals.iter().enumerate().skip(a + 1) {
            if decode(dims, b)[coordinate] != ca {
                continue;
            }
            for (x, y) in marginals[a].iter().zip(mb) {
                worst = worst.max((*x - *y).abs());
            }
        }
    }
    Ok(NoGrangerReport {
        pass: worst < T::tol(STOCHASTIC_TOL),
        max_residual: worst,
    })
}

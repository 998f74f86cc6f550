//! Markov additive capacity models: a modulating chain plus a capacity law
//! on every transition.

use serde::{Deserialize, Serialize};

use crate::channel::{IncrementLaw, SnrMatrix};
use crate::error::{Error, Result};
use crate::markov::{stationary_distribution, MarginalDistribution, OrderedStateSpace, TransitionMatrix};
use crate::scalar::Real;

/// Transitions of the modulating chain. A sequence is applied cyclically:
/// step `k` uses entry `k mod len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionSchedule<T> {
    Homogeneous(TransitionMatrix<T>),
    Sequence(Vec<TransitionMatrix<T>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovAdditiveModel<T> {
    states: OrderedStateSpace<T>,
    schedule: TransitionSchedule<T>,
    laws: Vec<Vec<IncrementLaw<T>>>,
}

impl<T: Real> MarkovAdditiveModel<T> {
    pub fn new(
        states: OrderedStateSpace<T>,
        schedule: TransitionSchedule<T>,
        laws: Vec<Vec<IncrementLaw<T>>>,
    ) -> Result<Self> {
        let n = states.len();
        let mats: Vec<&TransitionMatrix<T>> = match &schedule {
            TransitionSchedule::Homogeneous(p) => vec![p],
            TransitionSchedule::Sequence(ps) => ps.iter().collect(),
        };
        if mats.is_empty() {
            return Err(Error::InvalidParameter("empty transition sequence".into()));
        }
        for p in &mats {
            if p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
            }
        }
        if laws.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: laws.len() });
        }
        for row in &laws {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for law in row {
                law.validate()?;
            }
        }
        Ok(Self { states, schedule, laws })
    }

    pub fn homogeneous(p: TransitionMatrix<T>, laws: Vec<Vec<IncrementLaw<T>>>) -> Result<Self> {
        Self::new(OrderedStateSpace::indexed(p.dim()), TransitionSchedule::Homogeneous(p), laws)
    }

    /// Rayleigh capacity on every transition, with `γ_ij` from `snr`.
    pub fn rayleigh(p: TransitionMatrix<T>, bandwidth: T, snr: &SnrMatrix<T>) -> Result<Self> {
        let n = p.dim();
        if snr.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: snr.dim() });
        }
        let laws = (0..n)
            .map(|i| (0..n).map(|j| IncrementLaw::rayleigh(bandwidth, snr.get(i, j))).collect())
            .collect::<Result<_>>()?;
        Self::homogeneous(p, laws)
    }

    /// One state that always returns to itself: i.i.d. increments.
    pub fn single_state(law: IncrementLaw<T>) -> Result<Self> {
        Self::homogeneous(TransitionMatrix::identity(1), vec![vec![law]])
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &OrderedStateSpace<T> {
        &self.states
    }

    pub fn schedule(&self) -> &TransitionSchedule<T> {
        &self.schedule
    }

    pub fn law(&self, i: usize, j: usize) -> &IncrementLaw<T> {
        &self.laws[i][j]
    }

    pub fn laws(&self) -> &[Vec<IncrementLaw<T>>] {
        &self.laws
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.schedule, TransitionSchedule::Homogeneous(_))
    }

    /// Transition matrix used from step `step` to `step + 1`.
    pub fn transition(&self, step: usize) -> &TransitionMatrix<T> {
        match &self.schedule {
            TransitionSchedule::Homogeneous(p) => p,
            TransitionSchedule::Sequence(ps) => &ps[step % ps.len()],
        }
    }

    pub fn homogeneous_matrix(&self) -> Result<&TransitionMatrix<T>> {
        match &self.schedule {
            TransitionSchedule::Homogeneous(p) => Ok(p),
            TransitionSchedule::Sequence(_) => Err(Error::InhomogeneousModel),
        }
    }

    /// Stationary distribution of the modulating chain; a single state is
    /// trivially stationary.
    pub fn stationary(&self) -> Result<MarginalDistribution<T>> {
        let p = self.homogeneous_matrix()?;
        if p.dim() == 1 {
            return Ok(MarginalDistribution::point(1, 0));
        }
        stationary_distribution(p)
    }

    /// Long-run mean capacity per slot `Σ π_i p_ij E[C_ij]`.
    pub fn mean_increment(&self) -> Result<T> {
        let pi = self.stationary()?;
        Ok(self.mean_increment_from(pi.probs(), self.homogeneous_matrix()?))
    }

    /// Expected increment of one step taken from the state distribution `dist`.
    pub fn mean_increment_from(&self, dist: &[T], p: &TransitionMatrix<T>) -> T {
        let n = self.dim();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let w = dist[i] * p.get(i, j);
                if w > T::zero() {
                    total += w * self.laws[i][j].mean();
                }
            }
        }
        total
    }
}

//! Dependence control: planning the transitions of a controllable parameter
//! from target temporal copulas, and assembling the resulting capacity model.

use serde::{Deserialize, Serialize};

use crate::channel::{IncrementLaw, SnrMatrix};
use crate::copula::CopulaSpec;
use crate::error::{Error, Result};
use crate::markov::{
    compose_joint_chain, transition_from_copula, MarginalDistribution, OrderedStateSpace, TransitionMatrix,
};
use crate::model::{MarkovAdditiveModel, TransitionSchedule};
use crate::numeric::matrix::cholesky_psd;
use crate::numeric::normal;
use crate::scalar::Real;

/// Which ordering of the states the temporal copula refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// The copula couples the states in their listed (increasing) order.
    #[default]
    Capacity,
    /// The copula couples the states in reverse order, as for the net
    /// increment `λ - C` when capacity increases with the state value.
    NetIncrement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan<T> {
    pub states: OrderedStateSpace<T>,
    pub copulas: Vec<CopulaSpec<T>>,
    pub orientation: Orientation,
    /// `P_j` for `j = 0..t`.
    pub transitions: Vec<TransitionMatrix<T>>,
    /// `ϖ_0, ..., ϖ_t` with `ϖ_{j+1} = ϖ_j P_j`.
    pub marginals: Vec<MarginalDistribution<T>>,
}

impl<T: Real> ControlPlan<T> {
    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> &MarginalDistribution<T> {
        &self.marginals[0]
    }

    /// All steps use the same matrix, up to rounding in the propagated marginals.
    pub fn is_constant(&self) -> bool {
        let tol = T::tol(1e-12);
        self.transitions
            .windows(2)
            .all(|w| w[0].matrix().max_abs_diff(w[1].matrix()) <= tol)
    }

    /// The matrices as a time-homogeneous or cyclic schedule.
    pub fn schedule(&self) -> TransitionSchedule<T> {
        if self.is_constant() {
            TransitionSchedule::Homogeneous(self.transitions[0].clone())
        } else {
            TransitionSchedule::Sequence(self.transitions.clone())
        }
    }

    /// JSON array of steps, each with its row-major matrix and the marginal it
    /// starts from.
    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<serde_json::Value> = self
            .transitions
            .iter()
            .enumerate()
            .map(|(j, p)| {
                serde_json::json!({
                    "step": j,
                    "marginal": self.marginals[j].probs().iter().map(|x| x.as_f64()).collect::<Vec<_>>(),
                    "matrix": p.rows().iter().map(|r| r.iter().map(|x| x.as_f64()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "steps": steps,
            "final_marginal": self.marginals[self.horizon()].probs().iter().map(|x| x.as_f64()).collect::<Vec<_>>(),
        })
    }
}

fn reversed<T: Real>(m: &MarginalDistribution<T>) -> Result<MarginalDistribution<T>> {
    MarginalDistribution::new(m.probs().iter().rev().copied().collect())
}

fn step_transition<T: Real>(
    copula: &CopulaSpec<T>,
    now: &MarginalDistribution<T>,
    next: &MarginalDistribution<T>,
    orientation: Orientation,
) -> Result<TransitionMatrix<T>> {
    match orientation {
        Orientation::Capacity => transition_from_copula(copula, now, next),
        Orientation::NetIncrement => {
            let n = now.len();
            let p = transition_from_copula(copula, &reversed(now)?, &reversed(next)?)
                .map_err(|e| match e {
                    Error::InfeasibleCopula { step, from, to, value } => Error::InfeasibleCopula {
                        step,
                        from: n - 1 - from,
                        to: n - 1 - to,
                        value,
                    },
                    Error::ZeroMassState(i) => Error::ZeroMassState(n - 1 - i),
                    other => other,
                })?;
            let rows: Vec<Vec<T>> = (0..n)
                .map(|i| (0..n).map(|j| p.get(n - 1 - i, n - 1 - j)).collect())
                .collect();
            TransitionMatrix::from_rows(&rows)
        }
    }
}

/// Transition matrices realising `copulas[j]` between successive levels.
///
/// Step `j` couples `ϖ_j` with the target marginal `targets[j]`, or with
/// `ϖ_j` itself when no targets are given, and then propagates
/// `ϖ_{j+1} = ϖ_j P_j`. A copula that is infeasible for its marginals stops
/// the plan with the failing step attached.
pub fn plan_transitions<T: Real>(
    copulas: &[CopulaSpec<T>],
    varpi0: &MarginalDistribution<T>,
    states: &OrderedStateSpace<T>,
    targets: Option<&[MarginalDistribution<T>]>,
    orientation: Orientation,
) -> Result<ControlPlan<T>> {
    if copulas.is_empty() {
        return Err(Error::InvalidParameter("plan needs at least one step".into()));
    }
    if varpi0.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: varpi0.len(),
        });
    }
    if let Some(t) = targets {
        if t.len() != copulas.len() {
            return Err(Error::DimensionMismatch {
                expected: copulas.len(),
                got: t.len(),
            });
        }
    }
    let mut marginals = vec![varpi0.clone()];
    let mut transitions = Vec::with_capacity(copulas.len());
    for (j, c) in copulas.iter().enumerate() {
        let now = &marginals[j];
        let next = targets.map(|t| &t[j]).unwrap_or(now);
        let p = step_transition(c, now, next, orientation)
            .map_err(|e| match e {
                Error::InfeasibleCopula { from, to, value, .. } => Error::InfeasibleCopula {
                    step: Some(j),
                    from,
                    to,
                    value,
                },
                other => other,
            })?
            .with_time_index(j);
        marginals.push(p.propagate(now));
        transitions.push(p);
    }
    Ok(ControlPlan {
        states: states.clone(),
        copulas: copulas.to_vec(),
        orientation,
        transitions,
        marginals,
    })
}

/// Result of assembling a controlled system.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlledModel<T> {
    /// A Markov additive model on the joint chain, usable by every analysis.
    Exact(MarkovAdditiveModel<T>),
    /// A spatially dependent model that can only be simulated.
    SimulationOnly(GaussianJointModel<T>),
}

/// Builds the capacity model of a planned controllable parameter together
/// with an uncontrolled chain (`None` for a single-state channel).
///
/// Spatially independent coordinates compose exactly into a product chain
/// with the controllable coordinate first; `snr` is then indexed by joint
/// states. A 4-dimensional Gaussian spatial copula describes a latent
/// Gaussian vector over two consecutive slots and yields a
/// simulation-only model (see [`GaussianJointModel`]); `snr` is then indexed
/// by power states.
pub fn assemble_controlled_model<T: Real>(
    plan: &ControlPlan<T>,
    fading: Option<(&OrderedStateSpace<T>, &TransitionMatrix<T>)>,
    spatial: &CopulaSpec<T>,
    snr: &SnrMatrix<T>,
    bandwidth: T,
) -> Result<ControlledModel<T>> {
    if let CopulaSpec::Gaussian(g) = spatial {
        if g.dim() == 4 {
            let target = &plan.marginals[1];
            return Ok(ControlledModel::SimulationOnly(GaussianJointModel::new(
                g.correlation(),
                target,
                plan.initial(),
                snr.clone(),
                bandwidth,
            )?));
        }
    }
    let power_dim = plan.states.len();
    let (space, schedule) = match fading {
        None => (plan.states.clone(), plan.schedule()),
        Some((fspace, fp)) => {
            let compose = |p: &TransitionMatrix<T>| -> Result<TransitionMatrix<T>> {
                Ok(compose_joint_chain(&[(plan.states.clone(), p.clone()), (fspace.clone(), fp.clone())], spatial)?
                    .transitions)
            };
            let schedule = match plan.schedule() {
                TransitionSchedule::Homogeneous(p) => TransitionSchedule::Homogeneous(compose(&p)?),
                TransitionSchedule::Sequence(ps) => {
                    TransitionSchedule::Sequence(ps.iter().map(compose).collect::<Result<_>>()?)
                }
            };
            (OrderedStateSpace::indexed(power_dim * fspace.len()), schedule)
        }
    };
    let n = space.len();
    if snr.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: snr.dim() });
    }
    let laws = (0..n)
        .map(|i| (0..n).map(|j| IncrementLaw::rayleigh(bandwidth, snr.get(i, j))).collect())
        .collect::<Result<_>>()?;
    Ok(ControlledModel::Exact(MarkovAdditiveModel::new(space, schedule, laws)?))
}

/// Power and fading driven by a stationary Gaussian VAR(1) latent process.
///
/// The 4×4 correlation is ordered `(X¹_j, X²_j, X¹_{j+1}, X²_{j+1})`.
/// `X¹` is the latent power: the power state is the band of the
/// target marginal's quantiles containing `Φ(X¹)`. `X²` is the latent
/// fading, mapped to a unit exponential gain `Z = -ln(1 - Φ(X²))`. The slot
/// capacity is `W log₂(1 + γ_{ik} Z_j)` for a power transition `i → k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianJointModel<T> {
    pub bandwidth: T,
    pub snr: SnrMatrix<T>,
    /// `Φ(X¹)` cut points of the power states (interior CDF values).
    pub cdf_cuts: Vec<T>,
    pub initial: MarginalDistribution<T>,
    /// `Y_{j+1} = A Y_j + L ε` with `Y = (X¹, X²)`, `ε` standard normal.
    pub a: [[T; 2]; 2],
    pub l: [[T; 2]; 2],
    /// Same-slot correlation of `X¹` and `X²`.
    pub rho0: T,
}

impl<T: Real> GaussianJointModel<T> {
    pub fn new(
        sigma: &[Vec<T>],
        power_marginal: &MarginalDistribution<T>,
        initial: &MarginalDistribution<T>,
        snr: SnrMatrix<T>,
        bandwidth: T,
    ) -> Result<Self> {
        if sigma.len() != 4 || sigma.iter().any(|r| r.len() != 4) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: sigma.len(),
            });
        }
        let n = power_marginal.len();
        if initial.len() != n || snr.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if initial.len() != n { initial.len() } else { snr.dim() },
            });
        }
        let tol = T::tol(1e-12);
        if (sigma[0][1] - sigma[2][3]).abs() > tol {
            return Err(Error::InvalidParameter(
                "same-slot correlation must agree between the two slots".into(),
            ));
        }
        let rho0 = sigma[0][1];
        // Γ0 = [[1, ρ0], [ρ0, 1]], B = Cov(Y_j, Y_{j+1}), A = Bᵀ Γ0⁻¹
        let det = T::one() - rho0 * rho0;
        if !(det > T::zero()) {
            return Err(Error::NotPositiveSemiDefinite);
        }
        let inv = [[T::one() / det, -rho0 / det], [-rho0 / det, T::one() / det]];
        let b = [[sigma[0][2], sigma[0][3]], [sigma[1][2], sigma[1][3]]];
        let bt = [[b[0][0], b[1][0]], [b[0][1], b[1][1]]];
        let a = mul2(&bt, &inv);
        let gamma0 = [[T::one(), rho0], [rho0, T::one()]];
        let aga = mul2(&mul2(&a, &gamma0), &[[a[0][0], a[1][0]], [a[0][1], a[1][1]]]);
        let q: Vec<Vec<T>> = (0..2)
            .map(|i| (0..2).map(|j| gamma0[i][j] - aga[i][j]).collect())
            .collect();
        let chol = cholesky_psd(&q, T::tol(1e-12)).ok_or(Error::NotPositiveSemiDefinite)?;
        let cdf = power_marginal.cdf();
        Ok(Self {
            bandwidth,
            snr,
            cdf_cuts: cdf[..n - 1].to_vec(),
            initial: initial.clone(),
            a,
            l: [[chol[0][0], chol[0][1]], [chol[1][0], chol[1][1]]],
            rho0,
        })
    }

    pub fn power_states(&self) -> usize {
        self.cdf_cuts.len() + 1
    }

    /// Power state of a latent value.
    pub fn power_state(&self, x1: T) -> usize {
        let u = normal::cdf(x1);
        self.cdf_cuts.iter().take_while(|c| u > **c).count()
    }

    /// `(Φ(lower), Φ(upper))` band of power state `i`.
    pub fn band(&self, i: usize) -> (T, T) {
        let lo = if i == 0 { T::zero() } else { self.cdf_cuts[i - 1] };
        let hi = if i + 1 == self.power_states() { T::one() } else { self.cdf_cuts[i] };
        (lo, hi)
    }

    /// Unit exponential fading gain of a latent value.
    pub fn fading_gain(x2: T) -> T {
        // -ln(1 - Φ(x)) = -ln Φ(-x)
        -normal::cdf(-x2).ln()
    }
}

fn mul2<T: Real>(x: &[[T; 2]; 2], y: &[[T; 2]; 2]) -> [[T; 2]; 2] {
    let mut out = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::joint_lattice;
    use crate::copula::BivariateCopula;

    fn pi() -> MarginalDistribution<f64> {
        MarginalDistribution::new(vec![0.3, 0.7]).unwrap()
    }

    #[test]
    fn constant_frechet_plan() {
        let c = CopulaSpec::frechet_alpha(0.5).unwrap();
        let plan = plan_transitions(&vec![c; 5], &pi(), &OrderedStateSpace::indexed(2), None, Orientation::Capacity)
            .unwrap();
        let want = [[0.4125, 0.5875], [0.2518, 0.7482]];
        for p in &plan.transitions {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((p.get(i, j) - want[i][j]).abs() < 5e-5);
                }
            }
        }
        assert!(plan.is_constant());
        for m in &plan.marginals {
            assert!(m.max_abs_diff(&pi()) < 1e-12);
        }
    }

    #[test]
    fn product_plan_is_rank_one() {
        let varpi = MarginalDistribution::new(vec![0.2f64, 0.5, 0.3]).unwrap();
        let plan = plan_transitions(
            &[CopulaSpec::Product, CopulaSpec::Product],
            &varpi,
            &OrderedStateSpace::indexed(3),
            None,
            Orientation::Capacity,
        )
        .unwrap();
        for p in &plan.transitions {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((p.get(i, j) - varpi.probs()[j]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn alternating_plan_reproduces_each_copula() {
        let copulas: Vec<CopulaSpec<f64>> = [0.5, -0.5, 0.5, -0.5]
            .iter()
            .map(|a| CopulaSpec::frechet_alpha(*a).unwrap())
            .collect();
        let targets = vec![
            MarginalDistribution::new(vec![0.5, 0.5]).unwrap(),
            pi(),
            MarginalDistribution::new(vec![0.4, 0.6]).unwrap(),
            pi(),
        ];
        let plan = plan_transitions(
            &copulas,
            &pi(),
            &OrderedStateSpace::indexed(2),
            Some(&targets),
            Orientation::Capacity,
        )
        .unwrap();
        assert!(!plan.is_constant());
        for (j, c) in copulas.iter().enumerate() {
            let lattice = joint_lattice(&plan.marginals[j], &plan.transitions[j]);
            let (f, g) = (plan.marginals[j].cdf(), plan.marginals[j + 1].cdf());
            assert!(plan.marginals[j + 1].max_abs_diff(&targets[j]) < 1e-12);
            for x in 0..2 {
                for y in 0..2 {
                    assert!((lattice[x][y] - c.value(f[x], g[y])).abs() < 1e-12, "step {j}");
                }
            }
        }
    }

    #[test]
    fn empty_target_state_stops_the_plan() {
        let targets = vec![pi(), MarginalDistribution::new(vec![1.0, 0.0]).unwrap()];
        let r = plan_transitions(
            &[CopulaSpec::Product, CopulaSpec::Countermonotone],
            &pi(),
            &OrderedStateSpace::indexed(2),
            Some(&targets),
            Orientation::Capacity,
        );
        assert!(matches!(r, Err(Error::ZeroMassState(1))), "{r:?}");
    }

    #[test]
    fn orientation_matters_only_for_asymmetric_copulas() {
        let c = CopulaSpec::frechet_alpha(0.5).unwrap();
        let states = OrderedStateSpace::indexed(2);
        let a = plan_transitions(&[c.clone()], &pi(), &states, None, Orientation::Capacity).unwrap();
        let b = plan_transitions(&[c], &pi(), &states, None, Orientation::NetIncrement).unwrap();
        assert!(a.transitions[0].matrix().max_abs_diff(b.transitions[0].matrix()) < 1e-15);
    }

    #[test]
    fn single_state_fading_gives_power_chain() {
        let g = 0.5f64.exp();
        let plan = plan_transitions(
            &[CopulaSpec::frechet_alpha(-0.5).unwrap()],
            &pi(),
            &OrderedStateSpace::indexed(2),
            None,
            Orientation::Capacity,
        )
        .unwrap();
        let snr = SnrMatrix::new(vec![vec![g, g], vec![0.7 * g, 0.7 * g]]).unwrap();
        let ControlledModel::Exact(m) =
            assemble_controlled_model(&plan, None, &CopulaSpec::Product, &snr, 20_000.0).unwrap()
        else {
            panic!("expected an exact model")
        };
        assert_eq!(m.homogeneous_matrix().unwrap().matrix(), plan.transitions[0].matrix());
        assert_eq!(m.law(1, 0), &IncrementLaw::rayleigh(20_000.0, 0.7 * g).unwrap());
    }

    #[test]
    fn product_fading_composes() {
        let plan = plan_transitions(
            &[CopulaSpec::Comonotone],
            &pi(),
            &OrderedStateSpace::indexed(2),
            None,
            Orientation::Capacity,
        )
        .unwrap();
        let fp = TransitionMatrix::from_rows(&[vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let fs = OrderedStateSpace::indexed(2);
        let snr = SnrMatrix::by_origin(&[4.0, 2.0, 3.0, 1.0]).unwrap();
        let ControlledModel::Exact(m) =
            assemble_controlled_model(&plan, Some((&fs, &fp)), &CopulaSpec::Product, &snr, 1.0).unwrap()
        else {
            panic!("expected an exact model")
        };
        let p = m.homogeneous_matrix().unwrap();
        // frozen power: no mass between power levels
        assert_eq!(p.get(0, 2), 0.0);
        assert!((p.get(1, 0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn gaussian_spatial_is_simulation_only() {
        let sigma = vec![
            vec![1.0, 0.1, -0.5, 0.0],
            vec![0.1, 1.0, 0.0, 0.0],
            vec![-0.5, 0.0, 1.0, 0.1],
            vec![0.0, 0.0, 0.1, 1.0],
        ];
        let spatial = CopulaSpec::gaussian(sigma).unwrap();
        let varpi = MarginalDistribution::uniform(2);
        let plan = plan_transitions(
            &[CopulaSpec::gaussian_bivariate(-0.5).unwrap()],
            &varpi,
            &OrderedStateSpace::indexed(2),
            Some(&[pi()]),
            Orientation::Capacity,
        )
        .unwrap();
        let snr = SnrMatrix::by_origin(&[1.6, 1.1]).unwrap();
        let ControlledModel::SimulationOnly(g) = assemble_controlled_model(&plan, None, &spatial, &snr, 1.0).unwrap()
        else {
            panic!("expected a simulation-only model")
        };
        // stationarity of the VAR: A Γ0 Aᵀ + L Lᵀ = Γ0
        let gamma0 = [[1.0, 0.1], [0.1, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for k in 0..2 {
                    for m in 0..2 {
                        v += g.a[i][k] * gamma0[k][m] * g.a[j][m];
                    }
                    v += g.l[i][k] * g.l[j][k];
                }
                assert!((v - gamma0[i][j]).abs() < 1e-14);
            }
        }
        assert_eq!(g.power_state(-2.0), 0);
        assert_eq!(g.power_state(2.0), 1);
        assert_eq!(g.band(0), (0.0, 0.3));
        assert!((GaussianJointModel::fading_gain(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}

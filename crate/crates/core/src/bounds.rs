//! Two-sided exponential bounds on cumulative capacity, delay and backlog.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::MarginalDistribution;
use crate::model::MarkovAdditiveModel;
use crate::numeric::optimize::{bisect, golden_min};
use crate::scalar::Real;
use crate::spectral::{adjustment_coefficient, build_kernel, perron, AdjustmentCoefficient};

/// Smallest free exponent, relative to the reciprocal of the mean increment.
/// Below it `κ(θ)/θ` is dominated by rounding in `κ`.
const THETA_MIN_REL: f64 = 1e-6;
/// Largest free exponent, per bit.
const THETA_MAX: f64 = 1e3;
/// Golden-section tolerance on `ln θ`.
const LOG_THETA_TOL: f64 = 1e-9;

/// Lower and upper probability bounds over an axis.
///
/// `theta` records the exponent behind the upper bound at each point and
/// `clamped` flags points where either bound was cut back into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundCurve<T> {
    pub x: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub theta: Vec<T>,
    pub clamped: Vec<bool>,
}

impl<T: Real> TailBoundCurve<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,lower,upper,theta,clamped\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.x[k], self.lower[k], self.upper[k], self.theta[k], self.clamped[k]
            ));
        }
        out
    }
}

fn clamp01<T: Real>(x: T) -> (T, bool) {
    if x > T::one() {
        (T::one(), true)
    } else if x < T::zero() || x.is_nan() {
        (T::zero(), true)
    } else {
        (x, false)
    }
}

/// Initial condition of a bound: one state or a distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState<T> {
    State(usize),
    Distribution(MarginalDistribution<T>),
}

impl<T: Real> InitialState<T> {
    fn weights(&self, n: usize) -> Result<Vec<T>> {
        match self {
            Self::State(i) if *i < n => Ok(MarginalDistribution::point(n, *i).probs().to_vec()),
            Self::State(i) => Err(Error::InvalidParameter(format!("initial state {i} out of range"))),
            Self::Distribution(d) if d.len() == n => Ok(d.probs().to_vec()),
            Self::Distribution(d) => Err(Error::DimensionMismatch { expected: n, got: d.len() }),
        }
    }
}

/// `ln(h(J₀)/min h) + κ(θ)` at a signed `θ`, for each `J₀`.
struct ChernoffExponent<'a, T> {
    model: &'a MarkovAdditiveModel<T>,
    pi: MarginalDistribution<T>,
    ln_theta_min: T,
}

impl<'a, T: Real> ChernoffExponent<'a, T> {
    fn new(model: &'a MarkovAdditiveModel<T>) -> Result<Self> {
        let mean = model.mean_increment()?;
        let scale = if mean > T::zero() { mean } else { T::one() };
        Ok(Self {
            model,
            pi: model.stationary()?,
            ln_theta_min: (T::lit(THETA_MIN_REL) / scale).ln(),
        })
    }

    /// Returns `(κ(θ), ln(h(j)/min h))` for all `j`.
    fn at(&self, theta: T) -> Result<(T, Vec<T>)> {
        let s = perron(&build_kernel(self.model, theta, T::zero())?, &self.pi)?;
        let hmin = s.h_min();
        Ok((s.kappa, s.h.iter().map(|h| (*h / hmin).ln()).collect()))
    }

    /// Minimises `ln(h(j)/min h) + tκ(sθ) - sθx` over `θ > 0`, where the sign `s`
    /// picks the branch: `+1` bounds `P(S ≥ x)`, `-1` bounds `P(S ≤ x)`.
    fn optimise(&self, j: usize, t: T, x: T, sign: T) -> Result<(T, T)> {
        let mut failure = None;
        let objective = |log_theta: T| {
            let theta = log_theta.exp();
            match self.at(sign * theta) {
                Ok((kappa, log_ratio)) => log_ratio[j] + t * kappa - sign * theta * x,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::infinity()
                }
            }
        };
        let (lt, value) = golden_min(
            objective,
            self.ln_theta_min,
            T::lit(THETA_MAX).ln(),
            T::lit(LOG_THETA_TOL),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((lt.exp(), value))
    }
}

/// Bounds on `F_{S(t)}(x) = P(S(t) ≤ x)` given the initial state.
///
/// Lower: `1 - h^{(θ)}(J₀) e^{tκ(θ) - θx} / min_j h^{(θ)}(J_j)`.
/// Upper: `h^{(-θ)}(J₀) e^{tκ(-θ) + θx} / min_j h^{(-θ)}(J_j)`.
/// Each is optimised over `θ > 0` per grid point, per initial state, and
/// then mixed over the initial distribution.
pub fn cumulative_capacity_bounds<T: Real>(
    model: &MarkovAdditiveModel<T>,
    initial: &InitialState<T>,
    t: usize,
    x_grid: &[T],
) -> Result<TailBoundCurve<T>> {
    if t == 0 {
        return Err(Error::InvalidParameter("horizon must be at least one slot".into()));
    }
    let n = model.dim();
    let weights = initial.weights(n)?;
    let exponent = ChernoffExponent::new(model)?;
    let tt = T::from_usize_lossy(t);
    let dominant = (0..n)
        .max_by(|a, b| weights[*a].partial_cmp(&weights[*b]).expect("finite weights"))
        .expect("nonempty state space");

    let mut curve = TailBoundCurve {
        x: x_grid.to_vec(),
        lower: Vec::with_capacity(x_grid.len()),
        upper: Vec::with_capacity(x_grid.len()),
        theta: Vec::with_capacity(x_grid.len()),
        clamped: Vec::with_capacity(x_grid.len()),
    };
    for &x in x_grid {
        let (mut lower, mut upper, mut theta, mut clamped) = (T::zero(), T::zero(), T::zero(), false);
        for j in 0..n {
            if weights[j] == T::zero() {
                continue;
            }
            let (_, tail_exp) = exponent.optimise(j, tt, x, T::one())?;
            let (theta_u, head_exp) = exponent.optimise(j, tt, x, -T::one())?;
            let (lo, c_lo) = clamp01(T::one() - tail_exp.exp());
            let (up, c_up) = clamp01(head_exp.exp());
            lower += weights[j] * lo;
            upper += weights[j] * up;
            clamped |= c_lo || c_up;
            if j == dominant {
                theta = theta_u;
            }
        }
        curve.lower.push(lower);
        curve.upper.push(upper);
        curve.theta.push(theta);
        curve.clamped.push(clamped);
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientEnvelope<T> {
    /// With probability at least `1 - ε`, `S(t)/t ≥ c_lower`.
    pub c_lower: T,
    /// With probability at least `1 - ε`, `S(t)/t ≤ c_upper`.
    pub c_upper: T,
    /// Exponents attaining the two envelopes (negative for the lower one).
    pub theta_lower: T,
    pub theta_upper: T,
    /// The lower envelope fell below zero and was clamped.
    pub clamped: bool,
}

/// `ε`-envelope of the transient capacity `S(t)/t` from initial state `j0`.
///
/// For each exponent the prefactor identity fixes
/// `y = ln(h(J₀)/(ε min_j h))` and the envelope is `c = (tκ(θ) + y)/(θt)`;
/// the upper envelope minimises over `θ > 0`, the lower one maximises over
/// `θ < 0`.
pub fn transient_capacity_bounds<T: Real>(
    model: &MarkovAdditiveModel<T>,
    j0: usize,
    t: usize,
    epsilon: T,
) -> Result<TransientEnvelope<T>> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if t == 0 || j0 >= model.dim() {
        return Err(Error::InvalidParameter("need t ≥ 1 and a valid initial state".into()));
    }
    let exponent = ChernoffExponent::new(model)?;
    let tt = T::from_usize_lossy(t);
    let ln_eps = epsilon.ln();
    let envelope = |theta: T| -> Result<T> {
        let (kappa, log_ratio) = exponent.at(theta)?;
        Ok((tt * kappa + log_ratio[j0] - ln_eps) / (theta * tt))
    };
    let search = |sign: T| -> Result<(T, T)> {
        let mut failure = None;
        let (lt, value) = golden_min(
            |lt: T| match envelope(sign * lt.exp()) {
                Ok(c) => sign * c,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::infinity()
                }
            },
            exponent.ln_theta_min,
            T::lit(THETA_MAX).ln(),
            T::lit(LOG_THETA_TOL),
        );
        match failure {
            Some(e) => Err(e),
            None => Ok((sign * lt.exp(), sign * value)),
        }
    };
    let (theta_upper, c_upper) = search(T::one())?;
    let (theta_lower, c_lower) = search(-T::one())?;
    let clamped = c_lower < T::zero();
    Ok(TransientEnvelope {
        c_lower: c_lower.max(T::zero()),
        c_upper,
        theta_lower,
        theta_upper,
        clamped,
    })
}

/// Bounds on the stationary virtual-delay tail `P(D ≥ d)` at arrival rate `λ`:
///
/// `Σ_i ϖ_i h(J_i) e^{-θ*λd} / max_j h ≤ P(D ≥ d) ≤ Σ_i ϖ_i h(J_i) e^{-θ*λd} / min_j h`
///
/// with `h = h^{(-θ*)}`.
pub fn delay_tail_bound<T: Real>(
    model: &MarkovAdditiveModel<T>,
    lambda: T,
    varpi: &MarginalDistribution<T>,
    d_grid: &[T],
) -> Result<TailBoundCurve<T>> {
    let adj = adjustment_coefficient(model, lambda)?;
    delay_curve(&adj, lambda, varpi, d_grid)
}

fn delay_prefactor<T: Real>(adj: &AdjustmentCoefficient<T>, varpi: &MarginalDistribution<T>) -> Result<T> {
    let h = &adj.spectral.h;
    if varpi.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: varpi.len(),
        });
    }
    Ok(varpi.probs().iter().zip(h).map(|(w, h)| *w * *h).sum())
}

fn delay_curve<T: Real>(
    adj: &AdjustmentCoefficient<T>,
    lambda: T,
    varpi: &MarginalDistribution<T>,
    d_grid: &[T],
) -> Result<TailBoundCurve<T>> {
    let mixed = delay_prefactor(adj, varpi)?;
    let (hmin, hmax) = (adj.spectral.h_min(), adj.spectral.h_max());
    let mut curve = TailBoundCurve {
        x: d_grid.to_vec(),
        lower: Vec::new(),
        upper: Vec::new(),
        theta: vec![adj.theta_star; d_grid.len()],
        clamped: Vec::new(),
    };
    for &d in d_grid {
        let decay = (-adj.theta_star * lambda * d).exp();
        let (lo, c_lo) = clamp01(mixed * decay / hmax);
        let (up, c_up) = clamp01(mixed * decay / hmin);
        curve.lower.push(lo);
        curve.upper.push(up);
        curve.clamped.push(c_lo || c_up);
    }
    Ok(curve)
}

/// Backlog tail `P(B ≥ b) = P(D ≥ b/λ)` under constant fluid arrivals.
pub fn backlog_tail_bound<T: Real>(
    model: &MarkovAdditiveModel<T>,
    lambda: T,
    varpi: &MarginalDistribution<T>,
    b_grid: &[T],
) -> Result<TailBoundCurve<T>> {
    let d: Vec<T> = b_grid.iter().map(|b| *b / lambda).collect();
    let mut curve = delay_tail_bound(model, lambda, varpi, &d)?;
    curve.x = b_grid.to_vec();
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBracket<T> {
    /// Rate at which the upper delay bound at `d` equals `ε`.
    pub lambda_lower: T,
    /// Rate at which the lower delay bound at `d` equals `ε`.
    pub lambda_upper: T,
}

/// Which side of the delay band to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Delay bound at `d` for arrival rate `λ`. Rates too small for a root of
/// the net cumulant inside the search range have a negligible tail and
/// report 0.
pub fn delay_bound_at<T: Real>(
    model: &MarkovAdditiveModel<T>,
    lambda: T,
    varpi: &MarginalDistribution<T>,
    d: T,
    side: BoundSide,
) -> Result<T> {
    match adjustment_coefficient(model, lambda) {
        Ok(adj) => {
            let c = delay_curve(&adj, lambda, varpi, &[d])?;
            Ok(match side {
                BoundSide::Lower => c.lower[0],
                BoundSide::Upper => c.upper[0],
            })
        }
        Err(Error::NoRoot) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

/// Largest constant rates whose delay bound at `d` is `ε`.
///
/// Both ends come from bisection on `λ ∈ (0, E[C])`, where the delay
/// bounds increase from 0 to at least 1. The smaller rate inverts the
/// upper bound and is therefore a guaranteed rate; the larger one inverts
/// the lower bound and caps what any rate can achieve.
pub fn delay_constrained_capacity<T: Real>(
    model: &MarkovAdditiveModel<T>,
    varpi: &MarginalDistribution<T>,
    d: T,
    epsilon: T,
) -> Result<RateBracket<T>> {
    if !(d > T::zero()) {
        return Err(Error::InvalidParameter(format!("delay target must be positive, got {d}")));
    }
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mean = model.mean_increment()?;
    let lo = mean * T::lit(1e-9);
    let hi = mean * (T::one() - T::epsilon() * T::lit(16.0));
    let solve = |side: BoundSide| -> Result<T> {
        if delay_bound_at(model, lo, varpi, d, side)? > epsilon {
            return Err(Error::NoFeasibleRate {
                epsilon: epsilon.as_f64(),
            });
        }
        if delay_bound_at(model, hi, varpi, d, side)? <= epsilon {
            return Ok(hi);
        }
        let mut failure = None;
        let root = bisect(
            |l| match delay_bound_at(model, l, varpi, d, side) {
                Ok(v) => v - epsilon,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::nan()
                }
            },
            lo,
            hi,
            T::zero(),
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(root),
        }
    };
    Ok(RateBracket {
        lambda_lower: solve(BoundSide::Upper)?,
        lambda_upper: solve(BoundSide::Lower)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{IncrementLaw, SnrMatrix};
    use crate::markov::TransitionMatrix;

    fn fig2_negative() -> MarkovAdditiveModel<f64> {
        let g = 0.5f64.exp();
        let p = TransitionMatrix::from_rows(&[vec![0.4125, 0.5875], vec![0.2518, 0.7482]]).unwrap();
        let snr = SnrMatrix::new(vec![vec![g, g], vec![0.7 * g, 0.7 * g]]).unwrap();
        MarkovAdditiveModel::rayleigh(p, 20_000.0, &snr).unwrap()
    }

    #[test]
    fn deterministic_step() {
        let m = MarkovAdditiveModel::single_state(IncrementLaw::deterministic(2.0f64)).unwrap();
        let c = cumulative_capacity_bounds(&m, &InitialState::State(0), 10, &[15.0, 19.0, 21.0, 30.0]).unwrap();
        assert_eq!(c.lower[..2], [0.0, 0.0]);
        assert_eq!(c.upper[2..], [1.0, 1.0]);
        assert!(c.upper[0] < 1e-100 && c.upper[1] < 1e-100);
        assert!(c.lower[2] >= 1.0 - 1e-15 && c.lower[3] == 1.0);
    }

    #[test]
    fn single_state_is_scalar_chernoff() {
        let law = IncrementLaw::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let m = MarkovAdditiveModel::single_state(law).unwrap();
        let t = 20usize;
        // P(S ≤ 4) for Binomial(20, 1/2); Chernoff: exp(-t D(0.2 || 0.5))
        let c = cumulative_capacity_bounds(&m, &InitialState::State(0), t, &[4.0]).unwrap();
        let kl = 0.2f64 * (0.2f64 / 0.5).ln() + 0.8 * (0.8f64 / 0.5).ln();
        assert!((c.upper[0] - (-20.0 * kl).exp()).abs() < 1e-12);
        assert!(c.lower[0] == 0.0);
    }

    #[test]
    fn transient_envelope_monotone_in_epsilon() {
        let m = fig2_negative();
        let mean = m.mean_increment().unwrap();
        let mut prev: Option<TransientEnvelope<f64>> = None;
        for eps in [1.0, 0.1, 1e-3, 1e-6] {
            let e = transient_capacity_bounds(&m, 0, 200, eps).unwrap();
            // at ε = 1 the envelope may touch the mean
            let slack = if eps == 1.0 { 1e-6 * mean } else { 0.0 };
            assert!(e.c_lower < mean + slack && mean - slack < e.c_upper, "{eps}: {e:?} {mean}");
            if let Some(p) = prev {
                assert!(e.c_lower <= p.c_lower && e.c_upper >= p.c_upper);
            }
            prev = Some(e);
        }
    }

    #[test]
    fn deterministic_transient_collapses() {
        let m = MarkovAdditiveModel::single_state(IncrementLaw::deterministic(3.0f64)).unwrap();
        let e = transient_capacity_bounds(&m, 0, 1000, 1e-3).unwrap();
        // the gap is ln(1/ε)/(θ t) at the largest admissible θ
        assert!((e.c_upper - 3.0).abs() < 1e-5 && (e.c_lower - 3.0).abs() < 1e-5);
    }

    #[test]
    fn single_state_delay_band_collapses() {
        let law = IncrementLaw::<f64>::discrete(vec![0.0, 10.0], vec![0.2, 0.8]).unwrap();
        let m = MarkovAdditiveModel::single_state(law).unwrap();
        let varpi = MarginalDistribution::point(1, 0);
        let c = delay_tail_bound(&m, 4.0, &varpi, &[0.0, 1.0, 3.0]).unwrap();
        let th = c.theta[0];
        for (k, d) in c.x.iter().enumerate() {
            assert!((c.lower[k] - c.upper[k]).abs() < 1e-15);
            assert!((c.upper[k] - (-th * 4.0 * d).exp()).abs() < 1e-14);
        }
        let b = backlog_tail_bound(&m, 4.0, &varpi, &[4.0, 12.0]).unwrap();
        assert!((b.upper[0] - c.upper[1]).abs() < 1e-15 && (b.upper[1] - c.upper[2]).abs() < 1e-15);
    }

    #[test]
    fn band_ordering_and_head_clamp() {
        let m = fig2_negative();
        let varpi = MarginalDistribution::uniform(2);
        let c = delay_tail_bound(&m, 10_000.0, &varpi, &[0.0, 1.0, 5.0, 20.0]).unwrap();
        assert_eq!(c.upper[0], 1.0);
        assert!(c.clamped[0]);
        for k in 0..c.len() {
            assert!(c.lower[k] <= c.upper[k]);
            if k > 0 {
                assert!(c.upper[k] <= c.upper[k - 1]);
            }
        }
    }

    #[test]
    fn corollary_closure() {
        let m = fig2_negative();
        let varpi = MarginalDistribution::uniform(2);
        let (d, eps) = (50.0, 1e-3);
        let r = delay_constrained_capacity(&m, &varpi, d, eps).unwrap();
        assert!(r.lambda_lower <= r.lambda_upper);
        let up = delay_bound_at(&m, r.lambda_lower, &varpi, d, BoundSide::Upper).unwrap();
        let lo = delay_bound_at(&m, r.lambda_upper, &varpi, d, BoundSide::Lower).unwrap();
        assert!((up - eps).abs() < 1e-6 && (lo - eps).abs() < 1e-6, "{up} {lo}");
    }

    #[test]
    fn single_state_rates_coincide() {
        let law = IncrementLaw::<f64>::discrete(vec![0.0, 10.0], vec![0.2, 0.8]).unwrap();
        let m = MarkovAdditiveModel::single_state(law).unwrap();
        let varpi = MarginalDistribution::point(1, 0);
        let r = delay_constrained_capacity(&m, &varpi, 5.0, 0.01f64).unwrap();
        assert!((r.lambda_lower - r.lambda_upper).abs() < 1e-12);
    }
}

//! Per-transition instantaneous capacity laws.
//!
//! Capacities are in bits per slot; with a slot of one symbol interval
//! normalised to 1 s, a Rayleigh channel of bandwidth `W` Hz and mean SNR
//! `γ` delivers `C = W log₂(1 + γZ)` bits per slot with `Z ~ Exp(1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::expint::scaled_e1;
use crate::numeric::quadrature::gauss_legendre;
use crate::scalar::{log_sum_exp, Real};

/// Integrand cut-off, in nats below its peak.
const LOG_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncrementLaw<T> {
    RayleighCapacity { bandwidth: T, snr: T },
    Deterministic { value: T },
    DiscretePmf { support: Vec<T>, probs: Vec<T> },
}

impl<T: Real> IncrementLaw<T> {
    pub fn rayleigh(bandwidth: T, snr: T) -> Result<Self> {
        let law = Self::RayleighCapacity { bandwidth, snr };
        law.validate()?;
        Ok(law)
    }

    pub fn deterministic(value: T) -> Self {
        Self::Deterministic { value }
    }

    /// A finite law; the support is sorted and zero-probability atoms dropped.
    pub fn discrete(support: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: probs.len(),
            });
        }
        let mut atoms: Vec<(T, T)> = support.into_iter().zip(probs).filter(|(_, p)| *p != T::zero()).collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite support"));
        let law = Self::DiscretePmf {
            support: atoms.iter().map(|a| a.0).collect(),
            probs: atoms.iter().map(|a| a.1).collect(),
        };
        law.validate()?;
        Ok(law)
    }

    /// Essential infimum of the support.
    pub fn infimum(&self) -> T {
        match self {
            Self::RayleighCapacity { .. } => T::zero(),
            Self::Deterministic { value } => *value,
            Self::DiscretePmf { support, .. } => support[0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::RayleighCapacity { bandwidth, snr } => {
                if !(*bandwidth > T::zero() && bandwidth.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
                }
                if !(*snr > T::zero() && snr.is_finite()) {
                    return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
                }
            }
            Self::Deterministic { value } => {
                if !(*value >= T::zero() && value.is_finite()) {
                    return Err(Error::InvalidParameter(format!("capacity must be nonnegative, got {value}")));
                }
            }
            Self::DiscretePmf { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(Error::InvalidParameter("discrete law needs matching support and probabilities".into()));
                }
                if support.iter().any(|s| !(*s >= T::zero() && s.is_finite())) {
                    return Err(Error::InvalidParameter("capacity support must be nonnegative".into()));
                }
                if probs.iter().any(|p| !(*p >= T::zero())) {
                    return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
                }
                let total: T = probs.iter().copied().sum();
                if (total - T::one()).abs() > T::tol(1e-12) {
                    return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// `P(C ≤ x)`; zero for negative `x`.
    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        match self {
            Self::RayleighCapacity { bandwidth, snr } => {
                // 1 - exp(-(2^{x/W} - 1)/γ)
                let excess = (x * T::LN_2() / *bandwidth).exp_m1() / *snr;
                -(-excess).exp_m1()
            }
            Self::Deterministic { value } => {
                if x >= *value {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::DiscretePmf { support, probs } => support
                .iter()
                .zip(probs)
                .filter(|(s, _)| **s <= x)
                .map(|(_, p)| *p)
                .sum::<T>()
                .min(T::one()),
        }
    }

    /// `P(C < x)`: the mass strictly below `x`.
    pub fn prob_below(&self, x: T) -> T {
        match self {
            Self::RayleighCapacity { .. } => self.cdf(x),
            Self::Deterministic { value } => {
                if *value < x {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::DiscretePmf { support, probs } => support
                .iter()
                .zip(probs)
                .filter(|(s, _)| **s < x)
                .map(|(_, p)| *p)
                .sum(),
        }
    }

    /// Left-continuous inverse `inf{x : F(x) ≥ p}` for `p ∈ [0, 1)`.
    pub fn quantile(&self, p: T) -> T {
        let p = p.max(T::zero());
        match self {
            Self::RayleighCapacity { bandwidth, snr } => {
                if p >= T::one() {
                    return T::infinity();
                }
                // W log2(1 + γ(-ln(1-p)))
                let z = -(-p).ln_1p();
                *bandwidth * (*snr * z).ln_1p() / T::LN_2()
            }
            Self::Deterministic { value } => *value,
            Self::DiscretePmf { support, probs } => {
                let mut acc = T::zero();
                for (s, q) in support.iter().zip(probs) {
                    acc += *q;
                    if acc >= p && *q > T::zero() {
                        return *s;
                    }
                }
                *support.last().expect("nonempty support")
            }
        }
    }

    /// Draws one capacity value by inversion of the distribution function.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Self::Deterministic { value } => *value,
            _ => self.quantile(T::lit(rng.gen::<f64>())),
        }
    }

    /// `E[C]`. For Rayleigh, `(W/ln 2) e^{1/γ} E₁(1/γ)`.
    pub fn mean(&self) -> T {
        match self {
            Self::RayleighCapacity { bandwidth, snr } => *bandwidth / T::LN_2() * scaled_e1(T::one() / *snr),
            Self::Deterministic { value } => *value,
            Self::DiscretePmf { support, probs } => support.iter().zip(probs).map(|(s, p)| *s * *p).sum(),
        }
    }

    /// `ln E[e^{θC}]`, finite for every real `θ` for the built-in laws.
    pub fn log_mgf(&self, theta: T) -> T {
        if theta == T::zero() {
            return T::zero();
        }
        match self {
            Self::RayleighCapacity { bandwidth, snr } => rayleigh_log_mgf(theta * *bandwidth / T::LN_2(), *snr),
            Self::Deterministic { value } => theta * *value,
            Self::DiscretePmf { support, probs } => log_sum_exp(
                support
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > T::zero())
                    .map(|(s, p)| p.ln() + theta * *s)
                    .collect::<Vec<_>>(),
            ),
        }
    }

    /// `E[e^{θC}]`; may overflow to `+inf` where [`log_mgf`](Self::log_mgf) does not.
    pub fn mgf(&self, theta: T) -> T {
        self.log_mgf(theta).exp()
    }

    /// `K` equiprobable atoms at the midpoint quantiles `(k + 1/2)/K`.
    pub fn quantile_atoms(&self, k: usize) -> Vec<(T, T)> {
        match self {
            Self::Deterministic { value } => vec![(*value, T::one())],
            Self::DiscretePmf { support, probs } => support.iter().copied().zip(probs.iter().copied()).collect(),
            Self::RayleighCapacity { .. } => {
                let w = T::one() / T::from_usize_lossy(k);
                (0..k)
                    .map(|i| (self.quantile((T::from_usize_lossy(i) + T::lit(0.5)) * w), w))
                    .collect()
            }
        }
    }
}

/// `ln E[(1 + γZ)^p]` with `Z ~ Exp(1)`.
///
/// The expectation is written on `y = ln(1 + γz)` as
/// `(1/γ) ∫₀^∞ exp((p+1)y - (e^y - 1)/γ) dy`, whose integrand is log-concave,
/// and integrated with Gauss–Legendre panels sized to its width.
pub fn rayleigh_log_mgf<T: Real>(p: T, snr: T) -> T {
    if p == T::zero() {
        return T::zero();
    }
    let q = p + T::one();
    let ln_snr = snr.ln();
    let g = |y: T| q * y - y.exp_m1() / snr - ln_snr;
    let slope0 = q - T::one() / snr;
    let (peak, scale) = if slope0 > T::zero() {
        // interior mode at e^{y} = γ(p+1), curvature -(p+1)
        ((snr * q).ln(), T::one() / q.sqrt())
    } else {
        (T::zero(), (T::one() / slope0.abs()).min(snr.sqrt()))
    };
    let top = g(peak);
    let cutoff = top - T::lit(LOG_CUTOFF);
    let mut right = peak + scale;
    for _ in 0..100_000 {
        if g(right) < cutoff {
            break;
        }
        right += scale;
    }
    let mut left = peak;
    for _ in 0..100_000 {
        if left <= T::zero() || g(left) < cutoff {
            break;
        }
        left -= scale;
    }
    let left = left.max(T::zero());
    let panels = ((right - left) / scale).ceil().to_usize().unwrap_or(1).max(1);
    let h = (right - left) / T::from_usize_lossy(panels);
    let half = h / T::lit(2.0);
    let rule = gauss_legendre(16);
    let mut terms = Vec::with_capacity(panels * 16);
    for k in 0..panels {
        let mid = left + h * T::from_usize_lossy(k) + half;
        for (x, lw) in rule.nodes.iter().zip(&rule.log_weights) {
            terms.push(T::lit(*lw) + half.ln() + g(mid + half * T::lit(*x)));
        }
    }
    log_sum_exp(terms)
}

/// Per-transition mean SNR `γ_ij` (linear scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrMatrix<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Real> SnrMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty SNR matrix".into()));
        }
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            if r.iter().any(|g| !(*g > T::zero() && g.is_finite())) {
                return Err(Error::InvalidParameter("SNR entries must be positive".into()));
            }
        }
        Ok(Self { rows })
    }

    /// From decibels: `γ = 10^{dB/10}`.
    pub fn from_db(rows_db: Vec<Vec<T>>) -> Result<Self> {
        let ten = T::lit(10.0);
        Self::new(
            rows_db
                .into_iter()
                .map(|r| r.into_iter().map(|db| ten.powf(db / ten)).collect())
                .collect(),
        )
    }

    /// SNR depending only on the origin state.
    pub fn by_origin(gammas: &[T]) -> Result<Self> {
        Self::new(gammas.iter().map(|g| vec![*g; gammas.len()]).collect())
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
}

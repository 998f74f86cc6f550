use std::fmt;

use super::{star_product, AnyCopula, CopulaSpec, FrechetWeights, StarConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weights `(α, 1-α-β, β)` of the homogeneous Fréchet Markov family at gap `h`:
/// `α(h) = e^{-2h}(1-e^{-h})/2`, `β(h) = e^{-2h}(1+e^{-h})/2`.
///
/// `h = 0` gives the comonotone copula and `h → ∞` the product copula.
pub fn frechet_homogeneous<T: Real>(h: T) -> Result<FrechetWeights<T>> {
    if !(h >= T::zero()) {
        return Err(Error::InvalidParameter(format!("time gap must be nonnegative, got {h}")));
    }
    let two = T::lit(2.0);
    let decay = (-h).exp();
    let outer = (-two * h).exp();
    let alpha = outer * (T::one() - decay) / two;
    let beta = outer * (T::one() + decay) / two;
    Ok(FrechetWeights {
        w_w: alpha,
        w_p: T::one() - alpha - beta,
        w_m: beta,
    })
}

type WeightFn<T> = Box<dyn Fn(T, T) -> FrechetWeights<T> + Send + Sync>;
type CopulaFn<T> = Box<dyn Fn(T, T) -> Result<CopulaSpec<T>> + Send + Sync>;

/// A copula assignment `(s, t) ↦ C_st` for `s < t`.
pub enum MarkovFamily<T> {
    /// Fréchet-class assignment; checked through the weight identities.
    Frechet(WeightFn<T>),
    /// Any bivariate assignment; checked through star products on a grid.
    General(CopulaFn<T>),
}

impl<T: Real> MarkovFamily<T> {
    pub fn homogeneous_frechet() -> Self {
        Self::Frechet(Box::new(|s, t| {
            frechet_homogeneous(t - s).expect("t > s in a checked triple")
        }))
    }

    /// Gaussian family with correlation `ρ(s, t)`.
    pub fn gaussian(rho: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Self::General(Box::new(move |s, t| CopulaSpec::gaussian_bivariate(rho(s, t))))
    }

    /// The same Fréchet weights at every pair of times.
    pub fn constant_frechet(weights: FrechetWeights<T>) -> Self {
        Self::Frechet(Box::new(move |_, _| weights))
    }
}

impl<T> fmt::Debug for MarkovFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Frechet(_) => f.write_str("MarkovFamily::Frechet(..)"),
            Self::General(_) => f.write_str("MarkovFamily::General(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleResidual<T> {
    pub s: T,
    pub u: T,
    pub t: T,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport<T> {
    pub triples: Vec<TripleResidual<T>>,
    pub max_residual: T,
}

impl<T: Real> FamilyReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_residual <= tol
    }
}

/// Checks `C_st = C_su ⋆ C_ut` for every triple `s < u < t`.
///
/// Fréchet families use the closed-form composition of the weights:
/// `α_st = β_su α_ut + α_su β_ut` and `β_st = α_su α_ut + β_su β_ut`,
/// where `α` is the `W` weight and `β` the `M` weight. General families are
/// compared nodewise against a gridded star product.
pub fn markov_family_check<T: Real>(
    family: &MarkovFamily<T>,
    triples: &[(T, T, T)],
    config: &StarConfig,
) -> Result<FamilyReport<T>> {
    let mut out = Vec::with_capacity(triples.len());
    for &(s, u, t) in triples {
        if !(s < u && u < t) {
            return Err(Error::InvalidParameter(format!(
                "triple must satisfy s < u < t, got ({s}, {u}, {t})"
            )));
        }
        let residual = match family {
            MarkovFamily::Frechet(w) => {
                let (su, ut, st) = (w(s, u), w(u, t), w(s, t));
                let alpha = su.w_m * ut.w_w + su.w_w * ut.w_m;
                let beta = su.w_w * ut.w_w + su.w_m * ut.w_m;
                (st.w_w - alpha).abs().max((st.w_m - beta).abs())
            }
            MarkovFamily::General(c) => {
                let composed = star_product(&AnyCopula::from(c(s, u)?), &AnyCopula::from(c(u, t)?), config)?;
                composed.max_abs_diff_to(&c(s, t)?)
            }
        };
        out.push(TripleResidual { s, u, t, residual });
    }
    let max_residual = out.iter().map(|r| r.residual).fold(T::zero(), T::max);
    Ok(FamilyReport {
        triples: out,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_endpoints() {
        let w = frechet_homogeneous(0.0f64).unwrap();
        assert_eq!((w.w_w, w.w_p, w.w_m), (0.0, 0.0, 1.0));
        let far = frechet_homogeneous(60.0f64).unwrap();
        assert!(far.w_w < 1e-50 && far.w_m < 1e-50 && (far.w_p - 1.0).abs() < 1e-15);
        let half = frechet_homogeneous(0.5f64).unwrap();
        let e = std::f64::consts::E;
        assert!((half.w_w - (1.0 - (-0.5f64).exp()) / (2.0 * e)).abs() < 1e-16);
        assert!((half.w_m - (1.0 + (-0.5f64).exp()) / (2.0 * e)).abs() < 1e-16);
        assert!(frechet_homogeneous(-1.0f64).is_err());
    }

    #[test]
    fn homogeneous_family_composes() {
        let r = markov_family_check(
            &MarkovFamily::homogeneous_frechet(),
            &[(0.0f64, 0.3, 0.8), (1.0, 1.5, 4.0)],
            &StarConfig::default(),
        )
        .unwrap();
        assert!(r.max_residual < 1e-15);
    }

    #[test]
    fn constant_mix_is_not_markov() {
        let w = FrechetWeights::new(0.5f64, 0.5, 0.0).unwrap();
        let r = markov_family_check(&MarkovFamily::constant_frechet(w), &[(0.0, 1.0, 2.0)], &StarConfig::default())
            .unwrap();
        // α_st = 0.5 but β_su α_ut + α_su β_ut = 0
        assert!((r.max_residual - 0.5).abs() < 1e-15);
        assert!(!r.passes(1e-6));
    }

    #[test]
    fn gaussian_exponential_correlation_is_markov() {
        let fam = MarkovFamily::gaussian(|s: f64, t: f64| (-(t - s)).exp());
        let cfg = StarConfig { intervals: 32, ..Default::default() };
        let r = markov_family_check(&fam, &[(0.0, 0.4, 1.0)], &cfg).unwrap();
        assert!(r.max_residual < 1e-8, "{:e}", r.max_residual);
    }
}

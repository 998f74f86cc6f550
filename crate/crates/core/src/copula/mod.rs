//! Parametric copulas, grid copulas and the star product.
//!
//! Conditional distributions follow the convention that `partial(u, wrt)`
//! is `∂C/∂u_wrt`, i.e. the conditional distribution function of the other
//! coordinate. On the kink sets of `M` and `W` the right-continuous limit is
//! used, so `∂₂M(x, t) = 1{t ≤ x}` and `∂₂W(x, t) = 1{t ≥ 1 - x}`.

mod family;
mod gaussian;
mod grid;
mod star;
mod transform;

pub use family::{frechet_homogeneous, markov_family_check, FamilyReport, MarkovFamily, TripleResidual};
pub use gaussian::GaussianCopula;
pub use grid::GridCopula;
pub use star::{star_product, StarConfig};
pub use transform::{is_radially_symmetric, negative_transform};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Convex weights of the Fréchet mixture `wW·W + wP·P + wM·M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetWeights<T> {
    pub w_w: T,
    pub w_p: T,
    pub w_m: T,
}

impl<T: Real> FrechetWeights<T> {
    pub fn new(w_w: T, w_p: T, w_m: T) -> Result<Self> {
        let tol = T::tol(1e-12);
        if w_w < -tol || w_p < -tol || w_m < -tol {
            return Err(Error::InvalidParameter(format!(
                "Fréchet weights must be nonnegative, got ({w_w}, {w_p}, {w_m})"
            )));
        }
        if (w_w + w_p + w_m - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "Fréchet weights must sum to 1, got {}",
                w_w + w_p + w_m
            )));
        }
        Ok(Self {
            w_w: w_w.max(T::zero()),
            w_p: w_p.max(T::zero()),
            w_m: w_m.max(T::zero()),
        })
    }

    /// One-parameter family: `wW = α²(1-α)/2`, `wP = 1-α²`, `wM = α²(1+α)/2`.
    pub fn from_alpha(alpha: T) -> Result<Self> {
        if !(alpha >= -T::one() && alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [-1, 1], got {alpha}"
            )));
        }
        let a2 = alpha * alpha;
        let two = T::lit(2.0);
        Ok(Self {
            w_w: a2 * (T::one() - alpha) / two,
            w_p: T::one() - a2,
            w_m: a2 * (T::one() + alpha) / two,
        })
    }
}

/// A parametric copula.
///
/// Product is defined in any dimension, Gaussian in the dimension of its
/// correlation matrix, all other families are bivariate.
#[derive(Debug, Clone, PartialEq)]
pub enum CopulaSpec<T> {
    Product,
    Comonotone,
    Countermonotone,
    Frechet(FrechetWeights<T>),
    Gaussian(GaussianCopula<T>),
}

impl<T: Real> CopulaSpec<T> {
    pub fn frechet_alpha(alpha: T) -> Result<Self> {
        FrechetWeights::from_alpha(alpha).map(Self::Frechet)
    }

    pub fn frechet(w_w: T, w_p: T, w_m: T) -> Result<Self> {
        FrechetWeights::new(w_w, w_p, w_m).map(Self::Frechet)
    }

    pub fn gaussian(correlation: Vec<Vec<T>>) -> Result<Self> {
        GaussianCopula::new(correlation).map(Self::Gaussian)
    }

    pub fn gaussian_bivariate(rho: T) -> Result<Self> {
        GaussianCopula::bivariate(rho).map(Self::Gaussian)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Product => "product",
            Self::Comonotone => "comonotone",
            Self::Countermonotone => "countermonotone",
            Self::Frechet(_) => "frechet",
            Self::Gaussian(_) => "gaussian",
        }
    }

    /// The dimension this copula is defined in; `None` for the
    /// dimension-free product copula.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::Product => None,
            Self::Gaussian(g) => Some(g.dim()),
            _ => Some(2),
        }
    }

    /// Mixture weights when the copula is a member of the Fréchet class.
    pub fn frechet_weights(&self) -> Option<FrechetWeights<T>> {
        let (z, o) = (T::zero(), T::one());
        match self {
            Self::Product => Some(FrechetWeights { w_w: z, w_p: o, w_m: z }),
            Self::Comonotone => Some(FrechetWeights { w_w: z, w_p: z, w_m: o }),
            Self::Countermonotone => Some(FrechetWeights { w_w: o, w_p: z, w_m: z }),
            Self::Frechet(w) => Some(*w),
            Self::Gaussian(_) => None,
        }
    }

    /// `C(u)`.
    pub fn eval(&self, u: &[T]) -> Result<T> {
        if u.iter().any(|x| !(*x >= T::zero() && *x <= T::one())) {
            return Err(Error::InvalidParameter(
                "copula arguments must lie in [0, 1]".into(),
            ));
        }
        match self {
            Self::Product => Ok(u.iter().fold(T::one(), |a, b| a * *b)),
            Self::Gaussian(g) => g.eval(u),
            _ => {
                if u.len() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: u.len(),
                    });
                }
                Ok(self.value2(u[0], u[1]))
            }
        }
    }

    /// `∂C/∂u_wrt` of a bivariate copula (`wrt` is 0 or 1).
    pub fn partial(&self, u: &[T], wrt: usize) -> Result<T> {
        if u.len() != 2 || self.dimension().is_some_and(|d| d != 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: if u.len() != 2 { u.len() } else { self.dimension().unwrap_or(2) },
            });
        }
        if wrt > 1 {
            return Err(Error::InvalidParameter(format!("coordinate {wrt} out of range")));
        }
        let (x, y) = (u[0], u[1]);
        // all parametric families are exchangeable, so ∂₂C(x, y) = ∂₁C(y, x)
        Ok(if wrt == 0 {
            self.conditional(x, y)
        } else {
            self.conditional(y, x)
        })
    }

    /// Bivariate value without argument checks.
    fn value2(&self, u: T, v: T) -> T {
        match self {
            Self::Product => u * v,
            Self::Comonotone => u.min(v),
            Self::Countermonotone => (u + v - T::one()).max(T::zero()),
            Self::Frechet(w) => {
                w.w_w * (u + v - T::one()).max(T::zero()) + w.w_p * u * v + w.w_m * u.min(v)
            }
            Self::Gaussian(g) => g.value2(g.rho(), u, v),
        }
    }

    /// `P(V ≤ v | U = u)`, i.e. `∂₁C(u, v)`.
    fn conditional(&self, u: T, v: T) -> T {
        let one = T::one();
        let ind = |b: bool| if b { one } else { T::zero() };
        match self {
            Self::Product => v,
            Self::Comonotone => ind(u <= v),
            Self::Countermonotone => ind(u + v >= one),
            Self::Frechet(w) => w.w_w * ind(u + v >= one) + w.w_p * v + w.w_m * ind(u <= v),
            Self::Gaussian(g) => gaussian::conditional(g.rho(), u, v),
        }
    }
}

/// Common interface of bivariate copulas (parametric or gridded).
pub trait BivariateCopula<T: Real> {
    fn value(&self, u: T, v: T) -> T;
    /// `∂C/∂u`: conditional distribution of the second coordinate.
    fn partial_u(&self, u: T, v: T) -> T;
    /// `∂C/∂v`: conditional distribution of the first coordinate.
    fn partial_v(&self, u: T, v: T) -> T;

    /// Errors unless the copula can be evaluated as a bivariate one.
    fn ensure_bivariate(&self) -> Result<()> {
        Ok(())
    }
}

impl<T: Real> BivariateCopula<T> for CopulaSpec<T> {
    /// Panics if the copula is not bivariate; check [`CopulaSpec::dimension`] first.
    fn value(&self, u: T, v: T) -> T {
        assert!(
            self.dimension().is_none_or(|d| d == 2),
            "bivariate evaluation of a {}-dimensional copula",
            self.dimension().unwrap_or(0)
        );
        self.value2(u, v)
    }

    fn partial_u(&self, u: T, v: T) -> T {
        self.conditional(u, v)
    }

    fn partial_v(&self, u: T, v: T) -> T {
        self.conditional(v, u)
    }

    fn ensure_bivariate(&self) -> Result<()> {
        match self.dimension() {
            Some(d) if d != 2 => Err(Error::DimensionMismatch { expected: 2, got: d }),
            _ => Ok(()),
        }
    }
}

/// Either a parametric bivariate copula or a gridded one.
#[derive(Debug, Clone)]
pub enum AnyCopula<T> {
    Param(CopulaSpec<T>),
    Grid(GridCopula<T>),
}

impl<T: Real> From<CopulaSpec<T>> for AnyCopula<T> {
    fn from(c: CopulaSpec<T>) -> Self {
        Self::Param(c)
    }
}

impl<T: Real> From<GridCopula<T>> for AnyCopula<T> {
    fn from(c: GridCopula<T>) -> Self {
        Self::Grid(c)
    }
}

impl<T: Real> BivariateCopula<T> for AnyCopula<T> {
    fn value(&self, u: T, v: T) -> T {
        match self {
            Self::Param(c) => c.value(u, v),
            Self::Grid(g) => g.value(u, v),
        }
    }
    fn partial_u(&self, u: T, v: T) -> T {
        match self {
            Self::Param(c) => c.partial_u(u, v),
            Self::Grid(g) => g.partial_u(u, v),
        }
    }
    fn partial_v(&self, u: T, v: T) -> T {
        match self {
            Self::Param(c) => c.partial_v(u, v),
            Self::Grid(g) => g.partial_v(u, v),
        }
    }
    fn ensure_bivariate(&self) -> Result<()> {
        match self {
            Self::Param(c) => c.ensure_bivariate(),
            Self::Grid(_) => Ok(()),
        }
    }
}

/// Result of [`check_copula_axioms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomReport<T> {
    /// Largest deviation from `C(u,1)=u`, `C(1,v)=v`, `C(u,0)=C(0,v)=0`.
    pub boundary: T,
    /// Most negative rectangle volume (0 when 2-increasing).
    pub rectangle: T,
    /// Largest excursion outside the Fréchet–Hoeffding envelope.
    pub envelope: T,
}

/// Checks the copula axioms on an `(n+1)×(n+1)` uniform grid.
pub fn check_copula_axioms<T: Real>(c: &impl BivariateCopula<T>, n: usize) -> AxiomReport<T> {
    let h = T::one() / T::from_usize_lossy(n);
    let node = |i: usize| T::from_usize_lossy(i) * h;
    let mut vals = vec![vec![T::zero(); n + 1]; n + 1];
    for (i, row) in vals.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c.value(node(i), node(j));
        }
    }
    let mut boundary = T::zero();
    let mut envelope = T::zero();
    for i in 0..=n {
        let x = node(i);
        boundary = boundary
            .max((vals[i][n] - x).abs())
            .max((vals[n][i] - x).abs())
            .max(vals[i][0].abs())
            .max(vals[0][i].abs());
        for j in 0..=n {
            let y = node(j);
            let upper = x.min(y);
            let lower = (x + y - T::one()).max(T::zero());
            envelope = envelope
                .max(vals[i][j] - upper)
                .max(lower - vals[i][j]);
        }
    }
    let mut rectangle = T::zero();
    for i in 0..n {
        for j in 0..n {
            let vol = vals[i + 1][j + 1] - vals[i][j + 1] - vals[i + 1][j] + vals[i][j];
            rectangle = rectangle.min(vol);
        }
    }
    AxiomReport {
        boundary,
        rectangle: -rectangle,
        envelope,
    }
}

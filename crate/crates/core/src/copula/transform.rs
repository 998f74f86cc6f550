use super::CopulaSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

const SYMMETRY_NODES: usize = 32;

/// Largest deviation between `C(u)` and its survival copula
/// `Ĉ(u) = u + v - 1 + C(1-u, 1-v)` on a uniform grid.
fn radial_asymmetry<T: Real>(c: &CopulaSpec<T>) -> Result<T> {
    let d = c.dimension().unwrap_or(2);
    if d != 2 {
        // Gaussian copulas of any dimension are radially symmetric
        return match c {
            CopulaSpec::Gaussian(_) | CopulaSpec::Product => Ok(T::zero()),
            _ => Err(Error::DimensionMismatch { expected: 2, got: d }),
        };
    }
    let n = SYMMETRY_NODES;
    let mut worst = T::zero();
    for i in 0..=n {
        for j in 0..=n {
            let u = T::from_usize_lossy(i) / T::from_usize_lossy(n);
            let v = T::from_usize_lossy(j) / T::from_usize_lossy(n);
            let direct = c.eval(&[u, v])?;
            let survival = u + v - T::one() + c.eval(&[T::one() - u, T::one() - v])?;
            worst = worst.max((direct - survival).abs());
        }
    }
    Ok(worst)
}

/// True when `C` equals its survival copula (to a few hundred ulps).
pub fn is_radially_symmetric<T: Real>(c: &CopulaSpec<T>) -> Result<bool> {
    Ok(radial_asymmetry(c)? <= T::tol(1e-12))
}

/// The extreme-negative map `T(u) = 1 - u`, componentwise.
///
/// Only defined here for radially symmetric copulas; any other copula is
/// rejected with [`Error::AsymmetricCopula`]. `T` is an involution.
pub fn negative_transform<T: Real>(u: &[T], copula: &CopulaSpec<T>) -> Result<Vec<T>> {
    if let Some(d) = copula.dimension() {
        if d != u.len() {
            return Err(Error::DimensionMismatch { expected: d, got: u.len() });
        }
    }
    if u.iter().any(|x| !(*x >= T::zero() && *x <= T::one())) {
        return Err(Error::InvalidParameter("point must lie in the unit cube".into()));
    }
    let asym = radial_asymmetry(copula)?;
    if asym > T::tol(1e-12) {
        return Err(Error::AsymmetricCopula(asym.as_f64()));
    }
    Ok(u.iter().map(|x| T::one() - *x).collect())
}

use rayon::prelude::*;

use super::gaussian::{conditional_latent, Z_CUT};
use super::grid::{GridCopula, DEFAULT_INTERVALS};
use super::{AnyCopula, BivariateCopula, CopulaSpec};
use crate::error::{Error, Result};
use crate::numeric::normal;
use crate::numeric::quadrature::gauss_legendre;
use crate::scalar::Real;

/// Resolution and refinement schedule of [`star_product`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarConfig {
    /// Grid intervals per axis of the result.
    pub intervals: usize,
    /// Stop once two successive refinements agree to this (max-norm) level.
    pub tol: f64,
    /// Gauss–Legendre order per panel at the first pass; doubled on refinement.
    pub start_order: usize,
    pub max_order: usize,
    /// Widest latent-axis panel; the two tail cells are split into panels of this width.
    pub max_panel_width: f64,
}

impl Default for StarConfig {
    fn default() -> Self {
        Self {
            intervals: DEFAULT_INTERVALS,
            tol: 1e-8,
            start_order: 4,
            max_order: 64,
            max_panel_width: 0.5,
        }
    }
}

/// `(A ⋆ B)(x, y) = ∫₀¹ ∂₂A(x, ξ) ∂₁B(ξ, y) dξ` on the nodes of a uniform grid.
///
/// The ξ axis is cut at the grid nodes, so every kink of a Fréchet-class
/// or gridded operand falls on a panel edge. Each cell is integrated in the
/// latent coordinate `z = Φ⁻¹(ξ)` (truncated at ±9), where Gaussian
/// conditionals are smooth.
pub fn star_product<T: Real>(
    a: &AnyCopula<T>,
    b: &AnyCopula<T>,
    config: &StarConfig,
) -> Result<GridCopula<T>> {
    a.ensure_bivariate()?;
    b.ensure_bivariate()?;
    if config.intervals == 0 || config.start_order == 0 {
        return Err(Error::InvalidParameter("star product resolution must be positive".into()));
    }
    let tol = T::tol(config.tol);
    let mut order = config.start_order;
    let mut previous = star_pass(a, b, config, order);
    let mut diff = f64::INFINITY;
    while order * 2 <= config.max_order {
        order *= 2;
        let next = star_pass(a, b, config, order);
        let d = next.max_abs_diff(&previous);
        if d < tol {
            return Ok(next);
        }
        diff = d.as_f64();
        previous = next;
    }
    Err(Error::QuadratureNonConvergence { diff })
}

struct Node<T> {
    xi: T,
    z: T,
    weight: T,
}

fn latent_nodes<T: Real>(n: usize, order: usize, max_width: T) -> Vec<Node<T>> {
    let rule = gauss_legendre(order);
    let cut = T::lit(Z_CUT);
    let edge = |c: usize| -> T {
        if c == 0 {
            -cut
        } else if c == n {
            cut
        } else {
            normal::quantile(T::from_usize_lossy(c) / T::from_usize_lossy(n))
        }
    };
    let mut nodes = Vec::new();
    for c in 0..n {
        let (z0, z1) = (edge(c), edge(c + 1));
        let panels = ((z1 - z0) / max_width).ceil().to_usize().unwrap_or(1).max(1);
        let h = (z1 - z0) / T::from_usize_lossy(panels);
        let half = h / T::lit(2.0);
        for p in 0..panels {
            let mid = z0 + h * T::from_usize_lossy(p) + half;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let z = mid + half * T::lit(*x);
                nodes.push(Node {
                    // the cell index is what matters for kinks; keep ξ strictly inside it
                    xi: normal::cdf(z),
                    z,
                    weight: T::lit(*w) * half * normal::pdf(z),
                });
            }
        }
    }
    nodes
}

/// `P(other ≤ fixed | this = ξ)` for an exchangeable parametric copula,
/// using the latent coordinate directly for Gaussian families.
fn param_conditional<T: Real>(c: &CopulaSpec<T>, fixed: T, node: &Node<T>) -> T {
    if let CopulaSpec::Gaussian(g) = c {
        let rho = g.rho();
        if rho.abs() < T::one() && rho != T::zero() && fixed > T::zero() && fixed < T::one() {
            let s = (T::one() - rho * rho).sqrt();
            return conditional_latent(rho, s, node.z, normal::quantile(fixed));
        }
    }
    c.partial_u(node.xi, fixed)
}

/// `∂₂A(x, ξ)`.
fn left_factor<T: Real>(a: &AnyCopula<T>, x: T, node: &Node<T>) -> T {
    match a {
        AnyCopula::Param(c) => param_conditional(c, x, node),
        AnyCopula::Grid(g) => g.partial_v(x, node.xi),
    }
}

/// `∂₁B(ξ, y)`.
fn right_factor<T: Real>(b: &AnyCopula<T>, y: T, node: &Node<T>) -> T {
    match b {
        AnyCopula::Param(c) => param_conditional(c, y, node),
        AnyCopula::Grid(g) => g.partial_u(node.xi, y),
    }
}

fn star_pass<T: Real>(a: &AnyCopula<T>, b: &AnyCopula<T>, config: &StarConfig, order: usize) -> GridCopula<T> {
    let n = config.intervals;
    let nodes = latent_nodes::<T>(n, order, T::lit(config.max_panel_width));
    let grid = |i: usize| T::from_usize_lossy(i) / T::from_usize_lossy(n);

    // weighted left factors and right factors, one row per grid coordinate
    let left: Vec<Vec<T>> = (0..=n)
        .into_par_iter()
        .map(|i| nodes.iter().map(|q| q.weight * left_factor(a, grid(i), q)).collect())
        .collect();
    let right: Vec<Vec<T>> = (0..=n)
        .into_par_iter()
        .map(|k| nodes.iter().map(|q| right_factor(b, grid(k), q)).collect())
        .collect();

    let rows: Vec<Vec<T>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            (0..=n)
                .map(|k| {
                    if i == 0 || k == 0 {
                        T::zero()
                    } else if i == n {
                        grid(k)
                    } else if k == n {
                        grid(i)
                    } else {
                        left[i].iter().zip(&right[k]).map(|(l, r)| *l * *r).sum()
                    }
                })
                .collect()
        })
        .collect();
    GridCopula::from_values(n, rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(a: CopulaSpec<f64>, b: CopulaSpec<f64>) -> GridCopula<f64> {
        star_product(&a.into(), &b.into(), &StarConfig { intervals: 32, ..Default::default() }).unwrap()
    }

    #[test]
    fn comonotone_is_the_identity() {
        for c in [
            CopulaSpec::Countermonotone,
            CopulaSpec::frechet_alpha(-0.3).unwrap(),
            CopulaSpec::gaussian_bivariate(0.7).unwrap(),
        ] {
            let r = star(CopulaSpec::Comonotone, c.clone());
            assert!(r.max_abs_diff_to(&c) < 1e-10, "{}", c.family_name());
        }
    }

    #[test]
    fn countermonotone_twice_is_comonotone() {
        let r = star(CopulaSpec::Countermonotone, CopulaSpec::Countermonotone);
        assert!(r.max_abs_diff_to(&CopulaSpec::Comonotone) < 1e-12);
    }

    #[test]
    fn gaussian_correlations_multiply() {
        let r = star(
            CopulaSpec::gaussian_bivariate(0.8).unwrap(),
            CopulaSpec::gaussian_bivariate(-0.5).unwrap(),
        );
        let want = CopulaSpec::gaussian_bivariate(-0.4).unwrap();
        assert!(r.max_abs_diff_to(&want) < 1e-9);
    }

    #[test]
    fn rejects_higher_dimensional_operand() {
        let g = CopulaSpec::<f64>::gaussian(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let r = star_product(&g.into(), &CopulaSpec::Product.into(), &StarConfig::default());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}

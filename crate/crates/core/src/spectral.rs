//! Perron analysis of the Markov additive kernel.
//!
//! Sign convention: the kernel of the net process `S(t) - λt` at `θ` has
//! entries `p_ij E[e^{θ(C_ij - λ)}]`. Its log Perron root `κ(θ)` vanishes at
//! `θ = -θ*`, where `θ* > 0` is the adjustment coefficient returned by
//! [`adjustment_coefficient`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::MarginalDistribution;
use crate::model::MarkovAdditiveModel;
use crate::numeric::maxplus;
use crate::numeric::optimize::bisect;
use crate::numeric::SquareMatrix;
use crate::scalar::Real;

const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 1_000_000;
/// Repeated squarings before the power-iteration polish.
const SQUARINGS: usize = 64;
const BRACKET_HI: f64 = 1.0;
const BRACKET_CAP: f64 = 1e3;

/// `F̂[θ]` stored as entrywise logarithms (`-inf` for structural zeros) so
/// that large `|θ|` neither overflows nor underflows.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T> {
    pub theta: T,
    log_entries: Vec<Vec<T>>,
}

impl<T: Real> KernelMatrix<T> {
    pub fn from_log_entries(theta: T, log_entries: Vec<Vec<T>>) -> Result<Self> {
        let n = log_entries.len();
        if n == 0 || log_entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("kernel must be a nonempty square matrix".into()));
        }
        Ok(Self { theta, log_entries })
    }

    /// A kernel with the given nonnegative entries.
    pub fn from_entries(theta: T, rows: &[Vec<T>]) -> Result<Self> {
        if rows.iter().flatten().any(|x| !(*x >= T::zero()) || x.is_infinite()) {
            return Err(Error::InvalidParameter("kernel entries must be finite and nonnegative".into()));
        }
        Self::from_log_entries(theta, rows.iter().map(|r| r.iter().map(|x| x.ln()).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.log_entries.len()
    }

    pub fn log_entry(&self, i: usize, j: usize) -> T {
        self.log_entries[i][j]
    }

    /// Entries in linear scale; may overflow for extreme `θ`.
    pub fn entries(&self) -> SquareMatrix<T> {
        SquareMatrix::from_fn(self.dim(), |i, j| self.log_entries[i][j].exp())
    }

    /// Sparsity pattern of the kernel, before any rounding of tiny entries.
    fn pattern(&self) -> SquareMatrix<T> {
        SquareMatrix::from_fn(self.dim(), |i, j| {
            if self.log_entries[i][j] > T::neg_infinity() {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// `B = e^{-μ} D⁻¹ F̂ D` with `D = diag(e^x)`, where `(μ, x)` is the
    /// max-plus eigenpair of the log entries. Every entry of `B` is at most
    /// one, its critical cycles consist of ones and `ρ(B) ≥ 1`, so no
    /// relevant entry underflows however large `|θ|` is.
    fn balanced(&self) -> Option<(SquareMatrix<T>, T, Vec<T>)> {
        let (mu, x) = maxplus::eigenpair(&self.log_entries)?;
        let b = SquareMatrix::from_fn(self.dim(), |i, j| (self.log_entries[i][j] + x[j] - x[i] - mu).exp());
        Some((b, mu, x))
    }
}

/// Kernel of `S(t) - drift·t` at `θ`: entries `p_ij e^{-θ·drift} E[e^{θC_ij}]`.
///
/// Inhomogeneous models are rejected; the kernel is only defined for a
/// fixed transition matrix.
pub fn build_kernel<T: Real>(model: &MarkovAdditiveModel<T>, theta: T, drift: T) -> Result<KernelMatrix<T>> {
    let p = model.homogeneous_matrix()?;
    let n = model.dim();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let pij = p.get(i, j);
                    if pij > T::zero() {
                        pij.ln() + model.law(i, j).log_mgf(theta) - theta * drift
                    } else {
                        T::neg_infinity()
                    }
                })
                .collect()
        })
        .collect();
    KernelMatrix::from_log_entries(theta, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult<T> {
    pub theta: T,
    /// Log of the Perron root.
    pub kappa: T,
    /// Right Perron vector with `π·h = 1`.
    pub h: Vec<T>,
    /// Left Perron vector with `v·h = 1`.
    pub v: Vec<T>,
    /// `max(‖F̂h - e^κ h‖∞, ‖vF̂ - e^κ v‖∞)`, relative to `e^κ`.
    pub residual: T,
}

impl<T: Real> SpectralResult<T> {
    pub fn h_min(&self) -> T {
        self.h.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn h_max(&self) -> T {
        self.h.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Perron root and vectors of an irreducible nonnegative kernel.
///
/// The kernel is first balanced by a diagonal similarity (see
/// [`KernelMatrix`]'s max-plus scaling). The dominant eigenvectors of the
/// balanced matrix come from repeated squaring, which converges at rate
/// `(λ₂/λ₁)^{2^k}`, followed by plain power iteration until successive
/// iterates agree to `1e-13`. The iteration runs on `B + I`, which is
/// primitive even when `B` is periodic or nearly so.
pub fn perron<T: Real>(kernel: &KernelMatrix<T>, pi0: &MarginalDistribution<T>) -> Result<SpectralResult<T>> {
    let n = kernel.dim();
    if pi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pi0.len() });
    }
    if !kernel.pattern().is_irreducible() {
        return Err(Error::NonIrreducible);
    }
    let (b, mu, x) = kernel.balanced().ok_or(Error::NonIrreducible)?;
    // B + I has the same eigenvectors; since ρ(B) ≥ 1 the shift at most
    // halves the spectral gap and removes every other unimodular eigenvalue
    let iter_matrix = SquareMatrix::from_fn(n, |i, j| b[(i, j)] + if i == j { T::one() } else { T::zero() });

    let mut power = iter_matrix.clone();
    for _ in 0..SQUARINGS {
        power = power.mul(&power);
        let top = power.as_slice().iter().copied().fold(T::zero(), T::max);
        power = power.map(|x| x / top);
    }
    let ones = vec![T::one(); n];
    let hb = polish(&iter_matrix, normalize_max(power.mul_vec(&ones)), false)?;
    let vb = polish(&iter_matrix, normalize_max(power.vec_mul(&ones)), true)?;

    let bh = b.mul_vec(&hb);
    let vbh = dot(&vb, &hb);
    let rho = dot(&vb, &bh) / vbh;
    let kappa = rho.ln() + mu;
    let right = bh.iter().zip(&hb).map(|(a, c)| (*a - rho * *c).abs()).fold(T::zero(), T::max);
    let left = b
        .vec_mul(&vb)
        .iter()
        .zip(&vb)
        .map(|(a, c)| (*a - rho * *c).abs())
        .fold(T::zero(), T::max);

    // undo the similarity: h = D h_B, v ∝ v_B D⁻¹, then π·h = 1 and v·h = 1
    let h: Vec<T> = hb.iter().zip(&x).map(|(h, x)| *h * x.exp()).collect();
    let h_scale = dot(pi0.probs(), &h);
    let h: Vec<T> = h.iter().map(|v| *v / h_scale).collect();
    let log_c = h_scale.ln() - vbh.ln();
    let v: Vec<T> = vb.iter().zip(&x).map(|(v, x)| (log_c + v.ln() - *x).exp()).collect();
    Ok(SpectralResult {
        theta: kernel.theta,
        kappa,
        h,
        v,
        residual: right.max(left) / rho,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn normalize_max<T: Real>(mut x: Vec<T>) -> Vec<T> {
    let top = x.iter().copied().fold(T::zero(), T::max);
    x.iter_mut().for_each(|e| *e /= top);
    x
}

fn polish<T: Real>(m: &SquareMatrix<T>, mut x: Vec<T>, left: bool) -> Result<Vec<T>> {
    let tol = T::tol(POWER_TOL);
    for _ in 0..POWER_MAX_ITER {
        let next = normalize_max(if left { m.vec_mul(&x) } else { m.mul_vec(&x) });
        let change = next.iter().zip(&x).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        x = next;
        if change <= tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
    })
}

/// `θ ↦ κ(θ)` for the net process `S(t) - drift·t`.
pub fn kappa_function<T: Real>(
    model: &MarkovAdditiveModel<T>,
    drift: T,
) -> Result<impl Fn(T) -> Result<T> + '_> {
    let pi = model.stationary()?;
    Ok(move |theta: T| Ok(perron(&build_kernel(model, theta, drift)?, &pi)?.kappa))
}

/// Spectral data of the net process at `theta`.
pub fn spectral_at<T: Real>(model: &MarkovAdditiveModel<T>, theta: T, drift: T) -> Result<SpectralResult<T>> {
    perron(&build_kernel(model, theta, drift)?, &model.stationary()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentCoefficient<T> {
    /// `θ* > 0`, the decay rate per bit of the backlog tail.
    pub theta_star: T,
    /// Spectral data of `S(t) - λt` at `θ = -θ*`.
    pub spectral: SpectralResult<T>,
}

/// Positive root `θ*` of `θ ↦ κ_{λ-C}(θ)`, the cumulant of the per-slot
/// shortfall `λ - C`.
///
/// The upper end of the bracket starts at 1 and doubles up to `1e3`; the
/// lower end halves down from it. The root is then bisected down to
/// floating-point resolution.
pub fn adjustment_coefficient<T: Real>(model: &MarkovAdditiveModel<T>, lambda: T) -> Result<AdjustmentCoefficient<T>> {
    let mean = model.mean_increment()?;
    if mean <= lambda {
        return Err(Error::UnstableQueue {
            mean_capacity: mean.as_f64(),
            lambda: lambda.as_f64(),
        });
    }
    // κ(-θ)/θ tends to the heaviest cycle mean of λ - inf C_ij, so a root
    // exists exactly when some cycle can average a shortfall
    let p = model.homogeneous_matrix()?;
    let n = model.dim();
    let shortfall: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if p.get(i, j) > T::zero() {
                        lambda - model.law(i, j).infimum()
                    } else {
                        T::neg_infinity()
                    }
                })
                .collect()
        })
        .collect();
    if !maxplus::max_cycle_mean(&shortfall).is_some_and(|m| m > T::zero()) {
        return Err(Error::NoRoot);
    }
    let pi = model.stationary()?;
    let net = |theta: T| -> Result<T> { Ok(perron(&build_kernel(model, -theta, lambda)?, &pi)?.kappa) };

    // κ is convex with κ(0) = 0 and κ'(0) < 0, so it is negative on (0, θ*):
    // widen `hi` until κ turns positive, then halve down from it until κ is
    // resolvably negative, which works at any precision
    let mut lo = None;
    let mut hi = T::lit(BRACKET_HI);
    loop {
        let k = net(hi)?;
        if k > T::zero() {
            break;
        }
        if k < T::zero() {
            lo = Some(hi);
        }
        hi = hi * T::lit(2.0);
        if hi > T::lit(BRACKET_CAP) {
            return Err(Error::NoRoot);
        }
    }
    let lo = match lo {
        Some(lo) => lo,
        None => {
            let mut lo = hi / T::lit(2.0);
            while net(lo)? >= T::zero() {
                lo = lo / T::lit(2.0);
                if lo < T::min_positive_value().sqrt() {
                    return Err(Error::NoRoot);
                }
            }
            lo
        }
    };
    let mut failure = None;
    let theta_star = bisect(
        |t| match net(t) {
            Ok(k) => k,
            Err(e) => {
                failure.get_or_insert(e);
                T::nan()
            }
        },
        lo,
        hi,
        T::zero(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let spectral = perron(&build_kernel(model, -theta_star, lambda)?, &pi)?;
    Ok(AdjustmentCoefficient { theta_star, spectral })
}

/// CSV of `κ` over a `θ` grid, header `theta,kappa`.
pub fn kappa_csv<T: Real>(model: &MarkovAdditiveModel<T>, drift: T, thetas: &[T]) -> Result<String> {
    let kappa = kappa_function(model, drift)?;
    let mut out = String::from("theta,kappa\n");
    for &t in thetas {
        out.push_str(&format!("{},{}\n", t, kappa(t)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::IncrementLaw;
    use crate::markov::TransitionMatrix;

    #[test]
    fn zero_theta_gives_transition_matrix() {
        let p = TransitionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.1, 0.9]]).unwrap();
        let laws = vec![vec![IncrementLaw::deterministic(3.0f64); 2]; 2];
        let m = MarkovAdditiveModel::homogeneous(p.clone(), laws).unwrap();
        let k = build_kernel(&m, 0.0, 5.0).unwrap();
        assert!(k.entries().max_abs_diff(p.matrix()) < 1e-16);
        let r = perron(&k, &m.stationary().unwrap()).unwrap();
        assert!(r.kappa.abs() < 1e-14);
        assert!(r.h.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_by_two_closed_form() {
        let rows = vec![vec![0.5f64, 2.0], vec![0.25, 1.5]];
        let k = KernelMatrix::from_entries(0.0, &rows).unwrap();
        let r = perron(&k, &MarginalDistribution::uniform(2)).unwrap();
        let (a, b, c, d) = (0.5f64, 2.0, 0.25, 1.5);
        let tr = a + d;
        let det = a * d - b * c;
        let root = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!((r.kappa - root.ln()).abs() < 1e-14);
        assert!(r.residual < 1e-14);
        let vh: f64 = r.v.iter().zip(&r.h).map(|(a, b)| a * b).sum();
        assert!((vh - 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_kernel() {
        let k = KernelMatrix::from_entries(0.0, &[vec![0.0f64, 2.0], vec![8.0, 0.0]]).unwrap();
        let r = perron(&k, &MarginalDistribution::uniform(2)).unwrap();
        assert!((r.kappa - 4.0f64.ln()).abs() < 1e-14);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn reducible_kernel_rejected() {
        let k = KernelMatrix::from_entries(0.0, &[vec![1.0f64, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            perron(&k, &MarginalDistribution::uniform(2)),
            Err(Error::NonIrreducible)
        ));
    }

    #[test]
    fn deterministic_single_state() {
        let m = MarkovAdditiveModel::single_state(IncrementLaw::deterministic(7.0f64)).unwrap();
        let kappa = kappa_function(&m, 4.0).unwrap();
        for t in [-2.0, 0.3, 5.0] {
            assert!((kappa(t).unwrap() - 3.0 * t).abs() < 1e-13);
        }
        assert!(matches!(adjustment_coefficient(&m, 4.0), Err(Error::NoRoot)));
        assert!(matches!(
            adjustment_coefficient(&m, 7.0),
            Err(Error::UnstableQueue { .. })
        ));
    }

    #[test]
    fn on_off_scalar_root() {
        // q e^{θλ} + (1-q) e^{θ(λ-c)} = 1 with q = 0.2, c = 10, λ = 4
        let law = IncrementLaw::discrete(vec![0.0, 10.0], vec![0.2, 0.8]).unwrap();
        let m = MarkovAdditiveModel::single_state(law).unwrap();
        let r = adjustment_coefficient(&m, 4.0f64).unwrap();
        let f = |t: f64| 0.2 * (4.0 * t).exp() + 0.8 * (-6.0 * t).exp() - 1.0;
        // independent scalar solve by Newton from a point right of the root
        let mut t: f64 = 1.0;
        for _ in 0..100 {
            let df = 0.8 * (4.0 * t).exp() - 4.8 * (-6.0 * t).exp();
            t -= f(t) / df;
        }
        assert!((r.theta_star - t).abs() < 1e-12 * t, "{} vs {t}", r.theta_star);
        assert!(r.spectral.kappa.abs() < 1e-12);
    }
}

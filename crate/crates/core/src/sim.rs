//! Seeded Monte-Carlo simulation of capacity processes and fluid queues.
//!
//! Path `k` of an ensemble draws from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `k`, so an ensemble depends only on `(seed, N, T)` and never on how
//! the paths are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::TailBoundCurve;
use crate::control::GaussianJointModel;
use crate::error::{Error, Result};
use crate::markov::MarginalDistribution;
use crate::model::MarkovAdditiveModel;
use crate::numeric::normal;
use crate::spectral::spectral_at;

/// Exceedances a grid point needs before it counts in a validation.
pub const MIN_EXCEEDANCES: usize = 100;
/// Widening of the DKW band for serially dependent samples.
pub const DEPENDENT_SAMPLE_INFLATION: f64 = 2.0;

/// One simulated path: `states[t]` is `J_t` for `t = 0..=T` and
/// `increments[t]` is `C(t)`, the capacity accrued from `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub states: Vec<usize>,
    pub increments: Vec<f64>,
}

impl SamplePath {
    /// `S(t)` for `t = 0..=T`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut s = 0.0;
        out.push(s);
        for c in &self.increments {
            s += c;
            out.push(s);
        }
        out
    }
}

/// Anything that can produce capacity sample paths.
pub trait CapacityProcess: Sync {
    fn sample_path(&self, horizon: usize, rng: &mut ChaCha8Rng) -> SamplePath;
}

/// A Markov additive model started from `varpi`.
#[derive(Debug, Clone, Copy)]
pub struct ChainProcess<'a> {
    pub model: &'a MarkovAdditiveModel<f64>,
    pub varpi: &'a MarginalDistribution<f64>,
}

fn draw_index(probs: impl IntoIterator<Item = f64>, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last = k;
            acc += p;
            if u < acc {
                return k;
            }
        }
    }
    last
}

impl CapacityProcess for ChainProcess<'_> {
    fn sample_path(&self, horizon: usize, rng: &mut ChaCha8Rng) -> SamplePath {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut increments = Vec::with_capacity(horizon);
        let mut j = draw_index(self.varpi.probs().iter().copied(), rng);
        states.push(j);
        for t in 0..horizon {
            let p = self.model.transition(t);
            let k = draw_index(p.matrix().row(j).iter().copied(), rng);
            increments.push(self.model.law(j, k).sample(rng));
            states.push(k);
            j = k;
        }
        SamplePath { states, increments }
    }
}

impl CapacityProcess for GaussianJointModel<f64> {
    fn sample_path(&self, horizon: usize, rng: &mut ChaCha8Rng) -> SamplePath {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut increments = Vec::with_capacity(horizon);
        let j0 = draw_index(self.initial.probs().iter().copied(), rng);
        let (lo, hi) = self.band(j0);
        let u = lo + (hi - lo) * rng.gen::<f64>();
        let mut x1 = normal::quantile(u.clamp(1e-300, 1.0 - f64::EPSILON));
        let e: f64 = rng.sample(StandardNormal);
        let mut x2 = self.rho0 * x1 + (1.0 - self.rho0 * self.rho0).sqrt() * e;
        let mut j = j0;
        states.push(j);
        for _ in 0..horizon {
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            let n1 = self.a[0][0] * x1 + self.a[0][1] * x2 + self.l[0][0] * e1 + self.l[0][1] * e2;
            let n2 = self.a[1][0] * x1 + self.a[1][1] * x2 + self.l[1][0] * e1 + self.l[1][1] * e2;
            let k = self.power_state(n1);
            let gain = Self::fading_gain(x2);
            increments.push(self.bandwidth * (self.snr.get(j, k) * gain).ln_1p() / std::f64::consts::LN_2);
            states.push(k);
            (x1, x2, j) = (n1, n2, k);
        }
        SamplePath { states, increments }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub seed: u64,
    pub horizon: usize,
    pub paths: Vec<SamplePath>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Transient capacities `S(t)/t` of every path at slot `t ≥ 1`.
    pub fn transient_at(&self, t: usize) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| p.increments[..t].iter().sum::<f64>() / t as f64)
            .collect()
    }

    /// CSV `t,mean,q_low,q_high` of the transient capacity, with empirical
    /// quantiles at `q` and `1 - q`.
    pub fn summary_csv(&self, times: &[usize], q: f64) -> String {
        let mut out = String::from("t,mean,q_low,q_high\n");
        for &t in times {
            let mut v = self.transient_at(t);
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            out.push_str(&format!(
                "{t},{mean},{},{}\n",
                empirical_quantile(&v, q),
                empirical_quantile(&v, 1.0 - q)
            ));
        }
        out
    }
}

fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// `n` independent paths of `process` over `horizon` slots.
pub fn simulate_process<P: CapacityProcess + ?Sized>(process: &P, horizon: usize, n: usize, seed: u64) -> PathEnsemble {
    let paths = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            process.sample_path(horizon, &mut rng)
        })
        .collect();
    PathEnsemble { seed, horizon, paths }
}

pub fn simulate_ensemble(
    model: &MarkovAdditiveModel<f64>,
    varpi: &MarginalDistribution<f64>,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if varpi.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: varpi.len(),
        });
    }
    if horizon == 0 || n == 0 {
        return Err(Error::InvalidParameter("need at least one path and one slot".into()));
    }
    Ok(simulate_process(&ChainProcess { model, varpi }, horizon, n, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueSamples {
    pub lambda: f64,
    pub warmup: usize,
    /// `B(t)` for every path and every `t ≥ warmup`, path-major.
    pub backlog: Vec<f64>,
    /// `D(t) = B(t)/λ` (zero when `λ = 0`).
    pub delay: Vec<f64>,
    /// Ensemble mean capacity per slot.
    pub mean_capacity: f64,
    /// The arrival rate is not below the empirical mean capacity.
    pub unstable: bool,
}

/// Fluid queue `B(t+1) = max(B(t) + λ - C(t), 0)` from `B(0) = 0` on every
/// path, sampled at `t = warmup..=T`.
pub fn lindley_queue(ensemble: &PathEnsemble, lambda: f64, warmup: usize) -> QueueSamples {
    let per_path: Vec<Vec<f64>> = ensemble
        .paths
        .par_iter()
        .map(|p| {
            let mut b = 0.0f64;
            let mut out = Vec::with_capacity(p.increments.len().saturating_sub(warmup) + 1);
            if warmup == 0 {
                out.push(b);
            }
            for (t, c) in p.increments.iter().enumerate() {
                b = (b + lambda - c).max(0.0);
                if t + 1 >= warmup {
                    out.push(b);
                }
            }
            out
        })
        .collect();
    let backlog: Vec<f64> = per_path.into_iter().flatten().collect();
    let delay = backlog
        .iter()
        .map(|b| if lambda > 0.0 { b / lambda } else { 0.0 })
        .collect();
    let slots: usize = ensemble.paths.iter().map(|p| p.increments.len()).sum();
    let total: f64 = ensemble.paths.iter().flat_map(|p| &p.increments).sum();
    let mean_capacity = if slots > 0 { total / slots as f64 } else { 0.0 };
    QueueSamples {
        lambda,
        warmup,
        backlog,
        delay,
        mean_capacity,
        unstable: mean_capacity <= lambda,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub x: Vec<f64>,
    /// `P̂(X ≥ x)`.
    pub ccdf: Vec<f64>,
    pub dkw_lo: Vec<f64>,
    pub dkw_hi: Vec<f64>,
    /// Number of samples `≥ x`.
    pub exceedances: Vec<usize>,
    pub n: usize,
    pub half_width: f64,
}

impl EmpiricalTail {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,empirical,dkw_lo,dkw_hi\n");
        for k in 0..self.x.len() {
            out.push_str(&format!("{},{},{},{}\n", self.x[k], self.ccdf[k], self.dkw_lo[k], self.dkw_hi[k]));
        }
        out
    }
}

/// `√(ln(2/δ)/(2n))`, the DKW half-width at confidence `1 - δ`.
pub fn dkw_half_width(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical complementary CDF `P̂(X ≥ x)` on `grid` with a DKW band at
/// confidence `1 - δ`, widened by `inflation`.
pub fn empirical_tail(samples: &[f64], grid: &[f64], delta: f64, inflation: f64) -> Result<EmpiricalTail> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let half_width = inflation * dkw_half_width(n, delta);
    let mut tail = EmpiricalTail {
        x: grid.to_vec(),
        ccdf: Vec::with_capacity(grid.len()),
        dkw_lo: Vec::with_capacity(grid.len()),
        dkw_hi: Vec::with_capacity(grid.len()),
        exceedances: Vec::with_capacity(grid.len()),
        n,
        half_width,
    };
    for &x in grid {
        let below = sorted.partition_point(|s| *s < x);
        let count = n - below;
        let p = count as f64 / n as f64;
        tail.ccdf.push(p);
        tail.dkw_lo.push((p - half_width).max(0.0));
        tail.dkw_hi.push((p + half_width).min(1.0));
        tail.exceedances.push(count);
    }
    Ok(tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub points_checked: usize,
    pub violations: usize,
    /// Points where the whole DKW band lies below the analytic lower bound.
    pub lower_violations: usize,
    /// Points where the whole DKW band lies above the analytic upper bound.
    pub upper_violations: usize,
    pub max_violation: f64,
}

/// Compares an empirical tail with an analytic band on the same grid,
/// counting only points with at least `min_exceedances` samples.
pub fn validate_bounds(
    tail: &EmpiricalTail,
    curve: &TailBoundCurve<f64>,
    min_exceedances: usize,
) -> Result<ValidationReport> {
    if tail.x.len() != curve.len() {
        return Err(Error::DimensionMismatch {
            expected: curve.len(),
            got: tail.x.len(),
        });
    }
    let mut report = ValidationReport {
        points_checked: 0,
        violations: 0,
        lower_violations: 0,
        upper_violations: 0,
        max_violation: 0.0,
    };
    for k in 0..curve.len() {
        if tail.exceedances[k] < min_exceedances {
            continue;
        }
        report.points_checked += 1;
        let below = curve.lower[k] - tail.dkw_hi[k];
        let above = tail.dkw_lo[k] - curve.upper[k];
        if below > 0.0 {
            report.lower_violations += 1;
        }
        if above > 0.0 {
            report.upper_violations += 1;
        }
        if below > 0.0 || above > 0.0 {
            report.violations += 1;
            report.max_violation = report.max_violation.max(below).max(above);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub t: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo mean of `L(t) = h(J_t)/h(J_0) · e^{θS(t) - tκ(θ)}` at each `t`.
pub fn martingale_check(
    model: &MarkovAdditiveModel<f64>,
    varpi: &MarginalDistribution<f64>,
    theta: f64,
    times: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<MartingalePoint>> {
    let spectral = spectral_at(model, theta, 0.0)?;
    let horizon = times.iter().copied().max().unwrap_or(0);
    let ensemble = simulate_ensemble(model, varpi, horizon.max(1), n, seed)?;
    Ok(times
        .iter()
        .map(|&t| {
            let values: Vec<f64> = ensemble
                .paths
                .iter()
                .map(|p| {
                    let s: f64 = p.increments[..t].iter().sum();
                    spectral.h[p.states[t]] / spectral.h[p.states[0]]
                        * (theta * s - t as f64 * spectral.kappa).exp()
                })
                .collect();
            let (mean, se) = mean_and_se(&values);
            MartingalePoint { t, mean, std_error: se }
        })
        .collect())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lag1Estimate {
    /// Mean over paths of the per-path lag-1 sample correlation of `C(t)`.
    pub rho: f64,
    /// Standard error of that mean across paths.
    pub std_error: f64,
    pub paths: usize,
}

/// Lag-1 autocorrelation of the capacity series after discarding `skip`
/// slots. Paths with a constant series are ignored.
pub fn lag1_autocorrelation(ensemble: &PathEnsemble, skip: usize) -> Result<Lag1Estimate> {
    let per_path: Vec<f64> = ensemble
        .paths
        .iter()
        .filter_map(|p| {
            let c = p.increments.get(skip..)?;
            if c.len() < 3 {
                return None;
            }
            let (x, y) = (&c[..c.len() - 1], &c[1..]);
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
        })
        .collect();
    if per_path.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (rho, std_error) = mean_and_se(&per_path);
    Ok(Lag1Estimate {
        rho,
        std_error,
        paths: per_path.len(),
    })
}

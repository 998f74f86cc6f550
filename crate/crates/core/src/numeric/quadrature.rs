//! Gauss–Legendre and Gauss–Laguerre rules.
//!
//! Nodes are computed once per order in `f64` by Newton iteration on the
//! three-term recurrences and cached; callers convert to their scalar.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::Real;

/// A quadrature rule on its reference domain.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `ln(weight)`; finite even where `weights` underflows (Laguerre tails).
    pub log_weights: Vec<f64>,
}

type Cache = Mutex<HashMap<usize, Arc<GaussRule>>>;

fn cached(cache: &'static OnceLock<Cache>, n: usize, build: fn(usize) -> GaussRule) -> Arc<GaussRule> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = map.lock().expect("rule cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build(n));
    map.lock()
        .expect("rule cache poisoned")
        .insert(n, Arc::clone(&rule));
    rule
}

/// `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_legendre)
}

/// `n`-point Gauss–Laguerre rule for ∫₀^∞ f(x) e^{-x} dx.
pub fn gauss_laguerre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_laguerre)
}

fn build_legendre(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let log_weights = weights.iter().map(|w| w.ln()).collect();
    GaussRule {
        nodes,
        weights,
        log_weights,
    }
}

/// Laguerre polynomial L_n and L_{n-1} at `x`, rescaled to avoid overflow.
/// Returns `(l_n, l_nm1, log_scale)` with the true values `l * e^{log_scale}`.
fn laguerre_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) as f64 - x) * p2 / (j + 1) as f64 - j as f64 * p3 / (j + 1) as f64;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p1, p2, log_scale)
}

fn build_laguerre(n: usize) -> GaussRule {
    assert!(n >= 1);
    let nf = n as f64;
    let mut nodes = vec![0.0f64; n];
    let mut log_weights = vec![0.0f64; n];
    let mut z = 0.0f64;
    for i in 0..n {
        // initial guesses after Stroud & Secrest
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
        }
        for _ in 0..200 {
            let (p1, p2, _) = laguerre_scaled(n, z);
            // derivative: x L_n' = n (L_n - L_{n-1})
            let dp = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        // w_i = x_i / ((n+1)^2 L_{n+1}(x_i)^2)
        let (l_np1, _, scale) = laguerre_scaled(n + 1, z);
        log_weights[i] = z.ln() - 2.0 * (nf + 1.0).ln() - 2.0 * (l_np1.abs().ln() + scale);
    }
    let weights = log_weights.iter().map(|lw| lw.exp()).collect();
    GaussRule {
        nodes,
        weights,
        log_weights,
    }
}

/// Integrates `f` over `[a, b]` with `panels` equal Gauss–Legendre panels of order `order`.
pub fn composite_legendre<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    panels: usize,
    order: usize,
) -> T {
    if b <= a || panels == 0 {
        return T::zero();
    }
    let rule = gauss_legendre(order);
    let width = (b - a) / T::from_usize_lossy(panels);
    let half = width / T::lit(2.0);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + width * T::from_usize_lossy(p) + half;
        let mut s = T::zero();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += T::lit(*w) * f(mid + half * T::lit(*x));
        }
        total += s * half;
    }
    total
}

//! One-dimensional root bracketing and minimisation.

use crate::scalar::Real;

/// Bisection on a sign-changing bracket `[lo, hi]` (`f(lo)` and `f(hi)` of
/// opposite sign). Stops when the bracket width falls below `x_tol` or can no
/// longer shrink in floating point; returns the endpoint with smaller `|f|`.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, x_tol: T) -> T {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == T::zero() {
        return lo;
    }
    if f_hi == T::zero() {
        return hi;
    }
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi || hi - lo <= x_tol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return mid;
        }
        if (f_mid < T::zero()) == (f_lo < T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        lo
    } else {
        hi
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
/// Returns `(argmin, min)`; non-finite values are treated as `+inf`.
pub fn golden_min<T: Real>(mut f: impl FnMut(T) -> T, mut a: T, mut b: T, x_tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut eval = |x: T| {
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..500 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
            if fc < best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
            if fd < best_f {
                best_x = d;
                best_f = fd;
            }
        }
    }
    (best_x, best_f)
}

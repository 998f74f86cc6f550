//! Exponential integral `E₁`.

use crate::scalar::Real;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `e^x E₁(x)` for `x > 0`.
///
/// Power series for `x ≤ 1`, continued fraction (modified Lentz) above.
pub fn scaled_e1<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "E1 needs a positive argument");
    if x <= T::one() {
        let mut term = T::one();
        let mut sum = T::zero();
        for k in 1..200usize {
            let kf = T::from_usize_lossy(k);
            term = -term * x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        (-T::lit(EULER_GAMMA) - x.ln() + sum) * x.exp()
    } else {
        // e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
        let tiny = T::min_positive_value().sqrt();
        let mut b = x + T::one();
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..1000usize {
            let a = -T::from_usize_lossy(i * i);
            b += T::lit(2.0);
            d = T::one() / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - T::one()).abs() <= T::epsilon() {
                break;
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_values() {
        // e^x E1(x), arbitrary-precision reference
        let cases = [
            (0.01f64, 4.078_511_443_456_426),
            (0.5, 0.922_910_632_483_730),
            (1.0, 0.596_347_362_323_194),
            (3.0, 0.262_083_740_255_318),
            (20.0, 0.047_718_545_495_961),
        ];
        for (x, want) in cases {
            let got = scaled_e1(x);
            assert!((got - want).abs() / want < 1e-12, "x={x}: {got} vs {want}");
        }
    }
}

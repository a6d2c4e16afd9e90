//! Shared test oracles: hypergeometric series summed exactly over the
//! rationals, converted to f64 only at the end.
//!
//! Terms are accumulated over one running (unreduced) common denominator so
//! no gcd is ever taken; numbers grow to a few tens of kilobits at worst,
//! which BigInt handles comfortably.

#![allow(dead_code)]

use num::bigint::BigInt;
use num::traits::ToPrimitive;

/// Rational parameter as numerator/denominator of machine integers.
#[derive(Clone, Copy, Debug)]
pub struct Rat(pub i64, pub i64);

impl Rat {
    fn num(self) -> BigInt {
        BigInt::from(self.0)
    }
    fn den(self) -> BigInt {
        BigInt::from(self.1)
    }
    /// Numerator of (self + k) over the same denominator.
    fn shifted_num(self, k: usize) -> BigInt {
        BigInt::from(self.0) + BigInt::from(self.1) * BigInt::from(k)
    }
}

/// num/den as f64, tolerating operands far beyond f64 range (the quotient
/// itself must be representable).
pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let sn = num.bits().saturating_sub(256);
    let sd = den.bits().saturating_sub(256);
    let n = (num >> sn).to_f64().expect("numerator shift");
    let d = (den >> sd).to_f64().expect("denominator shift");
    (n / d) * 2f64.powi(sn as i32 - sd as i32)
}

/// Exact-series engine: sums Σ t_k with t_0 = 1 and
/// t_{k+1} = t_k · step_num(k) / step_den(k), stopping once the current term
/// is below 2^-80 of the running sum (and k ≥ 8), or panicking at `cap`.
fn sum_ratio_series(
    step_num: impl Fn(usize) -> BigInt,
    step_den: impl Fn(usize) -> BigInt,
    cap: usize,
) -> f64 {
    let mut sum_num = BigInt::from(1);
    let mut term_num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for k in 0..cap {
        let dn = step_den(k);
        assert!(dn != BigInt::from(0), "series denominator vanished at k={k}");
        term_num *= step_num(k);
        sum_num *= &dn;
        den *= &dn;
        sum_num += &term_num;
        if term_num == BigInt::from(0) {
            return big_ratio_to_f64(&sum_num, &den);
        }
        if k >= 8 && term_num.bits() + 80 < sum_num.bits() {
            return big_ratio_to_f64(&sum_num, &den);
        }
    }
    panic!("rational series did not converge within {cap} terms");
}

/// ₁F₁(a, b; z) by exact rational summation.
pub fn hyp1f1_oracle(a: Rat, b: Rat, z: Rat) -> f64 {
    sum_ratio_series(
        |k| a.shifted_num(k) * b.den() * z.num(),
        |k| b.shifted_num(k) * a.den() * z.den() * BigInt::from(k + 1),
        4_000,
    )
}

/// ₂F₁(a, b; c; z) by exact rational summation (|z| < 1).
pub fn hyp2f1_oracle(a: Rat, b: Rat, c: Rat, z: Rat) -> f64 {
    sum_ratio_series(
        |k| a.shifted_num(k) * b.shifted_num(k) * c.den() * z.num(),
        |k| c.shifted_num(k) * a.den() * b.den() * z.den() * BigInt::from(k + 1),
        40_000,
    )
}

/// L_{1/2}(x) = ₁F₁(−1/2, 1; x).
pub fn laguerre_half_oracle(x: Rat) -> f64 {
    hyp1f1_oracle(Rat(-1, 2), Rat(1, 1), x)
}

/// ln Γ(twice_x / 2) for twice_x ≥ 1: exact factorial / double-factorial
/// product, logarithm taken last.
pub fn ln_gamma_oracle(twice_x: u64) -> f64 {
    assert!(twice_x >= 1);
    if twice_x % 2 == 0 {
        // Γ(m) = (m − 1)!
        let m = twice_x / 2;
        let mut f = BigInt::from(1);
        for j in 2..m {
            f *= BigInt::from(j);
        }
        big_ratio_to_f64(&f, &BigInt::from(1)).ln()
    } else {
        // Γ(m + 1/2) = √π · Π_{j=1..m} (2j − 1) / 2^m
        let m = (twice_x - 1) / 2;
        let mut num = BigInt::from(1);
        for j in 1..=m {
            num *= BigInt::from(2 * j - 1);
        }
        let den = BigInt::from(1) << m;
        0.5 * std::f64::consts::PI.ln() + big_ratio_to_f64(&num, &den).ln()
    }
}

/// Relative error with a floor that keeps tiny references meaningful.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

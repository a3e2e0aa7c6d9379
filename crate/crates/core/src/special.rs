//! Gamma, Beta, the Gauss hypergeometric function and the inverse normal CDF.

use alloc::format;
use core::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("gamma_fn", format!("argument {x} must be a positive finite real")));
    }
    Ok(gamma_real(x))
}

/// Γ(x) on the whole real line; poles at non-positive integers give ±∞.
pub(crate) fn gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        if x == libm::floor(x) {
            return f64::INFINITY;
        }
        // reflection
        return PI / (sin_pi(x) * gamma_real(1.0 - x));
    }
    if x == libm::floor(x) && x <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^(z+1/2) does not overflow before e^-t damps it
    let half = libm::pow(t, 0.5 * (z + 0.5));
    libm::sqrt(2.0 * PI) * half * (half * libm::exp(-t)) * acc
}

/// 1/Γ(x), exactly zero at the poles.
pub(crate) fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == libm::floor(x) {
        0.0
    } else {
        1.0 / gamma_real(x)
    }
}

fn sin_pi(x: f64) -> f64 {
    // reduce first so sin(πx) stays accurate for large |x|
    let r = x - 2.0 * libm::round(0.5 * x);
    libm::sin(PI * r)
}

/// Beta function B(x, y) for positive arguments.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::domain("beta_fn", format!("arguments ({x}, {y}) must be positive")));
    }
    Ok(gamma_real(x) * gamma_real(y) / gamma_real(x + y))
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == libm::floor(x)
}

fn near_integer(x: f64) -> bool {
    libm::fabs(x - libm::round(x)) < 1e-12
}

const MAX_SERIES_TERMS: usize = 200_000;
const DIRECT_LIMIT: f64 = 0.5;

/// Direct Maclaurin series of ₂F₁(a,b;c;z), |z| < 1.
pub(crate) fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if libm::fabs(term) <= 1e-17 * libm::fabs(sum) {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence { op: "gauss_2f1", terms: MAX_SERIES_TERMS })
}

/// Evaluation of ₂F₁(a,b;c;·) on [0, 1) for one fixed parameter triple.
///
/// Arguments below 1/2 use the series directly. Above, the `1 − z`
/// connection formula is used when `c − a − b` is not an integer, with its
/// Gamma-ratio coefficients computed once here.
#[derive(Debug, Clone, Copy)]
struct UnitInterval {
    a: f64,
    b: f64,
    c: f64,
    connection: Option<(f64, f64)>,
}

impl UnitInterval {
    fn new(a: f64, b: f64, c: f64) -> Self {
        let s = c - a - b;
        let connection = if near_integer(s) || is_nonpositive_integer(a) || is_nonpositive_integer(b) {
            None
        } else {
            let gc = gamma_real(c);
            let first = gc * gamma_real(s) * rgamma(c - a) * rgamma(c - b);
            let second = gc * gamma_real(-s) * rgamma(a) * rgamma(b);
            Some((first, second))
        };
        UnitInterval { a, b, c, connection }
    }

    /// `w` in [0, 1) together with `1 − w`, which callers often know more precisely.
    fn eval(&self, w: f64, one_minus_w: f64) -> Result<f64> {
        let UnitInterval { a, b, c, .. } = *self;
        match self.connection {
            Some((first, second)) if w >= DIRECT_LIMIT => {
                let s = c - a - b;
                let mut value = 0.0;
                if first != 0.0 {
                    value += first * series_2f1(a, b, 1.0 - s, one_minus_w)?;
                }
                if second != 0.0 {
                    value += second * libm::pow(one_minus_w, s) * series_2f1(c - a, c - b, 1.0 + s, one_minus_w)?;
                }
                Ok(value)
            }
            _ => series_2f1(a, b, c, w),
        }
    }
}

/// ₂F₁(a,b;c;·) for a fixed parameter triple on the real half-line `z ≤ 1`.
///
/// Negative arguments go through the Pfaff transformation
/// `F(a,b;c;z) = (1−z)^(−a) F(a, c−b; c; z/(z−1))`, which lands in [0, 1).
#[derive(Debug, Clone, Copy)]
pub struct Hyp2f1 {
    a: f64,
    b: f64,
    c: f64,
    direct: UnitInterval,
    pfaff: UnitInterval,
}

impl Hyp2f1 {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::domain("gauss_2f1", "parameters must be finite"));
        }
        if is_nonpositive_integer(c) {
            return Err(Error::domain("gauss_2f1", format!("c = {c} is a non-positive integer")));
        }
        Ok(Hyp2f1 { a, b, c, direct: UnitInterval::new(a, b, c), pfaff: UnitInterval::new(a, c - b, c) })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let Hyp2f1 { a, b, c, .. } = *self;
        if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
            // terminating polynomial, no transformation needed
            return series_2f1(a, b, c, z);
        }
        if z.is_nan() || z > 1.0 {
            return Err(Error::domain("gauss_2f1", format!("argument z = {z} outside (-inf, 1]")));
        }
        if z == 1.0 {
            let s = c - a - b;
            if s <= 0.0 {
                return Err(Error::domain("gauss_2f1", format!("series diverges at z = 1 since c - a - b = {s} <= 0")));
            }
            return Ok(gamma_real(c) * gamma_real(s) * rgamma(c - a) * rgamma(c - b));
        }
        if z >= 0.0 {
            return self.direct.eval(z, 1.0 - z);
        }
        if z == f64::NEG_INFINITY {
            return Err(Error::domain("gauss_2f1", "argument z = -inf"));
        }
        let one_minus_z = 1.0 - z;
        let w = -z / one_minus_z;
        let one_minus_w = 1.0 / one_minus_z;
        Ok(libm::pow(one_minus_z, -a) * self.pfaff.eval(w, one_minus_w)?)
    }

    /// Like [`Hyp2f1::eval`] for `z = −x/y` with `x, y > 0` given separately,
    /// which keeps `1 − w = y/(x+y)` accurate when `x ≫ y`.
    pub(crate) fn eval_negative_ratio(&self, x: f64, y: f64) -> Result<f64> {
        let a = self.a;
        if is_nonpositive_integer(a) || is_nonpositive_integer(self.b) {
            return series_2f1(a, self.b, self.c, -x / y);
        }
        let total = x + y;
        let w = x / total;
        let one_minus_w = y / total;
        // (1 − z)^(−a) = (total / y)^(−a)
        Ok(libm::pow(one_minus_w, a) * self.pfaff.eval(w, one_minus_w)?)
    }
}

/// ₂F₁(a, b; c; z) for real `z ≤ 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    Hyp2f1::new(a, b, c)?.eval(z)
}

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16).
///
/// `p` must lie in the open interval (0, 1).
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_854_561,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    fn poly(coef: &[f64; 8], x: f64) -> f64 {
        coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    if p <= 0.0 || p >= 1.0 {
        return match p {
            0.0 => f64::NEG_INFINITY,
            1.0 => f64::INFINITY,
            _ => f64::NAN,
        };
    }
    let q = p - 0.5;
    if libm::fabs(q) <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        libm::fabs(a - b) / libm::fabs(b)
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert!(rel(gamma_fn(0.5).unwrap(), 1.772_453_850_905_516) < 1e-15);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain { .. })));
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn gamma_against_libm_on_range() {
        let mut x = 0.05;
        while x <= 50.0 {
            let want = libm::tgamma(x);
            assert!(rel(gamma_fn(x).unwrap(), want) < 1e-12, "x = {x}");
            x += 0.0137;
        }
    }

    #[test]
    fn gamma_recurrence_and_reflection() {
        for &x in &[0.13, 0.77, 1.9, 3.3, 11.25] {
            let lhs = gamma_real(x + 1.0);
            assert!(rel(lhs, x * gamma_real(x)) < 1e-13);
        }
        for &x in &[0.3, 0.45, 0.71] {
            let prod = gamma_real(x) * gamma_real(1.0 - x);
            assert!(rel(prod, PI / libm::sin(PI * x)) < 1e-13);
        }
        // negative non-integer arguments via reflection: Γ(−1/2) = −2√π
        assert!(rel(gamma_real(-0.5), -2.0 * libm::sqrt(PI)) < 1e-14);
        assert_eq!(rgamma(-3.0), 0.0);
        assert_eq!(rgamma(0.0), 0.0);
    }

    #[test]
    fn beta_matches_gamma_ratio() {
        assert!(rel(beta_fn(2.0, 3.0).unwrap(), 1.0 / 12.0) < 1e-14);
        assert!(beta_fn(0.0, 1.0).is_err());
    }

    #[test]
    fn hyp2f1_examples() {
        assert_eq!(gauss_2f1(0.3, -0.3, 0.8, 0.0).unwrap(), 1.0);
        for &z in &[-50.0, -1.0, -0.2, 0.0, 0.4, 0.9] {
            assert_eq!(gauss_2f1(0.0, 1.7, 2.5, z).unwrap(), 1.0);
        }
        // closed form -ln(1-z)/z
        let want = -libm::log(0.5) / 0.5;
        assert!(rel(gauss_2f1(1.0, 1.0, 2.0, 0.5).unwrap(), want) < 1e-14);
        assert!(rel(want, 1.386_294_361_119_890_6) < 1e-15);
    }

    #[test]
    fn hyp2f1_errors() {
        assert!(matches!(gauss_2f1(1.0, 1.0, -2.0, 0.1), Err(Error::Domain { .. })));
        assert!(matches!(gauss_2f1(1.0, 1.0, 2.0, 1.5), Err(Error::Domain { .. })));
        // c - a - b = 0 diverges at z = 1
        assert!(matches!(gauss_2f1(1.0, 1.0, 2.0, 1.0), Err(Error::Domain { .. })));
        // Gauss sum: F(a,b;c;1) = Γ(c)Γ(c−a−b)/(Γ(c−a)Γ(c−b))
        let v = gauss_2f1(0.5, 0.25, 2.0, 1.0).unwrap();
        let want = gamma_real(2.0) * gamma_real(1.25) / (gamma_real(1.5) * gamma_real(1.75));
        assert!(rel(v, want) < 1e-14);
    }

    #[test]
    fn connection_branch_matches_elementary_closed_forms() {
        // F(1,1;2;z) = −ln(1−z)/z via the integer-s fallback (long series)
        for &z in &[0.6, 0.8, 0.95] {
            let want = -libm::log(1.0 - z) / z;
            assert!(rel(gauss_2f1(1.0, 1.0, 2.0, z).unwrap(), want) < 1e-12, "z = {z}");
        }
        // F(a,b;b;z) = (1−z)^(−a), with non-integer c−a−b so the connection formula runs
        for &z in &[0.55, 0.9, 0.999] {
            let want = libm::pow(1.0 - z, -0.3);
            assert!(rel(gauss_2f1(0.3, 1.7, 1.7, z).unwrap(), want) < 1e-12, "z = {z}");
        }
        // F(1/2,1/2;3/2;z²) = asin(z)/z
        for &z in &[0.75, 0.9, 0.99] {
            let want = libm::asin(z) / z;
            assert!(rel(gauss_2f1(0.5, 0.5, 1.5, z * z).unwrap(), want) < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn negative_argument_closed_forms() {
        // F(1,1;2;z) = ln(1−z)/(−z) also for z < 0
        for &z in &[-0.3, -0.99, -5.0, -50.0] {
            let want = libm::log(1.0 - z) / (-z);
            assert!(rel(gauss_2f1(1.0, 1.0, 2.0, z).unwrap(), want) < 1e-12, "z = {z}");
        }
        // F(1/2,1;3/2;−x²) = atan(x)/x
        for &x in &[0.5, 2.0, 30.0] {
            let want = libm::atan(x) / x;
            assert!(rel(gauss_2f1(0.5, 1.0, 1.5, -x * x).unwrap(), want) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn negative_ratio_form_agrees_with_eval() {
        let f = Hyp2f1::new(0.2, -0.2, 0.8).unwrap();
        for &(x, y) in &[(1.0, 3.0), (5.0, 0.01), (1e-3, 1.0)] {
            let lhs = f.eval_negative_ratio(x, y).unwrap();
            let rhs = f.eval(-x / y).unwrap();
            assert!(rel(lhs, rhs) < 1e-13);
        }
    }

    #[test]
    fn inverse_normal_roundtrip_through_erfc() {
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = inverse_normal_cdf(p);
            let back = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2);
            assert!(libm::fabs(back - p) <= 1e-14 * p.max(1e-300) + 1e-16, "p = {p}");
        }
        for &p in &[1e-300, 1e-20, 1e-9] {
            let x = inverse_normal_cdf(p);
            let back = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2);
            assert!(rel(back, p) < 1e-12, "p = {p}");
            assert!(inverse_normal_cdf(1.0 - p) > 0.0);
        }
        assert_eq!(inverse_normal_cdf(0.5), 0.0);
    }
}

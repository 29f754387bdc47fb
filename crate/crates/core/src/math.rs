//! Scalar math shims and special functions.
//!
//! Transcendentals route through `std` when available and `libm` otherwise,
//! so the rest of the crate never calls float methods that are missing in
//! `core`. Also home to the standard normal CDF/quantile pair and a pairwise
//! (order-stable) summation used wherever Monte Carlo averages must be
//! reproducible independent of accumulation chunking.

macro_rules! shim {
    ($(#[$at:meta])* $name:ident, $libm:path) => {
        $(#[$at])*
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                $libm(x)
            }
        }
    };
}

shim!(
    /// `e^x`.
    exp, libm::exp);
shim!(
    /// Natural logarithm.
    ln, libm::log);
shim!(
    /// Square root.
    sqrt, libm::sqrt);
shim!(
    /// Sine (radians).
    sin, libm::sin);
shim!(
    /// Cosine (radians).
    cos, libm::cos);
shim!(
    /// Inverse sine.
    asin, libm::asin);
shim!(
    /// Absolute value.
    abs, libm::fabs);

/// `x^y` for real exponents.
#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

/// Standard normal cumulative distribution function.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile function (inverse CDF).
///
/// Wichura's PPND16 rational approximation, accurate to ~1e-15 over
/// `p in (0, 1)`. Returns `±inf` at the endpoints and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if abs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(r, &PPND_A) / poly(r, &PPND_B);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = sqrt(-ln(r));
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(r, &PPND_C) / poly(r, &PPND_D)
    } else {
        let r = r - 5.0;
        poly(r, &PPND_E) / poly(r, &PPND_F)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[inline]
fn poly(x: f64, c: &[f64]) -> f64 {
    let mut acc = c[c.len() - 1];
    for &ci in c.iter().rev().skip(1) {
        acc = acc * x + ci;
    }
    acc
}

const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_5e0,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const PPND_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545_6e3,
];
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_5e0,
    4.630_337_846_156_546e0,
    5.769_497_221_460_691e0,
    3.647_848_324_763_204_5e0,
    1.270_458_252_452_368_4e0,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const PPND_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759e0,
    1.676_384_830_183_803_8e0,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103e0,
    5.463_784_911_164_114e0,
    1.784_826_539_917_291_3e0,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const PPND_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Sum of a slice by fixed-shape pairwise reduction.
///
/// The reduction tree depends only on the slice length, so results are
/// identical no matter how the values were produced (serially or merged from
/// parallel workers), and rounding error grows like `O(log n)`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Arithmetic mean via [`pairwise_sum`]; 0 for an empty slice.
pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (denominator `n-1`); 0 when fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = pairwise_mean(xs);
    let mut dev: alloc::vec::Vec<f64> = alloc::vec::Vec::with_capacity(xs.len());
    for &x in xs {
        let d = x - m;
        dev.push(d * d);
    }
    sqrt(pairwise_sum(&dev) / (xs.len() - 1) as f64)
}

/// Empirical quantile with linear interpolation between order statistics
/// (type-7, the same convention as R's default). `xs` need not be sorted.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty slice");
    let mut v: alloc::vec::Vec<f64> = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h as usize;
    let hi = lo + 1;
    if hi >= v.len() {
        return v[v.len() - 1];
    }
    let frac = h - lo as f64;
    v[lo] + frac * (v[hi] - v[lo])
}

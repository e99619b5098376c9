//! Scalar special functions backing the estimator formulas: harmonic numbers,
//! digamma, trigamma, the dilogarithm, the normal CDF, and the distribution of
//! the circular distance between two von Mises measurements.
//!
//! Domain violations panic: these functions sit below every numeric code path
//! and an out-of-domain argument is always a caller bug.

use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// pi^2 / 6, the p -> 0 limit of the estimator variance.
pub const PI_SQUARED_OVER_SIX: f64 = 1.644_934_066_848_226_4;

const TABLE_LEN: usize = 257;

const fn build_harmonic_table() -> [f64; TABLE_LEN] {
    let mut t = [0.0; TABLE_LEN];
    let mut i = 1;
    while i < TABLE_LEN {
        t[i] = t[i - 1] + 1.0 / (i as f64);
        i += 1;
    }
    t
}

const fn build_inv_square_table() -> [f64; TABLE_LEN] {
    let mut t = [0.0; TABLE_LEN];
    let mut i = 1;
    while i < TABLE_LEN {
        t[i] = t[i - 1] + 1.0 / ((i * i) as f64);
        i += 1;
    }
    t
}

// H_n and sum_{k<=n} 1/k^2 for n <= 256; the hot path for estimator lookups.
static HARMONIC: [f64; TABLE_LEN] = build_harmonic_table();
static INV_SQUARES: [f64; TABLE_LEN] = build_inv_square_table();

// Above this, partial sums switch to the digamma/trigamma asymptotics.
const DIRECT_SUM_LIMIT: u64 = 10_000;

/// n-th harmonic number, sum_{k=1..n} 1/k, with H_0 = 0 (empty sum).
pub fn harmonic(n: u64) -> f64 {
    if n < TABLE_LEN as u64 {
        HARMONIC[n as usize]
    } else if n <= DIRECT_SUM_LIMIT {
        let mut h = HARMONIC[TABLE_LEN - 1];
        for k in TABLE_LEN as u64..=n {
            h += 1.0 / k as f64;
        }
        h
    } else {
        // H_n = psi(n + 1) + gamma
        digamma(n as f64 + 1.0) + EULER_MASCHERONI
    }
}

/// Sum_{k=1..n} 1/k^2, with the empty-sum convention for n = 0.
pub fn inv_square_sum(n: u64) -> f64 {
    if n < TABLE_LEN as u64 {
        INV_SQUARES[n as usize]
    } else if n <= DIRECT_SUM_LIMIT {
        let mut s = INV_SQUARES[TABLE_LEN - 1];
        for k in TABLE_LEN as u64..=n {
            s += 1.0 / (k as f64 * k as f64);
        }
        s
    } else {
        // sum_{k<=n} 1/k^2 = psi_1(1) - psi_1(n + 1)
        PI_SQUARED_OVER_SIX - trigamma(n as f64 + 1.0)
    }
}

// Asymptotic expansions start here; below, arguments are shifted up by the
// recurrences psi(x+1) = psi(x) + 1/x and psi_1(x+1) = psi_1(x) - 1/x^2.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// Digamma function psi(x) for x > 0.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "digamma: domain error, x = {x}");
    let mut result = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        result -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // ln z - 1/(2z) - sum B_2n / (2n z^2n), terms through z^-14
    result += z.ln() - 0.5 * inv;
    result -= inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    result
}

/// Trigamma function psi_1(x) for x > 0.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "trigamma: domain error, x = {x}");
    let mut result = 0.0;
    let mut z = x;
    while z < ASYMPTOTIC_THRESHOLD {
        result += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // 1/z + 1/(2z^2) + sum B_2n / z^(2n+1), terms through z^-13
    result += inv
        * (1.0
            + inv * 0.5
            + inv2
                * (1.0 / 6.0
                    - inv2
                        * (1.0 / 30.0
                            - inv2
                                * (1.0 / 42.0
                                    - inv2
                                        * (1.0 / 30.0
                                            - inv2 * (5.0 / 66.0 - inv2 * 691.0 / 2730.0))))));
    result
}

/// Dilogarithm Li_2(z) restricted to z in [0, 1].
pub fn dilog(z: f64) -> f64 {
    assert!((0.0..=1.0).contains(&z), "dilog: domain error, z = {z}");
    if z == 0.0 {
        return 0.0;
    }
    if z == 1.0 {
        return PI_SQUARED_OVER_SIX;
    }
    if z > 0.5 {
        // Li2(z) + Li2(1-z) = pi^2/6 - ln(z) ln(1-z)
        return PI_SQUARED_OVER_SIX - z.ln() * (1.0 - z).ln() - dilog_series(1.0 - z);
    }
    dilog_series(z)
}

fn dilog_series(z: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&z));
    let mut sum = 0.0;
    let mut zk = z;
    let mut k = 1u32;
    loop {
        let term = zk / (k as f64 * k as f64);
        sum += term;
        if term < 1e-18 {
            return sum;
        }
        zk *= z;
        k += 1;
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// Rational approximations for erf/erfc (Cody, SPECFUN CALERF), accurate to a
// few ulps in double precision.
const ERF_A: [f64; 5] = [
    3.209_377_589_138_469_5e3,
    3.774_852_376_853_020_2e2,
    1.138_641_541_510_501_6e2,
    3.161_123_743_870_565_6,
    1.857_777_061_846_031_5e-1,
];
const ERF_B: [f64; 4] = [
    2.844_236_833_439_170_6e3,
    1.282_616_526_077_372_3e3,
    2.440_246_379_344_441_7e2,
    2.360_129_095_234_412_1e1,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_8,
    6.611_919_063_714_162_9e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_7e3,
    2.051_078_377_826_071_6e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_3e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_098_6e2,
    1.621_389_574_566_690_3e3,
    3.290_799_235_733_459_7e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.609_448_999_498_044_4e-1,
    1.257_817_261_112_292_4e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_4,
    1.872_952_849_923_460_4,
    5.279_051_029_514_284_2e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let result = if ax < 0.46875 {
        // erfc = 1 - erf via the erf rational approximation
        let z = ax * ax;
        let num = ((((ERF_A[4] * z + ERF_A[3]) * z + ERF_A[2]) * z + ERF_A[1]) * z) + ERF_A[0];
        let den = ((((z + ERF_B[3]) * z + ERF_B[2]) * z + ERF_B[1]) * z) + ERF_B[0];
        return 1.0 - x * num / den;
    } else if ax < 4.0 {
        let mut num = ERF_C[8] * ax;
        let mut den = ax;
        for i in 0..7 {
            num = (num + ERF_C[i]) * ax;
            den = (den + ERF_D[i]) * ax;
        }
        (-ax * ax).exp() * (num + ERF_C[7]) / (den + ERF_D[7])
    } else if ax >= 26.5 {
        0.0
    } else {
        let z = 1.0 / (ax * ax);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let poly = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (-ax * ax).exp() * (std::f64::consts::FRAC_1_PI.sqrt() - poly) / ax
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Modified Bessel function of the first kind I_0(x), x >= 0.
pub fn bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel_i0: domain error, x = {x}");
    if x < 15.0 {
        // power series: sum (x^2/4)^k / (k!)^2, all terms positive
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                return sum;
            }
            k += 1.0;
        }
    } else {
        // asymptotic: e^x / sqrt(2 pi x) * sum_k prod (2j-1)^2 / (8 x j)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut prev = f64::INFINITY;
        let mut k = 1.0;
        loop {
            let f = (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * x * k);
            term *= f;
            if term >= prev {
                break; // divergent tail of the asymptotic series
            }
            sum += term;
            prev = term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        x.exp() / (2.0 * PI * x).sqrt() * sum
    }
}

/// Ratios I_n(x) / I_0(x) for n = 0..=n_max, by Miller's backward recurrence.
pub fn bessel_i_ratios(x: f64, n_max: usize) -> Vec<f64> {
    assert!(x > 0.0 && x.is_finite(), "bessel_i_ratios: domain error, x = {x}");
    let start = n_max + 20 + (2.0 * x.sqrt()) as usize;
    let mut high = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut out = vec![0.0; n_max + 1];
    for k in (0..start).rev() {
        let low = high + (2.0 * (k as f64 + 1.0) / x) * cur;
        high = cur;
        cur = low;
        if k <= n_max {
            out[k] = cur;
        }
        if cur > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            high *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    let i0 = out[0];
    for v in out.iter_mut() {
        *v /= i0;
    }
    out
}

/// Fourier coefficients of the circular-difference distribution.
///
/// If two angles are measured with independent von Mises noise of
/// concentration `kappa` around centers `offset` apart, their circular
/// difference has density (1/2pi)(1 + 2 sum_n c_n cos(n(y - offset))) with
/// c_n = (I_n(kappa)/I_0(kappa))^2. Coefficients are truncated once they stop
/// contributing at double precision.
pub fn circ_diff_coefficients(kappa: f64) -> Vec<f64> {
    assert!(kappa > 0.0 && kappa.is_finite(), "circ_diff_coefficients: domain error");
    // (I_n/I_0)^2 ~ exp(-n^2/kappa) for large kappa; bound the index generously.
    let n_max = (2.0 * (36.0 * kappa).sqrt()) as usize + 24;
    let ratios = bessel_i_ratios(kappa, n_max);
    let mut coeffs: Vec<f64> = ratios.iter().map(|r| r * r).collect();
    while let Some(&last) = coeffs.last() {
        if last < 1e-16 && coeffs.len() > 2 {
            coeffs.pop();
        } else {
            break;
        }
    }
    coeffs
}

/// Density at `delta` of the absolute circular distance between two von Mises
/// measurements whose true centers are `offset` apart (both in [0, pi]).
pub fn circ_diff_pdf(delta: f64, offset: f64, coeffs: &[f64]) -> f64 {
    let mut s = 1.0;
    for (n, &c) in coeffs.iter().enumerate().skip(1) {
        let nf = n as f64;
        s += 2.0 * c * (nf * delta).cos() * (nf * offset).cos();
    }
    s / PI
}

/// CDF at `delta` of the absolute circular distance for coincident centers.
pub fn circ_diff_cdf(delta: f64, coeffs: &[f64]) -> f64 {
    let mut s = delta;
    for (n, &c) in coeffs.iter().enumerate().skip(1) {
        let nf = n as f64;
        s += 2.0 * c * (nf * delta).sin() / nf;
    }
    (s / PI).clamp(0.0, 1.0)
}

/// Density and CDF of the absolute circular distance between two von Mises
/// random variables with a common center and concentration `kappa`.
pub fn circ_dist_pdf_cdf(delta: f64, kappa: f64) -> (f64, f64) {
    assert!(
        (0.0..=PI).contains(&delta),
        "circ_dist_pdf_cdf: delta outside [0, pi]: {delta}"
    );
    assert!(kappa > 0.0 && kappa.is_finite(), "circ_dist_pdf_cdf: kappa must be positive");
    let coeffs = circ_diff_coefficients(kappa);
    (circ_diff_pdf(delta, 0.0, &coeffs), circ_diff_cdf(delta, &coeffs))
}

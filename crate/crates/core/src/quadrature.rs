//! Adaptive Gauss–Kronrod (7/15) and fixed Gauss–Legendre rules.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;
/// Kinks of composed integrands can make both rules agree by accident on a
/// coarse interval; a few forced bisections make that unlikely.
pub const MIN_DEPTH: u32 = 3;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol` (floored at a
/// few ulps of the running estimate for low-precision scalars).
pub fn integrate<T: Real>(f: impl FnMut(T) -> Result<T>, a: T, b: T, tol: T) -> Result<T> {
    integrate_with_depth(f, a, b, tol, MIN_DEPTH)
}

/// As [`integrate`] with `min_depth` forced bisections. A kink missed on an
/// interval of width `h` costs `O(h^2)`, so short intervals can skip them.
pub fn integrate_with_depth<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    tol: T,
    min_depth: u32,
) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let tol = tol.max(T::epsilon() * c(64.0));
    let mut total = T::zero();
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (k, g) = gk15(&mut f, lo, hi)?;
        let err = (k - g).abs();
        if (depth >= min_depth && err <= t.max(k.abs() * T::epsilon() * c(8.0))) || depth >= MAX_DEPTH {
            total = total + k;
        } else {
            let mid = (lo + hi) / c(2.0);
            let half = t / c(2.0);
            stack.push((mid, hi, half, depth + 1));
            stack.push((lo, mid, half, depth + 1));
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("quadrature".into()));
    }
    Ok(total)
}

fn gk15<T: Real>(f: &mut impl FnMut(T) -> Result<T>, a: T, b: T) -> Result<(T, T)> {
    let center = (a + b) / c(2.0);
    let half = (b - a) / c(2.0);
    let fc = f(center)?;
    let mut kron = fc * c(WGK[7]);
    let mut gauss = fc * c(WG[3]);
    for i in 0..7 {
        let dx = half * c(XGK[i]);
        let s = f(center - dx)? + f(center + dx)?;
        kron = kron + s * c(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + s * c(WG[i / 2]);
        }
    }
    Ok((kron * half, gauss * half))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=16).map(legendre_rule).collect());
    &rules[n.clamp(1, 16)]
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (vec![], vec![]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Exact integral over `[a, b]` of a polynomial of degree `<= 2n - 1`.
pub fn gauss_fixed<T: Real>(n: usize, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
    let (xs, ws) = gauss_legendre(n);
    let center = (a + b) / c(2.0);
    let half = (b - a) / c(2.0);
    xs.iter().zip(ws).fold(T::zero(), |s, (x, w)| s + f(center + half * c(*x)) * c(*w)) * half
}

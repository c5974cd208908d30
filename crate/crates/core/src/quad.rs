//! Globally adaptive Gauss-Kronrod (7/15) quadrature over scalar, complex and
//! matrix-valued integrands.

use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

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

/// Values the integrator can accumulate.
pub trait QuadValue: Clone + Add<Output = Self> + Sub<Output = Self> {
    fn scaled(self, s: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn scaled(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn scaled(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for CMatrix {
    fn scaled(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
    fn magnitude(&self) -> f64 {
        crate::linalg::max_abs(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-13,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<T> {
    lo: f64,
    hi: f64,
    value: T,
    error: f64,
}

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, lo: f64, hi: f64) -> (T, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc.clone().scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod = kronrod + sum.clone().scaled(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + sum.scaled(WG[j / 2]);
        }
    }
    let err = (kronrod.clone() - gauss).magnitude() * half.abs();
    (kronrod.scaled(half), err)
}

/// Integrates `f` over `[lo, hi]`, splitting first at `breaks` (points
/// outside the open interval are ignored).
pub fn integrate<T, F>(f: F, lo: f64, hi: f64, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("quadrature bounds must be finite, got [{lo}, {hi}]")));
    }
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(|a, b| a.total_cmp(b));
    inner.dedup();
    pts.extend(inner);
    pts.push(hi);

    let mut segs: Vec<Segment<T>> = pts
        .windows(2)
        .map(|w| {
            let (value, error) = gk15(&f, w[0], w[1]);
            Segment { lo: w[0], hi: w[1], value, error }
        })
        .collect();

    loop {
        let total = segs
            .iter()
            .skip(1)
            .fold(segs[0].value.clone(), |acc, s| acc + s.value.clone());
        let err: f64 = segs.iter().map(|s| s.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= target {
            return Ok(QuadResult { value: total, error: err, intervals: segs.len() });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total.magnitude(),
                error: err,
                intervals: segs.len(),
            });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            // interval collapsed to machine resolution
            return Err(Error::Quadrature {
                lo,
                hi,
                estimate: total.magnitude(),
                error: err,
                intervals: segs.len() + 1,
            });
        }
        let (v1, e1) = gk15(&f, s.lo, mid);
        let (v2, e2) = gk15(&f, mid, s.hi);
        segs.push(Segment { lo: s.lo, hi: mid, value: v1, error: e1 });
        segs.push(Segment { lo: mid, hi: s.hi, value: v2, error: e2 });
    }
}

/// Scalar convenience wrapper returning only the value.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: &QuadOptions) -> Result<f64> {
    Ok(integrate(f, lo, hi, &[], opts)?.value)
}

//! Test oracles shared with the acceptance target.
#![allow(dead_code)]

use std::f64::consts::PI;

use ldl_core::Band::{self, One, Zero};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn m1_rho(band: Band, e: f64) -> f64 {
    let (centre, lo, hi) = match band {
        Zero => (2.0, 1.0, 3.0),
        One => (5.0, 4.0, 6.0),
    };
    if e < lo || e > hi {
        0.0
    } else {
        0.5 * (-((e - centre) / 0.3).powi(2)).exp()
    }
}

pub fn m1_support(band: Band) -> (f64, f64) {
    match band {
        Zero => (1.0, 3.0),
        One => (4.0, 6.0),
    }
}

pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

pub fn panel_nodes(lo: f64, hi: f64, width: f64, gl: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let panels = ((hi - lo) / width).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let mid = lo + (p as f64 + 0.5) * h;
            gl.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect()
}

/// Derivatives `rho^(k)(x)` of the M1 Gaussian for k < `count`.
pub fn gaussian_derivatives(centre: f64, x: f64, count: usize) -> Vec<f64> {
    let (amp, width) = (0.5, 0.3);
    let y = (x - centre) / width;
    let mut hermite = vec![1.0, 2.0 * y];
    for k in 1..count {
        let next = 2.0 * y * hermite[k] - 2.0 * k as f64 * hermite[k - 1];
        hermite.push(next);
    }
    (0..count)
        .map(|k| amp * (-1.0f64 / width).powi(k as i32) * hermite[k] * (-y * y).exp())
        .collect()
}

/// Damped time-domain oracle
/// `gamma_eta(E) = int_0^inf ds rho^(s) e^{isE} e^{-eta s}`,
/// `rho^(s) = int rho(E') e^{-isE'} dE'`, extrapolated to eta -> 0.
/// `rho^` is integrated numerically for s <= S_SPLIT; beyond it the
/// integration-by-parts series at the support edges is exact to rounding.
pub struct TimeDomainOracle {
    near: Vec<(f64, f64, Complex64)>,
    far: Vec<(f64, f64, [(f64, Complex64); 2])>,
}

pub const S_SPLIT: f64 = 200.0;
pub const ETAS: [f64; 4] = [0.008, 0.004, 0.002, 0.001];

impl TimeDomainOracle {
    pub fn new(band: Band) -> Self {
        let gl = gauss_legendre(16);
        let (lo, hi) = m1_support(band);
        let centre = 0.5 * (lo + hi);
        let energy_nodes = panel_nodes(lo, hi, 0.02, &gl);
        let near = panel_nodes(0.0, S_SPLIT, 0.5, &gl)
            .into_iter()
            .map(|(s, w)| {
                let f: Complex64 = energy_nodes
                    .iter()
                    .map(|&(x, wx)| Complex64::from_polar(wx * m1_rho(band, x), -s * x))
                    .sum();
                (s, w, f)
            })
            .collect();
        let terms = 14;
        let d_lo = gaussian_derivatives(centre, lo, terms);
        let d_hi = gaussian_derivatives(centre, hi, terms);
        let t_max = 30.0 / ETAS[ETAS.len() - 1];
        let far = panel_nodes(S_SPLIT, t_max, 1.0, &gl)
            .into_iter()
            .map(|(s, w)| {
                // rho^(s) = -sum_k [rho^(k) e^{-isx}]_lo^hi / (is)^(k+1)
                let coefficient = |d: &[f64]| -> Complex64 {
                    (0..terms).map(|k| d[k] / c(0.0, s).powu(k as u32 + 1)).sum::<Complex64>() * -1.0
                };
                (s, w, [(hi, coefficient(&d_hi)), (lo, -coefficient(&d_lo))])
            })
            .collect();
        Self { near, far }
    }

    pub fn damped(&self, e: f64, eta: f64) -> Complex64 {
        let near: Complex64 = self
            .near
            .iter()
            .map(|&(s, w, f)| f * Complex64::from_polar(w * (-eta * s).exp(), s * e))
            .sum();
        let far: Complex64 = self
            .far
            .iter()
            .map(|&(s, w, edges)| {
                let damp = w * (-eta * s).exp();
                edges.iter().map(|&(x, a)| a * Complex64::from_polar(damp, s * (e - x))).sum::<Complex64>()
            })
            .sum();
        near + far
    }

    pub fn limit(&self, e: f64) -> Complex64 {
        let mut table: Vec<Complex64> = ETAS.iter().map(|&eta| self.damped(e, eta)).collect();
        for k in 1..ETAS.len() {
            let p = 2f64.powi(k as i32);
            table = table.windows(2).map(|w| (w[1] * p - w[0]) / (p - 1.0)).collect();
        }
        table[0]
    }

    pub fn continuity_defect(&self, band: Band) -> f64 {
        // numeric and asymptotic rho^ must agree where they meet
        let (lo, hi) = m1_support(band);
        let gl = gauss_legendre(16);
        let s = S_SPLIT;
        let numeric: Complex64 = panel_nodes(lo, hi, 0.02, &gl)
            .iter()
            .map(|&(x, w)| Complex64::from_polar(w * m1_rho(band, x), -s * x))
            .sum();
        let d_lo = gaussian_derivatives(0.5 * (lo + hi), lo, 14);
        let d_hi = gaussian_derivatives(0.5 * (lo + hi), hi, 14);
        let series: Complex64 = -(0..14)
            .map(|k| {
                (Complex64::from_polar(d_hi[k], -s * hi) - Complex64::from_polar(d_lo[k], -s * lo))
                    / c(0.0, s).powu(k as u32 + 1)
            })
            .sum::<Complex64>();
        (numeric - series).norm()
    }
}

pub fn e_grid() -> Vec<f64> {
    let mut out: Vec<f64> = (0..10).map(|k| 1.1 + 1.8 * k as f64 / 9.0).collect();
    out.extend((0..10).map(|k| 4.1 + 1.8 * k as f64 / 9.0));
    out
}

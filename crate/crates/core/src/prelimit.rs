//! Convergence of the rescaled kernel `exp(i (t' - t)(E1 - E2) / lambda^2) / lambda^2`
//! to its distributional limits, smeared against test functions.
//!
//! With `u = (t' - t) / lambda^2` the smeared kernel is
//! `I_lambda = int du Phi(lambda^2 u) F(u)` where
//! `Phi(tau) = int phi(t) psi(t + tau) dt` (closed form for Gaussians) and
//! `F(u) = (int f(E) e^{iuE} dE)(int g(E) e^{-iuE} dE)`. The fast phase never
//! reaches the quadrature. Over the whole time plane the limit is
//! `2 pi Phi(0) int f g`; restricted to `t' < t` it is
//! `Phi(0) int int f(E1) g(E2) / (i (E1 - E2 - i0))`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::band::Band;
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::spectral::{principal_value_fn, weight_w, EnergyDensity, SpectralModel};

/// `amplitude * exp(-((t - center) / width)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl TimeGaussian {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(amplitude.is_finite() && center.is_finite()) {
            return Err(Error::InvalidModel("time test function parameters must be finite".into()));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidModel(format!("time test function width must be > 0, got {width}")));
        }
        Ok(Self { amplitude, center, width })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.amplitude * (-x * x).exp()
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self { center: self.center + dt, ..*self }
    }
}

/// `int phi(t) psi(t + tau) dt`.
fn correlation(phi: &TimeGaussian, psi: &TimeGaussian, tau: f64) -> f64 {
    let w2 = phi.width * phi.width + psi.width * psi.width;
    let d = psi.center - phi.center;
    let c = phi.amplitude * psi.amplitude * PI.sqrt() * phi.width * psi.width / w2.sqrt();
    c * (-(tau - d) * (tau - d) / w2).exp()
}

/// An energy test function with compact support.
#[derive(Clone)]
pub struct EnergyProfile {
    support: Option<(f64, f64)>,
    kinks: Vec<f64>,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for EnergyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyProfile").field("support", &self.support).finish_non_exhaustive()
    }
}

impl EnergyProfile {
    pub fn from_density(d: &EnergyDensity) -> Self {
        let d2 = d.clone();
        Self { support: d.support(), kinks: d.kinks(), f: Arc::new(move |e| d2.eval(e)) }
    }

    /// `f(E)` on `[lo, hi]`, zero outside.
    pub fn from_fn(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidModel(format!("profile support [{lo}, {hi}] is not a finite interval")));
        }
        Ok(Self { support: Some((lo, hi)), kinks: vec![], f: Arc::new(f) })
    }

    pub fn zero() -> Self {
        Self { support: None, kinks: vec![], f: Arc::new(|_| 0.0) }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn eval(&self, e: f64) -> f64 {
        match self.support {
            Some((lo, hi)) if e >= lo && e <= hi => (self.f)(e),
            _ => 0.0,
        }
    }

    /// Pointwise product, supported on the intersection.
    pub fn product(&self, other: &EnergyProfile) -> EnergyProfile {
        let support = match (self.support, other.support) {
            (Some((a, b)), Some((c, d))) if a.max(c) < b.min(d) => Some((a.max(c), b.min(d))),
            _ => None,
        };
        let (x, y) = (self.clone(), other.clone());
        let mut kinks = self.kinks.clone();
        kinks.extend(&other.kinks);
        EnergyProfile { support, kinks, f: Arc::new(move |e| x.eval(e) * y.eval(e)) }
    }

    fn integral(&self, opts: &QuadOptions) -> Result<f64> {
        let Some((lo, hi)) = self.support else { return Ok(0.0) };
        Ok(quad::integrate(|e| self.eval(e), lo, hi, &self.kinks, opts)?.value)
    }
}

/// Time smearings `phi(t)`, `psi(t')` and energy smearings `f(E1)`, `g(E2)`.
#[derive(Debug, Clone)]
pub struct TestFunctionPair {
    pub phi: TimeGaussian,
    pub psi: TimeGaussian,
    pub f: EnergyProfile,
    pub g: EnergyProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// Whole `(t, t')` plane: limit `2 pi delta(t' - t) delta(E1 - E2)`.
    Full,
    /// `t' < t`: limit `delta_+(t' - t) / (i (E1 - E2 - i0))`.
    Simplex,
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelMode::Full => "full",
            KernelMode::Simplex => "simplex",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub lambda: f64,
    pub value: Complex64,
    pub limit: Complex64,
    /// Relative to `|limit|`, or absolute when the limit vanishes.
    pub error: f64,
}

impl KernelPoint {
    pub fn abs_error(&self) -> f64 {
        (self.value - self.limit).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSweep {
    pub mode: KernelMode,
    pub points: Vec<KernelPoint>,
    /// Steps where the error grew; one is tolerated.
    pub non_monotone: Vec<usize>,
}

impl KernelSweep {
    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.error)
    }

    pub const CSV_HEADER: [&'static str; 6] = ["lambda", "value_re", "value_im", "limit_re", "limit_im", "abs_error"];

    pub fn csv_rows(&self) -> Vec<[f64; 6]> {
        self.points
            .iter()
            .map(|p| [p.lambda, p.value.re, p.value.im, p.limit.re, p.limit.im, p.abs_error()])
            .collect()
    }
}

/// Errors at or below this level count as converged for the monotonicity rule.
pub const ERROR_FLOOR: f64 = 1e-9;

/// Tail of `Phi` beyond this many widths is dropped.
const TAIL_WIDTHS: f64 = 7.0;

/// Simpson points per period of the fastest phase of `F(u)`.
const POINTS_PER_PERIOD: f64 = 48.0;

/// Accepted Richardson error of the Simpson sum relative to `int |integrand|`.
const SIMPSON_TOL: f64 = 1e-6;

fn opts() -> QuadOptions {
    QuadOptions { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 4000 }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
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

const GL_ORDER: usize = 16;

/// `(E_j, w_j f(E_j))` resolving `e^{iuE}` up to `|u| = u_max`.
fn fourier_nodes(p: &EnergyProfile, u_max: f64) -> Vec<(f64, f64)> {
    let Some((lo, hi)) = p.support else { return vec![] };
    let mut edges = vec![lo, hi];
    edges.extend(p.kinks.iter().copied().filter(|k| *k > lo && *k < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    // at most two periods of the phase per panel
    let max_len = (4.0 * PI / u_max.max(1e-12)).min(0.25);
    let gl = gauss_legendre(GL_ORDER);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let panels = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
        let len = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let a = w[0] + k as f64 * len;
            for &(x, wt) in &gl {
                let e = a + 0.5 * len * (x + 1.0);
                out.push((e, 0.5 * len * wt * p.eval(e)));
            }
        }
    }
    out
}

/// `int f(E) e^{i s u_k E} dE` on the grid `u_k = lo + k h`.
fn fourier_on_grid(nodes: &[(f64, f64)], sign: f64, lo: f64, h: f64, n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // restart the phase recurrence every block to bound round-off growth
    const BLOCK: usize = 256;
    for &(e, w) in nodes {
        let step = Complex64::from_polar(1.0, sign * h * e);
        for start in (0..n).step_by(BLOCK) {
            let mut z = Complex64::from_polar(w, sign * (lo + start as f64 * h) * e);
            for v in &mut out[start..(start + BLOCK).min(n)] {
                *v += z;
                z *= step;
            }
        }
    }
    out
}

/// Smeared pre-limit kernel at one `lambda`.
pub fn smeared_kernel(pair: &TestFunctionPair, lambda: f64, mode: KernelMode) -> Result<Complex64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    let (Some((flo, fhi)), Some((glo, ghi))) = (pair.f.support(), pair.g.support()) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let l2 = lambda * lambda;
    let w = (pair.phi.width.powi(2) + pair.psi.width.powi(2)).sqrt();
    let d = pair.psi.center - pair.phi.center;
    // Phi(lambda^2 u) is centred at u = d / lambda^2
    let mut lo = (d - TAIL_WIDTHS * w) / l2;
    let mut hi = (d + TAIL_WIDTHS * w) / l2;
    if mode == KernelMode::Simplex {
        hi = hi.min(0.0);
        lo = lo.min(0.0);
    }
    if lo >= hi {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // fastest phase of F(u) is max |E1 - E2|, of Phi(lambda^2 u) about 1 / (lambda^2 w)
    let omega = (fhi - glo).abs().max((flo - ghi).abs()).max(1.0 / (l2 * w));
    let h_target = 2.0 * PI / (POINTS_PER_PERIOD * omega);
    // h and 2h grids both need an even panel count
    let n = (((hi - lo) / h_target).ceil() as usize).div_ceil(4).max(1) * 4;
    let h = (hi - lo) / n as f64;
    let u_max = lo.abs().max(hi.abs());
    let ff = fourier_on_grid(&fourier_nodes(&pair.f, u_max), 1.0, lo, h, n + 1);
    let gg = fourier_on_grid(&fourier_nodes(&pair.g, u_max), -1.0, lo, h, n + 1);
    let y: Vec<Complex64> = (0..=n)
        .map(|k| ff[k] * gg[k] * correlation(&pair.phi, &pair.psi, l2 * (lo + k as f64 * h)))
        .collect();
    let simpson = |stride: usize| {
        let m = n / stride;
        let hs = h * stride as f64;
        let mut acc = y[0] + y[n];
        for k in 1..m {
            acc += y[k * stride] * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (hs / 3.0)
    };
    let (fine, coarse) = (simpson(1), simpson(2));
    let err = (fine - coarse).norm() / 15.0;
    let scale = y.iter().map(|v| v.norm()).sum::<f64>() * h;
    if err > SIMPSON_TOL * scale.max(1e-300) {
        return Err(Error::Quadrature { lo, hi, estimate: fine.norm(), error: err, intervals: n });
    }
    Ok(fine + (fine - coarse) / 15.0)
}

/// Distributional limit of `smeared_kernel` as `lambda -> 0`.
pub fn kernel_limit(pair: &TestFunctionPair, mode: KernelMode) -> Result<Complex64> {
    let o = opts();
    let phi0 = correlation(&pair.phi, &pair.psi, 0.0);
    let fg = pair.f.product(&pair.g).integral(&o)?;
    match mode {
        KernelMode::Full => Ok(Complex64::new(2.0 * PI * phi0 * fg, 0.0)),
        KernelMode::Simplex => {
            // 1 / (i (x - i0)) = pi delta(x) - i PV 1/x, x = E1 - E2
            let (Some((flo, fhi)), Some(gs)) = (pair.f.support(), pair.g.support()) else {
                return Ok(Complex64::new(0.0, 0.0));
            };
            let g = pair.g.clone();
            let failure = std::cell::RefCell::new(None::<Error>);
            let mut breaks = pair.f.kinks.clone();
            breaks.extend([gs.0, gs.1]);
            let pv = quad::integrate(
                |e1| {
                    let fe = pair.f.eval(e1);
                    if fe == 0.0 {
                        return 0.0;
                    }
                    match principal_value_fn(|x| g.eval(x), gs, &g.kinks, e1, &o) {
                        Ok(v) => fe * v,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                },
                flo,
                fhi,
                &breaks,
                &o,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(Complex64::new(PI * fg, pv?.value) * phi0)
        }
    }
}

fn relative(value: Complex64, limit: Complex64) -> f64 {
    let diff = (value - limit).norm();
    if limit.norm() > 0.0 {
        diff / limit.norm()
    } else {
        diff
    }
}

/// `I_lambda` against its limit over decreasing `lambdas`.
pub fn kernel_limit_check(pair: &TestFunctionPair, lambdas: &[f64], mode: KernelMode) -> Result<KernelSweep> {
    if lambdas.is_empty() {
        return Err(Error::Domain("empty lambda list".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("lambda values must be positive and strictly decreasing".into()));
    }
    let limit = kernel_limit(pair, mode)?;
    let values = crate::exec::map(lambdas, |&l| smeared_kernel(pair, l, mode));
    let mut points = Vec::new();
    for (&lambda, v) in lambdas.iter().zip(values) {
        let value = v.map_err(|e| {
            let reached = points.last().map_or("none".to_string(), |p: &KernelPoint| p.lambda.to_string());
            Error::Convergence(format!("pre-limit quadrature failed at lambda = {lambda} (smallest lambda reached: {reached}): {e}"))
        })?;
        points.push(KernelPoint { lambda, value, limit, error: relative(value, limit) });
    }
    let non_monotone: Vec<usize> = (1..points.len())
        .filter(|&i| points[i].error > points[i - 1].error && points[i].error > ERROR_FLOOR)
        .collect();
    if non_monotone.len() > 1 {
        return Err(Error::Convergence(format!(
            "pre-limit errors grew at {} steps (lambda indices {non_monotone:?})",
            non_monotone.len()
        )));
    }
    Ok(KernelSweep { mode, points, non_monotone })
}

/// Labels and smearings of `<B_{e1 e2}(f1, f2; phi) B+_{e3 e4}(f3, f4; psi)>`.
#[derive(Debug, Clone)]
pub struct TwoPointLabels {
    pub eps: [Band; 4],
    pub smear: [EnergyProfile; 4],
    pub phi: TimeGaussian,
    pub psi: TimeGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoint {
    pub value: Complex64,
    pub limit: Complex64,
    pub error: f64,
}

/// The scalar `O(1)` part of the pre-limit `[B, B+]`: kernel times Kronecker
/// factors times `rho_{e1}(E1) w_{e2}(E2)`, smeared; the limit is the
/// causal (simplex) or symmetric (full) commutation relation.
pub fn two_point_pair(model: &SpectralModel, labels: &TwoPointLabels) -> Option<TestFunctionPair> {
    let [e1, e2, e3, e4] = labels.eps;
    if e1 != e3 || e2 != e4 {
        return None;
    }
    let m = model.clone();
    let rho = EnergyProfile::from_density(model.density(e1));
    let w = match model.density(e2).support() {
        Some((lo, hi)) => EnergyProfile::from_fn(lo, hi, move |e| weight_w(&m, e2, e)).ok()?,
        None => EnergyProfile::zero(),
    };
    let f = labels.smear[0].product(&labels.smear[2]).product(&rho);
    let g = labels.smear[1].product(&labels.smear[3]).product(&w);
    Some(TestFunctionPair { phi: labels.phi, psi: labels.psi, f, g })
}

pub fn prelimit_two_point(model: &SpectralModel, lambda: f64, labels: &TwoPointLabels, mode: KernelMode) -> Result<TwoPoint> {
    let zero = Complex64::new(0.0, 0.0);
    let Some(pair) = two_point_pair(model, labels) else {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
        }
        return Ok(TwoPoint { value: zero, limit: zero, error: 0.0 });
    };
    let value = smeared_kernel(&pair, lambda, mode)?;
    let limit = kernel_limit(&pair, mode)?;
    Ok(TwoPoint { value, limit, error: relative(value, limit) })
}

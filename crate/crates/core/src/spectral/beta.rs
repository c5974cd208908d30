//! The `K (x)_beta K` scalar product restricted to the family `{g_eps, P_E g_eps}`.
//!
//! `(f0 (x) f1 | f0' (x) f1') = 2 pi int dE <f0, P_E f0'> <f1', P_E L^2 f1>`,
//! with `<g_a, P_E g_c> = delta_ac rho_a(E)` and
//! `<g_d, P_E L^2 g_b> = delta_db w_b(E)`. Localized arguments `P_E0 g`
//! collapse the energy integral and may leave energy deltas behind, which
//! are returned symbolically.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::band::Band;
use crate::error::Result;
use crate::quad;

use super::coefficients::weight_w;
use super::model::SpectralModel;

/// One slot of the scalar product: `g_eps` or `P_E g_eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaArg {
    Plain(Band),
    At(Band, f64),
}

impl BetaArg {
    fn band(self) -> Band {
        match self {
            BetaArg::Plain(b) | BetaArg::At(b, _) => b,
        }
    }

    fn energy(self) -> Option<f64> {
        match self {
            BetaArg::Plain(_) => None,
            BetaArg::At(_, e) => Some(e),
        }
    }
}

/// `value * prod delta(x - y)` over the listed energy pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaValue {
    pub value: Complex64,
    pub deltas: Vec<(f64, f64)>,
}

impl BetaValue {
    fn zero() -> Self {
        Self { value: Complex64::new(0.0, 0.0), deltas: Vec::new() }
    }

    /// True when no distributional factor remains.
    pub fn is_finite(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// One energy-localised factor: `weight(E') * delta(E' - at)` or a plain density.
struct Factor {
    at: Option<f64>,
    delta: Option<(f64, f64)>,
}

fn factor(x: BetaArg, y: BetaArg) -> Factor {
    match (x.energy(), y.energy()) {
        (None, None) => Factor { at: None, delta: None },
        (Some(e), None) | (None, Some(e)) => Factor { at: Some(e), delta: None },
        (Some(e1), Some(e2)) => Factor { at: Some(e1), delta: Some((e1, e2)) },
    }
}

/// `(a (x)_beta b | c (x)_beta d)`.
pub fn beta_inner(model: &SpectralModel, a: BetaArg, b: BetaArg, c: BetaArg, d: BetaArg) -> Result<BetaValue> {
    if a.band() != c.band() || b.band() != d.band() {
        return Ok(BetaValue::zero());
    }
    let (left_band, right_band) = (a.band(), b.band());
    let left = factor(a, c);
    let right = factor(d, b);
    let mut deltas: Vec<(f64, f64)> = left.delta.into_iter().chain(right.delta).collect();
    let rho = |e: f64| model.rho(left_band, e);
    let w = |e: f64| weight_w(model, right_band, e);

    let integral = match (left.at, right.at) {
        (None, None) => {
            let (Some((lo0, hi0)), Some((lo1, hi1))) =
                (model.density(left_band).support(), model.density(right_band).support())
            else {
                return Ok(BetaValue::zero());
            };
            let (lo, hi) = (lo0.max(lo1), hi0.min(hi1));
            if lo >= hi {
                0.0
            } else {
                let mut breaks = model.density(left_band).kinks();
                breaks.extend(model.density(right_band).kinks());
                quad::integrate(|e| rho(e) * w(e), lo, hi, &breaks, model.quad())?.value
            }
        }
        (Some(e), None) | (None, Some(e)) => rho(e) * w(e),
        (Some(e0), Some(e1)) => {
            deltas.push((e0, e1));
            rho(e0) * w(e0)
        }
    };
    Ok(BetaValue { value: Complex64::new(2.0 * PI * integral, 0.0), deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use BetaArg::*;

    #[test]
    fn disjoint_bands_vanish() {
        let m = SpectralModel::m1();
        let v = beta_inner(&m, Plain(Band::Zero), Plain(Band::Zero), Plain(Band::One), Plain(Band::One)).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
        let v = beta_inner(&m, Plain(Band::Zero), Plain(Band::One), Plain(Band::Zero), Plain(Band::One)).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn localized_argument_collapses_integral() {
        let m = SpectralModel::m1();
        let v = beta_inner(&m, Plain(Band::Zero), Plain(Band::Zero), Plain(Band::Zero), At(Band::Zero, 2.0)).unwrap();
        assert!(v.is_finite());
        let expect = 2.0 * PI * 0.5 * 0.5 * (-3.0f64).exp();
        assert!((v.value.re - expect).abs() < 1e-15);
    }

    #[test]
    fn two_localized_slots_leave_a_delta() {
        let m = SpectralModel::m1();
        let v = beta_inner(&m, At(Band::Zero, 2.0), Plain(Band::Zero), At(Band::Zero, 2.1), Plain(Band::Zero)).unwrap();
        assert_eq!(v.deltas, vec![(2.0, 2.1)]);
    }
}

//! Scalar and matrix coefficients of the limit equation for a concrete model.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::band::Band;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quad::{self, QuadOptions};

use super::model::{EnergyDensity, SpectralModel, SystemModel};

/// `PV int rho(E') / (E' - e) dE'`.
pub fn principal_value(density: &EnergyDensity, e: f64, opts: &QuadOptions) -> Result<f64> {
    let Some((lo, hi)) = density.support() else {
        return Ok(0.0);
    };
    principal_value_fn(|x| density.eval(x), (lo, hi), &density.kinks(), e, opts)
}

/// `PV int_lo^hi f(E') / (E' - e) dE'` for `f` continuous on `[lo, hi]`.
///
/// Inside the interval the pole is removed by subtracting `f(e)`, whose
/// principal value over `[lo, hi]` is `f(e) ln((hi - e) / (e - lo))`.
pub fn principal_value_fn(
    f: impl Fn(f64) -> f64,
    support: (f64, f64),
    kinks: &[f64],
    e: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let (lo, hi) = support;
    let mut breaks = kinks.to_vec();
    if e > lo && e < hi {
        let r0 = f(e);
        breaks.push(e);
        let smooth = quad::integrate(
            |x| {
                let dx = x - e;
                if dx == 0.0 {
                    0.0
                } else {
                    (f(x) - r0) / dx
                }
            },
            lo,
            hi,
            &breaks,
            opts,
        )?;
        Ok(smooth.value + r0 * ((hi - e) / (e - lo)).ln())
    } else if (e == lo && f(lo) > 0.0) || (e == hi && f(hi) > 0.0) {
        Err(Error::Domain(format!(
            "principal value diverges at support edge E = {e}: density does not vanish there"
        )))
    } else {
        Ok(quad::integrate(|x| f(x) / (x - e), lo, hi, &breaks, opts)?.value)
    }
}

/// `gamma_eps(E) = pi rho_eps(E) - i PV int rho_eps(E') / (E' - E) dE'`.
pub fn gamma_eps(model: &SpectralModel, band: Band, e: f64) -> Result<Complex64> {
    let density = model.density(band);
    if density.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pv = principal_value(density, e, model.quad())?;
    Ok(Complex64::new(PI * density.eval(e), -pv))
}

/// Thermal weight `w_eps(E) = <g_eps, P_E L^2 g_eps>`.
pub fn weight_w(model: &SpectralModel, band: Band, e: f64) -> f64 {
    let rho = model.rho(band, e);
    if rho == 0.0 {
        return 0.0;
    }
    (-model.beta() * model.thermal_energy(band, e)).exp() * rho
}

/// Number-process intensity `n_eps(E) = 1 / w_eps(E)`, defined on the support.
pub fn n_eps(model: &SpectralModel, band: Band, e: f64) -> Result<f64> {
    let w = weight_w(model, band, e);
    if w > 0.0 {
        Ok(1.0 / w)
    } else {
        Err(Error::Domain(format!("n_{band}(E) undefined at E = {e}: outside supp rho_{band}")))
    }
}

/// `(1 + g_eps g_{1-eps} D_eps D_{1-eps})^{-1}` for given gamma values.
pub fn t_eps_from_gammas(sys: &SystemModel, band: Band, gamma_eps: Complex64, gamma_other: Complex64) -> Result<CMatrix> {
    let n = sys.dim();
    let a = linalg::identity(n) + sys.dd(band) * (gamma_eps * gamma_other);
    linalg::inverse_checked(&a, &format!("1 + gamma_{band} gamma_{} D_{band} D_{}", band.flip(), band.flip()))
}

/// `T_eps(E)`.
pub fn t_eps_matrix(model: &SpectralModel, sys: &SystemModel, band: Band, e: f64) -> Result<CMatrix> {
    let g = gamma_eps(model, band, e)?;
    let h = gamma_eps(model, band.flip(), e)?;
    t_eps_from_gammas(sys, band, g, h)
}

/// Drift integrand of band `band` at `E`:
/// `gamma_{1-eps}(E) D_eps D_{1-eps} T_eps(E) w_eps(E)`.
pub fn drift_density(model: &SpectralModel, sys: &SystemModel, band: Band, e: f64) -> Result<CMatrix> {
    let w = weight_w(model, band, e);
    if w == 0.0 {
        return Ok(CMatrix::zeros(sys.dim(), sys.dim()));
    }
    let g = gamma_eps(model, band, e)?;
    let h = gamma_eps(model, band.flip(), e)?;
    let t = t_eps_from_gammas(sys, band, g, h)?;
    Ok(sys.dd(band) * t * (h * w))
}

/// Damping operator `Gamma = sum_eps int dE drift_density(eps, E)`.
pub fn gamma_matrix(model: &SpectralModel, sys: &SystemModel) -> Result<CMatrix> {
    let n = sys.dim();
    let bands: Vec<(Band, f64, f64)> = model.supports();
    let parts = crate::exec::try_map(&bands, |&(band, lo, hi)| {
        band_integral(model, sys, band, lo, hi)
    })?;
    Ok(parts.into_iter().fold(CMatrix::zeros(n, n), |acc, p| acc + p))
}

fn band_integral(model: &SpectralModel, sys: &SystemModel, band: Band, lo: f64, hi: f64) -> Result<CMatrix> {
    // errors inside the integrand are captured and rethrown after quadrature
    let failure = std::sync::Mutex::new(None::<Error>);
    let n = sys.dim();
    let r = quad::integrate(
        |e| match drift_density(model, sys, band, e) {
            Ok(m) => m,
            Err(err) => {
                failure.lock().unwrap().get_or_insert(err);
                CMatrix::zeros(n, n)
            }
        },
        lo,
        hi,
        &model.density(band).kinks(),
        model.quad(),
    );
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    Ok(r?.value)
}

/// Minimum eigenvalue of the Hermitian part `(G + G^dagger) / 2`.
pub fn check_damping(gamma: &CMatrix) -> Result<f64> {
    if gamma.nrows() != gamma.ncols() {
        return Err(Error::Domain(format!("damping check needs a square matrix, got {:?}", gamma.shape())));
    }
    Ok(linalg::hermitian_eigenvalues(&linalg::hermitian_part(gamma))
        .first()
        .copied()
        .unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayPoint {
    pub t: f64,
    pub propagator: CMatrix,
    pub norm: f64,
}

/// Vacuum expectation `<U(t)> = exp(-Gamma t)` on a time list.
pub fn decay_curve(gamma: &CMatrix, times: &[f64]) -> Result<Vec<DecayPoint>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::Domain(format!("decay times must be finite and >= 0, got {t}")));
    }
    Ok(crate::exec::map(times, |&t| {
        let propagator = linalg::expm(&(gamma * Complex64::new(-t, 0.0)));
        let norm = linalg::spectral_norm(&propagator);
        DecayPoint { t, propagator, norm }
    }))
}

/// `max |exp(-G (t1 + t2)) - exp(-G t1) exp(-G t2)|`.
pub fn semigroup_residual(gamma: &CMatrix, t1: f64, t2: f64) -> f64 {
    let e = |t: f64| linalg::expm(&(gamma * Complex64::new(-t, 0.0)));
    linalg::max_abs(&(e(t1 + t2) - e(t1) * e(t2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::model::ThermalConvention;

    #[test]
    fn gamma_m1_band0_centre() {
        let m = SpectralModel::m1();
        let g = gamma_eps(&m, Band::Zero, 2.0).unwrap();
        assert!((g.re - PI * 0.5).abs() < 1e-15);
        assert!(g.im.abs() < 1e-10);
    }

    #[test]
    fn gamma_off_support_is_imaginary_negative() {
        let m = SpectralModel::m1();
        let g = gamma_eps(&m, Band::One, 2.0).unwrap();
        assert_eq!(g.re, 0.0);
        assert!(g.im < 0.0);
    }

    #[test]
    fn zero_density_zero_gamma() {
        let m = SpectralModel::new(EnergyDensity::zero(), EnergyDensity::zero(), 1.0, 0.0).unwrap();
        assert_eq!(gamma_eps(&m, Band::Zero, 1.3).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pv_of_constant_density_is_log() {
        let d = EnergyDensity::table(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let pv = principal_value(&d, 0.25, &QuadOptions::default()).unwrap();
        assert!((pv - (0.75f64 / 0.25).ln()).abs() < 1e-12);
    }

    #[test]
    fn pv_at_nonvanishing_edge_is_domain_error() {
        let d = EnergyDensity::table(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(principal_value(&d, 0.0, &QuadOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn thermal_weights_m1() {
        let m = SpectralModel::m1();
        assert!((weight_w(&m, Band::Zero, 2.0) - (-3.0f64).exp() * 0.5).abs() < 1e-16);
        assert!((weight_w(&m, Band::One, 5.0) - (-5.0f64).exp() * 0.5).abs() < 1e-16);
        let alt = m.clone().with_thermal(ThermalConvention::H1Prime);
        assert!((weight_w(&alt, Band::Zero, 2.0) - (-2.0f64).exp() * 0.5).abs() < 1e-16);
        let n = n_eps(&m, Band::Zero, 2.0).unwrap();
        assert!((n * weight_w(&m, Band::Zero, 2.0) - 1.0).abs() < 1e-15);
        assert!(n_eps(&m, Band::One, 2.0).is_err());
    }

    #[test]
    fn t_eps_zero_coupling_is_identity() {
        let m = SpectralModel::m1();
        let t = t_eps_matrix(&m, &SystemModel::zero(3), Band::Zero, 2.0).unwrap();
        assert_eq!(t, linalg::identity(3));
    }

    #[test]
    fn damping_of_zero_is_zero() {
        assert_eq!(check_damping(&CMatrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn decay_rejects_negative_time() {
        assert!(decay_curve(&CMatrix::zeros(1, 1), &[-1.0]).is_err());
    }
}

use std::f64::consts::PI;

use ldl_core::linalg::{self, CMatrix};
use ldl_core::spectral::*;
use ldl_core::Band::{self, One, Zero};
use ldl_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

mod support;
use support::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Frequency-domain oracle: `pi rho(E) - i PV int rho / (E' - E)` by
/// singularity subtraction and fixed-grid Simpson.
fn oracle_gamma(band: Band, e: f64) -> Complex64 {
    let (lo, hi) = m1_support(band);
    let r = m1_rho(band, e);
    let pv = if e > lo && e < hi {
        let centre = 0.5 * (lo + hi);
        let slope = -2.0 * (e - centre) / 0.09 * r;
        // e is an endpoint of both pieces, where the quotient is replaced by its limit
        let smooth = |x: f64| if (x - e).abs() < 1e-12 { slope } else { (m1_rho(band, x) - r) / (x - e) };
        simpson(smooth, lo, e, 4000) + simpson(smooth, e, hi, 4000) + r * ((hi - e) / (e - lo)).ln()
    } else {
        simpson(|x| m1_rho(band, x) / (x - e), lo, hi, 4000)
    };
    c(PI * r, -pv)
}

#[test]
fn gamma_centre_of_band_zero() {
    let g = gamma_eps(&SpectralModel::m1(), Zero, 2.0).unwrap();
    assert_eq!(g.re, PI * 0.5);
    assert!(g.im.abs() < 1e-12);
}

#[test]
fn gamma_off_support_matches_plain_quadrature() {
    let g = gamma_eps(&SpectralModel::m1(), One, 2.0).unwrap();
    let oracle = oracle_gamma(One, 2.0);
    assert_eq!(g.re, 0.0);
    assert!(g.im < 0.0);
    assert!((g - oracle).norm() < 1e-10 * oracle.norm(), "{g} vs {oracle}");
}

#[test]
fn real_part_is_pi_rho() {
    let m = SpectralModel::m1();
    for e in [1.37, 2.0, 2.99, 3.5, 4.2, 5.0, 5.81] {
        for b in Band::BOTH {
            assert_eq!(gamma_eps(&m, b, e).unwrap().re, PI * m.rho(b, e));
        }
    }
}

#[test]
fn gamma_matches_frequency_oracle_on_grid() {
    let m = SpectralModel::m1();
    for e in e_grid() {
        for b in Band::BOTH {
            let g = gamma_eps(&m, b, e).unwrap();
            let o = oracle_gamma(b, e);
            assert!((g - o).norm() <= 1e-8 * o.norm(), "band {b:?} E {e}: {g} vs {o}");
        }
    }
}

#[test]
fn gamma_matches_damped_time_domain_oracle() {
    let m = SpectralModel::m1();
    for b in Band::BOTH {
        let oracle = TimeDomainOracle::new(b);
        assert!(oracle.continuity_defect(b) < 1e-12);
        for e in e_grid() {
            let g = gamma_eps(&m, b, e).unwrap();
            let o = oracle.limit(e);
            assert!((g - o).norm() <= 1e-6 * o.norm(), "band {b:?} E {e}: {g} vs {o}");
        }
    }
}

#[test]
fn zero_density_gives_zero_gamma() {
    let m = SpectralModel::new(EnergyDensity::zero(), EnergyDensity::zero(), 1.0, 1.0).unwrap();
    assert_eq!(gamma_eps(&m, Zero, 2.0).unwrap(), c(0.0, 0.0));
}

#[test]
fn overlapping_supports_are_rejected() {
    let a = EnergyDensity::gaussian(0.5, 2.0, 0.3, (1.0, 3.0)).unwrap();
    let b = EnergyDensity::gaussian(0.5, 3.0, 0.3, (2.5, 4.0)).unwrap();
    let err = SpectralModel::new(a, b, 1.0, 1.0).unwrap_err();
    assert!(matches!(&err, Error::InvalidModel(m) if m.contains("disjoint")), "{err}");
}

#[test]
fn thermal_weights_and_intensity() {
    let m = SpectralModel::m1();
    assert!((weight_w(&m, Zero, 2.0) - 0.5 * (-3.0f64).exp()).abs() < 1e-16);
    assert!((weight_w(&m, One, 5.0) - 0.5 * (-5.0f64).exp()).abs() < 1e-16);
    for e in [1.2, 2.0, 2.7] {
        assert!((n_eps(&m, Zero, e).unwrap() * weight_w(&m, Zero, e) - 1.0).abs() < 1e-14);
    }
    assert!(matches!(n_eps(&m, Zero, 5.0), Err(Error::Domain(_))));
}

#[test]
fn t_eps_two_level_projection() {
    let m = SpectralModel::m1();
    let sys = SystemModel::m1();
    let t = t_eps_matrix(&m, &sys, Zero, 2.0).unwrap();
    let (g0, g1) = (oracle_gamma(Zero, 2.0), oracle_gamma(One, 2.0));
    let expect = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0) / (c(1.0, 0.0) + g0 * g1), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(linalg::max_abs(&(t - expect)) < 1e-9);
    assert_eq!(t_eps_matrix(&m, &SystemModel::zero(2), One, 5.0).unwrap(), linalg::identity(2));
}

#[test]
fn t_eps_adjoint_pattern() {
    let d = CMatrix::from_row_slice(3, 3, &[
        c(0.3, -0.2), c(0.9, 0.1), c(-0.4, 0.0),
        c(0.0, 0.5), c(0.2, 0.2), c(0.7, -0.6),
        c(-0.1, 0.3), c(0.0, 0.0), c(0.5, 0.4),
    ]);
    let sys = SystemModel::new(d).unwrap();
    let (g, h) = (c(0.8, -0.3), c(1.1, 0.6));
    for b in Band::BOTH {
        let t = t_eps_from_gammas(&sys, b, g, h).unwrap();
        let a = linalg::identity(3) + sys.dd(b) * (g * h).conj();
        let dense = a.try_inverse().unwrap();
        assert!(linalg::max_abs(&(t.adjoint() - dense)) < 1e-12);
        let forward = linalg::identity(3) + sys.dd(b) * (g * h);
        assert!(linalg::max_abs(&(forward * t - linalg::identity(3))) < 1e-12);
    }
}

#[test]
fn gamma_matrix_zero_coupling() {
    let g = gamma_matrix(&SpectralModel::m1(), &SystemModel::zero(3)).unwrap();
    assert_eq!(g, CMatrix::zeros(3, 3));
}

fn oracle_gamma_diagonal(band: Band) -> Complex64 {
    let (lo, hi) = m1_support(band);
    let m = SpectralModel::m1();
    let n = 10_000;
    let h = (hi - lo) / n as f64;
    let mut sum = c(0.0, 0.0);
    // the integrand vanishes at the support edges, where gamma_eps diverges logarithmically
    for k in 1..n {
        let e = lo + k as f64 * h;
        let (own, other) = (oracle_gamma(band, e), oracle_gamma(band.flip(), e));
        let w = match band {
            Zero => (-(e + m.omega0())).exp() * m1_rho(Zero, e),
            One => (-e).exp() * m1_rho(One, e),
        };
        let weight = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += other * w / (c(1.0, 0.0) + own * other) * weight;
    }
    sum * (h / 3.0)
}

// Frozen from oracle_gamma_diagonal (Simpson, 10^4 points).
const GAMMA_00: Complex64 = Complex64::new(1.165_165_068_273_734e-4, -1.189_656_513_703_948e-3);
const GAMMA_11: Complex64 = Complex64::new(1.575_186_466_236_264e-5, 1.621_392_111_009_989e-4);

#[test]
fn gamma_matrix_m1_against_simpson_oracle() {
    let g = gamma_matrix(&SpectralModel::m1(), &SystemModel::m1()).unwrap();
    for (i, band) in [(0, Zero), (1, One)] {
        let oracle = oracle_gamma_diagonal(band);
        let frozen = if i == 0 { GAMMA_00 } else { GAMMA_11 };
        assert!((g[(i, i)] - oracle).norm() < 1e-6 * oracle.norm(), "{} vs {oracle}", g[(i, i)]);
        assert!((g[(i, i)] - frozen).norm() < 1e-8 * frozen.norm(), "{} vs {frozen}", g[(i, i)]);
    }
    assert_eq!(g[(0, 1)], c(0.0, 0.0));
    assert_eq!(g[(1, 0)], c(0.0, 0.0));
}

#[test]
fn gamma_matrix_phase_invariance() {
    let m = SpectralModel::m1();
    let d = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.1), c(0.8, -0.3), c(0.0, 0.4), c(-0.5, 0.0)]);
    let sys = SystemModel::new(d).unwrap();
    let base = gamma_matrix(&m, &sys).unwrap();
    let rotated = gamma_matrix(&m, &sys.scaled(Complex64::from_polar(1.0, 0.77))).unwrap();
    assert!(linalg::max_abs(&(base - rotated)) < 1e-14);
}

#[test]
fn damping_nonnegative_for_m1_both_conventions() {
    for thermal in [ThermalConvention::H1, ThermalConvention::H1Prime] {
        let m = SpectralModel::m1().with_thermal(thermal);
        let g = gamma_matrix(&m, &SystemModel::m1()).unwrap();
        assert!(check_damping(&g).unwrap() >= -1e-10);
    }
}

#[test]
fn decay_of_m1_is_diagonal_and_monotone() {
    let g = gamma_matrix(&SpectralModel::m1(), &SystemModel::m1()).unwrap();
    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let curve = decay_curve(&g, &times).unwrap();
    assert_eq!(curve[0].propagator, linalg::identity(2));
    for p in &curve {
        for i in 0..2 {
            let expect = (-g[(i, i)] * p.t).exp();
            assert!((p.propagator[(i, i)] - expect).norm() < 1e-13);
        }
        assert!(p.propagator[(0, 1)].norm() < 1e-15 && p.propagator[(1, 0)].norm() < 1e-15);
    }
    for w in curve.windows(2) {
        assert!(w[1].norm <= w[0].norm);
        for i in 0..2 {
            assert!(w[1].propagator[(i, i)].norm() < w[0].propagator[(i, i)].norm());
        }
    }
}

#[test]
fn decay_with_zero_gamma_is_identity() {
    let curve = decay_curve(&CMatrix::zeros(3, 3), &[0.0, 1.0, 7.5]).unwrap();
    assert!(curve.iter().all(|p| p.propagator == linalg::identity(3) && p.norm == 1.0));
}

#[test]
fn beta_inner_examples() {
    use BetaArg::Plain;
    let m = SpectralModel::m1();
    let v = beta_inner(&m, Plain(Zero), Plain(Zero), Plain(One), Plain(One)).unwrap();
    assert_eq!(v.value, c(0.0, 0.0));
    let v = beta_inner(&m, Plain(Zero), Plain(One), Plain(Zero), Plain(One)).unwrap();
    assert_eq!(v.value, c(0.0, 0.0));
    let v = beta_inner(&m, Plain(Zero), Plain(Zero), Plain(Zero), Plain(Zero)).unwrap();
    let oracle = 2.0 * PI * simpson(|e| m1_rho(Zero, e).powi(2) * (-(e + 1.0)).exp(), 1.0, 3.0, 10_000);
    assert!((v.value.re - oracle).abs() < 1e-9 * oracle);
}

#[test]
fn table_density_interpolates_monotonically() {
    let d = EnergyDensity::table(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 0.2]).unwrap();
    assert_eq!(d.eval(1.0), 1.0);
    assert_eq!(d.eval(3.5), 0.0);
    let xs: Vec<f64> = (0..=300).map(|k| k as f64 / 100.0).collect();
    for w in xs.windows(2) {
        let (a, b) = (d.eval(w[0]), d.eval(w[1]));
        assert!(b >= 0.0);
        if w[1] <= 1.0 {
            assert!(b >= a);
        } else if w[0] >= 1.0 && w[1] <= 2.0 {
            assert!((b - 1.0).abs() < 1e-15);
        } else if w[0] >= 2.0 {
            assert!(b <= a);
        }
    }
}

fn random_model() -> impl Strategy<Value = (SpectralModel, SystemModel)> {
    let band = (0.1..1.0f64, 0.1..0.5f64, 0.5..1.5f64);
    (band.clone(), band, 0.2..3.0f64, -1.0..2.0f64, 0.0..3.0f64, 1..=4usize).prop_flat_map(
        |((a0, w0, r0), (a1, w1, r1), beta, omega0, gap, n)| {
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |entries| {
                let rho0 = EnergyDensity::gaussian(a0, 0.0, w0, (-r0, r0)).unwrap();
                let centre1 = r0 + gap + r1;
                let rho1 = EnergyDensity::gaussian(a1, centre1, w1, (centre1 - r1, centre1 + r1)).unwrap();
                let model = SpectralModel::new(rho0, rho1, beta, omega0).unwrap();
                let d = CMatrix::from_iterator(n, n, entries.iter().map(|&(re, im)| c(re, im)));
                (model, SystemModel::new(d).unwrap())
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn damping_nonnegative_for_random_models((model, sys) in random_model()) {
        let g = gamma_matrix(&model, &sys).unwrap();
        prop_assert!(check_damping(&g).unwrap() >= -1e-10);
    }

    #[test]
    fn semigroup_property(t1 in 0.0..5.0f64, t2 in 0.0..5.0f64) {
        let g = gamma_matrix(&SpectralModel::m1(), &SystemModel::m1()).unwrap();
        prop_assert!(semigroup_residual(&g, t1, t2) <= 1e-10);
    }
}

use ldl_core::golden::r_from_gammas;
use ldl_core::linalg::{self, CMatrix};
use ldl_core::scatter::*;
use ldl_core::spectral::{gamma_eps, EnergyDensity, SpectralModel, SystemModel};
use ldl_core::{Band, Error};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m1() -> (SpectralModel, SystemModel) {
    (SpectralModel::m1(), SystemModel::m1())
}

/// `V_1` assembled entry by entry from the grid form factors.
fn v1_oracle(grid: &GridSpace, sys: &SystemModel) -> CMatrix {
    let n = grid.len();
    let ns = sys.dim();
    let d = [sys.d(Band::Zero), sys.d(Band::One)];
    CMatrix::from_fn(ns * n, ns * n, |r, col| {
        let (i, j, i2, k) = (r / n, r % n, col / n, col % n);
        let mut acc = c(0.0, 0.0);
        for e in Band::BOTH {
            acc += d[e.index()][(i, i2)] * grid.g_vec(e)[j] * grid.g_vec(e.flip())[k];
        }
        acc
    })
}

fn random_vectors(dim: usize, count: usize, seed: u64) -> Vec<DVector<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
        .collect()
}

// ---- grid ----

#[test]
fn grid_form_factors_are_orthogonal_and_normalised() {
    let (m, _) = m1();
    let grid = GridSpace::new(&m, 128).unwrap();
    let (g0, g1) = (grid.g_vec(Band::Zero), grid.g_vec(Band::One));
    assert_eq!(g0.iter().zip(g1).map(|(a, b)| a * b).sum::<f64>(), 0.0);
    // int rho_eps = 0.5 * 0.3 * sqrt(pi) * erf(1 / 0.3)
    let exact = 0.5 * 0.3 * std::f64::consts::PI.sqrt() * 0.999_996_972_987_740_5;
    for g in [g0, g1] {
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        assert!((norm2 - exact).abs() < 1e-4 * exact, "{norm2} vs {exact}");
    }
    let h1 = grid.h1_diag();
    for k in 0..grid.len() {
        let shift = if grid.band_of(k) == Band::Zero { 1.0 } else { 0.0 };
        assert_eq!(h1[k], grid.energies()[k] + shift);
    }
    assert!((grid.weights().iter().sum::<f64>() - 4.0).abs() < 1e-12);
}

#[test]
fn grid_rejects_uneven_split() {
    let (m, _) = m1();
    assert!(matches!(GridSpace::new(&m, 7), Err(Error::Domain(_))));
    assert!(matches!(GridSpace::new(&m, 2), Err(Error::Domain(_))));
    let one_band = SpectralModel::new(EnergyDensity::gaussian(1.0, 2.0, 0.5, (1.0, 3.0)).unwrap(), EnergyDensity::zero(), 1.0, 1.0).unwrap();
    let g = GridSpace::new(&one_band, 5).unwrap();
    assert!(g.g_vec(Band::One).iter().all(|&x| x == 0.0));
}

#[test]
fn coupling_matches_entrywise_assembly() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 16).unwrap();
    assert!(linalg::max_abs(&(coupling(&grid, &s) - v1_oracle(&grid, &s))) < 1e-15);
}

// ---- evolution ----

#[test]
fn zero_coupling_is_trivial() {
    let (m, _) = m1();
    let s = SystemModel::zero(2);
    let grid = GridSpace::new(&m, 16).unwrap();
    let id = linalg::identity(32);
    for t in [0.0, 1.0, 7.5] {
        assert!(linalg::max_abs(&(evolve_one_particle(&grid, &s, t, 0.1).unwrap() - &id)) < 1e-14);
    }
    for conv in MollerConvention::ALL {
        let abel = Abel::default();
        let om = moller_exact(&grid, &s, &abel, conv);
        // the truncated average of 1 is 1 - exp(-eta t_max)
        let trunc = (-abel.eta * abel.t_max).exp();
        assert!(linalg::max_abs(&(&om - &id * c(1.0 - trunc, 0.0))) < 1e-14);
        assert_eq!(linalg::max_abs(&t_operator_dynamic(&grid, &s, &om)), 0.0);
    }
    assert_eq!(linalg::max_abs(&t_operator_spectral(&grid, &s, &m).unwrap()), 0.0);
}

#[test]
fn short_time_is_first_order_in_v1() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 32).unwrap();
    let t = 1e-3;
    let u = evolve_one_particle(&grid, &s, t, t).unwrap();
    let first = linalg::identity(64) - v1_oracle(&grid, &s) * c(0.0, t);
    assert!(linalg::max_abs(&(u - first)) < 1e-6);
}

#[test]
fn long_evolution_stays_unitary() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 64).unwrap();
    let u = evolve_one_particle(&grid, &s, 50.0, 0.05).unwrap();
    let defect = linalg::max_abs(&(u.adjoint() * &u - linalg::identity(128)));
    assert!(defect <= 1e-8, "{defect:e}");
}

#[test]
fn coarse_steps_are_rejected() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 16).unwrap();
    assert!(matches!(evolve_one_particle(&grid, &s, 10.0, 1.0), Err(Error::Tolerance { .. })));
    assert!(matches!(evolve_one_particle(&grid, &s, -1.0, 0.1), Err(Error::Domain(_))));
}

#[test]
fn evolution_matches_exact_exponentials() {
    // U_t = exp(i H0 t) exp(-i H t)
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 16).unwrap();
    let h0 = free_hamiltonian(&grid, 2);
    let h = &h0 + v1_oracle(&grid, &s);
    let t = 3.0;
    let exact = linalg::unitary_exp(&h0, -t) * linalg::unitary_exp(&h, t);
    let u = evolve_one_particle(&grid, &s, t, 0.01).unwrap();
    assert!(linalg::max_abs(&(u - exact)) < 1e-9);
}

// ---- Moller operators ----

#[test]
fn stepped_and_spectral_abel_averages_agree() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 16).unwrap();
    let abel = Abel::with_t_max(0.2, 60.0).unwrap();
    for conv in MollerConvention::ALL {
        let a = moller_exact(&grid, &s, &abel, conv);
        let b = moller_stepped(&grid, &s, &abel, conv, 0.01).unwrap();
        let d = linalg::max_abs(&(&a - &b));
        assert!(d < 1e-7, "{conv}: {d:e}");
    }
}

#[test]
fn moller_is_nearly_isometric_and_improves_with_the_grid() {
    let (m, s) = m1();
    let mut last = f64::INFINITY;
    for (n, seed) in [(32, 1), (64, 2), (128, 3)] {
        let grid = GridSpace::new(&m, n).unwrap();
        let om = moller_exact(&grid, &s, &Abel::default(), MollerConvention::default());
        let defect = isometry_defect(&om, &random_vectors(2 * n, 20, seed));
        assert!(defect < 1e-2, "n = {n}: {defect:e}");
        assert!(defect < last);
        last = defect;
    }
}

#[test]
fn moller_intertwines_up_to_the_abel_term() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 64).unwrap();
    let abel = Abel::with_t_max(0.05, 5000.0).unwrap();
    let h0 = free_hamiltonian(&grid, 2);
    let h = &h0 + coupling(&grid, &s);
    for (conv, sign) in [(MollerConvention::default(), -1.0), (MollerConvention { family: Family::Product, direction: Direction::Future }, 1.0)] {
        let om = moller_exact(&grid, &s, &abel, conv);
        assert!(intertwining_residual(&grid, &s, &om) < 1e-2);
        // (H - E) eta / (eta - i s (H - E)) = -i s eta (Omega - 1)
        let exact = (&om - linalg::identity(128)) * c(0.0, -sign * abel.eta);
        assert!(linalg::max_abs(&(&h * &om - &om * &h0 - exact)) < 1e-10);
    }
}

#[test]
fn eta_halving_is_stable_on_t_elements() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 128).unwrap();
    let conv = MollerConvention::default();
    let mo = moller_plus(&grid, &s, &Abel::default(), conv, 0.05).unwrap();
    let tab = |om: &CMatrix| element_table(&grid, 2, &t_operator_dynamic(&grid, &s, om));
    let (a, b) = (tab(&mo.omega), tab(&mo.omega_half));
    let cmp = compare_tables(&a, &b.map(|row| row.map(|x| x * ldl_core::scatter::T_PHASE)), DOMINANCE);
    assert!(cmp.max_rel_dominant < 1e-2, "{}", cmp.max_rel_dominant);
}

#[test]
fn unconverged_abel_average_is_reported() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 32).unwrap();
    let err = moller_plus(&grid, &s, &Abel::new(0.4).unwrap(), MollerConvention::default(), 1e-4).unwrap_err();
    let Error::Convergence(msg) = err else { panic!("{err:?}") };
    assert!(msg.contains("eta = 0.4") && msg.contains("eta = 0.2"), "{msg}");
}

// ---- T operators ----

#[test]
fn spectral_t_only_pairs_matching_bands() {
    let (m, s) = m1();
    let grid = GridSpace::new(&m, 32).unwrap();
    let table = element_table(&grid, 2, &t_operator_spectral(&grid, &s, &m).unwrap());
    for a in Band::BOTH {
        let na: f64 = grid.g_vec(a).iter().map(|x| x * x).sum();
        for b in Band::BOTH {
            let mut want = CMatrix::zeros(2, 2);
            for k in 0..grid.len() {
                let gb = grid.g_vec(b)[k];
                if gb == 0.0 {
                    continue;
                }
                let e = grid.energies()[k];
                let gamma = [gamma_eps(&m, Band::Zero, e).unwrap(), gamma_eps(&m, Band::One, e).unwrap()];
                want += r_from_gammas(&s, (a, b), gamma).unwrap() * c(na * gb * gb, 0.0);
            }
            assert!(linalg::max_abs(&(&table[a.index()][b.index()] - want)) < 1e-15);
        }
    }
    // D = |e0><e1|: R_00 lives on e0, R_11 on e1
    assert_eq!(table[0][0][(1, 1)], c(0.0, 0.0));
    assert_eq!(table[1][1][(0, 0)], c(0.0, 0.0));
    assert_eq!(table[0][1][(1, 0)], c(0.0, 0.0));
}

#[test]
fn m1_t_operators_agree_on_dominant_elements() {
    let (m, s) = m1();
    let run = scattering_run(&m, &s, 128, &Abel::default(), MollerConvention::default()).unwrap();
    let dominant: Vec<_> = run.comparison.rows.iter().filter(|r| r.dominant).collect();
    assert_eq!(dominant.len(), 2);
    assert!(run.comparison.max_rel_dominant <= 5e-2);
    // regression value at eta = 0.05, 128 points
    assert!((run.comparison.max_rel_dominant - 1.1946e-2).abs() < 1e-5, "{}", run.comparison.max_rel_dominant);
    // all four dominant and subdominant elements within 5 %
    for r in run.comparison.rows.iter().filter(|r| r.spectral.norm() > 1e-12) {
        assert!(r.rel < 5e-2, "{r:?}");
    }
    assert!(run.intertwining < 1e-2);
}

#[test]
fn convention_is_selected_by_the_data() {
    let (m, s) = m1();
    let ranked = select_convention(&m, &s, 64, &Abel::default()).unwrap();
    let best = ranked[0];
    assert!(best.1 < 5e-2);
    let product_past = MollerConvention { family: Family::Product, direction: Direction::Past };
    let solution_future = MollerConvention { family: Family::Solution, direction: Direction::Future };
    assert!([product_past, solution_future].contains(&best.0));
    // the other direction misses by far more than the discretization error
    for (conv, err) in &ranked[2..] {
        assert!(*err > 0.1, "{conv}: {err}");
    }
}

#[test]
fn grid_refinement_is_cauchy() {
    let (m, s) = m1();
    let r = grid_refinement(&m, &s, &[32, 64, 128], &Abel::default(), MollerConvention::default()).unwrap();
    for seq in [&r.cauchy_dynamic, &r.cauchy_spectral] {
        assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
    }
    assert!(grid_refinement(&m, &s, &[64, 32], &Abel::default(), MollerConvention::default()).is_err());
}

// ---- invariants ----

fn random_system(dim: usize, seed: u64) -> SystemModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = CMatrix::from_fn(dim, dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    SystemModel::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_unitary_for_any_coupling(dim in 1usize..4, seed in any::<u64>(), t in 0.0f64..20.0) {
        let m = SpectralModel::m1();
        let s = random_system(dim, seed);
        let grid = GridSpace::new(&m, 12).unwrap();
        let u = evolve_one_particle(&grid, &s, t, 0.05).unwrap();
        prop_assert!(linalg::max_abs(&(u.adjoint() * &u - linalg::identity(12 * dim))) < 1e-10);
    }

    #[test]
    fn abel_identity_holds_for_any_coupling(dim in 1usize..4, seed in any::<u64>(), eta in 0.02f64..0.5) {
        let m = SpectralModel::m1();
        let s = random_system(dim, seed);
        let grid = GridSpace::new(&m, 12).unwrap();
        let abel = Abel::with_t_max(eta, 200.0 / eta).unwrap();
        let om = moller_exact(&grid, &s, &abel, MollerConvention::default());
        let h0 = free_hamiltonian(&grid, dim);
        let h = &h0 + coupling(&grid, &s);
        let exact = (&om - linalg::identity(12 * dim)) * c(0.0, eta);
        prop_assert!(linalg::max_abs(&(&h * &om - &om * &h0 - exact)) < 1e-9);
    }
}

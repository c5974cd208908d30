//! The invariant suite run by `check`.
//!
//! All random inputs are drawn up front from one seeded stream, then
//! evaluated with order-preserving maps, so the table is reproducible
//! bit for bit regardless of the thread count.

use std::fmt::Write as _;

use ldl_core::algebra::{commutator, commutator_ordered, Energies, Expr, GenKind, Generator, Later, Mode};
use ldl_core::exec;
use ldl_core::golden::{derive_qsde, fm_consistency, number_intensity_residual, verify_te_identity, verify_theorem2, verify_theorem3, Instantiation};
use ldl_core::linalg::{self, CMatrix};
use ldl_core::spectral::{check_damping, drift_density, gamma_eps, gamma_matrix, semigroup_residual, EnergyDensity, SpectralModel, SystemModel};
use ldl_core::{Band, Error};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A documented deviation; reported but not counted as a failure.
    Known,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Known => "KNOWN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub trials: usize,
    /// Trials skipped because the instance was singular.
    pub skipped: usize,
    pub worst: f64,
    pub limit: f64,
    pub status: Status,
}

impl CheckRow {
    fn new(name: &'static str, trials: usize, skipped: usize, worst: f64, limit: f64) -> Self {
        let status = if worst <= limit { Status::Pass } else { Status::Fail };
        Self { name, trials, skipped, worst, limit, status }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteSize {
    pub trials: usize,
    pub algebra_trials: usize,
    pub random_models: usize,
}

pub const EXACT: f64 = 0.0;
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const DAMPING_TOL: f64 = 1e-10;
pub const SEMIGROUP_TOL: f64 = 1e-10;
pub const FM_TOL: f64 = 1e-10;

const NAMES: [&str; 4] = ["E1", "E2", "E3", "E4"];
const TIMES: [&str; 2] = ["t", "s"];

fn random_band(rng: &mut ChaCha8Rng) -> Band {
    if rng.random::<bool>() {
        Band::One
    } else {
        Band::Zero
    }
}

pub fn random_generator(rng: &mut ChaCha8Rng, slot: usize) -> Generator {
    let kind = [GenKind::B, GenKind::Bdag, GenKind::N][rng.random_range(0..3)];
    let eps = (random_band(rng), random_band(rng));
    let (x1, x2) = (NAMES[2 * slot], NAMES[2 * slot + 1]);
    let energies = match rng.random_range(0..3) {
        0 => Energies::Pair(x1.into(), x2.into()),
        1 => Energies::Left(x1.into()),
        _ => Energies::Right(x2.into()),
    };
    Generator::new(kind, eps, energies, TIMES[slot].into())
}

pub fn random_instantiation(rng: &mut ChaCha8Rng) -> Instantiation {
    loop {
        let g0 = Complex64::new(rng.random_range(0.05..10.0), rng.random_range(-10.0..10.0));
        let g1 = Complex64::new(rng.random_range(0.05..10.0), rng.random_range(-10.0..10.0));
        if g0.norm() <= 10.0 && g1.norm() <= 10.0 {
            return Instantiation::new(g0, g1, rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        }
    }
}

pub fn random_system(rng: &mut ChaCha8Rng, max_dim: usize) -> SystemModel {
    let n = rng.random_range(1..=max_dim);
    let d = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    SystemModel::new(d).expect("finite square matrix")
}

/// Two Gaussian bumps with disjoint supports and a random coupling, `N <= 4`.
pub fn random_model(rng: &mut ChaCha8Rng) -> (SpectralModel, SystemModel) {
    let (a0, w0, r0) = (rng.random_range(0.1..1.0), rng.random_range(0.1..0.5), rng.random_range(0.5..1.5));
    let (a1, w1, r1) = (rng.random_range(0.1..1.0), rng.random_range(0.1..0.5), rng.random_range(0.5..1.5));
    let (beta, omega0, gap) = (rng.random_range(0.2..3.0), rng.random_range(-1.0..2.0), rng.random_range(0.0..3.0));
    let rho0 = EnergyDensity::gaussian(a0, 0.0, w0, (-r0, r0)).expect("valid bump");
    let c1 = r0 + gap + r1;
    let rho1 = EnergyDensity::gaussian(a1, c1, w1, (c1 - r1, c1 + r1)).expect("valid bump");
    let model = SpectralModel::new(rho0, rho1, beta, omega0).expect("disjoint supports");
    (model, random_system(rng, 4))
}

fn mismatch_count(results: Vec<Result<bool, Error>>) -> Result<f64, CliError> {
    let mut bad = 0usize;
    for r in results {
        if !r? {
            bad += 1;
        }
    }
    Ok(bad as f64)
}

fn worst_skipping_singular(results: Vec<Result<f64, Error>>) -> Result<(f64, usize), CliError> {
    let (mut worst, mut skipped) = (0.0f64, 0usize);
    for r in results {
        match r {
            Ok(v) => worst = worst.max(v),
            Err(Error::Singular { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((worst, skipped))
}

/// Energies strictly inside each nonempty band where the density is positive.
pub fn band_samples(model: &SpectralModel, per_band: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (band, lo, hi) in model.supports() {
        for k in 0..per_band {
            let e = lo + (hi - lo) * (k as f64 + 0.5) / per_band as f64;
            if model.rho(band, e) > 0.0 {
                out.push(e);
            }
        }
    }
    out
}

pub fn run(model: &SpectralModel, sys: &SystemModel, seed: u64, size: SuiteSize) -> Result<Vec<CheckRow>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    // master-field algebra
    let pairs: Vec<(Generator, Generator, Mode)> = (0..size.algebra_trials)
        .map(|_| {
            let a = random_generator(&mut rng, 0);
            let b = random_generator(&mut rng, 1);
            let m = if rng.random::<bool>() { Mode::Causal } else { Mode::Symmetric };
            (a, b, m)
        })
        .collect();
    let n = pairs.len();
    let anti = exec::map(&pairs, |(a, b, m)| {
        Ok(commutator_ordered(a, b, *m, Later::First)? == commutator_ordered(b, a, *m, Later::Second)?.neg())
    });
    rows.push(CheckRow::new("algebra antisymmetry", n, 0, mismatch_count(anti)?, EXACT));
    let covariance = |(a, b, m): &(Generator, Generator, Mode)| -> Result<bool, Error> {
        let lhs: Expr = commutator_ordered(a, b, *m, Later::First)?.adjoint();
        Ok(lhs == commutator_ordered(&b.adjoint(), &a.adjoint(), *m, Later::Second)?)
    };
    let is_nn = |p: &&(Generator, Generator, Mode)| p.0.kind() == GenKind::N && p.1.kind() == GenKind::N;
    let regular: Vec<_> = pairs.iter().filter(|p| !is_nn(p)).cloned().collect();
    let nn: Vec<_> = pairs.iter().filter(is_nn).cloned().collect();
    rows.push(CheckRow::new("algebra adjoint covariance", regular.len(), 0, mismatch_count(exec::map(&regular, covariance))?, EXACT));
    let mut nn_row = CheckRow::new("algebra adjoint covariance N-N", nn.len(), 0, mismatch_count(exec::map(&nn, covariance))?, EXACT);
    if nn_row.status == Status::Fail {
        nn_row.status = Status::Known;
    }
    rows.push(nn_row);
    let coherence = exec::map(&pairs, |(a, b, _)| {
        Ok(commutator(a, b, Mode::Causal)?.to_symmetric()? == commutator(a, b, Mode::Symmetric)?)
    });
    rows.push(CheckRow::new("algebra mode coherence", n, 0, mismatch_count(coherence)?, EXACT));

    // golden rule
    let cases: Vec<(SystemModel, Instantiation)> =
        (0..size.trials).map(|_| (random_system(&mut rng, 5), random_instantiation(&mut rng))).collect();
    let te = exec::map(&cases, |(s, i)| verify_te_identity(s, i.gamma(Band::Zero), i.gamma(Band::One)));
    let (w, skip) = worst_skipping_singular(te)?;
    rows.push(CheckRow::new("T_eps identity residual", cases.len(), skip, w, RESIDUAL_TOL));
    let t2 = exec::map(&cases, |(s, i)| verify_theorem2(s, i).map(|r| r.max()));
    let (w, skip) = worst_skipping_singular(t2)?;
    rows.push(CheckRow::new("commutator [B, U] fixed point", cases.len(), skip, w, RESIDUAL_TOL));
    let t3 = exec::map(&cases, |(s, i)| verify_theorem3(s, i).map(|r| r.max()));
    let (w, skip) = worst_skipping_singular(t3)?;
    rows.push(CheckRow::new("normally ordered N U", cases.len(), skip, w, RESIDUAL_TOL));

    // spectral numerics on the configured model
    let samples = band_samples(model, 10);
    let mut re_gap: f64 = 0.0;
    for &e in &samples {
        for b in Band::BOTH {
            re_gap = re_gap.max((gamma_eps(model, b, e)?.re - std::f64::consts::PI * model.rho(b, e)).abs());
        }
    }
    rows.push(CheckRow::new("Re gamma = pi rho", 2 * samples.len(), 0, re_gap, EXACT));

    let q = derive_qsde(sys, false);
    let mut drift_gap: f64 = 0.0;
    let mut fm: f64 = 0.0;
    let mut intensity: f64 = 0.0;
    for &e in &samples {
        let via_r = q.drift_integrand(&Instantiation::from_model(model, e)?)?;
        let direct = drift_density(model, sys, Band::Zero, e)? + drift_density(model, sys, Band::One, e)?;
        drift_gap = drift_gap.max(linalg::max_abs(&(via_r - direct)));
        fm = fm.max(fm_consistency(sys, model, e)?);
        intensity = intensity.max(number_intensity_residual(model, e)?);
    }
    rows.push(CheckRow::new("drift integrand two routes", samples.len(), 0, drift_gap, RESIDUAL_TOL));
    rows.push(CheckRow::new("Frigerio-Maassen drift", samples.len(), 0, fm, FM_TOL));
    rows.push(CheckRow::new("number intensity 2 pi", samples.len(), 0, intensity, RESIDUAL_TOL));

    let gamma = gamma_matrix(model, sys)?;
    let mut models = vec![(model.clone(), sys.clone())];
    models.extend((0..size.random_models).map(|_| random_model(&mut rng)));
    let damping = exec::map(&models, |(m, s)| gamma_matrix(m, s).and_then(|g| check_damping(&g)));
    let mut min_eig = f64::INFINITY;
    for d in damping {
        min_eig = min_eig.min(d?);
    }
    rows.push(CheckRow::new("damping -min eig Re Gamma", models.len(), 0, -min_eig, DAMPING_TOL));

    let mut semigroup: f64 = 0.0;
    let mut count = 0;
    for t1 in 0..=10 {
        for t2 in 0..=(10 - t1) {
            semigroup = semigroup.max(semigroup_residual(&gamma, t1 as f64, t2 as f64));
            count += 1;
        }
    }
    rows.push(CheckRow::new("decay semigroup", count, 0, semigroup, SEMIGROUP_TOL));
    Ok(rows)
}

pub const CSV_HEADER: [&str; 6] = ["check", "trials", "skipped", "worst", "limit", "status"];

pub fn table(rows: &[CheckRow]) -> String {
    let mut s = format!("{:<32} {:>7} {:>7} {:>12} {:>10}  {}\n", "check", "trials", "skipped", "worst", "limit", "status");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<32} {:>7} {:>7} {:>12.3e} {:>10.1e}  {}",
            r.name,
            r.trials,
            r.skipped,
            r.worst,
            r.limit,
            r.status.label()
        );
    }
    s
}

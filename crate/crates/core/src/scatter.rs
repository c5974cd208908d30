//! One-particle scattering cross-check: the T-operator `V_1 Omega` of the
//! discretized coupled Hamiltonian against `int dE T(E)` assembled from the
//! equation coefficients `R_{eps,eps'}(E)`.
//!
//! Coupled space `H_S (x) l^2(grid)`, index `i * n_grid + k` for system state
//! `i` and grid node `k`. The form factor `g_eps` has components
//! `sqrt(rho_eps(E_k) dE_k)`. The dynamics uses `H_1' = diag(E_k)`: the
//! combination `H_S (x) 1 + omega_0 (1 (x) P_0)` commutes with `V_1` and with
//! `H_1'` under the rotating wave condition, so it drops out of the Moller
//! limits.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::band::Band;
use crate::error::{Error, Result};
use crate::exec;
use crate::golden::r_from_gammas;
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::spectral::{gamma_eps, SpectralModel, SystemModel};

/// `T(E)` carries the factor `-i` of `R_{eps,eps'}`: `T_spec = -i V_1 Omega`.
pub const T_PHASE: Complex64 = Complex64::new(0.0, -1.0);

/// Largest phase `dt * max |E_k - E_j|` accepted per time step.
pub const MAX_PHASE_STEP: f64 = 1.0;

/// Unitarity defect allowed per unit time.
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GridSpace {
    energies: Vec<f64>,
    weights: Vec<f64>,
    bands: Vec<Band>,
    g: [Vec<f64>; 2],
    omega0: f64,
}

impl GridSpace {
    /// Midpoint grid with `points` nodes split evenly over the non-empty band
    /// supports.
    pub fn new(model: &SpectralModel, points: usize) -> Result<Self> {
        let supports = model.supports();
        if supports.is_empty() {
            return Err(Error::InvalidModel("scattering grid needs at least one non-empty band".into()));
        }
        if points % supports.len() != 0 || points / supports.len() < 2 {
            return Err(Error::Domain(format!(
                "grid of {points} points cannot be split evenly over {} band(s) with >= 2 nodes each",
                supports.len()
            )));
        }
        let per = points / supports.len();
        let mut grid = Self { energies: vec![], weights: vec![], bands: vec![], g: [vec![], vec![]], omega0: model.omega0() };
        for (band, lo, hi) in supports {
            let de = (hi - lo) / per as f64;
            for k in 0..per {
                let e = lo + (k as f64 + 0.5) * de;
                grid.energies.push(e);
                grid.weights.push(de);
                grid.bands.push(band);
                for b in Band::BOTH {
                    let v = if b == band { (model.rho(b, e) * de).sqrt() } else { 0.0 };
                    grid.g[b.index()].push(v);
                }
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn band_of(&self, k: usize) -> Band {
        self.bands[k]
    }

    /// Components `sqrt(rho_eps(E_k) dE_k)` on band `eps`, zero elsewhere.
    pub fn g_vec(&self, band: Band) -> &[f64] {
        &self.g[band.index()]
    }

    /// Physical one-particle energies `E_k + omega_0 [band 0]`.
    pub fn h1_diag(&self) -> Vec<f64> {
        self.energies
            .iter()
            .zip(&self.bands)
            .map(|(&e, &b)| if b == Band::Zero { e + self.omega0 } else { e })
            .collect()
    }

    /// `u (x) g_eps` in the coupled space.
    pub fn embed(&self, u: &DVector<Complex64>, band: Band) -> DVector<Complex64> {
        let n = self.len();
        let g = self.g_vec(band);
        DVector::from_fn(u.len() * n, |r, _| u[r / n] * g[r % n])
    }

    fn spread(&self) -> f64 {
        let (lo, hi) = self.energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
        hi - lo
    }
}

fn column(v: &[f64]) -> CMatrix {
    CMatrix::from_iterator(v.len(), 1, v.iter().map(|&x| Complex64::new(x, 0.0)))
}

/// `V_1 = sum_eps D_eps (x) |g_eps><g_{1-eps}|`.
pub fn coupling(grid: &GridSpace, sys: &SystemModel) -> CMatrix {
    let mut v = CMatrix::zeros(sys.dim() * grid.len(), sys.dim() * grid.len());
    for e in Band::BOTH {
        let outer = column(grid.g_vec(e)) * column(grid.g_vec(e.flip())).adjoint();
        v += linalg::kron(&sys.d(e), &outer);
    }
    v
}

/// `1 (x) H_1'` with `H_1' = diag(E_k)`.
pub fn free_hamiltonian(grid: &GridSpace, n_sys: usize) -> CMatrix {
    let diag = DVector::from_fn(n_sys * grid.len(), |r, _| Complex64::new(grid.energies[r % grid.len()], 0.0));
    CMatrix::from_diagonal(&diag)
}

/// Propagator of `dU/dt = -i V(t) U` with
/// `V(t) = sum_eps D_eps (x) |S_t g_eps><S_t g_{1-eps}|`, `S_t = exp(i t H_1')`.
struct Propagator {
    n_grid: usize,
    n_sys: usize,
    energies: Vec<f64>,
    g: [Vec<f64>; 2],
    d: [CMatrix; 2],
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9;

impl Propagator {
    fn new(grid: &GridSpace, sys: &SystemModel) -> Self {
        Self {
            n_grid: grid.len(),
            n_sys: sys.dim(),
            energies: grid.energies.clone(),
            g: grid.g.clone(),
            d: [sys.d(Band::Zero), sys.d(Band::One)],
        }
    }

    fn rotated(&self, band: Band, t: f64) -> Vec<Complex64> {
        self.g[band.index()]
            .iter()
            .zip(&self.energies)
            .map(|(&g, &e)| Complex64::from_polar(g, t * e))
            .collect()
    }

    /// `exp(-i h (ca V(ta) + cb V(tb)))` as `1 + Q (E - 1) Q^dagger`, exact:
    /// the exponent lives on `C^n_sys (x) span{S_ta g_eps, S_tb g_eps}`.
    fn factor(&self, ta: f64, tb: f64, ca: f64, cb: f64, h: f64) -> Option<(CMatrix, CMatrix)> {
        let vecs: Vec<Vec<Complex64>> = [(Band::Zero, ta), (Band::One, ta), (Band::Zero, tb), (Band::One, tb)]
            .iter()
            .map(|&(b, t)| self.rotated(b, t))
            .collect();
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        for v in &vecs {
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &basis {
                    let c: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let scale = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-12 * scale.max(1e-300) {
                basis.push(w.into_iter().map(|x| x / norm).collect());
            }
        }
        let r = basis.len();
        if r == 0 {
            return None;
        }
        let qg = CMatrix::from_fn(self.n_grid, r, |k, j| basis[j][k]);
        let coords: Vec<CMatrix> = vecs
            .iter()
            .map(|v| qg.adjoint() * CMatrix::from_column_slice(self.n_grid, 1, v))
            .collect();
        let mut b = CMatrix::zeros(self.n_sys * r, self.n_sys * r);
        for e in Band::BOTH {
            let (x, y) = (e.index(), e.flip().index());
            let small = &coords[x] * coords[y].adjoint() * Complex64::new(ca, 0.0)
                + &coords[2 + x] * coords[2 + y].adjoint() * Complex64::new(cb, 0.0);
            b += linalg::kron(&self.d[e.index()], &small);
        }
        // symmetrize against rounding so the exponential stays unitary
        let b = linalg::hermitian_part(&b);
        let q = linalg::kron(&linalg::identity(self.n_sys), &qg);
        let e = linalg::unitary_exp(&b, h) - linalg::identity(self.n_sys * r);
        Some((q, e))
    }

    /// One commutator-free fourth-order step from `t` to `t + h` (`h` may be negative).
    fn step(&self, m: &mut CMatrix, t: f64, h: f64) {
        let (a1, a2) = (0.25 - SQRT3_6, 0.25 + SQRT3_6);
        let (t1, t2) = (t + (0.5 - SQRT3_6) * h, t + (0.5 + SQRT3_6) * h);
        for (ca, cb) in [(a2, a1), (a1, a2)] {
            if let Some((q, e)) = self.factor(t1, t2, ca, cb, h) {
                let proj = q.adjoint() * &*m;
                *m += q * (e * proj);
            }
        }
    }
}

fn check_step(grid: &GridSpace, h: f64) -> Result<()> {
    let phase = h.abs() * grid.spread();
    if phase > MAX_PHASE_STEP {
        return Err(Error::Tolerance { what: "phase advance per time step".into(), value: phase, limit: MAX_PHASE_STEP });
    }
    Ok(())
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    linalg::max_abs(&(u.adjoint() * u - linalg::identity(u.nrows())))
}

/// `U^(1)_t` from `U^(1)_0 = 1` with steps of at most `dt`.
pub fn evolve_one_particle(grid: &GridSpace, sys: &SystemModel, t: f64, dt: f64) -> Result<CMatrix> {
    if !(t >= 0.0 && t.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("evolution needs t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    check_step(grid, h)?;
    let p = Propagator::new(grid, sys);
    let mut u = linalg::identity(sys.dim() * grid.len());
    if t == 0.0 {
        return Ok(u);
    }
    for s in 0..steps {
        p.step(&mut u, s as f64 * h, h);
    }
    let defect = unitarity_defect(&u);
    let limit = UNITARITY_TOL * t.max(1.0);
    if defect > limit {
        return Err(Error::Tolerance { what: "unitarity defect |U^dagger U - 1|".into(), value: defect, limit });
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `t -> +infinity`.
    Future,
    /// `t -> -infinity`.
    Past,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Future => 1.0,
            Direction::Past => -1.0,
        }
    }
}

/// Which family is Abel-averaged: the product `exp(iHt) exp(-iH_0 t)` or the
/// solution `U^(1)_t = exp(iH_0 t) exp(-iHt)` of the interaction-picture
/// equation (its adjoint).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Product,
    Solution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MollerConvention {
    pub family: Family,
    pub direction: Direction,
}

impl MollerConvention {
    pub const ALL: [MollerConvention; 4] = [
        MollerConvention { family: Family::Product, direction: Direction::Past },
        MollerConvention { family: Family::Product, direction: Direction::Future },
        MollerConvention { family: Family::Solution, direction: Direction::Past },
        MollerConvention { family: Family::Solution, direction: Direction::Future },
    ];
}

impl Default for MollerConvention {
    fn default() -> Self {
        Self { family: Family::Product, direction: Direction::Past }
    }
}

impl fmt::Display for MollerConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            Family::Product => "exp(iHt)exp(-iH0t)",
            Family::Solution => "U(t)",
        };
        let dir = match self.direction {
            Direction::Future => "+inf",
            Direction::Past => "-inf",
        };
        write!(f, "{fam}, t -> {dir}")
    }
}

/// Abel average `eta int_0^t_max exp(-eta t) X_t dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abel {
    pub eta: f64,
    pub t_max: f64,
}

impl Abel {
    /// `t_max = 20 / eta`.
    pub fn new(eta: f64) -> Result<Self> {
        Self::with_t_max(eta, 20.0 / eta)
    }

    pub fn with_t_max(eta: f64, t_max: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite() && t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Domain(format!("Abel average needs eta > 0 and t_max > 0, got {eta}, {t_max}")));
        }
        Ok(Self { eta, t_max })
    }

    pub fn halved(&self) -> Self {
        Self { eta: self.eta / 2.0, t_max: self.t_max * 2.0 }
    }

    /// `eta int_0^t_max exp((i x - eta) t) dt`.
    fn weight(&self, x: f64) -> Complex64 {
        let z = Complex64::new(-self.eta, x);
        let tail = (z * self.t_max).exp();
        (ONE - tail) * self.eta / -z
    }
}

impl Default for Abel {
    fn default() -> Self {
        Self { eta: 0.05, t_max: 400.0 }
    }
}

/// Abel-averaged Moller operator from the spectral decomposition of
/// `H = 1 (x) H_1' + V_1`; the time integral is done in closed form.
pub fn moller_exact(grid: &GridSpace, sys: &SystemModel, abel: &Abel, conv: MollerConvention) -> CMatrix {
    moller_exact_many(grid, sys, &[*abel], conv).pop().expect("one average")
}

fn moller_exact_many(grid: &GridSpace, sys: &SystemModel, abels: &[Abel], conv: MollerConvention) -> Vec<CMatrix> {
    let n = sys.dim() * grid.len();
    let h = free_hamiltonian(grid, sys.dim()) + coupling(grid, sys);
    let eig = linalg::hermitian_part(&h).symmetric_eigen();
    let q = &eig.eigenvectors;
    let qa = q.adjoint();
    let s = conv.direction.sign();
    exec::map(abels, |abel| {
        // exp(i s H t) exp(-i s H0 t): column k picks up exp(i s (lambda_m - E_k) t)
        let mut b = qa.clone();
        for k in 0..n {
            let ek = grid.energies[k % grid.len()];
            for m in 0..n {
                b[(m, k)] *= abel.weight(s * (eig.eigenvalues[m] - ek));
            }
        }
        let omega = q * b;
        match conv.family {
            Family::Product => omega,
            // eta real: the average of the adjoint is the adjoint of the average
            Family::Solution => omega.adjoint(),
        }
    })
}

/// The same average by fourth-order time stepping and Simpson's rule in `t`.
pub fn moller_stepped(grid: &GridSpace, sys: &SystemModel, abel: &Abel, conv: MollerConvention, dt: f64) -> Result<CMatrix> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    let steps = ((abel.t_max / dt).ceil() as usize).div_ceil(2) * 2;
    let h = abel.t_max / steps as f64 * conv.direction.sign();
    check_step(grid, h)?;
    let p = Propagator::new(grid, sys);
    let n = sys.dim() * grid.len();
    let mut u = linalg::identity(n);
    let mut acc = u.clone();
    for s in 1..=steps {
        p.step(&mut u, (s - 1) as f64 * h, h);
        let w = if s == steps { 1.0 } else if s % 2 == 1 { 4.0 } else { 2.0 };
        acc += &u * Complex64::new(w * (-abel.eta * (s as f64 * h).abs()).exp(), 0.0);
    }
    let defect = unitarity_defect(&u);
    let limit = UNITARITY_TOL * abel.t_max.max(1.0);
    if defect > limit {
        return Err(Error::Tolerance { what: "unitarity defect |U^dagger U - 1|".into(), value: defect, limit });
    }
    let avg = acc * Complex64::new(abel.eta * h.abs() / 3.0, 0.0);
    Ok(match conv.family {
        Family::Solution => avg,
        Family::Product => avg.adjoint(),
    })
}

#[derive(Debug, Clone)]
pub struct Moller {
    pub omega: CMatrix,
    /// The same average at `eta / 2`.
    pub omega_half: CMatrix,
    /// `|Omega_eta - Omega_{eta/2}|_F / |Omega_{eta/2}|_F`.
    pub change: f64,
}

/// Abel-averaged Moller operator with a convergence estimate from `eta / 2`.
pub fn moller_plus(grid: &GridSpace, sys: &SystemModel, abel: &Abel, conv: MollerConvention, tol: f64) -> Result<Moller> {
    let runs = moller_exact_many(grid, sys, &[*abel, abel.halved()], conv);
    let [omega, omega_half]: [CMatrix; 2] = runs.try_into().expect("two runs");
    let change = (&omega - &omega_half).norm() / omega_half.norm().max(1e-300);
    if change > tol {
        return Err(Error::Convergence(format!(
            "Abel average not converged: eta = {} vs eta = {} differ by {change:.3e} (relative), tolerance {tol:.1e}",
            abel.eta,
            abel.eta / 2.0
        )));
    }
    Ok(Moller { omega, omega_half, change })
}

/// `T_dyn = V_1 Omega`.
pub fn t_operator_dynamic(grid: &GridSpace, sys: &SystemModel, omega: &CMatrix) -> CMatrix {
    coupling(grid, sys) * omega
}

/// `T_spec = sum_k dE_k sum R_{eps,eps'}(E_k) (x) |g_eps><g_eps'| P_{E_k}` with
/// the grid projector `P_{E_k} = |k><k| / dE_k`.
pub fn t_operator_spectral(grid: &GridSpace, sys: &SystemModel, model: &SpectralModel) -> Result<CMatrix> {
    let n = grid.len();
    let ns = sys.dim();
    let nodes: Vec<usize> = (0..n).collect();
    let blocks = exec::try_map(&nodes, |&k| -> Result<[CMatrix; 2]> {
        let e = grid.energies[k];
        let gamma = [gamma_eps(model, Band::Zero, e)?, gamma_eps(model, Band::One, e)?];
        let b = grid.bands[k];
        Ok([r_from_gammas(sys, (Band::Zero, b), gamma)?, r_from_gammas(sys, (Band::One, b), gamma)?])
    })?;
    let mut t = CMatrix::zeros(ns * n, ns * n);
    for (k, r) in blocks.iter().enumerate() {
        let gk = grid.g[grid.bands[k].index()][k];
        for j in 0..n {
            let a = grid.bands[j];
            let gj = grid.g[a.index()][j];
            if gj == 0.0 || gk == 0.0 {
                continue;
            }
            for i in 0..ns {
                for i2 in 0..ns {
                    t[(i * n + j, i2 * n + k)] = r[a.index()][(i, i2)] * (gj * gk);
                }
            }
        }
    }
    Ok(t)
}

/// Blocks `<u (x) g_a| T |u' (x) g_b>` over system basis states `u, u'`.
pub fn element_table(grid: &GridSpace, n_sys: usize, t: &CMatrix) -> [[CMatrix; 2]; 2] {
    let n = grid.len();
    let block = |a: Band, b: Band| {
        let (ga, gb) = (grid.g_vec(a), grid.g_vec(b));
        CMatrix::from_fn(n_sys, n_sys, |i, i2| {
            let mut acc = ZERO;
            for j in 0..n {
                if ga[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if gb[k] != 0.0 {
                        acc += t[(i * n + j, i2 * n + k)] * (ga[j] * gb[k]);
                    }
                }
            }
            acc
        })
    };
    [
        [block(Band::Zero, Band::Zero), block(Band::Zero, Band::One)],
        [block(Band::One, Band::Zero), block(Band::One, Band::One)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementRow {
    pub a: Band,
    pub b: Band,
    pub i: usize,
    pub j: usize,
    /// `T_PHASE <u_i (x) g_a| V_1 Omega |u_j (x) g_b>`.
    pub dynamic: Complex64,
    pub spectral: Complex64,
    /// `|dynamic - spectral| / |spectral|`.
    pub rel: f64,
    /// `|spectral|` at least the dominance fraction of the largest element.
    pub dominant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TComparison {
    pub rows: Vec<ElementRow>,
    pub max_rel_dominant: f64,
}

impl TComparison {
    pub const CSV_HEADER: [&'static str; 11] =
        ["a", "b", "i", "j", "dyn_re", "dyn_im", "spec_re", "spec_im", "abs_diff", "rel_diff", "dominant"];
}

pub fn compare_tables(dynamic: &[[CMatrix; 2]; 2], spectral: &[[CMatrix; 2]; 2], dominance: f64) -> TComparison {
    let mut rows = Vec::new();
    let mut peak: f64 = 0.0;
    for a in Band::BOTH {
        for b in Band::BOTH {
            let (d, s) = (&dynamic[a.index()][b.index()], &spectral[a.index()][b.index()]);
            peak = peak.max(linalg::max_abs(s));
            for i in 0..s.nrows() {
                for j in 0..s.ncols() {
                    let (dv, sv) = (d[(i, j)] * T_PHASE, s[(i, j)]);
                    let diff = (dv - sv).norm();
                    let rel = if sv.norm() > 0.0 { diff / sv.norm() } else { diff };
                    rows.push(ElementRow { a, b, i, j, dynamic: dv, spectral: sv, rel, dominant: false });
                }
            }
        }
    }
    let mut max_rel_dominant: f64 = 0.0;
    for r in &mut rows {
        r.dominant = peak > 0.0 && r.spectral.norm() >= dominance * peak;
        if r.dominant {
            max_rel_dominant = max_rel_dominant.max(r.rel);
        }
    }
    TComparison { rows, max_rel_dominant }
}

/// `|H Omega - Omega H_0|_2 / |H|_2` with `H = H_0 + V_1`, `H_0 = 1 (x) H_1'`.
pub fn intertwining_residual(grid: &GridSpace, sys: &SystemModel, omega: &CMatrix) -> f64 {
    let h0 = free_hamiltonian(grid, sys.dim());
    let h = &h0 + coupling(grid, sys);
    linalg::spectral_norm(&(&h * omega - omega * &h0)) / linalg::spectral_norm(&h).max(1e-300)
}

/// Largest `| |Omega x| - |x| | / |x|` over `xs`.
pub fn isometry_defect(omega: &CMatrix, xs: &[DVector<Complex64>]) -> f64 {
    xs.iter()
        .map(|x| ((omega * x).norm() - x.norm()).abs() / x.norm().max(1e-300))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ScatteringRun {
    pub points: usize,
    pub convention: MollerConvention,
    pub dynamic: [[CMatrix; 2]; 2],
    pub spectral: [[CMatrix; 2]; 2],
    pub comparison: TComparison,
    pub intertwining: f64,
    pub eta_change: f64,
}

/// Default fraction of the largest element for the comparison.
pub const DOMINANCE: f64 = 0.1;

/// Both T-operators on a `points` grid and their comparison.
pub fn scattering_run(
    model: &SpectralModel,
    sys: &SystemModel,
    points: usize,
    abel: &Abel,
    conv: MollerConvention,
) -> Result<ScatteringRun> {
    let grid = GridSpace::new(model, points)?;
    let ns = sys.dim();
    let m = moller_plus(&grid, sys, abel, conv, f64::INFINITY)?;
    let dynamic = element_table(&grid, ns, &t_operator_dynamic(&grid, sys, &m.omega));
    let spectral = element_table(&grid, ns, &t_operator_spectral(&grid, sys, model)?);
    let comparison = compare_tables(&dynamic, &spectral, DOMINANCE);
    let intertwining = intertwining_residual(&grid, sys, &m.omega);
    Ok(ScatteringRun { points, convention: conv, dynamic, spectral, comparison, intertwining, eta_change: m.change })
}

/// The comparison under every convention; the first entry matches best.
pub fn select_convention(
    model: &SpectralModel,
    sys: &SystemModel,
    points: usize,
    abel: &Abel,
) -> Result<Vec<(MollerConvention, f64)>> {
    let runs = exec::try_map(&MollerConvention::ALL, |&c| scattering_run(model, sys, points, abel, c))?;
    let mut out: Vec<(MollerConvention, f64)> = runs.iter().map(|r| (r.convention, r.comparison.max_rel_dominant)).collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub runs: Vec<ScatteringRun>,
    /// `max |table_{n+1} - table_n| / max |table_{n+1}|` for the dynamic tables.
    pub cauchy_dynamic: Vec<f64>,
    pub cauchy_spectral: Vec<f64>,
}

fn table_distance(a: &[[CMatrix; 2]; 2], b: &[[CMatrix; 2]; 2]) -> f64 {
    let mut diff: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            diff = diff.max(linalg::max_abs(&(&a[x][y] - &b[x][y])));
            peak = peak.max(linalg::max_abs(&b[x][y]));
        }
    }
    diff / peak.max(1e-300)
}

/// Runs over increasing grid sizes with Cauchy differences between neighbours.
pub fn grid_refinement(
    model: &SpectralModel,
    sys: &SystemModel,
    sizes: &[usize],
    abel: &Abel,
    conv: MollerConvention,
) -> Result<Refinement> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("grid refinement needs at least two increasing sizes".into()));
    }
    let runs = exec::try_map(sizes, |&n| scattering_run(model, sys, n, abel, conv))?;
    let cauchy = |f: fn(&ScatteringRun) -> &[[CMatrix; 2]; 2]| {
        runs.windows(2).map(|w| table_distance(f(&w[0]), f(&w[1]))).collect::<Vec<f64>>()
    };
    let cauchy_dynamic = cauchy(|r| &r.dynamic);
    let cauchy_spectral = cauchy(|r| &r.spectral);
    Ok(Refinement { runs, cauchy_dynamic, cauchy_spectral })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abel_weight_limits() {
        let a = Abel::with_t_max(0.1, 1e6).unwrap();
        assert!((a.weight(0.0) - ONE).norm() < 1e-12);
        let x = 2.0;
        let want = Complex64::new(0.1, 0.0) / Complex64::new(0.1, -x);
        assert!((a.weight(x) - want).norm() < 1e-12);
    }

    #[test]
    fn cf4_is_fourth_order() {
        let m = SpectralModel::m1();
        let sys = SystemModel::m1();
        let grid = GridSpace::new(&m, 8).unwrap();
        let reference = evolve_one_particle(&grid, &sys, 2.0, 2.0 / 1024.0).unwrap();
        let err = |steps: usize| linalg::max_abs(&(evolve_one_particle(&grid, &sys, 2.0, 2.0 / steps as f64).unwrap() - &reference));
        let (e1, e2) = (err(16), err(32));
        let order = (e1 / e2).log2();
        assert!(order > 3.7 && order < 4.5, "observed order {order} ({e1:e}, {e2:e})");
    }
}

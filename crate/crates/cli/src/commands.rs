//! One function per command: compute everything, render artifacts, write nothing.

use ldl_core::exec;
use ldl_core::golden::derive_qsde;
use ldl_core::prelimit::{kernel_limit_check, prelimit_two_point, EnergyProfile, TestFunctionPair, TwoPointLabels, ERROR_FLOOR};
use ldl_core::scatter::{grid_refinement, scattering_run, select_convention, Abel, TComparison};
use ldl_core::spectral::{check_damping, decay_curve, gamma_eps, gamma_matrix, weight_w};
use ldl_core::Band;

use crate::config::{band, profile, RunConfig};
use crate::error::CliError;
use crate::output::{self, num, Artifact, Meta};
use crate::suite::{self, SuiteSize, Status};

/// Rendered outputs of a command, plus a failure that must still set the
/// exit code after the (complete) outputs are written.
#[derive(Debug)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub stdout: String,
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(artifacts: Vec<Artifact>, stdout: String) -> Self {
        Self { artifacts, stdout, failure: None }
    }
}

fn meta(cfg: &RunConfig) -> Meta {
    Meta::new(cfg.command.name(), &cfg.source, cfg.seed)
}

fn band_label(b: Band) -> String {
    b.index().to_string()
}

pub fn derive(cfg: &RunConfig) -> Result<Report, CliError> {
    let sys = cfg.system()?;
    let spec = cfg.raw.derive.clone().unwrap_or(crate::config::DeriveSpec { symbolic: false, energies: None });
    let q = derive_qsde(sys, spec.symbolic);
    let transcript = q.transcript();
    let mut artifacts = vec![output::text("derive.txt", &meta(cfg), &transcript)];
    if let Some(grid) = &spec.energies {
        let model = cfg.model()?;
        let energies = grid.values("derive.energies")?;
        let n = sys.dim();
        let per_e = exec::try_map(&energies, |&e| {
            let mut rows = Vec::new();
            for r in Band::BOTH {
                for s in Band::BOTH {
                    let m = q.r(model, (r, s), e)?;
                    for i in 0..n {
                        for j in 0..n {
                            let z = m[(i, j)];
                            rows.push(vec![num(e), band_label(r), band_label(s), i.to_string(), j.to_string(), num(z.re), num(z.im)]);
                        }
                    }
                }
            }
            Ok::<_, ldl_core::Error>(rows)
        })?;
        artifacts.push(output::csv(
            "derive.csv",
            &meta(cfg),
            &["E", "eps", "eps_prime", "i", "j", "re_R", "im_R"],
            per_e.into_iter().flatten(),
        )?);
    }
    Ok(Report::ok(artifacts, transcript))
}

pub fn gamma(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let energies = cfg.section(&cfg.raw.gamma)?.energies.values("gamma.energies")?;
    let rows = exec::try_map(&energies, |&e| {
        let g0 = gamma_eps(model, Band::Zero, e)?;
        let g1 = gamma_eps(model, Band::One, e)?;
        let (w0, w1) = (weight_w(model, Band::Zero, e), weight_w(model, Band::One, e));
        Ok::<_, ldl_core::Error>(vec![num(e), num(g0.re), num(g0.im), num(g1.re), num(g1.im), num(w0), num(w1)])
    })
    .map_err(|e| match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("key `gamma.energies`: {m}")),
        other => other,
    })?;
    let a = output::csv(
        "gamma.csv",
        &meta(cfg),
        &["E", "re_gamma0", "im_gamma0", "re_gamma1", "im_gamma1", "w0", "w1"],
        rows,
    )?;
    Ok(Report::ok(vec![a], format!("gamma: {} energies\n", energies.len())))
}

pub fn decay(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let sys = cfg.system()?;
    let times = cfg.section(&cfg.raw.decay)?.times.values("decay.times")?;
    let g = gamma_matrix(model, sys)?;
    let min_eig = check_damping(&g)?;
    let curve = decay_curve(&g, &times)?;
    let n = sys.dim();
    let mut header = vec!["t".to_string(), "norm".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_U_{i}{j}"));
            header.push(format!("im_U_{i}{j}"));
        }
    }
    let mut m = meta(cfg).with("min_eig_re_gamma", num(min_eig));
    for i in 0..n {
        for j in 0..n {
            m = m.with(&format!("gamma_{i}{j}"), format!("{} {}", num(g[(i, j)].re), num(g[(i, j)].im)));
        }
    }
    let rows = curve.iter().map(|p| {
        let mut r = vec![num(p.t), num(p.norm)];
        for i in 0..n {
            for j in 0..n {
                r.push(num(p.propagator[(i, j)].re));
                r.push(num(p.propagator[(i, j)].im));
            }
        }
        r
    });
    let headers: Vec<&str> = header.iter().map(String::as_str).collect();
    let a = output::csv("decay.csv", &m, &headers, rows)?;
    Ok(Report::ok(vec![a], format!("decay: {} times, min eig Re Gamma = {}\n", times.len(), num(min_eig))))
}

pub const PRELIMIT_HEADER: [&str; 8] =
    ["mode", "lambda", "value_re", "value_im", "limit_re", "limit_im", "abs_error", "rel_error"];

pub fn prelimit(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.section(&cfg.raw.prelimit)?;
    let lambdas = spec.lambdas.clone();
    let phi = spec.phi.build("prelimit.phi")?;
    let psi = spec.psi.build("prelimit.psi")?;
    let mut artifacts = Vec::new();
    let mut stdout = String::new();
    if spec.f.is_none() != spec.g.is_none() {
        return Err(CliError::Validation("keys `prelimit.f` and `prelimit.g` must be given together".into()));
    }
    if let (Some(f), Some(g)) = (&spec.f, &spec.g) {
        let pair = TestFunctionPair { phi, psi, f: profile("prelimit.f", f)?, g: profile("prelimit.g", g)? };
        let mut rows = Vec::new();
        for mode in &spec.modes {
            let sweep = kernel_limit_check(&pair, &lambdas, mode.mode())?;
            for p in &sweep.points {
                rows.push(vec![
                    sweep.mode.to_string(),
                    num(p.lambda),
                    num(p.value.re),
                    num(p.value.im),
                    num(p.limit.re),
                    num(p.limit.im),
                    num(p.abs_error()),
                    num(p.error),
                ]);
            }
            stdout.push_str(&format!("{}: final relative error {}\n", sweep.mode, num(sweep.final_error())));
        }
        artifacts.push(output::csv("prelimit.csv", &meta(cfg), &PRELIMIT_HEADER, rows)?);
    }
    if let Some(tp) = &spec.two_point {
        let model = cfg.model()?;
        let eps = [
            band("prelimit.two_point.eps", tp.eps[0])?,
            band("prelimit.two_point.eps", tp.eps[1])?,
            band("prelimit.two_point.eps", tp.eps[2])?,
            band("prelimit.two_point.eps", tp.eps[3])?,
        ];
        let supports = model.supports();
        let (lo, hi) = supports.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.1), b.max(s.2)));
        let flat = if lo < hi { EnergyProfile::from_fn(lo, hi, |_| 1.0)? } else { EnergyProfile::zero() };
        let labels = TwoPointLabels { eps, smear: [flat.clone(), flat.clone(), flat.clone(), flat], phi, psi };
        let mode = tp.mode.mode();
        let points = exec::try_map(&lambdas, |&l| prelimit_two_point(model, l, &labels, mode))?;
        let grew = points.windows(2).filter(|w| w[1].error > w[0].error && w[1].error > ERROR_FLOOR).count();
        if grew > 1 {
            return Err(CliError::Convergence(format!("two-point errors grew at {grew} steps")));
        }
        let rows = lambdas.iter().zip(&points).map(|(&l, p)| {
            let abs = (p.value - p.limit).norm();
            vec![mode.to_string(), num(l), num(p.value.re), num(p.value.im), num(p.limit.re), num(p.limit.im), num(abs), num(p.error)]
        });
        let m = meta(cfg).with("two_point_eps", format!("{:?}", tp.eps));
        artifacts.push(output::csv("prelimit_two_point.csv", &m, &PRELIMIT_HEADER, rows)?);
        stdout.push_str(&format!(
            "two-point {mode}: final relative error {}\n",
            num(points.last().map_or(0.0, |p| p.error))
        ));
    }
    if artifacts.is_empty() {
        return Err(CliError::Validation("`[prelimit]` needs `f` and `g`, or `two_point`".into()));
    }
    Ok(Report::ok(artifacts, stdout))
}

pub fn scatter(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let sys = cfg.system()?;
    let spec = cfg.section(&cfg.raw.scatter)?;
    let abel = match spec.t_max {
        Some(t) => Abel::with_t_max(spec.eta, t)?,
        None => Abel::new(spec.eta)?,
    };
    let mut m = meta(cfg);
    let conv = match spec.convention.convention() {
        Some(c) => c,
        None => {
            let ranking = select_convention(model, sys, spec.points, &abel)?;
            for (c, err) in &ranking {
                m = m.with(&format!("convention_rank {c}"), num(*err));
            }
            ranking[0].0
        }
    };
    let run = scattering_run(model, sys, spec.points, &abel, conv)?;
    if let Some(tol) = spec.eta_tolerance {
        if run.eta_change > tol {
            return Err(CliError::Convergence(format!(
                "Moller operator changed by {} between eta = {} and eta = {} (limit {})",
                num(run.eta_change),
                abel.eta,
                abel.eta / 2.0,
                num(tol)
            )));
        }
    }
    m = m
        .with("convention", conv)
        .with("points", spec.points)
        .with("eta", num(abel.eta))
        .with("t_max", num(abel.t_max))
        .with("max_rel_dominant", num(run.comparison.max_rel_dominant))
        .with("intertwining", num(run.intertwining))
        .with("eta_change", num(run.eta_change));
    let rows = run.comparison.rows.iter().map(|r| {
        vec![
            band_label(r.a),
            band_label(r.b),
            r.i.to_string(),
            r.j.to_string(),
            num(r.dynamic.re),
            num(r.dynamic.im),
            num(r.spectral.re),
            num(r.spectral.im),
            num((r.dynamic - r.spectral).norm()),
            num(r.rel),
            r.dominant.to_string(),
        ]
    });
    let mut artifacts = vec![output::csv("scatter.csv", &m, &TComparison::CSV_HEADER, rows)?];
    let mut stdout = format!(
        "scatter: {} points, {conv}, max relative difference on dominant elements {}\n",
        spec.points,
        num(run.comparison.max_rel_dominant)
    );
    if let Some(sizes) = &spec.refine {
        let r = grid_refinement(model, sys, sizes, &abel, conv)?;
        let rows = r.runs.iter().enumerate().map(|(k, run)| {
            let c = |v: &[f64]| if k == 0 { String::new() } else { num(v[k - 1]) };
            vec![run.points.to_string(), num(run.comparison.max_rel_dominant), c(&r.cauchy_dynamic), c(&r.cauchy_spectral)]
        });
        artifacts.push(output::csv(
            "scatter_refinement.csv",
            &meta(cfg),
            &["points", "max_rel_dominant", "cauchy_dynamic", "cauchy_spectral"],
            rows,
        )?);
        stdout.push_str(&format!("refinement Cauchy differences (dynamic): {:?}\n", r.cauchy_dynamic));
    }
    Ok(Report::ok(artifacts, stdout))
}

pub fn check(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = cfg.model()?;
    let sys = cfg.system()?;
    let spec = cfg.raw.check.clone().unwrap_or_default();
    let size = SuiteSize { trials: spec.trials, algebra_trials: spec.algebra_trials, random_models: spec.random_models };
    let rows = suite::run(model, sys, cfg.seed, size)?;
    let csv_rows = rows.iter().map(|r| {
        vec![r.name.to_string(), r.trials.to_string(), r.skipped.to_string(), num(r.worst), num(r.limit), r.status.label().to_string()]
    });
    let a = output::csv("check.csv", &meta(cfg), &suite::CSV_HEADER, csv_rows)?;
    let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
    let (pass, fail, known) = (count(Status::Pass), count(Status::Fail), count(Status::Known));
    let mut stdout = suite::table(&rows);
    stdout.push_str(&format!("{pass} passed, {fail} failed, {known} known deviations\n"));
    let failure = (fail > 0).then(|| {
        let names: Vec<&str> = rows.iter().filter(|r| r.status == Status::Fail).map(|r| r.name).collect();
        CliError::Tolerance(format!("invariant checks failed: {}", names.join(", ")))
    });
    Ok(Report { artifacts: vec![a], stdout, failure })
}

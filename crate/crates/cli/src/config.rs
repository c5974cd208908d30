//! Run configuration: a strict TOML schema.
//!
//! Unknown keys are rejected and every schema error carries the dotted key
//! path. The spectral and system models are given inline (`[model]`,
//! `[system]`) or by file (`model_file`, `system_file`, relative to the
//! config), never both.

use std::fs;
use std::path::{Path, PathBuf};

use ldl_core::linalg::CMatrix;
use ldl_core::prelimit::{EnergyProfile, KernelMode, TimeGaussian};
use ldl_core::quad::QuadOptions;
use ldl_core::scatter::{Direction, Family, MollerConvention};
use ldl_core::spectral::{EnergyDensity, SpectralModel, SystemModel, ThermalConvention};
use ldl_core::Band;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Derive,
    Gamma,
    Decay,
    Prelimit,
    Scatter,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::Gamma => "gamma",
            Command::Decay => "decay",
            Command::Prelimit => "prelimit",
            Command::Scatter => "scatter",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelSpec>,
    pub model_file: Option<PathBuf>,
    pub system: Option<SystemSpec>,
    pub system_file: Option<PathBuf>,
    pub derive: Option<DeriveSpec>,
    pub gamma: Option<GammaSpec>,
    pub decay: Option<DecaySpec>,
    pub prelimit: Option<PrelimitSpec>,
    pub scatter: Option<ScatterSpec>,
    pub check: Option<CheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub beta: f64,
    pub omega0: f64,
    #[serde(default)]
    pub thermal_h: ThermalH,
    pub rho0: DensitySpec,
    pub rho1: DensitySpec,
    pub quadrature: Option<QuadSpec>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThermalH {
    #[default]
    H1,
    H1prime,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySpec {
    Zero,
    Gaussian { amplitude: f64, center: f64, width: f64, support: [f64; 2] },
    Table { energies: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    /// Row-major `[re, im]` pairs.
    pub d: Vec<[f64; 2]>,
    /// `[lower, upper]`: enforce `D ~ |lower><upper|`.
    pub levels: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveSpec {
    #[serde(default)]
    pub symbolic: bool,
    pub energies: Option<Grid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSpec {
    pub energies: Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub times: Grid,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Full,
    Simplex,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrelimitSpec {
    pub lambdas: Vec<f64>,
    #[serde(default = "both_modes")]
    pub modes: Vec<ModeSpec>,
    pub phi: TimeSpec,
    pub psi: TimeSpec,
    pub f: Option<DensitySpec>,
    pub g: Option<DensitySpec>,
    pub two_point: Option<TwoPointSpec>,
}

fn both_modes() -> Vec<ModeSpec> {
    vec![ModeSpec::Full, ModeSpec::Simplex]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPointSpec {
    pub eps: [u8; 4],
    pub mode: ModeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionSpec {
    ProductPast,
    ProductFuture,
    SolutionPast,
    SolutionFuture,
    Auto,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub t_max: Option<f64>,
    #[serde(default = "default_convention")]
    pub convention: ConventionSpec,
    /// Largest accepted change of the element table under `eta -> eta / 2`.
    pub eta_tolerance: Option<f64>,
    pub refine: Option<Vec<usize>>,
}

fn default_points() -> usize {
    128
}

fn default_eta() -> f64 {
    0.05
}

fn default_convention() -> ConventionSpec {
    ConventionSpec::ProductPast
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_algebra_trials")]
    pub algebra_trials: usize,
    #[serde(default = "default_random_models")]
    pub random_models: usize,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self { trials: default_trials(), algebra_trials: default_algebra_trials(), random_models: default_random_models() }
    }
}

fn default_trials() -> usize {
    100
}

fn default_algebra_trials() -> usize {
    200
}

fn default_random_models() -> usize {
    50
}

/// Parses `text` against the schema; errors name the offending key path.
pub fn parse<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T, CliError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().to_string();
        CliError::Validation(if path == "." {
            format!("{}: {msg}", origin.display())
        } else {
            format!("{}: key `{path}`: {msg}", origin.display())
        })
    })
}

/// A parsed configuration with the models resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub model: Option<SpectralModel>,
    pub system: Option<SystemModel>,
    pub raw: RawConfig,
    /// Bytes of the config and every file it references, for the meta hash.
    pub source: Vec<u8>,
}

pub const DEFAULT_SEED: u64 = 0;

impl RunConfig {
    /// `command` stands in for, and takes precedence over, the `command` key.
    pub fn load(path: &Path, command: Option<Command>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base, command)
    }

    pub fn parse(text: &str, origin: &Path, base: &Path, command: Option<Command>) -> Result<Self, CliError> {
        let raw: RawConfig = parse(text, origin)?;
        let mut source = text.as_bytes().to_vec();
        let model_spec = resolve::<ModelSpec>("model", raw.model.clone(), raw.model_file.as_deref(), base, &mut source)?;
        let system_spec =
            resolve::<SystemSpec>("system", raw.system.clone(), raw.system_file.as_deref(), base, &mut source)?;
        let model = model_spec.map(|m| build_model(&m)).transpose()?;
        let system = system_spec.map(|s| build_system(&s)).transpose()?;
        let command = command
            .or(raw.command)
            .ok_or_else(|| CliError::Validation("key `command`: missing (or pass it on the command line)".into()))?;
        if raw.threads == Some(0) {
            return Err(CliError::Validation("key `threads`: must be >= 1".into()));
        }
        Ok(Self {
            command,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            threads: raw.threads,
            out: raw.out.clone().map(|p| base.join(p)).unwrap_or_else(|| PathBuf::from(".")),
            model,
            system,
            raw,
            source,
        })
    }

    pub fn model(&self) -> Result<&SpectralModel, CliError> {
        self.model.as_ref().ok_or_else(|| {
            CliError::Validation(format!("command `{}` needs `[model]` or `model_file`", self.command.name()))
        })
    }

    pub fn system(&self) -> Result<&SystemModel, CliError> {
        self.system.as_ref().ok_or_else(|| {
            CliError::Validation(format!("command `{}` needs `[system]` or `system_file`", self.command.name()))
        })
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Validation(format!("command `{0}` needs a `[{0}]` section", self.command.name())))
    }
}

fn resolve<T: DeserializeOwned>(
    key: &str,
    inline: Option<T>,
    file: Option<&Path>,
    base: &Path,
    source: &mut Vec<u8>,
) -> Result<Option<T>, CliError> {
    match (inline, file) {
        (Some(_), Some(_)) => Err(CliError::Validation(format!("keys `{key}` and `{key}_file` are mutually exclusive"))),
        (Some(v), None) => Ok(Some(v)),
        (None, None) => Ok(None),
        (None, Some(p)) => {
            let path = base.join(p);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("key `{key}_file`: cannot read {}: {e}", path.display())))?;
            source.extend_from_slice(text.as_bytes());
            parse(&text, &path).map(Some)
        }
    }
}

fn invalid(key: &str, e: ldl_core::Error) -> CliError {
    CliError::Validation(format!("key `{key}`: {e}"))
}

pub fn build_density(key: &str, spec: &DensitySpec) -> Result<EnergyDensity, CliError> {
    match spec {
        DensitySpec::Zero => Ok(EnergyDensity::zero()),
        DensitySpec::Gaussian { amplitude, center, width, support } => {
            EnergyDensity::gaussian(*amplitude, *center, *width, (support[0], support[1])).map_err(|e| invalid(key, e))
        }
        DensitySpec::Table { energies, values } => {
            EnergyDensity::table(energies.clone(), values.clone()).map_err(|e| invalid(key, e))
        }
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<SpectralModel, CliError> {
    let rho0 = build_density("model.rho0", &spec.rho0)?;
    let rho1 = build_density("model.rho1", &spec.rho1)?;
    let mut model = SpectralModel::new(rho0, rho1, spec.beta, spec.omega0).map_err(|e| invalid("model", e))?;
    model = model.with_thermal(match spec.thermal_h {
        ThermalH::H1 => ThermalConvention::H1,
        ThermalH::H1prime => ThermalConvention::H1Prime,
    });
    if let Some(q) = &spec.quadrature {
        let d = QuadOptions::default();
        let opts = QuadOptions {
            rel_tol: q.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: q.abs_tol.unwrap_or(d.abs_tol),
            max_intervals: q.max_intervals.unwrap_or(d.max_intervals),
        };
        if !(opts.rel_tol > 0.0 && opts.abs_tol >= 0.0 && opts.max_intervals > 0) {
            return Err(CliError::Validation(
                "key `model.quadrature`: rel_tol must be > 0, abs_tol >= 0, max_intervals >= 1".into(),
            ));
        }
        model = model.with_quadrature(opts);
    }
    Ok(model)
}

pub fn build_system(spec: &SystemSpec) -> Result<SystemModel, CliError> {
    if spec.d.len() != spec.dim * spec.dim {
        return Err(CliError::Validation(format!(
            "key `system.d`: expected {} row-major [re, im] pairs for dim = {}, got {}",
            spec.dim * spec.dim,
            spec.dim,
            spec.d.len()
        )));
    }
    let d = CMatrix::from_row_iterator(spec.dim, spec.dim, spec.d.iter().map(|&[re, im]| Complex64::new(re, im)));
    let sys = SystemModel::new(d).map_err(|e| invalid("system", e))?;
    if let Some([lower, upper]) = spec.levels {
        sys.check_rotating_wave(lower, upper).map_err(|e| invalid("system.levels", e))?;
    }
    Ok(sys)
}

impl Grid {
    pub fn values(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(CliError::Validation(format!("key `{key}`: empty grid")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Validation(format!("key `{key}`: non-finite grid value")));
        }
        Ok(v)
    }
}

impl TimeSpec {
    pub fn build(&self, key: &str) -> Result<TimeGaussian, CliError> {
        TimeGaussian::new(self.amplitude, self.center, self.width).map_err(|e| invalid(key, e))
    }
}

impl ModeSpec {
    pub fn mode(self) -> KernelMode {
        match self {
            ModeSpec::Full => KernelMode::Full,
            ModeSpec::Simplex => KernelMode::Simplex,
        }
    }
}

impl ConventionSpec {
    pub fn convention(self) -> Option<MollerConvention> {
        let (family, direction) = match self {
            ConventionSpec::ProductPast => (Family::Product, Direction::Past),
            ConventionSpec::ProductFuture => (Family::Product, Direction::Future),
            ConventionSpec::SolutionPast => (Family::Solution, Direction::Past),
            ConventionSpec::SolutionFuture => (Family::Solution, Direction::Future),
            ConventionSpec::Auto => return None,
        };
        Some(MollerConvention { family, direction })
    }
}

pub fn profile(key: &str, spec: &DensitySpec) -> Result<EnergyProfile, CliError> {
    Ok(EnergyProfile::from_density(&build_density(key, spec)?))
}

pub fn band(key: &str, x: u8) -> Result<Band, CliError> {
    Band::from_index(x as usize).ok_or_else(|| CliError::Validation(format!("key `{key}`: band label must be 0 or 1, got {x}")))
}

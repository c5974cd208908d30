use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::band::Band;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};
use crate::quad::{self, QuadOptions};

/// Functional form of an energy density `rho(E) = <g, P_E g>`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityShape {
    /// Identically zero.
    Zero,
    /// `amplitude * exp(-((E - center) / width)^2)`, hard-clipped to the support.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Monotone cubic (Fritsch-Carlson) interpolation through the nodes.
    Table { energies: Vec<f64>, values: Vec<f64>, slopes: Vec<f64> },
}

/// A non-negative energy density with compact support `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDensity {
    lo: f64,
    hi: f64,
    shape: DensityShape,
}

impl EnergyDensity {
    pub fn zero() -> Self {
        Self { lo: 0.0, hi: 0.0, shape: DensityShape::Zero }
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64, support: (f64, f64)) -> Result<Self> {
        let (lo, hi) = support;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidModel(format!("density amplitude must be finite and >= 0, got {amplitude}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidModel(format!("density width must be > 0, got {width}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidModel(format!("density support [{lo}, {hi}] is not a finite interval")));
        }
        Ok(Self { lo, hi, shape: DensityShape::Gaussian { amplitude, center, width } })
    }

    /// Tabulated density; the support is `[energies[0], energies[last]]`.
    pub fn table(energies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 || energies.len() != values.len() {
            return Err(Error::InvalidModel("density table needs >= 2 nodes and matching value count".into()));
        }
        if energies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel("density table energies must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidModel("density table values must be finite and >= 0".into()));
        }
        let slopes = pchip_slopes(&energies, &values);
        Ok(Self {
            lo: energies[0],
            hi: *energies.last().unwrap(),
            shape: DensityShape::Table { energies, values, slopes },
        })
    }

    pub fn shape(&self) -> &DensityShape {
        &self.shape
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, DensityShape::Zero)
    }

    /// Support interval, `None` for the zero density.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.is_zero() {
            None
        } else {
            Some((self.lo, self.hi))
        }
    }

    pub fn contains(&self, e: f64) -> bool {
        !self.is_zero() && e >= self.lo && e <= self.hi
    }

    pub fn eval(&self, e: f64) -> f64 {
        if !self.contains(e) {
            return 0.0;
        }
        match &self.shape {
            DensityShape::Zero => 0.0,
            DensityShape::Gaussian { amplitude, center, width } => {
                let x = (e - center) / width;
                amplitude * (-x * x).exp()
            }
            DensityShape::Table { energies, values, slopes } => hermite_eval(energies, values, slopes, e),
        }
    }

    /// Rescaled copy `c * rho`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidModel(format!("density scale must be >= 0, got {c}")));
        }
        let shape = match &self.shape {
            DensityShape::Zero => DensityShape::Zero,
            DensityShape::Gaussian { amplitude, center, width } => {
                DensityShape::Gaussian { amplitude: amplitude * c, center: *center, width: *width }
            }
            DensityShape::Table { energies, values, slopes } => DensityShape::Table {
                energies: energies.clone(),
                values: values.iter().map(|v| v * c).collect(),
                slopes: slopes.iter().map(|s| s * c).collect(),
            },
        };
        Ok(Self { lo: self.lo, hi: self.hi, shape })
    }

    /// Interior nodes where the density is only C^1 (table nodes).
    pub fn kinks(&self) -> Vec<f64> {
        match &self.shape {
            DensityShape::Table { energies, .. } => energies[1..energies.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// `int rho(E) dE`.
    pub fn total(&self, opts: &QuadOptions) -> Result<f64> {
        match self.support() {
            None => Ok(0.0),
            Some((lo, hi)) => Ok(quad::integrate(|e| self.eval(e), lo, hi, &self.kinks(), opts)?.value),
        }
    }
}

/// Fritsch-Carlson monotone slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

fn hermite_eval(x: &[f64], y: &[f64], m: &[f64], e: f64) -> f64 {
    let k = match x.partition_point(|&xi| xi <= e) {
        0 => 0,
        p if p >= x.len() => x.len() - 2,
        p => p - 1,
    };
    let h = x[k + 1] - x[k];
    let s = (e - x[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y[k]
        + (s3 - 2.0 * s2 + s) * h * m[k]
        + (-2.0 * s3 + 3.0 * s2) * y[k + 1]
        + (s3 - s2) * h * m[k + 1];
    v.max(0.0)
}

/// Which one-particle Hamiltonian enters `L = exp(-beta H / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThermalConvention {
    /// `H = H_1`: band 0 energies are shifted by `omega0`.
    #[default]
    H1,
    /// `H = H_1' = H_1 - omega0 P_0`.
    H1Prime,
}

/// Reservoir data in the energy representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    rho: [EnergyDensity; 2],
    beta: f64,
    omega0: f64,
    thermal: ThermalConvention,
    quad: QuadOptions,
}

impl SpectralModel {
    pub fn new(rho0: EnergyDensity, rho1: EnergyDensity, beta: f64, omega0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidModel(format!("inverse temperature beta must be > 0, got {beta}")));
        }
        if !omega0.is_finite() {
            return Err(Error::InvalidModel("omega0 must be finite".into()));
        }
        if let (Some((a0, b0)), Some((a1, b1))) = (rho0.support(), rho1.support()) {
            if a0.max(a1) < b0.min(b1) {
                return Err(Error::InvalidModel(format!(
                    "band supports must be disjoint: I0 = [{a0}, {b0}] overlaps I1 = [{a1}, {b1}]"
                )));
            }
        }
        Ok(Self {
            rho: [rho0, rho1],
            beta,
            omega0,
            thermal: ThermalConvention::default(),
            quad: QuadOptions::default(),
        })
    }

    pub fn with_thermal(mut self, thermal: ThermalConvention) -> Self {
        self.thermal = thermal;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    /// Desk-scale reference model: two Gaussian bands centred at 2 and 5.
    pub fn m1() -> Self {
        let rho0 = EnergyDensity::gaussian(0.5, 2.0, 0.3, (1.0, 3.0)).unwrap();
        let rho1 = EnergyDensity::gaussian(0.5, 5.0, 0.3, (4.0, 6.0)).unwrap();
        Self::new(rho0, rho1, 1.0, 1.0).unwrap()
    }

    pub fn density(&self, band: Band) -> &EnergyDensity {
        &self.rho[band.index()]
    }

    pub fn rho(&self, band: Band, e: f64) -> f64 {
        self.rho[band.index()].eval(e)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn thermal(&self) -> ThermalConvention {
        self.thermal
    }

    pub fn quad(&self) -> &QuadOptions {
        &self.quad
    }

    /// Energy of the thermal factor for band `band` at `H_1'`-energy `e`.
    pub fn thermal_energy(&self, band: Band, e: f64) -> f64 {
        match (self.thermal, band) {
            (ThermalConvention::H1, Band::Zero) => e + self.omega0,
            _ => e,
        }
    }

    /// Copy with both densities multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut m = self.clone();
        m.rho = [self.rho[0].scaled(c)?, self.rho[1].scaled(c)?];
        Ok(m)
    }

    /// Union of the two band supports, in increasing order.
    pub fn supports(&self) -> Vec<(Band, f64, f64)> {
        let mut out: Vec<_> = Band::BOTH
            .iter()
            .filter_map(|&b| self.density(b).support().map(|(lo, hi)| (b, lo, hi)))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1));
        out
    }
}

/// The atomic system: coupling `D_0 = D`, `D_1 = D^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    d: CMatrix,
}

impl SystemModel {
    pub fn new(d: CMatrix) -> Result<Self> {
        if d.nrows() != d.ncols() || d.nrows() == 0 {
            return Err(Error::InvalidModel(format!("D must be a non-empty square matrix, got {:?}", d.shape())));
        }
        if d.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidModel("D has non-finite entries".into()));
        }
        Ok(Self { d })
    }

    /// `D = scale * |e_lower><e_upper|` on `C^dim`.
    pub fn transition(dim: usize, lower: usize, upper: usize, scale: Complex64) -> Result<Self> {
        if lower >= dim || upper >= dim {
            return Err(Error::InvalidModel("transition levels out of range".into()));
        }
        let mut d = CMatrix::zeros(dim, dim);
        d[(lower, upper)] = scale;
        Self::new(d)
    }

    /// Two-level reference system `D = |e0><e1|`.
    pub fn m1() -> Self {
        Self::transition(2, 0, 1, Complex64::new(1.0, 0.0)).unwrap()
    }

    /// Checks the rotating-wave structure against supplied levels: `D` must
    /// be a multiple of `|lower><upper|`.
    pub fn check_rotating_wave(&self, lower: usize, upper: usize) -> Result<()> {
        let n = self.dim();
        if lower >= n || upper >= n {
            return Err(Error::InvalidModel("rotating-wave levels out of range".into()));
        }
        let scale = max_abs(&self.d);
        for i in 0..n {
            for j in 0..n {
                if (i, j) != (lower, upper) && self.d[(i, j)].norm() > 1e-12 * scale.max(1.0) {
                    return Err(Error::InvalidModel(format!(
                        "rotating-wave condition violated: D[{i},{j}] = {} but D must be proportional to |{lower}><{upper}|",
                        self.d[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    /// `D_eps`.
    pub fn d(&self, band: Band) -> CMatrix {
        match band {
            Band::Zero => self.d.clone(),
            Band::One => self.d.adjoint(),
        }
    }

    /// `D_eps D_{1-eps}`, a positive operator.
    pub fn dd(&self, band: Band) -> CMatrix {
        self.d(band) * self.d(band.flip())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { d: self.d.map(|z| z * c) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { d: DMatrix::zeros(dim, dim) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_values() {
        let m = SpectralModel::m1();
        assert_eq!(m.rho(Band::Zero, 2.0), 0.5);
        assert_eq!(m.rho(Band::One, 2.0), 0.0);
        assert_eq!(m.rho(Band::Zero, 3.5), 0.0);
        assert!((m.rho(Band::One, 5.3) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn overlapping_bands_rejected() {
        let a = EnergyDensity::gaussian(1.0, 2.0, 0.3, (1.0, 3.0)).unwrap();
        let b = EnergyDensity::gaussian(1.0, 3.0, 0.3, (2.5, 4.0)).unwrap();
        let err = SpectralModel::new(a, b, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("disjoint"));
    }

    #[test]
    fn touching_bands_allowed() {
        let a = EnergyDensity::gaussian(1.0, 2.0, 0.3, (1.0, 3.0)).unwrap();
        let b = EnergyDensity::gaussian(1.0, 4.0, 0.3, (3.0, 5.0)).unwrap();
        assert!(SpectralModel::new(a, b, 1.0, 0.0).is_ok());
    }

    #[test]
    fn bad_beta_rejected() {
        let m = SpectralModel::new(EnergyDensity::zero(), EnergyDensity::zero(), 0.0, 0.0);
        assert!(m.is_err());
    }

    #[test]
    fn table_interpolation_is_monotone_and_hits_nodes() {
        let d = EnergyDensity::table(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.eval(1.0), 1.0);
        assert_eq!(d.eval(-0.1), 0.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = d.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            assert!(v <= 1.0 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn rotating_wave_check() {
        let s = SystemModel::m1();
        assert!(s.check_rotating_wave(0, 1).is_ok());
        assert!(s.check_rotating_wave(1, 0).is_err());
    }

    #[test]
    fn dd_is_projection_for_m1() {
        let s = SystemModel::m1();
        let p = s.dd(Band::Zero);
        assert_eq!(p[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(p[(1, 1)], Complex64::new(0.0, 0.0));
        let q = s.dd(Band::One);
        assert_eq!(q[(1, 1)], Complex64::new(1.0, 0.0));
    }
}

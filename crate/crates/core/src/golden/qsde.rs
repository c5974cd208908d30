//! Coefficients of the quantum stochastic differential equation for `U_t`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::algebra::Expr;
use crate::band::Band;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral::{beta_inner, gamma_matrix, t_eps_from_gammas, BetaArg, SpectralModel, SystemModel};

use super::closed;
use super::normal::Instantiation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Number,
    Creation,
    Annihilation,
    Time,
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::Number => "dN",
            Process::Creation => "dB+",
            Process::Annihilation => "dB",
            Process::Time => "dt",
        })
    }
}

/// One structural term `R_{eps,eps'}(E) dX(argument)` of the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdeTerm {
    pub process: Process,
    /// `(eps, eps')` of the coefficient `R_{eps,eps'}`.
    pub r: (Band, Band),
    /// Argument of the process in `K (x)_beta K`.
    pub argument: String,
}

impl fmt::Display for QsdeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.r;
        write!(f, "R_{a}{b}(E) {}({})", self.process, self.argument)
    }
}

/// `T_3(E) = 2 pi sum R_{eps,eps'}(E) (x) |g_eps><g_eps'| P_E (x)_beta P_E`,
/// stored as the system blocks `2 pi R_{eps,eps'}(E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FmOperator {
    pub blocks: [[CMatrix; 2]; 2],
}

/// `xi(E) = (1 / 2 pi) sum_eps rho_eps(E)^{-1} g_eps (x)_beta g_eps`; bands
/// with `rho_eps(E) = 0` carry no component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmVector {
    pub weights: [Option<f64>; 2],
}

#[derive(Debug, Clone)]
pub struct QsdeCoefficients {
    sys: SystemModel,
    terms: Vec<QsdeTerm>,
    integrand: Option<Expr>,
}

/// Structure of the equation for `sys`; `symbolic` also keeps the normally
/// ordered integrand as an expression.
pub fn derive_qsde(sys: &SystemModel, symbolic: bool) -> QsdeCoefficients {
    let mut terms = Vec::new();
    for e in Band::BOTH {
        let f = e.flip();
        let (re, rf) = ((e, e), (e, f));
        terms.push(QsdeTerm { process: Process::Number, r: rf, argument: format!("2pi |g{e}><g{f}| P_E (x) P_E") });
        terms.push(QsdeTerm { process: Process::Number, r: re, argument: format!("2pi |g{e}><g{e}| P_E (x) P_E") });
        terms.push(QsdeTerm { process: Process::Creation, r: rf, argument: format!("g{e} (x) P_E g{f}") });
        terms.push(QsdeTerm { process: Process::Creation, r: re, argument: format!("g{e} (x) P_E g{e}") });
        terms.push(QsdeTerm { process: Process::Annihilation, r: rf, argument: format!("g{f} (x) P_E g{e}") });
        terms.push(QsdeTerm { process: Process::Annihilation, r: re, argument: format!("g{e} (x) P_E g{e}") });
        terms.push(QsdeTerm { process: Process::Time, r: re, argument: format!("w{e}(E)") });
    }
    QsdeCoefficients { sys: sys.clone(), terms, integrand: symbolic.then(|| closed::normally_ordered(true)) }
}

/// `R_{eps,eps}` and `R_{eps,1-eps}` from the two `gamma` values.
pub fn r_from_gammas(sys: &SystemModel, r: (Band, Band), gamma: [Complex64; 2]) -> Result<CMatrix> {
    let (e, e2) = r;
    let t = t_eps_from_gammas(sys, e, gamma[e.index()], gamma[e.flip().index()])?;
    Ok(if e2 == e {
        sys.dd(e) * t * (-gamma[e.flip().index()])
    } else {
        t * sys.d(e) * Complex64::new(0.0, -1.0)
    })
}

impl QsdeCoefficients {
    pub fn sys(&self) -> &SystemModel {
        &self.sys
    }

    pub fn terms(&self) -> &[QsdeTerm] {
        &self.terms
    }

    /// Normally ordered integrand of `d/dt U_t` in `E`, `t`.
    pub fn integrand(&self) -> Option<&Expr> {
        self.integrand.as_ref()
    }

    pub fn r(&self, model: &SpectralModel, r: (Band, Band), e: f64) -> Result<CMatrix> {
        let inst = Instantiation::from_model(model, e)?;
        r_from_gammas(&self.sys, r, inst.gamma)
    }

    /// Matrix coefficient of a structural term at `E`.
    pub fn coefficient(&self, term: &QsdeTerm, model: &SpectralModel, e: f64) -> Result<CMatrix> {
        let inst = Instantiation::from_model(model, e)?;
        let r = r_from_gammas(&self.sys, term.r, inst.gamma)?;
        Ok(match term.process {
            Process::Time => r * Complex64::new(inst.w(term.r.0), 0.0),
            _ => r,
        })
    }

    /// `-sum_eps R_{eps,eps}(E) w_eps(E)`, the integrand of the damping `Gamma`.
    pub fn drift_integrand(&self, inst: &Instantiation) -> Result<CMatrix> {
        let n = self.sys.dim();
        let mut acc = CMatrix::zeros(n, n);
        for e in Band::BOTH {
            if inst.w(e) != 0.0 {
                acc -= r_from_gammas(&self.sys, (e, e), inst.gamma)? * Complex64::new(inst.w(e), 0.0);
            }
        }
        Ok(acc)
    }

    /// `Gamma = int dE drift_integrand`.
    pub fn drift(&self, model: &SpectralModel) -> Result<CMatrix> {
        gamma_matrix(model, &self.sys)
    }

    pub fn fm_operator(&self, model: &SpectralModel, e: f64) -> Result<FmOperator> {
        let inst = Instantiation::from_model(model, e)?;
        let block = |a: Band, b: Band| r_from_gammas(&self.sys, (a, b), inst.gamma).map(|m| m * Complex64::new(2.0 * PI, 0.0));
        Ok(FmOperator {
            blocks: [
                [block(Band::Zero, Band::Zero)?, block(Band::Zero, Band::One)?],
                [block(Band::One, Band::Zero)?, block(Band::One, Band::One)?],
            ],
        })
    }

    pub fn fm_vector(&self, model: &SpectralModel, e: f64) -> Result<FmVector> {
        let w = |b: Band| {
            let rho = model.rho(b, e);
            (rho > 0.0).then(|| 1.0 / (2.0 * PI * rho))
        };
        let weights = [w(Band::Zero), w(Band::One)];
        if weights.iter().all(Option::is_none) {
            return Err(Error::Domain(format!("xi(E) undefined at E = {e}: rho_0(E) = rho_1(E) = 0")));
        }
        Ok(FmVector { weights })
    }

    /// `<xi(E), T_3(E) xi(E)>` assembled from `K (x)_beta K` scalar products.
    pub fn fm_drift(&self, model: &SpectralModel, e: f64) -> Result<CMatrix> {
        let t3 = self.fm_operator(model, e)?;
        let xi = self.fm_vector(model, e)?;
        let n = self.sys.dim();
        let mut acc = CMatrix::zeros(n, n);
        for a in Band::BOTH {
            let Some(xa) = xi.weights[a.index()] else { continue };
            for b in Band::BOTH {
                let Some(xb) = xi.weights[b.index()] else { continue };
                for e1 in Band::BOTH {
                    for e2 in Band::BOTH {
                        // |g_e1><g_e2| P_E g_b = <g_e2, P_E g_b> g_e1
                        if e2 != b {
                            continue;
                        }
                        let k = model.rho(b, e);
                        let s = beta_inner(model, BetaArg::Plain(a), BetaArg::Plain(a), BetaArg::Plain(e1), BetaArg::At(b, e))?;
                        if !s.is_finite() {
                            return Err(Error::Domain("distributional scalar product in <xi, T_3 xi>".into()));
                        }
                        acc += &t3.blocks[e1.index()][e2.index()] * (s.value * (xa * xb * k));
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Human-readable listing of the equation.
    pub fn transcript(&self) -> String {
        let mut out = String::from("dU_t = sum_eps int dE {\n");
        for t in &self.terms {
            out.push_str(&format!("  {t}\n"));
        }
        out.push_str("} U_t\n");
        out.push_str("R_ee(E) = -gamma_{1-e}(E) D_e D_{1-e} T_e(E)\n");
        out.push_str("R_e,1-e(E) = -i T_e(E) D_e\n");
        out.push_str("T_e(E) = (1 + gamma_e(E) gamma_{1-e}(E) D_e D_{1-e})^-1\n");
        if let Some(x) = &self.integrand {
            out.push_str("normally ordered integrand of d/dt U_t:\n");
            for t in x.terms() {
                out.push_str(&format!("  {t}\n"));
            }
        }
        out
    }
}

/// `|<xi, T_3 xi> - sum_eps R_{eps,eps}(E) w_eps(E)|`.
pub fn fm_consistency(sys: &SystemModel, model: &SpectralModel, e: f64) -> Result<f64> {
    let q = derive_qsde(sys, false);
    let lhs = q.fm_drift(model, e)?;
    let inst = Instantiation::from_model(model, e)?;
    let rhs = -q.drift_integrand(&inst)?;
    Ok(linalg::max_abs(&(lhs - rhs)))
}

/// Normalization of the number-process intensities: the two-term operator
/// `sum_eps' n_eps'(E) |g_eps (x) P_E g_eps'><g_sigma (x) P_E g_eps'|` against
/// `2 pi |g_eps><g_sigma| P_E (x)_beta P_E`, compared on matrix elements
/// `<g_a (x) g_b| . |P_E g_c (x) P_E g_d>` for all labels.
pub fn number_intensity_residual(model: &SpectralModel, e: f64) -> Result<f64> {
    use BetaArg::{At, Plain};
    let mut worst: f64 = 0.0;
    for eps in Band::BOTH {
        for sigma in Band::BOTH {
            for [a, b, c, d] in labels4() {
                let mut lhs = Complex64::new(0.0, 0.0);
                let mut lhs_deltas = None;
                for e2 in Band::BOTH {
                    let w = crate::spectral::weight_w(model, e2, e);
                    if w == 0.0 {
                        continue;
                    }
                    let bra = beta_inner(model, Plain(a), Plain(b), Plain(eps), At(e2, e))?;
                    let ket = beta_inner(model, Plain(sigma), At(e2, e), At(c, e), At(d, e))?;
                    let v = bra.value * ket.value / w;
                    if v != Complex64::new(0.0, 0.0) {
                        lhs_deltas = Some(bra.deltas.len() + ket.deltas.len());
                    }
                    lhs += v;
                }
                let rhs = if sigma == c {
                    let v = beta_inner(model, Plain(a), Plain(b), Plain(eps), At(d, e))?;
                    v.value * (2.0 * PI * model.rho(c, e))
                } else {
                    Complex64::new(0.0, 0.0)
                };
                // both sides carry delta(E1 - E) delta(E2 - E)
                if let Some(k) = lhs_deltas {
                    if k != 2 {
                        return Err(Error::IllFormed(format!("number intensity carries {k} energy deltas, expected 2")));
                    }
                }
                worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1.0));
            }
        }
    }
    Ok(worst)
}

fn labels4() -> impl Iterator<Item = [Band; 4]> {
    (0..16).map(|i| {
        let b = |k: usize| Band::from_index((i >> k) & 1).unwrap();
        [b(0), b(1), b(2), b(3)]
    })
}

//! Numerical normal form of integrand expressions in `E` and `t`.
//!
//! A term of the integrand is a scalar times a system word times one of the
//! noise words `U`, `B U`, `B+ U`, `B+ B U`, `U B`, `B+ U B`, with every
//! generator integrated in its first slot and localized at `E`. Annihilators
//! standing left of `U` are moved through it with `B U = U B + [B, U]`, where
//! `[B, U]` is obtained from the integral equation for `U` by the symbolic
//! commutators, closed over the labels it produces and solved as one block
//! linear system.
//!
//! Coefficients are kept as Laurent polynomials in `w_0(E)`, `w_1(E)`, so
//! `n_eps w_eps = 1` holds formally and nothing depends on `w` being nonzero.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::algebra::{commutator, expand_number, Atom, Coeff, Energies, Expr, Factor, GenKind, Generator, Mode, SysSym, Term};
use crate::band::Band;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral::{t_eps_from_gammas, SystemModel};

/// Band labels `(eps, eps')` of an integrated generator.
pub type Label = (Band, Band);

/// Exponents of `w_0` and `w_1`.
pub type Monomial = [i32; 2];

pub const ENERGY: &str = "E";
pub const TIME: &str = "t";

/// `B+_left(E,t) U_t B_right(E,t)`, either side possibly absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Basis {
    pub left: Option<Label>,
    pub right: Option<Label>,
}

impl Basis {
    pub const U: Basis = Basis { left: None, right: None };

    pub fn u_b(l: Label) -> Basis {
        Basis { left: None, right: Some(l) }
    }

    pub fn bd_u(l: Label) -> Basis {
        Basis { left: Some(l), right: None }
    }

    pub fn bd_u_b(l: Label, r: Label) -> Basis {
        Basis { left: Some(l), right: Some(r) }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some((a, b)) = self.left {
            write!(f, "Bd{a}{b} ")?;
        }
        write!(f, "U")?;
        if let Some((a, b)) = self.right {
            write!(f, " B{a}{b}")?;
        }
        Ok(())
    }
}

/// `sum matrix * w^k * basis`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorForm {
    coeffs: BTreeMap<(Basis, Monomial), CMatrix>,
}

impl OperatorForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, basis: Basis, mono: Monomial, m: CMatrix) {
        match self.coeffs.get_mut(&(basis, mono)) {
            Some(acc) => *acc += m,
            None => {
                self.coeffs.insert((basis, mono), m);
            }
        }
    }

    pub fn add_form(&mut self, other: &OperatorForm) {
        for (&(b, k), m) in &other.coeffs {
            self.add(b, k, m.clone());
        }
    }

    pub fn get(&self, basis: Basis, mono: Monomial) -> Option<&CMatrix> {
        self.coeffs.get(&(basis, mono))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Basis, Monomial, &CMatrix)> {
        self.coeffs.iter().map(|(&(b, k), m)| (b, k, m))
    }

    pub fn left_mul(&self, a: &CMatrix) -> OperatorForm {
        OperatorForm { coeffs: self.coeffs.iter().map(|(k, m)| (*k, a * m)).collect() }
    }

    /// Largest coefficient mismatch, relative to `max(1, |coefficient|)`.
    pub fn residual(&self, other: &OperatorForm) -> f64 {
        let mut keys: Vec<_> = self.coeffs.keys().collect();
        keys.extend(other.coeffs.keys());
        keys.into_iter()
            .map(|k| match (self.coeffs.get(k), other.coeffs.get(k)) {
                (Some(a), Some(b)) => linalg::max_abs(&(a - b)) / linalg::max_abs(b).max(1.0),
                (Some(a), None) | (None, Some(a)) => linalg::max_abs(a),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Values at concrete weights; negative powers of a vanishing weight are an error.
    pub fn evaluate(&self, w: [f64; 2]) -> Result<BTreeMap<Basis, CMatrix>> {
        let mut out: BTreeMap<Basis, CMatrix> = BTreeMap::new();
        for (&(b, k), m) in &self.coeffs {
            let mut s = 1.0;
            for band in Band::BOTH {
                let (p, x) = (k[band.index()], w[band.index()]);
                if p < 0 && x == 0.0 {
                    return Err(Error::Domain(format!("n_{band}(E) undefined: w_{band}(E) = 0")));
                }
                s *= x.powi(p);
            }
            let v = m * Complex64::new(s, 0.0);
            match out.get_mut(&b) {
                Some(acc) => *acc += v,
                None => {
                    out.insert(b, v);
                }
            }
        }
        Ok(out)
    }
}

/// Scalar values fixed at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instantiation {
    pub gamma: [Complex64; 2],
    pub w: [f64; 2],
}

impl Instantiation {
    pub fn new(gamma0: Complex64, gamma1: Complex64, w0: f64, w1: f64) -> Self {
        Self { gamma: [gamma0, gamma1], w: [w0, w1] }
    }

    pub fn from_model(model: &crate::spectral::SpectralModel, e: f64) -> Result<Self> {
        use crate::spectral::{gamma_eps, weight_w};
        Ok(Self {
            gamma: [gamma_eps(model, Band::Zero, e)?, gamma_eps(model, Band::One, e)?],
            w: [weight_w(model, Band::Zero, e), weight_w(model, Band::One, e)],
        })
    }

    pub fn gamma(&self, b: Band) -> Complex64 {
        self.gamma[b.index()]
    }

    pub fn w(&self, b: Band) -> f64 {
        self.w[b.index()]
    }

    /// Same values with the band labels exchanged.
    pub fn swapped(&self) -> Self {
        Self { gamma: [self.gamma[1], self.gamma[0]], w: [self.w[1], self.w[0]] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    U,
    B(Label),
    Bd(Label),
}

struct Parsed {
    scalar: Complex64,
    mono: Monomial,
    sys: CMatrix,
    word: Vec<Slot>,
}

pub(crate) fn to_complex(c: Coeff) -> Complex64 {
    Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))
}

fn ill(msg: impl Into<String>) -> Error {
    Error::IllFormed(msg.into())
}

/// Evaluates expressions against one system and one instantiation.
pub struct Evaluator<'a> {
    sys: &'a SystemModel,
    inst: Instantiation,
    cache: BTreeMap<Label, OperatorForm>,
}

impl<'a> Evaluator<'a> {
    pub fn new(sys: &'a SystemModel, inst: Instantiation) -> Self {
        Self { sys, inst, cache: BTreeMap::new() }
    }

    fn parse(&self, t: &Term) -> Result<Parsed> {
        if !t.bound().is_empty() || !t.time_bound().is_empty() {
            return Err(ill(format!("integration left over in {t}")));
        }
        let mut scalar = to_complex(t.coeff());
        let mut mono = [0, 0];
        for a in t.atoms() {
            if !a.vars().iter().all(|v| v.name() == ENERGY) {
                return Err(ill(format!("atom {a} not localized at {ENERGY}")));
            }
            match a {
                Atom::Gamma { band, conj, .. } => {
                    let g = self.inst.gamma(*band);
                    scalar *= if *conj { g.conj() } else { g };
                }
                Atom::W(b, _) => mono[b.index()] += 1,
                Atom::NInv(b, _) => mono[b.index()] -= 1,
                Atom::TwoPi => scalar *= 2.0 * std::f64::consts::PI,
                other => return Err(ill(format!("atom {other} has no numerical value here"))),
            }
        }
        let n = self.sys.dim();
        let mut sys = linalg::identity(n);
        for s in t.sys_word() {
            let m = match s {
                SysSym::D(b) => self.sys.d(*b),
                SysSym::T { band, var, dag } => {
                    if var.name() != ENERGY {
                        return Err(ill(format!("{s} not localized at {ENERGY}")));
                    }
                    let t = t_eps_from_gammas(self.sys, *band, self.inst.gamma(*band), self.inst.gamma(band.flip()))?;
                    if *dag {
                        t.adjoint()
                    } else {
                        t
                    }
                }
            };
            sys *= m;
        }
        let mut word = Vec::new();
        for f in t.word() {
            word.push(match f {
                Factor::Evol(v) if v.name() == TIME => Slot::U,
                Factor::Gen(g) => {
                    let label = check_generator(g)?;
                    match g.kind() {
                        GenKind::B => Slot::B(label),
                        GenKind::Bdag => Slot::Bd(label),
                        GenKind::N => return Err(ill("number generator must be expanded first")),
                    }
                }
                other => return Err(ill(format!("unexpected factor {other}"))),
            });
        }
        Ok(Parsed { scalar, mono, sys, word })
    }

    /// Normal form of an integrand expression (number generators are expanded).
    pub fn normal_form(&mut self, x: &Expr) -> Result<OperatorForm> {
        let x = expand_number(x)?;
        let mut out = OperatorForm::new();
        for t in x.terms() {
            let p = self.parse(t)?;
            let m = &p.sys * p.scalar;
            match p.word.as_slice() {
                [Slot::U] => out.add(Basis::U, p.mono, m),
                [Slot::U, Slot::B(r)] => out.add(Basis::u_b(*r), p.mono, m),
                [Slot::Bd(l), Slot::U] => out.add(Basis::bd_u(*l), p.mono, m),
                [Slot::Bd(l), Slot::U, Slot::B(r)] => out.add(Basis::bd_u_b(*l, *r), p.mono, m),
                [Slot::B(r), Slot::U] => {
                    out.add(Basis::u_b(*r), p.mono, m.clone());
                    let c = self.u_commutator(*r)?.clone();
                    add_shifted(&mut out, &c.left_mul(&m), None, p.mono);
                }
                [Slot::Bd(l), Slot::B(r), Slot::U] => {
                    out.add(Basis::bd_u_b(*l, *r), p.mono, m.clone());
                    let c = self.u_commutator(*r)?.clone();
                    add_shifted(&mut out, &c.left_mul(&m), Some(*l), p.mono);
                }
                _ => return Err(ill(format!("noise word of {t} is outside the evaluated family"))),
            }
        }
        Ok(out)
    }

    /// `[B_label(E,t), U_t]` on the basis `{U, U B}`.
    pub fn u_commutator(&mut self, label: Label) -> Result<&OperatorForm> {
        if !self.cache.contains_key(&label) {
            let solved = self.solve_closure(label)?;
            for (l, f) in solved {
                self.cache.entry(l).or_insert(f);
            }
        }
        Ok(&self.cache[&label])
    }

    fn solve_closure(&self, seed: Label) -> Result<Vec<(Label, OperatorForm)>> {
        let n = self.sys.dim();
        let mut labels = vec![seed];
        let mut sources: Vec<OperatorForm> = Vec::new();
        let mut couplings: Vec<Vec<(Label, CMatrix)>> = Vec::new();
        let mut i = 0;
        while i < labels.len() {
            let rhs = integral_equation_rhs(labels[i])?;
            let mut src = OperatorForm::new();
            let mut cpl = Vec::new();
            for t in rhs.terms() {
                let p = self.parse(t)?;
                let m = &p.sys * p.scalar;
                match p.word.as_slice() {
                    [Slot::U] => src.add(Basis::U, p.mono, m),
                    [Slot::B(r), Slot::U] => {
                        if p.mono != [0, 0] {
                            return Err(ill(format!("weight-dependent coupling in {t}")));
                        }
                        src.add(Basis::u_b(*r), p.mono, m.clone());
                        cpl.push((*r, m));
                        if !labels.contains(r) {
                            labels.push(*r);
                        }
                    }
                    _ => return Err(ill(format!("commutator with U produced {t}"))),
                }
            }
            sources.push(src);
            couplings.push(cpl);
            i += 1;
        }

        // (1 - M) C = S, block rows indexed by label
        let k = labels.len();
        let mut a = linalg::identity(k * n);
        for (row, cpl) in couplings.iter().enumerate() {
            for (l, m) in cpl {
                let col = labels.iter().position(|x| x == l).unwrap();
                let mut block = a.view_mut((row * n, col * n), (n, n));
                block -= m;
            }
        }
        let inv = linalg::inverse_checked(&a, "closure of [B, U]")?;
        let mut keys: Vec<(Basis, Monomial)> = sources.iter().flat_map(|s| s.coeffs.keys().copied()).collect();
        keys.sort();
        keys.dedup();
        let mut out: Vec<OperatorForm> = vec![OperatorForm::new(); k];
        for key in keys {
            let mut rhs = CMatrix::zeros(k * n, n);
            for (row, s) in sources.iter().enumerate() {
                if let Some(m) = s.coeffs.get(&key) {
                    rhs.view_mut((row * n, 0), (n, n)).copy_from(m);
                }
            }
            let sol = &inv * rhs;
            for (row, form) in out.iter_mut().enumerate() {
                let block = sol.view((row * n, 0), (n, n)).into_owned();
                if linalg::max_abs(&block) > 0.0 {
                    form.add(key.0, key.1, block);
                }
            }
        }
        Ok(labels.into_iter().zip(out).collect())
    }
}

fn add_shifted(out: &mut OperatorForm, c: &OperatorForm, left: Option<Label>, mono: Monomial) {
    for (b, k, m) in c.iter() {
        let basis = Basis { left, right: b.right };
        out.add(basis, [k[0] + mono[0], k[1] + mono[1]], m.clone());
    }
}

fn check_generator(g: &Generator) -> Result<Label> {
    match g.energies() {
        Energies::Right(v) if v.name() == ENERGY && g.time().name() == TIME => Ok(g.eps()),
        _ => Err(ill(format!("generator {g} is not integrated at ({ENERGY}, {TIME})"))),
    }
}

/// Integrand of `-i H(t) U_t`: `-i sum_eps D_eps (N_{eps,1-eps} + B_{1-eps,eps} + B+_{eps,1-eps})(E,t) U_t`.
pub fn hamiltonian_integrand() -> Expr {
    let mut terms = Vec::new();
    for e in Band::BOTH {
        let f = e.flip();
        for g in [
            Generator::n_int(e, f, ENERGY, TIME),
            Generator::b_int(f, e, ENERGY, TIME),
            Generator::bdag_int(e, f, ENERGY, TIME),
        ] {
            terms.push(Term::scalar(Coeff::new(0.into(), (-1).into())).sys(SysSym::D(e)).gen(g).evol(TIME));
        }
    }
    Expr::from_terms(terms).expect("hamiltonian terms are canonical")
}

/// `[B_label(E,t), U_t] = -i sum_eps' D_eps' int dE' int_0^t ds [B_label(E,t), H_eps'(E',s)] U_s`.
pub fn integral_equation_rhs(label: Label) -> Result<Expr> {
    let x = Generator::b_int(label.0, label.1, ENERGY, TIME);
    let (ep, s) = ("Ep", "s");
    let mut terms = Vec::new();
    for e in Band::BOTH {
        let f = e.flip();
        for g in [Generator::n_int(e, f, ep, s), Generator::b_int(f, e, ep, s), Generator::bdag_int(e, f, ep, s)] {
            for ct in commutator(&x, &g, Mode::Causal)?.terms() {
                let mut t = ct.clone();
                t.coeff *= Coeff::new(0.into(), (-1).into());
                t.sys.insert(0, SysSym::D(e));
                t.word.push(Factor::Evol(s.into()));
                t.bound.push(ep.into());
                t.tbound.push((s.into(), TIME.into()));
                terms.push(t);
            }
        }
    }
    Expr::from_terms(terms)
}

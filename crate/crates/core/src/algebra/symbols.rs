//! Building blocks of the master-field algebra: variables, generators,
//! scalar atoms and system symbols.

use std::fmt;

use crate::band::Band;

/// A symbolic energy or time variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which limit of the rescaled kernel is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `delta_+(t' - t) / (i (E - E' - i0))`, time-ordered.
    Causal,
    /// `delta(t' - t) 2 pi delta(E - E')`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenKind {
    Bdag,
    N,
    B,
}

impl GenKind {
    /// Position in normal order: creators left, number middle, annihilators right.
    pub fn rank(self) -> u8 {
        match self {
            GenKind::Bdag => 0,
            GenKind::N => 1,
            GenKind::B => 2,
        }
    }
}

/// Energy arguments of a generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Energies {
    /// Doubly indexed `X(E1, E2, t)`.
    Pair(Var, Var),
    /// `int dE' X(E, E', t)`: second slot integrated (the integrated `N(E, t)`).
    Left(Var),
    /// `int dE' X(E', E, t)`: first slot integrated (the integrated `B(E, t)`).
    Right(Var),
}

impl Energies {
    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Energies::Pair(a, b) => vec![a, b],
            Energies::Left(a) | Energies::Right(a) => vec![a],
        }
    }

    fn map(&self, f: &impl Fn(&Var) -> Var) -> Energies {
        match self {
            Energies::Pair(a, b) => Energies::Pair(f(a), f(b)),
            Energies::Left(a) => Energies::Left(f(a)),
            Energies::Right(a) => Energies::Right(f(a)),
        }
    }

    fn swapped(&self) -> Energies {
        match self {
            Energies::Pair(a, b) => Energies::Pair(b.clone(), a.clone()),
            Energies::Left(a) => Energies::Right(a.clone()),
            Energies::Right(a) => Energies::Left(a.clone()),
        }
    }
}

/// `B_{e1 e2}`, `B^+_{e1 e2}` or `N_{e1 e2}` at symbolic energies and time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    kind: GenKind,
    eps: (Band, Band),
    energies: Energies,
    time: Var,
}

impl Generator {
    pub fn new(kind: GenKind, eps: (Band, Band), energies: Energies, time: Var) -> Self {
        Self { kind, eps, energies, time }
    }

    pub fn b(e1: Band, e2: Band, x1: &str, x2: &str, t: &str) -> Self {
        Self::new(GenKind::B, (e1, e2), Energies::Pair(x1.into(), x2.into()), t.into())
    }

    pub fn bdag(e1: Band, e2: Band, x1: &str, x2: &str, t: &str) -> Self {
        Self::new(GenKind::Bdag, (e1, e2), Energies::Pair(x1.into(), x2.into()), t.into())
    }

    pub fn n(e1: Band, e2: Band, x1: &str, x2: &str, t: &str) -> Self {
        Self::new(GenKind::N, (e1, e2), Energies::Pair(x1.into(), x2.into()), t.into())
    }

    /// Integrated annihilator `B_{e1 e2}(E, t) = int dE' B_{e1 e2}(E', E, t)`.
    pub fn b_int(e1: Band, e2: Band, e: &str, t: &str) -> Self {
        Self::new(GenKind::B, (e1, e2), Energies::Right(e.into()), t.into())
    }

    pub fn bdag_int(e1: Band, e2: Band, e: &str, t: &str) -> Self {
        Self::new(GenKind::Bdag, (e1, e2), Energies::Right(e.into()), t.into())
    }

    /// Integrated number generator `N_{e1 e2}(E, t) = int dE' N_{e1 e2}(E, E', t)`.
    pub fn n_int(e1: Band, e2: Band, e: &str, t: &str) -> Self {
        Self::new(GenKind::N, (e1, e2), Energies::Left(e.into()), t.into())
    }

    pub fn kind(&self) -> GenKind {
        self.kind
    }

    pub fn eps(&self) -> (Band, Band) {
        self.eps
    }

    pub fn energies(&self) -> &Energies {
        &self.energies
    }

    pub fn time(&self) -> &Var {
        &self.time
    }

    pub fn adjoint(&self) -> Generator {
        match self.kind {
            GenKind::B => Generator { kind: GenKind::Bdag, ..self.clone() },
            GenKind::Bdag => Generator { kind: GenKind::B, ..self.clone() },
            GenKind::N => Generator {
                kind: GenKind::N,
                eps: (self.eps.1, self.eps.0),
                energies: self.energies.swapped(),
                time: self.time.clone(),
            },
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        let mut v = self.energies.vars();
        v.push(&self.time);
        v
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Generator {
        Generator {
            kind: self.kind,
            eps: self.eps,
            energies: self.energies.map(f),
            time: f(&self.time),
        }
    }

    pub(crate) fn with_energies(&self, energies: Energies) -> Generator {
        Generator { energies, ..self.clone() }
    }
}

/// Commuting scalar factor of a term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `delta(Ei - Ej)`; symmetric in its arguments.
    Delta(Var, Var),
    /// `1 / (i (Ei - Ej - i0))`.
    Causal(Var, Var),
    /// `2 pi delta(Ei - Ej)`; normalised to `TwoPi * Delta` by canonicalisation.
    TwoPiDelta(Var, Var),
    /// `delta_+(t_j - t_i)` written `DPlus(later, earlier)`.
    DPlus(Var, Var),
    /// `delta(t_j - t_i)`; symmetric.
    Dirac(Var, Var),
    /// `rho_eps(E) = <g_eps, P_E g_eps>`.
    Rho(Band, Var),
    /// `w_eps(E) = <g_eps, P_E L^2 g_eps>`.
    W(Band, Var),
    /// `gamma_eps(E)`, or its complex conjugate.
    Gamma { band: Band, var: Var, conj: bool },
    /// `n_eps(E) = 1 / w_eps(E)`.
    NInv(Band, Var),
    /// The constant `2 pi`.
    TwoPi,
}

impl Atom {
    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Atom::Delta(a, b) | Atom::Causal(a, b) | Atom::TwoPiDelta(a, b) | Atom::DPlus(a, b) | Atom::Dirac(a, b) => {
                vec![a, b]
            }
            Atom::Rho(_, v) | Atom::W(_, v) | Atom::NInv(_, v) | Atom::Gamma { var: v, .. } => vec![v],
            Atom::TwoPi => vec![],
        }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Atom {
        match self {
            Atom::Delta(a, b) => Atom::Delta(f(a), f(b)),
            Atom::Causal(a, b) => Atom::Causal(f(a), f(b)),
            Atom::TwoPiDelta(a, b) => Atom::TwoPiDelta(f(a), f(b)),
            Atom::DPlus(a, b) => Atom::DPlus(f(a), f(b)),
            Atom::Dirac(a, b) => Atom::Dirac(f(a), f(b)),
            Atom::Rho(e, v) => Atom::Rho(*e, f(v)),
            Atom::W(e, v) => Atom::W(*e, f(v)),
            Atom::NInv(e, v) => Atom::NInv(*e, f(v)),
            Atom::Gamma { band, var, conj } => Atom::Gamma { band: *band, var: f(var), conj: *conj },
            Atom::TwoPi => Atom::TwoPi,
        }
    }

    /// Complex conjugate; the conjugate causal kernel is the argument swap.
    pub fn conj(&self) -> Atom {
        match self {
            Atom::Causal(a, b) => Atom::Causal(b.clone(), a.clone()),
            Atom::Gamma { band, var, conj } => Atom::Gamma { band: *band, var: var.clone(), conj: !conj },
            other => other.clone(),
        }
    }

    /// Band the variable is confined to by this atom (densities vanish off their band).
    pub fn band_constraint(&self) -> Option<(Band, &Var)> {
        match self {
            Atom::Rho(e, v) | Atom::W(e, v) | Atom::NInv(e, v) => Some((*e, v)),
            _ => None,
        }
    }

    pub fn is_energy_delta(&self) -> bool {
        matches!(self, Atom::Delta(..) | Atom::TwoPiDelta(..))
    }

    pub fn is_time_delta(&self) -> bool {
        matches!(self, Atom::DPlus(..) | Atom::Dirac(..))
    }
}

/// Noncommuting system operator symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SysSym {
    /// `D_eps`.
    D(Band),
    /// `T_eps(E)`, or its adjoint.
    T { band: Band, var: Var, dag: bool },
}

impl SysSym {
    pub fn adjoint(&self) -> SysSym {
        match self {
            SysSym::D(e) => SysSym::D(e.flip()),
            SysSym::T { band, var, dag } => SysSym::T { band: *band, var: var.clone(), dag: !dag },
        }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> SysSym {
        match self {
            SysSym::D(e) => SysSym::D(*e),
            SysSym::T { band, var, dag } => SysSym::T { band: *band, var: f(var), dag: *dag },
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        match self {
            SysSym::D(_) => vec![],
            SysSym::T { var, .. } => vec![var],
        }
    }
}

/// Noncommuting reservoir factor: a generator or the opaque evolution `U_t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Gen(Generator),
    /// `U_t`.
    Evol(Var),
    /// `U_t^dagger`.
    EvolDag(Var),
}

impl Factor {
    pub fn adjoint(&self) -> Factor {
        match self {
            Factor::Gen(g) => Factor::Gen(g.adjoint()),
            Factor::Evol(t) => Factor::EvolDag(t.clone()),
            Factor::EvolDag(t) => Factor::Evol(t.clone()),
        }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Factor {
        match self {
            Factor::Gen(g) => Factor::Gen(g.rename(f)),
            Factor::Evol(t) => Factor::Evol(f(t)),
            Factor::EvolDag(t) => Factor::EvolDag(f(t)),
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Factor::Gen(g) => g.vars(),
            Factor::Evol(t) | Factor::EvolDag(t) => vec![t],
        }
    }

    pub fn as_gen(&self) -> Option<&Generator> {
        match self {
            Factor::Gen(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_evolution(&self) -> bool {
        !matches!(self, Factor::Gen(_))
    }
}

//! Commutation relations of the master-field generators.
//!
//! Every relation is read off the rescaled pre-limit commutator, whose kernel
//! is `exp(i (t2 - t1) (Xa - Xb)) / lambda^2` with `t1`, `t2` the times of the
//! first and second argument. Its limit depends on which argument is later:
//! with the first later it is `dplus(t1, t2) causal(Xa, Xb)`, with the second
//! later `dplus(t2, t1) causal(Xb, Xa)`. Symmetric mode gives
//! `dirac(t1, t2) 2 pi delta(Xa - Xb)` in both cases.

use std::collections::BTreeSet;

use super::expr::{coeff, fresh_var, Expr, Term};
use super::symbols::{Atom, Energies, GenKind, Generator, Mode, Var};
use crate::error::{Error, Result};

/// Which argument of a commutator carries the later time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Later {
    First,
    Second,
}

impl Later {
    pub fn flip(self) -> Later {
        match self {
            Later::First => Later::Second,
            Later::Second => Later::First,
        }
    }
}

/// `[a, b]` with the first argument the later one, the reading of the
/// relations as written (`dplus(t, t')` for `[X(t), Y(t')]`).
pub fn commutator(a: &Generator, b: &Generator, mode: Mode) -> Result<Expr> {
    commutator_ordered(a, b, mode, Later::First)
}

pub fn commutator_ordered(a: &Generator, b: &Generator, mode: Mode, later: Later) -> Result<Expr> {
    let mut avoid: BTreeSet<Var> = a.vars().into_iter().chain(b.vars()).cloned().collect();
    let mut bound = Vec::new();
    let a = expand(a, &mut avoid, &mut bound);
    let b = expand(b, &mut avoid, &mut bound);
    let terms = raw(&a, &b, mode, later).into_iter().map(|mut t| {
        t.bound.extend(bound.iter().cloned());
        t
    });
    Expr::from_terms(terms)
}

/// Commutator of two expressions whose terms carry at most one generator and
/// no evolution factor, extended bilinearly from the generator table.
pub fn commutator_expr(x: &Expr, y: &Expr, mode: Mode, later: Later) -> Result<Expr> {
    let mut out = Expr::zero();
    for s in x.terms() {
        for t in y.terms() {
            if single_generator(s)?.is_none() || single_generator(t)?.is_none() {
                continue;
            }
            let mut avoid = s.var_names();
            avoid.extend(t.var_names());
            let s = s.rename_bound_apart(&mut avoid);
            let t = t.rename_bound_apart(&mut avoid);
            let g = single_generator(&s)?.cloned().expect("checked above");
            let h = single_generator(&t)?.cloned().expect("checked above");
            let mut prefactor = Term::scalar(s.coeff * t.coeff);
            prefactor.atoms = [s.atoms.clone(), t.atoms.clone()].concat();
            prefactor.sys = [s.sys.clone(), t.sys.clone()].concat();
            let c = commutator_ordered(&g, &h, mode, later)?;
            let binders = [s.bound.clone(), t.bound.clone()].concat();
            let tbinders = [s.tbound.clone(), t.tbound.clone()].concat();
            let terms = c.terms().iter().map(|ct| {
                let mut avoid2 = prefactor.var_names();
                avoid2.extend(binders.iter().cloned());
                let ct = ct.rename_bound_apart(&mut avoid2);
                let mut n = prefactor.clone();
                n.coeff *= ct.coeff;
                n.atoms.extend(ct.atoms);
                n.word = ct.word;
                n.bound = [binders.clone(), ct.bound].concat();
                n.tbound = [tbinders.clone(), ct.tbound].concat();
                n
            });
            out = out.add(&Expr::from_terms(terms.collect::<Vec<_>>())?);
        }
    }
    Ok(out)
}

fn single_generator(t: &Term) -> Result<Option<&Generator>> {
    if t.word.iter().any(|f| f.is_evolution()) || t.word.len() > 1 {
        return Err(Error::IllFormed("bilinear commutator needs terms linear in the generators".into()));
    }
    Ok(t.generators().next())
}

/// Replaces an integrated slot by a fresh bound variable.
pub(crate) fn expand(g: &Generator, avoid: &mut BTreeSet<Var>, bound: &mut Vec<Var>) -> Generator {
    let mut fresh = || {
        let v = fresh_var(avoid);
        avoid.insert(v.clone());
        bound.push(v.clone());
        v
    };
    match g.energies() {
        Energies::Pair(..) => g.clone(),
        Energies::Left(e) => g.with_energies(Energies::Pair(e.clone(), fresh())),
        Energies::Right(e) => g.with_energies(Energies::Pair(fresh(), e.clone())),
    }
}

fn kernel(mode: Mode, later: Later, t1: &Var, t2: &Var, xa: &Var, xb: &Var) -> [Atom; 2] {
    match (mode, later) {
        (Mode::Symmetric, _) => [Atom::Dirac(t1.clone(), t2.clone()), Atom::TwoPiDelta(xa.clone(), xb.clone())],
        (Mode::Causal, Later::First) => [Atom::DPlus(t1.clone(), t2.clone()), Atom::Causal(xa.clone(), xb.clone())],
        (Mode::Causal, Later::Second) => [Atom::DPlus(t2.clone(), t1.clone()), Atom::Causal(xb.clone(), xa.clone())],
    }
}

fn pair(g: &Generator) -> (&Var, &Var) {
    match g.energies() {
        Energies::Pair(a, b) => (a, b),
        _ => unreachable!("generators are expanded before the table lookup"),
    }
}

fn raw(a: &Generator, b: &Generator, mode: Mode, later: Later) -> Vec<Term> {
    use GenKind::*;
    match (a.kind(), b.kind()) {
        (B, B) | (Bdag, Bdag) => vec![],
        (B, Bdag) => b_bdag(a, b, mode, later),
        (B, N) => b_n(a, b, mode, later),
        (N, N) => n_n(a, b, mode, later),
        (Bdag, B) | (N, B) | (N, Bdag) => negate(raw(b, a, mode, later.flip())),
        // [B+_x, N_y] = -([B_x, N_y^+])^+ with the same time order.
        (Bdag, N) => negate(raw(&a.adjoint(), &b.adjoint(), mode, later).iter().map(Term::adjoint).collect()),
    }
}

fn negate(terms: Vec<Term>) -> Vec<Term> {
    terms.into_iter().map(|t| t.times(coeff(-1, 0))).collect()
}

fn b_bdag(a: &Generator, b: &Generator, mode: Mode, later: Later) -> Vec<Term> {
    let ((e1, e2), (e3, e4)) = (a.eps(), b.eps());
    if e1 != e3 || e2 != e4 {
        return vec![];
    }
    let ((x1, x2), (x3, x4)) = (pair(a), pair(b));
    let [k1, k2] = kernel(mode, later, a.time(), b.time(), x1, x2);
    vec![Term::one()
        .atom(k1)
        .atom(k2)
        .atom(Atom::Delta(x1.clone(), x3.clone()))
        .atom(Atom::Delta(x2.clone(), x4.clone()))
        .atom(Atom::Rho(e1, x1.clone()))
        .atom(Atom::W(e2, x2.clone()))]
}

fn b_n(a: &Generator, b: &Generator, mode: Mode, later: Later) -> Vec<Term> {
    let ((e1, e2), (e3, e4)) = (a.eps(), b.eps());
    if e1 != e3 {
        return vec![];
    }
    let ((x1, x2), (x3, x4)) = (pair(a), pair(b));
    let [k1, k2] = kernel(mode, later, a.time(), b.time(), x1, x2);
    let out = Generator::new(GenKind::B, (e4, e2), Energies::Pair(x4.clone(), x2.clone()), b.time().clone());
    vec![Term::one()
        .atom(k1)
        .atom(k2)
        .atom(Atom::Delta(x1.clone(), x3.clone()))
        .atom(Atom::Rho(e1, x1.clone()))
        .gen(out)]
}

fn n_n(a: &Generator, b: &Generator, mode: Mode, later: Later) -> Vec<Term> {
    let ((e1, e2), (e3, e4)) = (a.eps(), b.eps());
    let ((x1, x2), (x3, x4)) = (pair(a), pair(b));
    let [k1, k2] = kernel(mode, later, a.time(), b.time(), x3, x1);
    let mut out = Vec::new();
    if e2 == e3 {
        let g = Generator::new(GenKind::N, (e1, e4), Energies::Pair(x1.clone(), x4.clone()), b.time().clone());
        out.push(
            Term::one()
                .atom(k1.clone())
                .atom(k2.clone())
                .atom(Atom::Delta(x2.clone(), x3.clone()))
                .atom(Atom::Rho(e2, x2.clone()))
                .gen(g),
        );
    }
    if e1 == e4 {
        let g = Generator::new(GenKind::N, (e3, e2), Energies::Pair(x3.clone(), x2.clone()), a.time().clone());
        out.push(
            Term::scalar(coeff(-1, 0))
                .atom(k1)
                .atom(k2)
                .atom(Atom::Delta(x1.clone(), x4.clone()))
                .atom(Atom::Rho(e1, x1.clone()))
                .gen(g),
        );
    }
    out
}

//! Closed-form integrands written with `T_eps(E)`, as symbolic expressions.

use crate::algebra::{coeff, Atom, Coeff, Expr, Generator, SysSym, Term};
use crate::band::Band;

use super::normal::{ENERGY, TIME};

fn gamma(b: Band) -> Atom {
    Atom::Gamma { band: b, var: ENERGY.into(), conj: false }
}

fn t_sym(e: Band) -> SysSym {
    SysSym::T { band: e, var: ENERGY.into(), dag: false }
}

/// `c gamma_{1-eps}(E) D_eps D_{1-eps} T_eps(E)`.
fn k(e: Band, c: Coeff) -> Term {
    Term::scalar(c).atom(gamma(e.flip())).sys(SysSym::D(e)).sys(SysSym::D(e.flip())).sys(t_sym(e))
}

/// `c i T_eps(E) D_eps`.
fn td(e: Band, c: Coeff) -> Term {
    Term::scalar(c * coeff(0, 1)).sys(t_sym(e)).sys(SysSym::D(e))
}

fn bd(l: (Band, Band)) -> Generator {
    Generator::bdag_int(l.0, l.1, ENERGY, TIME)
}

fn b(l: (Band, Band)) -> Generator {
    Generator::b_int(l.0, l.1, ENERGY, TIME)
}

fn sum(terms: Vec<Term>) -> Expr {
    Expr::from_terms(terms).expect("closed-form terms are canonical")
}

/// Integrand of `-i D_eps [B_{1-eps,eps}(t), U_t]`:
/// `-K (w_eps U - i D_eps gamma_eps U B_{1-eps,eps} + U B_{eps,eps})`.
pub fn commutator_bu(e: Band) -> Expr {
    let f = e.flip();
    let m = coeff(-1, 0);
    sum(vec![
        k(e, m).atom(Atom::W(e, ENERGY.into())).evol(TIME),
        k(e, m * coeff(0, -1)).atom(gamma(e)).sys(SysSym::D(e)).evol(TIME).gen(b((f, e))),
        k(e, m).evol(TIME).gen(b((e, e))),
    ])
}

/// `-gamma_{1-eps} D_eps D_{1-eps} (w_eps U - i D_eps gamma_eps U B_{1-eps,eps} + U B_{eps,eps})`,
/// the right side of the fixed-point equation solved by `commutator_bu`.
pub fn pivot_rhs(e: Band) -> Expr {
    let f = e.flip();
    let base = |c: Coeff| Term::scalar(c).atom(gamma(f)).sys(SysSym::D(e)).sys(SysSym::D(f));
    sum(vec![
        base(coeff(-1, 0)).atom(Atom::W(e, ENERGY.into())).evol(TIME),
        base(coeff(0, 1)).atom(gamma(e)).sys(SysSym::D(e)).evol(TIME).gen(b((f, e))),
        base(coeff(-1, 0)).evol(TIME).gen(b((e, e))),
    ])
}

/// Integrand of `-i D_eps N_{eps,1-eps}(t) U_t` in normal order.
pub fn number_u(e: Band) -> Expr {
    let f = e.flip();
    let m = coeff(-1, 0);
    let mut terms = vec![
        k(e, m * coeff(0, -1)).atom(gamma(e)).sys(SysSym::D(e)).gen(bd((e, f))).evol(TIME),
        k(e, m).gen(bd((e, e))).evol(TIME),
    ];
    for e2 in Band::BOTH {
        let n = Atom::NInv(e2, ENERGY.into());
        terms.push(td(e, m).atom(n.clone()).gen(bd((e, e2))).evol(TIME).gen(b((f, e2))));
        terms.push(k(e, m).atom(n).gen(bd((e, e2))).evol(TIME).gen(b((e, e2))));
    }
    sum(terms)
}

/// Integrand of the normally ordered evolution equation `d/dt U_t`.
pub fn normally_ordered(with_drift: bool) -> Expr {
    let m = coeff(-1, 0);
    let mut terms = Vec::new();
    for e in Band::BOTH {
        let f = e.flip();
        for e2 in Band::BOTH {
            let n = Atom::NInv(e2, ENERGY.into());
            terms.push(td(e, m).atom(n.clone()).gen(bd((e, e2))).evol(TIME).gen(b((f, e2))));
            terms.push(k(e, m).atom(n).gen(bd((e, e2))).evol(TIME).gen(b((e, e2))));
        }
        terms.push(td(e, m).gen(bd((e, f))).evol(TIME));
        terms.push(k(e, m).gen(bd((e, e))).evol(TIME));
        terms.push(td(e, m).evol(TIME).gen(b((f, e))));
        terms.push(k(e, m).evol(TIME).gen(b((e, e))));
        if with_drift {
            terms.push(k(e, m).atom(Atom::W(e, ENERGY.into())).evol(TIME));
        }
    }
    sum(terms)
}

//! Normal ordering, vacuum expectation and the number-operator expansion.

use std::collections::BTreeSet;

use super::commutator::{commutator_ordered, expand, Later};
use super::expr::{Expr, Term};
use super::symbols::{Atom, Energies, Factor, GenKind, Generator, Mode, Var};
use crate::band::Band;
use crate::error::{Error, Result};

/// Known time relations used when reordering. A variable integrated over
/// `[0, t]` is automatically earlier than `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimeOrdering {
    earlier: BTreeSet<(Var, Var)>,
}

impl TimeOrdering {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `s` earlier than `t`.
    pub fn with(mut self, s: &str, t: &str) -> Self {
        self.earlier.insert((s.into(), t.into()));
        self
    }

    fn is_earlier(&self, s: &Var, t: &Var, term: &Term) -> bool {
        s != t
            && (self.earlier.contains(&(s.clone(), t.clone()))
                || term.tbound.iter().any(|(v, up)| v == s && up == t))
    }
}

pub fn normal_order(x: &Expr, mode: Mode) -> Result<Expr> {
    normal_order_with(x, mode, &TimeOrdering::default())
}

/// Brings every noise word to the order `B+ ... N ... B`, treating `U` as a
/// barrier that an annihilator (creator) crosses to the right (left) only
/// when its time is known to be later. Adjacent generators are swapped with
/// the left one taken as the later, unless the ordering says otherwise.
pub fn normal_order_with(x: &Expr, mode: Mode, order: &TimeOrdering) -> Result<Expr> {
    let mut stack: Vec<Term> = x.terms().to_vec();
    let mut done = Vec::new();
    let mut steps = 0usize;
    while let Some(term) = stack.pop() {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::IllFormed("normal ordering did not terminate".into()));
        }
        match first_disorder(&term, order) {
            None => done.push(term),
            Some(Step::Cross(i)) => {
                let mut t = term.clone();
                t.word.swap(i, i + 1);
                stack.push(t);
            }
            Some(Step::Swap(i)) => {
                let (a, b) = match (&term.word[i], &term.word[i + 1]) {
                    (Factor::Gen(a), Factor::Gen(b)) => (a.clone(), b.clone()),
                    _ => unreachable!(),
                };
                let later = if order.is_earlier(a.time(), b.time(), &term) { Later::Second } else { Later::First };
                let mut swapped = term.clone();
                swapped.word.swap(i, i + 1);
                stack.push(swapped);
                for ct in commutator_ordered(&a, &b, mode, later)?.terms() {
                    stack.extend(splice(&term, i, ct)?);
                }
            }
        }
    }
    Expr::from_terms(done)
}

enum Step {
    Swap(usize),
    Cross(usize),
}

fn first_disorder(term: &Term, order: &TimeOrdering) -> Option<Step> {
    for i in 0..term.word.len().saturating_sub(1) {
        match (&term.word[i], &term.word[i + 1]) {
            (Factor::Gen(a), Factor::Gen(b)) if a.kind().rank() > b.kind().rank() => return Some(Step::Swap(i)),
            (Factor::Gen(a), Factor::Evol(s)) if a.kind() == GenKind::B && order.is_earlier(s, a.time(), term) => {
                return Some(Step::Cross(i))
            }
            (Factor::Evol(s), Factor::Gen(b)) if b.kind() == GenKind::Bdag && order.is_earlier(s, b.time(), term) => {
                return Some(Step::Cross(i))
            }
            _ => {}
        }
    }
    None
}

/// Replaces the generator pair at `i, i+1` by the commutator term `ct`.
fn splice(term: &Term, i: usize, ct: &Term) -> Result<Option<Term>> {
    let mut avoid = term.var_names();
    let ct = ct.rename_bound_apart(&mut avoid);
    let mut t = term.clone();
    t.coeff *= ct.coeff;
    t.atoms.extend(ct.atoms);
    t.bound.extend(ct.bound);
    t.tbound.extend(ct.tbound);
    t.word.splice(i..i + 2, ct.word);
    t.canonical()
}

/// Vacuum expectation: normal-orders and drops every term annihilated by
/// the vacuum on either side.
pub fn vacuum_expectation(x: &Expr, mode: Mode) -> Result<Expr> {
    vacuum_expectation_with(x, mode, &TimeOrdering::default())
}

pub fn vacuum_expectation_with(x: &Expr, mode: Mode, order: &TimeOrdering) -> Result<Expr> {
    let ordered = normal_order_with(x, mode, order)?;
    let mut kept = Vec::new();
    for t in ordered.terms() {
        if t.generators().next().is_none() {
            kept.push(t.clone());
            continue;
        }
        let kills_left = matches!(t.word.first(), Some(Factor::Gen(g)) if g.kind() != GenKind::B);
        let kills_right = matches!(t.word.last(), Some(Factor::Gen(g)) if g.kind() != GenKind::Bdag);
        if !(kills_left || kills_right) {
            return Err(Error::IllFormed(
                "vacuum expectation needs a commutator of U with a generator".into(),
            ));
        }
    }
    Expr::from_terms(kept)
}

/// Replaces each `N_{e1 e2}(E1, E2, t)` by
/// `sum_e' int dE n_e'(E1) B+_{e1 e'}(E, E1, t) B_{e2 e'}(E2, E1, t)`.
pub fn expand_number(x: &Expr) -> Result<Expr> {
    x.map_terms(|t| {
        let mut todo = vec![t.clone()];
        let mut out = Vec::new();
        while let Some(t) = todo.pop() {
            let Some(pos) = t.word.iter().position(|f| matches!(f, Factor::Gen(g) if g.kind() == GenKind::N)) else {
                out.push(t);
                continue;
            };
            let Factor::Gen(n) = &t.word[pos] else { unreachable!() };
            let mut avoid = t.var_names();
            let mut bound = Vec::new();
            let n = expand(n, &mut avoid, &mut bound);
            let Energies::Pair(x1, x2) = n.energies().clone() else { unreachable!() };
            let fresh = super::expr::fresh_var(&avoid);
            bound.push(fresh.clone());
            let (e1, e2) = n.eps();
            for ep in Band::BOTH {
                let creator = Generator::new(
                    GenKind::Bdag,
                    (e1, ep),
                    Energies::Pair(fresh.clone(), x1.clone()),
                    n.time().clone(),
                );
                let annihilator =
                    Generator::new(GenKind::B, (e2, ep), Energies::Pair(x2.clone(), x1.clone()), n.time().clone());
                let mut nt = t.clone();
                nt.atoms.push(Atom::NInv(ep, x1.clone()));
                nt.bound.extend(bound.iter().cloned());
                nt.word.splice(pos..pos + 1, [Factor::Gen(creator), Factor::Gen(annihilator)]);
                todo.push(nt);
            }
        }
        Ok(out)
    })
}

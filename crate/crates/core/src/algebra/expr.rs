//! Terms and expressions of the algebra with exact coefficients, and their
//! canonical form.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, Zero};

use super::symbols::{Atom, Energies, Factor, GenKind, Generator, SysSym, Var};
use crate::error::{Error, Result};

/// Exact complex rational coefficient.
pub type Coeff = Complex<Rational64>;

pub fn coeff(re: i64, im: i64) -> Coeff {
    Complex::new(Rational64::from_integer(re), Rational64::from_integer(im))
}

pub fn coeff_ratio(num: i64, den: i64) -> Coeff {
    Complex::new(Rational64::new(num, den), Rational64::zero())
}

/// A variable that is integrated over inside a term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binder {
    /// `int dE` over the whole energy axis.
    Energy(Var),
    /// `int_0^upper ds`.
    Time { var: Var, upper: Var },
}

/// `coeff * int(...) * scalars * sys word * noise word`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub(crate) coeff: Coeff,
    pub(crate) atoms: Vec<Atom>,
    pub(crate) sys: Vec<SysSym>,
    pub(crate) word: Vec<Factor>,
    pub(crate) bound: Vec<Var>,
    pub(crate) tbound: Vec<(Var, Var)>,
}

type TermKey = (Vec<Atom>, Vec<SysSym>, Vec<Factor>, Vec<Var>, Vec<(Var, Var)>);

impl Term {
    pub fn one() -> Self {
        Self::scalar(Coeff::one())
    }

    pub fn scalar(c: Coeff) -> Self {
        Term { coeff: c, atoms: vec![], sys: vec![], word: vec![], bound: vec![], tbound: vec![] }
    }

    pub fn atom(mut self, a: Atom) -> Self {
        self.atoms.push(a);
        self
    }

    pub fn sys(mut self, s: SysSym) -> Self {
        self.sys.push(s);
        self
    }

    pub fn gen(mut self, g: Generator) -> Self {
        self.word.push(Factor::Gen(g));
        self
    }

    pub fn factor(mut self, f: Factor) -> Self {
        self.word.push(f);
        self
    }

    pub fn evol(self, t: &str) -> Self {
        self.factor(Factor::Evol(t.into()))
    }

    pub fn bind(mut self, v: &str) -> Self {
        self.bound.push(v.into());
        self
    }

    pub fn bind_time(mut self, s: &str, upper: &str) -> Self {
        self.tbound.push((s.into(), upper.into()));
        self
    }

    pub fn times(mut self, c: Coeff) -> Self {
        self.coeff *= c;
        self
    }

    pub fn coeff(&self) -> Coeff {
        self.coeff
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn sys_word(&self) -> &[SysSym] {
        &self.sys
    }

    pub fn word(&self) -> &[Factor] {
        &self.word
    }

    pub fn bound(&self) -> &[Var] {
        &self.bound
    }

    pub fn time_bound(&self) -> &[(Var, Var)] {
        &self.tbound
    }

    pub fn generators(&self) -> impl Iterator<Item = &Generator> {
        self.word.iter().filter_map(Factor::as_gen)
    }

    fn key(&self) -> TermKey {
        (self.atoms.clone(), self.sys.clone(), self.word.clone(), self.bound.clone(), self.tbound.clone())
    }

    /// Every variable occurrence outside the binder lists.
    fn occurrences(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        for a in &self.atoms {
            out.extend(a.vars());
        }
        for s in &self.sys {
            out.extend(s.vars());
        }
        for f in &self.word {
            out.extend(f.vars());
        }
        for (_, up) in &self.tbound {
            out.push(up);
        }
        out
    }

    pub(crate) fn var_names(&self) -> BTreeSet<Var> {
        let mut s: BTreeSet<Var> = self.occurrences().into_iter().cloned().collect();
        s.extend(self.bound.iter().cloned());
        s.extend(self.tbound.iter().map(|(v, _)| v.clone()));
        s
    }

    fn count(&self, v: &Var) -> usize {
        self.occurrences().into_iter().filter(|x| *x == v).count()
    }

    pub(crate) fn rename(&self, f: &impl Fn(&Var) -> Var) -> Term {
        Term {
            coeff: self.coeff,
            atoms: self.atoms.iter().map(|a| a.rename(f)).collect(),
            sys: self.sys.iter().map(|s| s.rename(f)).collect(),
            word: self.word.iter().map(|x| x.rename(f)).collect(),
            bound: self.bound.iter().map(f).collect(),
            tbound: self.tbound.iter().map(|(s, u)| (f(s), f(u))).collect(),
        }
    }

    fn subst(&mut self, from: &Var, to: &Var) {
        let f = |v: &Var| if v == from { to.clone() } else { v.clone() };
        *self = self.rename(&f);
    }

    /// Renames every bound variable to a fresh name not in `avoid`, adding the
    /// new names to `avoid`.
    pub(crate) fn rename_bound_apart(&self, avoid: &mut BTreeSet<Var>) -> Term {
        let mut map = BTreeMap::new();
        let binders: Vec<Var> =
            self.bound.iter().cloned().chain(self.tbound.iter().map(|(s, _)| s.clone())).collect();
        for v in binders {
            let fresh = fresh_var(avoid);
            avoid.insert(fresh.clone());
            map.insert(v, fresh);
        }
        self.rename(&|v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone()))
    }

    pub fn adjoint(&self) -> Term {
        Term {
            coeff: self.coeff.conj(),
            atoms: self.atoms.iter().map(Atom::conj).collect(),
            sys: self.sys.iter().rev().map(SysSym::adjoint).collect(),
            word: self.word.iter().rev().map(Factor::adjoint).collect(),
            bound: self.bound.clone(),
            tbound: self.tbound.clone(),
        }
    }

    /// Product `self * other`; the system word of `other` is moved left past
    /// the noise word of `self`, which is only allowed when no `U` is crossed.
    pub fn mul(&self, other: &Term) -> Result<Term> {
        if !other.sys.is_empty() && self.word.iter().any(Factor::is_evolution) {
            return Err(Error::IllFormed("system operator would have to move past U".into()));
        }
        let mut avoid: BTreeSet<Var> = self.var_names();
        avoid.extend(other.var_names());
        let a = self.rename_bound_apart(&mut avoid);
        let b = other.rename_bound_apart(&mut avoid);
        Ok(Term {
            coeff: a.coeff * b.coeff,
            atoms: [a.atoms, b.atoms].concat(),
            sys: [a.sys, b.sys].concat(),
            word: [a.word, b.word].concat(),
            bound: [a.bound, b.bound].concat(),
            tbound: [a.tbound, b.tbound].concat(),
        })
    }

    /// Canonical form, or `None` when the term vanishes.
    pub fn canonical(&self) -> Result<Option<Term>> {
        let mut t = self.clone();
        if t.coeff.is_zero() {
            return Ok(None);
        }
        t.bound.retain({
            let mut seen = BTreeSet::new();
            move |v| seen.insert(v.clone())
        });
        let mut atoms = Vec::with_capacity(t.atoms.len());
        for a in t.atoms.drain(..) {
            match a {
                Atom::TwoPiDelta(x, y) => {
                    atoms.push(Atom::TwoPi);
                    atoms.push(Atom::Delta(x, y));
                }
                a => atoms.push(a),
            }
        }
        t.atoms = atoms;
        loop {
            if t.contract_energy()? || t.contract_time() || t.fold_gamma() || t.fold_generators() {
                continue;
            }
            break;
        }
        let energy_cycle = t.merge_energy_classes();
        let time_cycle = t.merge_time_classes();
        if t.band_conflict() {
            return Ok(None);
        }
        if let Some(msg) = energy_cycle.or(time_cycle) {
            return Err(Error::KernelProduct(msg));
        }
        if let Some(Atom::Causal(a, _)) = t.atoms.iter().find(|a| matches!(a, Atom::Causal(x, y) if x == y)) {
            return Err(Error::KernelProduct(format!("causal kernel at coincident energies {a}")));
        }
        t.cancel_n_w();
        t.sort_commuting_runs();
        t.rename_bound_canonically();
        t.atoms.sort();
        t.bound.sort();
        t.tbound.sort();
        Ok(Some(t))
    }

    fn contract_energy(&mut self) -> Result<bool> {
        for (i, a) in self.atoms.iter().enumerate() {
            let Atom::Delta(x, y) = a else { continue };
            let (v, other) = if self.bound.contains(x) {
                (x.clone(), y.clone())
            } else if self.bound.contains(y) {
                (y.clone(), x.clone())
            } else {
                continue;
            };
            if v == other {
                return Err(Error::KernelProduct(format!("delta({v}-{v}) under the integral over {v}")));
            }
            self.atoms.remove(i);
            self.bound.retain(|b| *b != v);
            self.subst(&v, &other);
            return Ok(true);
        }
        Ok(false)
    }

    fn contract_time(&mut self) -> bool {
        for (k, (s, up)) in self.tbound.iter().enumerate() {
            let found = self.atoms.iter().enumerate().find_map(|(i, a)| match a {
                Atom::DPlus(l, e) if l == up && e == s => Some((i, Coeff::one())),
                Atom::Dirac(a, b) if (a == up && b == s) || (a == s && b == up) => Some((i, coeff_ratio(1, 2))),
                _ => None,
            });
            if let Some((i, w)) = found {
                let (s, up) = (s.clone(), up.clone());
                self.atoms.remove(i);
                self.tbound.remove(k);
                self.coeff *= w;
                self.subst(&s, &up);
                return true;
            }
        }
        false
    }

    /// `int dv rho_eps(v) causal(v, E) = gamma_eps(E)`; the swapped kernel
    /// gives the conjugate.
    fn fold_gamma(&mut self) -> bool {
        for v in self.bound.clone() {
            if self.count(&v) != 2 {
                continue;
            }
            let rho = self.atoms.iter().position(|a| matches!(a, Atom::Rho(_, x) if *x == v));
            let causal = self.atoms.iter().position(|a| match a {
                Atom::Causal(x, y) => (*x == v) != (*y == v),
                _ => false,
            });
            let (Some(ri), Some(ci)) = (rho, causal) else { continue };
            let Atom::Rho(band, _) = self.atoms[ri].clone() else { unreachable!() };
            let Atom::Causal(x, y) = self.atoms[ci].clone() else { unreachable!() };
            let (var, conj) = if x == v { (y, false) } else { (x, true) };
            self.atoms.retain(|a| !a.vars().contains(&&v));
            self.atoms.push(Atom::Gamma { band, var, conj });
            self.bound.retain(|b| *b != v);
            return true;
        }
        false
    }

    /// `int dv X(v, E) = X(E)` integrated in the first slot, `int dv X(E, v)`
    /// integrated in the second.
    fn fold_generators(&mut self) -> bool {
        for v in self.bound.clone() {
            if self.count(&v) != 1 {
                continue;
            }
            for f in self.word.iter_mut() {
                let Factor::Gen(g) = f else { continue };
                let folded = match g.energies() {
                    Energies::Pair(a, b) if *a == v => Energies::Right(b.clone()),
                    Energies::Pair(a, b) if *b == v => Energies::Left(a.clone()),
                    _ => continue,
                };
                *g = g.with_energies(folded);
                self.bound.retain(|b| *b != v);
                return true;
            }
        }
        false
    }

    /// Identifies free energy variables tied by deltas and rewrites the deltas
    /// as a star around the smallest name. Returns a message on a cycle.
    fn merge_energy_classes(&mut self) -> Option<String> {
        let edges: Vec<(Var, Var)> = self
            .atoms
            .iter()
            .filter_map(|a| match a {
                Atom::Delta(x, y) => Some((x.clone(), y.clone())),
                _ => None,
            })
            .collect();
        if edges.is_empty() {
            return None;
        }
        let (classes, cycle) = union_classes(&edges);
        self.atoms.retain(|a| !matches!(a, Atom::Delta(..)));
        let rep = representative_map(&classes);
        *self = self.rename(&|v: &Var| rep.get(v).cloned().unwrap_or_else(|| v.clone()));
        for class in &classes {
            let r = &class[0];
            for m in &class[1..] {
                self.atoms.push(Atom::Delta(r.clone(), m.clone()));
            }
        }
        cycle.map(|(a, b)| format!("repeated energy delta linking {a} and {b}"))
    }

    fn merge_time_classes(&mut self) -> Option<String> {
        let bound_times: BTreeSet<Var> = self.tbound.iter().map(|(s, _)| s.clone()).collect();
        let mut edges = Vec::new();
        let mut keep = Vec::new();
        let mut time_atoms = Vec::new();
        for a in self.atoms.drain(..) {
            match &a {
                Atom::DPlus(x, y) | Atom::Dirac(x, y) if !bound_times.contains(x) && !bound_times.contains(y) => {
                    edges.push((x.clone(), y.clone()));
                    time_atoms.push(a);
                }
                _ => keep.push(a),
            }
        }
        self.atoms = keep;
        if edges.is_empty() {
            return None;
        }
        let (classes, cycle) = union_classes(&edges);
        let rep = representative_map(&classes);
        *self = self.rename(&|v: &Var| rep.get(v).cloned().unwrap_or_else(|| v.clone()));
        let all_dirac = time_atoms.iter().all(|a| matches!(a, Atom::Dirac(..)));
        if all_dirac {
            for class in &classes {
                for m in &class[1..] {
                    self.atoms.push(Atom::Dirac(class[0].clone(), m.clone()));
                }
            }
        } else {
            self.atoms.extend(time_atoms);
        }
        cycle.map(|(a, b)| format!("repeated time delta linking {a} and {b}"))
    }

    /// Densities vanish off their band, the bands have disjoint supports, and
    /// each generator slot `E` of label `eps` carries `P_E g_eps`.
    fn band_conflict(&self) -> bool {
        let mut constraints: Vec<(crate::band::Band, &Var)> =
            self.atoms.iter().filter_map(Atom::band_constraint).collect();
        for g in self.generators() {
            let (e1, e2) = g.eps();
            match g.energies() {
                Energies::Pair(a, b) => constraints.extend([(e1, a), (e2, b)]),
                Energies::Left(a) => constraints.push((e1, a)),
                Energies::Right(b) => constraints.push((e2, b)),
            }
        }
        let mut seen: BTreeMap<&Var, crate::band::Band> = BTreeMap::new();
        constraints.into_iter().any(|(band, v)| seen.insert(v, band).is_some_and(|prev| prev != band))
    }

    fn cancel_n_w(&mut self) {
        loop {
            let hit = self.atoms.iter().enumerate().find_map(|(i, a)| match a {
                Atom::NInv(e, v) => {
                    self.atoms.iter().position(|b| *b == Atom::W(*e, v.clone())).map(|j| (i, j))
                }
                _ => None,
            });
            let Some((i, j)) = hit else { break };
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            self.atoms.remove(hi);
            self.atoms.remove(lo);
        }
    }

    /// Annihilators commute among themselves, and so do creators.
    fn sort_commuting_runs(&mut self) {
        let mut i = 0;
        while i < self.word.len() {
            let kind = match &self.word[i] {
                Factor::Gen(g) if g.kind() != GenKind::N => g.kind(),
                _ => {
                    i += 1;
                    continue;
                }
            };
            let mut j = i;
            while j < self.word.len() && matches!(&self.word[j], Factor::Gen(g) if g.kind() == kind) {
                j += 1;
            }
            self.word[i..j].sort();
            i = j;
        }
    }

    fn rename_bound_canonically(&mut self) {
        let binders: BTreeSet<Var> =
            self.bound.iter().cloned().chain(self.tbound.iter().map(|(s, _)| s.clone())).collect();
        if binders.is_empty() {
            return;
        }
        let mask = |v: &Var| if binders.contains(v) { Var::new("~") } else { v.clone() };
        let mut atoms: Vec<(Atom, Atom)> = self.atoms.iter().map(|a| (a.rename(&mask), a.clone())).collect();
        atoms.sort();
        let mut order: Vec<Var> = Vec::new();
        let mut visit = |v: &Var| {
            if binders.contains(v) && !order.contains(v) {
                order.push(v.clone());
            }
        };
        for (_, a) in &atoms {
            a.vars().into_iter().for_each(&mut visit);
        }
        for s in &self.sys {
            s.vars().into_iter().for_each(&mut visit);
        }
        for f in &self.word {
            f.vars().into_iter().for_each(&mut visit);
        }
        let mut rest: Vec<(Var, Var)> = self.tbound.iter().map(|(s, u)| (mask(u), s.clone())).collect();
        rest.sort();
        for (_, s) in &rest {
            visit(s);
        }
        for v in binders.iter() {
            visit(v);
        }
        let map: BTreeMap<Var, Var> =
            order.into_iter().enumerate().map(|(k, v)| (v, Var::new(format!("~{k}")))).collect();
        *self = self.rename(&|v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone()));
    }
}

fn union_classes(edges: &[(Var, Var)]) -> (Vec<Vec<Var>>, Option<(Var, Var)>) {
    let mut parent: BTreeMap<Var, Var> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<Var, Var>, v: &Var) -> Var {
        let p = parent.entry(v.clone()).or_insert_with(|| v.clone()).clone();
        if p == *v {
            return p;
        }
        let r = find(parent, &p);
        parent.insert(v.clone(), r.clone());
        r
    }
    let mut cycle = None;
    for (a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra == rb {
            cycle.get_or_insert((a.clone(), b.clone()));
        } else {
            parent.insert(ra, rb);
        }
    }
    let mut groups: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    let keys: Vec<Var> = parent.keys().cloned().collect();
    for v in keys {
        let r = find(&mut parent, &v);
        groups.entry(r).or_default().push(v);
    }
    let classes = groups
        .into_values()
        .map(|mut c| {
            c.sort();
            c
        })
        .collect();
    (classes, cycle)
}

fn representative_map(classes: &[Vec<Var>]) -> BTreeMap<Var, Var> {
    classes.iter().flat_map(|c| c.iter().map(move |v| (v.clone(), c[0].clone()))).collect()
}

pub(crate) fn fresh_var(avoid: &BTreeSet<Var>) -> Var {
    (0..).map(|k| Var::new(format!("#{k}"))).find(|v| !avoid.contains(v)).expect("unbounded")
}

/// A finite sum of terms kept in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr { terms: vec![Term::one()] }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let mut merged: BTreeMap<TermKey, Term> = BTreeMap::new();
        for t in terms {
            let Some(c) = t.canonical()? else { continue };
            merged
                .entry(c.key())
                .and_modify(|e| e.coeff += c.coeff)
                .or_insert(c);
        }
        Ok(Expr { terms: merged.into_values().filter(|t| !t.coeff.is_zero()).collect() })
    }

    pub fn term(t: Term) -> Result<Self> {
        Self::from_terms([t])
    }

    pub fn generator(g: Generator) -> Self {
        Self::term(Term::one().gen(g)).expect("a bare generator is canonical")
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut merged: BTreeMap<TermKey, Term> = BTreeMap::new();
        for t in self.terms.iter().chain(&other.terms) {
            merged.entry(t.key()).and_modify(|e| e.coeff += t.coeff).or_insert_with(|| t.clone());
        }
        Expr { terms: merged.into_values().filter(|t| !t.coeff.is_zero()).collect() }
    }

    pub fn scale(&self, c: Coeff) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|t| t.clone().times(c)).collect() }
    }

    pub fn neg(&self) -> Expr {
        self.scale(coeff(-1, 0))
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Result<Expr> {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.mul(b)?);
            }
        }
        Expr::from_terms(out)
    }

    pub fn adjoint(&self) -> Expr {
        Expr::from_terms(self.terms.iter().map(Term::adjoint))
            .expect("adjoint preserves the delta structure of canonical terms")
    }

    /// Re-canonicalises after a term-wise rewrite.
    pub fn map_terms(&self, f: impl Fn(&Term) -> Result<Vec<Term>>) -> Result<Expr> {
        let mut out = Vec::new();
        for t in &self.terms {
            out.extend(f(t)?);
        }
        Expr::from_terms(out)
    }

    /// Integrates every term over the given variables and eliminates the
    /// deltas that bind them.
    pub fn contract(&self, binders: &[Binder]) -> Result<Expr> {
        self.map_terms(|t| {
            let mut t = t.clone();
            let names = t.var_names();
            for b in binders {
                match b {
                    Binder::Energy(v) if names.contains(v) => t.bound.push(v.clone()),
                    Binder::Time { var, upper } if names.contains(var) => {
                        t.tbound.push((var.clone(), upper.clone()))
                    }
                    _ => {}
                }
            }
            Ok(vec![t])
        })
    }

    /// The symmetric-mode image: `dplus -> dirac`, `causal -> 2 pi delta`,
    /// `gamma -> 2 pi rho`.
    pub fn to_symmetric(&self) -> Result<Expr> {
        self.map_terms(|t| {
            let mut t = t.clone();
            let mut atoms = Vec::new();
            for a in t.atoms.drain(..) {
                match a {
                    Atom::DPlus(x, y) => atoms.push(Atom::Dirac(x, y)),
                    Atom::Causal(x, y) => atoms.push(Atom::TwoPiDelta(x, y)),
                    Atom::Gamma { band, var, .. } => {
                        atoms.push(Atom::TwoPi);
                        atoms.push(Atom::Rho(band, var));
                    }
                    a => atoms.push(a),
                }
            }
            t.atoms = atoms;
            Ok(vec![t])
        })
    }
}

/// Integrates the energy variables named in `bound` out of every term.
pub fn contract_deltas(x: &Expr, bound: &[Binder]) -> Result<Expr> {
    x.contract(bound)
}

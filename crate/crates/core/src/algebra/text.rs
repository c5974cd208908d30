//! Canonical text form of expressions.
//!
//! A term is a `" * "`-separated list: the coefficient `(re,im)` with
//! rational parts, binders `int(E)` and `int0(s,t)`, scalar atoms, system
//! symbols and the noise word. Terms are joined by `" + "`; the empty sum is
//! `0`. Generators read `B01(E1,E2;t)`, with `*` marking an integrated slot.

use std::fmt;

use num_complex::Complex;
use num_rational::Rational64;

use super::expr::{Coeff, Expr, Term};
use super::symbols::{Atom, Energies, Factor, GenKind, Generator, SysSym, Var};
use crate::band::Band;
use crate::error::{Error, Result};

fn fmt_rational(r: &Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    format!("({},{})", fmt_rational(&c.re), fmt_rational(&c.im))
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Delta(a, b) => write!(f, "delta({a},{b})"),
            Atom::Causal(a, b) => write!(f, "causal({a},{b})"),
            Atom::TwoPiDelta(a, b) => write!(f, "tpdelta({a},{b})"),
            Atom::DPlus(a, b) => write!(f, "dplus({a},{b})"),
            Atom::Dirac(a, b) => write!(f, "dirac({a},{b})"),
            Atom::Rho(e, v) => write!(f, "rho{e}({v})"),
            Atom::W(e, v) => write!(f, "w{e}({v})"),
            Atom::NInv(e, v) => write!(f, "n{e}({v})"),
            Atom::Gamma { band, var, conj: false } => write!(f, "gamma{band}({var})"),
            Atom::Gamma { band, var, conj: true } => write!(f, "gammac{band}({var})"),
            Atom::TwoPi => write!(f, "2pi"),
        }
    }
}

impl fmt::Display for SysSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SysSym::D(e) => write!(f, "D{e}"),
            SysSym::T { band, var, dag: false } => write!(f, "T{band}({var})"),
            SysSym::T { band, var, dag: true } => write!(f, "Tdag{band}({var})"),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind() {
            GenKind::B => "B",
            GenKind::Bdag => "Bd",
            GenKind::N => "N",
        };
        let (e1, e2) = self.eps();
        let slots = match self.energies() {
            Energies::Pair(a, b) => format!("{a},{b}"),
            Energies::Left(a) => format!("{a},*"),
            Energies::Right(b) => format!("*,{b}"),
        };
        write!(f, "{name}{e1}{e2}({slots};{})", self.time())
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Gen(g) => write!(f, "{g}"),
            Factor::Evol(t) => write!(f, "U({t})"),
            Factor::EvolDag(t) => write!(f, "Ud({t})"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![fmt_coeff(&self.coeff)];
        parts.extend(self.bound.iter().map(|v| format!("int({v})")));
        parts.extend(self.tbound.iter().map(|(s, t)| format!("int0({s},{t})")));
        parts.extend(self.atoms.iter().map(|a| a.to_string()));
        parts.extend(self.sys.iter().map(|s| s.to_string()));
        parts.extend(self.word.iter().map(|w| w.to_string()));
        f.write_str(&parts.join(" * "))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self.terms().iter().map(|t| t.to_string()).collect();
        f.write_str(&terms.join(" + "))
    }
}

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

fn parse_rational(s: &str, pos: usize) -> Result<Rational64> {
    let bad = || err(pos, format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (i64, i64) = (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(n, d))
        }
        None => Ok(Rational64::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn parse_var(s: &str, pos: usize) -> Result<Var> {
    let ok = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_'~#".contains(c));
    if ok {
        Ok(Var::new(s))
    } else {
        Err(err(pos, format!("bad variable name '{s}'")))
    }
}

/// Splits `name(args)` into the name and the comma-separated arguments.
fn call(s: &str, pos: usize) -> Result<(&str, Vec<&str>)> {
    let open = s.find('(').ok_or_else(|| err(pos, format!("expected '(' in '{s}'")))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| err(pos, format!("expected ')' in '{s}'")))?;
    Ok((&s[..open], inner.split([',', ';']).collect()))
}

fn band_digit(c: Option<char>, pos: usize) -> Result<Band> {
    match c {
        Some('0') => Ok(Band::Zero),
        Some('1') => Ok(Band::One),
        _ => Err(err(pos, "expected band label 0 or 1")),
    }
}

fn parse_factor(s: &str, pos: usize, term: &mut Term) -> Result<()> {
    if s == "2pi" {
        term.atoms.push(Atom::TwoPi);
        return Ok(());
    }
    if let Some(rest) = s.strip_prefix('D') {
        if rest.len() == 1 {
            term.sys.push(SysSym::D(band_digit(rest.chars().next(), pos)?));
            return Ok(());
        }
    }
    let (name, args) = call(s, pos)?;
    let var = |i: usize| -> Result<Var> {
        parse_var(args.get(i).ok_or_else(|| err(pos, format!("missing argument in '{s}'")))?, pos)
    };
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(pos, format!("'{name}' takes {n} arguments")))
        }
    };
    let banded = |prefix: &str| -> Option<Result<Band>> {
        name.strip_prefix(prefix).filter(|r| r.len() == 1).map(|r| band_digit(r.chars().next(), pos))
    };
    match name {
        "(" | "" => return Err(err(pos, "unexpected coefficient")),
        "int" => {
            arity(1)?;
            term.bound.push(var(0)?);
        }
        "int0" => {
            arity(2)?;
            term.tbound.push((var(0)?, var(1)?));
        }
        "delta" | "causal" | "tpdelta" | "dplus" | "dirac" => {
            arity(2)?;
            let (a, b) = (var(0)?, var(1)?);
            term.atoms.push(match name {
                "delta" => Atom::Delta(a, b),
                "causal" => Atom::Causal(a, b),
                "tpdelta" => Atom::TwoPiDelta(a, b),
                "dplus" => Atom::DPlus(a, b),
                _ => Atom::Dirac(a, b),
            });
        }
        "U" | "Ud" => {
            arity(1)?;
            term.word.push(if name == "U" { Factor::Evol(var(0)?) } else { Factor::EvolDag(var(0)?) });
        }
        _ => {
            if let Some(g) = parse_generator(name, &args, pos)? {
                term.word.push(Factor::Gen(g));
                return Ok(());
            }
            arity(1)?;
            let v = var(0)?;
            let atom_or_sys = [
                ("gammac", 0u8),
                ("gamma", 1),
                ("rho", 2),
                ("w", 3),
                ("n", 4),
                ("Tdag", 5),
                ("T", 6),
            ]
            .into_iter()
            .find_map(|(p, k)| banded(p).map(|b| (k, b)));
            let Some((k, band)) = atom_or_sys else {
                return Err(err(pos, format!("unknown factor '{s}'")));
            };
            let band = band?;
            match k {
                0 => term.atoms.push(Atom::Gamma { band, var: v, conj: true }),
                1 => term.atoms.push(Atom::Gamma { band, var: v, conj: false }),
                2 => term.atoms.push(Atom::Rho(band, v)),
                3 => term.atoms.push(Atom::W(band, v)),
                4 => term.atoms.push(Atom::NInv(band, v)),
                5 => term.sys.push(SysSym::T { band, var: v, dag: true }),
                _ => term.sys.push(SysSym::T { band, var: v, dag: false }),
            }
        }
    }
    Ok(())
}

fn parse_generator(name: &str, args: &[&str], pos: usize) -> Result<Option<Generator>> {
    let (kind, labels) = if let Some(r) = name.strip_prefix("Bd") {
        (GenKind::Bdag, r)
    } else if let Some(r) = name.strip_prefix('B') {
        (GenKind::B, r)
    } else if let Some(r) = name.strip_prefix('N') {
        (GenKind::N, r)
    } else {
        return Ok(None);
    };
    if labels.len() != 2 {
        return Ok(None);
    }
    let mut chars = labels.chars();
    let eps = (band_digit(chars.next(), pos)?, band_digit(chars.next(), pos)?);
    if args.len() != 3 {
        return Err(err(pos, format!("generator '{name}' takes two energy slots and a time")));
    }
    let energies = match (args[0], args[1]) {
        ("*", "*") => return Err(err(pos, "at most one integrated slot")),
        ("*", b) => Energies::Right(parse_var(b, pos)?),
        (a, "*") => Energies::Left(parse_var(a, pos)?),
        (a, b) => Energies::Pair(parse_var(a, pos)?, parse_var(b, pos)?),
    };
    Ok(Some(Generator::new(kind, eps, energies, parse_var(args[2], pos)?)))
}

fn parse_term(s: &str, base: usize) -> Result<Term> {
    let mut term = Term::one();
    let mut offset = base;
    for (k, part) in s.split(" * ").enumerate() {
        let part_trim = part.trim();
        if k == 0 && part_trim.starts_with('(') {
            let inner = part_trim
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| err(offset, "bad coefficient"))?;
            let (re, im) = inner.split_once(',').ok_or_else(|| err(offset, "coefficient needs (re,im)"))?;
            term.coeff = Complex::new(parse_rational(re, offset)?, parse_rational(im, offset)?);
        } else {
            parse_factor(part_trim, offset, &mut term)?;
        }
        offset += part.len() + 3;
    }
    Ok(term)
}

/// Parses the canonical text form back into a canonical expression.
pub fn parse_expr(s: &str) -> Result<Expr> {
    let s = s.trim();
    if s == "0" {
        return Ok(Expr::zero());
    }
    let mut terms = Vec::new();
    let mut offset = 0;
    for part in s.split(" + ") {
        terms.push(parse_term(part, offset)?);
        offset += part.len() + 3;
    }
    Expr::from_terms(terms)
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_expr(s)
    }
}

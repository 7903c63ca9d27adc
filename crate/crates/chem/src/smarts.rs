//! A SMARTS subset sufficient for atom-environment tables: atom and bond
//! primitives, `! & , ;` logic, branches and recursive `$(...)`. Ring
//! closures inside patterns are not supported.

use thiserror::Error;

use crate::molgraph::{ring_atoms, ring_bonds, BondOrder, Element, Molecule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message} at offset {offset} in SMARTS {pattern:?}")]
pub struct SmartsError {
    pub pattern: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
}

#[derive(Clone, Debug, PartialEq)]
enum AtomPrim {
    Any,
    Aromatic,
    Aliphatic,
    Element { number: u8, aromatic: bool },
    AtomicNumber(u8),
    TotalH(u8),
    Degree(u8),
    Connectivity(u8),
    InRing,
    NotInRing,
    Charge(i8),
    Recursive(Box<SmartsPattern>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondPrim {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
}

#[derive(Clone, Debug, PartialEq)]
struct Edge {
    parent: usize,
    /// `None` is an unwritten bond: single or aromatic.
    expr: Option<Expr<BondPrim>>,
}

/// A parsed pattern. Atom 0 is the root; every other atom hangs off an
/// earlier one, so the pattern is a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct SmartsPattern {
    source: String,
    atoms: Vec<Expr<AtomPrim>>,
    /// `edges[k - 1]` connects atom k to its parent.
    edges: Vec<Edge>,
}

/// Per-molecule facts the matcher needs, computed once.
pub struct MatchContext<'m> {
    mol: &'m Molecule,
    ring_bond: Vec<bool>,
    ring_atom: Vec<bool>,
    total_h: Vec<u8>,
}

impl<'m> MatchContext<'m> {
    pub fn new(mol: &'m Molecule) -> Self {
        let ring_bond = ring_bonds(mol);
        let ring_atom = ring_atoms(mol);
        let total_h = (0..mol.atom_count())
            .map(|i| mol.total_hydrogens(i))
            .collect();
        MatchContext {
            mol,
            ring_bond,
            ring_atom,
            total_h,
        }
    }

    pub fn molecule(&self) -> &Molecule {
        self.mol
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }
}

impl SmartsPattern {
    pub fn parse(text: &str) -> Result<Self, SmartsError> {
        let mut p = PatternParser {
            src: text,
            bytes: text.as_bytes(),
            pos: 0,
        };
        let pat = p.pattern()?;
        if p.pos != p.bytes.len() {
            return Err(p.error("trailing characters"));
        }
        Ok(pat)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// True when the pattern matches with its first atom on `atom`.
    pub fn matches_at(&self, ctx: &MatchContext, atom: usize) -> bool {
        if !atom_matches(&self.atoms[0], ctx, atom) {
            return false;
        }
        let mut mapped = vec![usize::MAX; self.atoms.len()];
        mapped[0] = atom;
        self.extend(ctx, &mut mapped, 1)
    }

    /// Every molecule atom the pattern can be rooted at.
    pub fn matching_atoms(&self, ctx: &MatchContext) -> Vec<usize> {
        (0..ctx.mol.atom_count())
            .filter(|&a| self.matches_at(ctx, a))
            .collect()
    }

    fn extend(&self, ctx: &MatchContext, mapped: &mut [usize], k: usize) -> bool {
        if k == self.atoms.len() {
            return true;
        }
        let edge = &self.edges[k - 1];
        let anchor = mapped[edge.parent];
        for nb in ctx.mol.neighbors(anchor) {
            if mapped[..k].contains(&nb.atom) {
                continue;
            }
            if !bond_matches(edge.expr.as_ref(), ctx, nb.bond) {
                continue;
            }
            if !atom_matches(&self.atoms[k], ctx, nb.atom) {
                continue;
            }
            mapped[k] = nb.atom;
            if self.extend(ctx, mapped, k + 1) {
                return true;
            }
        }
        mapped[k] = usize::MAX;
        false
    }
}

fn eval<P>(expr: &Expr<P>, test: &impl Fn(&P) -> bool) -> bool {
    match expr {
        Expr::Prim(p) => test(p),
        Expr::Not(e) => !eval(e, test),
        Expr::And(es) => es.iter().all(|e| eval(e, test)),
        Expr::Or(es) => es.iter().any(|e| eval(e, test)),
    }
}

fn atom_matches(expr: &Expr<AtomPrim>, ctx: &MatchContext, idx: usize) -> bool {
    let mol = ctx.mol;
    let atom = mol.atom(idx);
    eval(expr, &|p: &AtomPrim| match p {
        AtomPrim::Any => true,
        AtomPrim::Aromatic => atom.aromatic,
        AtomPrim::Aliphatic => !atom.aromatic,
        AtomPrim::Element { number, aromatic } => {
            atom.element.atomic_number() == *number && atom.aromatic == *aromatic
        }
        AtomPrim::AtomicNumber(n) => atom.element.atomic_number() == *n,
        AtomPrim::TotalH(n) => ctx.total_h[idx] == *n,
        AtomPrim::Degree(n) => mol.degree(idx) == *n as usize,
        AtomPrim::Connectivity(n) => {
            mol.degree(idx) + mol.attached_hydrogens(idx) as usize == *n as usize
        }
        AtomPrim::InRing => ctx.ring_atom[idx],
        AtomPrim::NotInRing => !ctx.ring_atom[idx],
        AtomPrim::Charge(q) => atom.formal_charge == *q,
        AtomPrim::Recursive(pat) => pat.matches_at(ctx, idx),
    })
}

fn bond_matches(expr: Option<&Expr<BondPrim>>, ctx: &MatchContext, bond: usize) -> bool {
    let order = ctx.mol.bond(bond).order;
    let Some(expr) = expr else {
        return matches!(order, BondOrder::Single | BondOrder::Aromatic);
    };
    eval(expr, &|p: &BondPrim| match p {
        BondPrim::Single => order == BondOrder::Single,
        BondPrim::Double => order == BondOrder::Double,
        BondPrim::Triple => order == BondOrder::Triple,
        BondPrim::Aromatic => order == BondOrder::Aromatic,
        BondPrim::Any => true,
        BondPrim::Ring => ctx.ring_bond[bond],
    })
}

struct PatternParser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl PatternParser<'_> {
    fn error(&self, message: &str) -> SmartsError {
        SmartsError {
            pattern: self.src.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut v = 0u32;
        while let Some(c) = self.peek().filter(u8::is_ascii_digit) {
            v = v.saturating_mul(10).saturating_add((c - b'0') as u32);
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn small(&mut self, default: u8) -> Result<u8, SmartsError> {
        match self.number() {
            None => Ok(default),
            Some(v) => u8::try_from(v).map_err(|_| self.error("count out of range")),
        }
    }

    /// A chain with branches, ending at end of input or an unmatched `)`.
    fn pattern(&mut self) -> Result<SmartsPattern, SmartsError> {
        let start = self.pos;
        let mut atoms = Vec::new();
        let mut edges = Vec::new();
        let mut prev: Option<usize> = None;
        let mut branch_stack: Vec<Option<usize>> = Vec::new();
        let mut pending_bond: Option<Expr<BondPrim>> = None;
        loop {
            match self.peek() {
                None => break,
                Some(b')') if branch_stack.is_empty() => break,
                Some(b'(') => {
                    if prev.is_none() || pending_bond.is_some() {
                        return Err(self.error("misplaced branch"));
                    }
                    branch_stack.push(prev);
                    self.pos += 1;
                }
                Some(b')') => {
                    if pending_bond.is_some() {
                        return Err(self.error("bond without atom"));
                    }
                    prev = branch_stack.pop().expect("checked non-empty");
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_digit() || c == b'%' => {
                    return Err(self.error("ring closures are not supported"));
                }
                Some(c) if is_bond_char(c) && !(atoms.is_empty()) => {
                    if pending_bond.is_some() {
                        return Err(self.error("two bond expressions in a row"));
                    }
                    pending_bond = Some(self.bond_expr()?);
                }
                Some(_) => {
                    let atom = self.atom()?;
                    let idx = atoms.len();
                    atoms.push(atom);
                    if let Some(parent) = prev {
                        edges.push(Edge {
                            parent,
                            expr: pending_bond.take(),
                        });
                    } else if idx > 0 {
                        return Err(self.error("disconnected pattern"));
                    }
                    prev = Some(idx);
                }
            }
        }
        if !branch_stack.is_empty() {
            return Err(self.error("unclosed branch"));
        }
        if pending_bond.is_some() {
            return Err(self.error("bond without atom"));
        }
        if atoms.is_empty() {
            return Err(self.error("empty pattern"));
        }
        Ok(SmartsPattern {
            source: self.src[start..self.pos].to_string(),
            atoms,
            edges,
        })
    }

    fn atom(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let c = self.peek().ok_or_else(|| self.error("expected atom"))?;
        if c == b'[' {
            self.pos += 1;
            let e = self.logic(Self::atom_prim, |c| c == b']')?;
            if self.peek() != Some(b']') {
                return Err(self.error("expected ']'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        let prim = match c {
            b'*' => AtomPrim::Any,
            b'a' => AtomPrim::Aromatic,
            b'A' => AtomPrim::Aliphatic,
            _ => {
                let (number, aromatic) = self
                    .element_symbol()
                    .ok_or_else(|| self.error("unknown atom"))?;
                return Ok(Expr::Prim(AtomPrim::Element { number, aromatic }));
            }
        };
        self.pos += 1;
        Ok(Expr::Prim(prim))
    }

    /// Reads an element symbol at the cursor, longest match first.
    fn element_symbol(&mut self) -> Option<(u8, bool)> {
        let c = self.peek()?;
        if c.is_ascii_uppercase() {
            if let Some(&n) = self.bytes.get(self.pos + 1) {
                if n.is_ascii_lowercase() {
                    let two = [c, n];
                    let sym = std::str::from_utf8(&two).ok()?;
                    if let Some(e) = Element::from_symbol(sym).filter(|e| *e != Element::Dummy) {
                        self.pos += 2;
                        return Some((e.atomic_number(), false));
                    }
                }
            }
            let one = (c as char).to_string();
            let e =
                Element::from_symbol(&one).filter(|e| !matches!(e, Element::Dummy | Element::H))?;
            self.pos += 1;
            return Some((e.atomic_number(), false));
        }
        let e = match c {
            b'c' => Element::C,
            b'n' => Element::N,
            b'o' => Element::O,
            b's' => Element::S,
            b'p' => Element::P,
            _ => return None,
        };
        self.pos += 1;
        Some((e.atomic_number(), true))
    }

    fn atom_prim(&mut self) -> Result<AtomPrim, SmartsError> {
        let c = self.peek().ok_or_else(|| self.error("unterminated atom"))?;
        let prim = match c {
            b'*' => {
                self.pos += 1;
                AtomPrim::Any
            }
            b'a' => {
                self.pos += 1;
                AtomPrim::Aromatic
            }
            b'A' => {
                self.pos += 1;
                AtomPrim::Aliphatic
            }
            b'#' => {
                self.pos += 1;
                let n = self
                    .number()
                    .ok_or_else(|| self.error("expected atomic number"))?;
                AtomPrim::AtomicNumber(u8::try_from(n).map_err(|_| self.error("atomic number"))?)
            }
            b'H' => {
                self.pos += 1;
                AtomPrim::TotalH(self.small(1)?)
            }
            b'D' => {
                self.pos += 1;
                AtomPrim::Degree(self.small(1)?)
            }
            b'X' => {
                self.pos += 1;
                AtomPrim::Connectivity(self.small(1)?)
            }
            b'R' => {
                self.pos += 1;
                match self.number() {
                    None => AtomPrim::InRing,
                    Some(0) => AtomPrim::NotInRing,
                    Some(_) => return Err(self.error("ring membership counts are not supported")),
                }
            }
            b'+' | b'-' => {
                let sign: i32 = if c == b'+' { 1 } else { -1 };
                self.pos += 1;
                let magnitude = match self.number() {
                    Some(n) => n as i32,
                    None => {
                        let mut m = 1;
                        while self.peek() == Some(c) {
                            self.pos += 1;
                            m += 1;
                        }
                        m
                    }
                };
                let q = i8::try_from(sign * magnitude).map_err(|_| self.error("charge"))?;
                AtomPrim::Charge(q)
            }
            b'$' => {
                self.pos += 1;
                if self.peek() != Some(b'(') {
                    return Err(self.error("expected '(' after '$'"));
                }
                self.pos += 1;
                let inner = self.pattern()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("unclosed recursive pattern"));
                }
                self.pos += 1;
                AtomPrim::Recursive(Box::new(inner))
            }
            _ => {
                let (number, aromatic) = self
                    .element_symbol()
                    .ok_or_else(|| self.error("unknown atom primitive"))?;
                AtomPrim::Element { number, aromatic }
            }
        };
        Ok(prim)
    }

    fn bond_expr(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        self.logic(Self::bond_prim, |c| !is_bond_char(c))
    }

    fn bond_prim(&mut self) -> Result<BondPrim, SmartsError> {
        let p = match self.peek() {
            Some(b'-') => BondPrim::Single,
            Some(b'=') => BondPrim::Double,
            Some(b'#') => BondPrim::Triple,
            Some(b':') => BondPrim::Aromatic,
            Some(b'~') => BondPrim::Any,
            Some(b'@') => BondPrim::Ring,
            _ => return Err(self.error("expected bond primitive")),
        };
        self.pos += 1;
        Ok(p)
    }

    /// Operator precedence, tightest first: `!`, implicit and `&`, `,`, `;`.
    fn logic<P>(
        &mut self,
        prim: fn(&mut Self) -> Result<P, SmartsError>,
        at_end: fn(u8) -> bool,
    ) -> Result<Expr<P>, SmartsError> {
        let mut low = Vec::new();
        loop {
            let mut ors = Vec::new();
            loop {
                let mut ands = Vec::new();
                loop {
                    let mut negations = 0;
                    while self.peek() == Some(b'!') {
                        self.pos += 1;
                        negations += 1;
                    }
                    let mut e = Expr::Prim(prim(self)?);
                    for _ in 0..negations {
                        e = Expr::Not(Box::new(e));
                    }
                    ands.push(e);
                    match self.peek() {
                        Some(b'&') => self.pos += 1,
                        Some(b',' | b';') => break,
                        Some(c) if at_end(c) => break,
                        None => break,
                        Some(_) => {}
                    }
                }
                ors.push(collapse(ands, Expr::And));
                if self.peek() == Some(b',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            low.push(collapse(ors, Expr::Or));
            if self.peek() == Some(b';') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(collapse(low, Expr::And))
    }
}

fn collapse<P>(mut items: Vec<Expr<P>>, wrap: fn(Vec<Expr<P>>) -> Expr<P>) -> Expr<P> {
    if items.len() == 1 {
        items.pop().expect("one item")
    } else {
        wrap(items)
    }
}

fn is_bond_char(c: u8) -> bool {
    matches!(
        c,
        b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b';' | b'&' | b','
    )
}

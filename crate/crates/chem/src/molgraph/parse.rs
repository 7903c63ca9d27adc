use std::collections::BTreeMap;

use thiserror::Error;

use super::molecule::{Atom, BondOrder, Element, GraphError, Molecule};
use super::rings::ring_bonds;
use super::valence::max_valence;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{kind} at offset {offset}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("non-ASCII input")]
    NonAscii,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unknown atom symbol {0:?}")]
    UnknownElement(String),
    #[error("unclosed ring closure {0}")]
    UnclosedRing(u16),
    #[error("unmatched closing parenthesis")]
    UnmatchedParen,
    #[error("unclosed branch")]
    UnclosedBranch,
    #[error("unclosed bracket atom")]
    UnclosedBracket,
    #[error("bond symbol without a following atom")]
    DanglingBond,
    #[error("bond or branch before the first atom")]
    NothingToBond,
    #[error("conflicting bond symbols on ring closure {0}")]
    RingBondConflict(u16),
    #[error("ring closure {0} bonds an atom to itself or duplicates a bond")]
    InvalidRingClosure(u16),
    #[error(
        "{element} with {hydrogens} hydrogens and charge {charge} exceeds any allowed valence"
    )]
    ImpossibleValence {
        element: Element,
        hydrogens: u8,
        charge: i8,
    },
    #[error("element {0} cannot be aromatic")]
    InvalidAromatic(Element),
    #[error("attachment point must have exactly one bond")]
    DummyValence,
    #[error("disconnected input ('.') is not accepted")]
    Disconnected,
    #[error("unsupported SMILES feature {0:?}")]
    Unsupported(String),
}

/// Something accepted but dropped while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    StereoDiscarded { offset: usize },
    AtomClassDiscarded { offset: usize },
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub molecule: Molecule,
    pub warnings: Vec<ParseWarning>,
}

/// Parse a SMILES string. Stereo marks are dropped silently; use
/// [`parse_smiles_with_warnings`] to see them.
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    parse_smiles_with_warnings(text).map(|p| p.molecule)
}

pub fn parse_smiles_with_warnings(text: &str) -> Result<Parsed, SmilesError> {
    Parser::new(text)?.run()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    /// `/` or `\`: single bond carrying directional stereo.
    Directional,
}

impl BondSym {
    fn order(self) -> BondOrder {
        match self {
            BondSym::Single | BondSym::Directional => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSym>,
    offset: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    mol: Molecule,
    warnings: Vec<ParseWarning>,
    prev: Option<usize>,
    pending: Option<(BondSym, usize)>,
    branches: Vec<(Option<usize>, usize)>,
    rings: BTreeMap<u16, RingOpen>,
    implicit_bonds: Vec<usize>,
}

fn err(offset: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { offset, kind }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, SmilesError> {
        if text.is_empty() {
            return Err(err(0, SmilesErrorKind::Empty));
        }
        if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
            return Err(err(i, SmilesErrorKind::NonAscii));
        }
        Ok(Parser {
            bytes: text.as_bytes(),
            pos: 0,
            mol: Molecule::new(),
            warnings: Vec::new(),
            prev: None,
            pending: None,
            branches: Vec::new(),
            rings: BTreeMap::new(),
            implicit_bonds: Vec::new(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn run(mut self) -> Result<Parsed, SmilesError> {
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() {
                        return Err(err(at, SmilesErrorKind::NothingToBond));
                    }
                    if self.pending.is_some() {
                        return Err(err(at, SmilesErrorKind::UnexpectedChar('(')));
                    }
                    self.branches.push((self.prev, at));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(err(at, SmilesErrorKind::DanglingBond));
                    }
                    let (prev, _) = self
                        .branches
                        .pop()
                        .ok_or_else(|| err(at, SmilesErrorKind::UnmatchedParen))?;
                    self.prev = prev;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() {
                        return Err(err(at, SmilesErrorKind::NothingToBond));
                    }
                    if self.pending.is_some() {
                        return Err(err(at, SmilesErrorKind::UnexpectedChar(c as char)));
                    }
                    let sym = match c {
                        b'-' => BondSym::Single,
                        b'=' => BondSym::Double,
                        b'#' => BondSym::Triple,
                        b':' => BondSym::Aromatic,
                        _ => {
                            self.warnings
                                .push(ParseWarning::StereoDiscarded { offset: at });
                            BondSym::Directional
                        }
                    };
                    self.pending = Some((sym, at));
                    self.pos += 1;
                }
                b'$' => return Err(err(at, SmilesErrorKind::Unsupported("$".into()))),
                b'.' => return Err(err(at, SmilesErrorKind::Disconnected)),
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.attach(atom, at)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.attach(atom, at)?;
                }
            }
        }
        if let Some((_, off)) = self.pending {
            return Err(err(off, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, off)) = self.branches.last() {
            return Err(err(off, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((&digit, open)) = self.rings.iter().min_by_key(|(_, o)| o.offset) {
            return Err(err(open.offset, SmilesErrorKind::UnclosedRing(digit)));
        }
        if self.mol.atom_count() == 0 {
            return Err(err(0, SmilesErrorKind::Empty));
        }
        self.finish()
    }

    fn finish(mut self) -> Result<Parsed, SmilesError> {
        // An unwritten bond between two aromatic atoms is aromatic only inside a ring.
        let in_ring = ring_bonds(&self.mol);
        for &b in &self.implicit_bonds {
            if self.mol.bond(b).order == BondOrder::Aromatic && !in_ring[b] {
                self.mol.set_bond_order(b, BondOrder::Single);
            }
        }
        for i in 0..self.mol.atom_count() {
            if self.mol.atom(i).is_dummy() && self.mol.degree(i) != 1 {
                return Err(err(0, SmilesErrorKind::DummyValence));
            }
        }
        Ok(Parsed {
            molecule: self.mol,
            warnings: self.warnings,
        })
    }

    fn graph_err(&self, offset: usize, e: GraphError, digit: u16) -> SmilesError {
        match e {
            GraphError::SelfLoop(_) | GraphError::ParallelBond(..) => {
                err(offset, SmilesErrorKind::InvalidRingClosure(digit))
            }
            _ => err(offset, SmilesErrorKind::UnexpectedChar('?')),
        }
    }

    fn attach(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let idx = self.mol.add_atom(atom);
        if let Some(prev) = self.prev {
            let pending = self.pending.take();
            let order = match pending {
                Some((sym, _)) => sym.order(),
                None => self.implicit_order(prev, idx),
            };
            let b = self
                .mol
                .add_bond(prev, idx, order)
                .map_err(|e| self.graph_err(offset, e, 0))?;
            if pending.is_none() {
                self.implicit_bonds.push(b);
            }
        } else if self.pending.is_some() {
            return Err(err(offset, SmilesErrorKind::NothingToBond));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.mol.atom(a).aromatic && self.mol.atom(b).aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let at = self.pos;
        let digit: u16 = if self.peek() == Some(b'%') {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    ((a - b'0') * 10 + (b - b'0')) as u16
                }
                _ => return Err(err(at, SmilesErrorKind::UnexpectedChar('%'))),
            }
        } else {
            let d = self.peek().unwrap() - b'0';
            self.pos += 1;
            d as u16
        };
        let atom = self
            .prev
            .ok_or_else(|| err(at, SmilesErrorKind::NothingToBond))?;
        let here = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&digit) {
            Some(open) => {
                let order = match (open.bond, here) {
                    (Some(a), Some(b)) if a.order() != b.order() => {
                        return Err(err(at, SmilesErrorKind::RingBondConflict(digit)))
                    }
                    (Some(a), _) | (None, Some(a)) => Some(a.order()),
                    (None, None) => None,
                };
                let implicit = order.is_none();
                let order = order.unwrap_or_else(|| self.implicit_order(open.atom, atom));
                let b = self
                    .mol
                    .add_bond(open.atom, atom, order)
                    .map_err(|e| self.graph_err(at, e, digit))?;
                if implicit {
                    self.implicit_bonds.push(b);
                }
            }
            None => {
                self.rings.insert(
                    digit,
                    RingOpen {
                        atom,
                        bond: here,
                        offset: at,
                    },
                );
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let at = self.pos;
        let c = self.peek().unwrap();
        let (element, aromatic, len) = match c {
            b'C' if self.peek_at(1) == Some(b'l') => (Element::Cl, false, 2),
            b'B' if self.peek_at(1) == Some(b'r') => (Element::Br, false, 2),
            b'C' => (Element::C, false, 1),
            b'N' => (Element::N, false, 1),
            b'O' => (Element::O, false, 1),
            b'S' => (Element::S, false, 1),
            b'P' => (Element::P, false, 1),
            b'F' => (Element::F, false, 1),
            b'I' => (Element::I, false, 1),
            b'c' => (Element::C, true, 1),
            b'n' => (Element::N, true, 1),
            b'o' => (Element::O, true, 1),
            b's' => (Element::S, true, 1),
            b'p' => (Element::P, true, 1),
            b'*' => (Element::Dummy, false, 1),
            b'B' | b'b' => {
                return Err(err(
                    at,
                    SmilesErrorKind::UnknownElement((c as char).to_string()),
                ))
            }
            _ if c.is_ascii_alphabetic() => {
                return Err(err(
                    at,
                    SmilesErrorKind::UnknownElement((c as char).to_string()),
                ))
            }
            _ => return Err(err(at, SmilesErrorKind::UnexpectedChar(c as char))),
        };
        self.pos += len;
        Ok(if element == Element::Dummy {
            Atom::dummy()
        } else {
            Atom {
                aromatic,
                ..Atom::new(element)
            }
        })
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut v: u32 = 0;
        while let Some(c) = self.peek() {
            if !c.is_ascii_digit() {
                break;
            }
            v = v.saturating_mul(10).saturating_add((c - b'0') as u32);
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.read_number();
        if matches!(isotope, Some(0)) || isotope.is_some_and(|v| v > u16::MAX as u32) {
            return Err(err(
                open + 1,
                SmilesErrorKind::Unsupported("isotope".into()),
            ));
        }

        let sym_at = self.pos;
        let (element, aromatic) = match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                (Element::Dummy, false)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .peek_at(1)
                    .filter(|n| n.is_ascii_lowercase())
                    .map(|n| format!("{}{}", c as char, n as char));
                match two.as_deref().and_then(Element::from_symbol) {
                    Some(e) => {
                        self.pos += 2;
                        (e, false)
                    }
                    None => {
                        let one = (c as char).to_string();
                        match Element::from_symbol(&one) {
                            // Inside brackets a lowercase letter after the symbol can only
                            // belong to the symbol, so `[Xy]` with unknown `Xy` is an error.
                            Some(e) if two.is_none() => {
                                self.pos += 1;
                                (e, false)
                            }
                            _ => {
                                return Err(err(
                                    sym_at,
                                    SmilesErrorKind::UnknownElement(two.unwrap_or(one)),
                                ))
                            }
                        }
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let (e, len) = match c {
                    b'c' => (Element::C, 1),
                    b'n' => (Element::N, 1),
                    b'o' => (Element::O, 1),
                    b's' if self.peek_at(1) == Some(b'e') => {
                        return Err(err(sym_at, SmilesErrorKind::UnknownElement("se".into())))
                    }
                    b's' => (Element::S, 1),
                    b'p' => (Element::P, 1),
                    _ => {
                        return Err(err(
                            sym_at,
                            SmilesErrorKind::UnknownElement((c as char).to_string()),
                        ))
                    }
                };
                self.pos += len;
                (e, true)
            }
            Some(c) => return Err(err(sym_at, SmilesErrorKind::UnexpectedChar(c as char))),
            None => return Err(err(open, SmilesErrorKind::UnclosedBracket)),
        };

        // Chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH25 ...
        if self.peek() == Some(b'@') {
            self.warnings
                .push(ParseWarning::StereoDiscarded { offset: self.pos });
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let (Some(a), Some(b)) = (self.peek(), self.peek_at(1)) {
                if a.is_ascii_uppercase() && b.is_ascii_uppercase() {
                    self.pos += 2;
                    self.read_number();
                }
            }
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.read_number() {
                Some(v) if v > 9 => {
                    return Err(err(
                        self.pos,
                        SmilesErrorKind::Unsupported("hydrogen count".into()),
                    ))
                }
                Some(v) => v as u8,
                None => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let s = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.read_number() {
                charge = s * n.min(100) as i32;
            } else {
                charge = s;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += s;
                }
            }
            if charge.abs() > 8 {
                return Err(err(open, SmilesErrorKind::Unsupported("charge".into())));
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.read_number().is_none() {
                return Err(err(self.pos, SmilesErrorKind::UnexpectedChar(':')));
            }
            self.warnings
                .push(ParseWarning::AtomClassDiscarded { offset: self.pos });
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(c) => return Err(err(self.pos, SmilesErrorKind::UnexpectedChar(c as char))),
            None => return Err(err(open, SmilesErrorKind::UnclosedBracket)),
        }

        let charge = charge as i8;
        if element == Element::Dummy {
            if hydrogens != 0 || charge != 0 {
                return Err(err(open, SmilesErrorKind::DummyValence));
            }
            return Ok(Atom {
                isotope: isotope.map(|v| v as u16),
                ..Atom::dummy()
            });
        }
        if aromatic && !element.can_be_aromatic() {
            return Err(err(sym_at, SmilesErrorKind::InvalidAromatic(element)));
        }
        match max_valence(element, charge) {
            Some(max) if hydrogens <= max => {}
            _ => {
                return Err(err(
                    open,
                    SmilesErrorKind::ImpossibleValence {
                        element,
                        hydrogens,
                        charge,
                    },
                ))
            }
        }
        Ok(Atom {
            element,
            formal_charge: charge,
            aromatic,
            explicit_h: Some(hydrogens),
            isotope: isotope.map(|v| v as u16),
        })
    }
}

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Elements accepted by the parser. `Dummy` is the `*` attachment point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Dummy,
    H,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::Dummy,
        Element::H,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::Dummy => 0,
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::Dummy => "*",
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == symbol)
    }

    /// Elements that may be written in lowercase (aromatic) form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::C | Element::N | Element::O | Element::S | Element::P
        )
    }

    /// Valences used to infer implicit hydrogens on atoms written outside brackets.
    pub(crate) fn default_valences(self) -> &'static [u8] {
        match self {
            Element::Dummy => &[],
            Element::H => &[1],
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    /// True for the elements a SMILES string may write without brackets.
    pub fn in_organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer contribution to an atom's valence, counting aromatic bonds as 1.
    pub(crate) fn base_valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// `Some(n)` for bracket atoms, whose hydrogen count is fixed; `None` when
    /// hydrogens are inferred from the default valence model.
    pub explicit_h: Option<u8>,
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            formal_charge: 0,
            aromatic: false,
            explicit_h: None,
            isotope: None,
        }
    }

    pub fn aromatic(element: Element) -> Self {
        Atom {
            aromatic: true,
            ..Atom::new(element)
        }
    }

    pub fn dummy() -> Self {
        Atom {
            explicit_h: Some(0),
            ..Atom::new(Element::Dummy)
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.element == Element::Dummy
    }

    /// Atoms counted as "heavy": neither attachment points nor hydrogens.
    pub fn is_heavy(&self) -> bool {
        !matches!(self.element, Element::Dummy | Element::H)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.a == atom || self.b == atom
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub atom: usize,
    pub bond: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("atom index {0} out of range")]
    AtomOutOfRange(usize),
    #[error("bond index {0} out of range")]
    BondOutOfRange(usize),
    #[error("self-loop on atom {0}")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are already bonded")]
    ParallelBond(usize, usize),
}

/// Attributed molecular graph. Atom indices follow the order in which atoms
/// were added, which for parsed molecules is the SMILES reading order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl Molecule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.adjacency.push(Vec::new());
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<usize, GraphError> {
        let n = self.atoms.len();
        if a >= n {
            return Err(GraphError::AtomOutOfRange(a));
        }
        if b >= n {
            return Err(GraphError::AtomOutOfRange(b));
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if self.bond_between(a, b).is_some() {
            return Err(GraphError::ParallelBond(a, b));
        }
        let idx = self.bonds.len();
        self.bonds.push(Bond { a, b, order });
        self.adjacency[a].push(Neighbor { atom: b, bond: idx });
        self.adjacency[b].push(Neighbor { atom: a, bond: idx });
        Ok(idx)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn atom_mut(&mut self, idx: usize) -> &mut Atom {
        &mut self.atoms[idx]
    }

    pub fn bond(&self, idx: usize) -> &Bond {
        &self.bonds[idx]
    }

    pub(crate) fn set_bond_order(&mut self, idx: usize, order: BondOrder) {
        self.bonds[idx].order = order;
    }

    /// Neighbors in the order their bonds were created.
    pub fn neighbors(&self, atom: usize) -> &[Neighbor] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|n| n.atom == b)
            .map(|n| n.bond)
    }

    pub fn dummy_atoms(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| self.atoms[i].is_dummy())
            .collect()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_heavy()).count()
    }

    fn bond_sums(&self, atom: usize) -> (u8, bool) {
        let mut sum = 0u8;
        let mut any_aromatic = false;
        for n in &self.adjacency[atom] {
            let order = self.bonds[n.bond].order;
            any_aromatic |= order == BondOrder::Aromatic;
            sum = sum.saturating_add(order.base_valence());
        }
        (sum, any_aromatic)
    }

    /// Hydrogens inferred for an atom written without brackets.
    pub fn implicit_hydrogens(&self, atom: usize) -> u8 {
        let a = &self.atoms[atom];
        if a.explicit_h.is_some() || a.is_dummy() {
            return 0;
        }
        let (sum, _) = self.bond_sums(atom);
        implicit_h_for(a.element, a.aromatic, sum)
    }

    /// Hydrogens carried by the atom itself (bracket count or implicit),
    /// excluding separate hydrogen atoms in the graph.
    pub fn attached_hydrogens(&self, atom: usize) -> u8 {
        self.atoms[atom]
            .explicit_h
            .unwrap_or_else(|| self.implicit_hydrogens(atom))
    }

    /// All hydrogens on an atom: carried ones plus hydrogen-atom neighbors.
    pub fn total_hydrogens(&self, atom: usize) -> u8 {
        let neighbor_h = self.adjacency[atom]
            .iter()
            .filter(|n| self.atoms[n.atom].element == Element::H)
            .count() as u8;
        self.attached_hydrogens(atom) + neighbor_h
    }

    /// Integer valence used by [`crate::check_valence`]: bond orders with
    /// aromatic bonds counted as 1, plus carried hydrogens.
    pub(crate) fn base_valence(&self, atom: usize) -> (u8, bool) {
        let (sum, aromatic) = self.bond_sums(atom);
        (sum.saturating_add(self.attached_hydrogens(atom)), aromatic)
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        self.component_of(0, None).len() == self.atoms.len()
    }

    /// Atoms reachable from `start`, optionally ignoring one bond.
    pub fn component_of(&self, start: usize, skip_bond: Option<usize>) -> Vec<usize> {
        let mut seen = vec![false; self.atoms.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut out = Vec::new();
        while let Some(a) = queue.pop_front() {
            out.push(a);
            for n in &self.adjacency[a] {
                if Some(n.bond) == skip_bond || seen[n.atom] {
                    continue;
                }
                seen[n.atom] = true;
                queue.push_back(n.atom);
            }
        }
        out.sort_unstable();
        out
    }

    /// Connected components, each sorted, ordered by their smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if assigned[start] {
                continue;
            }
            let comp = self.component_of(start, None);
            for &a in &comp {
                assigned[a] = true;
            }
            out.push(comp);
        }
        out
    }

    /// Sub-molecule over `atoms` (any order); atoms keep their relative index
    /// order and bonds keep their relative creation order. Returns the old→new
    /// index map alongside.
    pub fn induced(&self, atoms: &[usize]) -> (Molecule, Vec<Option<usize>>) {
        let mut keep = vec![false; self.atoms.len()];
        for &a in atoms {
            keep[a] = true;
        }
        let mut map = vec![None; self.atoms.len()];
        let mut out = Molecule::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if keep[i] {
                map[i] = Some(out.add_atom(atom.clone()));
            }
        }
        for bond in &self.bonds {
            if let (Some(a), Some(b)) = (map[bond.a], map[bond.b]) {
                out.add_bond(a, b, bond.order)
                    .expect("induced subgraph of a simple graph is simple");
            }
        }
        (out, map)
    }

    /// Copy of the molecule with one bond deleted (bond indices above it shift down).
    pub fn without_bond(&self, bond: usize) -> Result<Molecule, GraphError> {
        if bond >= self.bonds.len() {
            return Err(GraphError::BondOutOfRange(bond));
        }
        let mut out = Molecule::new();
        for atom in &self.atoms {
            out.add_atom(atom.clone());
        }
        for (i, b) in self.bonds.iter().enumerate() {
            if i != bond {
                out.add_bond(b.a, b.b, b.order)?;
            }
        }
        Ok(out)
    }

    /// Copy with every carried hydrogen turned into a separate H atom. Heavy
    /// atoms keep their index; hydrogens are appended.
    pub fn with_explicit_hydrogens(&self) -> Molecule {
        let mut out = Molecule::new();
        let counts: Vec<u8> = (0..self.atoms.len())
            .map(|i| self.attached_hydrogens(i))
            .collect();
        for atom in &self.atoms {
            out.add_atom(Atom {
                explicit_h: Some(0),
                ..atom.clone()
            });
        }
        for b in &self.bonds {
            out.add_bond(b.a, b.b, b.order)
                .expect("copy of simple graph");
        }
        for (i, &h) in counts.iter().enumerate() {
            for _ in 0..h {
                let hi = out.add_atom(Atom {
                    explicit_h: Some(0),
                    ..Atom::new(Element::H)
                });
                out.add_bond(i, hi, BondOrder::Single)
                    .expect("fresh hydrogen atom");
            }
        }
        out
    }
}

pub(crate) fn implicit_h_for(element: Element, aromatic: bool, bond_sum: u8) -> u8 {
    let valences = element.default_valences();
    if valences.is_empty() {
        return 0;
    }
    if aromatic {
        // One valence unit goes to the aromatic pi system.
        return valences[0].saturating_sub(bond_sum + 1);
    }
    valences
        .iter()
        .find(|&&v| v >= bond_sum)
        .map(|&v| v - bond_sum)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_self_bonds_rejected() {
        let mut m = Molecule::new();
        let a = m.add_atom(Atom::new(Element::C));
        let b = m.add_atom(Atom::new(Element::C));
        m.add_bond(a, b, BondOrder::Single).unwrap();
        assert_eq!(
            m.add_bond(b, a, BondOrder::Double),
            Err(GraphError::ParallelBond(b, a))
        );
        assert_eq!(
            m.add_bond(a, a, BondOrder::Single),
            Err(GraphError::SelfLoop(a))
        );
        assert_eq!(
            m.add_bond(a, 7, BondOrder::Single),
            Err(GraphError::AtomOutOfRange(7))
        );
    }

    #[test]
    fn implicit_hydrogen_model() {
        assert_eq!(implicit_h_for(Element::C, false, 0), 4);
        assert_eq!(implicit_h_for(Element::C, true, 2), 1);
        assert_eq!(implicit_h_for(Element::C, true, 3), 0);
        assert_eq!(implicit_h_for(Element::N, true, 2), 0);
        assert_eq!(implicit_h_for(Element::S, true, 2), 0);
        assert_eq!(implicit_h_for(Element::S, false, 3), 1);
        assert_eq!(implicit_h_for(Element::P, false, 4), 1);
        assert_eq!(implicit_h_for(Element::N, false, 4), 0);
    }

    #[test]
    fn explicit_hydrogen_expansion_keeps_heavy_indices() {
        let mut m = Molecule::new();
        let c = m.add_atom(Atom::new(Element::C));
        let o = m.add_atom(Atom::new(Element::O));
        m.add_bond(c, o, BondOrder::Single).unwrap();
        let h = m.with_explicit_hydrogens();
        assert_eq!(h.atom_count(), 6);
        assert_eq!(h.atom(0).element, Element::C);
        assert_eq!(h.total_hydrogens(0), 3);
        assert_eq!(h.total_hydrogens(1), 1);
        assert_eq!(h.attached_hydrogens(0), 0);
    }
}

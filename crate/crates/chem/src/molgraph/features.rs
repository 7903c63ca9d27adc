use std::collections::BTreeMap;

use super::molecule::{BondOrder, Element, Molecule};
use super::rings::{ring_counts, sssr};

/// Counts used for structural-feature distributions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructuralFeatures {
    /// Atoms per element; dummies and carried hydrogens are not counted.
    pub atoms: BTreeMap<Element, usize>,
    /// Bonds per order, excluding bonds to dummy atoms.
    pub bonds: BTreeMap<BondOrder, usize>,
    /// SSSR rings of size 3 to 6.
    pub rings: BTreeMap<usize, usize>,
    /// All SSSR rings regardless of size.
    pub ring_total: usize,
}

impl StructuralFeatures {
    pub fn atom_total(&self) -> usize {
        self.atoms.values().sum()
    }

    pub fn bond_total(&self) -> usize {
        self.bonds.values().sum()
    }
}

pub fn structural_features(mol: &Molecule) -> StructuralFeatures {
    let mut f = StructuralFeatures::default();
    for atom in mol.atoms() {
        if !atom.is_dummy() {
            *f.atoms.entry(atom.element).or_insert(0) += 1;
        }
    }
    for bond in mol.bonds() {
        if !mol.atom(bond.a).is_dummy() && !mol.atom(bond.b).is_dummy() {
            *f.bonds.entry(bond.order).or_insert(0) += 1;
        }
    }
    f.rings = ring_counts(mol);
    f.ring_total = sssr(mol).len();
    f
}

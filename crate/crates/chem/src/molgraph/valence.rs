use super::molecule::{BondOrder, Element, Molecule};

/// Valences an element may take at a given formal charge.
pub fn allowed_valences(element: Element, charge: i8) -> Vec<u8> {
    let q = charge as i16;
    let shifted = |base: &[i16]| -> Vec<u8> {
        base.iter()
            .map(|v| v + q)
            .filter(|v| *v >= 0)
            .map(|v| v as u8)
            .collect()
    };
    match element {
        Element::Dummy => Vec::new(),
        Element::C => {
            let v = 4 - q.abs();
            if v >= 0 {
                vec![v as u8]
            } else {
                Vec::new()
            }
        }
        Element::H => {
            if q == 0 {
                vec![1]
            } else if q.abs() == 1 {
                vec![0]
            } else {
                Vec::new()
            }
        }
        Element::N | Element::P if q == 0 => vec![3, 5],
        Element::N | Element::P => shifted(&[3]),
        Element::O => shifted(&[2]),
        Element::S => shifted(&[2, 4, 6]),
        Element::F | Element::Cl | Element::Br | Element::I => shifted(&[1]),
    }
}

/// Largest valence the element may take at this charge, if any.
pub(crate) fn max_valence(element: Element, charge: i8) -> Option<u8> {
    allowed_valences(element, charge).into_iter().max()
}

/// True when every non-dummy atom's valence is in its allowed set.
///
/// Aromatic bonds count as 1 and an atom touching an aromatic bond may add one
/// more unit for its pi bond, so both `v` and `v + 1` are accepted there.
/// Kekulé structures are never constructed.
pub fn check_valence(mol: &Molecule) -> bool {
    for bond in mol.bonds() {
        if bond.order == BondOrder::Aromatic
            && !(mol.atom(bond.a).aromatic && mol.atom(bond.b).aromatic)
        {
            return false;
        }
    }
    (0..mol.atom_count()).all(|i| {
        let atom = mol.atom(i);
        if atom.is_dummy() {
            return true;
        }
        let allowed = allowed_valences(atom.element, atom.formal_charge);
        let (valence, touches_aromatic) = mol.base_valence(i);
        allowed.contains(&valence)
            || ((touches_aromatic || atom.aromatic) && allowed.contains(&(valence + 1)))
    })
}

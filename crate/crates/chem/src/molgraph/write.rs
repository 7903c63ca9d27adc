use std::fmt::Write as _;

use super::canon::canonical_ranks;
use super::molecule::{implicit_h_for, BondOrder, Molecule};
use super::rings::ring_bonds;

/// Write a SMILES string. With `canonical` the traversal follows
/// [`canonical_ranks`], so isomorphic inputs give identical text; otherwise
/// atom indices order the traversal. Disconnected molecules are written as
/// `.`-separated components, which [`crate::parse_smiles`] itself rejects.
pub fn write_smiles(mol: &Molecule, canonical: bool) -> String {
    let n = mol.atom_count();
    if n == 0 {
        return String::new();
    }
    let ranks = if canonical {
        canonical_ranks(mol)
    } else {
        (0..n).collect()
    };
    let in_ring = ring_bonds(mol);
    let mut writer = Writer {
        mol,
        ranks: &ranks,
        in_ring: &in_ring,
        closure: vec![false; mol.bond_count()],
        out: String::new(),
    };
    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by_key(|&a| ranks[a]);
    let mut visited = vec![false; n];
    let mut first = true;
    for root in roots {
        if visited[root] {
            continue;
        }
        writer.mark_closures(root, &mut visited);
        if !first {
            writer.out.push('.');
        }
        first = false;
        writer.emit(root);
    }
    writer.out
}

struct Writer<'a> {
    mol: &'a Molecule,
    ranks: &'a [usize],
    in_ring: &'a [bool],
    closure: Vec<bool>,
    out: String,
}

enum Step {
    Atom { atom: usize, from: Option<usize> },
    Open,
    Close,
}

impl Writer<'_> {
    /// Neighbors ordered by rank, excluding the bond we arrived through.
    fn sorted_neighbors(&self, atom: usize, from_bond: Option<usize>) -> Vec<(usize, usize)> {
        let mut nbs: Vec<(usize, usize)> = self
            .mol
            .neighbors(atom)
            .iter()
            .filter(|nb| Some(nb.bond) != from_bond)
            .map(|nb| (nb.atom, nb.bond))
            .collect();
        nbs.sort_by_key(|&(a, _)| self.ranks[a]);
        nbs
    }

    /// First pass: depth-first in rank order; every edge reaching an already
    /// visited atom becomes a ring closure.
    fn mark_closures(&mut self, root: usize, visited: &mut [bool]) {
        let mut stack: Vec<(usize, Option<usize>)> = vec![(root, None)];
        let mut used = vec![false; self.mol.bond_count()];
        while let Some((atom, from)) = stack.pop() {
            if visited[atom] {
                // Reached twice before being expanded: the later edge closes a ring.
                if let Some(b) = from {
                    self.closure[b] = true;
                }
                continue;
            }
            visited[atom] = true;
            if let Some(b) = from {
                used[b] = true;
            }
            let nbs = self.sorted_neighbors(atom, from);
            for &(nb, bond) in nbs.iter().rev() {
                if used[bond] || self.closure[bond] {
                    continue;
                }
                if visited[nb] {
                    self.closure[bond] = true;
                } else {
                    stack.push((nb, Some(bond)));
                }
            }
        }
    }

    fn emit(&mut self, root: usize) {
        let mut open_digits: Vec<Option<usize>> = Vec::new();
        let mut digit_of = vec![None::<usize>; self.mol.bond_count()];
        let mut stack = vec![Step::Atom {
            atom: root,
            from: None,
        }];
        while let Some(step) = stack.pop() {
            let (atom, from) = match step {
                Step::Open => {
                    self.out.push('(');
                    continue;
                }
                Step::Close => {
                    self.out.push(')');
                    continue;
                }
                Step::Atom { atom, from } => (atom, from),
            };
            if let Some(b) = from {
                let prev = self.mol.bond(b).other(atom);
                let sym = self.bond_symbol(b, prev, atom);
                self.out.push_str(sym);
            }
            self.write_atom(atom);

            let nbs = self.sorted_neighbors(atom, from);
            for &(nb, bond) in &nbs {
                if !self.closure[bond] {
                    continue;
                }
                match digit_of[bond] {
                    Some(d) => {
                        push_digit(&mut self.out, d);
                        open_digits[d] = None;
                    }
                    None => {
                        let d = (1..)
                            .find(|&d| open_digits.get(d).is_none_or(Option::is_none))
                            .expect("unbounded range");
                        if d >= open_digits.len() {
                            open_digits.resize(d + 1, None);
                        }
                        open_digits[d] = Some(bond);
                        digit_of[bond] = Some(d);
                        let sym = self.bond_symbol(bond, atom, nb);
                        self.out.push_str(sym);
                        push_digit(&mut self.out, d);
                    }
                }
            }

            let children: Vec<(usize, usize)> =
                nbs.into_iter().filter(|&(_, b)| !self.closure[b]).collect();
            // Push in reverse so the lowest-ranked child is written first;
            // every child but the last goes in a branch.
            let last = children.len().saturating_sub(1);
            for (i, &(nb, bond)) in children.iter().enumerate().rev() {
                if i != last {
                    stack.push(Step::Close);
                }
                stack.push(Step::Atom {
                    atom: nb,
                    from: Some(bond),
                });
                if i != last {
                    stack.push(Step::Open);
                }
            }
        }
    }

    fn bond_symbol(&self, bond: usize, a: usize, b: usize) -> &'static str {
        let both_aromatic = self.mol.atom(a).aromatic && self.mol.atom(b).aromatic;
        match self.mol.bond(bond).order {
            BondOrder::Single if both_aromatic => "-",
            BondOrder::Single => "",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic if both_aromatic && self.in_ring[bond] => "",
            BondOrder::Aromatic => ":",
        }
    }

    fn write_atom(&mut self, idx: usize) {
        let atom = self.mol.atom(idx);
        if atom.is_dummy() {
            match atom.isotope {
                Some(iso) => {
                    let _ = write!(self.out, "[{iso}*]");
                }
                None => self.out.push('*'),
            }
            return;
        }
        let hydrogens = self.mol.attached_hydrogens(idx);
        let bond_sum: u8 = self
            .mol
            .neighbors(idx)
            .iter()
            .map(|nb| match self.mol.bond(nb.bond).order {
                BondOrder::Single | BondOrder::Aromatic => 1u8,
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
            })
            .sum();
        let bare = atom.element.in_organic_subset()
            && atom.formal_charge == 0
            && atom.isotope.is_none()
            && implicit_h_for(atom.element, atom.aromatic, bond_sum) == hydrogens;
        let symbol = if atom.aromatic {
            atom.element.symbol().to_ascii_lowercase()
        } else {
            atom.element.symbol().to_string()
        };
        if bare {
            self.out.push_str(&symbol);
            return;
        }
        self.out.push('[');
        if let Some(iso) = atom.isotope {
            let _ = write!(self.out, "{iso}");
        }
        self.out.push_str(&symbol);
        match hydrogens {
            0 => {}
            1 => self.out.push('H'),
            h => {
                let _ = write!(self.out, "H{h}");
            }
        }
        match atom.formal_charge {
            0 => {}
            1 => self.out.push('+'),
            -1 => self.out.push('-'),
            q if q > 0 => {
                let _ = write!(self.out, "+{q}");
            }
            q => {
                let _ = write!(self.out, "-{}", -q);
            }
        }
        self.out.push(']');
    }
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_smiles;

    fn canon(s: &str) -> String {
        write_smiles(&parse_smiles(s).unwrap(), true)
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("CCO"), canon("OCC"));
        assert_eq!(canon("CCO"), "CCO");
    }

    #[test]
    fn spellings_collapse() {
        assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("C=1C=CC=CC=1"));
        assert_eq!(
            canon("OC(=O)c1ccccc1OC(C)=O"),
            canon("CC(=O)Oc1ccccc1C(=O)O")
        );
        assert_eq!(canon("[NH3+]CC([O-])=O"), canon("[O-]C(=O)C[NH3+]"));
    }

    #[test]
    fn round_trip_preserves_graph() {
        for s in [
            "c1ccc2ccccc2c1",
            "c1cc[nH]c1",
            "C12C3C4C1C5C2C3C45",
            "*c1ccccc1OC",
            "c1ccccc1-c1ccccc1",
            "O=c1cccc[nH]1",
            "[13CH3]C#N",
            "C[N+](=O)[O-]",
            "CS(=O)(=O)N",
            "c1ccccc1:c1ccccc1",
        ] {
            let first = canon(s);
            assert_eq!(canon(&first), first, "{s}");
        }
    }

    #[test]
    fn many_ring_closures_use_percent_digits() {
        let mut s = String::from("C");
        for i in 1..=12 {
            s.push_str(&format!("%{i:02}"));
        }
        s.push('C');
        for i in 1..=12 {
            s.push_str(&format!("C%{i:02}"));
        }
        let m = parse_smiles(&s).unwrap();
        let w = write_smiles(&m, false);
        assert!(w.contains('%'));
        assert_eq!(canon(&w), canon(&s));
    }

    #[test]
    fn non_canonical_follows_input_order() {
        let m = parse_smiles("OCC").unwrap();
        assert_eq!(write_smiles(&m, false), "OCC");
    }
}

use super::molecule::{BondOrder, Molecule};

fn bond_code(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Replace arbitrary sortable keys by dense ranks 0..k, returning k.
fn densify<K: Ord>(keys: &[K], out: &mut [usize]) -> usize {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && keys[order[pos - 1]] != keys[i] {
            rank += 1;
        }
        out[i] = rank;
    }
    if keys.is_empty() {
        0
    } else {
        rank + 1
    }
}

/// Iterate neighborhood refinement until the number of classes stops growing.
fn refine(mol: &Molecule, ranks: &mut [usize], mut classes: usize) -> usize {
    let n = mol.atom_count();
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..n)
            .map(|a| {
                let mut env: Vec<(usize, u8)> = mol
                    .neighbors(a)
                    .iter()
                    .map(|nb| (ranks[nb.atom], bond_code(mol.bond(nb.bond).order)))
                    .collect();
                env.sort_unstable();
                (ranks[a], env)
            })
            .collect();
        let next = densify(&keys, ranks);
        if next == classes {
            return classes;
        }
        classes = next;
    }
}

/// Canonical rank per atom: a permutation of 0..n that depends only on the
/// labelled graph, up to automorphism.
///
/// Starts from atom invariants (atomic number, aromaticity, charge, isotope,
/// degree, total hydrogens), refines by neighbor ranks and bond orders, then
/// splits remaining ties by promoting one member of the lowest tied class and
/// refining again.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    let invariants: Vec<_> = (0..n)
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element.atomic_number(),
                a.aromatic,
                a.formal_charge,
                a.isotope.unwrap_or(0),
                mol.degree(i),
                mol.total_hydrogens(i),
            )
        })
        .collect();
    let mut ranks = vec![0; n];
    let classes = densify(&invariants, &mut ranks);
    let mut classes = refine(mol, &mut ranks, classes);
    while classes < n {
        let mut counts = vec![0usize; classes];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = counts
            .iter()
            .position(|&c| c > 1)
            .expect("some class is tied");
        let chosen = ranks
            .iter()
            .position(|&r| r == tied)
            .expect("class non-empty");
        let keys: Vec<usize> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| if i == chosen { 2 * r } else { 2 * r + 1 })
            .collect();
        let split = densify(&keys, &mut ranks);
        classes = refine(mol, &mut ranks, split);
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_smiles;

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("c1ccccc1C(=O)O").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort_unstable();
        assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
    }

    #[test]
    fn symmetric_atoms_initially_tied() {
        let m = parse_smiles("CC(C)C").unwrap();
        let r = canonical_ranks(&m);
        // Central carbon has the highest degree, so it ranks last.
        assert_eq!(r[1], 3);
    }
}

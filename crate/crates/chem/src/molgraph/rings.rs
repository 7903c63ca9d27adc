//! Ring membership and smallest-set-of-smallest-rings perception.

use std::collections::{BTreeMap, VecDeque};

use super::molecule::Molecule;

/// Per-bond flag: true when the bond lies on at least one cycle (is not a bridge).
pub fn ring_bonds(mol: &Molecule) -> Vec<bool> {
    let n = mol.atom_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; mol.bond_count()];
    let mut timer = 0usize;

    // Iterative Tarjan: (atom, bond used to enter it, next neighbor slot).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent_bond, ref mut slot)) = stack.last_mut() {
            let neighbors = mol.neighbors(v);
            if *slot < neighbors.len() {
                let nb = neighbors[*slot];
                *slot += 1;
                if Some(nb.bond) == parent_bond {
                    continue;
                }
                if disc[nb.atom] == usize::MAX {
                    disc[nb.atom] = timer;
                    low[nb.atom] = timer;
                    timer += 1;
                    stack.push((nb.atom, Some(nb.bond), 0));
                } else {
                    low[v] = low[v].min(disc[nb.atom]);
                }
            } else {
                stack.pop();
                if let (Some(bond), Some(&(parent, _, _))) = (parent_bond, stack.last()) {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        is_bridge[bond] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

/// Per-atom flag: true when the atom is on at least one ring bond.
pub fn ring_atoms(mol: &Molecule) -> Vec<bool> {
    ring_atoms_from(mol, &ring_bonds(mol))
}

pub(crate) fn ring_atoms_from(mol: &Molecule, ring_bond: &[bool]) -> Vec<bool> {
    let mut out = vec![false; mol.atom_count()];
    for (i, b) in mol.bonds().iter().enumerate() {
        if ring_bond[i] {
            out[b.a] = true;
            out[b.b] = true;
        }
    }
    out
}

/// Number of independent cycles: |E| - |V| + components.
pub fn cycle_rank(mol: &Molecule) -> usize {
    mol.bond_count() + mol.components().len() - mol.atom_count()
}

#[derive(Clone)]
struct EdgeSet {
    bits: Vec<u64>,
}

impl EdgeSet {
    fn new(n: usize) -> Self {
        EdgeSet {
            bits: vec![0; n.div_ceil(64)],
        }
    }
    fn toggle(&mut self, i: usize) {
        self.bits[i / 64] ^= 1 << (i % 64);
    }
    fn xor(&mut self, other: &EdgeSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
    }
    fn lowest(&self) -> Option<usize> {
        self.bits
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// GF(2) basis kept in echelon form keyed by pivot bit.
struct CycleSpace {
    pivots: BTreeMap<usize, EdgeSet>,
}

impl CycleSpace {
    fn insert(&mut self, mut v: EdgeSet) -> bool {
        while let Some(p) = v.lowest() {
            match self.pivots.get(&p) {
                Some(row) => v.xor(row),
                None => {
                    self.pivots.insert(p, v);
                    return true;
                }
            }
        }
        false
    }
}

/// Smallest set of smallest rings, each ring given as its bond indices
/// (sorted). Uses Horton's candidate set and greedy GF(2) independence, which
/// yields a minimum cycle basis.
pub fn sssr(mol: &Molecule) -> Vec<Vec<usize>> {
    let rank = cycle_rank(mol);
    if rank == 0 {
        return Vec::new();
    }
    let ring_bond = ring_bonds(mol);
    let ring_atom = ring_atoms_from(mol, &ring_bond);
    let n = mol.atom_count();
    let m = mol.bond_count();

    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for root in (0..n).filter(|&a| ring_atom[a]) {
        // BFS tree over ring bonds only; neighbors visited in index order.
        let mut dist = vec![usize::MAX; n];
        let mut parent_bond = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let mut nbs: Vec<_> = mol
                .neighbors(v)
                .iter()
                .filter(|nb| ring_bond[nb.bond])
                .copied()
                .collect();
            nbs.sort_by_key(|nb| nb.atom);
            for nb in nbs {
                if dist[nb.atom] == usize::MAX {
                    dist[nb.atom] = dist[v] + 1;
                    parent[nb.atom] = v;
                    parent_bond[nb.atom] = nb.bond;
                    queue.push_back(nb.atom);
                }
            }
        }
        let path = |mut v: usize| -> (Vec<usize>, Vec<usize>) {
            let mut atoms = vec![v];
            let mut bonds = Vec::new();
            while v != root {
                bonds.push(parent_bond[v]);
                v = parent[v];
                atoms.push(v);
            }
            (atoms, bonds)
        };
        for (bi, bond) in mol.bonds().iter().enumerate() {
            if !ring_bond[bi] || dist[bond.a] == usize::MAX || dist[bond.b] == usize::MAX {
                continue;
            }
            if parent_bond[bond.a] == bi || parent_bond[bond.b] == bi {
                continue;
            }
            let (pa, ba) = path(bond.a);
            let (pb, bb) = path(bond.b);
            let shared = pa.iter().filter(|x| pb.contains(x)).count();
            if shared != 1 {
                continue;
            }
            let mut cycle: Vec<usize> = ba.into_iter().chain(bb).chain([bi]).collect();
            cycle.sort_unstable();
            candidates.push(cycle);
        }
    }
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    candidates.dedup();

    let mut space = CycleSpace {
        pivots: BTreeMap::new(),
    };
    let mut basis = Vec::new();
    for cycle in candidates {
        let mut v = EdgeSet::new(m);
        for &b in &cycle {
            v.toggle(b);
        }
        if space.insert(v) {
            basis.push(cycle);
            if basis.len() == rank {
                break;
            }
        }
    }
    basis
}

/// Ring counts bucketed by size 3 through 6; larger rings are ignored.
pub fn ring_counts(mol: &Molecule) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for ring in sssr(mol) {
        if (3..=6).contains(&ring.len()) {
            *out.entry(ring.len()).or_insert(0) += 1;
        }
    }
    out
}

/// Atom indices of a ring given as bond indices.
pub fn ring_atoms_of(mol: &Molecule, ring: &[usize]) -> Vec<usize> {
    let mut atoms: Vec<usize> = ring
        .iter()
        .flat_map(|&b| [mol.bond(b).a, mol.bond(b).b])
        .collect();
    atoms.sort_unstable();
    atoms.dedup();
    atoms
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use fraggen_chem::{
    canonical_smiles, check_valence, parse_smiles, ring_counts, write_smiles, Atom, BondOrder,
    Element, Molecule,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<String> {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/zinc_clean_leads_50k.smi");
    fs::read_to_string(path)
        .expect("corpus file")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect()
}

/// Rebuild `mol` with atoms renumbered by `perm` (new index of old atom i is
/// perm[i]) and bonds added in shuffled order.
fn permuted(mol: &Molecule, perm: &[usize], rng: &mut ChaCha8Rng) -> Molecule {
    let mut inverse = vec![0; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        inverse[new] = old;
    }
    let mut out = Molecule::new();
    for &old in &inverse {
        out.add_atom(mol.atom(old).clone());
    }
    let mut bonds: Vec<_> = mol.bonds().to_vec();
    bonds.shuffle(rng);
    for b in bonds {
        out.add_bond(perm[b.a], perm[b.b], b.order).unwrap();
    }
    out
}

#[test]
fn whole_corpus_parses_and_passes_valence() {
    let corpus = corpus();
    assert_eq!(corpus.len(), 50_000);
    for s in &corpus {
        let m = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert!(check_valence(&m), "{s}");
        assert!(m.is_connected());
    }
}

#[test]
fn canonical_round_trip_on_corpus_sample() {
    for s in corpus().iter().take(1000) {
        let m = parse_smiles(s).unwrap();
        let c = write_smiles(&m, true);
        let back = parse_smiles(&c).unwrap_or_else(|e| panic!("{s} -> {c}: {e}"));
        assert_eq!(back.atom_count(), m.atom_count());
        assert_eq!(back.bond_count(), m.bond_count());
        assert_eq!(write_smiles(&back, true), c, "{s}");
        // Non-canonical output must describe the same graph too.
        let plain = write_smiles(&m, false);
        assert_eq!(canonical_smiles(&plain).unwrap(), c, "{s}");
    }
}

#[test]
fn canonical_invariance_under_permutation_on_corpus_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in corpus().iter().take(1000) {
        let m = parse_smiles(s).unwrap();
        let reference = write_smiles(&m, true);
        for _ in 0..3 {
            let mut perm: Vec<usize> = (0..m.atom_count()).collect();
            perm.shuffle(&mut rng);
            let p = permuted(&m, &perm, &mut rng);
            assert_eq!(write_smiles(&p, true), reference, "{s}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_form_ignores_atom_order(idx in 0usize..50_000, seed in any::<u64>()) {
        thread_local! {
            static CORPUS: Vec<String> = corpus();
        }
        let s = CORPUS.with(|c| c[idx].clone());
        let m = parse_smiles(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..m.atom_count()).collect();
        perm.shuffle(&mut rng);
        let p = permuted(&m, &perm, &mut rng);
        prop_assert_eq!(write_smiles(&p, true), write_smiles(&m, true));
    }
}

// ---- ring perception against brute force ----

fn all_simple_cycles(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut found = BTreeSet::new();
    fn dfs(
        start: usize,
        v: usize,
        adj: &[Vec<(usize, usize)>],
        on_path: &mut Vec<bool>,
        path: &mut Vec<usize>,
        found: &mut BTreeSet<BTreeSet<usize>>,
    ) {
        for &(w, e) in &adj[v] {
            if w == start && path.len() >= 2 && !path.contains(&e) {
                let mut cyc: BTreeSet<usize> = path.iter().copied().collect();
                cyc.insert(e);
                found.insert(cyc);
            } else if w > start && !on_path[w] {
                on_path[w] = true;
                path.push(e);
                dfs(start, w, adj, on_path, path, found);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        dfs(s, s, &adj, &mut on_path, &mut Vec::new(), &mut found);
    }
    found.into_iter().collect()
}

/// Minimum cycle basis by greedy selection over every simple cycle.
fn brute_force_ring_counts(n: usize, edges: &[(usize, usize)]) -> BTreeMap<usize, usize> {
    let mut cycles = all_simple_cycles(n, edges);
    cycles.sort_by_key(|c| c.len());
    // Rows keyed by their highest set bit.
    let mut basis: BTreeMap<u32, u128> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for c in cycles {
        let mut v: u128 = c.iter().fold(0, |acc, &e| acc | (1u128 << e));
        while v != 0 {
            let top = 127 - v.leading_zeros();
            match basis.get(&top) {
                Some(row) => v ^= row,
                None => {
                    basis.insert(top, v);
                    if (3..=6).contains(&c.len()) {
                        *out.entry(c.len()).or_insert(0) += 1;
                    }
                    break;
                }
            }
        }
    }
    out
}

fn carbon_graph(n: usize, edges: &[(usize, usize)]) -> Molecule {
    let mut m = Molecule::new();
    for _ in 0..n {
        m.add_atom(Atom {
            explicit_h: Some(0),
            ..Atom::new(Element::C)
        });
    }
    for &(a, b) in edges {
        m.add_bond(a, b, BondOrder::Single).unwrap();
    }
    m
}

fn connected_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3usize..=12)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let extra = proptest::collection::vec((0..n, 0..n), 0..=7);
            (Just(n), parents, extra)
        })
        .prop_map(|(n, parents, extra)| {
            let mut set = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                set.insert((p, i + 1));
            }
            for (a, b) in extra {
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            }
            (n, set.into_iter().collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn ring_counts_match_brute_force((n, edges) in connected_graph()) {
        let m = carbon_graph(n, &edges);
        prop_assert_eq!(ring_counts(&m), brute_force_ring_counts(n, &edges));
    }
}

#[test]
fn ring_counts_match_brute_force_on_named_systems() {
    for s in [
        "c1ccccc1",
        "C1CC1",
        "c1ccc2ccccc2c1",
        "C12C3C4C1C5C2C3C45",
        "C1CC2CCC1C2",
        "C1CC2(C1)CC2",
        "c1cc2ccc3cccc4ccc(c1)c2c34",
        "C1C2CC3CC1CC(C2)C3",
    ] {
        let m = parse_smiles(s).unwrap();
        let edges: Vec<_> = m.bonds().iter().map(|b| (b.a, b.b)).collect();
        assert_eq!(
            ring_counts(&m),
            brute_force_ring_counts(m.atom_count(), &edges),
            "{s}"
        );
    }
}

#[test]
fn ring_counts_match_brute_force_on_small_corpus_molecules() {
    let mut checked = 0;
    for s in corpus() {
        let m = parse_smiles(&s).unwrap();
        if m.atom_count() > 12 {
            continue;
        }
        let edges: Vec<_> = m.bonds().iter().map(|b| (b.a, b.b)).collect();
        assert_eq!(
            ring_counts(&m),
            brute_force_ring_counts(m.atom_count(), &edges),
            "{s}"
        );
        checked += 1;
    }
    assert!(checked > 0);
}

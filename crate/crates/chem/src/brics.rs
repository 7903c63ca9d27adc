//! BRICS bond perception, left-to-right recursive fragmentation and its
//! inverse.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::molgraph::{write_smiles, Atom, BondOrder, Molecule};
use crate::smarts::{MatchContext, SmartsPattern};

/// Link environments: (label, pattern rooted at the bond endpoint).
pub const BRICS_ENVIRONMENTS: &[(u8, &str)] = &[
    (1, "[C;D3]([#0,#6,#7,#8])(=O)"),
    (3, "[O;D2]-;!@[#0,#6,#1]"),
    (4, "[C;!D1;!$(C=*)]-;!@[#6]"),
    (
        5,
        "[N;!D1;!$(N=*);!$(N-[!#6;!#16;!#0;!#1]);!$([N;R]@[C;R]=O)]",
    ),
    (6, "[C;D3;!R](=O)-;!@[#0,#6,#7,#8]"),
    (8, "[C;!R;!D1;!$(C!-*)]"),
    (9, "[n;+0;$(n(:[c,n,o,s]):[c,n,o,s])]"),
    (10, "[N;R;$(N(@C(=O))@[C,N,O,S])]"),
    (11, "[S;D2](-;!@[#0,#6])"),
    (12, "[S;D4]([#6,#0])(=O)(=O)"),
    (13, "[C;$(C(-;@[C,N,O,S])-;@[N,O,S])]"),
    (14, "[c;$(c(:[c,n,o,s]):[n,o,s])]"),
    (15, "[C;$(C(-;@C)-;@C)]"),
    (16, "[c;$(c(:c):c)]"),
];

/// Unordered environment pairs whose connecting single bond may be cut.
pub const BRICS_PAIRS: &[(u8, u8)] = &[
    (1, 3),
    (1, 5),
    (1, 10),
    (3, 4),
    (3, 13),
    (3, 14),
    (3, 15),
    (3, 16),
    (4, 5),
    (4, 11),
    (5, 12),
    (5, 14),
    (5, 16),
    (5, 13),
    (5, 15),
    (6, 13),
    (6, 14),
    (6, 15),
    (6, 16),
    (8, 9),
    (8, 10),
    (8, 13),
    (8, 14),
    (8, 15),
    (8, 16),
    (9, 13),
    (9, 14),
    (9, 15),
    (9, 16),
    (10, 13),
    (10, 14),
    (10, 15),
    (10, 16),
    (11, 13),
    (11, 14),
    (11, 15),
    (11, 16),
    (13, 14),
    (13, 15),
    (13, 16),
    (14, 14),
    (14, 15),
    (14, 16),
    (15, 16),
    (16, 16),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BricsError {
    #[error("bond {0} is not in the molecule")]
    NoSuchBond(usize),
    #[error("bond {0} lies in a ring; deleting it would not split the molecule")]
    RingBond(usize),
    #[error("input already contains attachment points")]
    HasDummies,
    #[error("non-linear fragmentation: attachment counts {0:?}")]
    NonLinear(Vec<usize>),
    #[error("attachment constraint violated: counts {0:?}")]
    AttachmentConstraint(Vec<usize>),
    #[error("empty fragment sequence")]
    Empty,
    #[error("rule table references undefined environment L{0}")]
    UndefinedEnvironment(u8),
}

pub struct BricsRuleTable {
    environments: Vec<(u8, SmartsPattern)>,
    pairs: BTreeSet<(u8, u8)>,
}

impl BricsRuleTable {
    pub fn new(environments: &[(u8, &str)], pairs: &[(u8, u8)]) -> Result<Self, BricsError> {
        let envs: Vec<(u8, SmartsPattern)> = environments
            .iter()
            .map(|&(id, s)| (id, SmartsPattern::parse(s).expect("environment pattern")))
            .collect();
        let mut set = BTreeSet::new();
        for &(a, b) in pairs {
            for id in [a, b] {
                if !envs.iter().any(|(e, _)| *e == id) || id >= 32 {
                    return Err(BricsError::UndefinedEnvironment(id));
                }
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(BricsRuleTable {
            environments: envs,
            pairs: set,
        })
    }

    /// The built-in table.
    pub fn standard() -> &'static BricsRuleTable {
        static TABLE: OnceLock<BricsRuleTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            BricsRuleTable::new(BRICS_ENVIRONMENTS, BRICS_PAIRS).expect("built-in BRICS table")
        })
    }

    /// Bit `i` set when the atom matches environment Li.
    pub fn environments_of(&self, ctx: &MatchContext, atom: usize) -> u32 {
        self.environments
            .iter()
            .filter(|(_, p)| p.matches_at(ctx, atom))
            .fold(0, |acc, (id, _)| acc | (1 << id))
    }

    fn compatible(&self, a: u32, b: u32) -> bool {
        self.pairs.iter().any(|&(x, y)| {
            (a >> x & 1 == 1 && b >> y & 1 == 1) || (a >> y & 1 == 1 && b >> x & 1 == 1)
        })
    }
}

struct Licenser<'a> {
    rules: &'a BricsRuleTable,
    ctx: MatchContext<'a>,
    envs: Vec<Option<u32>>,
}

impl<'a> Licenser<'a> {
    fn new(mol: &'a Molecule, rules: &'a BricsRuleTable) -> Self {
        Licenser {
            rules,
            ctx: MatchContext::new(mol),
            envs: vec![None; mol.atom_count()],
        }
    }

    fn env(&mut self, atom: usize) -> u32 {
        if let Some(e) = self.envs[atom] {
            return e;
        }
        let e = self.rules.environments_of(&self.ctx, atom);
        self.envs[atom] = Some(e);
        e
    }

    fn licensed(&mut self, bond: usize) -> bool {
        let b = *self.ctx.molecule().bond(bond);
        if b.order != BondOrder::Single || self.ctx.is_ring_bond(bond) {
            return false;
        }
        let (ea, eb) = (self.env(b.a), self.env(b.b));
        ea != 0 && eb != 0 && self.rules.compatible(ea, eb)
    }
}

/// Every licensed BRICS bond, as bond indices in ascending order.
pub fn find_brics_bonds(mol: &Molecule) -> Vec<usize> {
    let mut lic = Licenser::new(mol, BricsRuleTable::standard());
    (0..mol.bond_count()).filter(|&b| lic.licensed(b)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FragmentOptions {
    /// A licensed bond is only cut when both sides keep at least this many
    /// heavy atoms. 1 reproduces plain BRICS cutting.
    pub min_fragment_atoms: usize,
}

impl Default for FragmentOptions {
    fn default() -> Self {
        FragmentOptions {
            min_fragment_atoms: 3,
        }
    }
}

/// Heavy atoms on the side of `bond` that contains `atom`.
fn heavy_on_side(mol: &Molecule, atom: usize, bond: usize) -> usize {
    mol.component_of(atom, Some(bond))
        .into_iter()
        .filter(|&a| mol.atom(a).is_heavy())
        .count()
}

/// First breakable bond in scan order: atoms by index, and for each atom its
/// bonds to higher-index neighbors by ascending neighbor index.
pub fn find_first_brics_bond(mol: &Molecule, opts: &FragmentOptions) -> Option<usize> {
    let mut lic = Licenser::new(mol, BricsRuleTable::standard());
    let total_heavy = mol.heavy_atom_count();
    for i in 0..mol.atom_count() {
        let mut nbs: Vec<_> = mol
            .neighbors(i)
            .iter()
            .filter(|nb| nb.atom > i)
            .copied()
            .collect();
        nbs.sort_by_key(|nb| nb.atom);
        for nb in nbs {
            if !lic.licensed(nb.bond) {
                continue;
            }
            if opts.min_fragment_atoms > 1 {
                let left = heavy_on_side(mol, i, nb.bond);
                if left < opts.min_fragment_atoms || total_heavy - left < opts.min_fragment_atoms {
                    continue;
                }
            }
            return Some(nb.bond);
        }
    }
    None
}

/// A molecule piece; dummy atoms mark where neighbors were cut away.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub mol: Molecule,
}

impl Fragment {
    pub fn new(mol: Molecule) -> Self {
        Fragment { mol }
    }

    pub fn attachment_count(&self) -> usize {
        attachment_points(self)
    }

    pub fn canonical_smiles(&self) -> String {
        write_smiles(&self.mol, true)
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_smiles())
    }
}

pub fn attachment_points(frag: &Fragment) -> usize {
    frag.mol.dummy_atoms().len()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FragmentSequence {
    pub frags: Vec<Fragment>,
}

impl FragmentSequence {
    pub fn len(&self) -> usize {
        self.frags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frags.is_empty()
    }

    pub fn attachment_counts(&self) -> Vec<usize> {
        self.frags.iter().map(Fragment::attachment_count).collect()
    }

    /// First and last carry one attachment, middle ones two; a lone fragment none.
    pub fn is_linear(&self) -> bool {
        is_linear_chain(&self.attachment_counts())
    }

    pub fn canonical_smiles(&self) -> Vec<String> {
        self.frags.iter().map(Fragment::canonical_smiles).collect()
    }
}

pub fn is_linear_chain(counts: &[usize]) -> bool {
    match counts {
        [] => false,
        [only] => *only == 0,
        [first, middle @ .., last] => *first == 1 && *last == 1 && middle.iter().all(|&c| c == 2),
    }
}

/// Delete `bond`, cap both ends with a dummy, and split. The dummy on the
/// lower-index endpoint is appended first. Returns the piece holding the
/// lower-index endpoint and the other piece, each keeping relative atom order.
pub fn break_bond(mol: &Molecule, bond: usize) -> Result<(Fragment, Molecule), BricsError> {
    let (left, _, right, _) = split_at(mol, bond)?;
    Ok((Fragment::new(left), right))
}

type Split = (Molecule, Vec<Option<usize>>, Molecule, Vec<Option<usize>>);

/// Like [`break_bond`] but also returns old→new index maps into the capped
/// molecule for both pieces.
fn split_at(mol: &Molecule, bond: usize) -> Result<Split, BricsError> {
    if bond >= mol.bond_count() {
        return Err(BricsError::NoSuchBond(bond));
    }
    let b = *mol.bond(bond);
    let (lo, hi) = (b.a.min(b.b), b.a.max(b.b));
    let mut capped = mol
        .without_bond(bond)
        .map_err(|_| BricsError::NoSuchBond(bond))?;
    if capped.component_of(lo, None).contains(&hi) {
        return Err(BricsError::RingBond(bond));
    }
    let d_lo = capped.add_atom(Atom::dummy());
    capped
        .add_bond(lo, d_lo, BondOrder::Single)
        .expect("fresh dummy");
    let d_hi = capped.add_atom(Atom::dummy());
    capped
        .add_bond(hi, d_hi, BondOrder::Single)
        .expect("fresh dummy");
    let left_atoms = capped.component_of(lo, None);
    let right_atoms = capped.component_of(hi, None);
    let (left, lmap) = capped.induced(&left_atoms);
    let (right, rmap) = capped.induced(&right_atoms);
    Ok((left, lmap, right, rmap))
}

/// Outcome of the recursion, kept even when the result is not linear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragmentation {
    pub sequence: FragmentSequence,
    /// Cut bonds as (lower, higher) atom indices of the input molecule, in cut order.
    pub broken: Vec<(usize, usize)>,
}

impl Fragmentation {
    pub fn is_linear(&self) -> bool {
        self.sequence.is_linear()
    }
}

/// Run the recursion without rejecting non-linear outcomes.
pub fn fragment_with_trace(
    mol: &Molecule,
    opts: &FragmentOptions,
) -> Result<Fragmentation, BricsError> {
    if !mol.dummy_atoms().is_empty() {
        return Err(BricsError::HasDummies);
    }
    let mut frags = Vec::new();
    let mut broken = Vec::new();
    let mut rest = mol.clone();
    // Input index of each atom in `rest`; None for dummies.
    let mut origin: Vec<Option<usize>> = (0..mol.atom_count()).map(Some).collect();
    while let Some(bond) = find_first_brics_bond(&rest, opts) {
        let b = *rest.bond(bond);
        let (x, y) = (origin[b.a].expect("heavy"), origin[b.b].expect("heavy"));
        broken.push((x.min(y), x.max(y)));
        let (left, _, right, rmap) = split_at(&rest, bond)?;
        frags.push(Fragment::new(left));
        let mut next_origin = vec![None; right.atom_count()];
        for (old, new) in rmap.iter().enumerate() {
            if let Some(new) = new {
                next_origin[*new] = origin.get(old).copied().flatten();
            }
        }
        origin = next_origin;
        rest = right;
    }
    frags.push(Fragment::new(rest));
    Ok(Fragmentation {
        sequence: FragmentSequence { frags },
        broken,
    })
}

/// Left-to-right recursive BRICS fragmentation. Non-linear outcomes are errors.
pub fn fragment_molecule(
    mol: &Molecule,
    opts: &FragmentOptions,
) -> Result<FragmentSequence, BricsError> {
    let f = fragment_with_trace(mol, opts)?;
    if !f.is_linear() {
        return Err(BricsError::NonLinear(f.sequence.attachment_counts()));
    }
    Ok(f.sequence)
}

/// Join `incoming` (to the left) onto `partial` by deleting one dummy from
/// each and bonding their neighbors. Incoming atoms come first.
fn join(incoming: &Molecule, in_dummy: usize, partial: &Molecule, p_dummy: usize) -> Molecule {
    let anchor_in = incoming.neighbors(in_dummy)[0].atom;
    let anchor_p = partial.neighbors(p_dummy)[0].atom;
    let mut out = Molecule::new();
    let mut map_in = vec![None; incoming.atom_count()];
    for (i, a) in incoming.atoms().iter().enumerate() {
        if i != in_dummy {
            map_in[i] = Some(out.add_atom(a.clone()));
        }
    }
    let mut map_p = vec![None; partial.atom_count()];
    for (i, a) in partial.atoms().iter().enumerate() {
        if i != p_dummy {
            map_p[i] = Some(out.add_atom(a.clone()));
        }
    }
    for (mol, map) in [(incoming, &map_in), (partial, &map_p)] {
        for b in mol.bonds() {
            if let (Some(x), Some(y)) = (map[b.a], map[b.b]) {
                out.add_bond(x, y, b.order).expect("copy of simple graph");
            }
        }
    }
    out.add_bond(
        map_in[anchor_in].expect("anchor kept"),
        map_p[anchor_p].expect("anchor kept"),
        BondOrder::Single,
    )
    .expect("pieces are disjoint");
    out
}

/// Rebuild a molecule from a linear sequence, folding right to left. Each
/// incoming fragment attaches through its higher-index dummy.
pub fn reassemble(seq: &FragmentSequence) -> Result<Molecule, BricsError> {
    let counts = seq.attachment_counts();
    if counts.is_empty() {
        return Err(BricsError::Empty);
    }
    if !is_linear_chain(&counts) {
        return Err(BricsError::AttachmentConstraint(counts));
    }
    for f in &seq.frags {
        for d in f.mol.dummy_atoms() {
            if f.mol.degree(d) != 1 {
                return Err(BricsError::AttachmentConstraint(counts));
            }
        }
    }
    let mut partial = seq.frags.last().expect("non-empty").mol.clone();
    for frag in seq.frags.iter().rev().skip(1) {
        let p_dummy = partial.dummy_atoms()[0];
        let in_dummy = *frag.mol.dummy_atoms().last().expect("has attachment");
        partial = join(&frag.mol, in_dummy, &partial, p_dummy);
    }
    Ok(partial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{canonical_smiles, parse_smiles};

    const ASPIRIN: &str = "CC(=O)Oc1ccccc1C(=O)O";

    fn literal() -> FragmentOptions {
        FragmentOptions {
            min_fragment_atoms: 1,
        }
    }

    fn frag(s: &str) -> Fragment {
        Fragment::new(parse_smiles(s).unwrap())
    }

    #[test]
    fn no_bonds_to_break() {
        for s in ["C", "c1ccccc1"] {
            let m = parse_smiles(s).unwrap();
            assert_eq!(find_first_brics_bond(&m, &literal()), None);
            let seq = fragment_molecule(&m, &literal()).unwrap();
            assert_eq!(seq.attachment_counts(), vec![0]);
        }
    }

    #[test]
    fn aspirin_cuts() {
        let m = parse_smiles(ASPIRIN).unwrap();
        let f = fragment_with_trace(&m, &literal()).unwrap();
        assert_eq!(f.broken, vec![(1, 3), (3, 4), (9, 10)]);
        let f = fragment_with_trace(&m, &FragmentOptions::default()).unwrap();
        assert_eq!(f.broken, vec![(1, 3), (9, 10)]);
        assert_eq!(
            f.sequence.canonical_smiles(),
            vec![
                canonical_smiles("CC(*)=O").unwrap(),
                canonical_smiles("*Oc1ccccc1*").unwrap(),
                canonical_smiles("*C(=O)O").unwrap(),
            ]
        );
    }

    #[test]
    fn break_conserves_atoms_and_rejects_ring_bonds() {
        let m = parse_smiles(ASPIRIN).unwrap();
        let (left, right) = break_bond(&m, 2).unwrap();
        assert_eq!(
            left.mol.atom_count() + right.atom_count(),
            m.atom_count() + 2
        );
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(break_bond(&benzene, 0), Err(BricsError::RingBond(0)));
        assert_eq!(break_bond(&benzene, 99), Err(BricsError::NoSuchBond(99)));
    }

    #[test]
    fn reassembly_inverts_fragmentation() {
        let m = parse_smiles(ASPIRIN).unwrap();
        for opts in [literal(), FragmentOptions::default()] {
            let seq = fragment_molecule(&m, &opts).unwrap();
            let back = reassemble(&seq).unwrap();
            assert_eq!(write_smiles(&back, true), write_smiles(&m, true));
        }
    }

    #[test]
    fn attachment_counting() {
        assert_eq!(attachment_points(&frag("*Nc1ccc(O*)cc1")), 2);
        assert_eq!(attachment_points(&frag("*C(=O)N1CCN(Cc2ccccc2)CC1")), 1);
        assert_eq!(attachment_points(&frag("CCO")), 0);
    }

    #[test]
    fn reassembly_constraints() {
        let single = FragmentSequence {
            frags: vec![frag("CCO")],
        };
        assert_eq!(write_smiles(&reassemble(&single).unwrap(), true), "CCO");
        let bad = FragmentSequence {
            frags: vec![frag("*C"), frag("*C"), frag("*C")],
        };
        assert_eq!(
            reassemble(&bad),
            Err(BricsError::AttachmentConstraint(vec![1, 1, 1]))
        );
        assert_eq!(
            reassemble(&FragmentSequence::default()),
            Err(BricsError::Empty)
        );
        let pair = FragmentSequence {
            frags: vec![frag("*C(C)=O"), frag("*Oc1ccccc1")],
        };
        assert_eq!(
            write_smiles(&reassemble(&pair).unwrap(), true),
            canonical_smiles("CC(=O)Oc1ccccc1").unwrap()
        );
    }

    #[test]
    fn table_rejects_undefined_labels() {
        assert_eq!(
            BricsRuleTable::new(&[(1, "C")], &[(1, 2)]).err(),
            Some(BricsError::UndefinedEnvironment(2))
        );
        assert!(BricsRuleTable::standard().pairs.len() == BRICS_PAIRS.len());
    }
}

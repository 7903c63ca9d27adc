"""Regenerates the frozen reference values under data/oracle/.

Requires RDKit. The Rust test suites only read the TSV outputs; this script is
kept so the fixtures can be rebuilt and audited.

    python3 tools/oracle/gen_oracles.py --moses-train train.csv

Without --moses-train the existing data/zinc_clean_leads_50k.smi is reused.
"""
import argparse
import random
from pathlib import Path

from rdkit import Chem, RDLogger
from rdkit.Chem import BRICS, Crippen

RDLogger.DisableLog("rdApp.*")
ROOT = Path(__file__).resolve().parents[2]
DATA = ROOT / "data"


def licensed_single_bonds(mol):
    out = set()
    for (a, b), _ in BRICS.FindBRICSBonds(mol):
        bond = mol.GetBondBetweenAtoms(a, b)
        if bond.GetBondType() == Chem.BondType.SINGLE and not bond.IsInRing():
            out.add((min(a, b), max(a, b)))
    return out


def component(mol, start):
    seen, stack = set(), [start]
    while stack:
        a = stack.pop()
        if a in seen:
            continue
        seen.add(a)
        stack.extend(n.GetIdx() for n in mol.GetAtomWithIdx(a).GetNeighbors())
    return seen


def sides(mol, i, j):
    rw = Chem.RWMol(mol)
    rw.RemoveBond(i, j)
    g = rw.GetMol()
    return component(g, i), component(g, j)


def heavy(mol, atoms):
    return sum(1 for a in atoms if mol.GetAtomWithIdx(a).GetAtomicNum() > 0)


def left_to_right(mol, min_atoms):
    """Left-to-right recursive BRICS fragmentation over RDKit's bond finder."""
    rw = Chem.RWMol(mol)
    remainder = set(range(mol.GetNumAtoms()))
    broken, frags = [], []
    while True:
        cur = rw.GetMol()
        cur.UpdatePropertyCache(False)
        Chem.FastFindRings(cur)
        licensed = {b for b in licensed_single_bonds(cur) if b[0] in remainder and b[1] in remainder}
        first = None
        for i in sorted(remainder):
            for j in sorted(n.GetIdx() for n in cur.GetAtomWithIdx(i).GetNeighbors()):
                if j > i and (i, j) in licensed:
                    left, right = sides(cur, i, j)
                    if heavy(cur, left) >= min_atoms and heavy(cur, right) >= min_atoms:
                        first = (i, j)
                        break
            if first:
                break
        if first is None:
            frags.append(remainder)
            break
        i, j = first
        broken.append(first)
        rw.RemoveBond(i, j)
        d1 = rw.AddAtom(Chem.Atom(0))
        rw.AddBond(i, d1, Chem.BondType.SINGLE)
        d2 = rw.AddAtom(Chem.Atom(0))
        rw.AddBond(j, d2, Chem.BondType.SINGLE)
        remainder |= {d1, d2}
        left = component(rw.GetMol(), i) & remainder
        frags.append(left)
        remainder -= left
    g = rw.GetMol()
    dummies = [sum(1 for a in f if g.GetAtomWithIdx(a).GetAtomicNum() == 0) for f in frags]
    if len(frags) == 1:
        linear = dummies[0] == 0
    else:
        linear = dummies[0] == 1 and dummies[-1] == 1 and all(d == 2 for d in dummies[1:-1])
    return broken, len(frags), linear


def fmt_bonds(bonds):
    return ",".join(f"{a}-{b}" for a, b in bonds) if bonds else "-"


EXTRA_LOGP = [
    "C", "CCO", "CC", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O", "C[N+](=O)[O-]", "CC(=O)[O-]",
    "C[NH3+]", "c1cc[nH]c1", "c1ccncc1", "O=c1cccc[nH]1", "CS(N)(=O)=O", "CSC", "c1ccsc1",
    "OP(=O)(O)O", "ClCBr", "CI", "CC#N", "C=C", "CC=O", "O=CO", "c1ccoc1", "CN(C)C",
    "NC(=O)c1ccccc1", "Oc1ccccc1", "Clc1ccccc1", "Fc1ccccc1", "Brc1ccccc1", "Ic1ccccc1",
    "C[n+]1ccccc1", "CC(C)(C)C", "C1CC1", "C1CCCCC1", "CC(=O)N", "CCS", "CS(C)=O",
    "O=[N+]([O-])c1ccccc1", "C#C", "N#N", "CC=NO", "OO", "c1ccc2ccccc2c1", "C[S-]",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--moses-train")
    ap.add_argument("--seed", type=int, default=20190411)
    args = ap.parse_args()

    if args.moses_train:
        lines = Path(args.moses_train).read_text().split("\n")[1:]
        lines = [l.strip() for l in lines if l.strip()]
        rng = random.Random(args.seed)
        subset = rng.sample(lines, 50000)
        with open(DATA / "zinc_clean_leads_50k.smi", "w") as f:
            f.write("# 50,000 molecules sampled from the MOSES training split (ZINC Clean Leads)\n")
            for s in subset:
                f.write(s + "\n")
    else:
        text = (DATA / "zinc_clean_leads_50k.smi").read_text().split("\n")
        subset = [l.strip() for l in text if l.strip() and not l.startswith("#")]

    probe = subset[:1000]
    with open(DATA / "oracle" / "brics_bonds.tsv", "w") as f:
        f.write("# smiles\tlicensed single non-ring BRICS bonds (RDKit FindBRICSBonds)\n")
        for s in subset[:5000]:
            m = Chem.MolFromSmiles(s)
            f.write(f"{s}\t{fmt_bonds(sorted(licensed_single_bonds(m)))}\n")

    with open(DATA / "oracle" / "left_to_right.tsv", "w") as f:
        f.write("# smiles\tmin_atoms\tbroken bonds in order\tfragment count\tlinear\n")
        for s in probe + ["CC(=O)Oc1ccccc1C(=O)O"]:
            m = Chem.MolFromSmiles(s)
            for min_atoms in (1, 3):
                broken, n, linear = left_to_right(m, min_atoms)
                f.write(f"{s}\t{min_atoms}\t{fmt_bonds(broken)}\t{n}\t{int(linear)}\n")

    with open(DATA / "oracle" / "structure_counts.tsv", "w") as f:
        f.write("# smiles\theavy atoms\tbonds between heavy atoms\tSSSR rings\n")
        for s in subset[:5000]:
            m = Chem.MolFromSmiles(s)
            rings = len(Chem.GetSSSR(m))
            f.write(f"{s}\t{m.GetNumHeavyAtoms()}\t{m.GetNumBonds()}\t{rings}\n")

    with open(DATA / "oracle" / "crippen_logp.tsv", "w") as f:
        f.write("# smiles\tRDKit Crippen MolLogP\n")
        for s in EXTRA_LOGP + probe:
            m = Chem.MolFromSmiles(s)
            f.write(f"{s}\t{Crippen.MolLogP(m):.6f}\n")


if __name__ == "__main__":
    main()

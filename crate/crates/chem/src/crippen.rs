//! Wildman–Crippen atom-contribution logP.
//!
//! Every atom, hydrogens included, is assigned the first type in
//! [`CRIPPEN_TYPES`] whose pattern matches rooted at that atom; logP is the
//! sum of the type contributions.

use std::sync::OnceLock;

use thiserror::Error;

use crate::molgraph::Molecule;
use crate::smarts::{MatchContext, SmartsPattern};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogpError {
    #[error("no Crippen atom type matches atom {index} ({symbol})")]
    Unclassified { index: usize, symbol: String },
}

/// Atom types in priority order: (type id, patterns, logP contribution).
pub const CRIPPEN_TYPES: &[(&str, &[&str], f64)] = &[
    ("C1", &["[CH4]", "[CH3]C", "[CH2](C)C"], 0.1441),
    ("C2", &["[CH](C)(C)C", "[C](C)(C)(C)C"], 0.0),
    (
        "C3",
        &[
            "[CH3][N,O,P,S,F,Cl,Br,I]",
            "[CH2X4]([N,O,P,S,F,Cl,Br,I])[A;!#1]",
        ],
        -0.2035,
    ),
    (
        "C4",
        &[
            "[CH1X4]([N,O,P,S,F,Cl,Br,I])([A;!#1])[A;!#1]",
            "[CH0X4]([N,O,P,S,F,Cl,Br,I])([A;!#1])([A;!#1])[A;!#1]",
        ],
        -0.2051,
    ),
    ("C5", &["[C]=[!C;A;!#1]"], -0.2783),
    (
        "C6",
        &[
            "[CH2]=C",
            "[CH1](=C)[A;!#1]",
            "[CH0](=C)([A;!#1])[A;!#1]",
            "[C](=C)=C",
        ],
        0.1551,
    ),
    ("C7", &["[CX2]#[A;!#1]"], 0.0017),
    ("C8", &["[CH3]c"], 0.08452),
    ("C9", &["[CH3]a"], -0.1444),
    ("C10", &["[CH2X4]a"], -0.0516),
    ("C11", &["[CHX4]a"], 0.1193),
    ("C12", &["[CH0X4]a"], -0.0967),
    ("C13", &["[cH0]-[A;!C;!N;!O;!S;!F;!Cl;!Br;!I;!#1]"], -0.5443),
    ("C14", &["[c][#9]"], 0.0),
    ("C15", &["[c][#17]"], 0.245),
    ("C16", &["[c][#35]"], 0.198),
    ("C17", &["[c][#53]"], 0.0),
    ("C18", &["[cH]"], 0.1581),
    ("C19", &["[c](:a)(:a):a"], 0.2955),
    ("C20", &["[c](:a)(:a)-a"], 0.2713),
    ("C21", &["[c](:a)(:a)-C"], 0.136),
    ("C22", &["[c](:a)(:a)-N"], 0.4619),
    ("C23", &["[c](:a)(:a)-O"], 0.5437),
    ("C24", &["[c](:a)(:a)-S"], 0.1893),
    ("C25", &["[c](:a)(:a)=[C,N,O]"], -0.8186),
    (
        "C26",
        &["[C](=C)(a)[A;!#1]", "[C](=C)(c)a", "[CH1](=C)a", "[C]=c"],
        0.264,
    ),
    (
        "C27",
        &["[CX4][A;!C;!N;!O;!P;!S;!F;!Cl;!Br;!I;!#1]"],
        0.2148,
    ),
    ("CS", &["[#6]"], 0.08129),
    ("H1", &["[#1][#6,#1]"], 0.123),
    (
        "H2",
        &[
            "[#1]O[CX4,c]",
            "[#1]O[!#6;!#7;!#8;!#16]",
            "[#1][!#6;!#7;!#8]",
        ],
        -0.2677,
    ),
    ("H3", &["[#1][#7]", "[#1]O[#7]"], 0.2142),
    ("H4", &["[#1]OC=[#6,#7,O,S]", "[#1]O[O,S]"], 0.298),
    ("HS", &["[#1]"], 0.1125),
    ("N1", &["[NH2+0][A;!#1]"], -1.019),
    ("N2", &["[NH+0]([A;!#1])[A;!#1]"], -0.7096),
    ("N3", &["[NH2+0]a"], -1.027),
    ("N4", &["[NH1+0]([!#1;A,a])a"], -0.5188),
    ("N5", &["[NH+0]=[!#1;A,a]"], 0.08387),
    ("N6", &["[N+0](=[!#1;A,a])[!#1;A,a]"], 0.1836),
    ("N7", &["[N+0]([A;!#1])([A;!#1])[A;!#1]"], -0.3187),
    (
        "N8",
        &["[N+0](a)([!#1;A,a])[A;!#1]", "[N+0](a)(a)a"],
        -0.4458,
    ),
    ("N9", &["[N+0]#[A;!#1]"], 0.01508),
    ("N10", &["[NH3,NH2,NH;+,+2,+3]"], -1.95),
    ("N11", &["[n+0]"], -0.3239),
    ("N12", &["[n;+,+2,+3]"], -1.119),
    (
        "N13",
        &[
            "[NH0;+,+2,+3]([A;!#1])([A;!#1])([A;!#1])[A;!#1]",
            "[NH0;+,+2,+3](=[A;!#1])([A;!#1])[!#1;A,a]",
            "[NH0;+,+2,+3](=[#6])=[#7]",
        ],
        -0.3396,
    ),
    (
        "N14",
        &[
            "[N;+,+2,+3]#[A;!#1]",
            "[N;-,-2,-3]",
            "[N;+,+2,+3](=[N;-,-2,-3])=N",
        ],
        0.2887,
    ),
    ("NS", &["[#7]"], -0.4806),
    ("O1", &["[o]"], 0.1552),
    ("O2", &["[OH,OH2]"], -0.2893),
    ("O3", &["[O]([A;!#1])[A;!#1]"], -0.0684),
    ("O4", &["[O](a)[!#1;A,a]"], -0.4195),
    ("O5", &["[O]=[#7,#8]", "[OX1;-,-2,-3][#7]"], 0.0335),
    ("O6", &["[OX1;-,-2,-2][#16]", "[O;-0]=[#16;-0]"], -0.3339),
    ("O12", &["[O-]C(=O)"], -1.326),
    ("O7", &["[OX1;-,-2,-3][!#1;!N;!S]"], -1.189),
    ("O8", &["[O]=c"], 0.1788),
    (
        "O9",
        &[
            "[O]=[CH]C",
            "[O]=C(C)([A;!#1])",
            "[O]=[CH][N,O]",
            "[O]=[CH2]",
            "[O]=[CX2]=O",
        ],
        -0.1526,
    ),
    (
        "O10",
        &["[O]=[CH]c", "[O]=C([C,c])[a;!#1]", "[O]=C(c)[A;!#1]"],
        0.1129,
    ),
    ("O11", &["[O]=C([!#1;!#6])[!#1;!#6]"], 0.4833),
    ("OS", &["[#8]"], -0.1188),
    ("F", &["[#9-0]"], 0.4202),
    ("Cl", &["[#17-0]"], 0.6895),
    ("Br", &["[#35-0]"], 0.8456),
    ("I", &["[#53-0]"], 0.8857),
    (
        "Hal",
        &[
            "[#9,#17,#35,#53;-]",
            "[#53;+,+2,+3]",
            "[+;#3,#11,#19,#37,#55]",
        ],
        -2.996,
    ),
    ("P", &["[#15]"], 0.8612),
    (
        "S2",
        &["[S;-,-2,-3,-4,+1,+2,+3,+5,+6]", "[S-0]=[N,O,P,S]"],
        -0.0024,
    ),
    ("S1", &["[S;A]"], 0.6482),
    ("S3", &["[s;a]"], 0.6237),
    (
        "Me1",
        &[
            "[#3,#11,#19,#37,#55]",
            "[#4,#12,#20,#38,#56]",
            "[#5,#13,#31,#49,#81]",
            "[#14,#32,#50,#82]",
            "[#33,#51,#83]",
            "[#34,#52,#84]",
        ],
        -0.3808,
    ),
    (
        "Me2",
        &[
            "[#21,#22,#23,#24,#25,#26,#27,#28,#29,#30]",
            "[#39,#40,#41,#42,#43,#44,#45,#46,#47,#48]",
            "[#72,#73,#74,#75,#76,#77,#78,#79,#80]",
        ],
        -0.0025,
    ),
];

struct CompiledType {
    id: &'static str,
    patterns: Vec<SmartsPattern>,
    contribution: f64,
}

fn compiled() -> &'static [CompiledType] {
    static TABLE: OnceLock<Vec<CompiledType>> = OnceLock::new();
    TABLE.get_or_init(|| {
        CRIPPEN_TYPES
            .iter()
            .map(|&(id, patterns, contribution)| CompiledType {
                id,
                patterns: patterns
                    .iter()
                    .map(|p| SmartsPattern::parse(p).expect("built-in Crippen pattern"))
                    .collect(),
                contribution,
            })
            .collect()
    })
}

/// One atom's type and contribution. `atom` indexes the hydrogen-expanded
/// molecule: heavy atoms keep their original index, hydrogens follow.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomContribution {
    pub atom: usize,
    pub type_id: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogpBreakdown {
    pub total: f64,
    pub contributions: Vec<AtomContribution>,
}

/// Per-atom typing. `total` is the left-to-right sum of the contributions.
pub fn logp_contributions(mol: &Molecule) -> Result<LogpBreakdown, LogpError> {
    let expanded = mol.with_explicit_hydrogens();
    let ctx = MatchContext::new(&expanded);
    let table = compiled();
    let mut contributions = Vec::with_capacity(expanded.atom_count());
    for atom in 0..expanded.atom_count() {
        let found = table
            .iter()
            .find(|t| t.patterns.iter().any(|p| p.matches_at(&ctx, atom)));
        match found {
            Some(t) => contributions.push(AtomContribution {
                atom,
                type_id: t.id,
                value: t.contribution,
            }),
            None => {
                return Err(LogpError::Unclassified {
                    index: atom,
                    symbol: expanded.atom(atom).element.symbol().to_string(),
                })
            }
        }
    }
    let total = contributions.iter().map(|c| c.value).sum();
    Ok(LogpBreakdown {
        total,
        contributions,
    })
}

pub fn logp(mol: &Molecule) -> Result<f64, LogpError> {
    logp_contributions(mol).map(|b| b.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_smiles;

    fn lp(s: &str) -> f64 {
        logp(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn table_compiles() {
        assert_eq!(compiled().len(), CRIPPEN_TYPES.len());
    }

    #[test]
    fn methane_is_c1_plus_four_h1() {
        let b = logp_contributions(&parse_smiles("C").unwrap()).unwrap();
        let ids: Vec<_> = b.contributions.iter().map(|c| c.type_id).collect();
        assert_eq!(ids, ["C1", "H1", "H1", "H1", "H1"]);
        assert!((b.total - 0.6361).abs() < 1e-12);
    }

    #[test]
    fn ethanol_and_aspirin() {
        assert!((lp("CCO") - -0.0014).abs() < 1e-9);
        assert!((lp("CC(=O)Oc1ccccc1C(=O)O") - 1.3101).abs() < 1e-9);
    }

    #[test]
    fn dummy_is_unclassified() {
        let err = logp(&parse_smiles("*C").unwrap()).unwrap_err();
        assert_eq!(
            err,
            LogpError::Unclassified {
                index: 0,
                symbol: "*".into()
            }
        );
    }
}

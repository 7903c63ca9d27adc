//! Corpus cleaning and fragmentation.

use std::collections::{BTreeMap, HashSet};

use fraggen_chem::{
    check_valence, fragment_with_trace, parse_smiles, write_smiles, FragmentOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{Exclusion, FragmentRecord};

/// Per-molecule outcome before de-duplication.
enum Stage1 {
    Fragmented {
        canonical: String,
        fragments: Vec<String>,
        linear: bool,
    },
    Excluded(Exclusion),
}

fn fragment_one(smiles: &str, opts: &FragmentOptions) -> Stage1 {
    let Ok(mol) = parse_smiles(smiles) else {
        return Stage1::Excluded(Exclusion::Unparsable);
    };
    if !check_valence(&mol) {
        return Stage1::Excluded(Exclusion::InvalidValence);
    }
    let canonical = write_smiles(&mol, true);
    match fragment_with_trace(&mol, opts) {
        Ok(f) => Stage1::Fragmented {
            canonical,
            linear: f.is_linear(),
            fragments: f.sequence.canonical_smiles(),
        },
        // Inputs with dummy atoms cannot be fragmented.
        Err(_) => Stage1::Excluded(Exclusion::Unparsable),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub input: usize,
    pub kept: usize,
    pub excluded: BTreeMap<Exclusion, usize>,
}

impl Accounting {
    pub fn balanced(&self) -> bool {
        self.input == self.kept + self.excluded.values().sum::<usize>()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("input = {}\nkept = {}\n", self.input, self.kept);
        for e in Exclusion::ALL {
            out.push_str(&format!(
                "{} = {}\n",
                e,
                self.excluded.get(&e).copied().unwrap_or(0)
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preprocessed {
    /// One record per input line, in input order.
    pub records: Vec<FragmentRecord>,
    pub accounting: Accounting,
}

fn account(records: &[FragmentRecord]) -> Accounting {
    let mut excluded: BTreeMap<Exclusion, usize> = Exclusion::ALL.iter().map(|&e| (e, 0)).collect();
    let mut kept = 0;
    for r in records {
        match r {
            FragmentRecord::Kept { .. } => kept += 1,
            FragmentRecord::Excluded { reason, .. } => *excluded.get_mut(reason).unwrap() += 1,
        }
    }
    Accounting {
        input: records.len(),
        kept,
        excluded,
    }
}

/// Drops unparsable and valence-invalid molecules, then duplicates by
/// canonical form (first occurrence kept), then molecules with fewer than two
/// fragments, then non-linear fragmentations.
pub fn preprocess<S: AsRef<str> + Sync>(inputs: &[S], opts: &FragmentOptions) -> Preprocessed {
    let stage1: Vec<Stage1> = inputs
        .par_iter()
        .map(|s| fragment_one(s.as_ref(), opts))
        .collect();
    let mut seen = HashSet::new();
    let records: Vec<FragmentRecord> = stage1
        .into_iter()
        .zip(inputs)
        .map(|(st, input)| {
            let excluded = |reason| FragmentRecord::Excluded {
                reason,
                input: input.as_ref().to_string(),
            };
            match st {
                Stage1::Excluded(reason) => excluded(reason),
                Stage1::Fragmented {
                    canonical,
                    fragments,
                    linear,
                } => {
                    if !seen.insert(canonical.clone()) {
                        excluded(Exclusion::Duplicate)
                    } else if fragments.len() < 2 {
                        excluded(Exclusion::TooFewFragments)
                    } else if !linear {
                        excluded(Exclusion::NonLinear)
                    } else {
                        FragmentRecord::Kept {
                            smiles: canonical,
                            fragments,
                        }
                    }
                }
            }
        })
        .collect();
    let accounting = account(&records);
    Preprocessed {
        records,
        accounting,
    }
}

/// Fragments every molecule without filtering; failures are marked unparsable.
pub fn fragment_all<S: AsRef<str> + Sync>(
    inputs: &[S],
    opts: &FragmentOptions,
) -> Vec<FragmentRecord> {
    inputs
        .par_iter()
        .map(|s| match fragment_one(s.as_ref(), opts) {
            Stage1::Fragmented {
                canonical,
                fragments,
                ..
            } => FragmentRecord::Kept {
                smiles: canonical,
                fragments,
            },
            Stage1::Excluded(reason) => FragmentRecord::Excluded {
                reason,
                input: s.as_ref().to_string(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusions_are_counted_and_balanced() {
        let inputs = [
            "CC(=O)Oc1ccccc1C(=O)O",
            "C1CC",
            "OC(C)=O",
            "c1ccccc1",
            "CC(C)(C)(C)(C)C",
            "O=C(O)c1ccccc1OC(C)=O",
        ];
        let p = preprocess(&inputs, &FragmentOptions::default());
        let a = &p.accounting;
        assert!(a.balanced());
        assert_eq!(a.input, 6);
        assert_eq!(a.kept, 1);
        assert_eq!(a.excluded[&Exclusion::Unparsable], 1);
        assert_eq!(a.excluded[&Exclusion::InvalidValence], 1);
        assert_eq!(a.excluded[&Exclusion::Duplicate], 1);
        assert_eq!(a.excluded[&Exclusion::TooFewFragments], 2);
        assert!(
            matches!(&p.records[0], FragmentRecord::Kept { fragments, .. } if fragments.len() == 3)
        );
    }

    #[test]
    fn duplicate_spellings_keep_the_first() {
        let p = preprocess(&["CCO", "OCC"], &FragmentOptions::default());
        assert_eq!(p.accounting.excluded[&Exclusion::Duplicate], 1);
        assert_eq!(p.accounting.excluded[&Exclusion::TooFewFragments], 1);
        assert_eq!(
            p.records[1],
            FragmentRecord::Excluded {
                reason: Exclusion::Duplicate,
                input: "OCC".into()
            }
        );
    }
}

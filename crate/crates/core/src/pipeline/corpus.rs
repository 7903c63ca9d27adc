//! SMILES input files and the fragment-sequence file.
//!
//! Fragment file:
//! ```text
//! fraggen-frags v1
//! <canonical smiles>\t<fragment> <fragment> ...
//! !<reason>\t<input smiles>
//! ```
//! Kept molecules list their fragments in sequence order; excluded ones
//! start with `!` and the exclusion reason.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FRAGMENT_HEADER: &str = "fraggen-frags v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct CorpusFormatError {
    pub line: usize,
    pub message: String,
}

/// SMILES strings of an input file: the first whitespace-separated field of
/// each line. Blank lines and `#` comments are skipped, a `smiles` header is dropped.
pub fn read_smiles_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.split_whitespace().next())
        .filter(|s| !s.starts_with('#'))
        .enumerate()
        .filter(|(i, s)| !(*i == 0 && s.eq_ignore_ascii_case("smiles")))
        .map(|(_, s)| s.to_string())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    Unparsable,
    InvalidValence,
    Duplicate,
    TooFewFragments,
    NonLinear,
}

impl Exclusion {
    pub const ALL: [Exclusion; 5] = [
        Exclusion::Unparsable,
        Exclusion::InvalidValence,
        Exclusion::Duplicate,
        Exclusion::TooFewFragments,
        Exclusion::NonLinear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Exclusion::Unparsable => "unparsable",
            Exclusion::InvalidValence => "invalid_valence",
            Exclusion::Duplicate => "duplicate",
            Exclusion::TooFewFragments => "too_few_fragments",
            Exclusion::NonLinear => "non_linear",
        }
    }
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Exclusion {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Exclusion::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FragmentRecord {
    Kept {
        smiles: String,
        fragments: Vec<String>,
    },
    Excluded {
        reason: Exclusion,
        input: String,
    },
}

impl fmt::Display for FragmentRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentRecord::Kept { smiles, fragments } => {
                write!(f, "{smiles}\t{}", fragments.join(" "))
            }
            FragmentRecord::Excluded { reason, input } => write!(f, "!{reason}\t{input}"),
        }
    }
}

impl FragmentRecord {
    /// Parses one body line (no header).
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let (head, tail) = line.split_once('\t').ok_or("missing tab separator")?;
        if let Some(reason) = head.strip_prefix('!') {
            let reason = reason
                .parse()
                .map_err(|_| format!("unknown exclusion {reason:?}"))?;
            if tail.is_empty() || tail.contains(char::is_whitespace) {
                return Err("excluded input must be one SMILES token".into());
            }
            return Ok(FragmentRecord::Excluded {
                reason,
                input: tail.to_string(),
            });
        }
        if head.is_empty() || head.contains(char::is_whitespace) {
            return Err("bad molecule field".into());
        }
        let fragments: Vec<String> = tail.split(' ').map(str::to_string).collect();
        if fragments
            .iter()
            .any(|f| f.is_empty() || f.contains(char::is_whitespace))
        {
            return Err("fragments must be single-space separated".into());
        }
        Ok(FragmentRecord::Kept {
            smiles: head.to_string(),
            fragments,
        })
    }
}

pub fn write_fragment_file(records: &[FragmentRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 64);
    out.push_str(FRAGMENT_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn read_fragment_file(text: &str) -> Result<Vec<FragmentRecord>, CorpusFormatError> {
    let mut lines = text.lines();
    if lines.next() != Some(FRAGMENT_HEADER) {
        return Err(CorpusFormatError {
            line: 1,
            message: format!("expected header {FRAGMENT_HEADER:?}"),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            FragmentRecord::parse_line(l).map_err(|message| CorpusFormatError {
                line: i + 2,
                message,
            })
        })
        .collect()
}

/// Kept molecules and their fragment sequences.
pub fn kept(records: &[FragmentRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    records
        .iter()
        .filter_map(|r| match r {
            FragmentRecord::Kept { smiles, fragments } => Some((smiles.clone(), fragments.clone())),
            FragmentRecord::Excluded { .. } => None,
        })
        .unzip()
}

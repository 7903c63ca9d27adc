//! Fragment vocabulary with low-frequency masking.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const PAD: u32 = 0;
pub const SOS: u32 = 1;
pub const EOS: u32 = 2;
pub const SPECIAL_TOKENS: [&str; 3] = ["<PAD>", "<SOS>", "<EOS>"];

const HEADER: &str = "fraggen-vocab v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("fragment {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("{0:?} is not a mask token")]
    NotAMaskToken(String),
    #[error("token id {0} out of range")]
    BadId(u32),
    #[error("vocabulary file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Number of attachment points in a fragment written as SMILES.
pub fn attachment_count(fragment: &str) -> usize {
    fragment.bytes().filter(|&b| b == b'*').count()
}

pub fn mask_token(frequency: u64, attachments: usize) -> String {
    format!("{frequency}_{attachments}")
}

/// Parses `"<freq>_<attachments>"`; anything else is not a mask token.
pub fn parse_mask_token(token: &str) -> Option<(u64, usize)> {
    let (f, a) = token.split_once('_')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(f) || !digits(a) {
        return None;
    }
    Some((f.parse().ok()?, a.parse().ok()?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    threshold_k: u64,
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
    /// Corpus occurrences per id. A mask token counts every occurrence of its members.
    frequencies: Vec<u64>,
    /// Mask token → masked fragments, sorted.
    mask_groups: BTreeMap<String, Vec<String>>,
    /// Masked fragment → its mask token.
    masked: HashMap<String, String>,
}

impl Vocabulary {
    /// Count fragments over `corpus`; fragments seen fewer than `k` times
    /// are folded into `"<freq>_<attachments>"` tokens. `k = 0` disables masking.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], k: u64) -> Result<Self, VocabError> {
        if corpus.is_empty() {
            return Err(VocabError::EmptyCorpus);
        }
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for seq in corpus {
            for frag in seq {
                *counts.entry(frag.as_ref()).or_insert(0) += 1;
            }
        }
        let mut token_freq: BTreeMap<String, u64> = BTreeMap::new();
        let mut mask_groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (&frag, &f) in &counts {
            if f < k {
                let token = mask_token(f, attachment_count(frag));
                *token_freq.entry(token.clone()).or_insert(0) += f;
                mask_groups.entry(token).or_default().push(frag.to_string());
            } else {
                token_freq.insert(frag.to_string(), f);
            }
        }
        Ok(Self::assemble(k, token_freq, mask_groups))
    }

    fn assemble(
        k: u64,
        token_freq: BTreeMap<String, u64>,
        mut mask_groups: BTreeMap<String, Vec<String>>,
    ) -> Self {
        let mut id_to_token: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        let mut frequencies = vec![0; SPECIAL_TOKENS.len()];
        for (token, f) in token_freq {
            id_to_token.push(token);
            frequencies.push(f);
        }
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let mut masked = HashMap::new();
        for (token, members) in &mut mask_groups {
            members.sort();
            for m in members.iter() {
                masked.insert(m.clone(), token.clone());
            }
        }
        Vocabulary {
            threshold_k: k,
            id_to_token,
            token_to_id,
            frequencies,
            mask_groups,
            masked,
        }
    }

    /// Number of ids, specials included.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn threshold_k(&self) -> u64 {
        self.threshold_k
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.frequencies.get(id as usize).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn mask_groups(&self) -> &BTreeMap<String, Vec<String>> {
        &self.mask_groups
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIAL_TOKENS.len()
    }

    pub fn is_mask(&self, id: u32) -> bool {
        self.token(id)
            .is_some_and(|t| self.mask_groups.contains_key(t))
    }

    /// Distinct fragments represented, masked or not.
    pub fn fragment_count(&self) -> usize {
        self.len() - SPECIAL_TOKENS.len() - self.mask_groups.len()
            + self.mask_groups.values().map(Vec::len).sum::<usize>()
    }

    /// Id for a fragment, going through its mask token when masked.
    pub fn fragment_id(&self, fragment: &str) -> Result<u32, VocabError> {
        if let Some(token) = self.masked.get(fragment) {
            return Ok(self.token_to_id[token]);
        }
        match self.token_to_id.get(fragment) {
            Some(&id) if !Self::is_special(id) && !self.mask_groups.contains_key(fragment) => {
                Ok(id)
            }
            _ => Err(VocabError::OutOfVocabulary(fragment.to_string())),
        }
    }

    /// `[SOS] + ids + [EOS]`.
    pub fn encode<S: AsRef<str>>(&self, seq: &[S]) -> Result<Vec<u32>, VocabError> {
        let mut out = Vec::with_capacity(seq.len() + 2);
        out.push(SOS);
        for frag in seq {
            out.push(self.fragment_id(frag.as_ref())?);
        }
        out.push(EOS);
        Ok(out)
    }

    /// Tokens for ids, dropping specials.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>, VocabError> {
        ids.iter()
            .filter(|&&id| !Self::is_special(id))
            .map(|&id| {
                self.token(id)
                    .map(str::to_string)
                    .ok_or(VocabError::BadId(id))
            })
            .collect()
    }

    /// Uniform draw from a mask token's group.
    pub fn unmask<R: Rng + ?Sized>(&self, token: &str, rng: &mut R) -> Result<&str, VocabError> {
        let members = self
            .mask_groups
            .get(token)
            .ok_or_else(|| VocabError::NotAMaskToken(token.to_string()))?;
        Ok(&members[rng.random_range(0..members.len())])
    }

    /// Serialized form; sorted and stable across runs.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER} k={}\n", self.threshold_k);
        for (id, token) in self.id_to_token.iter().enumerate() {
            let _ = writeln!(out, "TOKEN {id} {token} {}", self.frequencies[id]);
        }
        for (token, members) in &self.mask_groups {
            let _ = writeln!(out, "GROUP {token} {}", members.join(" "));
        }
        out
    }

    /// SHA-256 of [`Vocabulary::to_text`]; ties checkpoints to a vocabulary.
    pub fn content_hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let err = |line: usize, message: &str| VocabError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let k = header
            .strip_prefix(HEADER)
            .and_then(|rest| rest.trim().strip_prefix("k="))
            .and_then(|k| k.parse::<u64>().ok())
            .ok_or_else(|| err(1, "bad header"))?;
        let mut token_freq: BTreeMap<String, u64> = BTreeMap::new();
        let mut mask_groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut expected_id = 0usize;
        for (i, line) in lines {
            let n = i + 1;
            let mut parts = line.split(' ');
            match parts.next() {
                Some("TOKEN") => {
                    let (Some(id), Some(token), Some(freq), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(err(n, "TOKEN needs id, token and frequency"));
                    };
                    let id: usize = id.parse().map_err(|_| err(n, "bad id"))?;
                    let freq: u64 = freq.parse().map_err(|_| err(n, "bad frequency"))?;
                    if id != expected_id {
                        return Err(err(n, "ids must be dense and ascending"));
                    }
                    if !mask_groups.is_empty() {
                        return Err(err(n, "TOKEN after GROUP"));
                    }
                    expected_id += 1;
                    if id < SPECIAL_TOKENS.len() {
                        if token != SPECIAL_TOKENS[id] || freq != 0 {
                            return Err(err(n, "bad special token"));
                        }
                        continue;
                    }
                    if token.is_empty() || SPECIAL_TOKENS.contains(&token) {
                        return Err(err(n, "bad token"));
                    }
                    if let Some((last, _)) = token_freq.last_key_value() {
                        if token <= last.as_str() {
                            return Err(err(n, "tokens must be sorted and unique"));
                        }
                    }
                    token_freq.insert(token.to_string(), freq);
                }
                Some("GROUP") => {
                    let token = parts.next().ok_or_else(|| err(n, "GROUP needs a token"))?;
                    let (f, a) = parse_mask_token(token).ok_or_else(|| err(n, "bad mask token"))?;
                    if !token_freq.contains_key(token) || mask_groups.contains_key(token) {
                        return Err(err(n, "GROUP token missing or repeated"));
                    }
                    let members: Vec<String> = parts.map(str::to_string).collect();
                    if members.is_empty() {
                        return Err(err(n, "empty group"));
                    }
                    for m in &members {
                        if attachment_count(m) != a || token_freq.contains_key(m) {
                            return Err(err(n, "group member inconsistent with token"));
                        }
                    }
                    if token_freq[token] != f * members.len() as u64 {
                        return Err(err(n, "group frequency mismatch"));
                    }
                    mask_groups.insert(token.to_string(), members);
                }
                Some("") if line.is_empty() => {}
                _ => return Err(err(n, "unknown record")),
            }
        }
        if expected_id < SPECIAL_TOKENS.len() {
            return Err(err(0, "missing special tokens"));
        }
        let mut seen = std::collections::HashSet::new();
        for members in mask_groups.values() {
            for m in members {
                if !seen.insert(m.as_str()) {
                    return Err(err(0, "fragment in two groups"));
                }
            }
        }
        Ok(Self::assemble(k, token_freq, mask_groups))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus() -> Vec<Vec<String>> {
        let mut c = Vec::new();
        for _ in 0..5 {
            c.push(vec!["*Nc1ccc(O*)cc1".to_string()]);
        }
        for _ in 0..3 {
            c.push(vec!["*C(=O)N1CCN(Cc2ccccc2)CC1".to_string()]);
        }
        for _ in 0..200 {
            c.push(vec!["*c1ccccc1OC".to_string()]);
        }
        c
    }

    #[test]
    fn masking_follows_frequency_and_attachments() {
        let v = Vocabulary::build(&corpus(), 10).unwrap();
        assert_eq!(
            v.fragment_id("*Nc1ccc(O*)cc1").unwrap(),
            v.id("5_2").unwrap()
        );
        assert_eq!(
            v.fragment_id("*C(=O)N1CCN(Cc2ccccc2)CC1").unwrap(),
            v.id("3_1").unwrap()
        );
        assert_eq!(
            v.token(v.fragment_id("*c1ccccc1OC").unwrap()),
            Some("*c1ccccc1OC")
        );
        assert_eq!(v.len(), 3 + 3);
    }

    #[test]
    fn threshold_boundary_is_unmasked() {
        let c = vec![vec!["*C".to_string()]; 10];
        let v = Vocabulary::build(&c, 10).unwrap();
        assert!(!v.is_mask(v.fragment_id("*C").unwrap()));
    }

    #[test]
    fn k_zero_disables_masking() {
        let v = Vocabulary::build(&corpus(), 0).unwrap();
        assert!(v.mask_groups().is_empty());
        assert_eq!(v.len(), 3 + 3);
    }

    #[test]
    fn encode_wraps_and_decode_inverts() {
        let v = Vocabulary::build(&corpus(), 0).unwrap();
        let empty: Vec<String> = Vec::new();
        assert_eq!(v.encode(&empty).unwrap(), vec![SOS, EOS]);
        let seq = ["*c1ccccc1OC", "*Nc1ccc(O*)cc1", "*c1ccccc1OC"];
        let ids = v.encode(&seq).unwrap();
        assert_eq!(ids.len(), 5);
        assert_eq!(v.decode(&ids).unwrap(), seq);
        assert_eq!(
            v.encode(&["*CC"]),
            Err(VocabError::OutOfVocabulary("*CC".into()))
        );
    }

    #[test]
    fn unmask_rules() {
        let v = Vocabulary::build(&corpus(), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(v.unmask("5_2", &mut rng).unwrap(), "*Nc1ccc(O*)cc1");
        assert!(matches!(
            v.unmask("*c1ccccc1OC", &mut rng),
            Err(VocabError::NotAMaskToken(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::build(&corpus(), 10).unwrap();
        let text = v.to_text();
        assert!(text.starts_with("fraggen-vocab v1 k=10\nTOKEN 0 <PAD> 0\n"));
        assert!(text.contains("GROUP 5_2 *Nc1ccc(O*)cc1\n"));
        let back = Vocabulary::from_text(&text).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_files_rejected() {
        for bad in [
            "",
            "fraggen-vocab v2 k=1\n",
            "fraggen-vocab v1 k=1\nTOKEN 0 <PAD> 0\n",
            "fraggen-vocab v1 k=1\nTOKEN 0 <PAD> 0\nTOKEN 1 <SOS> 0\nTOKEN 2 <EOS> 0\nTOKEN 4 *C 3\n",
            "fraggen-vocab v1 k=1\nTOKEN 0 <PAD> 0\nTOKEN 1 <SOS> 0\nTOKEN 2 <EOS> 0\nGROUP 1_1 *C\n",
        ] {
            assert!(Vocabulary::from_text(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn mask_token_parsing() {
        assert_eq!(parse_mask_token("5_2"), Some((5, 2)));
        assert_eq!(parse_mask_token("*C"), None);
        assert_eq!(parse_mask_token("5_"), None);
    }
}

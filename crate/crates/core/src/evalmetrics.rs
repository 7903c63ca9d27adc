//! Validity, novelty and uniqueness, plus feature distributions and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use fraggen_chem::{
    check_valence, logp, parse_smiles, structural_features, write_smiles, Molecule,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::Vocabulary;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{0} is empty; the rate is undefined")]
    Empty(&'static str),
}

fn parse_valid(smiles: &str) -> Option<Molecule> {
    parse_smiles(smiles).ok().filter(check_valence)
}

/// Canonical form of a valid SMILES, `None` when it does not parse or fails valence.
pub fn canonicalize(smiles: &str) -> Option<String> {
    parse_valid(smiles).map(|m| write_smiles(&m, true))
}

/// Canonical forms of the valid entries, in input order.
pub fn valid_canonical<S: AsRef<str> + Sync>(generated: &[S]) -> Vec<String> {
    generated
        .par_iter()
        .filter_map(|s| canonicalize(s.as_ref()))
        .collect()
}

pub fn validity_rate<S: AsRef<str> + Sync>(generated: &[S]) -> Result<f64, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::Empty("generated list"));
    }
    Ok(valid_canonical(generated).len() as f64 / generated.len() as f64)
}

/// Fraction of `valid` absent from `training` (a set of canonical SMILES).
pub fn novelty_rate<S: AsRef<str> + Sync>(
    valid: &[S],
    training: &HashSet<String>,
) -> Result<f64, MetricsError> {
    if valid.is_empty() {
        return Err(MetricsError::Empty("valid list"));
    }
    let canon = valid_canonical(valid);
    let novel = canon.iter().filter(|c| !training.contains(*c)).count();
    Ok(novel as f64 / valid.len() as f64)
}

pub fn uniqueness_rate<S: AsRef<str> + Sync>(valid: &[S]) -> Result<f64, MetricsError> {
    if valid.is_empty() {
        return Err(MetricsError::Empty("valid list"));
    }
    let distinct: HashSet<String> = valid_canonical(valid).into_iter().collect();
    Ok(distinct.len() as f64 / valid.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub valid: f64,
    pub novel: f64,
    pub unique: f64,
    pub n_generated: usize,
    pub n_valid: usize,
}

impl MetricReport {
    /// Novelty and uniqueness over the valid subset. With no valid molecule
    /// those two ratios are undefined and reported as an error.
    pub fn compute<S: AsRef<str> + Sync>(
        generated: &[S],
        training: &HashSet<String>,
    ) -> Result<Self, MetricsError> {
        if generated.is_empty() {
            return Err(MetricsError::Empty("generated list"));
        }
        let valid = valid_canonical(generated);
        Ok(MetricReport {
            valid: valid.len() as f64 / generated.len() as f64,
            novel: novelty_rate(&valid, training)?,
            unique: uniqueness_rate(&valid)?,
            n_generated: generated.len(),
            n_valid: valid.len(),
        })
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("metrics serialize")
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-molecule values used by the distribution report.
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeFeatures {
    /// Count features by name: `atoms.C`, `bonds.double`, `rings.6`, `atoms.total`, ...
    pub counts: BTreeMap<String, usize>,
    pub logp: f64,
}

pub const RING_SIZES: [usize; 4] = [3, 4, 5, 6];

pub fn molecule_features(mol: &Molecule) -> Option<MoleculeFeatures> {
    let f = structural_features(mol);
    let mut counts = BTreeMap::new();
    for (el, n) in &f.atoms {
        counts.insert(format!("atoms.{}", el.symbol()), *n);
    }
    for (order, n) in &f.bonds {
        counts.insert(format!("bonds.{}", format!("{order:?}").to_lowercase()), *n);
    }
    for size in RING_SIZES {
        counts.insert(
            format!("rings.{size}"),
            f.rings.get(&size).copied().unwrap_or(0),
        );
    }
    counts.insert("atoms.total".into(), f.atom_total());
    counts.insert("bonds.total".into(), f.bond_total());
    counts.insert("rings.total".into(), f.ring_total);
    Some(MoleculeFeatures {
        counts,
        logp: logp(mol).ok()?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub feature: String,
    /// Half-open `[low, high)` bins; the last bin is closed.
    pub edges: Vec<f64>,
    pub training: Vec<u64>,
    pub generated: Vec<u64>,
    pub training_mean_std: (f64, f64),
    pub generated_mean_std: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub histograms: Vec<Histogram>,
    pub training_size: usize,
    pub generated_size: usize,
    /// Molecules whose features could not be computed, per population.
    pub training_failures: usize,
    pub generated_failures: usize,
}

fn features_of<S: AsRef<str> + Sync>(pop: &[S]) -> (Vec<MoleculeFeatures>, usize) {
    let all: Vec<Option<MoleculeFeatures>> = pop
        .par_iter()
        .map(|s| parse_valid(s.as_ref()).and_then(|m| molecule_features(&m)))
        .collect();
    let failures = all.iter().filter(|f| f.is_none()).count();
    (all.into_iter().flatten().collect(), failures)
}

fn bin_counts(values: &[f64], edges: &[f64]) -> Vec<u64> {
    let nb = edges.len() - 1;
    let mut out = vec![0u64; nb];
    for &v in values {
        let i = edges[1..].iter().position(|&hi| v < hi).unwrap_or(nb - 1);
        out[i] += 1;
    }
    out
}

impl DistributionReport {
    /// Shared bins for both populations. Generated molecules are de-duplicated
    /// by canonical form first.
    pub fn compute<S: AsRef<str> + Sync>(
        training: &[S],
        generated: &[S],
    ) -> Result<Self, MetricsError> {
        if training.is_empty() {
            return Err(MetricsError::Empty("training population"));
        }
        if generated.is_empty() {
            return Err(MetricsError::Empty("generated population"));
        }
        let mut seen = HashSet::new();
        let mut invalid = 0;
        let mut dedup = Vec::new();
        for s in generated {
            match canonicalize(s.as_ref()) {
                Some(c) => {
                    if seen.insert(c.clone()) {
                        dedup.push(c);
                    }
                }
                None => invalid += 1,
            }
        }
        let (tf, t_fail) = features_of(training);
        let (gf, g_fail) = features_of(&dedup);
        let names: BTreeSet<&String> = tf.iter().chain(&gf).flat_map(|f| f.counts.keys()).collect();
        let mut histograms = Vec::new();
        for name in names {
            let get = |fs: &[MoleculeFeatures]| -> Vec<f64> {
                fs.iter()
                    .map(|f| f.counts.get(name).copied().unwrap_or(0) as f64)
                    .collect()
            };
            let (t, g) = (get(&tf), get(&gf));
            let max = t.iter().chain(&g).fold(0.0f64, |a, &b| a.max(b));
            let edges: Vec<f64> = (0..=(max as usize + 1)).map(|i| i as f64).collect();
            histograms.push(Histogram {
                feature: name.clone(),
                training: bin_counts(&t, &edges),
                generated: bin_counts(&g, &edges),
                edges,
                training_mean_std: mean_std(&t),
                generated_mean_std: mean_std(&g),
            });
        }
        let t: Vec<f64> = tf.iter().map(|f| f.logp).collect();
        let g: Vec<f64> = gf.iter().map(|f| f.logp).collect();
        let lo = t.iter().chain(&g).fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = t.iter().chain(&g).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if lo.is_finite() {
            let width = if hi > lo { (hi - lo) / 40.0 } else { 1.0 };
            let edges: Vec<f64> = (0..=40).map(|i| lo + i as f64 * width).collect();
            histograms.push(Histogram {
                feature: "logp".into(),
                training: bin_counts(&t, &edges),
                generated: bin_counts(&g, &edges),
                edges,
                training_mean_std: mean_std(&t),
                generated_mean_std: mean_std(&g),
            });
        }
        Ok(DistributionReport {
            histograms,
            training_size: tf.len(),
            generated_size: gf.len(),
            training_failures: t_fail,
            generated_failures: g_fail + invalid,
        })
    }

    pub fn histogram(&self, feature: &str) -> Option<&Histogram> {
        self.histograms.iter().find(|h| h.feature == feature)
    }

    /// `feature,bin_low,bin_high,training,generated` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,bin_low,bin_high,training,generated\n");
        for h in &self.histograms {
            for i in 0..h.training.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    h.feature,
                    h.edges[i],
                    h.edges[i + 1],
                    h.training[i],
                    h.generated[i]
                );
            }
        }
        out
    }

    /// `feature.population.mean/std = value` lines, QED and SAS slots reserved.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "training_size = {}", self.training_size);
        let _ = writeln!(out, "generated_size = {}", self.generated_size);
        let _ = writeln!(out, "training_failures = {}", self.training_failures);
        let _ = writeln!(out, "generated_failures = {}", self.generated_failures);
        for h in &self.histograms {
            let (tm, ts) = h.training_mean_std;
            let (gm, gs) = h.generated_mean_std;
            let _ = writeln!(out, "\"{}.training.mean\" = {tm}", h.feature);
            let _ = writeln!(out, "\"{}.training.std\" = {ts}", h.feature);
            let _ = writeln!(out, "\"{}.generated.mean\" = {gm}", h.feature);
            let _ = writeln!(out, "\"{}.generated.std\" = {gs}", h.feature);
        }
        out.push_str("# qed and sas are not computed\n");
        out
    }
}

/// Table-1 style record over a fragmented corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_molecules: usize,
    pub molecules_with_2plus_fragments: usize,
    pub fragments_mean: f64,
    pub fragments_std: f64,
    /// Distinct fragments.
    pub vocab_size: usize,
    /// Tokens after masking at `lfm_k`, specials excluded.
    pub vocab_size_lfm: usize,
    pub lfm_k: u64,
    pub atoms_mean: f64,
    pub atoms_std: f64,
    pub bonds_mean: f64,
    pub bonds_std: f64,
    pub rings_mean: f64,
    pub rings_std: f64,
}

impl DatasetStats {
    /// `total` counts every input molecule. `sequences` holds the fragment
    /// sequences of the training molecules, and `molecules` their SMILES; the
    /// fragment and size statistics are over those.
    pub fn compute<S: AsRef<str> + Sync>(
        total: usize,
        molecules: &[S],
        sequences: &[Vec<String>],
        k: u64,
    ) -> Self {
        let frag_counts: Vec<f64> = sequences.iter().map(|s| s.len() as f64).collect();
        let (fragments_mean, fragments_std) = mean_std(&frag_counts);
        let (vocab_size, vocab_size_lfm) = if sequences.is_empty() {
            (0, 0)
        } else {
            let plain = Vocabulary::build(sequences, 0).expect("non-empty");
            let masked = Vocabulary::build(sequences, k).expect("non-empty");
            let specials = crate::vocab::SPECIAL_TOKENS.len();
            (plain.len() - specials, masked.len() - specials)
        };
        let sizes: Vec<(f64, f64, f64)> = molecules
            .par_iter()
            .filter_map(|s| parse_smiles(s.as_ref()).ok())
            .map(|m| {
                let f = structural_features(&m);
                (
                    f.atom_total() as f64,
                    f.bond_total() as f64,
                    f.ring_total as f64,
                )
            })
            .collect();
        let col = |i: usize| -> Vec<f64> { sizes.iter().map(|t| [t.0, t.1, t.2][i]).collect() };
        let (atoms_mean, atoms_std) = mean_std(&col(0));
        let (bonds_mean, bonds_std) = mean_std(&col(1));
        let (rings_mean, rings_std) = mean_std(&col(2));
        DatasetStats {
            total_molecules: total,
            molecules_with_2plus_fragments: sequences.iter().filter(|s| s.len() >= 2).count(),
            fragments_mean,
            fragments_std,
            vocab_size,
            vocab_size_lfm,
            lfm_k: k,
            atoms_mean,
            atoms_std,
            bonds_mean,
            bonds_std,
            rings_mean,
            rings_std,
        }
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("stats serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_by_hand() {
        assert_eq!(validity_rate(&["C", "CC", "C1CC", "O"]).unwrap(), 0.75);
        assert_eq!(validity_rate(&["C", "CC"]).unwrap(), 1.0);
        let empty: [&str; 0] = [];
        assert_eq!(
            validity_rate(&empty),
            Err(MetricsError::Empty("generated list"))
        );
    }

    #[test]
    fn uniqueness_collapses_spellings() {
        assert_eq!(uniqueness_rate(&["CCO", "OCC"]).unwrap(), 0.5);
        assert_eq!(uniqueness_rate(&["CCO", "CCN", "c1ccccc1"]).unwrap(), 1.0);
    }

    #[test]
    fn novelty_edges() {
        let training: HashSet<String> = ["CCO", "CCN"]
            .iter()
            .map(|s| canonicalize(s).unwrap())
            .collect();
        assert_eq!(novelty_rate(&["OCC", "NCC"], &training).unwrap(), 0.0);
        assert_eq!(novelty_rate(&["CCC", "c1ccccc1"], &training).unwrap(), 1.0);
        let empty: [&str; 0] = [];
        assert!(novelty_rate(&empty, &training).is_err());
    }

    #[test]
    fn identical_populations_identical_histograms() {
        let pop = ["CCO", "c1ccccc1O", "CC(=O)Oc1ccccc1C(=O)O", "C1CC1N"];
        let r = DistributionReport::compute(&pop, &pop).unwrap();
        for h in &r.histograms {
            assert_eq!(h.training, h.generated, "{}", h.feature);
            assert_eq!(h.training.iter().sum::<u64>(), 4);
        }
        assert_eq!(r.histogram("logp").unwrap().training.len(), 40);
        assert_eq!(r.histogram("rings.3").unwrap().training, vec![3, 1]);
        assert!(r
            .to_csv()
            .starts_with("feature,bin_low,bin_high,training,generated\n"));
    }

    #[test]
    fn generated_duplicates_are_dropped() {
        let r = DistributionReport::compute(&["CCO"], &["CCO", "OCC", "C1CC"]).unwrap();
        assert_eq!(r.generated_size, 1);
        assert_eq!(r.generated_failures, 1);
    }

    #[test]
    fn single_molecule_stats() {
        let seqs = vec![vec!["*C(C)=O".to_string(), "*Oc1ccccc1".to_string()]];
        let s = DatasetStats::compute(1, &["CC(=O)Oc1ccccc1"], &seqs, 10);
        assert_eq!(s.total_molecules, 1);
        assert_eq!(s.molecules_with_2plus_fragments, 1);
        assert_eq!((s.fragments_mean, s.fragments_std), (2.0, 0.0));
        assert_eq!((s.vocab_size, s.vocab_size_lfm), (2, 1));
        assert_eq!((s.atoms_mean, s.atoms_std), (10.0, 0.0));
        assert_eq!(s.bonds_mean, 10.0);
        assert_eq!(s.rings_mean, 1.0);
    }
}

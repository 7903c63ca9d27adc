//! Molecular graphs: SMILES in and out, valence, rings and simple counts.

mod canon;
mod features;
mod molecule;
mod parse;
mod rings;
mod valence;
mod write;

pub use canon::canonical_ranks;
pub use features::{structural_features, StructuralFeatures};
pub use molecule::{Atom, Bond, BondOrder, Element, GraphError, Molecule, Neighbor};
pub use parse::{
    parse_smiles, parse_smiles_with_warnings, ParseWarning, Parsed, SmilesError, SmilesErrorKind,
};
pub use rings::{cycle_rank, ring_atoms, ring_atoms_of, ring_bonds, ring_counts, sssr};
pub use valence::{allowed_valences, check_valence};
pub use write::write_smiles;

/// Parse and write back in canonical form.
pub fn canonical_smiles(text: &str) -> Result<String, SmilesError> {
    Ok(write_smiles(&parse_smiles(text)?, true))
}

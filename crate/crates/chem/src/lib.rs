//! Chemistry substrate for fragment-based generation: molecular graphs,
//! SMILES, a small SMARTS matcher, BRICS fragmentation and Crippen logP.

pub mod brics;
pub mod crippen;
pub mod molgraph;
pub mod smarts;

pub use brics::{
    attachment_points, break_bond, find_brics_bonds, find_first_brics_bond, fragment_molecule,
    fragment_with_trace, is_linear_chain, reassemble, BricsError, BricsRuleTable, Fragment,
    FragmentOptions, FragmentSequence, Fragmentation,
};
pub use crippen::{logp, logp_contributions, AtomContribution, LogpBreakdown, LogpError};
pub use molgraph::*;
pub use smarts::{MatchContext, SmartsError, SmartsPattern};

#![no_main]
use fraggen_chem::{parse_smiles, MatchContext, SmartsPattern};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pat) = SmartsPattern::parse(text) {
        let mol = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
        let ctx = MatchContext::new(&mol);
        for atom in 0..mol.atom_count() {
            let _ = pat.matches_at(&ctx, atom);
        }
    }
});

#![no_main]
use fraggen_chem::{fragment_with_trace, parse_smiles, reassemble, FragmentOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(mol) = parse_smiles(text) else { return };
    if mol.atom_count() > 64 {
        return;
    }
    if let Ok(f) = fragment_with_trace(&mol, &FragmentOptions::default()) {
        if f.is_linear() {
            let _ = reassemble(&f.sequence);
        }
    }
});

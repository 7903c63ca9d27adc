#![no_main]
use fraggen_chem::{parse_smiles, write_smiles};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mol) = parse_smiles(text) {
        let out = write_smiles(&mol, true);
        let again = parse_smiles(&out).expect("written SMILES reparses");
        assert_eq!(again.atom_count(), mol.atom_count());
    }
});

#![no_main]
use fraggen::pipeline::{preprocess, read_smiles_lines};
use fraggen_chem::FragmentOptions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let lines = read_smiles_lines(text);
    if lines.len() > 16 || lines.iter().any(|l| l.len() > 80) {
        return;
    }
    let p = preprocess(&lines, &FragmentOptions::default());
    assert!(p.accounting.balanced());
});

#![no_main]
use fraggen::pipeline::{read_fragment_file, write_fragment_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = read_fragment_file(text) {
        let again = read_fragment_file(&write_fragment_file(&records)).expect("written file reparses");
        assert_eq!(again, records);
    }
});

#![no_main]
use fraggen::seqmodel::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = Checkpoint::from_bytes(data) {
        assert_eq!(Checkpoint::from_bytes(&c.to_bytes()).expect("written checkpoint reloads"), c);
    }
});

#![no_main]
use fraggen::skipgram::EmbeddingMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = EmbeddingMatrix::from_text(text) {
        let again = EmbeddingMatrix::from_text(&e.to_text()).expect("written embeddings reparse");
        assert_eq!(again.target, e.target);
    }
});

#![no_main]
use fraggen::pipeline::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = PipelineConfig::from_toml(text) {
        let _ = c.validate();
        let _ = c.resolved().to_toml();
    }
});

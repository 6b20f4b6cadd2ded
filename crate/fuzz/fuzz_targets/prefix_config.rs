#![no_main]
use c2_core::period::{prefix_frequencies, PrefixConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = PrefixConfig::parse(text) {
        assert_eq!(PrefixConfig::parse(&cfg.to_text()).as_ref(), Ok(&cfg));
        if let Ok(t) = prefix_frequencies(&cfg.blocks, cfg.length) {
            assert_eq!(t.total(), t.ambient_period);
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::generator::GeneratorParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = GeneratorParams::from_manifest(text) {
        let written = p.to_manifest();
        let again = GeneratorParams::from_manifest(&written).expect("written manifest parses");
        assert_eq!(again.to_manifest(), written);
    }
});

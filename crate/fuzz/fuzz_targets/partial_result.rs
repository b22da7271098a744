#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::dcsbp::PartialResult;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = PartialResult::decode(data) {
        assert_eq!(PartialResult::decode(&p.encode()).unwrap(), p);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::comm::{decode_payload_list, encode_payload_list};

fuzz_target!(|data: &[u8]| {
    if let Ok(items) = decode_payload_list(data) {
        assert_eq!(encode_payload_list(&items), data);
    }
});

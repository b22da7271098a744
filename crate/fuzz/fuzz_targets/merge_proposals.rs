#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::edist::{decode_merge_proposals, encode_merge_proposals};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = decode_merge_proposals(data) {
        assert_eq!(encode_merge_proposals(&p), data);
    }
});

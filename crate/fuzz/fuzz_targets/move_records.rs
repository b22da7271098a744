#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::edist::{decode_move_records, encode_move_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = decode_move_records(data) {
        assert_eq!(encode_move_records(&r), data);
    }
});

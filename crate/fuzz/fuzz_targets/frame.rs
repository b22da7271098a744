#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::comm::{decode_frame, encode_frame};

fuzz_target!(|data: &[u8]| {
    if let Ok((frame, used)) = decode_frame(data) {
        assert_eq!(encode_frame(&frame), &data[..used]);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::graph::load_truth_bounded;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    if let Ok(t) = load_truth_bounded(rest, 0, usize::from(n), 1 << 16) {
        assert!(t.len() >= usize::from(n));
    }
});

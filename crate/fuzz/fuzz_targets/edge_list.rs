#![no_main]

use libfuzzer_sys::fuzz_target;
use sbp_core::graph::load_edge_list_bounded;

fuzz_target!(|data: &[u8]| {
    let Some((&base, rest)) = data.split_first() else {
        return;
    };
    if let Ok(g) = load_edge_list_bounded(rest, usize::from(base & 1), 1 << 16) {
        let total: u64 = g.edges().map(|(_, _, w)| w).sum();
        assert_eq!(total, g.num_edges());
    }
});

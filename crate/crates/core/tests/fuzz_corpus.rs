//! Replays the checked-in fuzz seeds through the same round trips the fuzz
//! targets check.

use std::fs;
use std::path::PathBuf;

use sbp_core::comm::{decode_frame, decode_payload_list, encode_frame, encode_payload_list};
use sbp_core::dcsbp::PartialResult;
use sbp_core::edist::{decode_merge_proposals, decode_move_records, encode_merge_proposals, encode_move_records};
use sbp_core::generator::GeneratorParams;
use sbp_core::graph::{load_edge_list_bounded, load_truth_bounded};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty(), "no seeds for {target}");
    out.sort();
    out
}

#[test]
fn edge_list_seeds_parse() {
    for s in seeds("edge_list") {
        let g = load_edge_list_bounded(&s[1..], usize::from(s[0] & 1), 1 << 16).unwrap();
        assert_eq!(g.edges().map(|(_, _, w)| w).sum::<u64>(), g.num_edges());
    }
}

#[test]
fn truth_seeds_parse() {
    for s in seeds("truth") {
        let t = load_truth_bounded(&s[1..], 0, usize::from(s[0]), 1 << 16).unwrap();
        assert!(t.len() >= usize::from(s[0]));
    }
}

#[test]
fn manifest_seeds_round_trip() {
    for s in seeds("manifest") {
        let p = GeneratorParams::from_manifest(std::str::from_utf8(&s).unwrap()).unwrap();
        assert_eq!(GeneratorParams::from_manifest(&p.to_manifest()).unwrap(), p);
    }
}

#[test]
fn record_seeds_round_trip() {
    for s in seeds("merge_proposals") {
        assert_eq!(encode_merge_proposals(&decode_merge_proposals(&s).unwrap()), s);
    }
    for s in seeds("move_records") {
        assert_eq!(encode_move_records(&decode_move_records(&s).unwrap()), s);
    }
    for s in seeds("partial_result") {
        assert_eq!(PartialResult::decode(&s).unwrap().encode(), s);
    }
}

#[test]
fn frame_seeds_round_trip() {
    for s in seeds("frame") {
        let (f, used) = decode_frame(&s).unwrap();
        assert_eq!(encode_frame(&f), &s[..used]);
    }
    for s in seeds("payload_list") {
        assert_eq!(encode_payload_list(&decode_payload_list(&s).unwrap()), s);
    }
}

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use anonelect_ffi::*;

const LINE: &str = "plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n";

fn parse(text: &str) -> *mut AeGraph {
    let c = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ae_graph_parse(c.as_ptr(), &mut g) }, AeStatus::Ok);
    g
}

#[test]
fn line_indexes() {
    let g = parse(LINE);
    unsafe {
        let mut n = 0;
        assert_eq!(ae_graph_node_count(g, &mut n), AeStatus::Ok);
        assert_eq!(n, 3);
        let mut feasible = false;
        assert_eq!(ae_is_feasible(g, &mut feasible), AeStatus::Ok);
        assert!(feasible);
        let mut s = 9;
        assert_eq!(ae_s_index(g, &mut s), AeStatus::Ok);
        assert_eq!(s, 0);
        let (mut k, mut leader) = (0, 0);
        assert_eq!(ae_election_index(g, AeTask::CompletePortPathElection, 4, 1_000_000, &mut k, &mut leader), AeStatus::Ok);
        assert_eq!((k, leader), (1, 1));
        let mut classes = [7u32; 3];
        assert_eq!(ae_refine_classes(g, 0, classes.as_mut_ptr(), 3), AeStatus::Ok);
        assert_eq!(classes[0], classes[2]);
        assert_ne!(classes[0], classes[1]);
        assert_eq!(ae_refine_classes(g, 0, classes.as_mut_ptr(), 2), AeStatus::BufferTooSmall);
        let mut text = ptr::null_mut();
        assert_eq!(ae_graph_serialize(g, &mut text), AeStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), LINE);
        ae_string_free(text);
        ae_graph_free(g);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let bad = CString::new("plg 1\nnodes 2\nedge 0 0 0 1\n").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(ae_graph_parse(bad.as_ptr(), &mut g), AeStatus::ParseError);
        assert!(g.is_null());
        assert!(!CStr::from_ptr(ae_last_error()).to_bytes().is_empty());
        let mut n = 0;
        assert_eq!(ae_graph_node_count(ptr::null(), &mut n), AeStatus::NullPointer);
        let pair = parse("plg 1\nnodes 2\nedge 0 0 1 0\n");
        let mut s = 0;
        assert_eq!(ae_s_index(pair, &mut s), AeStatus::Infeasible);
        ae_graph_free(pair);
        ae_graph_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/anonelect.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ae_graph_parse", "ae_graph_free", "ae_election_index", "AE_STATUS_INFEASIBLE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-xc", "-Wall", "-Werror"]).arg(&header).output() else {
        eprintln!("no C compiler on PATH; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anonelect::advice::{apply_scheme, map_advice, AdviceScheme, CppeMapScheme, PeMapScheme};
use anonelect::family_j::{build_jy, JCppeProgram};
use anonelect::family_u::build_gsigma;
use anonelect::sim::{run_streaming, SimConfig};
use anonelect::tasks::{TaskId, Validator};

#[test]
fn pe_map_scheme_on_u() {
    for (k, s) in [(1, 1), (1, 2)] {
        let inst = build_gsigma(4, k, &[s; 9]).unwrap();
        let scheme = PeMapScheme { delta: 4, k };
        let r = apply_scheme(&scheme, &inst.graph).unwrap();
        assert!(r.is_valid(), "{:?}", r.violation);
        assert_eq!(r.rounds, k);
        assert_eq!(r.leaders.len(), 1);
        assert!(inst.cycle().contains(&r.leaders[0]));
        assert_eq!(r.advice_bits, 8 * (1 + anonelect::serialize_plg(&inst.graph).len()));
    }
}

#[test]
fn cppe_map_scheme_on_j_streams() {
    let half = 512;
    let mut y = vec![false; half];
    y[3] = true;
    let inst = build_jy(2, 4, &y).unwrap();
    let scheme = CppeMapScheme { mu: 2, k: 4 };
    assert_eq!(scheme.task(), TaskId::CPPE);
    let advice = scheme.oracle(&inst.graph).unwrap();
    assert_eq!(advice, map_advice(&inst.graph));
    let program: JCppeProgram = scheme.program();
    let leaders = Mutex::new(Vec::new());
    let walked = AtomicUsize::new(0);
    let bad = Mutex::new(None);
    let validator = Mutex::new(Validator::new(&inst.graph, TaskId::CPPE, inst.rho(0)));
    // every 97th node and all of gadget 5
    let trace = run_streaming(&inst.graph, &program, &advice, SimConfig::default(), |v, out| {
        if out.is_leader() {
            leaders.lock().unwrap().push(v);
        }
        if v % 97 == 0 || inst.place(v).gadget == 5 {
            walked.fetch_add(1, Ordering::Relaxed);
            if let Err(e) = validator.lock().unwrap().check(v, &out) {
                bad.lock().unwrap().get_or_insert(e);
            }
        }
    })
    .unwrap();
    assert_eq!(trace.rounds, 4);
    assert_eq!(leaders.into_inner().unwrap(), vec![inst.rho(0)]);
    assert!(bad.into_inner().unwrap().is_none());
    let expected = (0..inst.graph.n()).filter(|&v| v % 97 == 0 || inst.place(v).gadget == 5).count();
    assert_eq!(walked.into_inner(), expected);
    assert!(expected > 100, "{expected}");
}

//! Advice strings, oracles and the schemes that consume them, pigeonhole budgets
//! and fooling-pair demonstrations.

use std::collections::HashMap;

use num_bigint::BigUint;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{parse_plg, serialize_plg, GraphError, NodeId, PortGraph};
use crate::family_g::{build_gi, GInstance};
use crate::family_j::{apply_y, build_template_j, check_j_pair};
use crate::family_u::{apply_sigma, build_template_u, check_u_fooling};
use crate::lemma::{FamilyError, LemmaReport};
use crate::sim::{run, NodeProgram, SimError};
use crate::tasks::{s_index_with_partition, validate_outputs, ElectionOutput, IndexError, TaskId, Violation};
use crate::view::{build_view, canonical_encoding, decode_encoding, lex_min_view, refine_classes, views_equal, ViewError, ViewTree};

/// Version byte of selection advice: the canonical encoding of the leader's view.
pub const SELECTION_VERSION: u8 = 0x01;
/// Version byte of map advice: the graph itself in PLG text form.
pub const MAP_VERSION: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdviceError {
    #[error("advice file is empty or truncated")]
    Truncated,
    #[error("unknown advice version {0:#04x}")]
    UnknownVersion(u8),
    #[error("advice is not a whole number of bytes")]
    Unaligned,
    #[error("bad payload: {0}")]
    Payload(String),
}

/// A bit string handed identically to every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Advice {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl Advice {
    pub fn empty() -> Self {
        Advice::default()
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bit_len = bytes.len() * 8;
        Advice { bytes, bit_len }
    }

    /// Bits are packed most significant first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        Advice { bytes, bit_len: bits.len() }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn bit(&self, i: usize) -> bool {
        i < self.bit_len && self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    /// The packed bits; a trailing partial byte is zero-padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// File form: the bits, zero padding, and the bit length mod 8 in the last 3 bits.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let total_bits = (self.bit_len + 3).div_ceil(8) * 8;
        let mut out = vec![0u8; total_bits / 8];
        out[..self.bytes.len()].copy_from_slice(&self.bytes);
        let last = out.len() - 1;
        out[last] |= (self.bit_len % 8) as u8;
        out
    }

    pub fn from_file_bytes(file: &[u8]) -> Result<Self, AdviceError> {
        let last = *file.last().ok_or(AdviceError::Truncated)?;
        let rem = usize::from(last & 0x07);
        let total = file.len() * 8;
        // the only length in (total-11, total-3] with the recorded residue
        let mut len = total - 3;
        while len % 8 != rem {
            len -= 1;
        }
        let mut bytes = file[..len.div_ceil(8)].to_vec();
        if len % 8 != 0 {
            let keep = 0xffu8 << (8 - len % 8);
            *bytes.last_mut().unwrap() &= keep;
        }
        Ok(Advice { bytes, bit_len: len })
    }
}

fn framed_payload(advice: &Advice, version: u8) -> Result<&[u8], AdviceError> {
    if advice.bit_len() % 8 != 0 {
        return Err(AdviceError::Unaligned);
    }
    match advice.as_bytes().split_first() {
        None => Err(AdviceError::Truncated),
        Some((&v, rest)) if v == version => Ok(rest),
        Some((&v, _)) => Err(AdviceError::UnknownVersion(v)),
    }
}

fn framed(version: u8, payload: &[u8]) -> Advice {
    let mut bytes = Vec::with_capacity(payload.len() + 1);
    bytes.push(version);
    bytes.extend_from_slice(payload);
    Advice::from_bytes(bytes)
}

/// Map advice for `g`: a function of the canonical PLG text only.
pub fn map_advice(g: &PortGraph) -> Advice {
    framed(MAP_VERSION, serialize_plg(g).as_bytes())
}

pub fn decode_map_advice(advice: &Advice) -> Result<PortGraph, AdviceError> {
    let text = std::str::from_utf8(framed_payload(advice, MAP_VERSION)?)
        .map_err(|e| AdviceError::Payload(e.to_string()))?;
    parse_plg(text).map_err(|e: GraphError| AdviceError::Payload(e.to_string()))
}

pub fn selection_advice(view: &ViewTree) -> Advice {
    framed(SELECTION_VERSION, &canonical_encoding(view))
}

pub fn decode_selection_advice(advice: &Advice) -> Result<ViewTree, AdviceError> {
    let payload = framed_payload(advice, SELECTION_VERSION)?;
    decode_encoding(payload).map_err(|e| AdviceError::Payload(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no two sampled instances share advice; the budget is not below the pigeonhole bound")]
    NoCollision,
}

/// An oracle together with the program that consumes its advice.
pub trait AdviceScheme {
    type Program: NodeProgram;

    fn task(&self) -> TaskId;

    fn oracle(&self, g: &PortGraph) -> Result<Advice, SchemeError>;

    fn program(&self) -> Self::Program;
}

/// Outcome of running a scheme's program on its own oracle's advice.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeRun {
    pub task: TaskId,
    pub advice_bits: usize,
    pub rounds: usize,
    pub leaders: Vec<NodeId>,
    pub outputs: Vec<ElectionOutput>,
    pub violation: Option<Violation>,
}

impl SchemeRun {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn apply_scheme<S: AdviceScheme>(scheme: &S, g: &PortGraph) -> Result<SchemeRun, SchemeError> {
    let advice = scheme.oracle(g)?;
    let (outputs, trace) = run(g, &scheme.program(), &advice)?;
    let leaders = (0..g.n()).filter(|&v| outputs[v].is_leader()).collect();
    let violation = validate_outputs(g, scheme.task(), &outputs).err();
    Ok(SchemeRun { task: scheme.task(), advice_bits: advice.bit_len(), rounds: trace.rounds, leaders, outputs, violation })
}

/// Selection with the lex-least unique view of depth `psi_S` as advice.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectionScheme;

/// Elects the node whose own view encodes to the advice payload.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectionProgram;

impl SelectionScheme {
    /// The node the oracle singles out.
    pub fn chosen(g: &PortGraph) -> Result<(NodeId, usize), SchemeError> {
        let (h, part) = s_index_with_partition(g)?;
        let v = lex_min_view(g, &part.singletons(h).into_iter().collect(), h)?;
        Ok((v, h))
    }
}

impl AdviceScheme for SelectionScheme {
    type Program = SelectionProgram;

    fn task(&self) -> TaskId {
        TaskId::S
    }

    fn oracle(&self, g: &PortGraph) -> Result<Advice, SchemeError> {
        let (v, h) = Self::chosen(g)?;
        Ok(selection_advice(&build_view(g, v, h)?))
    }

    fn program(&self) -> SelectionProgram {
        SelectionProgram
    }
}

impl NodeProgram for SelectionProgram {
    type State = (usize, Vec<u8>);

    fn prepare(&self, advice: &Advice) -> Result<Self::State, SimError> {
        let view = decode_selection_advice(advice).map_err(|e| SimError::BadAdvice(e.to_string()))?;
        Ok((view.depth, canonical_encoding(&view)))
    }

    fn rounds(&self, state: &Self::State) -> usize {
        state.0
    }

    fn output(&self, state: &Self::State, view: &ViewTree) -> Result<ElectionOutput, String> {
        Ok(if canonical_encoding(view) == state.1 { ElectionOutput::Leader } else { ElectionOutput::NonLeader })
    }
}

/// Port election on the `U` family with the full map as advice.
#[derive(Debug, Clone, Copy)]
pub struct PeMapScheme {
    pub delta: usize,
    pub k: usize,
}

impl AdviceScheme for PeMapScheme {
    type Program = crate::family_u::UPeProgram;

    fn task(&self) -> TaskId {
        TaskId::PE
    }

    fn oracle(&self, g: &PortGraph) -> Result<Advice, SchemeError> {
        Ok(map_advice(g))
    }

    fn program(&self) -> Self::Program {
        crate::family_u::UPeProgram { delta: self.delta, k: self.k }
    }
}

/// Complete port path election on the `J` family with the full map as advice.
#[derive(Debug, Clone, Copy)]
pub struct CppeMapScheme {
    pub mu: usize,
    pub k: usize,
}

impl AdviceScheme for CppeMapScheme {
    type Program = crate::family_j::JCppeProgram;

    fn task(&self) -> TaskId {
        TaskId::CPPE
    }

    fn oracle(&self, g: &PortGraph) -> Result<Advice, SchemeError> {
        Ok(map_advice(g))
    }

    fn program(&self) -> Self::Program {
        crate::family_j::JCppeProgram { mu: self.mu, k: self.k }
    }
}

/// Least `L` with `2^(L+1) - 1 >= count`: advice shorter than `L` bits on that many
/// graphs must repeat.
pub fn pigeonhole_budget(count: &BigUint) -> u64 {
    // 2^(L+1) >= count + 1
    let target = count + 1u32;
    let bits = target.bits();
    let exact_power = target.trailing_zeros() == Some(bits - 1);
    let exp = if exact_power { bits - 1 } else { bits };
    exp.saturating_sub(1)
}

/// Stand-in oracles for the fooling demonstrations: each maps an instance id to advice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleStub {
    /// The empty string for every instance.
    Zero,
    /// The same fixed string for every instance.
    Constant(Advice),
    /// The first `bits` bits of the SHA-256 of the instance id.
    HashPrefix(usize),
}

impl OracleStub {
    pub fn advise(&self, id: &str) -> Advice {
        match self {
            OracleStub::Zero => Advice::empty(),
            OracleStub::Constant(a) => a.clone(),
            OracleStub::HashPrefix(bits) => {
                let digest = Sha256::digest(id.as_bytes());
                let all: Vec<bool> = digest.iter().flat_map(|&b| (0..8).rev().map(move |i| b >> i & 1 == 1)).collect();
                Advice::from_bits(&all[..(*bits).min(all.len())])
            }
        }
    }
}

/// Which family to fool, with the sampled sub-class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoolingFamily {
    /// `G_i` for each `i` in `sample`.
    G { delta: usize, k: usize, sample: Vec<u64> },
    /// All-1s `sigma` with coordinate `j` (1-based) ranging over `1..=delta-1`.
    U { delta: usize, k: usize, j: usize },
    /// `J_Y` for each `Y` in `sample`.
    J { mu: usize, k: usize, sample: Vec<Vec<bool>> },
}

impl FoolingFamily {
    /// The default demonstration parameters.
    pub fn standard(family: char) -> Option<Self> {
        match family {
            'g' => Some(FoolingFamily::G { delta: 3, k: 1, sample: vec![1, 2] }),
            'u' => Some(FoolingFamily::U { delta: 4, k: 1, j: 1 }),
            'j' => {
                let z = 10;
                let half = 1usize << (z - 1);
                let mut one = vec![false; half];
                one[0] = true;
                Some(FoolingFamily::J { mu: 2, k: 4, sample: vec![vec![false; half], one] })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoolingReport {
    pub family: String,
    pub params: String,
    pub scope: &'static str,
    pub sample: Vec<String>,
    /// Advice shorter than this many bits must repeat on the sample.
    pub sample_budget: u64,
    pub max_advice_bits: usize,
    pub collision: [String; 2],
    pub shared_advice: String,
    pub checks: LemmaReport,
}

const FOOLING_SCOPE: &str = "demonstrates that two sampled instances receiving equal advice contain nodes with equal \
depth-k views whose required outputs conflict; it does not quantify over all algorithms";

fn bit_string(a: &Advice) -> String {
    (0..a.bit_len()).map(|i| if a.bit(i) { '1' } else { '0' }).collect()
}

/// First pair (in sample order) receiving equal advice.
fn find_collision(advice: &[Advice]) -> Option<(usize, usize)> {
    let mut seen: HashMap<&Advice, usize> = HashMap::new();
    for (b, a) in advice.iter().enumerate() {
        if let Some(&first) = seen.get(a) {
            return Some((first, b));
        }
        seen.insert(a, b);
    }
    None
}

/// `G_alpha` versus `G_beta`, `alpha < beta`: every node a `k`-round selection could
/// elect in `G_alpha` has at least two twins in `G_beta`, so the same advice elects
/// two leaders there.
fn fool_g(a: &GInstance, b: &GInstance) -> Result<LemmaReport, FamilyError> {
    let (a, b) = if a.i < b.i { (a, b) } else { (b, a) };
    let k = a.k;
    let mut rep = LemmaReport::new("g", format!("delta={} k={k} G_{} vs G_{}", a.delta, a.i, b.i));
    let r = a.unique_root();
    for copy in [1u8, 2] {
        let twin = b.root(a.i, 2, copy).expect("G_beta holds both copies of earlier trees");
        rep.require(
            "fooling-views-equal",
            views_equal(&a.graph, r, &b.graph, twin, k),
            format!("B^{k}(r_({},2)) of G_{} equals copy {copy} in G_{}", a.i, a.i, b.i),
        )?;
    }
    // one view comparison per depth-k class of G_beta
    let groups = refine_classes(&b.graph, k).groups(k);
    let own = refine_classes(&a.graph, k).singletons(k);
    let twins: Vec<(NodeId, usize)> = own
        .iter()
        .map(|&s| {
            let count = groups.iter().filter(|grp| views_equal(&a.graph, s, &b.graph, grp[0], k)).map(Vec::len).sum();
            (s, count)
        })
        .collect();
    rep.require(
        "duplicated-tree-forces-two-leaders",
        !own.is_empty() && twins.iter().all(|&(_, c)| c >= 2),
        format!("depth-{k} singletons of G_{} with their twin counts in G_{}: {twins:?}", a.i, b.i),
    )?;
    Ok(rep)
}

/// Runs a fooling demonstration: finds two sampled instances the stub cannot tell
/// apart and verifies why one shared behavior fails on one of them.
pub fn fooling_demo(family: &FoolingFamily, stub: &OracleStub) -> Result<FoolingReport, SchemeError> {
    let (name, params, ids): (&str, String, Vec<String>) = match family {
        FoolingFamily::G { delta, k, sample } => ("g", format!("delta={delta} k={k}"), sample.iter().map(|i| format!("G_{i}")).collect()),
        FoolingFamily::U { delta, k, j } => {
            let ids = (1..*delta).map(|s| format!("sigma[{j}]={s}")).collect();
            ("u", format!("delta={delta} k={k} j={j}"), ids)
        }
        FoolingFamily::J { mu, k, sample } => {
            let hex = |y: &Vec<bool>| -> String {
                y.chunks(4)
                    .map(|c| {
                        let v = c.iter().fold(0u32, |acc, &b| acc << 1 | b as u32) << (4 - c.len());
                        char::from_digit(v, 16).unwrap()
                    })
                    .collect()
            };
            let ids = sample.iter().map(|y| format!("Y=0x{}", hex(y))).collect();
            ("j", format!("mu={mu} k={k}"), ids)
        }
    };
    let advice: Vec<Advice> = ids.iter().map(|id| stub.advise(id)).collect();
    let (x, y) = find_collision(&advice).ok_or(SchemeError::NoCollision)?;
    let checks = match family {
        FoolingFamily::G { delta, k, sample } => fool_g(&build_gi(*delta, *k, sample[x])?, &build_gi(*delta, *k, sample[y])?)?,
        FoolingFamily::U { delta, k, j } => {
            let template = build_template_u(*delta, *k)?;
            let trees = template.roots.len() / 2;
            if *j < 1 || *j > trees {
                return Err(FamilyError::ParamOutOfRange(format!("j={j} outside 1..={trees}")).into());
            }
            let sigma = |s: usize| {
                let mut v = vec![1; trees];
                v[j - 1] = s;
                v
            };
            check_u_fooling(&apply_sigma(&template, &sigma(x + 1))?, &apply_sigma(&template, &sigma(y + 1))?)?
        }
        FoolingFamily::J { mu, k, sample } => {
            let template = build_template_j(*mu, *k)?;
            check_j_pair(&apply_y(&template, &sample[x])?, &apply_y(&template, &sample[y])?)?
        }
    };
    // ids are distinct per sampled instance, so the sample size is the class count
    let sample_budget = pigeonhole_budget(&BigUint::from(ids.len()));
    Ok(FoolingReport {
        family: name.to_string(),
        params,
        scope: FOOLING_SCOPE,
        max_advice_bits: advice.iter().map(Advice::bit_len).max().unwrap_or(0),
        collision: [ids[x].clone(), ids[y].clone()],
        shared_advice: bit_string(&advice[x]),
        sample: ids,
        sample_budget,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_roundtrip_all_lengths() {
        for len in 0usize..40 {
            let bits: Vec<bool> = (0..len).map(|i| (i * 7 + 3) % 5 < 2).collect();
            let a = Advice::from_bits(&bits);
            let f = a.to_file_bytes();
            assert_eq!(f.len(), (len + 3).div_ceil(8));
            assert_eq!(Advice::from_file_bytes(&f).unwrap(), a, "len {len}");
        }
        assert_eq!(Advice::from_file_bytes(&[]), Err(AdviceError::Truncated));
    }

    #[test]
    fn framing() {
        let line = parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap();
        assert_eq!(decode_map_advice(&map_advice(&line)).unwrap(), line);
        let sel = SelectionScheme.oracle(&line).unwrap();
        assert_eq!(sel.as_bytes(), &[0x01, 0x00, 0x02]);
        assert_eq!(decode_map_advice(&sel), Err(AdviceError::UnknownVersion(0x01)));
        assert_eq!(decode_selection_advice(&Advice::empty()).unwrap_err(), AdviceError::Truncated);
    }

    #[test]
    fn selection_on_line() {
        let line = parse_plg("plg 1\nnodes 3\nedge 0 0 1 0\nedge 1 1 2 0\n").unwrap();
        let r = apply_scheme(&SelectionScheme, &line).unwrap();
        assert!(r.is_valid());
        assert_eq!((r.leaders, r.rounds), (vec![1], 0));
    }

    #[test]
    fn pigeonhole_matches_enumeration() {
        let mut l = 0u64;
        for count in 2u64..=(1 << 12) {
            while (1u64 << (l + 1)) - 1 < count {
                l += 1;
            }
            assert_eq!(pigeonhole_budget(&BigUint::from(count)), l, "count {count}");
        }
        assert_eq!(pigeonhole_budget(&BigUint::from(19683u32)), 14);
        assert_eq!(pigeonhole_budget(&BigUint::from(4u32)), 2);
    }

    #[test]
    fn fooling_g_and_u() {
        let g = fooling_demo(&FoolingFamily::standard('g').unwrap(), &OracleStub::Zero).unwrap();
        assert_eq!(g.collision, ["G_1".to_string(), "G_2".to_string()]);
        assert_eq!((g.sample_budget, g.checks.passed.len()), (1, 3));
        let u = fooling_demo(&FoolingFamily::standard('u').unwrap(), &OracleStub::Constant(Advice::from_bits(&[true]))).unwrap();
        assert_eq!(u.shared_advice, "1");
        assert_eq!(u.checks.passed.len(), 2);
        let wide = FoolingFamily::G { delta: 3, k: 1, sample: vec![1, 2] };
        assert_eq!(fooling_demo(&wide, &OracleStub::HashPrefix(64)).unwrap_err(), SchemeError::NoCollision);
    }
}

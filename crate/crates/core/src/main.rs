use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use anonelect::advice::{
    apply_scheme, fooling_demo, map_advice, pigeonhole_budget, Advice, AdviceScheme, FoolingFamily, OracleStub, PeMapScheme,
    SchemeRun, SelectionScheme,
};
use anonelect::family_g::{build_gi, check_g_lemmas, class_size_g, class_size_small};
use anonelect::family_j::{
    apply_y, build_component_h, build_template_j, check_invisible_leaf_h, check_j_instance, check_j_pair, class_size_j,
    parse_y, JCheck, JCppeProgram, SamplePolicy,
};
use anonelect::family_u::{build_gsigma, build_template_u, apply_sigma, check_u_fooling, check_u_instance, class_size_u};
use anonelect::gen::random_connected;
use anonelect::lemma::{FamilyError, LemmaReport};
use anonelect::tasks::{validate_outputs, z_index_bruteforce, TaskId};
use anonelect::view::{build_view, canonical_encoding, refine_classes};
use anonelect::{parse_plg, serialize_plg, PortGraph};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "anonelect", version, about = "Leader election in anonymous port-labeled networks")]
struct Cli {
    /// Omit the timestamp so identical invocations print identical JSON.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every sampled or random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    G,
    U,
    J,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Bruteforce,
    Selection,
    PeMap,
    CppeMap,
}

#[derive(clap::Args, Clone, Default)]
struct FamilyParams {
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mu: Option<usize>,
    /// Instance index of `G_i`; `verify` accepts a comma list or `all`.
    #[arg(long)]
    i: Option<String>,
    /// `sigma` as a comma list; `ones` (default) or `twos` for constant vectors.
    /// `verify` accepts several separated by `;`.
    #[arg(long)]
    sigma: Option<String>,
    /// `Y` as `zeros`, `first` (1 then zeros) or a bit string; `verify` takes a comma list.
    #[arg(long)]
    y: Option<String>,
    /// Node count of a random graph.
    #[arg(long)]
    n: Option<usize>,
    /// Extra-edge probability of a random graph.
    #[arg(long, default_value_t = 0.2)]
    extra: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a family instance or a random graph as PLG.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the instance's distinguished nodes as JSON.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Canonical view encodings and digests.
    Views {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        node: Option<usize>,
    },
    /// Refinement classes at a depth.
    Classes {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        depth: usize,
    },
    /// Brute-force election index of one task, or of all four.
    Index {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        task: Option<TaskId>,
        #[arg(long, default_value_t = 8)]
        max_k: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Elect with a scheme and validate the outputs.
    Elect {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        task: TaskId,
        #[arg(long, value_enum)]
        scheme: Scheme,
        #[command(flatten)]
        params: FamilyParams,
        #[arg(long, default_value_t = 8)]
        max_k: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        /// Write the oracle's advice in advice-file form.
        #[arg(long)]
        advice_out: Option<PathBuf>,
    },
    /// Check the structural properties of a family on generated instances.
    Verify {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
        /// Family `j`: any of component, invisible-leaf, rho-sym, twin, cppe, pair.
        #[arg(long, value_delimiter = ',')]
        lemmas: Option<Vec<String>>,
        /// Family `u`: also check the fooling pair differing at this coordinate.
        #[arg(long)]
        fooling_j: Option<usize>,
        /// Family `j`: walk every output instead of the sample.
        #[arg(long)]
        full_validate: bool,
    },
    /// Number of instances in a family.
    Count {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
    },
    /// Advice length below which two instances must share advice.
    Budget {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        params: FamilyParams,
    },
    /// Two instances an oracle stub cannot tell apart, and why that breaks election.
    Fool {
        #[arg(long, value_enum)]
        family: Family,
        /// `zero`, `constant:<bits>` or `hash:<n>`.
        #[arg(long, default_value = "zero")]
        oracle: String,
    },
}

enum CliError {
    Usage(String),
    Failed(String),
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::ParamOutOfRange(_) | FamilyError::BadSequence(_) | FamilyError::SizeGuard { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn need(v: Option<usize>, name: &str) -> Result<usize, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required")))
}

fn read_graph(path: &Path) -> Result<PortGraph, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_plg(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn big_json(x: &BigUint) -> Value {
    x.to_u64().map_or_else(|| Value::String(x.to_string()), Value::from)
}

fn parse_sigma(s: &str, len: usize) -> Result<Vec<usize>, CliError> {
    match s {
        "ones" => Ok(vec![1; len]),
        "twos" => Ok(vec![2; len]),
        _ => s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("bad sigma entry `{t}`"))))
            .collect(),
    }
}

fn parse_y_arg(s: &str, half: usize) -> Result<Vec<bool>, CliError> {
    match s {
        "zeros" => Ok(vec![false; half]),
        "first" => {
            let mut y = vec![false; half];
            y[0] = true;
            Ok(y)
        }
        _ => Ok(parse_y(s)?),
    }
}

fn u_template_len(delta: usize, k: usize) -> Result<usize, CliError> {
    Ok(anonelect::family_u::tree_count(delta, k)? as usize)
}

fn j_half(mu: usize, k: usize) -> Result<usize, CliError> {
    let z = build_component_h(mu, k)?.z();
    Ok(1usize << (z - 1))
}

fn report_json(rep: &LemmaReport) -> Value {
    serde_json::to_value(rep).expect("report serializes")
}

fn gen(cli: &Cli, family: Family, p: &FamilyParams, out: &Option<PathBuf>, sidecar: &Option<PathBuf>) -> Result<Value, CliError> {
    let (graph, side, params) = match family {
        Family::G => {
            let (delta, k) = (need(p.delta, "delta")?, need(p.k, "k")?);
            let i: u64 = p.i.as_deref().unwrap_or("1").parse().map_err(|_| CliError::Usage("--i must be an integer".into()))?;
            let inst = build_gi(delta, k, i)?;
            (inst.graph.clone(), inst.sidecar(), json!({"delta": delta, "k": k, "i": i}))
        }
        Family::U => {
            let (delta, k) = (need(p.delta, "delta")?, need(p.k, "k")?);
            let sigma = parse_sigma(p.sigma.as_deref().unwrap_or("ones"), u_template_len(delta, k)?)?;
            let inst = build_gsigma(delta, k, &sigma)?;
            (inst.graph.clone(), inst.sidecar(), json!({"delta": delta, "k": k}))
        }
        Family::J => {
            let (mu, k) = (need(p.mu, "mu")?, need(p.k, "k")?);
            let y = parse_y_arg(p.y.as_deref().unwrap_or("zeros"), j_half(mu, k)?)?;
            let inst = apply_y(&build_template_j(mu, k)?, &y)?;
            (inst.graph.clone(), inst.sidecar(), json!({"mu": mu, "k": k}))
        }
        Family::Random => {
            let n = need(p.n, "n")?;
            if n == 0 || !(0.0..=1.0).contains(&p.extra) {
                return Err(CliError::Usage("need --n >= 1 and --extra in [0, 1]".into()));
            }
            let g = random_connected(&mut ChaCha8Rng::seed_from_u64(cli.seed), n, p.extra);
            (g, json!({"family": "random", "n": n, "extra": p.extra, "seed": cli.seed}), json!({"n": n, "extra": p.extra}))
        }
    };
    let plg = serialize_plg(&graph);
    let mut res = json!({"params": params, "nodes": graph.n(), "edges": graph.edge_count()});
    match out {
        Some(path) => {
            write_file(path, plg.as_bytes())?;
            res["out"] = json!(path.display().to_string());
        }
        None => res["plg"] = json!(plg),
    }
    if let Some(path) = sidecar {
        write_file(path, serde_json::to_string_pretty(&side).expect("sidecar serializes").as_bytes())?;
        res["sidecar"] = json!(path.display().to_string());
    }
    Ok(res)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn views(graph: &Path, depth: usize, node: Option<usize>) -> Result<Value, CliError> {
    let g = read_graph(graph)?;
    let nodes: Vec<usize> = match node {
        Some(v) if v >= g.n() => return Err(CliError::Usage(format!("node {v} out of range 0..{}", g.n()))),
        Some(v) => vec![v],
        None => (0..g.n()).collect(),
    };
    let mut list = Vec::new();
    for v in nodes {
        let view = build_view(&g, v, depth).map_err(failed)?;
        list.push(json!({
            "node": v,
            "degree": view.degree(),
            "digest": hex(view.root.digest()),
            "encoding": hex(&canonical_encoding(&view)),
        }));
    }
    Ok(json!({"depth": depth, "views": list}))
}

fn classes(graph: &Path, depth: usize) -> Result<Value, CliError> {
    let g = read_graph(graph)?;
    let part = refine_classes(&g, depth);
    Ok(json!({
        "depth": depth,
        "class_count": part.class_count(depth),
        "classes": part.classes_at(depth),
        "singletons": part.singletons(depth),
        "groups": part.groups(depth),
    }))
}

fn index(graph: &Path, task: Option<TaskId>, max_k: usize, budget: u64) -> Result<(Value, bool), CliError> {
    let g = read_graph(graph)?;
    let tasks: Vec<TaskId> = task.map_or_else(|| TaskId::ALL.to_vec(), |t| vec![t]);
    let mut out = serde_json::Map::new();
    let mut ks = Vec::new();
    for t in tasks {
        let r = z_index_bruteforce(&g, t, max_k, budget).map_err(failed)?;
        ks.push(r.k);
        out.insert(t.to_string(), json!({"k": r.k, "leader": r.leader, "outputs": r.outputs}));
    }
    let monotone = ks.windows(2).all(|w| w[0] <= w[1]);
    if task.is_none() {
        out.insert("hierarchy_holds".into(), json!(monotone));
    }
    Ok((Value::Object(out), monotone))
}

fn scheme_json(r: &SchemeRun) -> Value {
    json!({
        "task": r.task,
        "rounds": r.rounds,
        "advice_bits": r.advice_bits,
        "leaders": r.leaders,
        "valid": r.is_valid(),
        "violation": r.violation,
        "outputs": r.outputs,
    })
}

fn run_scheme<S: AdviceScheme>(scheme: &S, task: TaskId, g: &PortGraph, advice_out: &Option<PathBuf>) -> Result<(Value, bool), CliError> {
    if scheme.task() != task {
        return Err(CliError::Usage(format!("this scheme solves {}, not {task}", scheme.task())));
    }
    if let Some(path) = advice_out {
        write_file(path, &scheme.oracle(g).map_err(failed)?.to_file_bytes())?;
    }
    let r = apply_scheme(scheme, g).map_err(failed)?;
    Ok((scheme_json(&r), r.is_valid()))
}

#[allow(clippy::too_many_arguments)]
fn elect(
    graph: &Path,
    task: TaskId,
    scheme: Scheme,
    p: &FamilyParams,
    max_k: usize,
    budget: u64,
    advice_out: &Option<PathBuf>,
) -> Result<(Value, bool), CliError> {
    let g = read_graph(graph)?;
    let (mut res, ok) = match scheme {
        Scheme::Bruteforce => {
            let r = z_index_bruteforce(&g, task, max_k, budget).map_err(failed)?;
            let violation = validate_outputs(&g, task, &r.outputs).err();
            if let Some(path) = advice_out {
                write_file(path, &Advice::empty().to_file_bytes())?;
            }
            let ok = violation.is_none();
            (json!({"task": task, "k": r.k, "leader": r.leader, "valid": ok, "violation": violation, "outputs": r.outputs}), ok)
        }
        Scheme::Selection => run_scheme(&SelectionScheme, task, &g, advice_out)?,
        Scheme::PeMap => {
            run_scheme(&PeMapScheme { delta: need(p.delta, "delta")?, k: need(p.k, "k")? }, task, &g, advice_out)?
        }
        Scheme::CppeMap => {
            if task != TaskId::CPPE {
                return Err(CliError::Usage(format!("this scheme solves CPPE, not {task}")));
            }
            let (mu, k) = (need(p.mu, "mu")?, need(p.k, "k")?);
            let advice = map_advice(&g);
            if let Some(path) = advice_out {
                write_file(path, &advice.to_file_bytes())?;
            }
            // outputs are long port chains: walk each as it is produced instead of keeping them
            let expected = JCppeProgram { mu, k }.prepare_from_map(&g)?.rho_of[0];
            let r = anonelect::family_j::validate_cppe_on(&g, &g, mu, k, expected, &vec![true; g.n()])?;
            let ok = r.is_valid();
            (
                json!({"task": task, "rounds": r.rounds, "advice_bits": advice.bit_len(), "leaders": r.leaders,
                       "checked": r.checked, "valid": ok, "violation": r.violation}),
                ok,
            )
        }
    };
    if let Some(l) = res.get("leaders").and_then(Value::as_array).filter(|l| l.len() == 1) {
        res["leader"] = l[0].clone();
    }
    Ok((res, ok))
}

/// Runs `f`, turning a failed check into a JSON report with `ok: false`.
fn lemma_run(f: impl FnOnce() -> Result<Value, FamilyError>) -> Result<(Value, bool), CliError> {
    match f() {
        Ok(v) => Ok((v, true)),
        Err(FamilyError::LemmaViolation { check, witness }) => {
            Ok((json!({"failed_check": check, "witness": witness}), false))
        }
        Err(e) => Err(e.into()),
    }
}

fn verify(
    cli: &Cli,
    family: Family,
    p: &FamilyParams,
    lemmas: &Option<Vec<String>>,
    fooling_j: Option<usize>,
    full: bool,
) -> Result<(Value, bool), CliError> {
    match family {
        Family::G => {
            let (delta, k) = (need(p.delta, "delta")?, need(p.k, "k")?);
            let ids: Vec<u64> = match p.i.as_deref() {
                None | Some("all") => {
                    let count = class_size_small(delta, k)
                        .ok_or_else(|| CliError::Usage("class too large for `all`; list --i values".into()))?;
                    (1..=count).collect()
                }
                Some(list) => list
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("bad --i entry `{t}`"))))
                    .collect::<Result<_, _>>()?,
            };
            let instances = ids.iter().map(|&i| build_gi(delta, k, i)).collect::<Result<Vec<_>, _>>()?;
            lemma_run(|| Ok(report_json(&check_g_lemmas(&instances)?)))
        }
        Family::U => {
            let (delta, k) = (need(p.delta, "delta")?, need(p.k, "k")?);
            let len = u_template_len(delta, k)?;
            let sigmas = p.sigma.as_deref().unwrap_or("ones").split(';').map(|s| parse_sigma(s, len)).collect::<Result<Vec<_>, _>>()?;
            let template = build_template_u(delta, k)?;
            lemma_run(|| {
                let mut reports = Vec::new();
                for s in &sigmas {
                    reports.push(report_json(&check_u_instance(&apply_sigma(&template, s)?)?));
                }
                if let Some(j) = fooling_j {
                    if j == 0 || j > len {
                        return Err(FamilyError::ParamOutOfRange(format!("--fooling-j must be in 1..={len}")));
                    }
                    let a = apply_sigma(&template, &sigmas[0])?;
                    let mut s2 = sigmas[0].clone();
                    s2[j - 1] = if s2[j - 1] == 1 { 2 } else { 1 };
                    reports.push(report_json(&check_u_fooling(&a, &apply_sigma(&template, &s2)?)?));
                }
                Ok(json!(reports))
            })
        }
        Family::J => {
            let (mu, k) = (need(p.mu, "mu")?, need(p.k, "k")?);
            let names = lemmas.clone().unwrap_or_else(|| {
                ["component", "invisible-leaf", "rho-sym", "twin", "cppe", "pair"].map(String::from).to_vec()
            });
            let mut checks = Vec::new();
            for name in &names {
                match name.as_str() {
                    "component" | "pair" => {}
                    other => checks.push(JCheck::parse(other).ok_or_else(|| CliError::Usage(format!("unknown lemma `{other}`")))?),
                }
            }
            let half = j_half(mu, k)?;
            let ys = p.y.as_deref().unwrap_or("zeros,first").split(',').map(|s| parse_y_arg(s, half)).collect::<Result<Vec<_>, _>>()?;
            let template = build_template_j(mu, k)?;
            let mut policy = SamplePolicy::standard(cli.seed, template.gadget_count());
            policy.full = full;
            lemma_run(|| {
                let mut reports = Vec::new();
                if names.iter().any(|n| n == "component") {
                    reports.push(report_json(&check_invisible_leaf_h(&build_component_h(mu, k)?)?));
                }
                let instances = ys.iter().map(|y| apply_y(&template, y)).collect::<Result<Vec<_>, _>>()?;
                for inst in &instances {
                    reports.push(report_json(&check_j_instance(inst, &checks, &policy)?));
                }
                if names.iter().any(|n| n == "pair") {
                    if instances.len() < 2 {
                        return Err(FamilyError::ParamOutOfRange("`pair` needs two Y values".into()));
                    }
                    reports.push(report_json(&check_j_pair(&instances[0], &instances[1])?));
                }
                Ok(json!({"seed": cli.seed, "full_validate": full, "reports": reports}))
            })
        }
        Family::Random => Err(CliError::Usage("verify supports families g, u and j".into())),
    }
}

fn class_count(family: Family, p: &FamilyParams) -> Result<BigUint, CliError> {
    match family {
        Family::G => Ok(class_size_g(need(p.delta, "delta")?, need(p.k, "k")?)),
        Family::U => Ok(class_size_u(need(p.delta, "delta")?, need(p.k, "k")?)),
        Family::J => Ok(class_size_j(need(p.mu, "mu")?, need(p.k, "k")?)?),
        Family::Random => Err(CliError::Usage("count supports families g, u and j".into())),
    }
}

fn parse_oracle(s: &str) -> Result<OracleStub, CliError> {
    let bad = || CliError::Usage(format!("bad oracle `{s}`; use zero, constant:<bits> or hash:<n>"));
    match s.split_once(':') {
        None if s == "zero" => Ok(OracleStub::Zero),
        Some(("constant", bits)) => {
            let bits: Vec<bool> = bits.chars().map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad()),
            }).collect::<Result<_, _>>()?;
            Ok(OracleStub::Constant(Advice::from_bits(&bits)))
        }
        Some(("hash", n)) => n.parse().map(OracleStub::HashPrefix).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn dispatch(cli: &Cli) -> Result<(Value, bool), CliError> {
    match &cli.cmd {
        Cmd::Gen { family, params, out, sidecar } => Ok((gen(cli, *family, params, out, sidecar)?, true)),
        Cmd::Views { graph, depth, node } => Ok((views(graph, *depth, *node)?, true)),
        Cmd::Classes { graph, depth } => Ok((classes(graph, *depth)?, true)),
        Cmd::Index { graph, task, max_k, budget } => index(graph, *task, *max_k, *budget),
        Cmd::Elect { graph, task, scheme, params, max_k, budget, advice_out } => {
            elect(graph, *task, *scheme, params, *max_k, *budget, advice_out)
        }
        Cmd::Verify { family, params, lemmas, fooling_j, full_validate } => {
            verify(cli, *family, params, lemmas, *fooling_j, *full_validate)
        }
        Cmd::Count { family, params } => Ok((json!({"count": big_json(&class_count(*family, params)?)}), true)),
        Cmd::Budget { family, params } => {
            let count = class_count(*family, params)?;
            if count < BigUint::from(2u32) {
                return Err(CliError::Usage("pigeonhole needs at least two instances".into()));
            }
            Ok((json!({"count": big_json(&count), "budget_bits": pigeonhole_budget(&count)}), true))
        }
        Cmd::Fool { family, oracle } => {
            let tag = match family {
                Family::G => 'g',
                Family::U => 'u',
                Family::J => 'j',
                Family::Random => return Err(CliError::Usage("fool supports families g, u and j".into())),
            };
            let fam = FoolingFamily::standard(tag).expect("standard parameters exist for g, u and j");
            match fooling_demo(&fam, &parse_oracle(oracle)?) {
                Ok(rep) => Ok((serde_json::to_value(&rep).expect("report serializes"), true)),
                Err(anonelect::advice::SchemeError::Family(FamilyError::LemmaViolation { check, witness })) => {
                    Ok((json!({"failed_check": check, "witness": witness}), false))
                }
                Err(e) => Err(failed(e)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let config: Vec<String> = std::env::args().collect();
    match dispatch(&cli) {
        Ok((result, ok)) => {
            let mut doc = json!({"config": config.join(" "), "seed": cli.seed, "ok": ok, "result": result});
            if !cli.deterministic {
                let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
                doc["timestamp"] = json!(now);
            }
            let text = serde_json::to_string_pretty(&doc).expect("output serializes");
            // a closed pipe (e.g. `| head`) is not an error worth a panic
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

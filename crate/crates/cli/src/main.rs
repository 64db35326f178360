//! `graphfair` command-line front end.
//!
//! Exit codes: 0 success or verified, 1 verified false, 2 error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use graphfair::construct::{
    consistent_core_efx, consistent_core_efx_chores, core_identical_efx, core_identical_efx_chores, lex_mixed_diameter4,
    star_efx, three_edge_path_efx, two_type_core_efx,
};
use graphfair::envy::{envy_report, first_strong_envy, is_g_efx, is_g_hef};
use graphfair::gen::{gen_random, gen_sweep_batch, KindMix};
use graphfair::graph::{make_hiddennottight_graph, make_path, EXACT_COVER_BOUND};
use graphfair::hef::{gen_lower_bound_instance, hiddennottight_protocol, min_hidden_set, vertex_cover_round_robin};
use graphfair::io::{
    allocation_from_json, allocation_to_json, ingest_spliddit, instance_to_json, parse_instance, trace_rows, write_trace_csv,
    GraphSpec, InstanceFile,
};
use graphfair::search::{brute_force_efx_search, DEFAULT_BUDGET};
use graphfair::shape::{validate_thm1_shape, validate_thm2_shape, validate_thm3_shape};
use graphfair::sweep::{run_batch, sweep, Outcome, Side, SweepConfig};
use graphfair::{Allocation, Error, Graph, HiddenSet, Instance};

#[derive(Parser)]
#[command(name = "graphfair", version, about = "Fair allocation of indivisible items on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an allocation and check it before printing.
    Solve(SolveArgs),
    /// Check an allocation against G-EFX or G-HEF.
    Verify(VerifyArgs),
    /// Smallest hidden set certifying G-HEF for an allocation.
    Minhide(MinhideArgs),
    /// Generate an instance file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Sweep many path instances and report the rounds histogram.
    SweepBatch(SweepBatchArgs),
    /// Graph utilities.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Star,
    Thm1,
    Thm2,
    Thm3,
    P4,
    Chores1,
    Chores2,
    Lex4,
    Vcrr,
    Sweep,
    Brute,
}

#[derive(Args)]
struct SolveArgs {
    algorithm: Algorithm,
    /// Instance JSON file.
    instance: PathBuf,
    /// Star centre (defaults to a vertex adjacent to every other one).
    #[arg(long)]
    center: Option<usize>,
    /// Vertex whose component round robin runs on (vcrr).
    #[arg(long, default_value_t = 0)]
    component: usize,
    /// Comma-separated vertex cover (vcrr; defaults to a minimum cover).
    #[arg(long, value_delimiter = ',')]
    cover: Option<Vec<usize>>,
    /// State budget for exhaustive search (brute).
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    sweep: SweepFlags,
}

#[derive(Args, Clone)]
struct SweepFlags {
    #[arg(long, default_value_t = 1000)]
    max_rounds: usize,
    /// Let the right endpoint cut by default.
    #[arg(long)]
    right_cuts: bool,
    /// Swap cutter and chooser on EDGE in ROUND, as EDGE:ROUND (edge i joins
    /// agents i and i+1; rounds count from 1). Repeatable.
    #[arg(long = "swap", value_parser = parse_swap)]
    swaps: Vec<(usize, usize)>,
    /// Also cut edges that already have no strong envy.
    #[arg(long)]
    no_skip: bool,
    /// Revisit the last edge in the reverse pass.
    #[arg(long)]
    include_last_edge: bool,
}

impl SweepFlags {
    fn config(&self) -> SweepConfig {
        let (default, swapped) = if self.right_cuts { (Side::Right, Side::Left) } else { (Side::Left, Side::Right) };
        SweepConfig {
            max_rounds: self.max_rounds,
            default_cutter: default,
            overrides: self.swaps.iter().map(|&k| (k, swapped)).collect(),
            skip_efx_edges: !self.no_skip,
            include_last_edge_in_reverse: self.include_last_edge,
        }
    }
}

fn parse_swap(s: &str) -> Result<(usize, usize), String> {
    let (e, r) = s.split_once(':').ok_or("expected EDGE:ROUND")?;
    Ok((e.trim().parse().map_err(|_| "bad edge")?, r.trim().parse().map_err(|_| "bad round")?))
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Efx,
    Hef,
}

#[derive(Args)]
struct VerifyArgs {
    property: Property,
    instance: PathBuf,
    /// Allocation JSON file.
    allocation: PathBuf,
    /// Comma-separated hidden goods (hef; defaults to the file's "hidden").
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// At most one hidden good per bundle.
    #[arg(long)]
    uniform: bool,
}

#[derive(Args)]
struct MinhideArgs {
    instance: PathBuf,
    allocation: PathBuf,
    #[arg(long)]
    uniform: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Path,
    Star,
    Complete,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random additive instance.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        max_value: u64,
        #[arg(long, default_value = "goods")]
        kinds: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "path")]
        graph: GraphKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identical values 1 + 2^-j on the complete graph.
    Lowerbound {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Number of goods (default n^3).
        #[arg(long)]
        scale: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random n-goods instance on the hidden-envy example graph.
    Hiddennottight {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        max_value: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepBatchArgs {
    /// Instance JSON files.
    instances: Vec<PathBuf>,
    /// Spliddit-style CSV (instance_id,agent,p1,...,pm).
    #[arg(long)]
    spliddit: Option<PathBuf>,
    /// Number of random instances to add.
    #[arg(long, default_value_t = 0)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only keep instances with at least this many agents.
    #[arg(long, default_value_t = 2)]
    min_agents: usize,
    /// Write per-round potentials here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    sweep: SweepFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphOp {
    Cover,
    Diameter,
    ValidateShape,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeName {
    Thm1,
    Thm2,
    Thm3,
}

#[derive(Args)]
struct GraphArgs {
    op: GraphOp,
    /// Instance JSON or a bare graph object.
    file: PathBuf,
    #[arg(long, value_enum, default_value = "thm1")]
    shape: ShapeName,
}

enum Verdict {
    Yes,
    No,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Verdict::Yes) => ExitCode::from(0),
        Ok(Verdict::No) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> anyhow::Result<Verdict> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Minhide(args) => minhide(args),
        Command::Gen(cmd) => generate(cmd),
        Command::SweepBatch(args) => sweep_batch(args),
        Command::Graph(args) => graph_op(args),
    }
}

fn load(path: &Path) -> anyhow::Result<(Instance, Graph)> {
    parse_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn load_allocation(path: &Path, inst: &Instance) -> anyhow::Result<(Allocation, Option<HiddenSet>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = allocation_from_json(&text)?;
    Ok((file.to_allocation(inst)?, file.hidden_set()))
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve(args: SolveArgs) -> anyhow::Result<Verdict> {
    let (inst, g) = load(&args.instance)?;
    let mut hidden = None;
    let x = match args.algorithm {
        Algorithm::Star => {
            let center = match args.center {
                Some(c) => c,
                None => (0..g.n())
                    .find(|&c| g.degree(c) + 1 == g.n())
                    .ok_or_else(|| anyhow!("no vertex is adjacent to all others; pass --center"))?,
            };
            star_efx(&inst, center)?
        }
        Algorithm::Thm1 => core_identical_efx(&inst, &g, &validate_thm1_shape(&inst, &g)?)?,
        Algorithm::Thm2 => consistent_core_efx(&inst, &g, &validate_thm2_shape(&inst, &g)?)?,
        Algorithm::Thm3 => two_type_core_efx(&inst, &g, &validate_thm3_shape(&inst, &g)?)?,
        Algorithm::P4 => three_edge_path_efx(&inst)?,
        Algorithm::Chores1 => core_identical_efx_chores(&inst, &g, &validate_thm1_shape(&inst, &g)?)?,
        Algorithm::Chores2 => consistent_core_efx_chores(&inst, &g, &validate_thm2_shape(&inst, &g)?)?,
        Algorithm::Lex4 => lex_mixed_diameter4(&inst, &g)?,
        Algorithm::Vcrr => {
            let component = g
                .connected_components()
                .into_iter()
                .find(|c| c.contains(&args.component))
                .ok_or_else(|| anyhow!("vertex {} is not in the graph", args.component))?;
            let cover = match args.cover {
                Some(c) => c.into_iter().collect(),
                None => {
                    let sub = g.restricted_to(&component);
                    sub.min_vertex_cover_bounded(EXACT_COVER_BOUND).unwrap_or_else(|_| sub.vertex_cover_2approx())
                }
            };
            let (x, s) = vertex_cover_round_robin(&inst, &g, &component, &cover)?;
            if !is_g_hef(&inst, &x, &g, &s, true)? {
                eprintln!("round robin output failed the hidden-envy check");
                return Ok(Verdict::No);
            }
            hidden = Some(s);
            x
        }
        Algorithm::Sweep => {
            if g != make_path(g.n())? {
                bail!("sweep needs the instance graph to be the path 0-1-...-(n-1)");
            }
            let (x, trace) = sweep(&inst, inst.n(), &args.sweep.config())?;
            eprintln!("outcome {:?} after {} rounds", trace.outcome, trace.rounds);
            if trace.outcome != Outcome::Success {
                return Ok(Verdict::No);
            }
            x
        }
        Algorithm::Brute => match brute_force_efx_search(&inst, &g, args.budget)? {
            Some(x) => x,
            None => {
                eprintln!("no G-EFX allocation exists");
                return Ok(Verdict::No);
            }
        },
    };
    if hidden.is_none() {
        if let Some((i, j)) = first_strong_envy(&inst, &x, &g) {
            eprintln!("result is not G-EFX on the instance graph: agent {i} strongly envies {j}");
            return Ok(Verdict::No);
        }
    }
    println!("{}", allocation_to_json(&x, hidden.as_ref()));
    Ok(Verdict::Yes)
}

fn verify(args: VerifyArgs) -> anyhow::Result<Verdict> {
    let (inst, g) = load(&args.instance)?;
    let (x, file_hidden) = load_allocation(&args.allocation, &inst)?;
    let ok = match args.property {
        Property::Efx => {
            let ok = is_g_efx(&inst, &x, &g);
            let witness = first_strong_envy(&inst, &x, &g);
            let report = if inst.valuations().iter().all(|v| v.is_numeric()) {
                Some(envy_report(&inst, &x, Some(&g))?)
            } else {
                None
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "property": "g-efx",
                    "holds": ok,
                    "strong_envy": witness.map(|(i, j)| json!({"from": i, "to": j})),
                    "report": report,
                }))?
            );
            ok
        }
        Property::Hef => {
            let hidden = match args.hidden {
                Some(h) => h.into_iter().collect(),
                None => file_hidden.unwrap_or_default(),
            };
            let ok = is_g_hef(&inst, &x, &g, &hidden, args.uniform)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "property": if args.uniform { "g-uhef" } else { "g-hef" },
                    "hidden": hidden.hidden,
                    "k": hidden.len(),
                    "holds": ok,
                }))?
            );
            ok
        }
    };
    Ok(if ok { Verdict::Yes } else { Verdict::No })
}

fn minhide(args: MinhideArgs) -> anyhow::Result<Verdict> {
    let (inst, g) = load(&args.instance)?;
    let (x, _) = load_allocation(&args.allocation, &inst)?;
    let s = min_hidden_set(&inst, &x, &g, args.uniform)?;
    println!("{}", serde_json::to_string_pretty(&json!({"hidden": s.hidden, "k": s.len(), "uniform": args.uniform}))?);
    Ok(Verdict::Yes)
}

fn generate(cmd: GenCommand) -> anyhow::Result<Verdict> {
    match cmd {
        GenCommand::Random { n, m, max_value, kinds, seed, graph, out } => {
            let mix: KindMix = kinds.parse()?;
            let inst = gen_random(n, m, max_value, mix, seed);
            let spec = match graph {
                GraphKind::Path => GraphSpec::Path { n },
                GraphKind::Star => GraphSpec::Star { n, center: 0 },
                GraphKind::Complete => GraphSpec::Complete { n },
            };
            let mut file = InstanceFile::from_parts(&inst, &spec.build()?);
            file.graph = Some(spec);
            emit(&serde_json::to_string_pretty(&file)?, out.as_deref())?;
        }
        GenCommand::Lowerbound { n, scale, out } => {
            let g = Graph::complete(n);
            let inst = gen_lower_bound_instance(&g, scale);
            emit(&instance_to_json(&inst, &g), out.as_deref())?;
        }
        GenCommand::Hiddennottight { n, max_value, seed, out } => {
            let g = make_hiddennottight_graph(n)?;
            let inst = gen_random(n, n, max_value, KindMix::Goods, seed);
            let (_, x, s) = hiddennottight_protocol(&inst, n)?;
            debug_assert!(is_g_hef(&inst, &x, &g, &s, true)?);
            emit(&instance_to_json(&inst, &g), out.as_deref())?;
        }
    }
    Ok(Verdict::Yes)
}

fn sweep_batch(args: SweepBatchArgs) -> anyhow::Result<Verdict> {
    let mut ids: Vec<String> = Vec::new();
    let mut instances: Vec<Instance> = Vec::new();
    for path in &args.instances {
        let (inst, _) = load(path)?;
        ids.push(path.display().to_string());
        instances.push(inst);
    }
    if let Some(path) = &args.spliddit {
        for item in ingest_spliddit(path).with_context(|| format!("reading {}", path.display()))? {
            ids.push(item.id);
            instances.push(item.instance);
        }
    }
    for (k, inst) in gen_sweep_batch(args.random, args.seed).into_iter().enumerate() {
        ids.push(format!("random-{k}"));
        instances.push(inst);
    }
    let keep: Vec<usize> = (0..instances.len()).filter(|&i| instances[i].n() >= args.min_agents).collect();
    let ids: Vec<String> = keep.iter().map(|&i| ids[i].clone()).collect();
    let instances: Vec<Instance> = keep.iter().map(|&i| instances[i].clone()).collect();

    let report = run_batch(&instances, &args.sweep.config());
    let mut outcomes: BTreeMap<&str, usize> = BTreeMap::new();
    let mut errors = Vec::new();
    for e in &report.entries {
        match &e.result {
            Ok(t) => {
                *outcomes
                    .entry(match t.outcome {
                        Outcome::Success => "success",
                        Outcome::Failure => "failure",
                        Outcome::MaxRounds => "max_rounds",
                    })
                    .or_insert(0) += 1
            }
            Err(msg) => errors.push(json!({"instance_id": ids[e.index], "error": msg})),
        }
    }
    if let Some(path) = &args.csv {
        let rows: Vec<_> = report
            .entries
            .iter()
            .filter_map(|e| e.result.as_ref().ok().map(|t| trace_rows(&ids[e.index], t)))
            .flatten()
            .collect();
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trace_csv(file, &rows)?;
    }
    let histogram: BTreeMap<String, usize> = report.rounds_histogram().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "instances": report.len(),
            "outcomes": outcomes,
            "rounds_histogram": histogram,
            "errors": errors,
        }))?
    );
    Ok(if report.successes() == report.len() { Verdict::Yes } else { Verdict::No })
}

fn load_graph_or_instance(path: &Path) -> anyhow::Result<(Option<Instance>, Graph)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(spec) = serde_json::from_str::<GraphSpec>(&text) {
        return Ok((None, spec.build()?));
    }
    let (inst, g) = graphfair::io::instance_from_json(&text).with_context(|| format!("reading {}", path.display()))?;
    Ok((Some(inst), g))
}

fn graph_op(args: GraphArgs) -> anyhow::Result<Verdict> {
    let (inst, g) = load_graph_or_instance(&args.file)?;
    match args.op {
        GraphOp::Cover => {
            let exact = g.min_vertex_cover_bounded(EXACT_COVER_BOUND);
            let approx = g.vertex_cover_2approx();
            let (cover, exact_flag) = match exact {
                Ok(c) => (c, true),
                Err(Error::TooLarge { .. }) => (approx.clone(), false),
                Err(e) => return Err(e.into()),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({"cover": cover, "size": cover.len(), "exact": exact_flag, "two_approx": approx}))?
            );
        }
        GraphOp::Diameter => match g.diameter() {
            Some(d) => println!("{d}"),
            None => println!("null"),
        },
        GraphOp::ValidateShape => {
            let inst = inst.ok_or_else(|| anyhow!("shape validation needs an instance file"))?;
            let found = match args.shape {
                ShapeName::Thm1 => validate_thm1_shape(&inst, &g),
                ShapeName::Thm2 => validate_thm2_shape(&inst, &g),
                ShapeName::Thm3 => validate_thm3_shape(&inst, &g),
            };
            match found {
                Ok(s) => println!("{}", serde_json::to_string_pretty(&s)?),
                Err(Error::ShapeMismatch(reason)) => {
                    println!("{}", serde_json::to_string_pretty(&json!({"mismatch": reason}))?);
                    return Ok(Verdict::No);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(Verdict::Yes)
}

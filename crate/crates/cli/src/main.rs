mod error;
mod record;
mod verify;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use c2_core::graph::Graph;
use c2_core::period::{analyze, GuardConfig, PrefixConfig, SearchBudget, SearchStrategy};
use c2_core::poly::{c2_cw, c2_direct, c2_lemma3, default_triple, OracleConfig};
use c2_core::transfer::{BuildConfig, Checkpoint, Family, TransferSystem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use error::CliError;
use record::{unix_now, RunConfig, RunRecord};

#[derive(Parser)]
#[command(name = "c2", version, about = "c2 invariants of circulant graph families at small primes")]
struct Cli {
    #[command(flatten)]
    limits: Limits,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Limits {
    /// Worker threads.
    #[arg(long, global = true, env = "C2_THREADS", default_value_t = 4)]
    threads: usize,
    /// Largest transfer system to build, in states.
    #[arg(long, global = true, env = "C2_MAX_STATES", default_value_t = 2_000_000)]
    max_states: usize,
    /// Largest brute-force point count, in evaluated points.
    #[arg(long, global = true, env = "C2_MAX_EVALUATIONS", default_value_t = 1 << 34)]
    max_evaluations: u64,
}

impl Limits {
    fn build(&self) -> BuildConfig {
        BuildConfig { max_states: self.max_states, ..BuildConfig::default() }
    }

    fn oracle(&self) -> OracleConfig {
        OracleConfig { max_evaluations: self.max_evaluations, ..OracleConfig::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// c2 of one graph by brute-force point counting.
    Oracle(OracleArgs),
    /// Stream the c2 sequence of a family from the transfer engine.
    Family(FamilyArgs),
    /// c2 and state-vector periods as a JSON report.
    Period(PeriodArgs),
    /// Prefix frequency tables from per-prime period blocks.
    Prefix(PrefixArgs),
    /// Run a reproduction suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Lemma3,
    Cw,
}

#[derive(Args)]
struct OracleArgs {
    /// Graph in text form: "n m", then one "tail head" line per edge.
    #[arg(long, conflicts_with_all = ["family", "n"])]
    graph: Option<PathBuf>,
    /// Use the decompleted circulant of this family...
    #[arg(long, requires = "n")]
    family: Option<Family>,
    /// ...on this many vertices.
    #[arg(long, requires = "family")]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    method: Method,
    /// Run all three methods and compare.
    #[arg(long)]
    all_methods: bool,
    /// Edge triple for lemma3 and cw, as "i,j,k". Defaults to the edges at a
    /// degree-3 vertex.
    #[arg(long, value_parser = parse_triple)]
    triple: Option<(usize, usize, usize)>,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    p: u32,
    /// Total number of values, counted from the first family member.
    #[arg(long, default_value_t = 100)]
    steps: u64,
    /// Append one JSON object per value to this file.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Checkpoint file, written every `--checkpoint-every` steps and at the end.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    checkpoint_every: u64,
    /// Continue from the checkpoint instead of starting over.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
    /// Write a run record (JSON) here.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Write the matrix as sparse triplets here.
    #[arg(long)]
    export_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    p: u32,
    #[arg(long, default_value = "naive")]
    strategy: SearchStrategy,
    /// c2 values to observe before judging the c2 period.
    #[arg(long, default_value_t = 400)]
    observe: usize,
    /// Step budget for the vector period search.
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 1 << 16)]
    max_snapshots: usize,
    #[arg(long, default_value_t = 5)]
    min_repeats: usize,
    #[arg(long, default_value_t = 6)]
    max_early_segment: usize,
    /// Append the c2 block as a prefix-config line to this file.
    #[arg(long)]
    block_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
    /// index,count pairs for plotting.
    Plot,
}

#[derive(Args)]
struct PrefixArgs {
    /// Lines "length L" and "block p: v v v ...".
    #[arg(long)]
    config: PathBuf,
    /// Overrides the length in the config.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = verify::Tier::Fast)]
    tier: verify::Tier,
}

fn parse_triple(s: &str) -> Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s.split(',').map(|t| t.trim().parse().map_err(|_| format!("bad edge index {t:?}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [i, j, k] => Ok((i, j, k)),
        _ => Err("expected three comma-separated edge indices".into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.limits.threads).build_global() {
        log::warn!("thread pool: {e}");
    }
    let result = match &cli.command {
        Command::Oracle(a) => oracle(a, &cli.limits),
        Command::Family(a) => family(a, &cli.limits),
        Command::Period(a) => period(a, &cli.limits),
        Command::Prefix(a) => prefix(a),
        Command::Verify(a) => run_verify(a, &cli.limits),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn oracle(a: &OracleArgs, limits: &Limits) -> Result<(), CliError> {
    let g = match (&a.graph, a.family, a.n) {
        (Some(path), _, _) => Graph::parse_text(&fs::read_to_string(path).map_err(CliError::io(path))?)?,
        (None, Some(f), Some(n)) => Graph::circulant(n, f.jumps())?.decomplete(0)?.graph,
        _ => return Err(CliError::Usage("give --graph FILE or --family F --n N".into())),
    };
    let cfg = limits.oracle();
    let triple = || a.triple.or_else(|| default_triple(&g)).ok_or_else(|| CliError::Usage("graph has fewer than three edges".into()));
    if a.all_methods {
        let direct = c2_direct(&g, a.p, &cfg)?;
        let t = triple()?;
        let lemma = c2_lemma3(&g, a.p, t, &cfg)?;
        let cw = c2_cw(&g, a.p, t, &cfg)?;
        println!("direct {} ([Psi]_p = {})", direct.value, direct.count);
        println!("lemma3 {} (product count = {})", lemma.value, lemma.count);
        println!("cw {cw}");
        if direct.value == lemma.value && lemma.value == cw {
            println!("AGREE");
            return Ok(());
        }
        println!("DISAGREE");
        return Err(CliError::Verification("oracle methods disagree".into()));
    }
    match a.method {
        Method::Direct => {
            let c = c2_direct(&g, a.p, &cfg)?;
            println!("{}", c.value);
            println!("[Psi]_p = {}", c.count);
        }
        Method::Lemma3 => {
            let c = c2_lemma3(&g, a.p, triple()?, &cfg)?;
            println!("{}", c.value);
            println!("product count = {}", c.count);
        }
        Method::Cw => println!("{}", c2_cw(&g, a.p, triple()?, &cfg)?),
    }
    Ok(())
}

fn build(f: Family, p: u32, limits: &Limits) -> Result<TransferSystem, CliError> {
    let t = Instant::now();
    let sys = TransferSystem::build(f, p, &limits.build())?;
    info!("{f} p={p}: {} states, {} nonzeros, built in {:.1?}", sys.len(), sys.nonzeros(), t.elapsed());
    Ok(sys)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

fn family(a: &FamilyArgs, limits: &Limits) -> Result<(), CliError> {
    let started = unix_now();
    let sys = build(a.family, a.p, limits)?;
    println!("N={}", sys.len());
    if let Some(path) = &a.export_matrix {
        let mut w = create(path)?;
        sys.write_triplets(&mut w).and_then(|_| w.flush()).map_err(CliError::io(path))?;
    }
    let mut runner = match (&a.checkpoint, a.resume) {
        (Some(path), true) => sys.resume(Checkpoint::read_from(path)?)?,
        _ => sys.runner(),
    };
    let fam = a.family.to_string();
    let line = |n: u64, v: u8| serde_json::json!({"family": fam, "p": a.p, "n": n, "value": v}).to_string();
    // The JSONL file is rewritten from the checkpoint's sequence, so it always
    // matches an uninterrupted run.
    let mut jsonl = match &a.jsonl {
        Some(path) => {
            let mut w = create(path)?;
            for (k, &v) in runner.sequence().iter().enumerate() {
                writeln!(w, "{}", line(sys.n_after(k as u64 + 1), v)).map_err(CliError::io(path))?;
            }
            Some((path, w))
        }
        None => None,
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    while runner.steps() < a.steps {
        let (n, v) = runner.next_value();
        writeln!(out, "{n} {v}").map_err(CliError::io("stdout"))?;
        if let Some((path, w)) = &mut jsonl {
            writeln!(w, "{}", line(n, v as u8)).map_err(CliError::io(path))?;
        }
        if let Some(path) = &a.checkpoint {
            if a.checkpoint_every > 0 && runner.steps() % a.checkpoint_every == 0 {
                runner.checkpoint().write_to(path)?;
            }
        }
    }
    out.flush().map_err(CliError::io("stdout"))?;
    if let Some((path, w)) = &mut jsonl {
        w.flush().map_err(CliError::io(path))?;
    }
    if let Some(path) = &a.checkpoint {
        runner.checkpoint().write_to(path)?;
    }
    if let Some(path) = &a.record {
        let config = RunConfig { family: fam.clone(), p: a.p, steps: runner.steps(), engine_version: env!("CARGO_PKG_VERSION") };
        let rec = RunRecord {
            family: fam.clone(),
            p: a.p,
            first_n: a.family.first_n() as u64,
            last_n: sys.n_after(runner.steps()),
            steps: runner.steps(),
            values: runner.sequence().to_vec(),
            period: None,
            started_unix: started,
            finished_unix: unix_now(),
            engine_version: config.engine_version.to_string(),
            config_hash: config.hash(),
        };
        let json = serde_json::to_string_pretty(&rec).expect("record serializes");
        fs::write(path, json + "\n").map_err(CliError::io(path))?;
    }
    Ok(())
}

fn period(a: &PeriodArgs, limits: &Limits) -> Result<(), CliError> {
    let sys = build(a.family, a.p, limits)?;
    let budget = SearchBudget { max_steps: a.max_steps, max_snapshots: a.max_snapshots };
    let guard = GuardConfig { min_repeats: a.min_repeats, max_early_segment: a.max_early_segment };
    let report = analyze(&sys, a.strategy, &budget, &guard, a.observe)?;
    if let Some(path) = &a.block_out {
        let block: Vec<String> = sys.runner().take(report.c2_period as usize).map(|(_, c)| c.to_string()).collect();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(CliError::io(path))?;
        writeln!(f, "block {}: {}", a.p, block.join(" ")).map_err(CliError::io(path))?;
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn prefix(a: &PrefixArgs) -> Result<(), CliError> {
    let mut cfg = PrefixConfig::parse(&fs::read_to_string(&a.config).map_err(CliError::io(&a.config))?)?;
    if let Some(l) = a.length {
        cfg.length = l;
    }
    let table = c2_core::period::prefix_frequencies(&cfg.blocks, cfg.length)?;
    let text = match a.format {
        TableFormat::Csv => table.to_csv(),
        TableFormat::Json => serde_json::to_string_pretty(&table.to_json()).expect("table serializes") + "\n",
        TableFormat::Plot => table.plot_csv(),
    };
    match &a.out {
        Some(path) => fs::write(path, text).map_err(CliError::io(path))?,
        None => print!("{text}"),
    }
    let (min, max, mean) = table.spread();
    info!("ambient period {}, counts {min}..{max}, mean {mean:.2}", table.ambient_period);
    Ok(())
}

fn run_verify(a: &VerifyArgs, limits: &Limits) -> Result<(), CliError> {
    let checks = verify::run(a.tier, &limits.build(), &limits.oracle());
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} checks, {failed} failed", checks.len());
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} checks failed")));
    }
    Ok(())
}

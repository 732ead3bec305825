//! `keraia`: check knowledge files, run lines of thought and rule sets,
//! query klines, replay RISK tournaments and re-export traces.
//!
//! Exit codes: 0 success, 1 domain error (diagnostics, failed runs,
//! unknown names), 2 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use keraia::inference::WorkingMemory;
use keraia::ksynth::{load_files, parse_value, Pack};
use keraia::lot::LotOptions;
use keraia::model::{KLinePath, Logged, SlotValue};
use keraia::risk::{simulate_game, BotSpec, GameResult, CONTINENTS};
use keraia::trace::ReasoningTrace;
use keraia::{xai, Engine, Error};

#[derive(Parser)]
#[command(name = "keraia", version, about = "Frame-based knowledge engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and cross-check knowledge files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run lines of thought or a rule set and print the trace.
    Run(RunArgs),
    /// Print the value at a kline path.
    Query {
        #[command(flatten)]
        source: Source,
        path: String,
        /// Read under the assumptions of this dimension.
        #[arg(long)]
        dimension: Option<String>,
    },
    /// Play seeded RISK games and write the continent series as CSV.
    Risk(RiskArgs),
    /// Work with saved traces.
    Trace {
        #[command(subcommand)]
        action: TraceAction,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// A shipped pack: naval, water or risk.
    #[arg(long)]
    pack: Option<String>,
    /// KSYNTH files, loaded in order.
    #[arg(long, num_args = 1..)]
    file: Vec<PathBuf>,
}

#[derive(Args)]
#[group(id = "entry", required = true, multiple = false)]
struct Entry {
    /// Lines of thought, chained in order.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    lot: Vec<String>,
    /// Forward-chain one rule set.
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    entry: Entry,
    /// `KS/slot=value` changes for a what-if comparison of the last line
    /// of thought; earlier ones set the scene.
    #[arg(long = "what-if", value_name = "PATH=VALUE")]
    what_if: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Forward-chaining cycle limit.
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Step limit per line of thought.
    #[arg(long)]
    tick_limit: Option<usize>,
}

#[derive(Args)]
struct RiskArgs {
    /// Comma-separated seats: aiasset, aiasset-strongest, random,
    /// benevolent, cheater.
    #[arg(long, value_delimiter = ',', required = true)]
    bots: Vec<String>,
    #[arg(long, default_value_t = 1)]
    games: u64,
    /// Game `g` is played with seed `seed + g`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_turns: u32,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TraceAction {
    /// Re-render a structured trace.
    Export {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn pack_dir() -> Option<PathBuf> {
    std::env::var_os("KERAIA_PACK_DIR").map(PathBuf::from)
}

fn load_source(source: &Source) -> Result<Pack> {
    if let Some(name) = &source.pack {
        if let Some(dir) = pack_dir() {
            let path = dir.join(format!("{name}.ksynth"));
            return Ok(load_files(&[path])?);
        }
        return Ok(keraia::packs::load(name)?);
    }
    Ok(load_files(&source.file)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn render(trace: &ReasoningTrace, format: Format) -> String {
    match format {
        Format::Text => xai::narrative(trace),
        Format::Structured => trace.to_structured(),
    }
}

fn parse_modification(s: &str) -> Result<(KLinePath, SlotValue)> {
    let Some((path, value)) = s.split_once('=') else {
        bail!("--what-if expects PATH=VALUE, got `{s}`");
    };
    let path: KLinePath = path.trim().parse()?;
    // bare words are text here, not references
    let value = match parse_value(value.trim()) {
        Ok(SlotValue::Ref(word)) => SlotValue::Text(word),
        Ok(v) => v,
        Err(_) => SlotValue::text(value.trim()),
    };
    Ok((path, value))
}

fn logged(l: &Logged) -> String {
    match l {
        Logged::Value(v) => v.to_string(),
        Logged::Unset => "(unset)".into(),
    }
}

/// A narrative tail for failed runs.
fn tail(trace: &ReasoningTrace, lines: usize) -> String {
    let text = xai::narrative(trace);
    let all: Vec<&str> = text.lines().collect();
    all[all.len().saturating_sub(lines)..].join("\n")
}

fn cmd_check(files: &[PathBuf]) -> Result<ExitCode> {
    match load_files(files) {
        Ok(pack) => {
            println!(
                "ok: {} knowledge sources, {} lines of thought",
                pack.kb.knowledge_sources().count(),
                pack.kb.lots().count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::Parse(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let mut engine = Engine::from_pack(load_source(&args.source)?);
    if let Some(n) = args.max_cycles {
        engine.registry.limits.max_cycles = n;
    }
    if let Some(n) = args.tick_limit {
        engine.registry.limits.step_limit = n;
    }

    if let Some(set) = &args.entry.rules {
        let mut wm = WorkingMemory::new();
        let r = engine.forward_chain(set, &mut wm)?;
        let mut text = String::new();
        for f in &r.fired {
            let b: Vec<String> = f.bindings.iter().map(|(k, v)| format!("?{k}={v}")).collect();
            text.push_str(&format!("fired {} {}\n", f.rule, b.join(" ")));
        }
        for c in &r.commands {
            let args: Vec<String> = c.args.iter().map(ToString::to_string).collect();
            text.push_str(&format!("command {}({})\n", c.name, args.join(", ")));
        }
        for fact in wm.facts() {
            text.push_str(&format!("fact {fact}\n"));
        }
        if r.cycle_limit_hit {
            text.push_str("cycle limit reached\n");
        }
        emit(args.out.as_deref(), &text)?;
        return Ok(ExitCode::SUCCESS);
    }

    let lots: Vec<&str> = args.entry.lot.iter().map(String::as_str).collect();
    if !args.what_if.is_empty() {
        let mods = args
            .what_if
            .iter()
            .map(|m| parse_modification(m))
            .collect::<Result<Vec<_>>>()?;
        let (last, scene) = lots.split_last().expect("clap requires one lot");
        if !scene.is_empty() {
            let t = engine.chain_lots(scene)?;
            if t.is_errored() {
                eprintln!("{}", tail(&t, 5));
                return Ok(ExitCode::from(1));
            }
        }
        let report = xai::what_if(&engine.registry, &engine.kb, last, &LotOptions::at(engine.clock), &mods)?;
        let text = match args.format {
            Format::Structured => report.to_structured(),
            Format::Text => {
                let mut s = match report.divergence {
                    Some(i) => format!("diverges at event {i}\n"),
                    None => "no divergence\n".to_string(),
                };
                for d in &report.outcome_diff {
                    s.push_str(&format!(
                        "{}: {} -> {}\n",
                        d.path,
                        logged(&d.baseline),
                        logged(&d.variant)
                    ));
                }
                s
            }
        };
        emit(args.out.as_deref(), &text)?;
        return Ok(ExitCode::SUCCESS);
    }

    let trace = match lots.as_slice() {
        [one] => engine.run_lot(one)?,
        many => engine.chain_lots(many)?,
    };
    emit(args.out.as_deref(), &render(&trace, args.format))?;
    if trace.is_errored() {
        eprintln!("{}", tail(&trace, 5));
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_query(source: &Source, path: &str, dimension: Option<&str>) -> Result<ExitCode> {
    let engine = Engine::from_pack(load_source(source)?);
    let path: KLinePath = path.parse()?;
    println!("{}", engine.query(&path, dimension)?);
    Ok(ExitCode::SUCCESS)
}

fn owner_label(o: Option<usize>) -> String {
    o.map(|p| format!("P{p}")).unwrap_or_default()
}

fn write_series(w: impl Write, games: &[(u64, GameResult)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["game".to_string(), "seed".into(), "turn".into()];
    header.extend(CONTINENTS.iter().map(|c| c.0.to_string()));
    header.push("winner".into());
    csv.write_record(&header)?;
    for (g, r) in games {
        for (turn, owners) in r.continent_series.iter().enumerate() {
            let mut row = vec![g.to_string(), r.seed.to_string(), (turn + 1).to_string()];
            row.extend(owners.iter().map(|&o| owner_label(o)));
            row.push(owner_label(r.winner));
            csv.write_record(&row)?;
        }
    }
    csv.flush()?;
    Ok(())
}

fn cmd_risk(args: &RiskArgs) -> Result<ExitCode> {
    let specs: Vec<BotSpec> = args.bots.iter().map(|b| b.parse()).collect::<keraia::Result<_>>()?;
    let mut games = Vec::new();
    let mut wins = vec![0u64; specs.len()];
    for g in 0..args.games {
        let r = simulate_game(&specs, args.seed.wrapping_add(g), args.max_turns)?;
        if !r.violations.is_empty() {
            bail!("game {g}: {}", r.violations.join("; "));
        }
        if let Some(w) = r.winner {
            wins[w] += 1;
        }
        games.push((g, r));
    }
    match &args.out {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_series(f, &games)?;
        }
        None => write_series(std::io::stdout(), &games)?,
    }
    // with the CSV on stdout the summary goes to stderr
    let mut summary: Box<dyn Write> = if args.out.is_some() {
        Box::new(std::io::stdout())
    } else {
        Box::new(std::io::stderr())
    };
    for (seat, spec) in specs.iter().enumerate() {
        writeln!(summary, "P{seat} {spec}: {} wins of {}", wins[seat], args.games)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace(action: &TraceAction) -> Result<ExitCode> {
    match action {
        TraceAction::Export { input, format } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let trace = ReasoningTrace::from_structured(&text)?;
            emit(None, &render(&trace, *format))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Check { files } => cmd_check(files),
        Command::Run(args) => cmd_run(args),
        Command::Query {
            source,
            path,
            dimension,
        } => cmd_query(source, path, dimension.as_deref()),
        Command::Risk(args) => cmd_risk(args),
        Command::Trace { action } => cmd_trace(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

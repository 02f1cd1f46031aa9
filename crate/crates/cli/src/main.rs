use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use elars_core::acyclicity::{is_lwa, is_tlwa, temporal_grounding, tfree, Edge};
use elars_core::reason::{gen_belts, BeltConfig, PointwiseRunner, ReasonError, TickReport};
use elars_core::rewrite::{clip_windows, eliminate_diamond, rewrite_program, rewrite_stream, rewrite_timeline, FactSet};
use elars_core::syntax::{parse_program, parse_query, parse_stream, render_exprogram, render_program, render_stream, ExProgram};
use elars_core::{answer, AnswerOptions, Program, Stream, Timeline, Verdict};

const EXIT_NO: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(name = "elars", version, about = "Reasoning with existential rules over data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a program as LWA and, given a timeline, TLWA
    Check {
        #[arg(long)]
        program: PathBuf,
        /// Timeline as `0..H`
        #[arg(long)]
        timeline: Option<TimelineArg>,
    },
    /// Decide whether a query holds at a time point
    Ask {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        at: u32,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        budget: Budget,
    },
    /// Print the rewritten rule set in .exr form
    Rewrite {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long)]
        timeline: Option<TimelineArg>,
        #[arg(long, value_enum, default_value_t = RewriteMode::Full)]
        mode: RewriteMode,
    },
    /// Evaluate tick by tick over a buffer of the last `window` time points
    Run {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        window: u32,
        #[command(flatten)]
        budget: Budget,
    },
    /// Write the conveyor-belt scenario as sA.lars and sA.lstream
    GenBelts {
        #[arg(long, default_value_t = 100)]
        belts: usize,
        /// Number of ticks
        #[arg(long, default_value_t = 100)]
        horizon: u32,
        #[arg(long, default_value_t = 0.3)]
        p1: f64,
        #[arg(long, default_value_t = 0.3)]
        p2: f64,
        #[arg(long, default_value_t = 0.5)]
        p3: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Copy)]
struct Budget {
    /// Chase round budget; also allows programs outside LWA and TLWA
    #[arg(long, env = "ELARS_FUEL")]
    fuel: Option<u64>,
    /// Run programs outside LWA and TLWA with the default budget
    #[arg(long)]
    no_gate: bool,
}

impl Budget {
    fn options(self) -> AnswerOptions {
        AnswerOptions {
            fuel: self.fuel,
            require_gate: !self.no_gate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RewriteMode {
    Full,
    Tgrnd,
}

#[derive(Clone, Copy, Debug)]
struct TimelineArg(Timeline);

impl FromStr for TimelineArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected L..H, got `{s}`"))?;
        let lo: u32 = lo.trim().parse().map_err(|e| format!("bad lower bound `{lo}`: {e}"))?;
        let hi: u32 = hi.trim().parse().map_err(|e| format!("bad upper bound `{hi}`: {e}"))?;
        if lo != 0 {
            return Err(format!("timelines start at 0, got {lo}"));
        }
        Ok(TimelineArg(Timeline::new(hi)))
    }
}

#[derive(Serialize)]
struct CheckReport {
    lwa: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    tlwa: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timeline: Option<[u32; 2]>,
    /// A cycle through a special edge of the failing check.
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<Edge>>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_program(path: &Path) -> Result<Program> {
    parse_program(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_stream(path: &Path) -> Result<Stream> {
    parse_stream(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn check(program: &Path, timeline: Option<TimelineArg>) -> Result<u8> {
    let p = load_program(program)?;
    let lwa = is_lwa(&p);
    let mut report = CheckReport {
        lwa: lwa.acyclic,
        tlwa: None,
        timeline: None,
        witness: lwa.witness,
    };
    if let Some(TimelineArg(t)) = timeline {
        let tlwa = is_tlwa(&clip_windows(&p, t), t);
        report.tlwa = Some(tlwa.acyclic);
        report.timeline = Some([0, t.horizon]);
        if report.lwa {
            report.witness = None;
        } else if !tlwa.acyclic {
            report.witness = tlwa.witness;
        }
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(0)
}

fn ask(program: &Path, stream: &Path, at: u32, query: &str, budget: Budget) -> Result<u8> {
    let p = load_program(program)?;
    let d = load_stream(stream)?;
    let q = parse_query(query).map_err(|e| anyhow!("query: {e}"))?;
    let a = answer(&p, &d, at, &q, budget.options())?;
    println!("{}", serde_json::to_string(&a)?);
    Ok(match a.verdict {
        Verdict::Yes => 0,
        Verdict::No => EXIT_NO,
        Verdict::Unknown => EXIT_UNKNOWN,
    })
}

fn rewrite(program: &Path, stream: Option<&Path>, timeline: Option<TimelineArg>, mode: RewriteMode) -> Result<u8> {
    let mut p = load_program(program)?;
    let d = stream.map(load_stream).transpose()?;
    let timeline = match (timeline, &d) {
        (Some(TimelineArg(t)), Some(d)) if t != d.timeline => {
            bail!("--timeline {t} disagrees with the stream timeline {}", d.timeline)
        }
        (Some(TimelineArg(t)), _) => Some(t),
        (None, Some(d)) => Some(d.timeline),
        (None, None) => None,
    };
    if let Some(d) = &d {
        p = p.with_stream_signature(d);
    }
    if let Some(t) = timeline {
        p = clip_windows(&p, t);
    }
    let out = match mode {
        RewriteMode::Full => {
            let mut facts = FactSet::new();
            if let Some(d) = &d {
                facts.extend(rewrite_stream(d));
            }
            if let Some(t) = timeline {
                facts.extend(rewrite_timeline(t));
            }
            ExProgram {
                rules: rewrite_program(&eliminate_diamond(&p)).rules,
                facts,
            }
        }
        RewriteMode::Tgrnd => {
            let t = timeline.ok_or_else(|| anyhow!("--mode tgrnd needs --timeline or --stream"))?;
            ExProgram {
                rules: tfree(&temporal_grounding(&p, t))?,
                facts: FactSet::new(),
            }
        }
    };
    print!("{}", render_exprogram(&out));
    Ok(0)
}

fn run(program: &Path, stream: &Path, window: u32, budget: Budget) -> Result<u8> {
    let p = load_program(program)?;
    let d = load_stream(stream)?;
    let mut runner = PointwiseRunner::new(p, window, budget.options())?;
    let mut ms = Vec::new();
    let mut unsaturated = 0;
    let mut emit = |reports: Vec<TickReport>| {
        for r in reports {
            println!("{}", r.to_ndjson());
            ms.push(r.stats.ms);
            if !r.stats.saturated {
                unsaturated += 1;
            }
        }
    };
    for b in elars_core::reason::batches_of(&d) {
        emit(runner.push(b)?);
    }
    emit(runner.finish()?);
    ms.sort_by(f64::total_cmp);
    let median = ms.get(ms.len() / 2).copied().unwrap_or(0.0);
    eprintln!("ticks={} median_ms={median:.2} unsaturated={unsaturated}", ms.len());
    Ok(if unsaturated > 0 { EXIT_UNKNOWN } else { 0 })
}

fn gen(cfg: &BeltConfig, out: &Path) -> Result<u8> {
    let inst = gen_belts(cfg)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    fs::write(out.join("sA.lars"), render_program(&inst.program))?;
    fs::write(out.join("sA.lstream"), render_stream(&inst.stream))?;
    eprintln!("wrote {} facts and {} episodes to {}", inst.stream.len(), inst.episodes.len(), out.display());
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { program, timeline } => check(&program, timeline),
        Command::Ask {
            program,
            stream,
            at,
            query,
            budget,
        } => ask(&program, &stream, at, &query, budget),
        Command::Rewrite {
            program,
            stream,
            timeline,
            mode,
        } => rewrite(&program, stream.as_deref(), timeline, mode),
        Command::Run {
            program,
            stream,
            window,
            budget,
        } => run(&program, &stream, window, budget),
        Command::GenBelts {
            belts,
            horizon,
            p1,
            p2,
            p3,
            seed,
            out,
        } => {
            let cfg = BeltConfig {
                belts,
                horizon,
                p1,
                p2,
                p3,
                seed,
            };
            gen(&cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(ReasonError::NoGate(_)) = e.downcast_ref::<ReasonError>() {
                eprintln!("hint: use --fuel or --no-gate");
            }
            ExitCode::from(EXIT_INPUT)
        }
    }
}

//! Command-line driver: analyze single programs, diff the two flow engines,
//! generate corpora, minimize variable graphs, and emit statistics.
//!
//! Exit codes: 0 success (or equivalence), 1 analysis mismatch, 2 usage
//! error, 3 input error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use typeflow::classic::{cha_callgraph, rta_callgraph, vta_callgraph, vta_propagate};
use typeflow::diff::{check_theorem1, collect_stats, minimize_witness, render_witness, run_suite, StatsRow};
use typeflow::dump;
use typeflow::generator::{gen_program, parse_gen_config, GenConfig};
use typeflow::index::ProgramCtx;
use typeflow::minimize::{alias_scc, bisim_minimize, check_refinement};
use typeflow::pta::pta_fixpoint;
use typeflow::tfa::{tfa_fixpoint, tfa_fixpoint_with, TfaOptions};

#[derive(Parser)]
#[command(name = "typeflow", version, about = "Call graph construction workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or all analyses over a program and emit its call graphs and
    /// relation dumps.
    Analyze {
        /// Input program (.tfl).
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Analysis::All)]
        analysis: Analysis,
        #[arg(long, value_enum, default_value_t = Emit::Tsv)]
        emit: Emit,
        /// Write output here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that type flow and points-to agree on every variable, for one
    /// file or a corpus directory.
    Diff {
        /// Input program (.tfl).
        input: Option<PathBuf>,
        /// Directory of .tfl files to check.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        /// Write the per-file CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable an engine rule, to validate that the harness catches a
        /// broken engine.
        #[arg(long, value_enum)]
        defect: Option<Defect>,
    },
    /// Generate random well-formed programs.
    Gen {
        /// Base seed; file i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of programs to generate.
        #[arg(long, default_value_t = 1)]
        count: u32,
        /// Generator config as key=value lines.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (single program).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output directory (any count).
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
    },
    /// Bisimulation-minimize the variable graph and report the reduction
    /// ratio.
    Minimize {
        /// Input program (.tfl).
        input: PathBuf,
        /// Write the partition here; the ratio always goes to standard
        /// output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit per-program statistics as CSV.
    Stats {
        /// Input program (.tfl).
        input: Option<PathBuf>,
        /// Directory of .tfl files.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Measure analysis runtimes. Off by default so output is
        /// byte-stable across runs.
        #[arg(long)]
        time: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Analysis {
    Cha,
    Rta,
    Vta,
    Tfa,
    Pta,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Tsv,
    Dot,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Defect {
    /// Drop the load rule from the type-flow engine.
    SkipLoadRule,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analyze { input, analysis, emit, out } => cmd_analyze(&input, analysis, emit, out),
        Command::Diff { input, corpus_dir, out, defect } => {
            let opts = match defect {
                Some(Defect::SkipLoadRule) => TfaOptions { disable_load_rule: true },
                None => TfaOptions::default(),
            };
            match (input, corpus_dir) {
                (Some(input), None) => cmd_diff_file(&input, opts),
                (None, Some(dir)) => cmd_diff_corpus(&dir, out, opts),
                _ => Err(Failure::usage("diff needs exactly one of <INPUT> or --corpus-dir")),
            }
        }
        Command::Gen { seed, count, config, out, corpus_dir } => {
            cmd_gen(seed, count, config, out, corpus_dir)
        }
        Command::Minimize { input, out } => cmd_minimize(&input, out),
        Command::Stats { input, corpus_dir, out, time } => match (input, corpus_dir) {
            (Some(input), None) => cmd_stats(&[input], out, time),
            (None, Some(dir)) => cmd_stats(&corpus_files(&dir)?, out, time),
            _ => Err(Failure::usage("stats needs exactly one of <INPUT> or --corpus-dir")),
        },
    }
}

fn load_ctx(path: &Path) -> Result<ProgramCtx, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    ProgramCtx::from_source(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(&path, content)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "tfl"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::input(format!("{}: no .tfl files", dir.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_analyze(
    input: &Path,
    analysis: Analysis,
    emit: Emit,
    out: Option<PathBuf>,
) -> Result<u8, Failure> {
    let ctx = load_ctx(input)?;
    let selected: Vec<Analysis> = match analysis {
        Analysis::All => vec![Analysis::Cha, Analysis::Rta, Analysis::Vta, Analysis::Tfa, Analysis::Pta],
        single => vec![single],
    };

    let mut text = String::new();
    let mut json_parts = serde_json::Map::new();
    for kind in selected {
        let name = match kind {
            Analysis::Cha => "cha",
            Analysis::Rta => "rta",
            Analysis::Vta => "vta",
            Analysis::Tfa => "tfa",
            Analysis::Pta => "pta",
            Analysis::All => unreachable!(),
        };
        match kind {
            Analysis::Cha => {
                let outcome = cha_callgraph(&ctx);
                section(&mut text, &mut json_parts, &ctx, name, &outcome.callgraph, emit, None);
            }
            Analysis::Rta => {
                let graph = rta_callgraph(&ctx);
                section(&mut text, &mut json_parts, &ctx, name, &graph, emit, None);
            }
            Analysis::Vta => {
                let cha = cha_callgraph(&ctx).callgraph;
                let graph = vta_propagate(&ctx, &cha);
                let cg = vta_callgraph(&ctx, &graph);
                let extra = match emit {
                    Emit::Tsv => Some(dump::dump_vta(&ctx, &graph)),
                    _ => None,
                };
                section(&mut text, &mut json_parts, &ctx, name, &cg, emit, extra);
            }
            Analysis::Tfa => {
                let result = tfa_fixpoint(&ctx);
                match emit {
                    Emit::Json => {
                        json_parts.insert(name.into(), dump::tfa_json(&ctx, &result));
                    }
                    _ => {
                        let extra = match emit {
                            Emit::Tsv => Some(dump::dump_tfa(&ctx, &result)),
                            _ => None,
                        };
                        section(&mut text, &mut json_parts, &ctx, name, &result.callgraph, emit, extra);
                    }
                }
            }
            Analysis::Pta => {
                let result = pta_fixpoint(&ctx);
                match emit {
                    Emit::Json => {
                        json_parts.insert(name.into(), dump::pta_json(&ctx, &result));
                    }
                    _ => {
                        let extra = match emit {
                            Emit::Tsv => Some(dump::dump_pta(&ctx, &result)),
                            _ => None,
                        };
                        section(&mut text, &mut json_parts, &ctx, name, &result.callgraph, emit, extra);
                    }
                }
            }
            Analysis::All => unreachable!(),
        }
    }

    let rendered = match emit {
        Emit::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(json_parts))
                .expect("serializable");
            s.push('\n');
            s
        }
        _ => text,
    };
    write_out(out, &rendered)?;
    Ok(0)
}

fn section(
    text: &mut String,
    json_parts: &mut serde_json::Map<String, serde_json::Value>,
    ctx: &ProgramCtx,
    name: &str,
    graph: &typeflow::CallGraph,
    emit: Emit,
    extra_tsv: Option<String>,
) {
    match emit {
        Emit::Tsv => {
            let _ = writeln!(text, "# analysis: {name}");
            text.push_str(&dump::dump_callgraph(ctx, graph));
            if let Some(extra) = extra_tsv {
                text.push_str(&extra);
            }
            let _ = writeln!(text, "# {name}: call_edges={}", graph.len());
        }
        Emit::Dot => {
            text.push_str(&dump::callgraph_dot(ctx, graph));
        }
        Emit::Json => {
            json_parts.insert(name.to_string(), dump::callgraph_json(ctx, graph));
        }
    }
}

fn cmd_diff_file(input: &Path, opts: TfaOptions) -> Result<u8, Failure> {
    let ctx = load_ctx(input)?;
    let tfa = tfa_fixpoint_with(&ctx, opts);
    let pta = pta_fixpoint(&ctx);
    let report = check_theorem1(&tfa, &pta).expect("same program");
    if report.ok {
        println!(
            "equivalent: {} variables, {} call edges",
            ctx.var_count(),
            report.tfa_call_edges
        );
        return Ok(0);
    }
    println!("MISMATCH: {} variables disagree", report.mismatches.len());
    for m in &report.mismatches {
        println!(
            "  {}: typeflow-only {:?}, points-to-only {:?}",
            ctx.vars.render(m.var, &ctx.names),
            m.tfa_only.iter().map(|&c| ctx.names.class_name(c)).collect::<Vec<_>>(),
            m.pta_only.iter().map(|&c| ctx.names.class_name(c)).collect::<Vec<_>>(),
        );
    }
    let witness = minimize_witness(&ctx.program, opts);
    println!("minimized witness:");
    print!("{}", render_witness(&witness));
    Ok(1)
}

fn cmd_diff_corpus(dir: &Path, out: Option<PathBuf>, opts: TfaOptions) -> Result<u8, Failure> {
    let files = corpus_files(dir)?;
    let mut csv = String::from("name,ok,mismatched_vars\n");
    let mut failures = 0usize;
    for path in &files {
        let ctx = load_ctx(path)?;
        let tfa = tfa_fixpoint_with(&ctx, opts);
        let pta = pta_fixpoint(&ctx);
        let report = check_theorem1(&tfa, &pta).expect("same program");
        if !report.ok {
            failures += 1;
            eprintln!("{}: {} mismatched variables", path.display(), report.mismatches.len());
        }
        let _ = writeln!(csv, "{},{},{}", stem(path), report.ok, report.mismatches.len());
    }
    write_out(out, &csv)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_gen(
    seed: Option<u64>,
    count: u32,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    corpus_dir: Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut base = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            parse_gen_config(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        None => GenConfig::default(),
    };
    if let Some(seed) = seed {
        base.seed = seed;
    }

    match (out, corpus_dir) {
        (Some(path), None) if count == 1 => {
            let program = gen_program(&base);
            std::fs::write(&path, program.to_source())
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            Ok(0)
        }
        (None, None) if count == 1 => {
            print!("{}", gen_program(&base).to_source());
            Ok(0)
        }
        (None, Some(dir)) => {
            std::fs::create_dir_all(&dir)
                .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            for i in 0..count {
                let config = GenConfig { seed: base.seed + i as u64, ..base.clone() };
                let path = dir.join(format!("p{i:05}.tfl"));
                std::fs::write(&path, gen_program(&config).to_source())
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            }
            Ok(0)
        }
        _ => Err(Failure::usage(
            "gen writes one program to --out (or stdout), or --count programs to --corpus-dir",
        )),
    }
}

fn cmd_minimize(input: &Path, out: Option<PathBuf>) -> Result<u8, Failure> {
    let ctx = load_ctx(input)?;
    let tfa = tfa_fixpoint(&ctx);
    let scc = alias_scc(&tfa);
    let bisim = bisim_minimize(&tfa);
    debug_assert!(check_refinement(&scc, &bisim).unwrap_or(false));
    let partition_dump = dump::dump_partition(&ctx, &bisim);
    match out {
        Some(path) => {
            std::fs::write(&path, &partition_dump)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        }
        None => print!("{partition_dump}"),
    }
    println!(
        "nodes\t{}\nblocks\t{}\nreduction_ratio\t{:.4}",
        bisim.var_count(),
        bisim.block_count(),
        bisim.reduction_ratio()
    );
    Ok(0)
}

fn cmd_stats(files: &[PathBuf], out: Option<PathBuf>, time: bool) -> Result<u8, Failure> {
    let mut csv = String::from(StatsRow::csv_header());
    csv.push('\n');
    for path in files {
        let ctx = load_ctx(path)?;
        let suite = run_suite(&ctx, time);
        let row = collect_stats(&ctx, &stem(path), &suite);
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    write_out(out, &csv)?;
    Ok(0)
}

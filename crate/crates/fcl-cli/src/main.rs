//! Command-line driver for the choreography verification toolkit.
//!
//! Exit codes: 0 when the checked property holds (or output was produced),
//! 1 when a property is violated (the witness goes to stdout), 2 on usage,
//! parse, or budget errors (diagnostics go to stderr).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fcl::cfsm::{CfsmProperty, CfsmSystem};
use fcl::chaut::ChorAutomaton;
use fcl::gtypes::{self, GlobalType, Mode};
use fcl::lang::{ExplicitLanguage, PropertyName};
use fcl::parse;
use fcl::report::Report;
use fcl::{Interaction, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(
    name = "fcl",
    version,
    about = "Verification toolkit for synchronous choreographies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Generalised,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Standard => Mode::Standard,
            ModeArg::Generalised => Mode::Generalised,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification check on a file
    Check {
        #[command(subcommand)]
        check: CheckCommand,
    },
    /// Project a global description onto its participants
    Project {
        file: PathBuf,
        /// Write DOT output to this path
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Synchronous product of a system of machines (.cfsm)
    Product {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Bounded list of the words admitted by the projection semantics
    Words {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Operations on global types (.gt)
    Gt {
        #[command(subcommand)]
        gt: GtCommand,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Closure under unknown information (.ca or .gl)
    Cui {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Branch-awareness (.ca or .gl)
    Ba {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// The five communication properties of the projected system (.gl)
    Props {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Liveness, lock- and deadlock-freedom of a system of machines (.cfsm)
    CfsmProps {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Bounded comparison of an automaton with its projection (.ca)
    Realise {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum GtCommand {
    /// Project on every participant
    Project {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
        mode: ModeArg,
    },
    /// Bounded labelled transition system of the type
    Lts {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Convert to a choreography automaton
    ToCa {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Projectability, CUI and branch-awareness of the type
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        budget: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn budget_of(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("FCL_BUDGET")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(DEFAULT_BUDGET)
}

fn expect_ext(file: &Path, ext: &[&str]) -> Result<String, Failure> {
    let got = file
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_owned();
    if ext.contains(&got.as_str()) {
        Ok(got)
    } else {
        Err(Failure::usage(format!(
            "{}: expected a {} file",
            file.display(),
            ext.join(" or ")
        )))
    }
}

fn read(file: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))
}

fn load_ca(file: &Path) -> Result<ChorAutomaton, Failure> {
    parse::parse_ca(&read(file)?)
        .map_err(|e| Failure::usage(e.in_file(&file.display().to_string()).to_string()))
}

fn load_gl(file: &Path) -> Result<ExplicitLanguage<Interaction>, Failure> {
    parse::parse_glang(&read(file)?)
        .map_err(|e| Failure::usage(e.in_file(&file.display().to_string()).to_string()))
}

fn load_cfsm(file: &Path) -> Result<CfsmSystem, Failure> {
    parse::parse_cfsm_system(&read(file)?)
        .map_err(|e| Failure::usage(e.in_file(&file.display().to_string()).to_string()))
}

fn load_gt(file: &Path) -> Result<GlobalType, Failure> {
    parse::parse_gt(&read(file)?)
        .map_err(|e| Failure::usage(e.in_file(&file.display().to_string()).to_string()))
}

fn write_output(dot: Option<&Path>, content: &str) -> Result<(), Failure> {
    match dot {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
    }
}

fn emit(reports: &[Report], json: bool) -> bool {
    if json {
        if reports.len() == 1 {
            println!("{}", reports[0].to_json());
        } else {
            let all: Vec<_> = reports.iter().collect();
            println!("{}", serde_json::to_string_pretty(&all).expect("report"));
        }
    } else {
        for r in reports {
            if r.holds {
                println!("{}: holds", r.check);
            } else {
                println!("{}: violated", r.check);
                if let Some(w) = &r.witness {
                    println!("  witness: {}", serde_json::to_string(w).expect("witness"));
                }
            }
        }
    }
    reports.iter().all(|r| r.holds)
}

fn run() -> Result<bool, Failure> {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { check } => run_check(check),
        Command::Project { file, dot } => {
            match expect_ext(&file, &["ca", "gl"])?.as_str() {
                "ca" => {
                    let system = load_ca(&file)?
                        .project()
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    if let Some(dot_path) = &dot {
                        let mut out = String::new();
                        for (p, m) in system.machines() {
                            out.push_str(&m.automaton().to_dot(&p.to_string()));
                        }
                        write_output(Some(dot_path), &out)?;
                    } else {
                        print!("{}", parse::serialize_cfsm_system(&system));
                    }
                }
                _ => {
                    let system = load_gl(&file)?
                        .project()
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    let mut out = String::new();
                    for (p, lang) in system.parts() {
                        if !out.is_empty() {
                            out.push('\n');
                        }
                        out.push_str(&parse::serialize_llang(p, lang));
                    }
                    write_output(dot.as_deref(), &out)?;
                }
            }
            Ok(true)
        }
        Command::Product { file, dot } => {
            expect_ext(&file, &["cfsm"])?;
            let product = load_cfsm(&file)?.sync_product();
            write_output(dot.as_deref(), &product.to_dot("product"))?;
            Ok(true)
        }
        Command::Words { file, max_len } => {
            let words: Vec<String> = match expect_ext(&file, &["ca", "gl", "cfsm"])?.as_str() {
                "ca" => {
                    let product = load_ca(&file)?
                        .project()
                        .map_err(|e| Failure::usage(e.to_string()))?
                        .sync_product();
                    product
                        .enumerate(max_len, 0)
                        .finite
                        .iter()
                        .map(|w| w.to_string())
                        .collect()
                }
                "gl" => {
                    let system = load_gl(&file)?
                        .project()
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    system
                        .enumerate_semantics(max_len)
                        .iter()
                        .map(|w| w.to_string())
                        .collect()
                }
                _ => {
                    let product = load_cfsm(&file)?.sync_product();
                    product
                        .enumerate(max_len, 0)
                        .finite
                        .iter()
                        .map(|w| w.to_string())
                        .collect()
                }
            };
            for w in words {
                if w.is_empty() {
                    println!("(empty)");
                } else {
                    println!("{w}");
                }
            }
            Ok(true)
        }
        Command::Gt { gt } => run_gt(gt),
    }
}

fn run_check(check: CheckCommand) -> Result<bool, Failure> {
    match check {
        CheckCommand::Cui { file, json, budget } => {
            let report = match expect_ext(&file, &["ca", "gl"])?.as_str() {
                "ca" => Report::cui(&load_ca(&file)?.decide_cui()),
                _ => Report::cui(
                    &load_gl(&file)?
                        .check_cui(budget_of(budget))
                        .map_err(|e| Failure::usage(e.to_string()))?,
                ),
            };
            Ok(emit(&[report], json))
        }
        CheckCommand::Ba {
            file,
            json,
            budget: _,
        } => {
            let report = match expect_ext(&file, &["ca", "gl"])?.as_str() {
                "ca" => Report::ba(&load_ca(&file)?.decide_ba()),
                _ => Report::ba(&load_gl(&file)?.check_ba()),
            };
            Ok(emit(&[report], json))
        }
        CheckCommand::Props { file, json, budget } => {
            expect_ext(&file, &["gl"])?;
            let system = load_gl(&file)?
                .project()
                .map_err(|e| Failure::usage(e.to_string()))?;
            let budget = budget_of(budget);
            let mut reports = Vec::new();
            for p in PropertyName::ALL {
                let verdict = system
                    .check_property(p, budget)
                    .map_err(|e| Failure::usage(e.to_string()))?;
                reports.push(Report::property(p.as_str(), &verdict));
            }
            Ok(emit(&reports, json))
        }
        CheckCommand::CfsmProps { file, json } => {
            expect_ext(&file, &["cfsm"])?;
            let system = load_cfsm(&file)?;
            let reports: Vec<Report> = CfsmProperty::ALL
                .iter()
                .map(|&p| Report::cfsm_property(p.as_str(), &system.check(p)))
                .collect();
            Ok(emit(&reports, json))
        }
        CheckCommand::Realise {
            file,
            max_len,
            json,
        } => {
            expect_ext(&file, &["ca"])?;
            let report = load_ca(&file)?
                .check_realisation(max_len)
                .map_err(|e| Failure::usage(e.to_string()))?;
            Ok(emit(&[Report::realisation(&report)], json))
        }
    }
}

fn run_gt(gt: GtCommand) -> Result<bool, Failure> {
    match gt {
        GtCommand::Project { file, mode } => {
            expect_ext(&file, &["gt"])?;
            let g = load_gt(&file)?;
            match gtypes::mps_of(&g, mode.into()) {
                Ok(mps) => {
                    for (p, proc) in mps.parts() {
                        println!("{p} |> {proc}");
                    }
                    Ok(true)
                }
                Err(reason) => {
                    println!("not projectable: {reason}");
                    Ok(false)
                }
            }
        }
        GtCommand::Lts {
            file,
            max_len,
            budget,
        } => {
            expect_ext(&file, &["gt"])?;
            let g = load_gt(&file)?;
            let (maximal, all) = gtypes::gt_traces(&g, max_len, budget_of(budget))
                .map_err(|e| Failure::usage(e.to_string()))?;
            println!("traces <= {max_len}: {}", all.len());
            for w in maximal {
                if w.is_empty() {
                    println!("(empty)");
                } else {
                    println!("{w}");
                }
            }
            Ok(true)
        }
        GtCommand::ToCa { file, dot, budget } => {
            expect_ext(&file, &["gt"])?;
            let g = load_gt(&file)?;
            let ca = gtypes::gt_to_chaut(&g, budget_of(budget))
                .map_err(|e| Failure::usage(e.to_string()))?;
            match dot {
                Some(path) => write_output(Some(&path), &ca.fsa().to_dot("gt"))?,
                None => print!("{}", parse::serialize_ca(&ca, "gt")),
            }
            Ok(true)
        }
        GtCommand::Check {
            file,
            mode,
            json,
            budget,
        } => {
            expect_ext(&file, &["gt"])?;
            let g = load_gt(&file)?;
            let budget = budget_of(budget);
            if let Err(reason) = gtypes::mps_of(&g, mode.into()) {
                println!("not projectable: {reason}");
                return Ok(false);
            }
            let ca = gtypes::gt_to_chaut(&g, budget).map_err(|e| Failure::usage(e.to_string()))?;
            let reports = vec![Report::cui(&ca.decide_cui()), Report::ba(&ca.decide_ba())];
            Ok(emit(&reports, json))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

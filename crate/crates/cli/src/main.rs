//! `sidepeg` command-line driver: run scenarios, audit recorded logs and
//! describe scenario parameters.
//!
//! Exit codes: 0 clean, 1 configuration or parse error, 2 invariant
//! violation or audit mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sidepeg::cct::max_transfers_per_cert;
use sidepeg::sim::{fold_report, parse_jsonl, Event, ScenarioConfig, SimError, SimReport, World};

const EXIT_CONFIG: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "sidepeg", version, about = "Sidechain peg simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its event log.
    Run {
        scenario: PathBuf,
        /// Replaces the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the event log.
        #[arg(long, env = "SIDEPEG_OUT_DIR", default_value = ".")]
        out: PathBuf,
        /// Print every event.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Re-run the scenario recorded in a log and compare it record by record.
    Audit { log: PathBuf },
    /// Print derived parameters of a scenario.
    Describe { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage_error { EXIT_CONFIG } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            verbose,
        } => run(&scenario, seed, &out, verbose),
        Command::Audit { log } => audit(&log),
        Command::Describe { scenario } => describe(&scenario),
    };
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ScenarioConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn print_event(e: &Event) {
    println!("{}", serde_json::to_string(e).expect("events serialize"));
}

fn run(path: &Path, seed: Option<u64>, out: &Path, verbose: bool) -> u8 {
    let mut config = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    let mut world = match World::new(config.clone()) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = world.run();
    if verbose {
        world.log.events.iter().for_each(print_event);
    }
    let report = world.report();
    let finished = result.is_ok();
    let text = world.log.to_jsonl(&config, finished.then_some(&report));
    let file = out.join(format!("{}-seed{}.jsonl", config.name, config.seed));
    if let Err(e) = std::fs::create_dir_all(out).and_then(|_| std::fs::write(&file, text)) {
        eprintln!("error: cannot write {}: {e}", file.display());
        return EXIT_CONFIG;
    }
    println!("log: {}", file.display());
    match result {
        Ok(()) => {
            print_report(&report);
            0
        }
        Err(SimError::InvariantViolation { step, seq, details }) => {
            eprintln!("invariant violation at step {step}");
            if let Some(e) = world.log.events.get(seq as usize) {
                eprintln!(
                    "violating event: {}",
                    serde_json::to_string(e).expect("events serialize")
                );
            }
            for d in details {
                eprintln!("  {d}");
            }
            EXIT_VIOLATION
        }
        Err(SimError::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VIOLATION
        }
    }
}

fn print_report(r: &SimReport) {
    println!(
        "scenario {} seed {}: {} mainchain blocks, {} events, {} audits, {} reverted",
        r.scenario, r.seed, r.mc_height, r.events, r.audits_run, r.mc_blocks_reverted
    );
    println!(
        "{:<12} {:>9} {:>9} {:>6} {:>7} {:>7} {:>9} {:>9} {:>8}",
        "sidechain",
        "forward",
        "backward",
        "certs",
        "frauds",
        "punish",
        "destroyed",
        "rewards",
        "sc-blks"
    );
    for s in &r.sidechains {
        println!(
            "{:<12} {:>9} {:>9} {:>6} {:>7} {:>7} {:>9} {:>9} {:>8}",
            s.name,
            s.forward_total,
            s.withdrawn_total,
            s.certificates_accepted,
            s.frauds_detected,
            s.certifiers_punished,
            s.deposits_destroyed,
            s.rewards_paid,
            s.sc_blocks
        );
    }
}

fn audit(path: &Path) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let parsed = match parse_jsonl(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let Some(config) = parsed.config else {
        if parsed.events.is_empty() && parsed.report.is_none() {
            println!("empty log: nothing to audit");
            return 0;
        }
        eprintln!("error: log has records but no header");
        return EXIT_CONFIG;
    };

    let mut world = match World::new(config.clone()) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: recorded scenario is invalid: {e}");
            return EXIT_CONFIG;
        }
    };
    let replay = world.run();
    let ours = &world.log.events;
    if let Some(i) =
        (0..ours.len().max(parsed.events.len())).find(|&i| ours.get(i) != parsed.events.get(i))
    {
        eprintln!("audit mismatch at event {i}");
        match parsed.events.get(i) {
            Some(e) => eprintln!(
                "  recorded: {}",
                serde_json::to_string(e).expect("events serialize")
            ),
            None => eprintln!("  recorded: <missing>"),
        }
        match ours.get(i) {
            Some(e) => eprintln!(
                "  replayed: {}",
                serde_json::to_string(e).expect("events serialize")
            ),
            None => eprintln!("  replayed: <missing>"),
        }
        return EXIT_VIOLATION;
    }
    if let Err(e) = replay {
        eprintln!("replay failed: {e}");
        return EXIT_VIOLATION;
    }
    if let Some(recorded) = &parsed.report {
        let folded = fold_report(&config, &parsed.events, recorded.audits_run);
        if &folded != recorded {
            eprintln!("audit mismatch: recorded report does not match the events");
            return EXIT_VIOLATION;
        }
    }
    println!(
        "audit clean: {} events, {} audits",
        ours.len(),
        world.audits_run
    );
    0
}

fn describe(path: &Path) -> u8 {
    let config = match load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    println!(
        "scenario {} (seed {}, {} mainchain blocks)",
        config.name, config.seed, config.mc_blocks
    );
    for sc in &config.sidechains {
        let p = sc.params();
        println!(
            "sidechain {} (id {})",
            sc.name,
            p.ledger_id.as_hash().short()
        );
        println!("  created at {}, starts at {}", sc.create_at, p.start_block);
        println!(
            "  epoch length {}, preparation {}, dispute {} epochs",
            p.epoch_len, p.prep_len, p.dispute_len
        );
        println!("  group size {}, quorum {}", p.cert_group_size, p.quorum());
        println!("  max certificate amount {}", p.max_cert_amount());
        println!(
            "  max transfers per certificate {}",
            max_transfers_per_cert(&p)
        );
        println!(
            "  certifier fee {}%, min transfer {}",
            p.cert_fee, p.min_transfer_amount
        );
        let epochs = config.mc_blocks.saturating_sub(p.start_block) / p.epoch_len;
        println!("  full withdrawal epochs in run: {epochs}");
    }
    println!("actors: {}", config.actors.len());
    println!("faults: {}", config.faults.len());
    0
}

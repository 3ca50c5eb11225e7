mod protocol;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, bail};
use babyworld::bot::solve;
use babyworld::env::{Episode, random_throughput};
use babyworld::grid::Action;
use babyworld::harness::{DemoSet, Source, evaluate, generate_dataset, read_results, verify_dataset};
use babyworld::lang::{CountConfig, count_instructions, format_count};
use babyworld::levels::{LevelId, make_mission};
use babyworld::sample_eff::{GRID_POINTS, MC_DRAWS, estimate_kmin, rl_confidence_interval};
use clap::{Parser, Subcommand};

use crate::protocol::{SubprocessAgent, serve_bot};

#[derive(Parser, Debug)]
#[command(name = "babyworld", version, about = "Gridworld missions, expert demonstrations and sample-efficiency estimates")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print a mission's instruction and map
    Mission {
        #[arg(long)]
        level: LevelId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the full mission as JSON
        #[arg(long)]
        json: bool,
    },
    /// Play a mission from the keyboard, one key per action
    ///
    /// Keys: a left, d right, w forward, p pickup, x drop, t toggle,
    /// . done, digits 0-6 for action codes, q quit. Other keys are ignored.
    Play {
        #[arg(long)]
        level: LevelId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only print the final result
        #[arg(long)]
        quiet: bool,
    },
    /// Run the bot on a mission and print its actions
    Bot {
        #[arg(long)]
        level: LevelId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a demonstration file
    GenDemos {
        #[arg(long)]
        level: LevelId,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed0: u64,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Collect demonstrations from an external agent instead of the bot
        #[arg(long)]
        agent_cmd: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Replay every episode of a demonstration file
    Verify { path: PathBuf },
    /// Measure an external agent's success rate over consecutive seeds
    Evaluate {
        /// Shell command speaking the line protocol
        #[arg(long)]
        agent_cmd: String,
        #[arg(long)]
        level: LevelId,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed0: u64,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Serve the bot over the agent protocol on stdin/stdout
    AgentBot,
    /// Estimate the demonstrations needed for 99% success from a results CSV
    Estimate {
        csv: PathBuf,
        #[arg(long, default_value_t = MC_DRAWS)]
        draws: usize,
        #[arg(long, default_value_t = GRID_POINTS)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        level: f64,
    },
    /// t-test confidence interval over per-run episode counts
    RlCi {
        #[arg(required = true, num_args = 2..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 0.99)]
        level: f64,
    },
    /// Count the distinct instructions of the language
    CountLanguage {
        /// Also print the exact integer
        #[arg(long)]
        exact: bool,
    },
    /// Random-action stepping throughput on one thread
    Bench {
        #[arg(long, default_value_t = LevelId::GoToObj)]
        level: LevelId,
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
    },
}

fn key_action(c: char) -> Option<Action> {
    match c {
        'a' => Some(Action::TurnLeft),
        'd' => Some(Action::TurnRight),
        'w' => Some(Action::MoveForward),
        'p' => Some(Action::Pickup),
        'x' => Some(Action::Drop),
        't' => Some(Action::Toggle),
        '.' => Some(Action::Done),
        '0'..='6' => Action::from_code(c as u8 - b'0'),
        _ => None,
    }
}

fn play(level: LevelId, seed: u64, quiet: bool, out: &mut impl Write) -> anyhow::Result<bool> {
    let mut ep = Episode::reset(level, seed)?;
    let render = |ep: &Episode, out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "step {}/{}  {}", ep.steps(), ep.mission().max_steps, ep.mission().text())?;
        write!(out, "{}", ep.world().ascii())?;
        writeln!(out, "view:")?;
        write!(out, "{}", ep.observation().ascii())
    };
    if !quiet {
        render(&ep, out)?;
    }
    let mut input = String::new();
    io::stdin().read_to_string(&mut input)?;
    let mut reward = 0.0;
    for c in input.chars() {
        if c == 'q' {
            break;
        }
        let Some(action) = key_action(c) else { continue };
        let step = ep.step(action)?;
        reward = step.reward;
        if !quiet {
            writeln!(out, "> {}", action.name())?;
            render(&ep, out)?;
        }
        if ep.is_finished() {
            break;
        }
    }
    let outcome = if ep.succeeded() { "success" } else { "failure" };
    writeln!(out, "{outcome} reward {reward} steps {}", ep.steps())?;
    Ok(ep.succeeded())
}

fn estimate(csv: PathBuf, draws: usize, grid: usize, seed: u64, level: f64, out: &mut impl Write) -> anyhow::Result<bool> {
    let rows = read_results(File::open(&csv).with_context(|| format!("opening {}", csv.display()))?)
        .with_context(|| format!("reading {}", csv.display()))?;
    if rows.is_empty() {
        bail!("{} has no records", csv.display());
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_level: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if !by_level.contains_key(&r.level) {
            order.push(r.level.clone());
        }
        by_level.entry(r.level).or_default().push((r.k, r.s));
    }
    let mut all_ok = true;
    for name in order {
        let records = &by_level[&name];
        write!(out, "{name}: {} records, ", records.len())?;
        match estimate_kmin(records, level, grid, draws, seed) {
            Ok(e) => {
                let h = e.model.hyper;
                writeln!(out, "{} kept", e.model.x.len())?;
                writeln!(
                    out,
                    "  length_scale {:.4}  signal_scale {:.4}  noise_scale {:.4}  log_likelihood {:.4}",
                    h.length_scale, h.signal_scale, h.noise_scale, e.model.log_likelihood
                )?;
                writeln!(
                    out,
                    "  k_min {:.0}% credible interval [{:.0}, {:.0}]  mass {:.4}  no-crossing {:.4}",
                    level * 100.0,
                    e.interval.k_lo,
                    e.interval.k_hi,
                    e.interval.mass,
                    e.posterior.residual
                )?;
            }
            Err(err) => {
                writeln!(out, "error: {err}")?;
                all_ok = false;
            }
        }
    }
    Ok(all_ok)
}

fn run(cmd: Cmd) -> anyhow::Result<bool> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let ok = match cmd {
        Cmd::Mission { level, seed, json } => {
            let m = make_mission(level, seed)?;
            if json {
                serde_json::to_writer_pretty(&mut out, &m)?;
                writeln!(out)?;
            } else {
                writeln!(out, "level {level} seed {seed}")?;
                writeln!(out, "mission: {}", m.text())?;
                writeln!(out, "max_steps: {}", m.max_steps)?;
                write!(out, "{}", m.world.ascii())?;
            }
            true
        }
        Cmd::Play { level, seed, quiet } => play(level, seed, quiet, &mut out)?,
        Cmd::Bot { level, seed } => {
            let m = make_mission(level, seed)?;
            let actions = solve(&m.world, &m.instruction, m.max_steps)?;
            let r = babyworld::env::replay(&m, &actions);
            writeln!(out, "mission: {}", m.text())?;
            let names: Vec<&str> = actions.iter().map(|a| a.name()).collect();
            writeln!(out, "actions: {}", names.join(" "))?;
            writeln!(out, "success {} reward {} steps {}", r.success, r.reward, r.steps)?;
            r.success
        }
        Cmd::GenDemos { level, n, seed0, out: path, agent_cmd, timeout_ms } => {
            let set = match agent_cmd {
                None => generate_dataset(level, n, Source::Bot, seed0)?,
                Some(cmd) => {
                    let mut agent = SubprocessAgent::spawn(&cmd, Duration::from_millis(timeout_ms))?;
                    let set = generate_dataset(level, n, Source::Agent(&mut agent), seed0);
                    if let Some(e) = agent.error.take() {
                        return Err(e);
                    }
                    set?
                }
            };
            match path {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    let mut w = BufWriter::new(f);
                    set.write_to(&mut w)?;
                    w.flush()?;
                    writeln!(out, "wrote {} episodes to {}", set.len(), p.display())?;
                }
                None => set.write_to(&mut out)?,
            }
            true
        }
        Cmd::Verify { path } => {
            let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let set = DemoSet::read_from(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
            let n = verify_dataset(&set)?;
            writeln!(out, "all {n} episodes verified")?;
            true
        }
        Cmd::Evaluate { agent_cmd, level, n, seed0, timeout_ms } => {
            let mut agent = SubprocessAgent::spawn(&agent_cmd, Duration::from_millis(timeout_ms))?;
            let rate = evaluate(&mut agent, level, n, seed0);
            if let Some(e) = agent.error.take() {
                return Err(e);
            }
            writeln!(out, "success_rate {rate:.3}")?;
            true
        }
        Cmd::AgentBot => {
            drop(out);
            serve_bot(io::stdin().lock(), io::stdout().lock())?;
            return Ok(true);
        }
        Cmd::Estimate { csv, draws, grid, seed, level } => estimate(csv, draws, grid, seed, level, &mut out)?,
        Cmd::RlCi { values, level } => {
            let (lo, hi) = rl_confidence_interval(&values, level)?;
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            writeln!(out, "mean {mean:.4} interval [{lo:.4}, {hi:.4}] half_width {:.4}", (hi - lo) / 2.0)?;
            true
        }
        Cmd::CountLanguage { exact } => {
            let n = count_instructions(&CountConfig::default());
            writeln!(out, "{} instructions", format_count(n))?;
            if exact {
                writeln!(out, "{n}")?;
            }
            true
        }
        Cmd::Bench { level, steps } => {
            let t = random_throughput(level, steps, 0)?;
            writeln!(
                out,
                "{} steps ({} episodes) in {:.3}s: {:.0} steps/s",
                t.steps,
                t.episodes,
                t.seconds,
                t.steps_per_second()
            )?;
            true
        }
    };
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

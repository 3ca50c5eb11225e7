//! Demonstration datasets, agent evaluation and interactive dataset growth.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bot::Bot;
use crate::env::{Episode, replay};
use crate::grid::{Action, Color, DoorState, ObjKind, Observation, compute_reward};
use crate::levels::{LevelId, Mission, make_mission};

pub const FORMAT_HEADER: &str = "babyworld-demos v1";
const PROBE_FLOOR_AFTER: u64 = 20;
const SUCCESS_FLOOR: f64 = 0.05;
pub const SMOOTHING_WINDOW: usize = 10;

/// Hash of the integer coding tables; demo files from a build with
/// different codes are rejected.
pub fn codes_hash() -> String {
    let mut s = String::new();
    for k in ObjKind::ALL {
        let _ = write!(s, "kind:{}={};", k.name(), k.code());
    }
    for c in Color::ALL {
        let _ = write!(s, "color:{}={};", c.name(), c.code());
    }
    for d in [DoorState::Open, DoorState::Closed, DoorState::Locked] {
        let _ = write!(s, "state:{d:?}={};", d.code());
    }
    for a in Action::ALL {
        let _ = write!(s, "action:{}={};", a.name(), a.code());
    }
    let digest = Sha256::digest(s.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoEpisode {
    pub level: LevelId,
    pub seed: u64,
    pub instruction: String,
    pub actions: Vec<Action>,
    pub success: bool,
    pub reward: f64,
    /// Where the episode came from, e.g. `bot` or `round-2`.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemoSet {
    pub episodes: Vec<DemoEpisode>,
}

#[derive(Debug, Error)]
pub enum DemoFormatError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> DemoFormatError {
    DemoFormatError::Malformed { line, msg: msg.into() }
}

impl DemoSet {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn mean_length(&self) -> f64 {
        let total: usize = self.episodes.iter().map(|e| e.actions.len()).sum();
        total as f64 / self.episodes.len().max(1) as f64
    }

    /// Writes the text format. Episodes of several levels are written as
    /// one block per level, in first-appearance order.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{FORMAT_HEADER}")?;
        writeln!(w, "codes {}", codes_hash())?;
        let mut levels: Vec<LevelId> = Vec::new();
        for e in &self.episodes {
            if !levels.contains(&e.level) {
                levels.push(e.level);
            }
        }
        for level in levels {
            let eps: Vec<&DemoEpisode> = self.episodes.iter().filter(|e| e.level == level).collect();
            writeln!(w, "level {level}")?;
            writeln!(w, "episodes {}", eps.len())?;
            for e in eps {
                let codes: String = e.actions.iter().map(|a| char::from(b'0' + a.code())).collect();
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    e.seed,
                    u8::from(e.success),
                    e.reward,
                    e.tag,
                    codes,
                    e.instruction
                )?;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("format is ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<DemoSet, DemoFormatError> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), DemoFormatError> {
            match lines.next() {
                Some((i, l)) => Ok((i, l?)),
                None => Err(malformed(0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (i, head) = next("header")?;
        if head != FORMAT_HEADER {
            return Err(malformed(i, format!("expected '{FORMAT_HEADER}'")));
        }
        let (i, codes) = next("codes line")?;
        if codes != format!("codes {}", codes_hash()) {
            return Err(malformed(i, "coding tables differ from this build"));
        }
        let mut set = DemoSet::default();
        loop {
            let (i, line) = match next("level line") {
                Ok(x) => x,
                Err(DemoFormatError::Malformed { line: 0, .. }) => break,
                Err(e) => return Err(e),
            };
            if line.is_empty() {
                continue;
            }
            let level: LevelId = line
                .strip_prefix("level ")
                .ok_or_else(|| malformed(i, "expected 'level <name>'"))?
                .parse()
                .map_err(|e| malformed(i, format!("{e}")))?;
            let (i, line) = next("episode count")?;
            let count: usize = line
                .strip_prefix("episodes ")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(i, "expected 'episodes <n>'"))?;
            for _ in 0..count {
                let (i, line) = next("episode record")?;
                set.episodes.push(parse_record(i, level, &line)?);
            }
        }
        Ok(set)
    }

    pub fn from_text(text: &str) -> Result<DemoSet, DemoFormatError> {
        Self::read_from(text.as_bytes())
    }
}

fn parse_record(i: usize, level: LevelId, line: &str) -> Result<DemoEpisode, DemoFormatError> {
    let f: Vec<&str> = line.splitn(6, '\t').collect();
    if f.len() != 6 {
        return Err(malformed(i, "expected 6 tab-separated fields"));
    }
    let seed = f[0].parse().map_err(|_| malformed(i, "bad seed"))?;
    let success = match f[1] {
        "0" => false,
        "1" => true,
        _ => return Err(malformed(i, "bad success flag")),
    };
    let reward: f64 = f[2].parse().map_err(|_| malformed(i, "bad reward"))?;
    let actions = f[4]
        .bytes()
        .map(|b| b.checked_sub(b'0').and_then(Action::from_code).ok_or_else(|| malformed(i, "bad action code")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DemoEpisode { level, seed, instruction: f[5].to_string(), actions, success, reward, tag: f[3].to_string() })
}

/// An external decision-maker driven one episode at a time.
pub trait AgentPort {
    fn reset(&mut self, mission: &Mission);
    fn act(&mut self, obs: &Observation) -> Action;
}

/// The bot behind the agent interface; emits `done` if planning fails.
#[derive(Debug, Default)]
pub struct BotAgent {
    bot: Option<Bot>,
}

impl AgentPort for BotAgent {
    fn reset(&mut self, mission: &Mission) {
        self.bot = Some(Bot::for_world(&mission.instruction, &mission.world));
    }

    fn act(&mut self, obs: &Observation) -> Action {
        self.bot.as_mut().and_then(|b| b.next_action(obs).ok()).unwrap_or(Action::Done)
    }
}

/// Replays stored action sequences keyed by `(level, seed)`; `done` otherwise.
#[derive(Debug, Default, Clone)]
pub struct ReplayAgent {
    table: HashMap<(LevelId, u64), Vec<Action>>,
    current: Vec<Action>,
    cursor: usize,
}

impl ReplayAgent {
    pub fn new(set: &DemoSet) -> Self {
        let table = set.episodes.iter().map(|e| ((e.level, e.seed), e.actions.clone())).collect();
        Self { table, current: Vec::new(), cursor: 0 }
    }
}

impl AgentPort for ReplayAgent {
    fn reset(&mut self, mission: &Mission) {
        self.current = self.table.get(&(mission.level, mission.seed)).cloned().unwrap_or_default();
        self.cursor = 0;
    }

    fn act(&mut self, _obs: &Observation) -> Action {
        let a = self.current.get(self.cursor).copied().unwrap_or(Action::Done);
        self.cursor += 1;
        a
    }
}

/// Runs one episode to termination or budget exhaustion.
pub fn run_episode(agent: &mut dyn AgentPort, mission: &Mission) -> DemoEpisode {
    agent.reset(mission);
    let mut ep = Episode::new(mission.clone());
    let mut actions = Vec::new();
    let mut reward = 0.0;
    while !ep.is_finished() {
        let a = agent.act(&ep.observation());
        actions.push(a);
        reward = ep.step(a).expect("episode running").reward;
    }
    DemoEpisode {
        level: mission.level,
        seed: mission.seed,
        instruction: mission.text(),
        actions,
        success: ep.succeeded(),
        reward,
        tag: String::new(),
    }
}

/// The bot's demonstration for a mission, from its stored witness.
pub fn bot_demo(mission: &Mission, tag: &str) -> DemoEpisode {
    let steps = mission.witness.len() as u32;
    DemoEpisode {
        level: mission.level,
        seed: mission.seed,
        instruction: mission.text(),
        actions: mission.witness.clone(),
        success: true,
        reward: compute_reward(steps, mission.max_steps, true).expect("witness within budget"),
        tag: tag.to_string(),
    }
}

pub enum Source<'a> {
    Bot,
    Agent(&'a mut dyn AgentPort),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("source success rate {successes}/{attempts} is below the floor")]
    LowSuccess { successes: u64, attempts: u64 },
    #[error("n must be at least 1")]
    Empty,
}

/// `n` successful episodes from consecutive seeds starting at `seed0`.
/// Failed episodes and ungeneratable seeds are skipped.
pub fn generate_dataset(level: LevelId, n: usize, source: Source<'_>, seed0: u64) -> Result<DemoSet, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Empty);
    }
    let mut set = DemoSet::default();
    let (mut attempts, mut successes) = (0u64, 0u64);
    let floor = |attempts: u64, successes: u64| {
        if attempts >= PROBE_FLOOR_AFTER && (successes as f64) < SUCCESS_FLOOR * attempts as f64 {
            Err(HarnessError::LowSuccess { successes, attempts })
        } else {
            Ok(())
        }
    };
    match source {
        Source::Bot => {
            let mut next = seed0;
            while set.len() < n {
                let batch = (n - set.len()).max(16) as u64;
                let results: Vec<Option<DemoEpisode>> = (next..next + batch)
                    .into_par_iter()
                    .map(|s| make_mission(level, s).ok().map(|m| bot_demo(&m, "bot")))
                    .collect();
                next += batch;
                for r in results {
                    attempts += 1;
                    if let Some(e) = r {
                        successes += 1;
                        if set.len() < n {
                            set.episodes.push(e);
                        }
                    }
                }
                floor(attempts, successes)?;
            }
        }
        Source::Agent(agent) => {
            let mut seed = seed0;
            while set.len() < n {
                attempts += 1;
                if let Ok(m) = make_mission(level, seed) {
                    let mut e = run_episode(agent, &m);
                    if e.success {
                        successes += 1;
                        e.tag = "agent".to_string();
                        set.episodes.push(e);
                    }
                }
                seed += 1;
                floor(attempts, successes)?;
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("seed {seed}: mission could not be regenerated")]
    Regenerate { seed: u64 },
    #[error("seed {seed}: instruction text differs")]
    Instruction { seed: u64 },
    #[error("seed {seed}: replay gives success={success} reward={reward}, file says success={file_success} reward={file_reward}")]
    Mismatch { seed: u64, success: bool, reward: f64, file_success: bool, file_reward: f64 },
}

/// Replays every episode against its regenerated mission.
pub fn verify_dataset(set: &DemoSet) -> Result<usize, VerifyError> {
    set.episodes
        .par_iter()
        .map(|e| {
            let m = make_mission(e.level, e.seed).map_err(|_| VerifyError::Regenerate { seed: e.seed })?;
            if m.text() != e.instruction {
                return Err(VerifyError::Instruction { seed: e.seed });
            }
            let r = replay(&m, &e.actions);
            if r.success != e.success || r.reward != e.reward || r.steps as usize != e.actions.len() {
                return Err(VerifyError::Mismatch {
                    seed: e.seed,
                    success: r.success,
                    reward: r.reward,
                    file_success: e.success,
                    file_reward: e.reward,
                });
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, _>>()
        .map(|v| v.len())
}

/// Success rate over seeds `seed0..seed0 + n`; seeds that cannot be
/// generated are skipped.
pub fn evaluate(agent: &mut dyn AgentPort, level: LevelId, n: usize, seed0: u64) -> f64 {
    let (mut ok, mut total) = (0usize, 0usize);
    for seed in seed0..seed0 + n as u64 {
        let Ok(m) = make_mission(level, seed) else { continue };
        total += 1;
        ok += usize::from(run_episode(agent, &m).success);
    }
    ok as f64 / total.max(1) as f64
}

/// Dataset sizes `round(base * factor^i)`.
pub fn growth_schedule(base: usize, factor: f64, rounds: usize) -> Vec<usize> {
    (0..rounds).map(|i| (base as f64 * factor.powi(i as i32)).round() as usize).collect()
}

#[derive(Debug, Clone)]
pub struct GrowthConfig {
    pub base: usize,
    pub factor: f64,
    pub stop_rate: f64,
    pub max_rounds: usize,
    pub train_seed0: u64,
    pub eval_seed0: u64,
    pub eval_episodes: usize,
    /// First seed probed for failed missions each round; seeds already in
    /// the dataset are skipped.
    pub probe_seed0: u64,
    /// Upper bound on seeds probed for failures in one round.
    pub probe_limit: u64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            base: 1 << 10,
            factor: 2f64.powf(0.25),
            stop_rate: 0.99,
            max_rounds: 16,
            train_seed0: 0,
            eval_seed0: 1 << 32,
            eval_episodes: 512,
            probe_seed0: 1 << 32,
            probe_limit: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthTrace {
    /// `(dataset size, success rate)` per round.
    pub points: Vec<(usize, f64)>,
    /// Seeds probed to find failures, per round after the first.
    pub probes: Vec<u64>,
    pub dataset: DemoSet,
}

#[derive(Debug, Error)]
pub enum GrowthError<E> {
    #[error("trainer failed: {0}")]
    Trainer(E),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("no failing mission found within {0} probes")]
    ProbesExhausted(u64),
}

/// Grows a dataset by adding bot demonstrations only for missions the
/// current agent fails. `trainer` builds a fresh agent from a dataset.
pub fn interactive_growth<E, T>(level: LevelId, cfg: &GrowthConfig, mut trainer: T) -> Result<GrowthTrace, GrowthError<E>>
where
    T: FnMut(&DemoSet) -> Result<Box<dyn AgentPort>, E>,
{
    let mut set = generate_dataset(level, cfg.base, Source::Bot, cfg.train_seed0)?;
    for e in &mut set.episodes {
        e.tag = "base".to_string();
    }
    let mut used: BTreeSet<u64> = set.episodes.iter().map(|e| e.seed).collect();
    let schedule = growth_schedule(cfg.base, cfg.factor, cfg.max_rounds);
    let mut trace = GrowthTrace::default();
    for round in 0..cfg.max_rounds {
        let mut agent = trainer(&set).map_err(GrowthError::Trainer)?;
        let rate = evaluate(agent.as_mut(), level, cfg.eval_episodes, cfg.eval_seed0);
        trace.points.push((set.len(), rate));
        if rate >= cfg.stop_rate || round + 1 == cfg.max_rounds {
            break;
        }
        let target = schedule[round + 1];
        let tag = format!("round-{}", round + 1);
        let mut probed = 0u64;
        let mut probe = cfg.probe_seed0;
        while set.len() < target {
            if probed == cfg.probe_limit {
                return Err(GrowthError::ProbesExhausted(probed));
            }
            probed += 1;
            let seed = probe;
            probe += 1;
            if used.contains(&seed) {
                continue;
            }
            let Ok(m) = make_mission(level, seed) else { continue };
            if !run_episode(agent.as_mut(), &m).success {
                set.episodes.push(bot_demo(&m, &tag));
                used.insert(seed);
            }
        }
        trace.probes.push(probed);
    }
    trace.dataset = set;
    Ok(trace)
}

/// Trailing-window mean with window 10, shorter at the head.
pub fn smooth_success_curve<F: Float>(raw: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(raw.len());
    let mut sum = F::zero();
    for i in 0..raw.len() {
        sum = sum + raw[i];
        if i >= SMOOTHING_WINDOW {
            sum = sum - raw[i - SMOOTHING_WINDOW];
        }
        let w = (i + 1).min(SMOOTHING_WINDOW);
        out.push(sum / F::from(w).unwrap());
    }
    out
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub k: f64,
    pub s: f64,
    pub level: String,
    pub run_id: String,
}

pub fn read_results<R: io::Read>(r: R) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

pub fn write_results<W: io::Write>(w: W, rows: &[ResultRow]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        assert_eq!(growth_schedule(1024, 2f64.powf(0.25), 5), vec![1024, 1218, 1448, 1722, 2048]);
    }

    #[test]
    fn smoothing_step_reaches_one_after_nine() {
        let mut raw = vec![0.0f64; 20];
        raw[5..].iter_mut().for_each(|x| *x = 1.0);
        let s = smooth_success_curve(&raw);
        assert!(s[13] < 1.0);
        assert_eq!(s[14], 1.0);
        assert_eq!(smooth_success_curve(&[3.0f32; 15]), vec![3.0f32; 15]);
    }

    #[test]
    fn demo_text_round_trip() {
        let set = generate_dataset(LevelId::GoToObj, 5, Source::Bot, 0).unwrap();
        let text = set.to_text();
        assert!(text.starts_with("babyworld-demos v1\ncodes "));
        assert_eq!(DemoSet::from_text(&text).unwrap(), set);
        assert!(DemoSet::from_text(&text.replace("GoToObj", "GoToNothing")).is_err());
    }

    #[test]
    fn always_done_aborts() {
        struct Quitter;
        impl AgentPort for Quitter {
            fn reset(&mut self, _: &Mission) {}
            fn act(&mut self, _: &Observation) -> Action {
                Action::Done
            }
        }
        let err = generate_dataset(LevelId::GoToObj, 3, Source::Agent(&mut Quitter), 0).unwrap_err();
        assert_eq!(err, HarnessError::LowSuccess { successes: 0, attempts: 20 });
        assert_eq!(evaluate(&mut Quitter, LevelId::GoToObj, 20, 0), 0.0);
    }

    #[test]
    fn results_csv_round_trip() {
        let rows = vec![
            ResultRow { k: 1024.0, s: 97.5, level: "GoToObj".into(), run_id: "a".into() },
            ResultRow { k: 2048.0, s: 99.5, level: "GoToObj".into(), run_id: "b".into() },
        ];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("k,s,level,run_id\n"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }
}

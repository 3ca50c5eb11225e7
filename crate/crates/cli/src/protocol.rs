//! Newline-delimited JSON agent protocol.
//!
//! Each step the host writes one [`ObsMessage`] line to the agent's stdin
//! and reads back one line holding an integer action code.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError, channel};
use std::thread;
use std::time::Duration;

use anyhow::{Context, anyhow, bail};
use babyworld::bot::Bot;
use babyworld::grid::{Action, Observation};
use babyworld::harness::AgentPort;
use babyworld::levels::{LevelId, Mission, make_mission};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsMessage {
    pub level: String,
    pub seed: u64,
    pub step: u32,
    pub new_episode: bool,
    /// 147 values in `[x][y][channel]` order.
    pub grid_code: Vec<u8>,
    pub mission: String,
}

/// An external agent process.
pub struct SubprocessAgent {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    level: LevelId,
    seed: u64,
    step: u32,
    /// First protocol failure; once set every action is `done`.
    pub error: Option<anyhow::Error>,
}

impl SubprocessAgent {
    pub fn spawn(cmd: &str, timeout: Duration) -> anyhow::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .with_context(|| format!("spawning agent '{cmd}'"))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines, timeout, level: LevelId::GoToObj, seed: 0, step: 0, error: None })
    }

    fn exchange(&mut self, obs: &Observation) -> anyhow::Result<Action> {
        let msg = ObsMessage {
            level: self.level.to_string(),
            seed: self.seed,
            step: self.step,
            new_episode: self.step == 0,
            grid_code: obs.flat(),
            mission: obs.mission_text.clone(),
        };
        serde_json::to_writer(&mut self.stdin, &msg)?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush().context("agent closed its input")?;
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line.context("reading agent output")?,
            Err(RecvTimeoutError::Timeout) => bail!("agent timed out after {:?}", self.timeout),
            Err(RecvTimeoutError::Disconnected) => bail!("agent exited"),
        };
        let code: u8 = line.trim().parse().map_err(|_| anyhow!("agent sent '{}', expected an action code", line.trim()))?;
        Action::from_code(code).ok_or_else(|| anyhow!("agent sent invalid action code {code}"))
    }
}

impl AgentPort for SubprocessAgent {
    fn reset(&mut self, mission: &Mission) {
        self.level = mission.level;
        self.seed = mission.seed;
        self.step = 0;
    }

    fn act(&mut self, obs: &Observation) -> Action {
        if self.error.is_some() {
            return Action::Done;
        }
        let action = self.exchange(obs).unwrap_or_else(|e| {
            self.error = Some(e);
            Action::Done
        });
        self.step += 1;
        action
    }
}

impl Drop for SubprocessAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Serves the bot over the protocol until end of input.
pub fn serve_bot<R: BufRead, W: Write>(input: R, mut out: W) -> anyhow::Result<()> {
    let mut bot: Option<Bot> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: ObsMessage = serde_json::from_str(&line).context("malformed observation message")?;
        if msg.new_episode || bot.is_none() {
            let level: LevelId = msg.level.parse()?;
            let mission = make_mission(level, msg.seed)?;
            bot = Some(Bot::for_world(&mission.instruction, &mission.world));
        }
        let obs = Observation::from_flat(&msg.grid_code, msg.mission).ok_or_else(|| anyhow!("grid_code must have 147 values"))?;
        let action = bot.as_mut().expect("bot initialised").next_action(&obs).unwrap_or(Action::Done);
        writeln!(out, "{}", action.code())?;
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use babyworld::env::Episode;

    #[test]
    fn bot_server_reproduces_witness() {
        let m = make_mission(LevelId::GoToLocal, 5).unwrap();
        let mut ep = Episode::new(m.clone());
        let mut input = String::new();
        for (step, &a) in m.witness.iter().enumerate() {
            let obs = ep.observation();
            let msg = ObsMessage {
                level: "GoToLocal".into(),
                seed: 5,
                step: step as u32,
                new_episode: step == 0,
                grid_code: obs.flat(),
                mission: obs.mission_text,
            };
            input.push_str(&serde_json::to_string(&msg).unwrap());
            input.push('\n');
            ep.step(a).unwrap();
        }
        let mut out = Vec::new();
        serve_bot(input.as_bytes(), &mut out).unwrap();
        let codes: Vec<u8> = String::from_utf8(out).unwrap().lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(codes, m.witness.iter().map(|a| a.code()).collect::<Vec<_>>());
    }

    #[test]
    fn malformed_message_is_an_error() {
        assert!(serve_bot("{not json}\n".as_bytes(), Vec::new()).is_err());
    }
}

//! Episodic stepping over a mission: observation, reward, termination.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Action, Observation, World, compute_reward};
use crate::levels::{GenerationError, LevelId, Mission, make_mission};
use crate::verifier::{Status, Verifier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpisodeError {
    #[error("episode already finished")]
    Finished,
    #[error("invalid action code {0}")]
    InvalidAction(u8),
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// The instruction was fulfilled.
    pub terminated: bool,
    /// The step budget ran out first.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Episode {
    mission: Mission,
    world: World,
    verifier: Verifier,
    text: String,
    success: bool,
    finished: bool,
}

impl Episode {
    pub fn new(mission: Mission) -> Self {
        let verifier = Verifier::new(&mission.instruction, &mission.world).expect("accepted missions resolve");
        Self {
            world: mission.world.clone(),
            text: mission.text(),
            mission,
            verifier,
            success: false,
            finished: false,
        }
    }

    pub fn reset(level: LevelId, seed: u64) -> Result<Self, GenerationError> {
        make_mission(level, seed).map(Self::new)
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn observation(&self) -> Observation {
        self.world.observe(&self.text)
    }

    pub fn steps(&self) -> u32 {
        self.world.agent.step_count
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn succeeded(&self) -> bool {
        self.success
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EpisodeError> {
        if self.finished {
            return Err(EpisodeError::Finished);
        }
        self.world.apply_action(action);
        let status = self.verifier.check_step(&self.world, action).expect("checked only while running");
        let n = self.world.agent.step_count;
        let max = self.mission.max_steps;
        self.success = status == Status::Success;
        let truncated = !self.success && n >= max;
        self.finished = self.success || truncated;
        Ok(StepOutcome {
            observation: self.observation(),
            reward: compute_reward(n, max, self.success).expect("step count within budget"),
            terminated: self.success,
            truncated,
        })
    }

    pub fn step_code(&mut self, code: u8) -> Result<StepOutcome, EpisodeError> {
        self.step(Action::from_code(code).ok_or(EpisodeError::InvalidAction(code))?)
    }
}

/// Outcome of replaying an action sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replay {
    pub success: bool,
    pub reward: f64,
    pub steps: u32,
}

/// Replays `actions` from the mission start, stopping at termination.
pub fn replay(mission: &Mission, actions: &[Action]) -> Replay {
    let mut ep = Episode::new(mission.clone());
    let mut reward = 0.0;
    for &a in actions {
        match ep.step(a) {
            Ok(out) => reward = out.reward,
            Err(_) => break,
        }
    }
    Replay { success: ep.succeeded(), reward, steps: ep.steps() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub steps: u64,
    pub episodes: u64,
    pub seconds: f64,
}

impl Throughput {
    pub fn steps_per_second(&self) -> f64 {
        self.steps as f64 / self.seconds
    }
}

/// Uniformly random actions on one thread for `steps` steps, resetting to
/// the next seed whenever an episode ends. Resets are included in the time.
pub fn random_throughput(level: LevelId, steps: u64, seed: u64) -> Result<Throughput, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut next_seed = seed;
    let mut ep = Episode::reset(level, next_seed)?;
    let mut episodes = 1;
    for _ in 0..steps {
        if ep.is_finished() {
            next_seed += 1;
            ep = Episode::reset(level, next_seed)?;
            episodes += 1;
        }
        let a = Action::ALL[rng.random_range(0..Action::ALL.len())];
        ep.step(a).expect("episode running");
    }
    Ok(Throughput { steps, episodes, seconds: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_replays_with_formula_reward() {
        let m = make_mission(LevelId::GoToObj, 3).unwrap();
        let r = replay(&m, &m.witness);
        assert!(r.success);
        assert_eq!(r.steps as usize, m.witness.len());
        assert_eq!(r.reward, 1.0 - 0.9 * r.steps as f64 / m.max_steps as f64);
    }

    #[test]
    fn truncates_and_refuses_further_steps() {
        let m = make_mission(LevelId::GoToObj, 4).unwrap();
        let mut ep = Episode::new(m.clone());
        let mut last = None;
        for _ in 0..m.max_steps {
            last = Some(ep.step(Action::Done).unwrap());
        }
        let last = last.unwrap();
        assert!(last.truncated && !last.terminated);
        assert_eq!(last.reward, 0.0);
        assert_eq!(ep.step(Action::Done), Err(EpisodeError::Finished));
        assert_eq!(Episode::new(m).step_code(9), Err(EpisodeError::InvalidAction(9)));
    }

    #[test]
    fn throughput_counts_steps() {
        let t = random_throughput(LevelId::GoToObj, 500, 0).unwrap();
        assert_eq!(t.steps, 500);
        assert!(t.episodes >= 1 && t.seconds > 0.0);
    }
}

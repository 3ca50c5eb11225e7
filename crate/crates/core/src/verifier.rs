//! Online instruction judge.
//!
//! Objects get a stable identity at episode start (the index of their
//! starting cell). Identities follow pickups and drops, so descriptors are
//! resolved once against the starting grid and pose and stay fixed.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grid::{Action, AgentState, Pos, World, WorldGrid, WorldObject};
use crate::lang::{Body, Clause, Descriptor, Instruction, Loc};

/// Identity of an object present at episode start.
pub type ObjId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifierError {
    #[error("descriptor '{0}' matches no object at mission start")]
    NoMatch(String),
    #[error("check_step called after the instruction was already fulfilled")]
    AlreadySucceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    InProgress,
    Success,
}

/// Whether `pos` lies strictly in the half-plane `loc` of `pose`.
pub fn in_half_plane(loc: Loc, pose: &AgentState, pos: Pos) -> bool {
    let (vx, vy) = (pos.x - pose.pos.x, pos.y - pose.pos.y);
    let (fx, fy) = pose.dir.vec();
    let (rx, ry) = pose.dir.right().vec();
    let ahead = vx * fx + vy * fy;
    let right = vx * rx + vy * ry;
    match loc {
        Loc::Front => ahead > 0,
        Loc::Behind => ahead < 0,
        Loc::Right => right > 0,
        Loc::Left => right < 0,
    }
}

/// Whether an object of `obj` at `origin` matches `d` for an episode that
/// started at `start`.
pub fn descriptor_matches(d: &Descriptor, obj: WorldObject, origin: Pos, start: &AgentState) -> bool {
    d.matches(obj.kind, obj.color) && d.loc.is_none_or(|l| in_half_plane(l, start, origin))
}

/// Identities of the objects `d` refers to, in row-major order.
pub fn resolve_descriptor(d: &Descriptor, grid: &WorldGrid, start: &AgentState) -> Vec<ObjId> {
    grid.objects()
        .filter(|&(p, o)| descriptor_matches(d, o, p, start))
        .map(|(p, _)| grid.index(p) as ObjId)
        .collect()
}

/// Follows object identities through pickups and drops.
#[derive(Debug, Clone)]
pub struct ObjectTracker {
    width: i32,
    at_cell: Vec<Option<ObjId>>,
    position: Vec<Option<Pos>>,
    carried: Option<ObjId>,
    ever_carried: BTreeSet<ObjId>,
}

impl ObjectTracker {
    pub fn new(world: &World) -> Self {
        let grid = &world.grid;
        let n = grid.cells().len();
        let mut at_cell = vec![None; n];
        let mut position = vec![None; n];
        for (p, _) in grid.objects() {
            let id = grid.index(p);
            at_cell[id] = Some(id as ObjId);
            position[id] = Some(p);
        }
        assert!(world.agent.carrying.is_none(), "episodes start empty-handed");
        Self { width: grid.width(), at_cell, position, carried: None, ever_carried: BTreeSet::new() }
    }

    fn idx(&self, p: Pos) -> usize {
        (p.y * self.width + p.x) as usize
    }

    /// Reconciles identities with the post-action world.
    pub fn update(&mut self, world: &World) {
        let fwd = world.front_pos();
        match (self.carried, world.agent.carrying) {
            (None, Some(_)) => {
                let i = self.idx(fwd);
                let id = self.at_cell[i].take().expect("picked-up object has an identity");
                self.position[id as usize] = None;
                self.carried = Some(id);
                self.ever_carried.insert(id);
            }
            (Some(id), None) => {
                let i = self.idx(fwd);
                self.at_cell[i] = Some(id);
                self.position[id as usize] = Some(fwd);
                self.carried = None;
            }
            _ => {}
        }
    }

    pub fn id_at(&self, p: Pos) -> Option<ObjId> {
        if p.x < 0 || p.y < 0 || p.x >= self.width {
            return None;
        }
        self.at_cell.get(self.idx(p)).copied().flatten()
    }

    pub fn position(&self, id: ObjId) -> Option<Pos> {
        self.position.get(id as usize).copied().flatten()
    }

    pub fn carried(&self) -> Option<ObjId> {
        self.carried
    }

    pub fn was_carried(&self, id: ObjId) -> bool {
        self.ever_carried.contains(&id)
    }
}

#[derive(Debug, Clone)]
struct ClauseCheck {
    clause: Clause,
    targets: Vec<ObjId>,
    anchors: Vec<ObjId>,
    done_at: Option<u32>,
}

/// Per-episode verifier state.
#[derive(Debug, Clone)]
pub struct Verifier {
    bodies: Vec<Vec<ClauseCheck>>,
    gate: usize,
    tracker: ObjectTracker,
    start: AgentState,
    succeeded: bool,
}

impl Verifier {
    /// Resolves every descriptor against the starting world.
    pub fn new(instruction: &Instruction, world: &World) -> Result<Self, VerifierError> {
        let resolve = |d: &Descriptor| {
            let ids = resolve_descriptor(d, &world.grid, &world.agent);
            if ids.is_empty() {
                Err(VerifierError::NoMatch(d.to_string()))
            } else {
                Ok(ids)
            }
        };
        let check = |c: &Clause| -> Result<ClauseCheck, VerifierError> {
            Ok(ClauseCheck {
                clause: *c,
                targets: resolve(c.target())?,
                anchors: c.anchor().map(resolve).transpose()?.unwrap_or_default(),
                done_at: None,
            })
        };
        let bodies = instruction
            .ordered_bodies()
            .iter()
            .map(|b: &Body| b.clauses().into_iter().map(check).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { bodies, gate: 0, tracker: ObjectTracker::new(world), start: world.agent, succeeded: false })
    }

    pub fn tracker(&self) -> &ObjectTracker {
        &self.tracker
    }

    pub fn start_pose(&self) -> &AgentState {
        &self.start
    }

    /// Target identities of each clause, in completion order.
    pub fn target_sets(&self) -> Vec<(Clause, Vec<ObjId>, Vec<ObjId>)> {
        self.bodies
            .iter()
            .flatten()
            .map(|c| (c.clause, c.targets.clone(), c.anchors.clone()))
            .collect()
    }

    /// Step at which each clause was completed, in completion order of bodies.
    pub fn done_steps(&self) -> Vec<Vec<Option<u32>>> {
        self.bodies.iter().map(|b| b.iter().map(|c| c.done_at).collect()).collect()
    }

    fn holds(&self, check: &ClauseCheck, world: &World, last_action: Option<Action>) -> bool {
        let fwd = world.front_pos();
        match check.clause {
            Clause::GoTo(_) => self.tracker.id_at(fwd).is_some_and(|id| check.targets.contains(&id)),
            Clause::Open(_) => {
                last_action == Some(Action::Toggle)
                    && world.grid.get(fwd).is_some_and(|o| o.is_open_door())
                    && self.tracker.id_at(fwd).is_some_and(|id| check.targets.contains(&id))
            }
            Clause::Pickup(_) => self.tracker.carried().is_some_and(|id| check.targets.contains(&id)),
            Clause::PutNext(..) => check.targets.iter().any(|&t| {
                let Some(tp) = self.tracker.position(t).filter(|_| self.tracker.was_carried(t)) else {
                    return false;
                };
                check
                    .anchors
                    .iter()
                    .filter(|&&a| a != t)
                    .filter_map(|&a| self.tracker.position(a))
                    .any(|ap| ap.is_adjacent(tp))
            }),
        }
    }

    /// Whether any clause holds in the starting world, ignoring sequencing.
    pub fn any_clause_holds_at_start(&self, world: &World) -> bool {
        self.bodies.iter().flatten().any(|c| {
            self.holds(c, world, None)
                || match c.clause {
                    // matching objects already next to each other
                    Clause::PutNext(..) => c.targets.iter().any(|&t| {
                        let tp = self.tracker.position(t);
                        c.anchors.iter().any(|&a| {
                            a != t && tp.zip(self.tracker.position(a)).is_some_and(|(x, y)| x.is_adjacent(y))
                        })
                    }),
                    _ => false,
                }
        })
    }

    /// Updates clause statuses after one action has been applied.
    pub fn check_step(&mut self, world: &World, last_action: Action) -> Result<Status, VerifierError> {
        if self.succeeded {
            return Err(VerifierError::AlreadySucceeded);
        }
        self.tracker.update(world);
        let step = world.agent.step_count;
        while self.gate < self.bodies.len() {
            let pending: Vec<usize> = (0..self.bodies[self.gate].len())
                .filter(|&i| self.bodies[self.gate][i].done_at.is_none())
                .filter(|&i| self.holds(&self.bodies[self.gate][i], world, Some(last_action)))
                .collect();
            for i in pending {
                self.bodies[self.gate][i].done_at = Some(step);
            }
            if self.bodies[self.gate].iter().all(|c| c.done_at.is_some()) {
                self.gate += 1;
            } else {
                break;
            }
        }
        if self.gate == self.bodies.len() {
            self.succeeded = true;
            Ok(Status::Success)
        } else {
            Ok(Status::InProgress)
        }
    }

    pub fn succeeded(&self) -> bool {
        self.succeeded
    }
}

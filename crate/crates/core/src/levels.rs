//! The nineteen mission generators.
//!
//! Every generator draws from one seeded stream. A candidate is accepted
//! only if its descriptors resolve, no clause holds at the start, and the
//! bot solves it within the step budget; the bot's run is kept as witness.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bot::solve;
use crate::grid::{Action, AgentState, Color, Direction, DoorState, ObjKind, Pos, World, WorldGrid, WorldObject};
use crate::lang::{
    Article, Clause, Descriptor, DescriptorSource, GrammarShape, Instruction, Loc, ShapeError, Verb,
    sample_instruction_with,
};
use crate::verifier::{Verifier, resolve_descriptor};

pub const ROOM_SIZE: i32 = 8;
pub const MAZE_SIDE: i32 = 3;
pub const ROOM_DISTRACTORS: usize = 7;
pub const MAZE_DISTRACTORS: usize = 18;
const MAX_ATTEMPTS: u32 = 1000;
const PLACE_TRIES: u32 = 1000;
const CONNECT_TRIES: u32 = 5000;
const DESCRIPTOR_TRIES: u32 = 100;
pub const REGISTRY_PREFIX: &str = "BabyWorld-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Competency {
    Room,
    DistrBox,
    Distr,
    Maze,
    Unblock,
    Unlock,
    ImpUnlock,
    GoTo,
    Open,
    Pickup,
    Put,
    Loc,
    Seq,
}

impl Competency {
    pub const ALL: [Competency; 13] = [
        Competency::Room,
        Competency::DistrBox,
        Competency::Distr,
        Competency::Maze,
        Competency::Unblock,
        Competency::Unlock,
        Competency::ImpUnlock,
        Competency::GoTo,
        Competency::Open,
        Competency::Pickup,
        Competency::Put,
        Competency::Loc,
        Competency::Seq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Competency::Room => "ROOM",
            Competency::DistrBox => "DISTR-BOX",
            Competency::Distr => "DISTR",
            Competency::Maze => "MAZE",
            Competency::Unblock => "UNBLOCK",
            Competency::Unlock => "UNLOCK",
            Competency::ImpUnlock => "IMP-UNLOCK",
            Competency::GoTo => "GOTO",
            Competency::Open => "OPEN",
            Competency::Pickup => "PICKUP",
            Competency::Put => "PUT",
            Competency::Loc => "LOC",
            Competency::Seq => "SEQ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LevelId {
    GoToObj,
    GoToRedBallGrey,
    GoToRedBall,
    GoToLocal,
    PutNextLocal,
    PickupLoc,
    GoToObjMaze,
    GoTo,
    Pickup,
    UnblockPickup,
    Open,
    Unlock,
    PutNext,
    Synth,
    SynthLoc,
    GoToSeq,
    SynthSeq,
    GoToImpUnlock,
    BossLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Room,
    Maze,
}

impl Layout {
    pub fn rooms(self) -> i32 {
        match self {
            Layout::Room => 1,
            Layout::Maze => MAZE_SIDE * MAZE_SIDE,
        }
    }

    pub fn side(self) -> i32 {
        match self {
            Layout::Room => 1,
            Layout::Maze => MAZE_SIDE,
        }
    }

    pub fn grid_size(self) -> i32 {
        (ROOM_SIZE - 1) * self.side() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown level '{0}'")]
pub struct UnknownLevel(pub String);

impl LevelId {
    pub const ALL: [LevelId; 19] = [
        LevelId::GoToObj,
        LevelId::GoToRedBallGrey,
        LevelId::GoToRedBall,
        LevelId::GoToLocal,
        LevelId::PutNextLocal,
        LevelId::PickupLoc,
        LevelId::GoToObjMaze,
        LevelId::GoTo,
        LevelId::Pickup,
        LevelId::UnblockPickup,
        LevelId::Open,
        LevelId::Unlock,
        LevelId::PutNext,
        LevelId::Synth,
        LevelId::SynthLoc,
        LevelId::GoToSeq,
        LevelId::SynthSeq,
        LevelId::GoToImpUnlock,
        LevelId::BossLevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LevelId::GoToObj => "GoToObj",
            LevelId::GoToRedBallGrey => "GoToRedBallGrey",
            LevelId::GoToRedBall => "GoToRedBall",
            LevelId::GoToLocal => "GoToLocal",
            LevelId::PutNextLocal => "PutNextLocal",
            LevelId::PickupLoc => "PickupLoc",
            LevelId::GoToObjMaze => "GoToObjMaze",
            LevelId::GoTo => "GoTo",
            LevelId::Pickup => "Pickup",
            LevelId::UnblockPickup => "UnblockPickup",
            LevelId::Open => "Open",
            LevelId::Unlock => "Unlock",
            LevelId::PutNext => "PutNext",
            LevelId::Synth => "Synth",
            LevelId::SynthLoc => "SynthLoc",
            LevelId::GoToSeq => "GoToSeq",
            LevelId::SynthSeq => "SynthSeq",
            LevelId::GoToImpUnlock => "GoToImpUnlock",
            LevelId::BossLevel => "BossLevel",
        }
    }

    /// Environment registry name, e.g. `BabyWorld-GoToLocal`.
    pub fn registry_name(self) -> String {
        format!("{REGISTRY_PREFIX}{}", self.name())
    }

    pub fn from_registry_name(name: &str) -> Result<LevelId, UnknownLevel> {
        name.strip_prefix(REGISTRY_PREFIX)
            .ok_or_else(|| UnknownLevel(name.to_string()))?
            .parse()
    }

    pub fn competencies(self) -> &'static [Competency] {
        use Competency::*;
        match self {
            LevelId::GoToObj => &[Room],
            LevelId::GoToRedBallGrey => &[Room, DistrBox],
            LevelId::GoToRedBall => &[Room, DistrBox, Distr],
            LevelId::GoToLocal => &[Room, DistrBox, Distr, GoTo],
            LevelId::PutNextLocal => &[Room, DistrBox, Distr, Put],
            LevelId::PickupLoc => &[Room, DistrBox, Distr, Pickup, Loc],
            LevelId::GoToObjMaze => &[Room, Maze],
            LevelId::GoTo => &[Room, DistrBox, Distr, Maze, GoTo],
            LevelId::Pickup => &[Room, DistrBox, Distr, Maze, Pickup],
            LevelId::UnblockPickup => &[Room, DistrBox, Distr, Maze, Unblock, Pickup],
            LevelId::Open => &[Room, DistrBox, Distr, Maze, Open],
            LevelId::Unlock => &[Room, DistrBox, Distr, Maze, Unlock, Open],
            LevelId::PutNext => &[Room, DistrBox, Distr, Maze, Put],
            LevelId::Synth => &[Room, DistrBox, Distr, Maze, Unblock, Unlock, GoTo, Open, Pickup, Put],
            LevelId::SynthLoc => &[Room, DistrBox, Distr, Maze, Unblock, Unlock, GoTo, Open, Pickup, Put, Loc],
            LevelId::GoToSeq => &[Room, DistrBox, Distr, Maze, GoTo, Seq],
            LevelId::SynthSeq => &[Room, DistrBox, Distr, Maze, Unblock, Unlock, GoTo, Open, Pickup, Put, Loc, Seq],
            LevelId::GoToImpUnlock => &[Room, DistrBox, Distr, Maze, ImpUnlock, GoTo],
            LevelId::BossLevel => &Competency::ALL,
        }
    }

    pub fn has(self, c: Competency) -> bool {
        self.competencies().contains(&c)
    }

    pub fn layout(self) -> Layout {
        if self.has(Competency::Maze) { Layout::Maze } else { Layout::Room }
    }

    /// Instruction forms this level may produce.
    pub fn grammar_shape(self) -> GrammarShape {
        let synth = vec![Verb::GoTo, Verb::Pickup, Verb::Open, Verb::PutNext];
        match self {
            LevelId::GoToObj
            | LevelId::GoToRedBallGrey
            | LevelId::GoToRedBall
            | LevelId::GoToLocal
            | LevelId::GoToObjMaze
            | LevelId::GoTo
            | LevelId::GoToImpUnlock => GrammarShape::single(Verb::GoTo),
            LevelId::PutNextLocal | LevelId::PutNext => GrammarShape::single(Verb::PutNext),
            LevelId::PickupLoc => GrammarShape { locations: true, ..GrammarShape::single(Verb::Pickup) },
            LevelId::Pickup | LevelId::UnblockPickup => GrammarShape::single(Verb::Pickup),
            LevelId::Open | LevelId::Unlock => GrammarShape::single(Verb::Open),
            LevelId::Synth => GrammarShape { verbs: synth, sequences: false, conjunctions: false, locations: false },
            LevelId::SynthLoc => GrammarShape { verbs: synth, sequences: false, conjunctions: false, locations: true },
            LevelId::GoToSeq => GrammarShape { verbs: vec![Verb::GoTo], sequences: true, conjunctions: true, locations: false },
            LevelId::SynthSeq | LevelId::BossLevel => GrammarShape::full(),
        }
    }
}

impl fmt::Display for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LevelId {
    type Err = UnknownLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LevelId::ALL.into_iter().find(|l| l.name() == s).ok_or_else(|| UnknownLevel(s.to_string()))
    }
}

/// Step budget: 64 steps per room per clause.
pub fn max_steps_for(layout: Layout, instruction: &Instruction) -> u32 {
    (ROOM_SIZE * ROOM_SIZE * layout.rooms()) as u32 * instruction.clause_count() as u32
}

/// An instruction in an initial world, with its step budget and the
/// bot demonstration that proved it solvable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mission {
    pub level: LevelId,
    pub seed: u64,
    pub world: World,
    pub instruction: Instruction,
    pub max_steps: u32,
    pub witness: Vec<Action>,
}

impl Mission {
    pub fn text(&self) -> String {
        self.instruction.text()
    }

    pub fn agent_start(&self) -> &AgentState {
        &self.world.agent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("{level}: no acceptable mission for seed {seed} after {attempts} attempts")]
    Exhausted { level: LevelId, seed: u64, attempts: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("sampling rejected: {0}")]
    Sampling(&'static str),
    #[error("bot could not solve the candidate: {0}")]
    Unsolved(String),
}

impl From<ShapeError> for Rejection {
    fn from(_: ShapeError) -> Self {
        Rejection::Sampling("empty grammar shape")
    }
}

/// Candidate world and instruction before validation.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub world: World,
    pub instruction: Instruction,
}

/// Accepts or rejects a candidate, returning the bot's witness run.
pub fn validate_solvable(candidate: &Candidate, layout: Layout) -> Result<Vec<Action>, Rejection> {
    let Candidate { world, instruction } = candidate;
    instruction.validate().map_err(|_| Rejection::Sampling("restriction violated"))?;
    let verifier = Verifier::new(instruction, world).map_err(|_| Rejection::Sampling("descriptor matches nothing"))?;
    if verifier.any_clause_holds_at_start(world) {
        return Err(Rejection::Sampling("clause satisfied at start"));
    }
    for (clause, targets, anchors) in verifier.target_sets() {
        if matches!(clause, Clause::PutNext(..)) && targets.iter().any(|t| anchors.contains(t)) {
            return Err(Rejection::Sampling("put target may be its own anchor"));
        }
    }
    let max_steps = max_steps_for(layout, instruction);
    solve(world, instruction, max_steps).map_err(|e| Rejection::Unsolved(e.to_string()))
}

/// Generates the mission for `(level, seed)`.
pub fn make_mission(level: LevelId, seed: u64) -> Result<Mission, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = level.layout();
    for _ in 0..MAX_ATTEMPTS {
        let Ok(candidate) = generate_candidate(level, &mut rng) else { continue };
        if let Ok(witness) = validate_solvable(&candidate, layout) {
            let max_steps = max_steps_for(layout, &candidate.instruction);
            return Ok(Mission {
                level,
                seed,
                world: candidate.world,
                instruction: candidate.instruction,
                max_steps,
                witness,
            });
        }
    }
    Err(GenerationError::Exhausted { level, seed, attempts: MAX_ATTEMPTS })
}

#[derive(Debug, Clone)]
struct Room {
    top: Pos,
    /// Indexed east, south, west, north.
    door_pos: [Option<Pos>; 4],
    doors: [bool; 4],
    neighbors: [Option<usize>; 4],
    locked: bool,
}

/// Builder for grids of square rooms.
struct RoomGrid<'r> {
    rng: &'r mut ChaCha8Rng,
    side: i32,
    grid: WorldGrid,
    rooms: Vec<Room>,
    agent: Option<AgentState>,
    objects: Vec<(Pos, WorldObject)>,
    locked_room: Option<usize>,
}

type Gen<T> = Result<T, Rejection>;

impl<'r> RoomGrid<'r> {
    fn new(rng: &'r mut ChaCha8Rng, layout: Layout) -> Self {
        let side = layout.side();
        let size = layout.grid_size();
        let mut grid = WorldGrid::new(size, size);
        let mut rooms = Vec::new();
        for j in 0..side {
            for i in 0..side {
                let top = Pos::new(i * (ROOM_SIZE - 1), j * (ROOM_SIZE - 1));
                grid.wall_rect(top.x, top.y, ROOM_SIZE, ROOM_SIZE);
                rooms.push(Room { top, door_pos: [None; 4], doors: [false; 4], neighbors: [None; 4], locked: false });
            }
        }
        for j in 0..side {
            for i in 0..side {
                let idx = (j * side + i) as usize;
                let top = rooms[idx].top;
                let (lo_x, lo_y) = (top.x + 1, top.y + 1);
                let (hi_x, hi_y) = (top.x + ROOM_SIZE - 1, top.y + ROOM_SIZE - 1);
                if i < side - 1 {
                    rooms[idx].neighbors[0] = Some(idx + 1);
                    rooms[idx].door_pos[0] = Some(Pos::new(hi_x, rng.random_range(lo_y..hi_y)));
                }
                if j < side - 1 {
                    rooms[idx].neighbors[1] = Some(idx + side as usize);
                    rooms[idx].door_pos[1] = Some(Pos::new(rng.random_range(lo_x..hi_x), hi_y));
                }
                if i > 0 {
                    rooms[idx].neighbors[2] = Some(idx - 1);
                    rooms[idx].door_pos[2] = rooms[idx - 1].door_pos[0];
                }
                if j > 0 {
                    rooms[idx].neighbors[3] = Some(idx - side as usize);
                    rooms[idx].door_pos[3] = rooms[idx - side as usize].door_pos[1];
                }
            }
        }
        Self { rng, side, grid, rooms, agent: None, objects: Vec::new(), locked_room: None }
    }

    fn room_count(&self) -> usize {
        self.rooms.len()
    }

    fn rand_room(&mut self) -> usize {
        let i = self.rng.random_range(0..self.side);
        let j = self.rng.random_range(0..self.side);
        (j * self.side + i) as usize
    }

    fn room_of(&self, p: Pos) -> usize {
        let i = (p.x / (ROOM_SIZE - 1)).min(self.side - 1);
        let j = (p.y / (ROOM_SIZE - 1)).min(self.side - 1);
        (j * self.side + i) as usize
    }

    fn inside(&self, room: usize, p: Pos) -> bool {
        let t = self.rooms[room].top;
        p.x > t.x && p.y > t.y && p.x < t.x + ROOM_SIZE - 1 && p.y < t.y + ROOM_SIZE - 1
    }

    fn rand_color(&mut self) -> Color {
        Color::ALL[self.rng.random_range(0..Color::ALL.len())]
    }

    fn rand_cell(&mut self, room: usize) -> Gen<Pos> {
        let top = self.rooms[room].top;
        for _ in 0..PLACE_TRIES {
            let p = Pos::new(top.x + self.rng.random_range(0..ROOM_SIZE), top.y + self.rng.random_range(0..ROOM_SIZE));
            if self.grid.get(p).is_none() && self.agent.is_none_or(|a| a.pos != p) {
                return Ok(p);
            }
        }
        Err(Rejection::Sampling("no free cell"))
    }

    fn add_object(&mut self, room: usize, obj: WorldObject) -> Gen<Pos> {
        let p = self.rand_cell(room)?;
        self.grid.set(p, Some(obj));
        self.objects.push((p, obj));
        Ok(p)
    }

    fn add_door(&mut self, room: usize, side: Option<usize>, color: Option<Color>, locked: bool) -> Gen<(Color, Pos)> {
        let k = match side {
            Some(k) => k,
            None => loop {
                let k = self.rng.random_range(0..4);
                if self.rooms[room].neighbors[k].is_some() && !self.rooms[room].doors[k] {
                    break k;
                }
            },
        };
        let nb = self.rooms[room].neighbors[k].ok_or(Rejection::Sampling("door on outer wall"))?;
        if self.rooms[room].doors[k] {
            return Err(Rejection::Sampling("door already present"));
        }
        let color = match color {
            Some(c) => c,
            None => self.rand_color(),
        };
        if locked {
            self.rooms[room].locked = true;
        }
        let pos = self.rooms[room].door_pos[k].expect("inner walls have door positions");
        let state = if locked { DoorState::Locked } else { DoorState::Closed };
        self.grid.set(pos, Some(WorldObject::door(color, state)));
        self.rooms[room].doors[k] = true;
        self.rooms[nb].doors[(k + 2) % 4] = true;
        Ok((color, pos))
    }

    fn start_room(&self) -> usize {
        match self.agent {
            Some(a) => self.room_of(a.pos),
            None => (self.side / 2 * self.side + self.side / 2) as usize,
        }
    }

    fn reachable_rooms(&self) -> usize {
        let mut seen = vec![false; self.room_count()];
        let mut stack = vec![self.start_room()];
        while let Some(r) = stack.pop() {
            if std::mem::replace(&mut seen[r], true) {
                continue;
            }
            for k in 0..4 {
                if self.rooms[r].doors[k] {
                    stack.extend(self.rooms[r].neighbors[k]);
                }
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Adds unlocked doors until every room is reachable.
    fn connect_all(&mut self, colors: &[Color]) -> Gen<()> {
        for _ in 0..CONNECT_TRIES {
            if self.reachable_rooms() == self.room_count() {
                return Ok(());
            }
            let room = self.rand_room();
            let k = self.rng.random_range(0..4);
            let r = &self.rooms[room];
            if r.door_pos[k].is_none() || r.doors[k] {
                continue;
            }
            let nb = r.neighbors[k].expect("door position implies neighbor");
            if r.locked || self.rooms[nb].locked {
                continue;
            }
            let color = colors[self.rng.random_range(0..colors.len())];
            self.add_door(room, Some(k), Some(color), false)?;
        }
        Err(Rejection::Sampling("could not connect rooms"))
    }

    /// Adds movable objects; into `room` or a random room each time.
    fn add_distractors(&mut self, room: Option<usize>, n: usize, all_unique: bool) -> Gen<Vec<(Pos, WorldObject)>> {
        let mut added = Vec::new();
        while added.len() < n {
            let color = self.rand_color();
            let kind = [ObjKind::Key, ObjKind::Ball, ObjKind::Box][self.rng.random_range(0..3)];
            let obj = WorldObject::item(kind, color);
            if all_unique && self.objects.iter().any(|&(_, o)| o == obj) {
                continue;
            }
            let r = match room {
                Some(r) => r,
                None => self.rand_room(),
            };
            let p = self.add_object(r, obj)?;
            added.push((p, obj));
        }
        Ok(added)
    }

    /// Places the agent in `room` (random if `None`) not facing an object.
    fn place_agent(&mut self, room: Option<usize>) -> Gen<AgentState> {
        let room = match room {
            Some(r) => r,
            None => self.rand_room(),
        };
        for _ in 0..PLACE_TRIES {
            self.agent = None;
            let pos = self.rand_cell(room)?;
            let dir = Direction::ALL[self.rng.random_range(0..4)];
            let agent = AgentState::new(pos, dir);
            self.agent = Some(agent);
            if self.grid.get(agent.front_pos()).is_none_or(|o| o.kind == ObjKind::Wall) {
                return Ok(agent);
            }
        }
        Err(Rejection::Sampling("could not place agent"))
    }

    /// Places the agent in a random room other than the locked one.
    fn place_agent_outside_locked(&mut self) -> Gen<AgentState> {
        loop {
            let a = self.place_agent(None)?;
            if self.locked_room != Some(self.room_of(a.pos)) {
                return Ok(a);
            }
        }
    }

    /// Whether every object is reachable from the agent without moving
    /// anything; doors count as passable.
    fn objs_reachable(&self) -> bool {
        let start = self.agent.expect("agent placed").pos;
        let mut reach = vec![false; self.grid.cells().len()];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            if !self.grid.in_bounds(p) {
                continue;
            }
            let i = self.grid.index(p);
            if std::mem::replace(&mut reach[i], true) {
                continue;
            }
            if self.grid.get(p).is_some_and(|o| !o.is_door()) {
                continue;
            }
            stack.extend(Direction::ALL.map(|d| p.step(d)));
        }
        self.grid.objects().all(|(p, o)| o.kind == ObjKind::Wall || reach[self.grid.index(p)])
    }

    fn check_objs_reachable(&self) -> Gen<()> {
        if self.objs_reachable() { Ok(()) } else { Err(Rejection::Sampling("unreachable object")) }
    }

    /// Locks one inner door of a random room and puts its key elsewhere.
    fn add_locked_room(&mut self) -> Gen<(usize, Color)> {
        let (room, color) = loop {
            let room = self.rand_room();
            let k = self.rng.random_range(0..4);
            if self.rooms[room].neighbors[k].is_none() {
                continue;
            }
            let (color, _) = self.add_door(room, Some(k), None, true)?;
            break (room, color);
        };
        self.locked_room = Some(room);
        loop {
            let key_room = self.rand_room();
            if key_room != room {
                self.add_object(key_room, WorldObject::item(ObjKind::Key, color))?;
                return Ok((room, color));
            }
        }
    }

    fn descriptor_for(&self, obj: WorldObject) -> Descriptor {
        let agent = self.agent.expect("agent placed");
        let mut d = Descriptor::new(Article::The, Some(obj.color), obj.kind, None);
        d.article = article_for(&d, &self.grid, &agent);
        d
    }

    fn finish(self, instruction: Instruction) -> Candidate {
        Candidate { world: World::new(self.grid, self.agent.expect("agent placed")), instruction }
    }
}

/// "the" when exactly one object matches, "a" otherwise.
fn article_for(d: &Descriptor, grid: &WorldGrid, agent: &AgentState) -> Article {
    if resolve_descriptor(d, grid, agent).len() == 1 { Article::The } else { Article::A }
}

/// Descriptors sampled against the current world: rejected until they
/// match something, optionally something outside the locked room.
struct WorldDescriptors<'g, 'r> {
    rg: &'g RoomGrid<'r>,
    locations: bool,
    implicit_unlock: bool,
}

impl DescriptorSource for WorldDescriptors<'_, '_> {
    type Error = Rejection;

    fn descriptor<R: Rng + ?Sized>(&mut self, rng: &mut R, kinds: &[ObjKind]) -> Gen<Descriptor> {
        let agent = self.rg.agent.expect("agent placed");
        for _ in 0..DESCRIPTOR_TRIES {
            let color = match rng.random_range(0..=Color::ALL.len()) {
                0 => None,
                i => Some(Color::ALL[i - 1]),
            };
            let kind = kinds[rng.random_range(0..kinds.len())];
            let loc = (self.locations && rng.random_bool(0.5)).then(|| Loc::ALL[rng.random_range(0..4)]);
            let mut d = Descriptor::new(Article::A, color, kind, loc);
            let ids = resolve_descriptor(&d, &self.rg.grid, &agent);
            if ids.is_empty() {
                continue;
            }
            if let (false, Some(lr)) = (self.implicit_unlock, self.rg.locked_room) {
                if ids.iter().all(|&id| self.rg.inside(lr, self.rg.grid.pos_of(id as usize))) {
                    continue;
                }
            }
            d.article = if ids.len() == 1 { Article::The } else { Article::A };
            return Ok(d);
        }
        Err(Rejection::Sampling("no matching descriptor"))
    }
}

#[derive(Debug, Clone)]
struct LevelGen {
    shape: GrammarShape,
    distractors: usize,
    locked_room_prob: f64,
    unblocking: bool,
    implicit_unlock: bool,
}

fn level_gen(rng: &mut ChaCha8Rng, layout: Layout, cfg: &LevelGen) -> Gen<Candidate> {
    let mut rg = RoomGrid::new(rng, layout);
    if rg.rng.random_bool(cfg.locked_room_prob) {
        rg.add_locked_room()?;
    }
    rg.connect_all(&Color::ALL)?;
    rg.add_distractors(None, cfg.distractors, false)?;
    rg.place_agent_outside_locked()?;
    if !cfg.unblocking {
        rg.check_objs_reachable()?;
    }
    let mut stream = ChaCha8Rng::seed_from_u64(rg.rng.random());
    let mut src = WorldDescriptors { rg: &rg, locations: cfg.shape.locations, implicit_unlock: cfg.implicit_unlock };
    let instruction = sample_instruction_with(&mut stream, &cfg.shape, &mut src)?;
    Ok(rg.finish(instruction))
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Draws one unvalidated candidate for `level`.
pub fn generate_candidate(level: LevelId, rng: &mut ChaCha8Rng) -> Result<Candidate, Rejection> {
    let layout = level.layout();
    let synth = |shape: GrammarShape, locked_room_prob: f64, unblocking: bool, implicit_unlock: bool| LevelGen {
        shape,
        distractors: MAZE_DISTRACTORS,
        locked_room_prob,
        unblocking,
        implicit_unlock,
    };
    let goto_obj = |rg: &RoomGrid, obj: WorldObject| Instruction::Single(Clause::GoTo(rg.descriptor_for(obj)));
    match level {
        LevelId::GoToObj => {
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(Some(0))?;
            let (_, obj) = rg.add_distractors(Some(0), 1, true)?[0];
            let instr = goto_obj(&rg, obj);
            Ok(rg.finish(instr))
        }
        LevelId::GoToRedBallGrey | LevelId::GoToRedBall => {
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(Some(0))?;
            let ball = WorldObject::item(ObjKind::Ball, Color::Red);
            rg.add_object(0, ball)?;
            if level == LevelId::GoToRedBallGrey {
                for _ in 0..ROOM_DISTRACTORS {
                    rg.add_object(0, WorldObject::item(ObjKind::Box, Color::Grey))?;
                }
            } else {
                rg.add_distractors(Some(0), ROOM_DISTRACTORS, false)?;
            }
            rg.check_objs_reachable()?;
            let d = Descriptor::the(Color::Red, ObjKind::Ball);
            Ok(rg.finish(Instruction::Single(Clause::GoTo(d))))
        }
        LevelId::GoToLocal => {
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(Some(0))?;
            let objs = rg.add_distractors(Some(0), ROOM_DISTRACTORS + 1, false)?;
            rg.check_objs_reachable()?;
            let (_, obj) = *pick(rg.rng, &objs);
            let instr = goto_obj(&rg, obj);
            Ok(rg.finish(instr))
        }
        LevelId::PutNextLocal => {
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(Some(0))?;
            let objs = rg.add_distractors(Some(0), ROOM_DISTRACTORS + 1, true)?;
            rg.check_objs_reachable()?;
            let a = rg.rng.random_range(0..objs.len());
            let b = (a + rg.rng.random_range(1..objs.len())) % objs.len();
            let clause = Clause::PutNext(rg.descriptor_for(objs[a].1), rg.descriptor_for(objs[b].1));
            Ok(rg.finish(Instruction::Single(clause)))
        }
        LevelId::PickupLoc => level_gen(
            rng,
            layout,
            &LevelGen {
                shape: level.grammar_shape(),
                distractors: ROOM_DISTRACTORS + 1,
                locked_room_prob: 0.0,
                unblocking: false,
                implicit_unlock: true,
            },
        ),
        LevelId::GoToObjMaze | LevelId::GoTo | LevelId::Pickup | LevelId::UnblockPickup => {
            let n = if level == LevelId::GoToObjMaze { 1 } else { MAZE_DISTRACTORS };
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(None)?;
            rg.connect_all(&Color::ALL)?;
            let objs = rg.add_distractors(None, n, false)?;
            match (level == LevelId::UnblockPickup, rg.objs_reachable()) {
                (true, true) => return Err(Rejection::Sampling("all objects reachable")),
                (false, false) => return Err(Rejection::Sampling("unreachable object")),
                _ => {}
            }
            let (_, obj) = *pick(rg.rng, &objs);
            let d = rg.descriptor_for(obj);
            let clause = if matches!(level, LevelId::Pickup | LevelId::UnblockPickup) {
                Clause::Pickup(d)
            } else {
                Clause::GoTo(d)
            };
            Ok(rg.finish(Instruction::Single(clause)))
        }
        LevelId::Open => {
            let mut rg = RoomGrid::new(rng, layout);
            rg.place_agent(None)?;
            rg.connect_all(&Color::ALL)?;
            rg.add_distractors(None, MAZE_DISTRACTORS, false)?;
            rg.check_objs_reachable()?;
            let doors: Vec<WorldObject> = rg.grid.objects().filter(|(_, o)| o.is_door()).map(|(_, o)| o).collect();
            let door = *pick(rg.rng, &doors);
            let clause = Clause::Open(rg.descriptor_for(door));
            Ok(rg.finish(Instruction::Single(clause)))
        }
        LevelId::Unlock | LevelId::GoToImpUnlock => {
            let mut rg = RoomGrid::new(rng, layout);
            let locked = rg.rand_room();
            let (color, _) = rg.add_door(locked, None, None, true)?;
            rg.locked_room = Some(locked);
            loop {
                let key_room = rg.rand_room();
                if key_room != locked {
                    rg.add_object(key_room, WorldObject::item(ObjKind::Key, color))?;
                    break;
                }
            }
            if level == LevelId::Unlock && rg.rng.random_bool(0.5) {
                let others: Vec<Color> = Color::ALL.into_iter().filter(|&c| c != color).collect();
                rg.connect_all(&others)?;
            } else {
                rg.connect_all(&Color::ALL)?;
            }
            for r in 0..rg.room_count() {
                if r != locked {
                    rg.add_distractors(Some(r), 2, false)?;
                }
            }
            rg.place_agent_outside_locked()?;
            let clause = if level == LevelId::Unlock {
                rg.check_objs_reachable()?;
                Clause::Open(rg.descriptor_for(WorldObject::door(color, DoorState::Locked)))
            } else {
                let (_, obj) = rg.add_distractors(Some(locked), 1, false)?[0];
                Clause::GoTo(rg.descriptor_for(obj))
            };
            Ok(rg.finish(Instruction::Single(clause)))
        }
        LevelId::PutNext | LevelId::GoToSeq => level_gen(rng, layout, &synth(level.grammar_shape(), 0.0, false, true)),
        LevelId::Synth | LevelId::SynthLoc | LevelId::SynthSeq => {
            level_gen(rng, layout, &synth(level.grammar_shape(), 0.5, true, false))
        }
        LevelId::BossLevel => level_gen(rng, layout, &synth(level.grammar_shape(), 0.5, true, true)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for l in LevelId::ALL {
            assert_eq!(l.name().parse::<LevelId>().unwrap(), l);
            assert_eq!(LevelId::from_registry_name(&l.registry_name()).unwrap(), l);
        }
        assert!("GoToNowhere".parse::<LevelId>().is_err());
        assert!(LevelId::from_registry_name("GoToObj").is_err());
        assert_eq!(LevelId::GoToImpUnlock.registry_name(), "BabyWorld-GoToImpUnlock");
    }

    #[test]
    fn budgets() {
        let one = crate::lang::parse("go to the red ball").unwrap();
        let two = crate::lang::parse("go to the red ball, then pick up a key").unwrap();
        assert_eq!(max_steps_for(Layout::Room, &one), 64);
        assert_eq!(max_steps_for(Layout::Maze, &one), 576);
        assert_eq!(max_steps_for(Layout::Maze, &two), 2 * 576);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(Layout::Room.grid_size(), 8);
        assert_eq!(Layout::Maze.grid_size(), 22);
    }

    const SIDES: [Direction; 4] = [Direction::East, Direction::South, Direction::West, Direction::North];

    #[test]
    fn maze_is_fully_connected() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rg = RoomGrid::new(&mut rng, Layout::Maze);
            rg.connect_all(&Color::ALL).unwrap();
            assert_eq!(rg.reachable_rooms(), 9);
            for r in &rg.rooms {
                for (k, side) in SIDES.iter().enumerate() {
                    if r.doors[k] {
                        let p = r.door_pos[k].unwrap();
                        assert!(rg.grid.get(p).unwrap().is_door());
                        assert_eq!(p.step(*side).step(side.opposite()), p);
                    }
                }
            }
        }
    }
}

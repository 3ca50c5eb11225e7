//! The gridworld: cell contents, agent pose, the seven-action transition
//! function, egocentric observations and the sparse reward.

use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of the square egocentric view.
pub const VIEW_SIZE: usize = 7;

/// Number of integers in a flattened observation (7 x 7 x 3).
pub const OBS_LEN: usize = VIEW_SIZE * VIEW_SIZE * 3;

/// Observation code for a cell the agent cannot see.
pub const UNSEEN_CODE: u8 = 0;
/// Observation code for a visible empty cell.
pub const EMPTY_CODE: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjKind {
    Wall,
    Door,
    Key,
    Ball,
    Box,
    Goal,
}

impl ObjKind {
    pub const ALL: [ObjKind; 6] = [
        ObjKind::Wall,
        ObjKind::Door,
        ObjKind::Key,
        ObjKind::Ball,
        ObjKind::Box,
        ObjKind::Goal,
    ];

    pub fn code(self) -> u8 {
        match self {
            ObjKind::Wall => 2,
            ObjKind::Door => 3,
            ObjKind::Key => 4,
            ObjKind::Ball => 5,
            ObjKind::Box => 6,
            ObjKind::Goal => 7,
        }
    }

    pub fn from_code(code: u8) -> Option<ObjKind> {
        ObjKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjKind::Wall => "wall",
            ObjKind::Door => "door",
            ObjKind::Key => "key",
            ObjKind::Ball => "ball",
            ObjKind::Box => "box",
            ObjKind::Goal => "goal",
        }
    }

    /// Keys, balls and boxes can be picked up and carried.
    pub fn is_movable(self) -> bool {
        matches!(self, ObjKind::Key | ObjKind::Ball | ObjKind::Box)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Color> {
        Color::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
            Color::Grey => "grey",
        }
    }

    pub fn from_name(name: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

impl DoorState {
    pub fn code(self) -> u8 {
        match self {
            DoorState::Open => 0,
            DoorState::Closed => 1,
            DoorState::Locked => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<DoorState> {
        match code {
            0 => Some(DoorState::Open),
            1 => Some(DoorState::Closed),
            2 => Some(DoorState::Locked),
            _ => None,
        }
    }
}

/// A single object occupying one cell.
///
/// `door_state` is only meaningful for doors; every other kind carries
/// [`DoorState::Open`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorldObject {
    pub kind: ObjKind,
    pub color: Color,
    pub door_state: DoorState,
}

impl WorldObject {
    pub fn wall() -> Self {
        Self { kind: ObjKind::Wall, color: Color::Grey, door_state: DoorState::Open }
    }

    pub fn goal() -> Self {
        Self { kind: ObjKind::Goal, color: Color::Green, door_state: DoorState::Open }
    }

    pub fn door(color: Color, state: DoorState) -> Self {
        Self { kind: ObjKind::Door, color, door_state: state }
    }

    /// A movable object (key, ball or box).
    pub fn item(kind: ObjKind, color: Color) -> Self {
        assert!(kind.is_movable(), "{kind:?} is not a movable object");
        Self { kind, color, door_state: DoorState::Open }
    }

    pub fn is_door(&self) -> bool {
        self.kind == ObjKind::Door
    }

    pub fn is_open_door(&self) -> bool {
        self.kind == ObjKind::Door && self.door_state == DoorState::Open
    }

    /// Whether light passes through the cell holding this object.
    pub fn see_behind(&self) -> bool {
        match self.kind {
            ObjKind::Wall => false,
            ObjKind::Door => self.door_state == DoorState::Open,
            _ => true,
        }
    }

    /// Whether the agent may stand on the cell holding this object.
    pub fn can_overlap(&self) -> bool {
        self.is_open_door()
    }

    pub fn encode(&self) -> [u8; 3] {
        [self.kind.code(), self.color.code(), self.door_state.code()]
    }

    /// Inverse of [`WorldObject::encode`]; `None` for empty/unseen or invalid codes.
    pub fn decode(code: [u8; 3]) -> Option<WorldObject> {
        let kind = ObjKind::from_code(code[0])?;
        let color = Color::from_code(code[1])?;
        let door_state = DoorState::from_code(code[2])?;
        Some(WorldObject { kind, color, door_state })
    }
}

/// Cell coordinates: `x` is the column, `y` the row (growing downwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.vec();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn is_adjacent(self, other: Pos) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    /// Fixed tie-break order used by every search in the crate.
    pub const ALL: [Direction; 4] =
        [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn vec(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn from_vec(dx: i32, dy: i32) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.vec() == (dx, dy))
    }

    pub fn right(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    pub fn left(self) -> Direction {
        match self {
            Direction::North => Direction::West,
            Direction::East => Direction::North,
            Direction::South => Direction::East,
            Direction::West => Direction::South,
        }
    }

    pub fn opposite(self) -> Direction {
        self.right().right()
    }
}

/// The seven agent actions. The discriminants are the stable codes used by
/// demo files and the agent protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    MoveForward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Done = 6,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::MoveForward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::MoveForward => "move_forward",
            Action::Pickup => "pickup",
            Action::Drop => "drop",
            Action::Toggle => "toggle",
            Action::Done => "done",
        }
    }
}

/// Dense row-major grid of optional objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldGrid {
    width: i32,
    height: i32,
    cells: Vec<Option<WorldObject>>,
}

impl WorldGrid {
    /// An empty grid whose outer boundary is walled.
    pub fn new(width: i32, height: i32) -> Self {
        assert!(width >= 3 && height >= 3, "grid must be at least 3x3");
        let mut grid = Self { width, height, cells: vec![None; (width * height) as usize] };
        grid.wall_rect(0, 0, width, height);
        grid
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.x >= 0 && pos.y >= 0 && pos.x < self.width && pos.y < self.height
    }

    pub fn index(&self, pos: Pos) -> usize {
        debug_assert!(self.in_bounds(pos));
        (pos.y * self.width + pos.x) as usize
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index as i32 % self.width, index as i32 / self.width)
    }

    /// Cell contents; out-of-bounds reads return `None`.
    pub fn get(&self, pos: Pos) -> Option<WorldObject> {
        if self.in_bounds(pos) {
            self.cells[self.index(pos)]
        } else {
            None
        }
    }

    pub fn set(&mut self, pos: Pos, obj: Option<WorldObject>) {
        assert!(self.in_bounds(pos), "set out of bounds at {pos}");
        let idx = self.index(pos);
        self.cells[idx] = obj;
    }

    pub fn get_mut(&mut self, pos: Pos) -> Option<&mut WorldObject> {
        if !self.in_bounds(pos) {
            return None;
        }
        let idx = self.index(pos);
        self.cells[idx].as_mut()
    }

    pub fn is_empty(&self, pos: Pos) -> bool {
        self.in_bounds(pos) && self.get(pos).is_none()
    }

    pub fn cells(&self) -> &[Option<WorldObject>] {
        &self.cells
    }

    /// Iterates `(pos, object)` over occupied cells in row-major order.
    pub fn objects(&self) -> impl Iterator<Item = (Pos, WorldObject)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|o| (self.pos_of(i), o)))
    }

    pub fn horz_wall(&mut self, x: i32, y: i32, len: i32) {
        for i in 0..len {
            self.set(Pos::new(x + i, y), Some(WorldObject::wall()));
        }
    }

    pub fn vert_wall(&mut self, x: i32, y: i32, len: i32) {
        for j in 0..len {
            self.set(Pos::new(x, y + j), Some(WorldObject::wall()));
        }
    }

    pub fn wall_rect(&mut self, x: i32, y: i32, w: i32, h: i32) {
        self.horz_wall(x, y, w);
        self.horz_wall(x, y + h - 1, w);
        self.vert_wall(x, y, h);
        self.vert_wall(x + w - 1, y, h);
    }
}

/// Agent pose, inventory and elapsed steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: Pos,
    pub dir: Direction,
    pub carrying: Option<WorldObject>,
    pub step_count: u32,
}

impl AgentState {
    pub fn new(pos: Pos, dir: Direction) -> Self {
        Self { pos, dir, carrying: None, step_count: 0 }
    }

    pub fn front_pos(&self) -> Pos {
        self.pos.step(self.dir)
    }
}

/// Grid plus agent; the unit the transition function operates on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct World {
    pub grid: WorldGrid,
    pub agent: AgentState,
}

impl World {
    pub fn new(grid: WorldGrid, agent: AgentState) -> Self {
        let world = Self { grid, agent };
        world.assert_invariants();
        world
    }

    fn assert_invariants(&self) {
        let here = self.grid.get(self.agent.pos);
        assert!(
            self.grid.in_bounds(self.agent.pos) && here.is_none_or(|o| o.can_overlap()),
            "agent must stand on an empty cell or an open door, found {here:?} at {}",
            self.agent.pos
        );
        if let Some(c) = self.agent.carrying {
            assert!(c.kind.is_movable(), "agent cannot carry a {:?}", c.kind);
        }
    }

    pub fn front_pos(&self) -> Pos {
        self.agent.front_pos()
    }

    pub fn front_cell(&self) -> Option<WorldObject> {
        self.grid.get(self.front_pos())
    }

    /// Applies one action in place. Illegal actions leave the world
    /// unchanged apart from the step counter.
    pub fn apply_action(&mut self, action: Action) {
        debug_assert!({
            self.assert_invariants();
            true
        });
        self.agent.step_count += 1;
        let fwd = self.front_pos();
        let fwd_cell = self.grid.get(fwd);
        match action {
            Action::TurnLeft => self.agent.dir = self.agent.dir.left(),
            Action::TurnRight => self.agent.dir = self.agent.dir.right(),
            Action::MoveForward => {
                let free = match fwd_cell {
                    None => self.grid.in_bounds(fwd),
                    Some(o) => o.can_overlap(),
                };
                if free {
                    self.agent.pos = fwd;
                }
            }
            Action::Pickup => {
                if let Some(obj) = fwd_cell {
                    if obj.kind.is_movable() && self.agent.carrying.is_none() {
                        self.agent.carrying = Some(obj);
                        self.grid.set(fwd, None);
                    }
                }
            }
            Action::Drop => {
                if fwd_cell.is_none() && self.grid.in_bounds(fwd) {
                    if let Some(obj) = self.agent.carrying.take() {
                        self.grid.set(fwd, Some(obj));
                    }
                }
            }
            Action::Toggle => {
                let carrying = self.agent.carrying;
                if let Some(door) = self.grid.get_mut(fwd).filter(|o| o.is_door()) {
                    door.door_state = match door.door_state {
                        DoorState::Locked => {
                            let has_key = carrying
                                .is_some_and(|c| c.kind == ObjKind::Key && c.color == door.color);
                            if has_key {
                                DoorState::Open
                            } else {
                                DoorState::Locked
                            }
                        }
                        DoorState::Closed => DoorState::Open,
                        DoorState::Open => DoorState::Closed,
                    };
                }
            }
            Action::Done => {}
        }
    }

    /// Functional form of [`World::apply_action`].
    pub fn stepped(&self, action: Action) -> World {
        let mut next = self.clone();
        next.apply_action(action);
        next
    }

    /// Renders the egocentric 7x7 view of the agent.
    pub fn observe(&self, mission_text: &str) -> Observation {
        render_observation(&self.grid, &self.agent, mission_text)
    }

    /// Multi-line ASCII map: two characters per cell.
    pub fn ascii(&self) -> String {
        let mut out = String::new();
        for y in 0..self.grid.height() {
            for x in 0..self.grid.width() {
                let pos = Pos::new(x, y);
                if pos == self.agent.pos {
                    let a = match self.agent.dir {
                        Direction::North => "^^",
                        Direction::East => ">>",
                        Direction::South => "vv",
                        Direction::West => "<<",
                    };
                    out.push_str(a);
                    continue;
                }
                match self.grid.get(pos) {
                    None => out.push_str("  "),
                    Some(o) => out.push_str(&cell_glyph(o)),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn cell_glyph(o: WorldObject) -> String {
    let c = o.color.name().chars().next().unwrap_or('?').to_ascii_uppercase();
    match o.kind {
        ObjKind::Wall => "WW".to_string(),
        ObjKind::Door => match o.door_state {
            DoorState::Open => "__".to_string(),
            DoorState::Closed => format!("D{c}"),
            DoorState::Locked => format!("L{c}"),
        },
        ObjKind::Key => format!("K{c}"),
        ObjKind::Ball => format!("A{c}"),
        ObjKind::Box => format!("B{c}"),
        ObjKind::Goal => "GG".to_string(),
    }
}

/// Partially observable egocentric view.
///
/// `grid_code[x][y]` holds `(kind, color, state)` for view column `x` and
/// view row `y`. The agent sits at `(3, 6)` facing towards row 0. The
/// agent's own cell shows the carried object when carrying, otherwise the
/// cell contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub grid_code: [[[u8; 3]; VIEW_SIZE]; VIEW_SIZE],
    pub mission_text: String,
}

impl Observation {
    /// View coordinates of the agent.
    pub const AGENT_VIEW_POS: (usize, usize) = (VIEW_SIZE / 2, VIEW_SIZE - 1);

    /// Flattens in `[x][y][channel]` order (147 values).
    pub fn flat(&self) -> Vec<u8> {
        self.grid_code.iter().flatten().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[u8], mission_text: impl Into<String>) -> Option<Observation> {
        if flat.len() != OBS_LEN {
            return None;
        }
        let mut grid_code = [[[0u8; 3]; VIEW_SIZE]; VIEW_SIZE];
        for (i, chunk) in flat.chunks_exact(3).enumerate() {
            grid_code[i / VIEW_SIZE][i % VIEW_SIZE].copy_from_slice(chunk);
        }
        Some(Observation { grid_code, mission_text: mission_text.into() })
    }

    pub fn cell(&self, vx: usize, vy: usize) -> [u8; 3] {
        self.grid_code[vx][vy]
    }

    pub fn is_visible(&self, vx: usize, vy: usize) -> bool {
        self.grid_code[vx][vy][0] != UNSEEN_CODE
    }

    /// The view as text, far row first; `??` marks unseen cells and `^^`
    /// the agent.
    pub fn ascii(&self) -> String {
        let mut out = String::new();
        for vy in 0..VIEW_SIZE {
            for vx in 0..VIEW_SIZE {
                let code = self.grid_code[vx][vy];
                if (vx, vy) == Self::AGENT_VIEW_POS {
                    out.push_str("^^");
                } else if code[0] == UNSEEN_CODE {
                    out.push_str("??");
                } else {
                    match WorldObject::decode(code) {
                        Some(o) => out.push_str(&cell_glyph(o)),
                        None => out.push_str("  "),
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Absolute grid position of view cell `(vx, vy)` for an agent pose.
    pub fn world_pos(agent_pos: Pos, dir: Direction, vx: usize, vy: usize) -> Pos {
        let (fx, fy) = dir.vec();
        let (rx, ry) = dir.right().vec();
        let ahead = (VIEW_SIZE - 1 - vy) as i32;
        let side = vx as i32 - (VIEW_SIZE / 2) as i32;
        Pos::new(agent_pos.x + fx * ahead + rx * side, agent_pos.y + fy * ahead + ry * side)
    }
}

/// Computes which cells of a view are visible. `transparent[x][y]` says
/// whether light passes through view cell `(x, y)`.
///
/// Sweeps rows away from the agent; a visible, transparent cell lights its
/// horizontal neighbour and the cells diagonally and directly ahead.
pub fn visibility_mask(
    transparent: &[[bool; VIEW_SIZE]; VIEW_SIZE],
) -> [[bool; VIEW_SIZE]; VIEW_SIZE] {
    let mut mask = [[false; VIEW_SIZE]; VIEW_SIZE];
    let (ax, ay) = Observation::AGENT_VIEW_POS;
    mask[ax][ay] = true;
    for j in (0..VIEW_SIZE).rev() {
        for i in 0..VIEW_SIZE - 1 {
            if !mask[i][j] || !transparent[i][j] {
                continue;
            }
            mask[i + 1][j] = true;
            if j > 0 {
                mask[i + 1][j - 1] = true;
                mask[i][j - 1] = true;
            }
        }
        for i in (1..VIEW_SIZE).rev() {
            if !mask[i][j] || !transparent[i][j] {
                continue;
            }
            mask[i - 1][j] = true;
            if j > 0 {
                mask[i - 1][j - 1] = true;
                mask[i][j - 1] = true;
            }
        }
    }
    mask
}

pub fn render_observation(grid: &WorldGrid, agent: &AgentState, mission_text: &str) -> Observation {
    let mut transparent = [[false; VIEW_SIZE]; VIEW_SIZE];
    let mut contents = [[None; VIEW_SIZE]; VIEW_SIZE];
    let mut inside = [[false; VIEW_SIZE]; VIEW_SIZE];
    for (vx, col) in transparent.iter_mut().enumerate() {
        for (vy, t) in col.iter_mut().enumerate() {
            let p = Observation::world_pos(agent.pos, agent.dir, vx, vy);
            if grid.in_bounds(p) {
                let cell = grid.get(p);
                inside[vx][vy] = true;
                contents[vx][vy] = cell;
                *t = cell.is_none_or(|o| o.see_behind());
            }
        }
    }
    let mask = visibility_mask(&transparent);
    let mut grid_code = [[[UNSEEN_CODE, 0, 0]; VIEW_SIZE]; VIEW_SIZE];
    for vx in 0..VIEW_SIZE {
        for vy in 0..VIEW_SIZE {
            if !(mask[vx][vy] && inside[vx][vy]) {
                continue;
            }
            grid_code[vx][vy] = match contents[vx][vy] {
                Some(o) => o.encode(),
                None => [EMPTY_CODE, 0, 0],
            };
        }
    }
    if let Some(c) = agent.carrying {
        let (ax, ay) = Observation::AGENT_VIEW_POS;
        grid_code[ax][ay] = c.encode();
    }
    Observation { grid_code, mission_text: mission_text.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("max_steps must be positive")]
    ZeroBudget,
    #[error("step_count {step_count} exceeds max_steps {max_steps}")]
    OverBudget { step_count: u32, max_steps: u32 },
}

/// Sparse reward: `1 - 0.9 * step_count / max_steps` on success, zero otherwise.
pub fn compute_reward<F: Float>(step_count: u32, max_steps: u32, success: bool) -> Result<F, RewardError> {
    if max_steps == 0 {
        return Err(RewardError::ZeroBudget);
    }
    if step_count > max_steps {
        return Err(RewardError::OverBudget { step_count, max_steps });
    }
    if !success {
        return Ok(F::zero());
    }
    let ratio = F::from(step_count).unwrap() / F::from(max_steps).unwrap();
    Ok(F::one() - F::from(0.9).unwrap() * ratio)
}

//! The instruction language: AST, surface text, parser, grammar-directed
//! sampler and the closed-form instruction count.
//!
//! ```text
//! Sent   := Clause | Sent1 ", then" Sent1 | Sent1 "after you" Sent1
//! Sent1  := Clause | Clause "and" Clause
//! Clause := "go to" Descr | "pick up" DescrNotDoor | "open" DescrDoor
//!         | "put" DescrNotDoor "next to" Descr
//! Descr  := Article [Color] Kind [LocSpec]
//! ```
//!
//! `and` only appears inside a `then`/`after` form, and a sentence holds at
//! most one `then`/`after`. The types below make both restrictions
//! unrepresentable.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Color, ObjKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Article {
    The,
    A,
}

impl Article {
    pub const ALL: [Article; 2] = [Article::The, Article::A];

    pub fn word(self) -> &'static str {
        match self {
            Article::The => "the",
            Article::A => "a",
        }
    }
}

/// Location relative to the agent's pose at the start of the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loc {
    Left,
    Right,
    Front,
    Behind,
}

impl Loc {
    pub const ALL: [Loc; 4] = [Loc::Left, Loc::Right, Loc::Front, Loc::Behind];

    pub fn phrase(self) -> &'static str {
        match self {
            Loc::Left => "on your left",
            Loc::Right => "on your right",
            Loc::Front => "in front of you",
            Loc::Behind => "behind you",
        }
    }
}

/// Object kinds a descriptor may name.
pub const DESCRIBABLE_KINDS: [ObjKind; 4] = [ObjKind::Door, ObjKind::Ball, ObjKind::Box, ObjKind::Key];
/// Kinds that can be picked up or moved.
pub const MOVABLE_KINDS: [ObjKind; 3] = [ObjKind::Ball, ObjKind::Box, ObjKind::Key];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Descriptor {
    pub article: Article,
    pub color: Option<Color>,
    pub kind: ObjKind,
    pub loc: Option<Loc>,
}

impl Descriptor {
    pub fn new(article: Article, color: Option<Color>, kind: ObjKind, loc: Option<Loc>) -> Self {
        Self { article, color, kind, loc }
    }

    /// `the <color> <kind>` without location.
    pub fn the(color: Color, kind: ObjKind) -> Self {
        Self::new(Article::The, Some(color), kind, None)
    }

    /// Kind and color test; location is resolved separately.
    pub fn matches(&self, kind: ObjKind, color: Color) -> bool {
        self.kind == kind && self.color.is_none_or(|c| c == color)
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.article.word())?;
        if let Some(c) = self.color {
            write!(f, " {}", c.name())?;
        }
        write!(f, " {}", self.kind.name())?;
        if let Some(l) = self.loc {
            write!(f, " {}", l.phrase())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    GoTo,
    Pickup,
    Open,
    PutNext,
}

impl Verb {
    pub const ALL: [Verb; 4] = [Verb::GoTo, Verb::Pickup, Verb::Open, Verb::PutNext];

    /// Kinds allowed for the clause target.
    pub fn target_kinds(self) -> &'static [ObjKind] {
        match self {
            Verb::GoTo => &DESCRIBABLE_KINDS,
            Verb::Pickup | Verb::PutNext => &MOVABLE_KINDS,
            Verb::Open => &[ObjKind::Door],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    GoTo(Descriptor),
    Pickup(Descriptor),
    Open(Descriptor),
    PutNext(Descriptor, Descriptor),
}

impl Clause {
    pub fn verb(&self) -> Verb {
        match self {
            Clause::GoTo(_) => Verb::GoTo,
            Clause::Pickup(_) => Verb::Pickup,
            Clause::Open(_) => Verb::Open,
            Clause::PutNext(..) => Verb::PutNext,
        }
    }

    pub fn target(&self) -> &Descriptor {
        match self {
            Clause::GoTo(d) | Clause::Pickup(d) | Clause::Open(d) | Clause::PutNext(d, _) => d,
        }
    }

    pub fn anchor(&self) -> Option<&Descriptor> {
        match self {
            Clause::PutNext(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &Descriptor> {
        std::iter::once(self.target()).chain(self.anchor())
    }

    /// Checks the per-verb kind restrictions.
    pub fn validate(&self) -> Result<(), Restriction> {
        let verb = self.verb();
        let target = self.target();
        if !DESCRIBABLE_KINDS.contains(&target.kind) {
            return Err(Restriction::UndescribableKind(target.kind));
        }
        if !verb.target_kinds().contains(&target.kind) {
            return Err(if verb == Verb::Open {
                Restriction::DoorRequired
            } else {
                Restriction::DoorNotAllowed(verb)
            });
        }
        if let Some(a) = self.anchor() {
            if !DESCRIBABLE_KINDS.contains(&a.kind) {
                return Err(Restriction::UndescribableKind(a.kind));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::GoTo(d) => write!(f, "go to {d}"),
            Clause::Pickup(d) => write!(f, "pick up {d}"),
            Clause::Open(d) => write!(f, "open {d}"),
            Clause::PutNext(d, a) => write!(f, "put {d} next to {a}"),
        }
    }
}

/// One side of a `then`/`after` sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Single(Clause),
    And(Clause, Clause),
}

impl Body {
    pub fn clauses(&self) -> Vec<&Clause> {
        match self {
            Body::Single(c) => vec![c],
            Body::And(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Single(c) => write!(f, "{c}"),
            Body::And(a, b) => write!(f, "{a} and {b}"),
        }
    }
}

/// A complete sentence.
///
/// `Then(first, second)` means `first` must be completed before `second`;
/// `After(second, first)` renders as "`second` after you `first`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instruction {
    Single(Clause),
    Then(Body, Body),
    After(Body, Body),
}

impl Instruction {
    /// Clauses in surface order.
    pub fn clauses(&self) -> Vec<&Clause> {
        match self {
            Instruction::Single(c) => vec![c],
            Instruction::Then(a, b) | Instruction::After(a, b) => {
                let mut v = a.clauses();
                v.extend(b.clauses());
                v
            }
        }
    }

    pub fn clause_count(&self) -> usize {
        self.clauses().len()
    }

    /// Bodies in the order they must be completed.
    pub fn ordered_bodies(&self) -> Vec<Body> {
        match *self {
            Instruction::Single(c) => vec![Body::Single(c)],
            Instruction::Then(a, b) => vec![a, b],
            Instruction::After(a, b) => vec![b, a],
        }
    }

    pub fn text(&self) -> String {
        self.to_string()
    }

    pub fn validate(&self) -> Result<(), Restriction> {
        self.clauses().into_iter().try_for_each(Clause::validate)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Single(c) => write!(f, "{c}"),
            Instruction::Then(a, b) => write!(f, "{a}, then {b}"),
            Instruction::After(a, b) => write!(f, "{a} after you {b}"),
        }
    }
}

/// Violations of the structural or per-verb restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Restriction {
    #[error("at most one 'then' or 'after' is allowed")]
    TooManySequencers,
    #[error("'and' may only appear inside a 'then' or 'after' sentence")]
    AndWithoutSequencer,
    #[error("{0:?} target may not be a door")]
    DoorNotAllowed(Verb),
    #[error("open target must be a door")]
    DoorRequired,
    #[error("{0:?} objects cannot be described")]
    UndescribableKind(ObjKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
    #[error("restriction violated at byte {pos}: {restriction}")]
    Restriction { pos: usize, restriction: Restriction },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token<'a> {
    text: &'a str,
    pos: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(s) = start.take() {
                out.push(Token { text: &text[s..i], pos: s });
            }
            if ch == ',' {
                out.push(Token { text: &text[i..i + 1], pos: i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &text[s..], pos: s });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Connector {
    And,
    Then,
    After,
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.at).map(|t| t.text)
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.tokens.get(self.at + k).map(|t| t.text)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().map_or("end of input".to_string(), |t| format!("'{t}'")),
        }
    }

    fn eat(&mut self, word: &str) -> bool {
        if self.peek() == Some(word) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, words: &[&str]) -> Result<(), ParseError> {
        for w in words {
            if !self.eat(w) {
                return Err(self.error(&format!("'{}'", words.join(" "))));
            }
        }
        Ok(())
    }

    fn descriptor(&mut self) -> Result<(Descriptor, usize), ParseError> {
        let pos = self.pos();
        let article = match self.peek() {
            Some("the") => Article::The,
            Some("a") => Article::A,
            _ => return Err(self.error("article 'the' or 'a'")),
        };
        self.at += 1;
        let color = self.peek().and_then(Color::from_name);
        if color.is_some() {
            self.at += 1;
        }
        let kind = match self.peek() {
            Some("door") => ObjKind::Door,
            Some("ball") => ObjKind::Ball,
            Some("box") => ObjKind::Box,
            Some("key") => ObjKind::Key,
            _ => return Err(self.error("object kind (door, ball, box or key)")),
        };
        self.at += 1;
        let loc = match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Some("on"), Some("your"), Some("left")) => Some((Loc::Left, 3)),
            (Some("on"), Some("your"), Some("right")) => Some((Loc::Right, 3)),
            (Some("in"), Some("front"), Some("of")) if self.peek_at(3) == Some("you") => {
                Some((Loc::Front, 4))
            }
            (Some("behind"), Some("you"), _) => Some((Loc::Behind, 2)),
            (Some("on") | Some("in") | Some("behind"), _, _) => {
                return Err(self.error("location phrase"));
            }
            _ => None,
        };
        if let Some((_, n)) = loc {
            self.at += n;
        }
        Ok((Descriptor::new(article, color, kind, loc.map(|l| l.0)), pos))
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let start = self.pos();
        let clause = match self.peek() {
            Some("go") => {
                self.expect(&["go", "to"])?;
                Clause::GoTo(self.descriptor()?.0)
            }
            Some("pick") => {
                self.expect(&["pick", "up"])?;
                Clause::Pickup(self.descriptor()?.0)
            }
            Some("open") => {
                self.at += 1;
                Clause::Open(self.descriptor()?.0)
            }
            Some("put") => {
                self.at += 1;
                let (target, _) = self.descriptor()?;
                self.expect(&["next", "to"])?;
                Clause::PutNext(target, self.descriptor()?.0)
            }
            _ => return Err(self.error("'go to', 'pick up', 'open' or 'put'")),
        };
        clause.validate().map_err(|restriction| ParseError::Restriction { pos: start, restriction })?;
        Ok(clause)
    }

    fn connector(&mut self) -> Result<Option<(Connector, usize)>, ParseError> {
        let pos = self.pos();
        match self.peek() {
            None => Ok(None),
            Some("and") => {
                self.at += 1;
                Ok(Some((Connector::And, pos)))
            }
            Some(",") => {
                self.at += 1;
                if !self.eat("then") {
                    return Err(self.error("'then'"));
                }
                Ok(Some((Connector::Then, pos)))
            }
            Some("after") => {
                self.at += 1;
                if !self.eat("you") {
                    return Err(self.error("'you'"));
                }
                Ok(Some((Connector::After, pos)))
            }
            Some(_) => Err(self.error("'and', ', then', 'after you' or end of input")),
        }
    }
}

/// Parses surface text into an [`Instruction`]. Whitespace is normalized;
/// the comma before `then` may be detached.
pub fn parse(text: &str) -> Result<Instruction, ParseError> {
    let mut p = Parser { tokens: tokenize(text), at: 0, end: text.len() };
    let mut clauses = vec![p.clause()?];
    let mut connectors = Vec::new();
    while let Some(conn) = p.connector()? {
        connectors.push(conn);
        clauses.push(p.clause()?);
    }

    let sequencers: Vec<_> =
        connectors.iter().enumerate().filter(|(_, (c, _))| *c != Connector::And).collect();
    if sequencers.len() > 1 {
        let pos = sequencers[1].1 .1;
        return Err(ParseError::Restriction { pos, restriction: Restriction::TooManySequencers });
    }
    let Some(&(split, &(seq, _))) = sequencers.first() else {
        if let Some(&(_, pos)) = connectors.first() {
            return Err(ParseError::Restriction { pos, restriction: Restriction::AndWithoutSequencer });
        }
        return Ok(Instruction::Single(clauses[0]));
    };

    let body = |cl: &[Clause], conns: &[(Connector, usize)]| -> Result<Body, ParseError> {
        match (cl, conns) {
            ([c], []) => Ok(Body::Single(*c)),
            ([a, b], [_]) => Ok(Body::And(*a, *b)),
            (_, [_, (_, pos), ..]) => Err(ParseError::Syntax {
                pos: *pos,
                expected: "at most one 'and' per side of 'then'/'after'".to_string(),
                found: "'and'".to_string(),
            }),
            _ => unreachable!("clause/connector counts are consistent"),
        }
    };
    let first = body(&clauses[..=split], &connectors[..split])?;
    let second = body(&clauses[split + 1..], &connectors[split + 1..])?;
    Ok(match seq {
        Connector::Then => Instruction::Then(first, second),
        Connector::After => Instruction::After(first, second),
        Connector::And => unreachable!(),
    })
}

/// Which parts of the grammar a level may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarShape {
    pub verbs: Vec<Verb>,
    /// Allows `then`/`after` sentences.
    pub sequences: bool,
    /// Allows `and` inside `then`/`after` bodies.
    pub conjunctions: bool,
    /// Allows location phrases.
    pub locations: bool,
}

impl GrammarShape {
    pub fn full() -> Self {
        Self { verbs: Verb::ALL.to_vec(), sequences: true, conjunctions: true, locations: true }
    }

    pub fn single(verb: Verb) -> Self {
        Self { verbs: vec![verb], sequences: false, conjunctions: false, locations: false }
    }

    /// Whether `instr` only uses forms allowed by this shape.
    pub fn admits(&self, instr: &Instruction) -> bool {
        let structure = match instr {
            Instruction::Single(_) => true,
            Instruction::Then(a, b) | Instruction::After(a, b) => {
                self.sequences
                    && (self.conjunctions
                        || !matches!(a, Body::And(..)) && !matches!(b, Body::And(..)))
            }
        };
        structure
            && instr.clauses().iter().all(|c| {
                self.verbs.contains(&c.verb()) && (self.locations || c.descriptors().all(|d| d.loc.is_none()))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("grammar shape allows no verbs")]
    Empty,
}

/// Supplies descriptors while sampling an instruction.
pub trait DescriptorSource {
    type Error: From<ShapeError>;

    /// A descriptor naming one of `kinds`.
    fn descriptor<R: Rng + ?Sized>(&mut self, rng: &mut R, kinds: &[ObjKind]) -> Result<Descriptor, Self::Error>;
}

/// Grammar-only descriptors: uniform article, color option and location.
#[derive(Debug, Clone, Copy)]
pub struct FreeDescriptors {
    pub locations: bool,
}

impl DescriptorSource for FreeDescriptors {
    type Error = ShapeError;

    fn descriptor<R: Rng + ?Sized>(&mut self, rng: &mut R, kinds: &[ObjKind]) -> Result<Descriptor, ShapeError> {
        let article = Article::ALL[rng.random_range(0..2)];
        let color = match rng.random_range(0..=Color::ALL.len()) {
            0 => None,
            i => Some(Color::ALL[i - 1]),
        };
        let kind = kinds[rng.random_range(0..kinds.len())];
        let loc = if self.locations {
            match rng.random_range(0..=Loc::ALL.len()) {
                0 => None,
                i => Some(Loc::ALL[i - 1]),
            }
        } else {
            None
        };
        Ok(Descriptor::new(article, color, kind, loc))
    }
}

fn sample_clause<R, S>(rng: &mut R, shape: &GrammarShape, src: &mut S) -> Result<Clause, S::Error>
where
    R: Rng + ?Sized,
    S: DescriptorSource,
{
    let verb = shape.verbs[rng.random_range(0..shape.verbs.len())];
    let target = src.descriptor(rng, verb.target_kinds())?;
    Ok(match verb {
        Verb::GoTo => Clause::GoTo(target),
        Verb::Pickup => Clause::Pickup(target),
        Verb::Open => Clause::Open(target),
        Verb::PutNext => Clause::PutNext(target, src.descriptor(rng, &DESCRIBABLE_KINDS)?),
    })
}

fn sample_body<R, S>(rng: &mut R, shape: &GrammarShape, src: &mut S) -> Result<Body, S::Error>
where
    R: Rng + ?Sized,
    S: DescriptorSource,
{
    if shape.conjunctions && rng.random_bool(0.5) {
        Ok(Body::And(sample_clause(rng, shape, src)?, sample_clause(rng, shape, src)?))
    } else {
        Ok(Body::Single(sample_clause(rng, shape, src)?))
    }
}

/// Samples an instruction choosing uniformly among the production
/// alternatives the shape allows, with descriptors drawn from `src`.
pub fn sample_instruction_with<R, S>(rng: &mut R, shape: &GrammarShape, src: &mut S) -> Result<Instruction, S::Error>
where
    R: Rng + ?Sized,
    S: DescriptorSource,
{
    if shape.verbs.is_empty() {
        return Err(ShapeError::Empty.into());
    }
    let form = if shape.sequences { rng.random_range(0..3) } else { 0 };
    Ok(match form {
        0 => Instruction::Single(sample_clause(rng, shape, src)?),
        1 => Instruction::Then(sample_body(rng, shape, src)?, sample_body(rng, shape, src)?),
        _ => Instruction::After(sample_body(rng, shape, src)?, sample_body(rng, shape, src)?),
    })
}

pub fn sample_instruction<R: Rng + ?Sized>(rng: &mut R, shape: &GrammarShape) -> Result<Instruction, ShapeError> {
    sample_instruction_with(rng, shape, &mut FreeDescriptors { locations: shape.locations })
}

/// Size of the descriptor vocabulary used by [`count_instructions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountConfig {
    pub articles: u128,
    /// Color options including "no color".
    pub color_options: u128,
    /// Location options including "no location".
    pub loc_options: u128,
    /// Whether `then`/`after`/`and` sentences are counted.
    pub connectors: bool,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            articles: Article::ALL.len() as u128,
            color_options: Color::ALL.len() as u128 + 1,
            loc_options: Loc::ALL.len() as u128 + 1,
            connectors: true,
        }
    }
}

impl CountConfig {
    pub fn descriptors_per_kind(&self) -> u128 {
        self.articles * self.color_options * self.loc_options
    }

    pub fn clause_count(&self) -> u128 {
        let d = self.descriptors_per_kind();
        let any = DESCRIBABLE_KINDS.len() as u128 * d;
        let movable = MOVABLE_KINDS.len() as u128 * d;
        // go to + pick up + open + put
        any + movable + d + movable * any
    }
}

/// Exact number of distinct instructions.
pub fn count_instructions(cfg: &CountConfig) -> u128 {
    let c = cfg.clause_count();
    if !cfg.connectors {
        return c;
    }
    let body = c + c * c;
    c + 2 * body * body
}

/// Scientific notation with four decimals, e.g. `2.4833e19`.
pub fn format_count(n: u128) -> String {
    format!("{:.4e}", n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn figure_examples_roundtrip() {
        for s in [
            "go to the red ball",
            "open the door on your left",
            "put a ball next to the blue door",
            "open the yellow door and go to the key behind you, then pick up a box",
            "put a ball next to a purple door after you put a blue box next to a grey box and pick up the purple box",
            "pick up the grey box behind you, then go to the grey key and open a door",
        ] {
            let instr = parse(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!(instr.to_string(), s);
        }
    }

    #[test]
    fn parse_single_clause() {
        assert_eq!(
            parse("go to the red ball").unwrap(),
            Instruction::Single(Clause::GoTo(Descriptor::the(Color::Red, ObjKind::Ball)))
        );
        assert_eq!(
            parse("open the door on your left").unwrap(),
            Instruction::Single(Clause::Open(Descriptor::new(
                Article::The,
                None,
                ObjKind::Door,
                Some(Loc::Left)
            )))
        );
    }

    #[test]
    fn parse_normalizes_whitespace() {
        let a = parse("  go   to the\tred ball ,  then open a door ").unwrap();
        assert_eq!(a.to_string(), "go to the red ball, then open a door");
    }

    #[test]
    fn pickup_door_is_restriction_error() {
        let err = parse("pick up the blue door").unwrap_err();
        assert_eq!(
            err,
            ParseError::Restriction { pos: 0, restriction: Restriction::DoorNotAllowed(Verb::Pickup) }
        );
        assert!(matches!(
            parse("open the red ball"),
            Err(ParseError::Restriction { restriction: Restriction::DoorRequired, .. })
        ));
        assert!(matches!(
            parse("put the red door next to a ball"),
            Err(ParseError::Restriction { restriction: Restriction::DoorNotAllowed(Verb::PutNext), .. })
        ));
    }

    #[test]
    fn two_sequencers_rejected() {
        let err = parse("go to a box, then open a door, then pick up a key").unwrap_err();
        assert!(matches!(err, ParseError::Restriction { restriction: Restriction::TooManySequencers, .. }));
        let err = parse("go to a box after you open a door, then pick up a key").unwrap_err();
        assert!(matches!(err, ParseError::Restriction { restriction: Restriction::TooManySequencers, .. }));
    }

    #[test]
    fn bare_and_rejected() {
        let err = parse("go to a box and open a door").unwrap_err();
        assert_eq!(err, ParseError::Restriction { pos: 12, restriction: Restriction::AndWithoutSequencer });
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("go to the red banana").unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 14),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse(""), Err(ParseError::Syntax { pos: 0, .. })));
        assert!(matches!(parse("go to the ball on your"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("go to a key and go to a ball and go to a box, then open a door"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("go to a key, open a door"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn open_only_shape_samples_doors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = GrammarShape::single(Verb::Open);
        for _ in 0..200 {
            let i = sample_instruction(&mut rng, &shape).unwrap();
            let Instruction::Single(Clause::Open(d)) = i else { panic!("{i:?}") };
            assert_eq!(d.kind, ObjKind::Door);
            assert!(d.loc.is_none());
            assert!(i.to_string().starts_with("open "));
        }
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let shape = GrammarShape::full();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..50).map(|_| sample_instruction(&mut rng, &shape).unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..50).map(|_| sample_instruction(&mut rng, &shape).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn empty_shape_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shape = GrammarShape { verbs: vec![], sequences: true, conjunctions: true, locations: true };
        assert_eq!(sample_instruction(&mut rng, &shape), Err(ShapeError::Empty));
    }

    #[test]
    fn shape_admits_its_samples_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let goto = GrammarShape { verbs: vec![Verb::GoTo], sequences: true, conjunctions: false, locations: false };
        for _ in 0..200 {
            let i = sample_instruction(&mut rng, &goto).unwrap();
            assert!(goto.admits(&i));
        }
        let full = parse("pick up a key behind you, then go to a box").unwrap();
        assert!(!goto.admits(&full));
        assert!(GrammarShape::full().admits(&full));
    }

    /// Enumerates every clause over an explicit descriptor list.
    fn brute_force_clauses(descs_of: &dyn Fn(ObjKind) -> Vec<Descriptor>) -> Vec<Clause> {
        let over = |kinds: &[ObjKind]| -> Vec<Descriptor> { kinds.iter().flat_map(|&k| descs_of(k)).collect() };
        let mut out = Vec::new();
        for d in over(&DESCRIBABLE_KINDS) {
            out.push(Clause::GoTo(d));
        }
        for d in over(&MOVABLE_KINDS) {
            out.push(Clause::Pickup(d));
        }
        for d in over(&[ObjKind::Door]) {
            out.push(Clause::Open(d));
        }
        for d in over(&MOVABLE_KINDS) {
            for a in over(&DESCRIBABLE_KINDS) {
                out.push(Clause::PutNext(d, a));
            }
        }
        out
    }

    fn full_descriptors(kind: ObjKind) -> Vec<Descriptor> {
        let mut v = Vec::new();
        for a in Article::ALL {
            for c in std::iter::once(None).chain(Color::ALL.map(Some)) {
                for l in std::iter::once(None).chain(Loc::ALL.map(Some)) {
                    v.push(Descriptor::new(a, c, kind, l));
                }
            }
        }
        v
    }

    #[test]
    fn clause_count_matches_enumeration() {
        let clauses = brute_force_clauses(&full_descriptors);
        let distinct: std::collections::HashSet<String> = clauses.iter().map(|c| c.to_string()).collect();
        assert_eq!(clauses.len(), 59_360);
        assert_eq!(distinct.len(), 59_360);
        assert_eq!(CountConfig::default().clause_count(), 59_360);
    }

    #[test]
    fn total_count() {
        let n = count_instructions(&CountConfig::default());
        let c: u128 = 59_360;
        assert_eq!(n, c + 2 * (c + c * c) * (c + c * c));
        assert_eq!(n, 24_832_485_879_335_022_560);
        assert_eq!(format_count(n), "2.4832e19");
        let no_conn = CountConfig { connectors: false, ..CountConfig::default() };
        assert_eq!(count_instructions(&no_conn), 59_360);
    }

    #[test]
    fn small_grammar_count_matches_enumeration() {
        // one article, no colors, no locations: one descriptor per kind
        let descs = |k: ObjKind| vec![Descriptor::new(Article::The, None, k, None)];
        let clauses = brute_force_clauses(&descs);
        let mut sentences = std::collections::HashSet::new();
        let bodies: Vec<Body> = clauses
            .iter()
            .map(|&c| Body::Single(c))
            .chain(clauses.iter().flat_map(|&a| clauses.iter().map(move |&b| Body::And(a, b))))
            .collect();
        for &c in &clauses {
            sentences.insert(Instruction::Single(c).to_string());
        }
        for &a in &bodies {
            for &b in &bodies {
                sentences.insert(Instruction::Then(a, b).to_string());
                sentences.insert(Instruction::After(a, b).to_string());
            }
        }
        let cfg = CountConfig { articles: 1, color_options: 1, loc_options: 1, connectors: true };
        assert_eq!(sentences.len() as u128, count_instructions(&cfg));
        assert_eq!(count_instructions(&cfg), 352_820);
    }
}

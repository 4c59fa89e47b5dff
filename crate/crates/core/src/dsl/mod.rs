//! The goal language.
//!
//! An explanation program maps the symbolic initial state to an ordered list of goal
//! conjunctions over `At(object, region)` facts. Programs are closed s-expressions:
//!
//! ```text
//! task     := (achieve goal+) | (seq task task+) | (if cond task task)
//!           | (sort-by measure order selector place place+)
//! goal     := (for selector place)
//! place    := (at region+)
//! selector := all | (filter pred) | (largest measure selector) | (smallest measure selector)
//!           | (most-numerous-shape selector) | (odd-color selector) | (except selector selector)
//! pred     := (color c) | (shape class) | (big measure) | (small measure)
//!           | (and pred pred) | (or pred pred) | (not pred)
//! cond     := (exists selector) | (count>= selector n)
//! measure  := area | perimeter | extent
//! order    := asc | desc
//! region   := Left | Right | Top | Bottom | Corner | Middle
//! ```

mod equiv;
mod eval;
mod parse;

pub use equiv::{extensional_equiv, BroadSampler, StateSampler};
pub use eval::{
    eval, eval_spec, flatten, satisfies, satisfies_states, Conj, EvalError, GroundedTask, TaskSpec,
};
pub use parse::ParseError;

use crate::world::{Color, ObjectFacts, RegionSet, ShapeClass};
use std::fmt;

/// Node count of a program.
pub type ProgramSize = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Area,
    Perimeter,
    Extent,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Area, Measure::Perimeter, Measure::Extent];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Area => "area",
            Measure::Perimeter => "perimeter",
            Measure::Extent => "extent",
        }
    }

    pub fn of(self, o: &ObjectFacts) -> f64 {
        match self {
            Measure::Area => o.area,
            Measure::Perimeter => o.perimeter,
            Measure::Extent => o.extent,
        }
    }

    /// Cut point between `small` and `big`.
    pub fn threshold(self) -> f64 {
        match self {
            Measure::Area => 0.005,
            Measure::Perimeter => 0.3,
            Measure::Extent => 0.09,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Color(Color),
    Shape(ShapeClass),
    Big(Measure),
    Small(Measure),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selector {
    All,
    Filter(Pred),
    Largest(Measure, Box<Selector>),
    Smallest(Measure, Box<Selector>),
    MostNumerousShape(Box<Selector>),
    OddColor(Box<Selector>),
    Except(Box<Selector>, Box<Selector>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Goal {
    pub selector: Selector,
    pub place: RegionSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    Exists(Selector),
    CountAtLeast(Selector, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Asc,
    Desc,
}

/// An explanation program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Achieve(Vec<Goal>),
    Seq(Vec<Program>),
    If(Cond, Box<Program>, Box<Program>),
    SortBy(Measure, Order, Selector, Vec<RegionSet>),
}

impl Pred {
    pub fn size(&self) -> ProgramSize {
        match self {
            Pred::Color(_) | Pred::Shape(_) | Pred::Big(_) | Pred::Small(_) => 1,
            Pred::And(a, b) | Pred::Or(a, b) => 1 + a.size() + b.size(),
            Pred::Not(p) => 1 + p.size(),
        }
    }

    pub fn holds(&self, o: &ObjectFacts) -> bool {
        match self {
            Pred::Color(c) => o.color == *c,
            Pred::Shape(k) => o.shape.is(*k),
            Pred::Big(m) => m.of(o) > m.threshold(),
            Pred::Small(m) => m.of(o) <= m.threshold(),
            Pred::And(a, b) => a.holds(o) && b.holds(o),
            Pred::Or(a, b) => a.holds(o) || b.holds(o),
            Pred::Not(p) => !p.holds(o),
        }
    }

    pub fn and(a: Pred, b: Pred) -> Pred {
        Pred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Pred, b: Pred) -> Pred {
        Pred::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }
}

impl Selector {
    pub fn size(&self) -> ProgramSize {
        match self {
            Selector::All => 1,
            Selector::Filter(p) => 1 + p.size(),
            Selector::Largest(_, s) | Selector::Smallest(_, s) => 2 + s.size(),
            Selector::MostNumerousShape(s) | Selector::OddColor(s) => 1 + s.size(),
            Selector::Except(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl Cond {
    pub fn size(&self) -> ProgramSize {
        match self {
            Cond::Exists(s) => 1 + s.size(),
            Cond::CountAtLeast(s, _) => 2 + s.size(),
        }
    }
}

impl Goal {
    pub fn new(selector: Selector, place: RegionSet) -> Goal {
        Goal { selector, place }
    }

    pub fn size(&self) -> ProgramSize {
        self.selector.size() + self.place.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InvalidProgram {
    #[error("achieve needs at least one goal")]
    EmptyAchieve,
    #[error("seq needs at least two tasks")]
    ShortSeq,
    #[error("sort-by needs at least two places")]
    ShortSort,
    #[error("illegal place {0}")]
    IllegalPlace(RegionSet),
    #[error("count>= threshold must be at least 1")]
    ZeroCount,
}

impl Program {
    pub fn size(&self) -> ProgramSize {
        match self {
            Program::Achieve(gs) => 1 + gs.iter().map(Goal::size).sum::<usize>(),
            Program::Seq(ts) => 1 + ts.iter().map(Program::size).sum::<usize>(),
            Program::If(c, a, b) => 1 + c.size() + a.size() + b.size(),
            Program::SortBy(_, _, s, places) => {
                2 + s.size() + places.iter().map(|p| p.len()).sum::<usize>()
            }
        }
    }

    /// Structural checks: arities and legal places. Parsing always validates.
    pub fn validate(&self) -> Result<(), InvalidProgram> {
        let place = |p: &RegionSet| {
            if p.legal_goal() {
                Ok(())
            } else {
                Err(InvalidProgram::IllegalPlace(*p))
            }
        };
        let cond = |c: &Cond| match c {
            Cond::CountAtLeast(_, 0) => Err(InvalidProgram::ZeroCount),
            _ => Ok(()),
        };
        match self {
            Program::Achieve(gs) => {
                if gs.is_empty() {
                    return Err(InvalidProgram::EmptyAchieve);
                }
                gs.iter().try_for_each(|g| place(&g.place))
            }
            Program::Seq(ts) => {
                if ts.len() < 2 {
                    return Err(InvalidProgram::ShortSeq);
                }
                ts.iter().try_for_each(Program::validate)
            }
            Program::If(c, a, b) => {
                cond(c)?;
                a.validate()?;
                b.validate()
            }
            Program::SortBy(_, _, _, places) => {
                if places.len() < 2 {
                    return Err(InvalidProgram::ShortSort);
                }
                places.iter().try_for_each(place)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Program, ParseError> {
        parse::parse_program(text)
    }

    /// `(achieve (for selector (at regions)))`.
    pub fn single(selector: Selector, place: RegionSet) -> Program {
        Program::Achieve(vec![Goal::new(selector, place)])
    }
}

impl std::str::FromStr for Program {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Program::parse(s)
    }
}

fn write_place(f: &mut fmt::Formatter<'_>, p: &RegionSet) -> fmt::Result {
    f.write_str("(at")?;
    for r in p.iter() {
        write!(f, " {r}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Color(c) => write!(f, "(color {})", c.name()),
            Pred::Shape(k) => write!(f, "(shape {})", k.name()),
            Pred::Big(m) => write!(f, "(big {m})"),
            Pred::Small(m) => write!(f, "(small {m})"),
            Pred::And(a, b) => write!(f, "(and {a} {b})"),
            Pred::Or(a, b) => write!(f, "(or {a} {b})"),
            Pred::Not(p) => write!(f, "(not {p})"),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("all"),
            Selector::Filter(p) => write!(f, "(filter {p})"),
            Selector::Largest(m, s) => write!(f, "(largest {m} {s})"),
            Selector::Smallest(m, s) => write!(f, "(smallest {m} {s})"),
            Selector::MostNumerousShape(s) => write!(f, "(most-numerous-shape {s})"),
            Selector::OddColor(s) => write!(f, "(odd-color {s})"),
            Selector::Except(a, b) => write!(f, "(except {a} {b})"),
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(for {} ", self.selector)?;
        write_place(f, &self.place)?;
        f.write_str(")")
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Exists(s) => write!(f, "(exists {s})"),
            Cond::CountAtLeast(s, n) => write!(f, "(count>= {s} {n})"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Achieve(gs) => {
                f.write_str("(achieve")?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            Program::Seq(ts) => {
                f.write_str("(seq")?;
                for t in ts {
                    write!(f, " {t}")?;
                }
                f.write_str(")")
            }
            Program::If(c, a, b) => write!(f, "(if {c} {a} {b})"),
            Program::SortBy(m, o, s, places) => {
                let o = match o {
                    Order::Asc => "asc",
                    Order::Desc => "desc",
                };
                write!(f, "(sort-by {m} {o} {s}")?;
                for p in places {
                    f.write_str(" ")?;
                    write_place(f, p)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl serde::Serialize for Program {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Program::parse(&text).map_err(serde::de::Error::custom)
    }
}

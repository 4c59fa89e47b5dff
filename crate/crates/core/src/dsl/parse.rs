use super::{Cond, Goal, Measure, Order, Pred, Program, Selector};
use crate::world::{Color, Region, RegionSet, ShapeClass};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{message} (at byte {offset})")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

#[derive(Debug)]
enum Sexp<'a> {
    Atom(&'a str, usize),
    List(Vec<Sexp<'a>>, usize),
}

impl Sexp<'_> {
    fn offset(&self) -> usize {
        match self {
            Sexp::Atom(_, o) | Sexp::List(_, o) => *o,
        }
    }
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        message: message.into(),
        offset,
    })
}

fn read(text: &str) -> Result<Sexp<'_>, ParseError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b';' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if done.is_some() {
            return err(i, "trailing input after program");
        }
        let item = match c {
            b'(' => {
                stack.push((Vec::new(), i));
                i += 1;
                continue;
            }
            b')' => {
                let Some((items, start)) = stack.pop() else {
                    return err(i, "unbalanced ')'");
                };
                i += 1;
                Sexp::List(items, start)
            }
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                Sexp::Atom(&text[start..i], start)
            }
        };
        match stack.last_mut() {
            Some((items, _)) => items.push(item),
            None => done = Some(item),
        }
    }
    if let Some((_, start)) = stack.last() {
        return err(*start, "unclosed '('");
    }
    done.ok_or(ParseError {
        message: "empty input".into(),
        offset: 0,
    })
}

fn head<'a, 'b>(s: &'b Sexp<'a>) -> Result<(&'a str, &'b [Sexp<'a>], usize), ParseError> {
    match s {
        Sexp::List(items, off) => match items.first() {
            Some(Sexp::Atom(h, _)) => Ok((h, &items[1..], *off)),
            _ => err(*off, "expected a keyword after '('"),
        },
        Sexp::Atom(a, off) => err(*off, format!("expected a list, found '{a}'")),
    }
}

fn atom<'a>(s: &Sexp<'a>) -> Result<&'a str, ParseError> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        Sexp::List(_, off) => err(*off, "expected an atom"),
    }
}

fn arity(args: &[Sexp], n: usize, what: &str, off: usize) -> Result<(), ParseError> {
    if args.len() != n {
        return err(
            off,
            format!("{what} takes {n} argument(s), got {}", args.len()),
        );
    }
    Ok(())
}

fn measure(s: &Sexp) -> Result<Measure, ParseError> {
    let a = atom(s)?;
    Measure::ALL
        .into_iter()
        .find(|m| m.name() == a)
        .ok_or_else(|| ParseError {
            message: format!("unknown measure '{a}'"),
            offset: s.offset(),
        })
}

fn pred(s: &Sexp) -> Result<Pred, ParseError> {
    let (h, args, off) = head(s)?;
    match h {
        "color" => {
            arity(args, 1, h, off)?;
            let a = atom(&args[0])?;
            Color::parse(a).map(Pred::Color).ok_or_else(|| ParseError {
                message: format!("unknown color '{a}'"),
                offset: args[0].offset(),
            })
        }
        "shape" => {
            arity(args, 1, h, off)?;
            let a = atom(&args[0])?;
            ShapeClass::parse(a)
                .map(Pred::Shape)
                .ok_or_else(|| ParseError {
                    message: format!("unknown shape class '{a}'"),
                    offset: args[0].offset(),
                })
        }
        "big" | "small" => {
            arity(args, 1, h, off)?;
            let m = measure(&args[0])?;
            Ok(if h == "big" {
                Pred::Big(m)
            } else {
                Pred::Small(m)
            })
        }
        "and" | "or" => {
            arity(args, 2, h, off)?;
            let (a, b) = (pred(&args[0])?, pred(&args[1])?);
            Ok(if h == "and" {
                Pred::and(a, b)
            } else {
                Pred::or(a, b)
            })
        }
        "not" => {
            arity(args, 1, h, off)?;
            Ok(Pred::not(pred(&args[0])?))
        }
        _ => err(off, format!("unknown predicate '{h}'")),
    }
}

fn selector(s: &Sexp) -> Result<Selector, ParseError> {
    if let Sexp::Atom(a, off) = s {
        return if *a == "all" {
            Ok(Selector::All)
        } else {
            err(*off, format!("unknown selector '{a}'"))
        };
    }
    let (h, args, off) = head(s)?;
    let boxed = |s: &Sexp| selector(s).map(Box::new);
    match h {
        "filter" => {
            arity(args, 1, h, off)?;
            Ok(Selector::Filter(pred(&args[0])?))
        }
        "largest" | "smallest" => {
            arity(args, 2, h, off)?;
            let m = measure(&args[0])?;
            let inner = boxed(&args[1])?;
            Ok(if h == "largest" {
                Selector::Largest(m, inner)
            } else {
                Selector::Smallest(m, inner)
            })
        }
        "most-numerous-shape" => {
            arity(args, 1, h, off)?;
            Ok(Selector::MostNumerousShape(boxed(&args[0])?))
        }
        "odd-color" => {
            arity(args, 1, h, off)?;
            Ok(Selector::OddColor(boxed(&args[0])?))
        }
        "except" => {
            arity(args, 2, h, off)?;
            Ok(Selector::Except(boxed(&args[0])?, boxed(&args[1])?))
        }
        _ => err(off, format!("unknown selector '{h}'")),
    }
}

fn place(s: &Sexp) -> Result<RegionSet, ParseError> {
    let (h, args, off) = head(s)?;
    if h != "at" {
        return err(off, format!("expected (at ...), found '{h}'"));
    }
    let mut set = RegionSet::EMPTY;
    for a in args {
        let name = atom(a)?;
        let r = Region::parse(name).ok_or_else(|| ParseError {
            message: format!("unknown region '{name}'"),
            offset: a.offset(),
        })?;
        set = set.union(RegionSet::single(r));
    }
    if !set.legal_goal() {
        return err(off, format!("illegal place {set}"));
    }
    Ok(set)
}

fn goal(s: &Sexp) -> Result<Goal, ParseError> {
    let (h, args, off) = head(s)?;
    if h != "for" {
        return err(off, format!("expected (for ...), found '{h}'"));
    }
    arity(args, 2, h, off)?;
    Ok(Goal::new(selector(&args[0])?, place(&args[1])?))
}

fn cond(s: &Sexp) -> Result<Cond, ParseError> {
    let (h, args, off) = head(s)?;
    match h {
        "exists" => {
            arity(args, 1, h, off)?;
            Ok(Cond::Exists(selector(&args[0])?))
        }
        "count>=" => {
            arity(args, 2, h, off)?;
            let n: u32 = atom(&args[1])?.parse().map_err(|_| ParseError {
                message: "count>= needs a positive integer".into(),
                offset: args[1].offset(),
            })?;
            if n == 0 {
                return err(args[1].offset(), "count>= needs a positive integer");
            }
            Ok(Cond::CountAtLeast(selector(&args[0])?, n))
        }
        _ => err(off, format!("unknown condition '{h}'")),
    }
}

fn task(s: &Sexp) -> Result<Program, ParseError> {
    let (h, args, off) = head(s)?;
    match h {
        "achieve" => {
            if args.is_empty() {
                return err(off, "achieve needs at least one goal");
            }
            Ok(Program::Achieve(
                args.iter().map(goal).collect::<Result<_, _>>()?,
            ))
        }
        "seq" => {
            if args.len() < 2 {
                return err(off, "seq needs at least two tasks");
            }
            Ok(Program::Seq(
                args.iter().map(task).collect::<Result<_, _>>()?,
            ))
        }
        "if" => {
            arity(args, 3, h, off)?;
            Ok(Program::If(
                cond(&args[0])?,
                Box::new(task(&args[1])?),
                Box::new(task(&args[2])?),
            ))
        }
        "sort-by" => {
            if args.len() < 5 {
                return err(
                    off,
                    "sort-by takes a measure, an order, a selector and two or more places",
                );
            }
            let m = measure(&args[0])?;
            let o = match atom(&args[1])? {
                "asc" => Order::Asc,
                "desc" => Order::Desc,
                other => return err(args[1].offset(), format!("unknown order '{other}'")),
            };
            let sel = selector(&args[2])?;
            let places = args[3..].iter().map(place).collect::<Result<_, _>>()?;
            Ok(Program::SortBy(m, o, sel, places))
        }
        _ => err(off, format!("unknown task form '{h}'")),
    }
}

pub(super) fn parse_program(text: &str) -> Result<Program, ParseError> {
    task(&read(text)?)
}

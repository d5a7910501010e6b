//! XPath AST for the downward fragment and the extended rewriting fragment.

mod parse;
mod print;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use parse::{parse_qual, parse_with_macros, parse_xpath, parse_xpath_x, Macros, XPathError};
pub(crate) use parse::check_downward_qual;
pub use print::{serialize, serialize_qual, Abbrev};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    SelfAxis,
    Child,
    Descendant,
    Parent,
    Ancestor,
    AncestorOrSelf,
}

impl Axis {
    pub fn keyword(self) -> &'static str {
        match self {
            Axis::SelfAxis => "self",
            Axis::Child => "child",
            Axis::Descendant => "descendant",
            Axis::Parent => "parent",
            Axis::Ancestor => "ancestor",
            Axis::AncestorOrSelf => "ancestor-or-self",
        }
    }

    pub fn from_keyword(k: &str) -> Option<Axis> {
        Some(match k {
            "self" => Axis::SelfAxis,
            "child" => Axis::Child,
            "descendant" => Axis::Descendant,
            "parent" => Axis::Parent,
            "ancestor" => Axis::Ancestor,
            "ancestor-or-self" => Axis::AncestorOrSelf,
            _ => return None,
        })
    }

    pub fn is_upward(self) -> bool {
        matches!(self, Axis::Parent | Axis::Ancestor | Axis::AncestorOrSelf)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Name(String),
    Wildcard,
}

impl Label {
    pub fn name(n: &str) -> Label {
        Label::Name(n.to_string())
    }

    pub fn as_str(&self) -> &str {
        match self {
            Label::Name(n) => n,
            Label::Wildcard => "*",
        }
    }

    pub fn matches(&self, l: &str) -> bool {
        match self {
            Label::Name(n) => n == l,
            Label::Wildcard => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub axis: Axis,
    pub label: Label,
    pub quals: Vec<Qual>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Path {
    Step(Step),
    Slash(Box<Path>, Box<Path>),
    Union(Vec<Path>),
    /// A parenthesised path with trailing qualifiers, `( p ) [q]...`.
    Filter(Box<Path>, Vec<Qual>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Qual {
    Path(Path),
    TextEquals(Path, String),
    /// `path = self::label`: holds at `n` iff `n` matches `label` and
    /// `n` is among the nodes `path` selects from `n`.
    NodeEquals(Path, Label),
    Position(usize),
    And(Box<Qual>, Box<Qual>),
    Or(Box<Qual>, Box<Qual>),
    Not(Box<Qual>),
    True,
    False,
}

impl Step {
    pub fn new(axis: Axis, label: Label) -> Step {
        Step { axis, label, quals: Vec::new() }
    }

    pub fn with(mut self, q: Qual) -> Step {
        self.quals.push(q);
        self
    }
}

impl Path {
    pub fn step(axis: Axis, label: Label) -> Path {
        Path::Step(Step::new(axis, label))
    }

    pub fn named(axis: Axis, name: &str) -> Path {
        Path::step(axis, Label::name(name))
    }

    /// Composes `a/b`, keeping slashes left-nested and wrapping union
    /// operands in a group so the printed form parses back identically.
    pub fn slash(a: Path, b: Path) -> Path {
        let a = match a {
            Path::Union(_) => Path::Filter(Box::new(a), Vec::new()),
            a => a,
        };
        match b {
            Path::Slash(l, r) => Path::slash(Path::slash(a, *l), *r),
            Path::Union(_) => Path::Slash(Box::new(a), Box::new(Path::Filter(Box::new(b), Vec::new()))),
            b => Path::Slash(Box::new(a), Box::new(b)),
        }
    }

    pub fn union(branches: Vec<Path>) -> Path {
        let mut out = Vec::new();
        for b in branches {
            match b {
                Path::Union(bs) => out.extend(bs),
                b => out.push(b),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap_or_else(|| unreachable!())
        } else {
            Path::Union(out)
        }
    }

    /// Attaches qualifiers to a path: onto the step itself for a bare step,
    /// otherwise as a group filter.
    pub fn filtered(self, quals: Vec<Qual>) -> Path {
        if quals.is_empty() {
            return self;
        }
        match self {
            Path::Step(mut s) => {
                s.quals.extend(quals);
                Path::Step(s)
            }
            p => Path::Filter(Box::new(p), quals),
        }
    }

    pub fn last_is_upward(&self) -> bool {
        match self {
            Path::Step(s) => s.axis.is_upward(),
            Path::Slash(_, r) => r.last_is_upward(),
            Path::Union(bs) => bs.iter().all(|b| b.last_is_upward()),
            Path::Filter(p, _) => p.last_is_upward(),
        }
    }

    /// Number of steps, counting steps nested in qualifiers.
    pub fn size(&self) -> usize {
        match self {
            Path::Step(s) => 1 + s.quals.iter().map(Qual::size).sum::<usize>(),
            Path::Slash(a, b) => a.size() + b.size(),
            Path::Union(bs) => bs.iter().map(Path::size).sum(),
            Path::Filter(p, qs) => p.size() + qs.iter().map(Qual::size).sum::<usize>(),
        }
    }

    /// Total AST node count.
    pub fn node_count(&self) -> usize {
        match self {
            Path::Step(s) => 1 + s.quals.iter().map(Qual::node_count).sum::<usize>(),
            Path::Slash(a, b) => 1 + a.node_count() + b.node_count(),
            Path::Union(bs) => 1 + bs.iter().map(Path::node_count).sum::<usize>(),
            Path::Filter(p, qs) => 1 + p.node_count() + qs.iter().map(Qual::node_count).sum::<usize>(),
        }
    }
}

impl Qual {
    pub fn exists(p: Path) -> Qual {
        Qual::Path(p)
    }

    pub fn and(a: Qual, b: Qual) -> Qual {
        Qual::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Qual, b: Qual) -> Qual {
        Qual::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Qual) -> Qual {
        Qual::Not(Box::new(a))
    }

    /// Left-nested conjunction; `True` when empty.
    pub fn and_all(qs: impl IntoIterator<Item = Qual>) -> Qual {
        qs.into_iter().reduce(Qual::and).unwrap_or(Qual::True)
    }

    /// Left-nested disjunction; `False` when empty.
    pub fn or_all(qs: impl IntoIterator<Item = Qual>) -> Qual {
        qs.into_iter().reduce(Qual::or).unwrap_or(Qual::False)
    }

    pub fn size(&self) -> usize {
        match self {
            Qual::Path(p) | Qual::TextEquals(p, _) | Qual::NodeEquals(p, _) => p.size(),
            Qual::And(a, b) | Qual::Or(a, b) => a.size() + b.size(),
            Qual::Not(a) => a.size(),
            Qual::Position(_) | Qual::True | Qual::False => 0,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Qual::Path(p) | Qual::TextEquals(p, _) | Qual::NodeEquals(p, _) => 1 + p.node_count(),
            Qual::And(a, b) | Qual::Or(a, b) => 1 + a.node_count() + b.node_count(),
            Qual::Not(a) => 1 + a.node_count(),
            Qual::Position(_) | Qual::True | Qual::False => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FragmentClass {
    X,
    XUp,
    XUpPos,
    XUpPosEq,
}

pub fn classify(p: &Path) -> FragmentClass {
    let mut f = Features::default();
    f.path(p);
    f.class()
}

pub fn classify_qual(q: &Qual) -> FragmentClass {
    let mut f = Features::default();
    f.qual(q);
    f.class()
}

#[derive(Default)]
pub(crate) struct Features {
    pub other_axis: bool,
    pub ancestor_or_self: bool,
    pub position: bool,
    pub node_eq: bool,
}

impl Features {
    fn class(&self) -> FragmentClass {
        if self.node_eq {
            FragmentClass::XUpPosEq
        } else if self.position {
            FragmentClass::XUpPos
        } else if self.other_axis || self.ancestor_or_self {
            FragmentClass::XUp
        } else {
            FragmentClass::X
        }
    }

    pub fn path(&mut self, p: &Path) {
        match p {
            Path::Step(s) => {
                match s.axis {
                    Axis::Child | Axis::Descendant | Axis::SelfAxis => {}
                    Axis::AncestorOrSelf => self.ancestor_or_self = true,
                    _ => self.other_axis = true,
                }
                s.quals.iter().for_each(|q| self.qual(q));
            }
            Path::Slash(a, b) => {
                self.path(a);
                self.path(b);
            }
            Path::Union(bs) => bs.iter().for_each(|b| self.path(b)),
            Path::Filter(p, qs) => {
                self.path(p);
                qs.iter().for_each(|q| self.qual(q));
            }
        }
    }

    pub fn qual(&mut self, q: &Qual) {
        match q {
            Qual::Path(p) | Qual::TextEquals(p, _) => self.path(p),
            Qual::NodeEquals(p, _) => {
                self.node_eq = true;
                self.path(p);
            }
            Qual::Position(_) => self.position = true,
            Qual::And(a, b) | Qual::Or(a, b) => {
                self.qual(a);
                self.qual(b);
            }
            Qual::Not(a) => self.qual(a),
            Qual::True | Qual::False => {}
        }
    }
}

pub(crate) fn features_of_qual(q: &Qual) -> Features {
    let mut f = Features::default();
    f.qual(q);
    f
}

pub(crate) fn features_of_path(p: &Path) -> Features {
    let mut f = Features::default();
    f.path(p);
    f
}

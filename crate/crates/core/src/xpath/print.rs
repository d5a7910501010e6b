use alloc::string::String;
use core::fmt::Write;

use super::{Label, Path, Qual, Step};

/// Sub-expressions to print as `{name}` placeholders.
#[derive(Clone, Copy, Default)]
pub struct Abbrev<'a> {
    pub quals: &'a [(&'a str, &'a Qual)],
    /// Steps abbreviated when a step's qualifier list starts with theirs.
    pub steps: &'a [(&'a str, &'a Step)],
}

pub fn serialize(p: &Path) -> String {
    let mut s = String::new();
    Printer { abbrev: Abbrev::default() }.path(p, &mut s);
    s
}

pub fn serialize_qual(q: &Qual) -> String {
    let mut s = String::new();
    Printer { abbrev: Abbrev::default() }.qual(q, &mut s);
    s
}

impl Abbrev<'_> {
    pub fn path(&self, p: &Path) -> String {
        let mut s = String::new();
        Printer { abbrev: *self }.path(p, &mut s);
        s
    }

    pub fn qual(&self, q: &Qual) -> String {
        let mut s = String::new();
        Printer { abbrev: *self }.qual(q, &mut s);
        s
    }
}

struct Printer<'a> {
    abbrev: Abbrev<'a>,
}

impl Printer<'_> {
    fn path(&self, p: &Path, out: &mut String) {
        match p {
            Path::Step(s) => self.step(s, out),
            Path::Slash(a, b) => {
                self.grouped_if(a, matches!(**a, Path::Union(_)), out);
                out.push('/');
                self.grouped_if(b, matches!(**b, Path::Union(_) | Path::Slash(..)), out);
            }
            Path::Union(bs) => {
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" | ");
                    }
                    self.grouped_if(b, matches!(b, Path::Union(_)), out);
                }
            }
            Path::Filter(p, qs) => {
                out.push('(');
                self.path(p, out);
                out.push(')');
                self.quals(qs, out);
            }
        }
    }

    fn grouped_if(&self, p: &Path, wrap: bool, out: &mut String) {
        if wrap {
            out.push('(');
            self.path(p, out);
            out.push(')');
        } else {
            self.path(p, out);
        }
    }

    fn step(&self, s: &Step, out: &mut String) {
        for (name, m) in self.abbrev.steps {
            if s.axis == m.axis && s.label == m.label && s.quals.starts_with(&m.quals) {
                out.push('{');
                out.push_str(name);
                out.push('}');
                self.quals(&s.quals[m.quals.len()..], out);
                return;
            }
        }
        out.push_str(s.axis.keyword());
        out.push_str("::");
        label(&s.label, out);
        self.quals(&s.quals, out);
    }

    fn quals(&self, qs: &[Qual], out: &mut String) {
        for q in qs {
            out.push('[');
            self.qual(q, out);
            out.push(']');
        }
    }

    fn qual(&self, q: &Qual, out: &mut String) {
        for (name, m) in self.abbrev.quals {
            if q == *m {
                out.push('{');
                out.push_str(name);
                out.push('}');
                return;
            }
        }
        match q {
            Qual::Path(p) => self.path(p, out),
            Qual::TextEquals(p, c) => {
                self.path(p, out);
                let _ = write!(out, " = '{c}'");
            }
            Qual::NodeEquals(p, l) => {
                self.path(p, out);
                out.push_str(" = self::");
                label(l, out);
            }
            Qual::Position(n) => {
                let _ = write!(out, "{n}");
            }
            Qual::And(a, b) => {
                self.qual_wrapped(a, matches!(**a, Qual::Or(..)), out);
                out.push_str(" and ");
                self.qual_wrapped(b, matches!(**b, Qual::Or(..) | Qual::And(..)), out);
            }
            Qual::Or(a, b) => {
                self.qual(a, out);
                out.push_str(" or ");
                self.qual_wrapped(b, matches!(**b, Qual::Or(..)), out);
            }
            Qual::Not(a) => {
                out.push_str("not(");
                self.qual(a, out);
                out.push(')');
            }
            Qual::True => out.push_str("true()"),
            Qual::False => out.push_str("false()"),
        }
    }

    fn qual_wrapped(&self, q: &Qual, wrap: bool, out: &mut String) {
        if wrap {
            out.push('(');
            self.qual(q, out);
            out.push(')');
        } else {
            self.qual(q, out);
        }
    }
}

fn label(l: &Label, out: &mut String) {
    match l {
        Label::Name(n) => out.push_str(n),
        Label::Wildcard => out.push('*'),
    }
}

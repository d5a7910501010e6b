use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{features_of_path, features_of_qual, Axis, Features, Label, Path, Qual, Step};
use crate::dtd::{is_name_char, is_name_start};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum XPathError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("outside the downward fragment: {0}")]
    Fragment(String),
}

/// Named sub-expressions that `{name}` placeholders expand to.
pub trait Macros {
    fn qual(&self, name: &str) -> Option<Qual>;
    fn step(&self, name: &str) -> Option<Step>;
}

struct NoMacros;

impl Macros for NoMacros {
    fn qual(&self, _: &str) -> Option<Qual> {
        None
    }
    fn step(&self, _: &str) -> Option<Step> {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Int(usize),
    Str(String),
    Macro(String),
    DColon,
    Slash,
    Pipe,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Eq,
    Star,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, XPathError> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let err = |pos: usize, msg: &str| XPathError::Syntax { pos, msg: msg.to_string() };
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b':' if b.get(i + 1) == Some(&b':') => {
                i += 2;
                Tok::DColon
            }
            b'/' => {
                if b.get(i + 1) == Some(&b'/') {
                    return Err(err(i, "abbreviated `//` is not supported"));
                }
                i += 1;
                Tok::Slash
            }
            b'|' => {
                i += 1;
                Tok::Pipe
            }
            b'[' => {
                i += 1;
                Tok::LBrack
            }
            b']' => {
                i += 1;
                Tok::RBrack
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'=' => {
                i += 1;
                Tok::Eq
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'\'' => {
                let end = src[i + 1..].find('\'').ok_or_else(|| err(i, "unterminated string"))?;
                let s = src[i + 1..i + 1 + end].to_string();
                i += end + 2;
                Tok::Str(s)
            }
            b'{' => {
                let end = src[i + 1..].find('}').ok_or_else(|| err(i, "unterminated `{`"))?;
                let s = src[i + 1..i + 1 + end].trim().to_string();
                i += end + 2;
                Tok::Macro(s)
            }
            c if c.is_ascii_digit() => {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Int(src[start..i].parse().map_err(|_| err(start, "integer out of range"))?)
            }
            c if is_name_start(c) => {
                while i < b.len() && is_name_char(b[i]) {
                    i += 1;
                }
                Tok::Name(src[start..i].to_string())
            }
            b'@' => return Err(err(i, "attributes are not supported")),
            _ => return Err(err(i, "unexpected character")),
        };
        out.push((tok, start));
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'m> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    macros: &'m dyn Macros,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T, XPathError> {
        Err(XPathError::Syntax { pos: self.offset(), msg: msg.to_string() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), XPathError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(&alloc::format!("expected {what}"))
        }
    }

    fn union(&mut self) -> Result<Path, XPathError> {
        let mut branches = alloc::vec![self.path()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            branches.push(self.path()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap_or_else(|| unreachable!()) } else { Path::Union(branches) })
    }

    fn path(&mut self) -> Result<Path, XPathError> {
        let mut p = self.pstep()?;
        while *self.peek() == Tok::Slash {
            self.bump();
            let r = self.pstep()?;
            p = Path::Slash(Box::new(p), Box::new(r));
        }
        Ok(p)
    }

    fn pstep(&mut self) -> Result<Path, XPathError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.union()?;
                self.expect(Tok::RParen, "`)`")?;
                let quals = self.quals()?;
                Ok(Path::Filter(Box::new(inner), quals))
            }
            Tok::Macro(m) => {
                let Some(mut s) = self.macros.step(&m) else {
                    return self.err(&alloc::format!("unknown path macro `{{{m}}}`"));
                };
                self.bump();
                s.quals.extend(self.quals()?);
                Ok(Path::Step(s))
            }
            Tok::Name(n) => {
                let Some(axis) = Axis::from_keyword(&n) else {
                    return self.err(&alloc::format!("unknown axis `{n}`"));
                };
                self.bump();
                self.expect(Tok::DColon, "`::`")?;
                let label = self.label()?;
                let quals = self.quals()?;
                Ok(Path::Step(Step { axis, label, quals }))
            }
            _ => self.err("expected a step"),
        }
    }

    fn label(&mut self) -> Result<Label, XPathError> {
        let l = match self.peek() {
            Tok::Star => Label::Wildcard,
            Tok::Name(n) => Label::Name(n.clone()),
            _ => return self.err("expected a name or `*`"),
        };
        self.bump();
        Ok(l)
    }

    fn quals(&mut self) -> Result<Vec<Qual>, XPathError> {
        let mut out = Vec::new();
        while *self.peek() == Tok::LBrack {
            self.bump();
            if let (Tok::Int(n), Tok::RBrack) = (self.peek().clone(), self.peek_at(1).clone()) {
                if n == 0 {
                    return self.err("positions start at 1");
                }
                self.bump();
                self.bump();
                out.push(Qual::Position(n));
                continue;
            }
            let q = self.disj()?;
            self.expect(Tok::RBrack, "`]`")?;
            out.push(q);
        }
        Ok(out)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == w)
    }

    fn disj(&mut self) -> Result<Qual, XPathError> {
        let mut q = self.conj()?;
        while self.is_word("or") {
            self.bump();
            q = Qual::or(q, self.conj()?);
        }
        Ok(q)
    }

    fn conj(&mut self) -> Result<Qual, XPathError> {
        let mut q = self.atom()?;
        while self.is_word("and") {
            self.bump();
            q = Qual::and(q, self.atom()?);
        }
        Ok(q)
    }

    fn atom(&mut self) -> Result<Qual, XPathError> {
        if let (Tok::Name(n), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            match n.as_str() {
                "not" => {
                    self.bump();
                    self.bump();
                    let q = self.disj()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Qual::not(q));
                }
                "true" | "false" => {
                    self.bump();
                    self.bump();
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(if n == "true" { Qual::True } else { Qual::False });
                }
                _ => {}
            }
        }
        if let Tok::Macro(m) = self.peek().clone() {
            if let Some(q) = self.macros.qual(&m) {
                self.bump();
                return Ok(q);
            }
        }
        if *self.peek() == Tok::LParen {
            let save = self.pos;
            if let Ok(q) = self.comparison() {
                return Ok(q);
            }
            self.pos = save;
            self.bump();
            let q = self.disj()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(q);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Qual, XPathError> {
        let p = self.union()?;
        if *self.peek() != Tok::Eq {
            if !matches!(self.peek(), Tok::RBrack | Tok::RParen | Tok::End) && !self.is_word("and") && !self.is_word("or") {
                return self.err("unexpected token after path");
            }
            return Ok(Qual::Path(p));
        }
        self.bump();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Qual::TextEquals(p, s))
            }
            Tok::Name(n) if n == "self" && *self.peek_at(1) == Tok::DColon => {
                self.bump();
                self.bump();
                let l = self.label()?;
                Ok(Qual::NodeEquals(p, l))
            }
            _ => self.err("expected a quoted string or `self::label` after `=`"),
        }
    }
}

fn parse_impl(text: &str, macros: &dyn Macros) -> Result<Path, XPathError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, macros };
    let path = p.union()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(path)
}

/// Parses a query in the extended fragment.
pub fn parse_xpath(text: &str) -> Result<Path, XPathError> {
    parse_impl(text, &NoMacros)
}

/// Parses a query and rejects anything outside the downward fragment.
pub fn parse_xpath_x(text: &str) -> Result<Path, XPathError> {
    let p = parse_xpath(text)?;
    check_downward(&p)?;
    Ok(p)
}

pub fn parse_with_macros(text: &str, macros: &dyn Macros) -> Result<Path, XPathError> {
    parse_impl(text, macros)
}

/// Parses a qualifier expression (the text between `[` and `]`).
pub fn parse_qual(text: &str) -> Result<Qual, XPathError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, macros: &NoMacros };
    let q = p.disj()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(q)
}

pub(crate) fn check_downward(p: &Path) -> Result<(), XPathError> {
    downward_only(features_of_path(p))
}

pub(crate) fn check_downward_qual(q: &Qual) -> Result<(), XPathError> {
    downward_only(features_of_qual(q))
}

fn downward_only(f: Features) -> Result<(), XPathError> {
    if f.other_axis || f.ancestor_or_self {
        return Err(XPathError::Fragment("only child, descendant and self axes are allowed".into()));
    }
    if f.position {
        return Err(XPathError::Fragment("position predicates are not allowed".into()));
    }
    if f.node_eq {
        return Err(XPathError::Fragment("node comparison is not allowed".into()));
    }
    Ok(())
}

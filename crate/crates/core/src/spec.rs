//! Access specifications: partial annotations of DTD edges.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dtd::Dtd;
use crate::xpath::{check_downward_qual, parse_qual, serialize_qual, Qual, XPathError};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AnnValue {
    /// `Y`
    Allow,
    /// `N`: hidden, but annotations below may grant access again.
    Deny,
    /// `[Q]`
    Cond(Qual),
    /// `N_h`: hidden together with everything below.
    DenyDown,
    /// `[Q]_h`: when `Q` fails, hidden together with everything below.
    CondDown(Qual),
}

impl AnnValue {
    pub fn qualifier(&self) -> Option<&Qual> {
        match self {
            AnnValue::Cond(q) | AnnValue::CondDown(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_downward_closed(&self) -> bool {
        matches!(self, AnnValue::DenyDown | AnnValue::CondDown(_))
    }
}

impl fmt::Display for AnnValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnValue::Allow => f.write_str("Y"),
            AnnValue::Deny => f.write_str("N"),
            AnnValue::DenyDown => f.write_str("N_h"),
            AnnValue::Cond(q) => write!(f, "[{}]", serialize_qual(q)),
            AnnValue::CondDown(q) => write!(f, "[{}]_h", serialize_qual(q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub parent: String,
    pub child: String,
    pub value: AnnValue,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("({0},{1}) is not an edge of the DTD")]
    UnknownEdge(String, String),
    #[error("annotation of ({0},{1}) appears twice")]
    DuplicateAnnotation(String, String),
    #[error("qualifier of ({parent},{child}): {source}")]
    Qualifier { parent: String, child: String, source: XPathError },
    #[error("unbound variable `${0}`")]
    UnboundVariable(String),
    #[error("the root can only be annotated Y, got ann({0})={1}")]
    RootAnnotation(String, String),
}

/// A DTD together with its edge annotations, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessSpec {
    dtd: Dtd,
    entries: Vec<Annotation>,
    lookup: BTreeMap<(usize, usize), usize>,
}

impl AccessSpec {
    pub fn new(dtd: Dtd, entries: Vec<Annotation>) -> Result<AccessSpec, SpecError> {
        let mut lookup = BTreeMap::new();
        for (i, a) in entries.iter().enumerate() {
            let (Some(p), Some(c)) = (dtd.index_of(&a.parent), dtd.index_of(&a.child)) else {
                return Err(SpecError::UnknownEdge(a.parent.clone(), a.child.clone()));
            };
            if !dtd.has_edge(&a.parent, &a.child) {
                return Err(SpecError::UnknownEdge(a.parent.clone(), a.child.clone()));
            }
            if let Some(q) = a.value.qualifier() {
                check_downward_qual(q).map_err(|e| SpecError::Qualifier { parent: a.parent.clone(), child: a.child.clone(), source: e })?;
            }
            if lookup.insert((p, c), i).is_some() {
                return Err(SpecError::DuplicateAnnotation(a.parent.clone(), a.child.clone()));
            }
        }
        Ok(AccessSpec { dtd, entries, lookup })
    }

    pub fn dtd(&self) -> &Dtd {
        &self.dtd
    }

    pub fn entries(&self) -> &[Annotation] {
        &self.entries
    }

    pub fn get(&self, parent: &str, child: &str) -> Option<&AnnValue> {
        let p = self.dtd.index_of(parent)?;
        let c = self.dtd.index_of(child)?;
        self.get_idx(p, c)
    }

    pub fn get_idx(&self, parent: usize, child: usize) -> Option<&AnnValue> {
        self.lookup.get(&(parent, child)).map(|&i| &self.entries[i].value)
    }

    /// True when only `Y`, `N` and `[Q]` occur.
    pub fn uses_only_basic_values(&self) -> bool {
        self.entries.iter().all(|a| matches!(a.value, AnnValue::Allow | AnnValue::Deny | AnnValue::Cond(_)))
    }
}

/// Reads `[Q]` with the downward-closed meaning (`[Q]_h`). `N` is left as is.
pub fn compat_mode(s: &AccessSpec) -> AccessSpec {
    let entries = s
        .entries
        .iter()
        .map(|a| Annotation {
            parent: a.parent.clone(),
            child: a.child.clone(),
            value: match &a.value {
                AnnValue::Cond(q) => AnnValue::CondDown(q.clone()),
                v => v.clone(),
            },
        })
        .collect();
    AccessSpec { dtd: s.dtd.clone(), entries, lookup: s.lookup.clone() }
}

pub fn parse_spec(text: &str, dtd: &Dtd) -> Result<AccessSpec, SpecError> {
    parse_spec_with_vars(text, dtd, &[])
}

/// Parses annotations after replacing each `$name` with its bound text.
pub fn parse_spec_with_vars(text: &str, dtd: &Dtd, vars: &[(String, String)]) -> Result<AccessSpec, SpecError> {
    let text = substitute(text, vars)?;
    let mut entries = Vec::new();
    let mut sc = Scanner { src: &text, pos: 0, line: 1 };
    loop {
        sc.skip_separators();
        if sc.at_end() {
            break;
        }
        let line = sc.line;
        sc.expect("ann")?;
        sc.ws();
        sc.expect("(")?;
        let parent = sc.name()?;
        sc.ws();
        let child = if sc.eat(",") {
            Some(sc.name()?)
        } else {
            None
        };
        sc.ws();
        sc.expect(")")?;
        sc.ws();
        sc.expect("=")?;
        sc.ws();
        let value = sc.value(&parent, child.as_deref().unwrap_or(""))?;
        match child {
            None => {
                if parent != dtd.root() || value != AnnValue::Allow {
                    return Err(SpecError::RootAnnotation(parent, value.to_string()));
                }
            }
            Some(child) => entries.push(Annotation { parent, child, value }),
        }
        sc.ws_inline();
        if !(sc.at_end() || sc.peek() == Some('\n') || sc.peek() == Some(';') || sc.peek() == Some('#')) {
            return Err(SpecError::Syntax { line, msg: "expected end of annotation".into() });
        }
    }
    AccessSpec::new(dtd.clone(), entries)
}

pub fn serialize_spec(s: &AccessSpec) -> String {
    let mut out = String::new();
    for a in &s.entries {
        out.push_str(&alloc::format!("ann({},{}) = {}\n", a.parent, a.child, a.value));
    }
    out
}

fn substitute(text: &str, vars: &[(String, String)]) -> Result<String, SpecError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let after = &rest[i + 1..];
        let len = after.bytes().take_while(|&c| c.is_ascii_alphanumeric() || c == b'_').count();
        let name = &after[..len];
        match vars.iter().find(|(k, _)| k == name) {
            Some((_, v)) => out.push_str(v),
            None => return Err(SpecError::UnboundVariable(name.to_string())),
        }
        rest = &after[len..];
    }
    out.push_str(rest);
    Ok(out)
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl Scanner<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            if c == '\n' {
                self.line += 1;
            }
            self.pos += c.len_utf8();
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, SpecError> {
        Err(SpecError::Syntax { line: self.line, msg: msg.to_string() })
    }

    fn skip_separators(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == ';' {
                self.bump();
            } else if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn ws_inline(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t' || c == '\r') {
            self.bump();
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.src[self.pos..].starts_with(lit) {
            for _ in 0..lit.chars().count() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), SpecError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(&alloc::format!("expected `{lit}`"))
        }
    }

    fn name(&mut self) -> Result<String, SpecError> {
        self.ws();
        let start = self.pos;
        let b = self.src.as_bytes();
        if !b.get(self.pos).is_some_and(|&c| crate::dtd::is_name_start(c)) {
            return self.err("expected an element name");
        }
        while b.get(self.pos).is_some_and(|&c| crate::dtd::is_name_char(c)) {
            self.pos += 1;
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn value(&mut self, parent: &str, child: &str) -> Result<AnnValue, SpecError> {
        if self.eat("N_h") {
            return Ok(AnnValue::DenyDown);
        }
        if self.eat("Y") {
            return Ok(AnnValue::Allow);
        }
        if self.eat("N") {
            return Ok(AnnValue::Deny);
        }
        if self.peek() != Some('[') {
            return self.err("expected Y, N, N_h, [Q] or [Q]_h");
        }
        self.bump();
        let start = self.pos;
        let mut depth = 0usize;
        let mut quoted = false;
        loop {
            match self.peek() {
                None => return self.err("unterminated qualifier"),
                Some('\'') => quoted = !quoted,
                Some('[') if !quoted => depth += 1,
                Some(']') if !quoted => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            self.bump();
        }
        let text = &self.src[start..self.pos];
        self.bump();
        let q = parse_qual(text).map_err(|e| SpecError::Qualifier { parent: parent.into(), child: child.into(), source: e })?;
        Ok(if self.eat("_h") { AnnValue::CondDown(q) } else { AnnValue::Cond(q) })
    }
}

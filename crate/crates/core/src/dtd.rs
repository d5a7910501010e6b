//! DTD model: element types, content models, root, and reachability.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::typeset::TypeSet;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContentModel {
    Text,
    Empty,
    Name(String),
    Seq(Vec<ContentModel>),
    Alt(Vec<ContentModel>),
    Star(Box<ContentModel>),
}

impl ContentModel {
    pub fn name(n: &str) -> Self {
        ContentModel::Name(n.to_string())
    }

    pub fn star(m: ContentModel) -> Self {
        ContentModel::Star(Box::new(m))
    }

    /// Element names in order of first occurrence.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.walk_names(&mut |n| {
            if !out.contains(&n) {
                out.push(n);
            }
        });
        out
    }

    fn walk_names<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            ContentModel::Name(n) => f(n),
            ContentModel::Seq(xs) | ContentModel::Alt(xs) => xs.iter().for_each(|x| x.walk_names(f)),
            ContentModel::Star(x) => x.walk_names(f),
            ContentModel::Text | ContentModel::Empty => {}
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            ContentModel::Seq(xs) | ContentModel::Alt(xs) => 1 + xs.iter().map(|x| x.size()).sum::<usize>(),
            ContentModel::Star(x) => 1 + x.size(),
            _ => 1,
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            ContentModel::Text | ContentModel::Empty | ContentModel::Star(_) => true,
            ContentModel::Name(_) => false,
            ContentModel::Seq(xs) => xs.iter().all(|x| x.nullable()),
            ContentModel::Alt(xs) => xs.iter().any(|x| x.nullable()),
        }
    }

    fn check_shape(&self, top: bool) -> Result<(), String> {
        match self {
            ContentModel::Text if top => Ok(()),
            ContentModel::Text => Err("#PCDATA mixed with element content".into()),
            ContentModel::Empty | ContentModel::Name(_) => Ok(()),
            ContentModel::Seq(xs) | ContentModel::Alt(xs) => {
                if xs.len() < 2 {
                    return Err("sequence or choice with fewer than two members".into());
                }
                xs.iter().try_for_each(|x| x.check_shape(false))
            }
            ContentModel::Star(x) => x.check_shape(false),
        }
    }
}

impl fmt::Display for ContentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContentModel::Text => f.write_str("(#PCDATA)"),
            ContentModel::Empty => f.write_str("EMPTY"),
            ContentModel::Name(_) | ContentModel::Star(_) => write!(f, "({})", Inner(self)),
            _ => write!(f, "{}", Inner(self)),
        }
    }
}

struct Inner<'a>(&'a ContentModel);

impl fmt::Display for Inner<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            ContentModel::Text => f.write_str("#PCDATA"),
            ContentModel::Empty => f.write_str("EMPTY"),
            ContentModel::Name(n) => f.write_str(n),
            ContentModel::Seq(xs) | ContentModel::Alt(xs) => {
                let sep = if matches!(self.0, ContentModel::Seq(_)) { "," } else { "|" };
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{}", Inner(x))?;
                }
                f.write_str(")")
            }
            ContentModel::Star(x) => match **x {
                ContentModel::Name(_) | ContentModel::Seq(_) | ContentModel::Alt(_) => write!(f, "{}*", Inner(x)),
                _ => write!(f, "({})*", Inner(x)),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DtdError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("element type `{0}` is used but never declared")]
    UndeclaredType(String),
    #[error("no element declarations")]
    NoRoot,
    #[error("element type `{0}` is not reachable from the root")]
    UnreachableType(String),
    #[error("element type `{0}` is declared twice")]
    DuplicateDeclaration(String),
    #[error("element type `{0}`: {1}")]
    BadContent(String, String),
    #[error("root type `{0}` occurs inside a content model")]
    RootReferenced(String),
}

/// A DTD `(Ele, P, root)`. The root is the first declared type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dtd {
    types: Vec<String>,
    productions: Vec<ContentModel>,
    index: BTreeMap<String, usize>,
}

impl Dtd {
    pub fn new(decls: Vec<(String, ContentModel)>) -> Result<Dtd, DtdError> {
        if decls.is_empty() {
            return Err(DtdError::NoRoot);
        }
        let mut index = BTreeMap::new();
        let mut types = Vec::with_capacity(decls.len());
        let mut productions = Vec::with_capacity(decls.len());
        for (i, (name, model)) in decls.into_iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(DtdError::DuplicateDeclaration(name));
            }
            model.check_shape(true).map_err(|m| DtdError::BadContent(name.clone(), m))?;
            types.push(name);
            productions.push(model);
        }
        let d = Dtd { types, productions, index };
        for p in &d.productions {
            for n in p.names() {
                if !d.index.contains_key(n) {
                    return Err(DtdError::UndeclaredType(n.to_string()));
                }
                if n == d.types[0] {
                    return Err(DtdError::RootReferenced(n.to_string()));
                }
            }
        }
        let mut seen = TypeSet::singleton(0);
        let mut stack = alloc::vec![0usize];
        while let Some(t) = stack.pop() {
            for c in d.child_indexes(t) {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        if let Some(i) = (0..d.types.len()).find(|&i| !seen.contains(i)) {
            return Err(DtdError::UnreachableType(d.types[i].clone()));
        }
        Ok(d)
    }

    pub fn root(&self) -> &str {
        &self.types[0]
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.types[i]
    }

    pub fn production(&self, name: &str) -> Option<&ContentModel> {
        self.index_of(name).map(|i| &self.productions[i])
    }

    pub fn production_at(&self, i: usize) -> &ContentModel {
        &self.productions[i]
    }

    /// Child types of `t` in declaration order.
    pub fn child_indexes(&self, t: usize) -> Vec<usize> {
        let set: TypeSet = self.productions[t].names().into_iter().map(|n| self.index[n]).collect();
        set.iter().collect()
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.production(parent).is_some_and(|p| p.names().contains(&child))
    }

    /// Total size of all productions.
    pub fn size(&self) -> usize {
        self.productions.iter().map(|p| p.size()).sum()
    }
}

/// Parses `<!ELEMENT name content>` declarations.
pub fn parse_dtd(text: &str) -> Result<Dtd, DtdError> {
    let mut p = DtdParser { src: text.as_bytes(), pos: 0 };
    let mut decls = Vec::new();
    loop {
        p.skip_ws_and_comments()?;
        if p.pos >= p.src.len() {
            break;
        }
        p.expect_lit("<!ELEMENT")?;
        p.require_ws()?;
        let name = p.name()?;
        p.require_ws()?;
        let model = p.content(&name)?;
        p.skip_ws();
        p.expect_lit(">")?;
        decls.push((name, model));
    }
    Dtd::new(decls)
}

pub fn serialize_dtd(d: &Dtd) -> String {
    let mut out = String::new();
    for (n, p) in d.types.iter().zip(&d.productions) {
        out.push_str("<!ELEMENT ");
        out.push_str(n);
        out.push(' ');
        out.push_str(&p.to_string());
        out.push_str(">\n");
    }
    out
}

struct DtdParser<'a> {
    src: &'a [u8],
    pos: usize,
}

pub(crate) fn is_name_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_' || c >= 0x80
}

pub(crate) fn is_name_char(c: u8) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == b'-' || c == b'.'
}

impl DtdParser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DtdError> {
        Err(DtdError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn skip_ws_and_comments(&mut self) -> Result<(), DtdError> {
        loop {
            self.skip_ws();
            if self.src[self.pos..].starts_with(b"<!--") {
                match find(&self.src[self.pos + 4..], b"-->") {
                    Some(i) => self.pos += 4 + i + 3,
                    None => return self.err("unterminated comment"),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn require_ws(&mut self) -> Result<(), DtdError> {
        if !self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            return self.err("expected whitespace");
        }
        self.skip_ws();
        Ok(())
    }

    fn expect_lit(&mut self, lit: &str) -> Result<(), DtdError> {
        if self.src[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(alloc::format!("expected `{lit}`"))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String, DtdError> {
        let start = self.pos;
        if !self.peek().is_some_and(is_name_start) {
            return self.err("expected a name");
        }
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        Ok(String::from(core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")))
    }

    fn content(&mut self, owner: &str) -> Result<ContentModel, DtdError> {
        if self.src[self.pos..].starts_with(b"EMPTY") {
            self.pos += 5;
            return Ok(ContentModel::Empty);
        }
        if self.src[self.pos..].starts_with(b"ANY") {
            return self.err("ANY content is not supported");
        }
        let save = self.pos;
        if self.eat(b'(') {
            self.skip_ws();
            if self.src[self.pos..].starts_with(b"#PCDATA") {
                self.pos += 7;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(DtdError::BadContent(owner.into(), "mixed content is not supported".into()));
                }
                self.eat(b'*');
                return Ok(ContentModel::Text);
            }
            self.pos = save;
        }
        if self.peek() != Some(b'(') {
            return self.err("expected `EMPTY`, `(#PCDATA)` or a parenthesised group");
        }
        self.cm()
    }

    fn cm(&mut self) -> Result<ContentModel, DtdError> {
        self.skip_ws();
        let base = if self.eat(b'(') {
            let mut items = alloc::vec![self.cm()?];
            let mut sep = None;
            loop {
                self.skip_ws();
                match self.peek() {
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c @ (b',' | b'|')) => {
                        if sep.is_some_and(|s| s != c) {
                            return self.err("cannot mix `,` and `|` in one group");
                        }
                        sep = Some(c);
                        self.pos += 1;
                        items.push(self.cm()?);
                    }
                    _ => return self.err("expected `,`, `|` or `)`"),
                }
            }
            match sep {
                None => items.pop().unwrap_or(ContentModel::Empty),
                Some(b',') => ContentModel::Seq(items),
                Some(_) => ContentModel::Alt(items),
            }
        } else if self.src[self.pos..].starts_with(b"#PCDATA") {
            return self.err("#PCDATA is only allowed as the whole content model");
        } else {
            let n = self.name()?;
            if n == "EMPTY" {
                return Ok(ContentModel::Empty);
            }
            ContentModel::Name(n)
        };
        Ok(match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                ContentModel::star(base)
            }
            Some(b'?') => {
                self.pos += 1;
                ContentModel::Alt(alloc::vec![base, ContentModel::Empty])
            }
            Some(b'+') => {
                self.pos += 1;
                ContentModel::Seq(alloc::vec![base.clone(), ContentModel::star(base)])
            }
            _ => base,
        })
    }
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

/// Children, descendants, parents and ancestors per type, by index.
#[derive(Clone, Debug)]
pub struct ReachIndex {
    children: Vec<TypeSet>,
    descendants: Vec<TypeSet>,
    parents: Vec<TypeSet>,
    ancestors: Vec<TypeSet>,
}

impl ReachIndex {
    pub fn children(&self, t: usize) -> &TypeSet {
        &self.children[t]
    }

    pub fn descendants(&self, t: usize) -> &TypeSet {
        &self.descendants[t]
    }

    pub fn parents(&self, t: usize) -> &TypeSet {
        &self.parents[t]
    }

    pub fn ancestors(&self, t: usize) -> &TypeSet {
        &self.ancestors[t]
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }
}

pub fn build_reach_index(d: &Dtd) -> ReachIndex {
    let n = d.len();
    let children: Vec<TypeSet> = (0..n).map(|t| d.child_indexes(t).into_iter().collect()).collect();
    let mut parents = alloc::vec![TypeSet::new(); n];
    for (p, cs) in children.iter().enumerate() {
        for c in cs.iter() {
            parents[c].insert(p);
        }
    }
    let descendants = closure(&children);
    let ancestors = closure(&parents);
    ReachIndex { children, descendants, parents, ancestors }
}

fn closure(step: &[TypeSet]) -> Vec<TypeSet> {
    (0..step.len())
        .map(|t| {
            let mut acc = step[t].clone();
            let mut frontier: Vec<usize> = acc.iter().collect();
            while let Some(x) = frontier.pop() {
                for y in step[x].iter() {
                    if acc.insert(y) {
                        frontier.push(y);
                    }
                }
            }
            acc
        })
        .collect()
}

pub fn is_recursive(d: &Dtd) -> bool {
    let r = build_reach_index(d);
    (0..d.len()).any(|t| r.descendants(t).contains(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EX21_VIEW: &str = "<!ELEMENT root (A)><!ELEMENT A (D|EMPTY)><!ELEMENT D EMPTY>";

    #[test]
    fn parses_view_with_empty_alternative() {
        let d = parse_dtd(EX21_VIEW).unwrap();
        assert_eq!(d.root(), "root");
        assert_eq!(d.production("root"), Some(&ContentModel::name("A")));
        assert_eq!(
            d.production("A"),
            Some(&ContentModel::Alt(vec![ContentModel::name("D"), ContentModel::Empty]))
        );
        assert_eq!(d.production("D"), Some(&ContentModel::Empty));
    }

    #[test]
    fn minimal_dtd() {
        let d = parse_dtd("<!ELEMENT r EMPTY>").unwrap();
        assert_eq!(d.root(), "r");
        assert_eq!(d.production_at(0), &ContentModel::Empty);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_dtd("<!ELEMENT r (B)>"), Err(DtdError::UndeclaredType("B".into())));
        assert_eq!(parse_dtd("  "), Err(DtdError::NoRoot));
        assert_eq!(
            parse_dtd("<!ELEMENT r EMPTY><!ELEMENT x EMPTY>"),
            Err(DtdError::UnreachableType("x".into()))
        );
        assert!(matches!(parse_dtd("<!ELEMENT r (a,b|c)>"), Err(DtdError::Syntax { .. })));
        assert!(matches!(parse_dtd("<!ELEMENT r (#PCDATA|a)*><!ELEMENT a EMPTY>"), Err(DtdError::BadContent(..))));
        assert_eq!(
            parse_dtd("<!ELEMENT r (a)><!ELEMENT a (r)>"),
            Err(DtdError::RootReferenced("r".into()))
        );
        assert_eq!(
            parse_dtd("<!ELEMENT r EMPTY><!ELEMENT r EMPTY>"),
            Err(DtdError::DuplicateDeclaration("r".into()))
        );
    }

    #[test]
    fn desugars_optional_and_plus() {
        let d = parse_dtd("<!ELEMENT r (a?, b+)><!ELEMENT a EMPTY><!ELEMENT b (#PCDATA)>").unwrap();
        let a = ContentModel::name("a");
        let b = ContentModel::name("b");
        assert_eq!(
            d.production("r").unwrap(),
            &ContentModel::Seq(vec![
                ContentModel::Alt(vec![a, ContentModel::Empty]),
                ContentModel::Seq(vec![b.clone(), ContentModel::star(b)]),
            ])
        );
        assert_eq!(d.production("b"), Some(&ContentModel::Text));
    }

    #[test]
    fn reach_of_example_view() {
        let d = parse_dtd(EX21_VIEW).unwrap();
        let r = build_reach_index(&d);
        let names = |s: &TypeSet| s.iter().map(|i| d.name(i).to_string()).collect::<Vec<_>>();
        assert_eq!(names(r.children(0)), ["A"]);
        assert_eq!(names(r.descendants(0)), ["A", "D"]);
        assert_eq!(names(r.ancestors(2)), ["root", "A"]);
        assert!(!is_recursive(&d));
    }

    #[test]
    fn self_recursion() {
        let d = parse_dtd("<!ELEMENT r (A)><!ELEMENT A (A|EMPTY)>").unwrap();
        let r = build_reach_index(&d);
        assert!(r.descendants(1).contains(1));
        assert!(is_recursive(&d));
    }

    #[test]
    fn comments_between_declarations() {
        let d = parse_dtd("<!-- x --><!ELEMENT r (a)*>\n<!-- y -->\n<!ELEMENT a EMPTY>").unwrap();
        assert_eq!(d.production("r"), Some(&ContentModel::star(ContentModel::name("a"))));
    }

    fn naive_descendants(d: &Dtd) -> Vec<Vec<bool>> {
        let n = d.len();
        let mut m = vec![vec![false; n]; n];
        for (t, row) in m.iter_mut().enumerate() {
            for c in d.child_indexes(t) {
                row[c] = true;
            }
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
        m
    }

    fn arb_model(n_types: usize) -> impl Strategy<Value = ContentModel> {
        let leaf = prop_oneof![
            (1..n_types).prop_map(|i| ContentModel::Name(format!("t{i}"))),
            Just(ContentModel::Empty),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(ContentModel::Seq),
                prop::collection::vec(inner.clone(), 2..4).prop_map(ContentModel::Alt),
                inner.prop_map(ContentModel::star),
            ]
        })
    }

    fn arb_dtd() -> impl Strategy<Value = Dtd> {
        (2usize..12).prop_flat_map(|n| {
            prop::collection::vec(arb_model(n), n).prop_filter_map("unreachable", move |models| {
                let decls = models
                    .into_iter()
                    .enumerate()
                    .map(|(i, m)| (if i == 0 { "root".to_string() } else { format!("t{i}") }, m))
                    .collect();
                Dtd::new(decls).ok()
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip(d in arb_dtd()) {
            let text = serialize_dtd(&d);
            prop_assert_eq!(parse_dtd(&text).unwrap(), d);
        }

        #[test]
        #[allow(clippy::needless_range_loop)]
        fn descendants_match_warshall(d in arb_dtd()) {
            let r = build_reach_index(&d);
            let m = naive_descendants(&d);
            for t in 0..d.len() {
                prop_assert!(r.children(t).is_subset(r.descendants(t)));
                for u in 0..d.len() {
                    prop_assert_eq!(r.descendants(t).contains(u), m[t][u]);
                    prop_assert_eq!(r.ancestors(u).contains(t), m[t][u]);
                }
            }
        }
    }
}

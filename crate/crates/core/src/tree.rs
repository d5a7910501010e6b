//! Ordered labeled trees of element and text nodes.
//!
//! Node ids are assigned in document (pre)order, so `n < m` iff `n` precedes
//! `m`, and the descendants of `n` are exactly the ids in `n+1..end(n)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dtd::{is_name_char, is_name_start};

pub type NodeId = u32;
pub type LabelId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Element(LabelId),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// One past the last descendant.
    pub end: NodeId,
}

#[derive(Clone, Debug)]
pub struct XmlTree {
    nodes: Vec<Node>,
    labels: Vec<String>,
    label_ids: BTreeMap<String, LabelId>,
    by_label: Vec<Vec<NodeId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum XmlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported XML feature at byte {pos}: {what}")]
    UnsupportedFeature { pos: usize, what: String },
}

/// Builds a tree in document order.
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
    labels: Vec<String>,
    label_ids: BTreeMap<String, LabelId>,
    open: Vec<NodeId>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, label: &str) -> NodeId {
        let lid = match self.label_ids.get(label) {
            Some(&l) => l,
            None => {
                let l = self.labels.len() as LabelId;
                self.labels.push(label.to_string());
                self.label_ids.insert(label.to_string(), l);
                l
            }
        };
        self.push(NodeKind::Element(lid))
    }

    fn push(&mut self, kind: NodeKind) -> NodeId {
        let id = self.nodes.len() as NodeId;
        let parent = self.open.last().copied();
        if let Some(p) = parent {
            self.nodes[p as usize].children.push(id);
        }
        let is_elem = matches!(kind, NodeKind::Element(_));
        self.nodes.push(Node { kind, parent, children: Vec::new(), end: id + 1 });
        if is_elem {
            self.open.push(id);
        }
        id
    }

    /// Appends a text leaf to the open element, merging with a preceding leaf.
    pub fn text(&mut self, s: &str) {
        let Some(&p) = self.open.last() else { return };
        if let Some(&last) = self.nodes[p as usize].children.last() {
            if let NodeKind::Text(t) = &mut self.nodes[last as usize].kind {
                t.push_str(s);
                return;
            }
        }
        self.push(NodeKind::Text(s.to_string()));
    }

    pub fn close(&mut self) {
        if let Some(id) = self.open.pop() {
            self.nodes[id as usize].end = self.nodes.len() as NodeId;
        }
    }

    pub fn depth(&self) -> usize {
        self.open.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn finish(mut self) -> XmlTree {
        while !self.open.is_empty() {
            self.close();
        }
        let mut by_label = alloc::vec![Vec::new(); self.labels.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let NodeKind::Element(l) = n.kind {
                by_label[l as usize].push(i as NodeId);
            }
        }
        XmlTree { nodes: self.nodes, labels: self.labels, label_ids: self.label_ids, by_label }
    }
}

impl XmlTree {
    pub const ROOT: NodeId = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n as usize].parent
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n as usize].children
    }

    pub fn end(&self, n: NodeId) -> NodeId {
        self.nodes[n as usize].end
    }

    pub fn is_element(&self, n: NodeId) -> bool {
        matches!(self.nodes[n as usize].kind, NodeKind::Element(_))
    }

    pub fn label_id(&self, n: NodeId) -> Option<LabelId> {
        match self.nodes[n as usize].kind {
            NodeKind::Element(l) => Some(l),
            NodeKind::Text(_) => None,
        }
    }

    /// Element label, or `None` for text leaves.
    pub fn label(&self, n: NodeId) -> Option<&str> {
        self.label_id(n).map(|l| self.labels[l as usize].as_str())
    }

    pub fn lookup_label(&self, name: &str) -> Option<LabelId> {
        self.label_ids.get(name).copied()
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        &self.labels[l as usize]
    }

    /// All elements with label `l`, in document order.
    pub fn elements_with_label(&self, l: LabelId) -> &[NodeId] {
        &self.by_label[l as usize]
    }

    /// Elements with label `l` strictly inside the subtree of `n`.
    pub fn descendants_with_label(&self, n: NodeId, l: LabelId) -> &[NodeId] {
        let all = &self.by_label[l as usize];
        let lo = all.partition_point(|&m| m <= n);
        let hi = all.partition_point(|&m| m < self.end(n));
        &all[lo..hi]
    }

    pub fn is_ancestor(&self, a: NodeId, n: NodeId) -> bool {
        a < n && n < self.end(a)
    }

    pub fn element_children(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.children(n).iter().copied().filter(|&c| self.is_element(c))
    }

    pub fn elements(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as NodeId).filter(|&n| self.is_element(n))
    }

    pub fn element_count(&self) -> usize {
        self.by_label.iter().map(|v| v.len()).sum()
    }

    /// Does the concatenation of `n`'s direct text children equal `c`?
    pub fn text_equals(&self, n: NodeId, c: &str) -> bool {
        let mut rest = c;
        for &ch in self.children(n) {
            if let NodeKind::Text(t) = &self.nodes[ch as usize].kind {
                match rest.strip_prefix(t.as_str()) {
                    Some(r) => rest = r,
                    None => return false,
                }
            }
        }
        rest.is_empty()
    }

    /// Concatenation of `n`'s direct text children.
    pub fn direct_text(&self, n: NodeId) -> String {
        let mut s = String::new();
        for &ch in self.children(n) {
            if let NodeKind::Text(t) = &self.nodes[ch as usize].kind {
                s.push_str(t);
            }
        }
        s
    }

    pub fn depth(&self, n: NodeId) -> usize {
        let mut d = 0;
        let mut cur = self.parent(n);
        while let Some(p) = cur {
            d += 1;
            cur = self.parent(p);
        }
        d
    }

    /// `/i/j/...` element-child indexes from the root; the root is `/`.
    pub fn path_of(&self, n: NodeId) -> String {
        let mut idx = Vec::new();
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            let i = self.element_children(p).position(|c| c == cur).unwrap_or(0);
            idx.push(i);
            cur = p;
        }
        if idx.is_empty() {
            return "/".to_string();
        }
        let mut s = String::new();
        for i in idx.iter().rev() {
            let _ = write!(s, "/{i}");
        }
        s
    }

    pub fn resolve_path(&self, path: &str) -> Option<NodeId> {
        let mut cur = Self::ROOT;
        for part in path.split('/').filter(|p| !p.is_empty()) {
            let i: usize = part.parse().ok()?;
            cur = self.element_children(cur).nth(i)?;
        }
        Some(cur)
    }

    pub fn to_xml(&self) -> String {
        let mut s = String::new();
        if !self.nodes.is_empty() {
            self.write_xml(Self::ROOT, &mut s);
        }
        s
    }

    pub fn write_xml(&self, n: NodeId, out: &mut String) {
        match &self.nodes[n as usize].kind {
            NodeKind::Text(t) => escape_into(t, out),
            NodeKind::Element(l) => {
                let name = &self.labels[*l as usize];
                out.push('<');
                out.push_str(name);
                if self.children(n).is_empty() {
                    out.push_str("/>");
                    return;
                }
                out.push('>');
                for &c in self.children(n) {
                    self.write_xml(c, out);
                }
                out.push_str("</");
                out.push_str(name);
                out.push('>');
            }
        }
    }
}

fn escape_into(t: &str, out: &mut String) {
    for ch in t.chars() {
        match ch {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            c => out.push(c),
        }
    }
}

/// Parses the element/text subset of XML. Whitespace-only text is dropped.
pub fn parse_xml(text: &str) -> Result<XmlTree, XmlError> {
    let src = text.as_bytes();
    let mut pos = 0;
    let mut b = TreeBuilder::new();
    let mut stack: Vec<String> = Vec::new();
    let mut seen_root = false;
    let syntax = |pos: usize, msg: &str| XmlError::Syntax { pos, msg: msg.to_string() };
    let unsupported = |pos: usize, what: &str| XmlError::UnsupportedFeature { pos, what: what.to_string() };

    let skip_ws = |pos: &mut usize| {
        while *pos < src.len() && src[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    skip_ws(&mut pos);
    if src[pos..].starts_with(b"<?xml") {
        match src[pos..].windows(2).position(|w| w == b"?>") {
            Some(i) => pos += i + 2,
            None => return Err(syntax(pos, "unterminated XML declaration")),
        }
    }
    while pos < src.len() {
        if src[pos] == b'<' {
            let rest = &src[pos..];
            if rest.starts_with(b"<!--") {
                return Err(unsupported(pos, "comment"));
            }
            if rest.starts_with(b"<?") {
                return Err(unsupported(pos, "processing instruction"));
            }
            if rest.starts_with(b"<!") {
                return Err(unsupported(pos, "markup declaration or CDATA"));
            }
            let closing = rest.get(1) == Some(&b'/');
            let mut p = pos + 1 + closing as usize;
            let start = p;
            if !src.get(p).is_some_and(|&c| is_name_start(c)) {
                return Err(syntax(p, "expected element name"));
            }
            while src.get(p).is_some_and(|&c| is_name_char(c)) {
                p += 1;
            }
            let name = core::str::from_utf8(&src[start..p]).unwrap_or("");
            skip_ws(&mut p);
            if closing {
                if src.get(p) != Some(&b'>') {
                    return Err(syntax(p, "expected `>`"));
                }
                match stack.pop() {
                    Some(open) if open == name => b.close(),
                    _ => return Err(syntax(pos, "mismatched closing tag")),
                }
                pos = p + 1;
            } else {
                if stack.is_empty() && seen_root {
                    return Err(syntax(pos, "more than one root element"));
                }
                let self_closing = match src.get(p) {
                    Some(b'>') => false,
                    Some(b'/') if src.get(p + 1) == Some(&b'>') => true,
                    Some(c) if is_name_start(*c) => return Err(unsupported(p, "attribute")),
                    _ => return Err(syntax(p, "expected `>` or `/>`")),
                };
                seen_root = true;
                b.open(name);
                if self_closing {
                    b.close();
                    pos = p + 2;
                } else {
                    stack.push(name.to_string());
                    pos = p + 1;
                }
            }
        } else {
            let start = pos;
            while pos < src.len() && src[pos] != b'<' {
                pos += 1;
            }
            let raw = core::str::from_utf8(&src[start..pos]).map_err(|_| syntax(start, "invalid UTF-8"))?;
            if raw.trim().is_empty() {
                continue;
            }
            if stack.is_empty() {
                return Err(syntax(start, "text outside the root element"));
            }
            let t = unescape(raw).map_err(|(off, what)| match what {
                Some(w) => unsupported(start + off, w),
                None => syntax(start + off, "malformed entity reference"),
            })?;
            b.text(&t);
        }
    }
    if !stack.is_empty() {
        return Err(syntax(pos, "unclosed element"));
    }
    if !seen_root {
        return Err(syntax(pos, "no root element"));
    }
    Ok(b.finish())
}

fn unescape(raw: &str) -> Result<String, (usize, Option<&'static str>)> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    let mut off = 0;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let after = &rest[i..];
        let semi = after.find(';').ok_or((off + i, None))?;
        match &after[..=semi] {
            "&lt;" => out.push('<'),
            "&gt;" => out.push('>'),
            "&amp;" => out.push('&'),
            _ => return Err((off + i, Some("entity reference"))),
        }
        off += i + semi + 1;
        rest = &after[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

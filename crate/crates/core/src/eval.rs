//! XPath evaluation over [`XmlTree`].
//!
//! Node sets are sorted `Vec<NodeId>`s (document order). Position-free
//! qualifiers are memoized per node, keyed by the qualifier's address; the
//! `'q` lifetime keeps those addresses stable for the evaluator's lifetime.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::tree::{LabelId, NodeId, XmlTree};
use crate::xpath::{Axis, Label, Path, Qual, Step};

/// Evaluates `p` at `ctx`, returning the selected elements in document order.
pub fn eval(t: &XmlTree, p: &Path, ctx: NodeId) -> Vec<NodeId> {
    Evaluator::new(t).eval(p, ctx)
}

pub fn eval_qual(t: &XmlTree, q: &Qual, n: NodeId) -> bool {
    Evaluator::new(t).qual(q, n)
}

pub struct Evaluator<'t, 'q> {
    tree: &'t XmlTree,
    memo: BTreeMap<usize, Vec<u8>>,
    _q: core::marker::PhantomData<&'q Qual>,
}

#[derive(Clone, Copy)]
enum Lbl {
    Any,
    Id(LabelId),
    Missing,
}

impl<'t, 'q> Evaluator<'t, 'q> {
    pub fn new(tree: &'t XmlTree) -> Self {
        Evaluator { tree, memo: BTreeMap::new(), _q: core::marker::PhantomData }
    }

    pub fn eval(&mut self, p: &'q Path, ctx: NodeId) -> Vec<NodeId> {
        self.path(p, &[ctx])
    }

    pub fn eval_set(&mut self, p: &'q Path, ctx: &[NodeId]) -> Vec<NodeId> {
        let mut c = ctx.to_vec();
        c.sort_unstable();
        c.dedup();
        self.path(p, &c)
    }

    pub fn qual(&mut self, q: &'q Qual, n: NodeId) -> bool {
        self.qual_at(q, n, 1)
    }

    fn lbl(&self, l: &Label) -> Lbl {
        match l {
            Label::Wildcard => Lbl::Any,
            Label::Name(s) => self.tree.lookup_label(s).map_or(Lbl::Missing, Lbl::Id),
        }
    }

    fn matches(&self, n: NodeId, l: Lbl) -> bool {
        match l {
            Lbl::Any => self.tree.is_element(n),
            Lbl::Id(id) => self.tree.label_id(n) == Some(id),
            Lbl::Missing => false,
        }
    }

    /// Candidates of `axis::label` from `n`, in axis order.
    fn candidates(&self, axis: Axis, l: Lbl, n: NodeId, out: &mut Vec<NodeId>) {
        if matches!(l, Lbl::Missing) {
            return;
        }
        let t = self.tree;
        match axis {
            Axis::SelfAxis => {
                if self.matches(n, l) {
                    out.push(n);
                }
            }
            Axis::Child => out.extend(t.children(n).iter().copied().filter(|&c| self.matches(c, l))),
            Axis::Descendant => match l {
                Lbl::Id(id) => out.extend_from_slice(t.descendants_with_label(n, id)),
                _ => out.extend((n + 1..t.end(n)).filter(|&c| t.is_element(c))),
            },
            Axis::Parent => {
                if let Some(p) = t.parent(n) {
                    if self.matches(p, l) {
                        out.push(p);
                    }
                }
            }
            Axis::Ancestor | Axis::AncestorOrSelf => {
                let mut cur = if axis == Axis::Ancestor { t.parent(n) } else { Some(n) };
                while let Some(c) = cur {
                    if self.matches(c, l) {
                        out.push(c);
                    }
                    cur = t.parent(c);
                }
            }
        }
    }

    fn path(&mut self, p: &'q Path, ctx: &[NodeId]) -> Vec<NodeId> {
        match p {
            Path::Step(s) => self.step(s, ctx),
            Path::Slash(a, b) => {
                let mid = self.path(a, ctx);
                if mid.is_empty() {
                    return mid;
                }
                self.path(b, &mid)
            }
            Path::Union(bs) => {
                let mut out = Vec::new();
                for b in bs {
                    out.extend(self.path(b, ctx));
                }
                out.sort_unstable();
                out.dedup();
                out
            }
            Path::Filter(inner, qs) => {
                if !qs.iter().any(has_position) {
                    let base = self.path(inner, ctx);
                    return base.into_iter().filter(|&n| qs.iter().all(|q| self.qual_at(q, n, 1))).collect();
                }
                let upward = inner.last_is_upward();
                let mut out = Vec::new();
                for &c in ctx {
                    let mut list = self.path(inner, &[c]);
                    if upward {
                        list.reverse();
                    }
                    out.extend(self.apply_quals(list, qs));
                }
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    fn step(&mut self, s: &'q Step, ctx: &[NodeId]) -> Vec<NodeId> {
        let l = self.lbl(&s.label);
        let positional = s.quals.iter().any(has_position);
        let mut out = Vec::new();
        if positional {
            let mut buf = Vec::new();
            for &c in ctx {
                buf.clear();
                self.candidates(s.axis, l, c, &mut buf);
                out.extend(self.positional_scan(&buf, &s.quals));
            }
            out.sort_unstable();
            out.dedup();
            return out;
        }
        let t = self.tree;
        match s.axis {
            Axis::Descendant => {
                let mut last_end = 0;
                for &c in ctx {
                    if c < last_end {
                        continue;
                    }
                    last_end = t.end(c);
                    self.candidates(Axis::Descendant, l, c, &mut out);
                }
            }
            Axis::Ancestor | Axis::AncestorOrSelf => {
                let mut seen = BTreeMap::new();
                for &c in ctx {
                    let mut cur = if s.axis == Axis::Ancestor { t.parent(c) } else { Some(c) };
                    while let Some(a) = cur {
                        if seen.insert(a, ()).is_some() {
                            break;
                        }
                        cur = t.parent(a);
                    }
                }
                out.extend(seen.into_keys().filter(|&a| self.matches(a, l)));
            }
            axis => {
                for &c in ctx {
                    self.candidates(axis, l, c, &mut out);
                }
                // Children of nested contexts interleave.
                if axis != Axis::SelfAxis {
                    out.sort_unstable();
                    out.dedup();
                }
            }
        }
        if !s.quals.is_empty() {
            out.retain(|&n| s.quals.iter().all(|q| self.qual_at(q, n, 1)));
        }
        out
    }

    /// Applies qualifiers in order, renumbering positions after each one.
    /// Stops scanning once a bare position has fixed the single survivor.
    fn positional_scan(&mut self, cands: &[NodeId], qs: &'q [Qual]) -> Vec<NodeId> {
        let split = qs.iter().position(|q| matches!(q, Qual::Position(_)));
        let Some(i) = split else {
            return self.apply_quals(cands.to_vec(), qs);
        };
        if qs[..i].iter().any(has_position) {
            return self.apply_quals(cands.to_vec(), qs);
        }
        let Qual::Position(k) = qs[i] else { unreachable!() };
        let mut seen = 0;
        let mut hit = None;
        for &c in cands {
            if qs[..i].iter().all(|q| self.qual_at(q, c, 1)) {
                seen += 1;
                if seen == k {
                    hit = Some(c);
                    break;
                }
            }
        }
        match hit {
            Some(h) => self.apply_quals(alloc::vec![h], &qs[i + 1..]),
            None => Vec::new(),
        }
    }

    fn apply_quals(&mut self, mut list: Vec<NodeId>, qs: &'q [Qual]) -> Vec<NodeId> {
        for q in qs {
            let mut next = Vec::with_capacity(list.len());
            for (i, &n) in list.iter().enumerate() {
                if self.qual_at(q, n, i + 1) {
                    next.push(n);
                }
            }
            list = next;
        }
        list
    }

    fn qual_at(&mut self, q: &'q Qual, n: NodeId, pos: usize) -> bool {
        match q {
            Qual::True => return true,
            Qual::False => return false,
            Qual::Position(k) => return *k == pos,
            _ => {}
        }
        let memoable = !has_position(q);
        let key = q as *const Qual as usize;
        if memoable {
            if let Some(v) = self.memo.get(&key) {
                match v[n as usize] {
                    1 => return false,
                    2 => return true,
                    _ => {}
                }
            }
        }
        let r = match q {
            Qual::Path(p) => self.exists(p, n),
            Qual::TextEquals(p, c) => {
                let t = self.tree;
                self.path(p, &[n]).into_iter().any(|m| t.text_equals(m, c))
            }
            Qual::NodeEquals(p, l) => {
                let l = self.lbl(l);
                self.matches(n, l) && self.contains(p, n, n)
            }
            Qual::And(a, b) => self.qual_at(a, n, pos) && self.qual_at(b, n, pos),
            Qual::Or(a, b) => self.qual_at(a, n, pos) || self.qual_at(b, n, pos),
            Qual::Not(a) => !self.qual_at(a, n, pos),
            Qual::True | Qual::False | Qual::Position(_) => unreachable!(),
        };
        if memoable {
            let len = self.tree.len();
            let v = self.memo.entry(key).or_insert_with(|| alloc::vec![0; len]);
            v[n as usize] = 1 + r as u8;
        }
        r
    }

    /// Is `p` non-empty at `n`?
    fn exists(&mut self, p: &'q Path, n: NodeId) -> bool {
        match p {
            Path::Step(s) if !s.quals.iter().any(has_position) => {
                let l = self.lbl(&s.label);
                let mut buf = Vec::new();
                self.candidates(s.axis, l, n, &mut buf);
                buf.into_iter().any(|c| s.quals.iter().all(|q| self.qual_at(q, c, 1)))
            }
            Path::Slash(a, b) => {
                let mid = self.path(a, &[n]);
                mid.into_iter().any(|m| self.exists(b, m))
            }
            Path::Union(bs) => bs.iter().any(|b| self.exists(b, n)),
            _ => !self.path(p, &[n]).is_empty(),
        }
    }

    /// Does `p` evaluated at `from` select `target`?
    fn contains(&mut self, p: &'q Path, from: NodeId, target: NodeId) -> bool {
        match p {
            Path::Step(s) if !s.quals.iter().any(has_position) => {
                let l = self.lbl(&s.label);
                let t = self.tree;
                let related = match s.axis {
                    Axis::SelfAxis => from == target,
                    Axis::Child => t.parent(target) == Some(from),
                    Axis::Descendant => t.is_ancestor(from, target),
                    Axis::Parent => t.parent(from) == Some(target),
                    Axis::Ancestor => t.is_ancestor(target, from),
                    Axis::AncestorOrSelf => target == from || t.is_ancestor(target, from),
                };
                related && self.matches(target, l) && s.quals.iter().all(|q| self.qual_at(q, target, 1))
            }
            Path::Slash(a, b) => {
                let mid = self.path(a, &[from]);
                mid.into_iter().any(|m| self.contains(b, m, target))
            }
            Path::Union(bs) => bs.iter().any(|b| self.contains(b, from, target)),
            Path::Filter(inner, qs) if !qs.iter().any(has_position) => {
                self.contains(inner, from, target) && qs.iter().all(|q| self.qual_at(q, target, 1))
            }
            _ => self.path(p, &[from]).binary_search(&target).is_ok(),
        }
    }
}

/// Does the qualifier itself depend on the context position?
fn has_position(q: &Qual) -> bool {
    match q {
        Qual::Position(_) => true,
        Qual::And(a, b) | Qual::Or(a, b) => has_position(a) || has_position(b),
        Qual::Not(a) => has_position(a),
        _ => false,
    }
}

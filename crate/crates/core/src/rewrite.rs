//! Rewriting of queries posed over the view into queries over the original
//! document.
//!
//! A query is split into a union of step chains. Walking a chain keeps the
//! set of view types the current step can denote (`reach`), the rewritten
//! qualifiers of the current step, and `prefix`: a qualifier on the current
//! step's nodes that holds iff the chain so far leads to them in the view.
//! The fast variant tracks labels instead of type sets.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dtd::{build_reach_index, Dtd, ReachIndex};
use crate::predicates::{build_kit, fs_with, PredicateKit};
use crate::spec::AccessSpec;
use crate::typeset::TypeSet;
use crate::view::{derive_view_with, DeriveOptions, DtdView};
use crate::xpath::{features_of_path, features_of_qual, Axis, Features, Label, Path, Qual, Step};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("query outside the rewritable fragment: {0}")]
    Fragment(String),
    #[error("context type `{0}` is not in the view")]
    UnknownContext(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RewriteOutcome {
    Query(Path),
    /// The query cannot select anything on any instance.
    Empty { reason: String },
}

impl RewriteOutcome {
    pub fn query(&self) -> Option<&Path> {
        match self {
            RewriteOutcome::Query(p) => Some(p),
            RewriteOutcome::Empty { .. } => None,
        }
    }
}

#[derive(Clone, Copy)]
pub struct RewriteContext<'a> {
    pub kit: &'a PredicateKit,
    pub view: &'a Dtd,
    /// Reachability over the view, not the original DTD.
    pub reach: &'a ReachIndex,
    /// View type index of the context nodes.
    pub context: usize,
    pub star_elimination: bool,
}

/// A spec with its derived view, predicate kit and view reachability.
#[derive(Clone, Debug)]
pub struct SecurityView {
    pub spec: AccessSpec,
    pub view: DtdView,
    pub kit: PredicateKit,
    pub reach: ReachIndex,
}

impl SecurityView {
    pub fn new(spec: AccessSpec) -> Self {
        Self::with_options(spec, DeriveOptions::default())
    }

    pub fn with_options(spec: AccessSpec, opts: DeriveOptions) -> Self {
        let view = derive_view_with(&spec, opts);
        let kit = build_kit(&spec);
        let reach = build_reach_index(&view.view);
        SecurityView { spec, view, kit, reach }
    }

    pub fn context(&self, ty: Option<&str>, fast: bool) -> Result<RewriteContext<'_>, RewriteError> {
        let context = match ty {
            None => 0,
            Some(t) => self.view.view.index_of(t).ok_or_else(|| RewriteError::UnknownContext(t.to_string()))?,
        };
        Ok(RewriteContext { kit: &self.kit, view: &self.view.view, reach: &self.reach, context, star_elimination: !fast })
    }

    pub fn rewrite(&self, q: &Path, fast: bool, ty: Option<&str>) -> Result<RewriteOutcome, RewriteError> {
        let ctx = self.context(ty, fast)?;
        if fast {
            rewrite_fast(q, &ctx)
        } else {
            rewrite(q, &ctx)
        }
    }
}

pub fn rewrite(q: &Path, ctx: &RewriteContext<'_>) -> Result<RewriteOutcome, RewriteError> {
    let ctx = RewriteContext { star_elimination: true, ..*ctx };
    rewrite_counted(q, &ctx).map(|r| r.0)
}

pub fn rewrite_fast(q: &Path, ctx: &RewriteContext<'_>) -> Result<RewriteOutcome, RewriteError> {
    let ctx = RewriteContext { star_elimination: false, ..*ctx };
    rewrite_counted(q, &ctx).map(|r| r.0)
}

/// Rewrites per `ctx.star_elimination`, also returning the work done: the
/// total size of the type sets computed, or one unit per step on the fast path.
pub fn rewrite_counted(q: &Path, ctx: &RewriteContext<'_>) -> Result<(RewriteOutcome, usize), RewriteError> {
    check_fragment(features_of_path(q))?;
    let mut rw = Rw { ctx, work: 0 };
    let mut branches = Vec::new();
    let mut reasons = Vec::new();
    for chain in chains(q) {
        match rw.main(&chain) {
            Ok(mut bs) => branches.append(&mut bs),
            Err(r) => reasons.push(r),
        }
    }
    let out = if branches.is_empty() {
        reasons.dedup();
        RewriteOutcome::Empty { reason: reasons.join("; ") }
    } else {
        RewriteOutcome::Query(Path::union(branches))
    };
    Ok((out, rw.work))
}

/// Rewrites a qualifier holding at nodes of the view types `l`.
pub fn rw_pred(f: &Qual, l: &TypeSet, ctx: &RewriteContext<'_>) -> Result<Qual, RewriteError> {
    check_fragment(features_of_qual(f))?;
    let mut rw = Rw { ctx, work: 0 };
    let layer = if ctx.star_elimination {
        Layer::Types(l.clone())
    } else {
        match l.iter().collect::<Vec<_>>().as_slice() {
            [one] => Layer::Label(Label::name(ctx.view.name(*one))),
            _ => Layer::Label(Label::Wildcard),
        }
    };
    Ok(rw.pred(f, &layer))
}

fn check_fragment(f: Features) -> Result<(), RewriteError> {
    if f.ancestor_or_self {
        return Err(RewriteError::Fragment("ancestor-or-self axis".into()));
    }
    if f.position {
        return Err(RewriteError::Fragment("position predicate".into()));
    }
    if f.node_eq {
        return Err(RewriteError::Fragment("node comparison".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct LStep {
    axis: Axis,
    label: Label,
    quals: Vec<Qual>,
    text: Option<String>,
}

/// Splits a path into a union of step chains; group qualifiers move onto
/// the last step of each chain.
fn chains(p: &Path) -> Vec<Vec<LStep>> {
    match p {
        Path::Step(s) => alloc::vec![alloc::vec![LStep {
            axis: s.axis,
            label: s.label.clone(),
            quals: s.quals.clone(),
            text: None
        }]],
        Path::Slash(a, b) => {
            let left = chains(a);
            let right = chains(b);
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    let mut c = l.clone();
                    c.extend(r.iter().cloned());
                    out.push(c);
                }
            }
            out
        }
        Path::Union(bs) => bs.iter().flat_map(chains).collect(),
        Path::Filter(inner, qs) => {
            let mut cs = chains(inner);
            for c in &mut cs {
                if let Some(last) = c.last_mut() {
                    last.quals.extend(qs.iter().cloned());
                }
            }
            cs
        }
    }
}

fn conj(a: Qual, b: Qual) -> Qual {
    match (a, b) {
        (Qual::False, _) | (_, Qual::False) => Qual::False,
        (Qual::True, x) | (x, Qual::True) => x,
        (a, b) => Qual::and(a, b),
    }
}

fn disj(a: Qual, b: Qual) -> Qual {
    match (a, b) {
        (Qual::True, _) | (_, Qual::True) => Qual::True,
        (Qual::False, x) | (x, Qual::False) => x,
        (a, b) => Qual::or(a, b),
    }
}

fn neg(a: Qual) -> Qual {
    match a {
        Qual::False => Qual::True,
        Qual::True => Qual::False,
        a => Qual::not(a),
    }
}

fn text_test(c: &str) -> Qual {
    Qual::TextEquals(Path::step(Axis::SelfAxis, Label::Wildcard), c.to_string())
}

/// Where a qualifier or step is evaluated from: a set of view types, or
/// (fast path) a single label.
#[derive(Clone, Debug)]
enum Layer {
    Types(TypeSet),
    Label(Label),
}

/// One layer of the main chain.
struct State {
    layer: Layer,
    /// Fast path: may the layer contain the document root?
    may_root: bool,
    filters: Vec<Qual>,
    prefix: Option<Qual>,
}

struct Rw<'c, 'a> {
    ctx: &'c RewriteContext<'a>,
    work: usize,
}

impl Rw<'_, '_> {
    fn view(&self) -> &Dtd {
        self.ctx.view
    }

    fn root(&self) -> &str {
        self.ctx.view.root()
    }

    fn a_plus_first(&self) -> Path {
        Path::Step(self.ctx.kit.a_plus_first())
    }

    fn acc(&self) -> Qual {
        self.ctx.kit.acc.clone()
    }

    fn label_set(&self, l: &Label) -> TypeSet {
        match l {
            Label::Wildcard => (0..self.view().len()).collect(),
            Label::Name(n) => self.view().index_of(n).map(TypeSet::singleton).unwrap_or_default(),
        }
    }

    fn in_view(&self, l: &Label) -> bool {
        match l {
            Label::Wildcard => true,
            Label::Name(n) => self.view().contains(n),
        }
    }

    fn is_root(&self, l: &Label) -> bool {
        matches!(l, Label::Name(n) if n == self.root())
    }

    fn moved(&self, from: &TypeSet, axis: Axis) -> TypeSet {
        let r = self.ctx.reach;
        let mut out = TypeSet::new();
        for t in from.iter() {
            match axis {
                Axis::SelfAxis | Axis::AncestorOrSelf => {
                    out.insert(t);
                }
                Axis::Child => {
                    out.union_with(r.children(t));
                }
                Axis::Descendant => {
                    out.union_with(r.descendants(t));
                }
                Axis::Parent => {
                    out.union_with(r.parents(t));
                }
                Axis::Ancestor => {
                    out.union_with(r.ancestors(t));
                }
            }
        }
        out
    }

    fn without_root(&self, s: &TypeSet) -> TypeSet {
        let mut s = s.clone();
        s.remove(0);
        s
    }

    /// `fs(set, axis)[quals]`; the set must be nonempty.
    fn fs(&self, set: &TypeSet, axis: Axis, quals: Vec<Qual>) -> Path {
        fs_with(self.view(), set, axis, quals).unwrap_or_else(|_| unreachable!("fs over an empty set"))
    }

    fn step(&self, axis: Axis, l: &Label, quals: Vec<Qual>) -> Path {
        Path::Step(Step { axis, label: l.clone(), quals })
    }

    fn names(&self, s: &TypeSet) -> String {
        s.iter().map(|t| self.view().name(t)).collect::<Vec<_>>().join(",")
    }

    fn main(&mut self, steps: &[LStep]) -> Result<Vec<Path>, String> {
        let fast = !self.ctx.star_elimination;
        let c = self.ctx.context;
        let mut st = State {
            layer: if fast {
                Layer::Label(Label::name(self.view().name(c)))
            } else {
                Layer::Types(TypeSet::singleton(c))
            },
            may_root: c == 0,
            filters: Vec::new(),
            prefix: None,
        };
        for s in steps {
            st = if fast { self.main_step_fast(st, s)? } else { self.main_step(st, s)? };
            let qctx = st.layer.clone();
            for q in &s.quals {
                match self.pred(q, &qctx) {
                    Qual::False => return Err(alloc::format!("qualifier of {}::{} never holds", s.axis.keyword(), s.label.as_str())),
                    Qual::True => {}
                    q => st.filters.push(q),
                }
            }
        }
        self.finish(st)
    }

    fn layer_quals(acc: Option<Qual>, filters: Vec<Qual>, prefix: Option<Qual>) -> Vec<Qual> {
        let mut v: Vec<Qual> = acc.into_iter().collect();
        v.extend(filters);
        v.extend(prefix);
        v
    }

    fn main_step(&mut self, st: State, s: &LStep) -> Result<State, String> {
        let Layer::Types(reach) = &st.layer else { unreachable!() };
        self.work += 1;
        let next = self.moved(reach, s.axis).intersect(&self.label_set(&s.label));
        self.work += next.len();
        if next.is_empty() {
            return Err(alloc::format!("no view type reachable by {}::{} from {{{}}}", s.axis.keyword(), s.label.as_str(), self.names(reach)));
        }
        if s.axis == Axis::SelfAxis {
            return Ok(State { layer: Layer::Types(next), ..st });
        }
        let only_root = reach.len() == 1 && reach.contains(0);
        let prefix = match s.axis {
            Axis::Child => {
                let quals = Self::layer_quals(None, st.filters, st.prefix);
                Some(Qual::exists(Path::slash(self.a_plus_first(), self.fs(reach, Axis::SelfAxis, quals))))
            }
            Axis::Descendant if only_root && st.filters.is_empty() && st.prefix.is_none() => None,
            Axis::Descendant => {
                let quals = Self::layer_quals(Some(self.acc()), st.filters, st.prefix);
                Some(Qual::exists(self.fs(reach, Axis::Ancestor, quals)))
            }
            Axis::Parent | Axis::Ancestor => {
                let below = self.without_root(reach);
                if below.is_empty() {
                    return Err("the root has no ancestors".into());
                }
                let quals = Self::layer_quals(Some(self.acc()), st.filters, st.prefix);
                let down = self.fs(&below, Axis::Descendant, quals);
                if s.axis == Axis::Parent {
                    let l = match next.iter().collect::<Vec<_>>().as_slice() {
                        [one] => Label::name(self.view().name(*one)),
                        _ => Label::Wildcard,
                    };
                    Some(Qual::NodeEquals(Path::slash(down, self.a_plus_first()), l))
                } else {
                    Some(Qual::exists(down))
                }
            }
            Axis::SelfAxis | Axis::AncestorOrSelf => unreachable!(),
        };
        Ok(State { layer: Layer::Types(next), may_root: false, filters: Vec::new(), prefix })
    }

    /// Fast path: a `*` layer below the root carries no type information, so
    /// when nothing else pins it, it must be kept off the root explicitly.
    fn pinned(&self, cur: &Label, may_root: bool, prefix: Option<Qual>) -> Option<Qual> {
        match prefix {
            None if *cur == Label::Wildcard && !may_root => {
                Some(Qual::exists(Path::step(Axis::Parent, Label::Wildcard)))
            }
            p => p,
        }
    }

    fn main_step_fast(&mut self, st: State, s: &LStep) -> Result<State, String> {
        let Layer::Label(cur) = &st.layer else { unreachable!() };
        self.work += 1;
        if !self.in_view(&s.label) {
            return Err(alloc::format!("`{}` is not a view type", s.label.as_str()));
        }
        let nl = s.label.clone();
        let downward = matches!(s.axis, Axis::Child | Axis::Descendant);
        if downward && self.is_root(&nl) {
            return Err("the root is nobody's descendant".into());
        }
        match s.axis {
            Axis::SelfAxis => {
                let (label, may_root) = match (cur, &nl) {
                    (c, Label::Wildcard) => (c.clone(), st.may_root),
                    (Label::Wildcard, n) => (n.clone(), st.may_root && self.is_root(n)),
                    (a, b) if a == b => (a.clone(), st.may_root),
                    _ => return Err(alloc::format!("self::{} on a {} node", nl.as_str(), cur.as_str())),
                };
                return Ok(State { layer: Layer::Label(label), may_root, ..st });
            }
            Axis::Parent | Axis::Ancestor if self.is_root(cur) => return Err("the root has no ancestors".into()),
            _ => {}
        }
        let prefix = match s.axis {
            Axis::Child => {
                let pin = self.pinned(cur, st.may_root, st.prefix);
                let up = self.a_plus_first();
                Some(Qual::exists(match (st.filters.is_empty(), pin) {
                    (true, Some(Qual::Path(rest))) => {
                        Path::slash(Path::slash(up, self.step(Axis::SelfAxis, cur, Vec::new())), rest)
                    }
                    (_, pin) => {
                        let quals = Self::layer_quals(None, st.filters, pin);
                        Path::slash(up, self.step(Axis::SelfAxis, cur, quals))
                    }
                }))
            }
            Axis::Descendant if self.is_root(cur) && st.filters.is_empty() && st.prefix.is_none() => None,
            Axis::Descendant => {
                let pin = self.pinned(cur, st.may_root, st.prefix);
                let quals = Self::layer_quals(Some(self.acc()), st.filters, pin);
                Some(Qual::exists(self.step(Axis::Ancestor, cur, quals)))
            }
            Axis::Parent | Axis::Ancestor => {
                let quals = Self::layer_quals(Some(self.acc()), st.filters, st.prefix);
                let down = self.step(Axis::Descendant, cur, quals);
                if s.axis == Axis::Parent {
                    Some(Qual::NodeEquals(Path::slash(down, self.a_plus_first()), nl.clone()))
                } else {
                    Some(Qual::exists(down))
                }
            }
            Axis::SelfAxis | Axis::AncestorOrSelf => unreachable!(),
        };
        let may_root = !downward && (nl == Label::Wildcard || self.is_root(&nl));
        Ok(State { layer: Layer::Label(nl), may_root, filters: Vec::new(), prefix })
    }

    fn finish(&mut self, st: State) -> Result<Vec<Path>, String> {
        let root = Label::name(self.root());
        let mut out = Vec::new();
        let quals = || Self::layer_quals(Some(self.acc()), st.filters.clone(), st.prefix.clone());
        let has_root = match &st.layer {
            Layer::Types(reach) => {
                let below = self.without_root(reach);
                if !below.is_empty() {
                    out.push(self.fs(&below, Axis::Descendant, quals()));
                }
                reach.contains(0)
            }
            Layer::Label(l) => {
                if !self.is_root(l) {
                    out.push(self.step(Axis::Descendant, l, quals()));
                }
                st.may_root && (self.is_root(l) || *l == Label::Wildcard)
            }
        };
        if has_root {
            let quals = Self::layer_quals(None, st.filters, st.prefix);
            out.push(self.step(Axis::SelfAxis, &root, quals));
        }
        if out.is_empty() {
            return Err("the query can only reach the root, which it excludes".into());
        }
        Ok(out)
    }

    fn pred(&mut self, q: &Qual, layer: &Layer) -> Qual {
        match q {
            Qual::Path(p) => self.pred_path(p, None, layer),
            Qual::TextEquals(p, c) => self.pred_path(p, Some(c), layer),
            Qual::And(a, b) => {
                let a = self.pred(a, layer);
                if a == Qual::False {
                    return a;
                }
                conj(a, self.pred(b, layer))
            }
            Qual::Or(a, b) => {
                let a = self.pred(a, layer);
                if a == Qual::True {
                    return a;
                }
                disj(a, self.pred(b, layer))
            }
            Qual::Not(a) => neg(self.pred(a, layer)),
            Qual::True => Qual::True,
            Qual::False => Qual::False,
            Qual::NodeEquals(..) | Qual::Position(_) => unreachable!("rejected by the fragment check"),
        }
    }

    fn pred_path(&mut self, p: &Path, text: Option<&String>, layer: &Layer) -> Qual {
        let mut acc = Qual::False;
        for mut chain in chains(p) {
            if let Some(last) = chain.last_mut() {
                last.text = text.cloned();
            }
            let q = match layer {
                Layer::Types(l) => self.pred_chain(&chain, l),
                Layer::Label(l) => self.pred_chain_fast(&chain, l),
            };
            acc = disj(acc, q);
            if acc == Qual::True {
                break;
            }
        }
        acc
    }

    /// Rewritten qualifiers of one step, its text test, and the rest of the chain.
    fn step_tail(&mut self, s: &LStep, here: &Layer, rest: &[LStep]) -> Qual {
        let mut f = Qual::True;
        for q in &s.quals {
            f = conj(f, self.pred(q, here));
            if f == Qual::False {
                return f;
            }
        }
        if let Some(c) = &s.text {
            f = conj(f, text_test(c));
        }
        if !rest.is_empty() {
            let r = match here {
                Layer::Types(t) => self.pred_chain(rest, t),
                Layer::Label(l) => self.pred_chain_fast(rest, l),
            };
            f = conj(f, r);
        }
        f
    }

    fn split_and(q: Qual, out: &mut Vec<Qual>) {
        match q {
            Qual::True => {}
            Qual::And(a, b) => {
                Self::split_and(*a, out);
                Self::split_and(*b, out);
            }
            q => out.push(q),
        }
    }

    /// `[acc][f'][text][rest']`, or the same without `acc`.
    fn tail_quals(&self, acc: bool, tail: Qual) -> Vec<Qual> {
        let mut v = Vec::new();
        if acc {
            v.push(self.acc());
        }
        Self::split_and(tail, &mut v);
        v
    }

    fn pred_chain(&mut self, steps: &[LStep], l: &TypeSet) -> Qual {
        let s = &steps[0];
        self.work += 1;
        let next = self.moved(l, s.axis).intersect(&self.label_set(&s.label));
        self.work += next.len();
        if next.is_empty() {
            return Qual::False;
        }
        let here = Layer::Types(next.clone());
        let tail = self.step_tail(s, &here, &steps[1..]);
        if tail == Qual::False {
            return tail;
        }
        match s.axis {
            Axis::Child => {
                let down = self.fs(&next, Axis::Descendant, self.tail_quals(true, tail));
                let l = match l.iter().collect::<Vec<_>>().as_slice() {
                    [one] => Label::name(self.view().name(*one)),
                    _ => Label::Wildcard,
                };
                Qual::NodeEquals(Path::slash(down, self.a_plus_first()), l)
            }
            Axis::Descendant => Qual::exists(self.fs(&next, Axis::Descendant, self.tail_quals(true, tail))),
            Axis::Parent => Qual::exists(Path::slash(
                self.a_plus_first(),
                self.fs(&next, Axis::SelfAxis, self.tail_quals(false, tail)),
            )),
            Axis::Ancestor => Qual::exists(self.fs(&next, Axis::Ancestor, self.tail_quals(true, tail))),
            Axis::SelfAxis if next == *l => tail,
            Axis::SelfAxis => Qual::exists(self.fs(&next, Axis::SelfAxis, self.tail_quals(false, tail))),
            Axis::AncestorOrSelf => unreachable!(),
        }
    }

    fn pred_chain_fast(&mut self, steps: &[LStep], cur: &Label) -> Qual {
        let s = &steps[0];
        self.work += 1;
        if !self.in_view(&s.label) {
            return Qual::False;
        }
        if matches!(s.axis, Axis::Child | Axis::Descendant) && self.is_root(&s.label) {
            return Qual::False;
        }
        let nl = match s.axis {
            Axis::SelfAxis => match (cur, &s.label) {
                (c, Label::Wildcard) => c.clone(),
                (Label::Wildcard, n) => n.clone(),
                (a, b) if a == b => a.clone(),
                _ => return Qual::False,
            },
            _ => s.label.clone(),
        };
        let here = Layer::Label(nl.clone());
        let tail = self.step_tail(s, &here, &steps[1..]);
        if tail == Qual::False {
            return tail;
        }
        match s.axis {
            Axis::Child => {
                let down = self.step(Axis::Descendant, &nl, self.tail_quals(true, tail));
                Qual::NodeEquals(Path::slash(down, self.a_plus_first()), cur.clone())
            }
            Axis::Descendant => Qual::exists(self.step(Axis::Descendant, &nl, self.tail_quals(true, tail))),
            Axis::Parent => Qual::exists(Path::slash(
                self.a_plus_first(),
                self.step(Axis::SelfAxis, &nl, self.tail_quals(false, tail)),
            )),
            Axis::Ancestor => Qual::exists(self.step(Axis::Ancestor, &nl, self.tail_quals(true, tail))),
            Axis::SelfAxis if nl == *cur => tail,
            Axis::SelfAxis => Qual::exists(self.step(Axis::SelfAxis, &nl, self.tail_quals(false, tail))),
            Axis::AncestorOrSelf => unreachable!(),
        }
    }
}

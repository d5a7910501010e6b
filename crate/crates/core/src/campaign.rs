//! Randomized closure campaign: random recursive DTDs, specs, instances and
//! queries, checking every rewriting against the materialized view.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::access::{answer_equal, materialize, oracle_accessible};
use crate::docgen::{generate, GenConfig};
use crate::dtd::{build_reach_index, serialize_dtd, ContentModel, Dtd, ReachIndex};
use crate::typeset::TypeSet;
use crate::eval::{eval, Evaluator};
use crate::naive::naive_eval;
use crate::rewrite::{RewriteOutcome, SecurityView};
use crate::view::derive_view;
use crate::spec::{serialize_spec, AccessSpec, AnnValue, Annotation};
use crate::tree::{NodeId, TreeBuilder, XmlTree};
use crate::xpath::{serialize, Axis, Label, Path, Qual, Step};

const NAMES: [&str; 10] = ["r", "a", "b", "c", "d", "e", "f", "g", "h", "i"];
const TEXTS: [&str; 2] = ["x", "y"];

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub seed: u64,
    pub cases: usize,
    pub max_types: usize,
    pub max_annotations: usize,
    pub max_nodes: usize,
    pub max_query_depth: usize,
    /// Also draw parent and ancestor steps.
    pub upward: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seed: 0,
            cases: 1000,
            max_types: 10,
            max_annotations: 8,
            max_nodes: 300,
            max_query_depth: 4,
            upward: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Case {
    pub spec: AccessSpec,
    pub tree: XmlTree,
    pub query: Path,
    /// View type of the context nodes; the root when `None`.
    pub context: Option<String>,
}

impl Case {
    /// Text form, enough to replay the case by hand.
    pub fn describe(&self) -> String {
        format!(
            "DTD:\n{}SPEC:\n{}XML: {}\nQUERY: {}\nCONTEXT: {}",
            serialize_dtd(self.spec.dtd()),
            serialize_spec(&self.spec),
            self.tree.to_xml(),
            serialize(&self.query),
            self.context.as_deref().unwrap_or("(root)")
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseOutcome {
    pub rewrite_ok: bool,
    pub fast_ok: bool,
    pub acc_ok: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct CampaignReport {
    pub cases: usize,
    pub rewrite_pass: usize,
    pub fast_pass: usize,
    pub acc_pass: usize,
    /// Elements checked against the accessibility oracle.
    pub acc_nodes: usize,
    /// Cases whose view answer was non-empty.
    pub nonempty: usize,
    pub failures: Vec<String>,
}

impl CampaignReport {
    pub fn all_passed(&self) -> bool {
        self.rewrite_pass == self.cases && self.fast_pass == self.cases && self.acc_pass == self.cases
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.random_range(0..xs.len())]
}

fn optional(m: ContentModel) -> ContentModel {
    ContentModel::Alt(alloc::vec![m, ContentModel::Empty])
}

/// A DTD whose types hang off a spanning tree from the root, with extra
/// edges under `*` or `?` only, and at least one cycle.
pub fn random_dtd(rng: &mut ChaCha8Rng, max_types: usize) -> Dtd {
    let n = rng.random_range(2..=max_types.clamp(2, NAMES.len()));
    let mut kids: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let mut parent = alloc::vec![0; n];
    for i in 1..n {
        parent[i] = rng.random_range(0..i);
        kids[parent[i]].push(i);
    }
    // Forced recursion: a back edge to itself or a tree ancestor below the root.
    let mut extra: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let from = rng.random_range(1..n);
    let mut up = alloc::vec![from];
    while parent[*up.last().unwrap_or(&0)] != 0 {
        up.push(parent[*up.last().unwrap_or(&0)]);
    }
    extra[from].push(*pick(rng, &up));
    for e in extra.iter_mut() {
        for _ in 0..rng.random_range(0..=1) {
            e.push(rng.random_range(1..n));
        }
    }
    let mut decls = Vec::new();
    for t in 0..n {
        let mut items = Vec::new();
        let mut required = false;
        for &c in &kids[t] {
            let m = ContentModel::name(NAMES[c]);
            items.push(match rng.random_range(0..3) {
                0 if !required => {
                    required = true;
                    m
                }
                1 => optional(m),
                _ => ContentModel::star(m),
            });
        }
        for &c in &extra[t] {
            let m = ContentModel::name(NAMES[c]);
            items.push(if rng.random_bool(0.6) { ContentModel::star(m) } else { optional(m) });
        }
        let model = if items.is_empty() {
            if rng.random_bool(0.5) {
                ContentModel::Text
            } else {
                ContentModel::Empty
            }
        } else if items.len() == 1 {
            items.pop().unwrap_or(ContentModel::Empty)
        } else {
            match rng.random_range(0..4) {
                0 if !required => {
                    let mut names: Vec<&str> = items.iter().flat_map(|i| i.names()).collect();
                    names.dedup();
                    let names: Vec<ContentModel> = names.into_iter().map(ContentModel::name).collect();
                    if names.len() >= 2 {
                        ContentModel::star(ContentModel::Alt(names))
                    } else {
                        ContentModel::Seq(items)
                    }
                }
                1 => {
                    // A choice of the optional items, plain names the rest.
                    let mut alt: Vec<&str> = items.iter().flat_map(|i| i.names()).collect();
                    alt.sort_unstable();
                    alt.dedup();
                    let alt: Vec<ContentModel> = alt.into_iter().map(ContentModel::name).collect();
                    let alt_ok = alt.len() >= 2 && !kids[t].is_empty();
                    if alt_ok && !required {
                        optional(ContentModel::Alt(alt))
                    } else {
                        ContentModel::Seq(items)
                    }
                }
                _ => ContentModel::Seq(items),
            }
        };
        decls.push((NAMES[t].to_string(), model));
    }
    Dtd::new(decls).expect("generated DTD is well formed")
}

fn text_types(d: &Dtd) -> Vec<usize> {
    (0..d.len()).filter(|&t| *d.production_at(t) == ContentModel::Text).collect()
}

fn random_label(rng: &mut ChaCha8Rng, d: &Dtd, star_p: f64) -> Label {
    if rng.random_bool(star_p) {
        Label::Wildcard
    } else {
        Label::name(d.name(rng.random_range(0..d.len())))
    }
}

/// A downward qualifier over `d`, as annotations allow.
fn random_ann_qual(rng: &mut ChaCha8Rng, d: &Dtd, depth: usize) -> Qual {
    let texts = text_types(d);
    match rng.random_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => {
            let axis = if rng.random_bool(0.6) { Axis::Child } else { Axis::Descendant };
            let mut p = Path::step(axis, random_label(rng, d, 0.15));
            if rng.random_bool(0.3) {
                p = Path::slash(p, Path::step(Axis::Child, random_label(rng, d, 0.2)));
            }
            Qual::exists(p)
        }
        1 if !texts.is_empty() => {
            let t = *pick(rng, &texts);
            Qual::TextEquals(Path::named(Axis::Descendant, d.name(t)), pick(rng, &TEXTS).to_string())
        }
        1 => Qual::exists(Path::named(Axis::Child, d.name(rng.random_range(1..d.len())))),
        2 => Qual::not(random_ann_qual(rng, d, depth - 1)),
        3 => Qual::and(random_ann_qual(rng, d, depth - 1), random_ann_qual(rng, d, depth - 1)),
        _ => Qual::or(random_ann_qual(rng, d, depth - 1), random_ann_qual(rng, d, depth - 1)),
    }
}

pub fn random_spec(rng: &mut ChaCha8Rng, d: &Dtd, max_annotations: usize) -> AccessSpec {
    let mut edges = Vec::new();
    for p in 0..d.len() {
        for c in d.child_indexes(p) {
            if !edges.contains(&(p, c)) {
                edges.push((p, c));
            }
        }
    }
    let k = rng.random_range(0..=max_annotations.min(edges.len()));
    let mut entries = Vec::new();
    for _ in 0..k {
        let (p, c) = edges.swap_remove(rng.random_range(0..edges.len()));
        let value = match rng.random_range(0..5) {
            0 => AnnValue::Allow,
            1 => AnnValue::Deny,
            2 => AnnValue::DenyDown,
            3 => AnnValue::Cond(random_ann_qual(rng, d, 1)),
            _ => AnnValue::CondDown(random_ann_qual(rng, d, 1)),
        };
        entries.push(Annotation { parent: d.name(p).to_string(), child: d.name(c).to_string(), value });
    }
    AccessSpec::new(d.clone(), entries).expect("generated spec is valid")
}

pub fn random_instance(rng: &mut ChaCha8Rng, d: &Dtd, max_nodes: usize) -> XmlTree {
    let alphabet: Vec<String> = TEXTS.iter().map(|s| s.to_string()).collect();
    let mut depth = 10;
    for round in 0..12 {
        let cfg = GenConfig {
            seed: rng.next_u64(),
            max_depth: depth,
            star_p: rng.random_range(0.25..0.7),
            text_alphabet: alphabet.clone(),
            target_nodes: Some(rng.random_range(20..=max_nodes.max(21) * 2 / 3)),
            fill: rng.random_bool(0.4),
        };
        let t = generate(d, &cfg).expect("generated DTD terminates");
        if t.len() <= max_nodes {
            return t;
        }
        if round % 3 == 2 {
            depth = (depth - 2).max(2);
        }
    }
    // Minimal document as the last resort.
    let cfg = GenConfig { max_depth: 1, text_alphabet: alphabet, ..GenConfig::default() };
    generate(d, &cfg).expect("generated DTD terminates")
}

#[derive(Clone, Copy)]
struct QueryGen<'a> {
    d: &'a Dtd,
    /// Steers labels towards types the axis can reach; `None` draws blindly.
    reach: Option<&'a ReachIndex>,
    upward: bool,
    /// Allow positions, `ancestor-or-self` and node comparison.
    full: bool,
}

impl QueryGen<'_> {
    fn axis(&self, rng: &mut ChaCha8Rng) -> Axis {
        let r = rng.random_range(0..100);
        if self.full {
            return match r {
                0..25 => Axis::Child,
                25..45 => Axis::Descendant,
                45..55 => Axis::SelfAxis,
                55..70 => Axis::Parent,
                70..85 => Axis::Ancestor,
                _ => Axis::AncestorOrSelf,
            };
        }
        match r {
            0..45 => Axis::Child,
            45..80 => Axis::Descendant,
            80..88 => Axis::SelfAxis,
            88..94 if self.upward => Axis::Parent,
            _ if self.upward => Axis::Ancestor,
            _ => Axis::Child,
        }
    }

    fn targets(&self, axis: Axis, cur: &TypeSet) -> TypeSet {
        let Some(r) = self.reach else { return (0..self.d.len()).collect() };
        let mut out = match axis {
            Axis::SelfAxis => cur.clone(),
            Axis::AncestorOrSelf => cur.clone(),
            _ => TypeSet::new(),
        };
        for t in cur.iter() {
            out.union_with(match axis {
                Axis::Child => r.children(t),
                Axis::Descendant => r.descendants(t),
                Axis::Parent => r.parents(t),
                Axis::Ancestor | Axis::AncestorOrSelf => r.ancestors(t),
                Axis::SelfAxis => continue,
            });
        }
        out
    }

    fn step(&self, rng: &mut ChaCha8Rng, depth: usize, cur: &TypeSet) -> (Step, TypeSet) {
        let axis = self.axis(rng);
        let cand = self.targets(axis, cur);
        let (label, next) = if rng.random_bool(0.25) {
            (Label::Wildcard, cand)
        } else if !cand.is_empty() && rng.random_bool(0.95) {
            let ts: Vec<usize> = cand.iter().collect();
            let t = *pick(rng, &ts);
            (Label::name(self.d.name(t)), TypeSet::singleton(t))
        } else {
            let t = rng.random_range(0..self.d.len());
            (Label::name(self.d.name(t)), cand.intersect(&TypeSet::singleton(t)))
        };
        let mut s = Step::new(axis, label);
        if depth > 0 && rng.random_bool(0.3) {
            s.quals.push(self.qual(rng, depth - 1, &next));
        }
        if self.full && rng.random_bool(0.15) {
            s.quals.push(Qual::Position(rng.random_range(1..=3)));
        }
        (s, next)
    }

    fn path(&self, rng: &mut ChaCha8Rng, depth: usize, cur: &TypeSet) -> (Path, TypeSet) {
        let len = rng.random_range(1..=depth.max(1));
        let (s, mut at) = self.step(rng, depth.saturating_sub(1), cur);
        let mut p = Path::Step(s);
        for _ in 1..len {
            let (s, next) = self.step(rng, depth.saturating_sub(1), &at);
            p = Path::slash(p, Path::Step(s));
            at = next;
        }
        if depth > 1 && rng.random_bool(0.15) {
            let (other, also) = self.path(rng, depth - 1, cur);
            p = Path::union(alloc::vec![p, other]);
            at.union_with(&also);
            if rng.random_bool(0.3) {
                p = Path::Filter(Box::new(p), alloc::vec![self.qual(rng, depth - 2, &at)]);
            }
        }
        (p, at)
    }

    /// A path ending at text-bearing types when there are any in reach.
    fn text_path(&self, rng: &mut ChaCha8Rng, depth: usize, cur: &TypeSet) -> Path {
        let texts = text_types(self.d);
        if self.reach.is_some() && !texts.is_empty() && rng.random_bool(0.7) {
            for axis in [Axis::SelfAxis, Axis::Child, Axis::Descendant] {
                let hit: Vec<usize> = self.targets(axis, cur).iter().filter(|t| texts.contains(t)).collect();
                if !hit.is_empty() {
                    let label = if axis == Axis::SelfAxis { Label::Wildcard } else { Label::name(self.d.name(*pick(rng, &hit))) };
                    return Path::step(axis, label);
                }
            }
        }
        self.path(rng, depth, cur).0
    }

    fn qual(&self, rng: &mut ChaCha8Rng, depth: usize, cur: &TypeSet) -> Qual {
        let hi = if depth == 0 { 3 } else { 7 };
        match rng.random_range(0..hi) {
            0 | 1 => Qual::exists(self.path(rng, depth.min(2), cur).0),
            2 => Qual::TextEquals(self.text_path(rng, depth.min(1), cur), pick(rng, &TEXTS).to_string()),
            3 if self.full => Qual::NodeEquals(self.path(rng, depth.min(2), cur).0, random_label(rng, self.d, 0.3)),
            3 | 4 => Qual::not(self.qual(rng, depth - 1, cur)),
            5 => Qual::and(self.qual(rng, depth - 1, cur), self.qual(rng, depth - 1, cur)),
            _ => Qual::or(self.qual(rng, depth - 1, cur), self.qual(rng, depth - 1, cur)),
        }
    }
}

/// A query from the root, steered by the structure of `d`.
pub fn random_query(rng: &mut ChaCha8Rng, d: &Dtd, max_depth: usize, upward: bool) -> Path {
    let reach = build_reach_index(d);
    QueryGen { d, reach: Some(&reach), upward, full: false }.path(rng, max_depth, &TypeSet::singleton(0)).0
}

pub fn random_case(rng: &mut ChaCha8Rng, cfg: &CampaignConfig) -> Case {
    let d = random_dtd(rng, cfg.max_types);
    let spec = random_spec(rng, &d, cfg.max_annotations);
    let tree = random_instance(rng, &d, cfg.max_nodes);
    let view = derive_view(&spec).view;
    let mut context = None;
    let mut from = TypeSet::singleton(0);
    if view.len() > 1 && rng.random_bool(0.3) {
        let t = rng.random_range(1..view.len());
        context = Some(view.name(t).to_string());
        from = TypeSet::singleton(d.index_of(view.name(t)).unwrap_or(0));
    }
    let reach = build_reach_index(&d);
    let gen = QueryGen { d: &d, reach: Some(&reach), upward: cfg.upward, full: false };
    let query = gen.path(rng, cfg.max_query_depth, &from).0;
    Case { spec, tree, query, context }
}

fn rewritten_answer(sv: &SecurityView, c: &Case, fast: bool) -> Result<Vec<NodeId>, String> {
    match sv.rewrite(&c.query, fast, c.context.as_deref()) {
        Ok(RewriteOutcome::Query(p)) => Ok(eval(&c.tree, &p, XmlTree::ROOT)),
        Ok(RewriteOutcome::Empty { .. }) => Ok(Vec::new()),
        Err(e) => Err(e.to_string()),
    }
}

/// Answer of the query over the materialized view, from every context node,
/// in original node ids.
pub fn view_answer(c: &Case) -> Vec<NodeId> {
    let m = materialize(&c.tree, &c.spec);
    let ctxs: Vec<NodeId> = match &c.context {
        None => alloc::vec![XmlTree::ROOT],
        Some(l) => m.view.elements().filter(|&n| m.view.label(n) == Some(l.as_str())).collect(),
    };
    let mut ev = Evaluator::new(&m.view);
    let mut got = Vec::new();
    for n in ctxs {
        got.extend(ev.eval(&c.query, n));
    }
    got.sort_unstable();
    got.dedup();
    m.to_original(&got)
}

pub fn run_case(c: &Case) -> CaseOutcome {
    let sv = SecurityView::new(c.spec.clone());
    let expect = view_answer(c);
    let mut detail = Vec::new();
    let mut check = |fast: bool| match rewritten_answer(&sv, c, fast) {
        Ok(got) if answer_equal(&got, &expect) => true,
        Ok(got) => {
            let paths = |ns: &[NodeId]| ns.iter().map(|&n| c.tree.path_of(n)).collect::<Vec<_>>().join(" ");
            detail.push(format!("{}: got [{}], want [{}]", if fast { "fast" } else { "rewrite" }, paths(&got), paths(&expect)));
            false
        }
        Err(e) => {
            detail.push(format!("{} failed: {e}", if fast { "fast" } else { "rewrite" }));
            false
        }
    };
    let rewrite_ok = check(false);
    let fast_ok = check(true);
    let mut ev = Evaluator::new(&c.tree);
    let wrong: Vec<NodeId> =
        c.tree.elements().filter(|&n| ev.qual(&sv.kit.acc, n) != oracle_accessible(&c.tree, &c.spec, n)).collect();
    let acc_ok = wrong.is_empty();
    if !acc_ok {
        detail.push(format!("acc differs at {}", c.tree.path_of(wrong[0])));
    }
    let detail = (!detail.is_empty()).then(|| format!("{}\n{}", detail.join("\n"), c.describe()));
    CaseOutcome { rewrite_ok, fast_ok, acc_ok, detail }
}

pub fn run_campaign(cfg: &CampaignConfig) -> CampaignReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut r = CampaignReport { cases: cfg.cases, ..CampaignReport::default() };
    for i in 0..cfg.cases {
        let c = random_case(&mut rng, cfg);
        let o = run_case(&c);
        r.rewrite_pass += o.rewrite_ok as usize;
        r.fast_pass += o.fast_ok as usize;
        r.acc_pass += o.acc_ok as usize;
        r.acc_nodes += c.tree.element_count();
        r.nonempty += !view_answer(&c).is_empty() as usize;
        if let Some(d) = o.detail {
            if r.failures.len() < 5 {
                r.failures.push(format!("case {i}:\n{d}"));
            }
        }
    }
    r
}

/// A random labelled tree over `a`, `b`, `c` with some text leaves.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> XmlTree {
    let target = rng.random_range(1..=max_nodes.max(1));
    let mut b = TreeBuilder::new();
    b.open("r");
    while b.len() < target {
        match rng.random_range(0..10) {
            0..5 => {
                b.open(pick(rng, &["a", "b", "c"]));
            }
            5 if b.len() + 1 < target => {
                b.text(pick(rng, &TEXTS));
            }
            _ if b.depth() > 1 => b.close(),
            _ => {
                b.open(pick(rng, &["a", "b", "c"]));
            }
        }
    }
    while b.depth() > 0 {
        b.close();
    }
    b.finish()
}

#[derive(Clone, Debug, Default)]
pub struct SelfOracleReport {
    pub cases: usize,
    pub agree: usize,
    pub failures: Vec<String>,
}

/// Indexed evaluator against the brute-force one on random trees and
/// queries using every axis, positions and node comparison.
pub fn run_self_oracle(seed: u64, cases: usize, max_nodes: usize) -> SelfOracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Dtd::new(alloc::vec![
        ("r".to_string(), ContentModel::star(ContentModel::Alt(alloc::vec![ContentModel::name("a"), ContentModel::name("b")]))),
        ("a".to_string(), ContentModel::star(ContentModel::Alt(alloc::vec![ContentModel::name("b"), ContentModel::name("c")]))),
        ("b".to_string(), ContentModel::star(ContentModel::name("a"))),
        ("c".to_string(), ContentModel::Empty),
    ])
    .expect("label alphabet");
    let mut r = SelfOracleReport { cases, ..SelfOracleReport::default() };
    for i in 0..cases {
        let t = random_tree(&mut rng, max_nodes);
        let q = QueryGen { d: &d, reach: None, upward: true, full: true }.path(&mut rng, 4, &TypeSet::new()).0;
        let elems: Vec<NodeId> = t.elements().collect();
        let ctx = if rng.random_bool(0.5) { XmlTree::ROOT } else { *pick(&mut rng, &elems) };
        let fast = eval(&t, &q, ctx);
        let slow: Vec<NodeId> = naive_eval(&t, &q, ctx).into_iter().collect();
        if fast == slow {
            r.agree += 1;
        } else if r.failures.len() < 5 {
            r.failures.push(format!("case {i}: {} at {} on {}", serialize(&q), t.path_of(ctx), t.to_xml()));
        }
    }
    r
}

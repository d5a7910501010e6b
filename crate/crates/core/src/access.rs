//! Accessibility of document nodes under a specification, and the view
//! document obtained by materializing it.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::eval::Evaluator;
use crate::spec::{AccessSpec, AnnValue};
use crate::tree::{NodeId, NodeKind, TreeBuilder, XmlTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessLabel {
    Accessible,
    Hidden,
    /// Hidden together with its whole subtree.
    Blocked,
}

#[derive(Clone, Debug)]
pub struct Materialized {
    pub view: XmlTree,
    /// View node id to original node id.
    pub node_map: Vec<NodeId>,
    /// Label of every original node (text nodes take their parent's).
    pub labels: Vec<AccessLabel>,
}

impl Materialized {
    /// Original ids of the view nodes in `ids`, sorted.
    pub fn to_original(&self, ids: &[NodeId]) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = ids.iter().map(|&v| self.node_map[v as usize]).collect();
        out.sort_unstable();
        out
    }
}

fn ann<'s>(t: &XmlTree, s: &'s AccessSpec, n: NodeId) -> Option<&'s AnnValue> {
    let p = t.parent(n)?;
    let d = s.dtd();
    let pi = d.index_of(t.label(p)?)?;
    let ci = d.index_of(t.label(n)?)?;
    s.get_idx(pi, ci)
}

fn holds<'s>(ev: &mut Evaluator<'_, 's>, v: &'s AnnValue, n: NodeId) -> bool {
    match v.qualifier() {
        Some(q) => ev.qual(q, n),
        None => true,
    }
}

/// Decides accessibility of `n` by walking upward from it: the nearest
/// annotated ancestor-or-self decides, unless some annotated ancestor above
/// hides its whole subtree.
pub fn oracle_accessible(t: &XmlTree, s: &AccessSpec, n: NodeId) -> bool {
    let mut ev = Evaluator::new(t);
    oracle_with(&mut ev, t, s, n)
}

fn oracle_with<'s>(ev: &mut Evaluator<'_, 's>, t: &XmlTree, s: &'s AccessSpec, n: NodeId) -> bool {
    if !t.is_element(n) {
        return false;
    }
    let mut decided: Option<bool> = None;
    let mut cur = n;
    while t.parent(cur).is_some() {
        if let Some(v) = ann(t, s, cur) {
            match decided {
                None => {
                    let ok = match v {
                        AnnValue::Allow => true,
                        AnnValue::Deny | AnnValue::DenyDown => false,
                        AnnValue::Cond(_) | AnnValue::CondDown(_) => holds(ev, v, cur),
                    };
                    if !ok && v.is_downward_closed() {
                        return false;
                    }
                    decided = Some(ok);
                }
                Some(_) => {
                    if v.is_downward_closed() && !matches!(v, AnnValue::CondDown(_) if holds(ev, v, cur)) {
                        return false;
                    }
                }
            }
        }
        cur = t.parent(cur).unwrap_or(cur);
    }
    decided.unwrap_or(true)
}

/// All accessible elements, via the upward oracle.
pub fn oracle_set(t: &XmlTree, s: &AccessSpec) -> Vec<NodeId> {
    let mut ev = Evaluator::new(t);
    t.elements().filter(|&n| oracle_with(&mut ev, t, s, n)).collect()
}

/// Top-down labelling of every node.
pub fn label_nodes(t: &XmlTree, s: &AccessSpec) -> Vec<AccessLabel> {
    let mut ev = Evaluator::new(t);
    let mut labels = alloc::vec![AccessLabel::Accessible; t.len()];
    // Preorder ids: parents are labelled before children.
    for n in 1..t.len() as NodeId {
        let p = t.parent(n).unwrap_or(0);
        let up = labels[p as usize];
        labels[n as usize] = if !t.is_element(n) || up == AccessLabel::Blocked {
            up
        } else {
            match ann(t, s, n) {
                None => up,
                Some(AnnValue::Allow) => AccessLabel::Accessible,
                Some(AnnValue::Deny) => AccessLabel::Hidden,
                Some(AnnValue::DenyDown) => AccessLabel::Blocked,
                Some(v @ AnnValue::Cond(_)) => {
                    if holds(&mut ev, v, n) {
                        AccessLabel::Accessible
                    } else {
                        AccessLabel::Hidden
                    }
                }
                Some(v @ AnnValue::CondDown(_)) => {
                    if holds(&mut ev, v, n) {
                        AccessLabel::Accessible
                    } else {
                        AccessLabel::Blocked
                    }
                }
            }
        };
    }
    labels
}

/// Builds the view document: hidden elements are removed with their
/// children promoted, blocked subtrees are dropped, and text survives only
/// under accessible elements.
pub fn materialize(t: &XmlTree, s: &AccessSpec) -> Materialized {
    let labels = label_nodes(t, s);
    let mut b = TreeBuilder::new();
    let mut node_map = Vec::new();
    if !t.is_empty() {
        emit(t, &labels, XmlTree::ROOT, &mut b, &mut node_map);
    }
    Materialized { view: b.finish(), node_map, labels }
}

fn emit(t: &XmlTree, labels: &[AccessLabel], n: NodeId, b: &mut TreeBuilder, map: &mut Vec<NodeId>) {
    match labels[n as usize] {
        AccessLabel::Blocked => {}
        AccessLabel::Hidden => {
            for &c in t.children(n) {
                if t.is_element(c) {
                    emit(t, labels, c, b, map);
                }
            }
        }
        AccessLabel::Accessible => match &t.node(n).kind {
            NodeKind::Text(s) => {
                let before = b.len();
                b.text(s);
                if b.len() > before {
                    map.push(n);
                }
            }
            NodeKind::Element(_) => {
                b.open(t.label(n).unwrap_or(""));
                map.push(n);
                for &c in t.children(n) {
                    emit(t, labels, c, b, map);
                }
                b.close();
            }
        },
    }
}

/// Set equality of two answers, ignoring order and duplicates.
pub fn answer_equal(a: &[NodeId], b: &[NodeId]) -> bool {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    a == b
}

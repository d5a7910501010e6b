//! Brute-force reference evaluator. Slow on purpose: no indexes, no memo,
//! every step recomputed per context node. Used to cross-check [`crate::eval`].

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::tree::{NodeId, XmlTree};
use crate::xpath::{Axis, Label, Path, Qual, Step};

pub fn naive_eval(t: &XmlTree, p: &Path, ctx: NodeId) -> BTreeSet<NodeId> {
    path(t, p, ctx)
}

pub fn naive_qual(t: &XmlTree, q: &Qual, n: NodeId) -> bool {
    qual(t, q, n, 1)
}

fn label_ok(t: &XmlTree, n: NodeId, l: &Label) -> bool {
    match t.label(n) {
        Some(s) => l.matches(s),
        None => false,
    }
}

fn axis_list(t: &XmlTree, axis: Axis, n: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    match axis {
        Axis::SelfAxis => out.push(n),
        Axis::Child => out.extend(t.children(n).iter().copied()),
        Axis::Descendant => {
            fn walk(t: &XmlTree, n: NodeId, out: &mut Vec<NodeId>) {
                for &c in t.children(n) {
                    out.push(c);
                    walk(t, c, out);
                }
            }
            walk(t, n, &mut out);
        }
        Axis::Parent => out.extend(t.parent(n)),
        Axis::Ancestor | Axis::AncestorOrSelf => {
            if axis == Axis::AncestorOrSelf {
                out.push(n);
            }
            let mut cur = t.parent(n);
            while let Some(p) = cur {
                out.push(p);
                cur = t.parent(p);
            }
        }
    }
    out
}

fn step(t: &XmlTree, s: &Step, n: NodeId) -> BTreeSet<NodeId> {
    let list: Vec<NodeId> = axis_list(t, s.axis, n).into_iter().filter(|&m| label_ok(t, m, &s.label)).collect();
    filter(t, list, &s.quals)
}

fn filter(t: &XmlTree, mut list: Vec<NodeId>, qs: &[Qual]) -> BTreeSet<NodeId> {
    for q in qs {
        let mut next = Vec::new();
        for (i, &m) in list.iter().enumerate() {
            if qual(t, q, m, i + 1) {
                next.push(m);
            }
        }
        list = next;
    }
    list.into_iter().collect()
}

fn path(t: &XmlTree, p: &Path, n: NodeId) -> BTreeSet<NodeId> {
    match p {
        Path::Step(s) => step(t, s, n),
        Path::Slash(a, b) => path(t, a, n).into_iter().flat_map(|m| path(t, b, m)).collect(),
        Path::Union(bs) => bs.iter().flat_map(|b| path(t, b, n)).collect(),
        Path::Filter(inner, qs) => {
            let mut list: Vec<NodeId> = path(t, inner, n).into_iter().collect();
            if inner.last_is_upward() {
                list.reverse();
            }
            filter(t, list, qs)
        }
    }
}

fn qual(t: &XmlTree, q: &Qual, n: NodeId, pos: usize) -> bool {
    match q {
        Qual::Path(p) => !path(t, p, n).is_empty(),
        Qual::TextEquals(p, c) => path(t, p, n).into_iter().any(|m| t.direct_text(m) == *c),
        Qual::NodeEquals(p, l) => label_ok(t, n, l) && path(t, p, n).contains(&n),
        Qual::Position(k) => *k == pos,
        Qual::And(a, b) => qual(t, a, n, pos) && qual(t, b, n, pos),
        Qual::Or(a, b) => qual(t, a, n, pos) || qual(t, b, n, pos),
        Qual::Not(a) => !qual(t, a, n, pos),
        Qual::True => true,
        Qual::False => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval;
    use crate::tree::TreeBuilder;
    use crate::xpath::parse_xpath;
    use proptest::prelude::*;

    fn arb_tree() -> impl Strategy<Value = XmlTree> {
        // Parent index (relative to earlier nodes) and label per node.
        prop::collection::vec((any::<prop::sample::Index>(), 0usize..3, prop::bool::weighted(0.15)), 0..40).prop_map(
            |spec| {
                let mut parents: Vec<usize> = Vec::new();
                let mut labels = alloc::vec![0usize];
                let mut texts = alloc::vec![false];
                for (i, (p, l, txt)) in spec.iter().enumerate() {
                    parents.push(p.index(i + 1));
                    labels.push(*l);
                    texts.push(*txt);
                }
                let n = labels.len();
                let mut kids = alloc::vec![Vec::new(); n];
                for (i, &p) in parents.iter().enumerate() {
                    kids[p].push(i + 1);
                }
                let names = ["a", "b", "c"];
                let mut b = TreeBuilder::new();
                fn go(b: &mut TreeBuilder, i: usize, kids: &[Vec<usize>], labels: &[usize], texts: &[bool], names: &[&str]) {
                    b.open(names[labels[i]]);
                    if texts[i] {
                        b.text("x");
                    }
                    for &k in &kids[i] {
                        go(b, k, kids, labels, texts, names);
                    }
                    b.close();
                }
                go(&mut b, 0, &kids, &labels, &texts, &names);
                b.finish()
            },
        )
    }

    const QUERIES: &[&str] = &[
        "descendant::a",
        "descendant::*[child::b]/child::*",
        "descendant::c/ancestor::a[1]",
        "descendant::c/ancestor::*[2]",
        "descendant::*[ancestor-or-self::*[self::b][1][parent::a]]",
        "descendant::b[not(child::c) and descendant::a = 'x']",
        "descendant::a[descendant::c/ancestor::*[1] = self::a]",
        "descendant::b/parent::* | child::a/descendant::c",
        "(descendant::c/ancestor::*)[2]",
        "child::*[2]/descendant::*[child::a][1]",
        "descendant::*[child::a[2]]",
        "descendant::a[ancestor::b/parent::c or self::a = 'x']",
    ];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn fast_evaluator_agrees(t in arb_tree()) {
            for q in QUERIES {
                let p = parse_xpath(q).unwrap();
                let fast: BTreeSet<NodeId> = eval(&t, &p, XmlTree::ROOT).into_iter().collect();
                prop_assert_eq!(&fast, &naive_eval(&t, &p, XmlTree::ROOT), "{}", q);
                for n in t.elements().step_by(3) {
                    let fast: BTreeSet<NodeId> = eval(&t, &p, n).into_iter().collect();
                    prop_assert_eq!(fast, naive_eval(&t, &p, n), "{} at {}", q, n);
                }
            }
        }
    }
}

//! Accessibility predicates over the original document, as XPath qualifiers.
//!
//! `a1` finds the nearest ancestor-or-self node concerned by an annotation
//! (or the root) and checks that its annotation grants access; `a2` rules out
//! downward-closed denials above. `acc = a1 and a2`, and `a+` selects the
//! accessible proper ancestors nearest-first.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dtd::Dtd;
use crate::spec::{AccessSpec, AnnValue};
use crate::typeset::TypeSet;
use crate::xpath::{Abbrev, Axis, Label, Macros, Path, Qual, Step};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateKit {
    pub a1: Qual,
    pub a2: Qual,
    pub acc: Qual,
    pub a_plus: Step,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("empty type set")]
pub struct EmptySet;

fn self_step(name: &str) -> Path {
    Path::named(Axis::SelfAxis, name)
}

/// `self::A[q]/parent::P` for the edge `(P, A)`.
fn edge_term(parent: &str, child: &str, q: Option<&Qual>) -> Qual {
    let mut s = Step::new(Axis::SelfAxis, Label::name(child));
    if let Some(q) = q {
        s.quals.push(q.clone());
    }
    Qual::exists(Path::slash(Path::Step(s), Path::named(Axis::Parent, parent)))
}

pub fn build_kit(s: &AccessSpec) -> PredicateKit {
    let root = s.dtd().root();
    let mut concerned = Vec::new();
    let mut valid = Vec::new();
    let mut down = Vec::new();
    for e in s.entries() {
        let (p, c) = (e.parent.as_str(), e.child.as_str());
        concerned.push(edge_term(p, c, None));
        match &e.value {
            AnnValue::Allow => valid.push(edge_term(p, c, None)),
            AnnValue::Cond(q) => valid.push(edge_term(p, c, Some(q))),
            AnnValue::CondDown(q) => {
                valid.push(edge_term(p, c, Some(q)));
                let mut a = Step::new(Axis::Ancestor, Label::name(c));
                a.quals.push(Qual::not(q.clone()));
                down.push(Qual::not(Qual::exists(Path::slash(Path::Step(a), Path::named(Axis::Parent, p)))));
            }
            AnnValue::DenyDown => {
                let a = Path::named(Axis::Ancestor, c);
                down.push(Qual::not(Qual::exists(Path::slash(a, Path::named(Axis::Parent, p)))));
            }
            AnnValue::Deny => {}
        }
    }
    concerned.push(Qual::exists(self_step(root)));
    valid.push(Qual::exists(self_step(root)));
    let a1_step = Step {
        axis: Axis::AncestorOrSelf,
        label: Label::Wildcard,
        quals: alloc::vec![Qual::or_all(concerned), Qual::Position(1), Qual::or_all(valid)],
    };
    let a1 = Qual::exists(Path::Step(a1_step));
    let a2 = Qual::and_all(down);
    let acc = Qual::and(a1.clone(), a2.clone());
    let a_plus = Step { axis: Axis::Ancestor, label: Label::Wildcard, quals: alloc::vec![a1.clone()] };
    PredicateKit { a1, a2, acc, a_plus }
}

impl PredicateKit {
    /// `a+[1]`: the nearest accessible proper ancestor.
    pub fn a_plus_first(&self) -> Step {
        self.a_plus.clone().with(Qual::Position(1))
    }

    /// `a+[1]/self::B` as a path.
    pub fn a_elem_path(&self, b: &Label) -> Path {
        Path::slash(Path::Step(self.a_plus_first()), Path::step(Axis::SelfAxis, b.clone()))
    }

    pub fn print(&self, p: &Path) -> String {
        self.abbrev(|ab| ab.path(p))
    }

    pub fn print_qual(&self, q: &Qual) -> String {
        self.abbrev(|ab| ab.qual(q))
    }

    fn abbrev<R>(&self, f: impl FnOnce(&Abbrev<'_>) -> R) -> R {
        let quals: [(&str, &Qual); 3] = [("acc", &self.acc), ("a1", &self.a1), ("a2", &self.a2)];
        let steps: [(&str, &Step); 1] = [("a+", &self.a_plus)];
        f(&Abbrev { quals: &quals, steps: &steps })
    }
}

impl Macros for PredicateKit {
    fn qual(&self, name: &str) -> Option<Qual> {
        match name {
            "acc" => Some(self.acc.clone()),
            "a1" => Some(self.a1.clone()),
            "a2" => Some(self.a2.clone()),
            _ => None,
        }
    }

    fn step(&self, name: &str) -> Option<Step> {
        (name == "a+").then(|| self.a_plus.clone())
    }
}

/// `a+[1]/self::B`: does the nearest accessible proper ancestor match `B`?
pub fn a_elem(kit: &PredicateKit, b: &Label) -> Qual {
    Qual::exists(kit.a_elem_path(b))
}

/// Union of one `axis::T` step per type of `items`, in declaration order.
pub fn fs(d: &Dtd, items: &TypeSet, axis: Axis) -> Result<Path, EmptySet> {
    fs_with(d, items, axis, Vec::new())
}

/// `fs` with qualifiers: on the single step, or on the grouped union.
pub fn fs_with(d: &Dtd, items: &TypeSet, axis: Axis, quals: Vec<Qual>) -> Result<Path, EmptySet> {
    let steps: Vec<Path> = items.iter().map(|t| Path::named(axis, d.name(t))).collect();
    match steps.len() {
        0 => Err(EmptySet),
        1 => Ok(steps.into_iter().next().ok_or(EmptySet)?.filtered(quals)),
        _ => Ok(Path::Filter(Box::new(Path::Union(steps)), quals)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::oracle_accessible;
    use crate::dtd::parse_dtd;
    use crate::eval::Evaluator;
    use crate::spec::{compat_mode, parse_spec};
    use crate::tree::parse_xml;
    use crate::xpath::{classify_qual, parse_qual, serialize_qual, FragmentClass};

    const FIG3: &str = "<!ELEMENT root (A)><!ELEMENT A (B|C|D)*><!ELEMENT B (H)><!ELEMENT C (H)>\
        <!ELEMENT D (E|F|G)*><!ELEMENT E (G)><!ELEMENT F (G)><!ELEMENT G (D|H)*><!ELEMENT H EMPTY>";

    fn fig3_spec() -> AccessSpec {
        let d = parse_dtd(FIG3).unwrap();
        compat_mode(&parse_spec("ann(root,A)=[child::D]\nann(D,E)=Y\nann(D,F)=N\nann(C,H)=N", &d).unwrap())
    }

    #[test]
    fn concerned_terms_enumerate_edges_then_root() {
        let k = build_kit(&fig3_spec());
        let Qual::Path(Path::Step(s)) = &k.a1 else { panic!() };
        assert_eq!(s.axis, Axis::AncestorOrSelf);
        assert_eq!(
            serialize_qual(&s.quals[0]),
            "self::A/parent::root or self::E/parent::D or self::F/parent::D or self::H/parent::C or self::root"
        );
        assert_eq!(s.quals[1], Qual::Position(1));
        assert_eq!(
            serialize_qual(&s.quals[2]),
            "self::A[child::D]/parent::root or self::E/parent::D or self::root"
        );
        assert_eq!(serialize_qual(&k.a2), "not(ancestor::A[not(child::D)]/parent::root)");
        assert_eq!(k.acc, Qual::and(k.a1.clone(), k.a2.clone()));
        assert_eq!(k.a_plus, Step { axis: Axis::Ancestor, label: Label::Wildcard, quals: alloc::vec![k.a1.clone()] });
        assert_eq!(classify_qual(&k.acc), FragmentClass::XUpPos);
    }

    #[test]
    fn plain_values_need_no_second_conjunct() {
        let d = parse_dtd(FIG3).unwrap();
        let k = build_kit(&parse_spec("ann(D,E)=Y\nann(D,F)=N\nann(root,A)=[child::D]", &d).unwrap());
        assert_eq!(k.a2, Qual::True);
    }

    #[test]
    fn size_is_linear_in_annotations() {
        let d = parse_dtd(FIG3).unwrap();
        let base = build_kit(&parse_spec("", &d).unwrap()).acc.node_count();
        let s = fig3_spec();
        let q_nodes: usize = s.entries().iter().filter_map(|e| e.value.qualifier()).map(Qual::node_count).sum();
        let n = build_kit(&s).acc.node_count();
        assert!(n <= base + 16 * s.entries().len() + 2 * q_nodes, "{n}");
    }

    #[test]
    fn fs_shapes() {
        let d = parse_dtd(FIG3).unwrap();
        let set: TypeSet = ["A", "D", "E"].iter().map(|n| d.index_of(n).unwrap()).collect();
        let p = fs(&d, &set, Axis::Descendant).unwrap();
        assert_eq!(crate::xpath::serialize(&p), "(descendant::A | descendant::D | descendant::E)");
        let one = fs(&d, &TypeSet::singleton(8), Axis::Descendant).unwrap();
        assert_eq!(crate::xpath::serialize(&one), "descendant::H");
        assert_eq!(fs(&d, &TypeSet::new(), Axis::Child), Err(EmptySet));
    }

    #[test]
    fn acc_selects_only_the_accessible_leaf() {
        let s = fig3_spec();
        let t = parse_xml(
            "<root><A><D><E><G><D><F><G><H/></G></F></D></G></E><F><G><D><E><G><H/></G></E></D></G></F></D>\
             <C><H/></C></A></root>",
        )
        .unwrap();
        let k = build_kit(&s);
        let q = Path::named(Axis::Descendant, "H").filtered(alloc::vec![k.acc.clone()]);
        let got = crate::eval::eval(&t, &q, 0);
        let paths: Vec<String> = got.iter().map(|&n| t.path_of(n)).collect();
        assert_eq!(paths, ["/0/0/1/0/0/0/0/0"]);
        let mut ev = Evaluator::new(&t);
        for n in t.elements() {
            assert_eq!(ev.qual(&k.acc, n), oracle_accessible(&t, &s, n), "node {}", t.path_of(n));
        }
    }

    #[test]
    fn macros_round_trip() {
        let k = build_kit(&fig3_spec());
        let p = crate::xpath::parse_with_macros("descendant::H[{acc}][{a+}[1]/self::E]", &k).unwrap();
        assert_eq!(k.print(&p), "descendant::H[{acc}][{a+}[1]/self::E]");
        let q = parse_qual("child::D").unwrap();
        assert_eq!(k.print_qual(&Qual::and(q, k.a2.clone())), "child::D and {a2}");
    }
}

//! Content-model membership via Glushkov automata, and tree conformance.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dtd::{ContentModel, Dtd};
use crate::tree::XmlTree;

/// Position automaton of a content model. Positions are the `Name`
/// occurrences; symbols are type indexes of the owning DTD.
#[derive(Clone, Debug)]
pub struct Glushkov {
    symbol: Vec<usize>,
    first: Vec<usize>,
    last: Vec<bool>,
    follow: Vec<Vec<usize>>,
    nullable: bool,
}

struct Frag {
    nullable: bool,
    first: Vec<usize>,
    last: Vec<usize>,
}

impl Glushkov {
    pub fn new(model: &ContentModel, dtd: &Dtd) -> Glushkov {
        let mut g = Glushkov { symbol: Vec::new(), first: Vec::new(), last: Vec::new(), follow: Vec::new(), nullable: false };
        let f = g.build(model, dtd);
        g.last = alloc::vec![false; g.symbol.len()];
        for &p in &f.last {
            g.last[p] = true;
        }
        g.first = f.first;
        g.nullable = f.nullable;
        for fl in &mut g.follow {
            fl.sort_unstable();
            fl.dedup();
        }
        g
    }

    fn build(&mut self, m: &ContentModel, dtd: &Dtd) -> Frag {
        match m {
            ContentModel::Text | ContentModel::Empty => Frag { nullable: true, first: Vec::new(), last: Vec::new() },
            ContentModel::Name(n) => {
                let p = self.symbol.len();
                self.symbol.push(dtd.index_of(n).unwrap_or(usize::MAX));
                self.follow.push(Vec::new());
                Frag { nullable: false, first: alloc::vec![p], last: alloc::vec![p] }
            }
            ContentModel::Alt(xs) => {
                let mut acc = Frag { nullable: false, first: Vec::new(), last: Vec::new() };
                for x in xs {
                    let f = self.build(x, dtd);
                    acc.nullable |= f.nullable;
                    acc.first.extend(f.first);
                    acc.last.extend(f.last);
                }
                acc
            }
            ContentModel::Seq(xs) => {
                let mut acc = Frag { nullable: true, first: Vec::new(), last: Vec::new() };
                for x in xs {
                    let f = self.build(x, dtd);
                    for &l in &acc.last {
                        self.follow[l].extend_from_slice(&f.first);
                    }
                    if acc.nullable {
                        acc.first.extend_from_slice(&f.first);
                    }
                    if f.nullable {
                        acc.last.extend(f.last);
                    } else {
                        acc.last = f.last;
                    }
                    acc.nullable &= f.nullable;
                }
                acc
            }
            ContentModel::Star(x) => {
                let f = self.build(x, dtd);
                for &l in &f.last {
                    self.follow[l].extend_from_slice(&f.first);
                }
                Frag { nullable: true, first: f.first, last: f.last }
            }
        }
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut cur: Vec<usize> = Vec::new();
        let mut next: Vec<usize> = Vec::new();
        let mut mark = alloc::vec![false; self.symbol.len()];
        for (i, &a) in word.iter().enumerate() {
            next.clear();
            let sources: &[usize] = if i == 0 { &self.first } else { &[] };
            let pool = sources.iter().copied().chain(cur.iter().flat_map(|&p| self.follow[p].iter().copied()));
            for q in pool {
                if self.symbol[q] == a && !mark[q] {
                    mark[q] = true;
                    next.push(q);
                }
            }
            for &q in &next {
                mark[q] = false;
            }
            if next.is_empty() {
                return false;
            }
            core::mem::swap(&mut cur, &mut next);
        }
        if word.is_empty() {
            self.nullable
        } else {
            cur.iter().any(|&p| self.last[p])
        }
    }
}

/// Per-type automata for a DTD.
pub struct Validator<'d> {
    dtd: &'d Dtd,
    automata: Vec<Glushkov>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl<'d> Validator<'d> {
    pub fn new(dtd: &'d Dtd) -> Self {
        let automata = (0..dtd.len()).map(|i| Glushkov::new(dtd.production_at(i), dtd)).collect();
        Validator { dtd, automata }
    }

    pub fn accepts(&self, type_index: usize, word: &[usize]) -> bool {
        self.automata[type_index].accepts(word)
    }

    pub fn check(&self, t: &XmlTree) -> Result<(), Violation> {
        if t.is_empty() {
            return Err(Violation { path: "/".into(), message: "empty document".into() });
        }
        if t.label(XmlTree::ROOT) != Some(self.dtd.root()) {
            return Err(Violation { path: "/".into(), message: "root label differs from the DTD root".into() });
        }
        let mut word = Vec::new();
        for n in t.elements() {
            let label = t.label(n).unwrap_or("");
            let Some(ti) = self.dtd.index_of(label) else {
                return Err(Violation { path: t.path_of(n), message: alloc::format!("undeclared element `{label}`") });
            };
            let fail = |m: &str| Err(Violation { path: t.path_of(n), message: m.to_string() });
            let has_text = t.children(n).iter().any(|&c| !t.is_element(c));
            match self.dtd.production_at(ti) {
                ContentModel::Text => {
                    if t.element_children(n).next().is_some() {
                        return fail("element children inside #PCDATA content");
                    }
                }
                ContentModel::Empty => {
                    if !t.children(n).is_empty() {
                        return fail("children inside EMPTY content");
                    }
                }
                _ => {
                    if has_text {
                        return fail("text inside element content");
                    }
                    word.clear();
                    for c in t.element_children(n) {
                        match t.label(c).and_then(|l| self.dtd.index_of(l)) {
                            Some(ci) => word.push(ci),
                            None => {
                                return Err(Violation {
                                    path: t.path_of(c),
                                    message: alloc::format!("undeclared element `{}`", t.label(c).unwrap_or("")),
                                })
                            }
                        }
                    }
                    if !self.automata[ti].accepts(&word) {
                        let labels: Vec<&str> = t.element_children(n).filter_map(|c| t.label(c)).collect();
                        return Err(Violation {
                            path: t.path_of(n),
                            message: alloc::format!("children `{}` do not match {}", labels.join(" "), self.dtd.production_at(ti)),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Checks that `t` conforms to `d`, reporting the first violation.
pub fn conforms(t: &XmlTree, d: &Dtd) -> Result<(), Violation> {
    Validator::new(d).check(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtd::parse_dtd;
    use crate::tree::parse_xml;
    use proptest::prelude::*;

    fn view21() -> Dtd {
        parse_dtd("<!ELEMENT root (A)><!ELEMENT A (D|EMPTY)><!ELEMENT D EMPTY>").unwrap()
    }

    #[test]
    fn example_view_instance() {
        let d = view21();
        assert!(conforms(&parse_xml("<root><A><D/></A></root>").unwrap(), &d).is_ok());
        assert!(conforms(&parse_xml("<root><A/></root>").unwrap(), &d).is_ok());
        let bad = conforms(&parse_xml("<root><A><D/><D/></A></root>").unwrap(), &d).unwrap_err();
        assert_eq!(bad.path, "/0");
    }

    #[test]
    fn text_and_empty() {
        let d = parse_dtd("<!ELEMENT r (a,b)><!ELEMENT a (#PCDATA)><!ELEMENT b EMPTY>").unwrap();
        assert!(conforms(&parse_xml("<r><a>x</a><b/></r>").unwrap(), &d).is_ok());
        assert!(conforms(&parse_xml("<r><a/><b/></r>").unwrap(), &d).is_ok());
        assert!(conforms(&parse_xml("<r><a>x</a><b>y</b></r>").unwrap(), &d).is_err());
        assert!(conforms(&parse_xml("<r>t<a>x</a><b/></r>").unwrap(), &d).is_err());
        assert!(conforms(&parse_xml("<x/>").unwrap(), &d).is_err());
    }

    /// Reference matcher by brute-force language membership (derivative-free
    /// backtracking over split points).
    fn matches(m: &ContentModel, w: &[&str]) -> bool {
        match m {
            ContentModel::Text | ContentModel::Empty => w.is_empty(),
            ContentModel::Name(n) => w.len() == 1 && w[0] == n,
            ContentModel::Alt(xs) => xs.iter().any(|x| matches(x, w)),
            ContentModel::Seq(xs) => match xs.split_first() {
                None => w.is_empty(),
                Some((h, t)) => {
                    let rest = if t.len() == 1 { t[0].clone() } else { ContentModel::Seq(t.to_vec()) };
                    let rest = if t.is_empty() { ContentModel::Empty } else { rest };
                    (0..=w.len()).any(|i| matches(h, &w[..i]) && matches(&rest, &w[i..]))
                }
            },
            ContentModel::Star(x) => w.is_empty() || (1..=w.len()).any(|i| matches(x, &w[..i]) && matches(m, &w[i..])),
        }
    }

    fn arb_model() -> impl Strategy<Value = ContentModel> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["a", "b", "c"]).prop_map(ContentModel::name),
            Just(ContentModel::Empty),
        ];
        leaf.prop_recursive(3, 10, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(ContentModel::Seq),
                prop::collection::vec(inner.clone(), 2..4).prop_map(ContentModel::Alt),
                inner.prop_map(ContentModel::star),
            ]
        })
    }

    proptest! {
        #[test]
        fn glushkov_agrees_with_backtracking(m in arb_model(), w in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..6)) {
            let any = ContentModel::star(ContentModel::Alt(vec![ContentModel::name("a"), ContentModel::name("b"), ContentModel::name("c")]));
            let d = Dtd::new(vec![
                ("r".into(), any),
                ("a".into(), ContentModel::Empty),
                ("b".into(), ContentModel::Empty),
                ("c".into(), ContentModel::Empty),
            ]).unwrap();
            let g = Glushkov::new(&m, &d);
            let word: Vec<usize> = w.iter().map(|s| d.index_of(s).unwrap()).collect();
            prop_assert_eq!(g.accepts(&word), matches(&m, &w));
        }
    }
}

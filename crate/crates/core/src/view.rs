//! Derivation of the DTD view exposed to users of an access specification.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dtd::{is_recursive, ContentModel, Dtd};
use crate::spec::{AccessSpec, AnnValue};
use crate::typeset::TypeSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeriveOptions {
    /// Emit conditionally granted children as `(B|ε)` instead of `B`.
    pub optional_conditionals: bool,
}

#[derive(Clone, Debug)]
pub struct DtdView {
    pub view: Dtd,
    /// Content of each type under each inherited accessibility; `None` means
    /// the type contributes nothing.
    pub parsed: BTreeMap<(String, bool), Option<ContentModel>>,
    /// Content-model nodes visited during derivation.
    pub visits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewStats {
    pub kept: usize,
    pub elided: Vec<String>,
    pub recursive: bool,
    pub visits: usize,
    pub visit_bound: usize,
}

pub fn derive_view(s: &AccessSpec) -> DtdView {
    derive_view_with(s, DeriveOptions::default())
}

pub fn derive_view_with(s: &AccessSpec, opts: DeriveOptions) -> DtdView {
    let dtd = s.dtd();
    let n = dtd.len();
    let mut d = Deriver {
        spec: s,
        dtd,
        opts,
        memo: alloc::vec![[None, None]; n],
        busy: alloc::vec![false; n],
        hidden_reach: hidden_reach(s),
        visible: TypeSet::singleton(0),
        queue: alloc::vec![0],
        visits: 0,
    };
    while let Some(t) = d.queue.pop() {
        d.exp(t, true);
    }
    let mut decls = Vec::new();
    for t in d.visible.iter() {
        let m = d.memo[t][1].clone().flatten().unwrap_or(ContentModel::Empty);
        decls.push((dtd.name(t).to_string(), m));
    }
    let view = match Dtd::new(decls) {
        Ok(v) => v,
        Err(e) => panic!("derived view is not a valid DTD: {e}"),
    };
    let mut parsed = BTreeMap::new();
    for (t, slots) in d.memo.iter().enumerate() {
        for (acc, slot) in slots.iter().enumerate() {
            if let Some(m) = slot {
                parsed.insert((dtd.name(t).to_string(), acc == 1), m.clone());
            }
        }
    }
    DtdView { view, parsed, visits: d.visits }
}

pub fn view_stats(s: &AccessSpec, v: &DtdView) -> ViewStats {
    let elided = s.dtd().types().iter().filter(|t| !v.view.contains(t)).cloned().collect();
    ViewStats {
        kept: v.view.len(),
        elided,
        recursive: is_recursive(&v.view),
        visits: v.visits,
        visit_bound: 2 * s.dtd().size(),
    }
}

/// For each type `T`, the visible child types that content of a hidden `T`
/// can surface. Least fixpoint.
fn hidden_reach(s: &AccessSpec) -> Vec<TypeSet> {
    let dtd = s.dtd();
    let n = dtd.len();
    let mut sets = alloc::vec![TypeSet::new(); n];
    loop {
        let mut changed = false;
        for t in 0..n {
            let mut acc = sets[t].clone();
            for c in dtd.child_indexes(t) {
                match s.get_idx(t, c) {
                    None | Some(AnnValue::Deny) => {
                        let sc = sets[c].clone();
                        acc.union_with(&sc);
                    }
                    Some(AnnValue::Allow) | Some(AnnValue::CondDown(_)) => {
                        acc.insert(c);
                    }
                    Some(AnnValue::Cond(_)) => {
                        acc.insert(c);
                        let sc = sets[c].clone();
                        acc.union_with(&sc);
                    }
                    Some(AnnValue::DenyDown) => {}
                }
            }
            if acc != sets[t] {
                sets[t] = acc;
                changed = true;
            }
        }
        if !changed {
            return sets;
        }
    }
}

struct Deriver<'s> {
    spec: &'s AccessSpec,
    dtd: &'s Dtd,
    opts: DeriveOptions,
    memo: Vec<[Option<Option<ContentModel>>; 2]>,
    busy: Vec<bool>,
    hidden_reach: Vec<TypeSet>,
    visible: TypeSet,
    queue: Vec<usize>,
    visits: usize,
}

impl Deriver<'_> {
    fn exp(&mut self, t: usize, acc: bool) -> Option<ContentModel> {
        if let Some(m) = &self.memo[t][acc as usize] {
            return m.clone();
        }
        if !acc && self.busy[t] {
            // Hidden content that surfaces itself again: approximate the
            // recursive occurrence by any sequence of what it can expose.
            let names: Vec<usize> = self.hidden_reach[t].iter().collect();
            for &c in &names {
                self.schedule(c);
            }
            let alts: Vec<ContentModel> = names.iter().map(|&c| ContentModel::name(self.dtd.name(c))).collect();
            return match alts.len() {
                0 => None,
                1 => Some(ContentModel::star(alts.into_iter().next().unwrap_or(ContentModel::Empty))),
                _ => Some(ContentModel::star(ContentModel::Alt(alts))),
            };
        }
        if !acc {
            self.busy[t] = true;
        }
        let model = self.dtd.production_at(t).clone();
        let mut r = self.proc(&model, t, acc);
        if acc && r.is_none() {
            r = Some(ContentModel::Empty);
        }
        if !acc {
            self.busy[t] = false;
        }
        self.memo[t][acc as usize] = Some(r.clone());
        r
    }

    fn schedule(&mut self, t: usize) {
        if self.visible.insert(t) {
            self.queue.push(t);
        }
    }

    fn proc(&mut self, m: &ContentModel, owner: usize, acc: bool) -> Option<ContentModel> {
        self.visits += 1;
        match m {
            ContentModel::Text => acc.then_some(ContentModel::Text),
            ContentModel::Empty => None,
            ContentModel::Name(b) => {
                let bi = self.dtd.index_of(b).unwrap_or(0);
                let name = ContentModel::Name(b.clone());
                match self.spec.get_idx(owner, bi) {
                    None if acc => {
                        self.schedule(bi);
                        Some(name)
                    }
                    None | Some(AnnValue::Deny) => self.exp(bi, false),
                    Some(AnnValue::Allow) => {
                        self.schedule(bi);
                        Some(name)
                    }
                    Some(AnnValue::DenyDown) => None,
                    Some(AnnValue::CondDown(_)) => {
                        self.schedule(bi);
                        Some(self.optional(name))
                    }
                    Some(AnnValue::Cond(_)) => {
                        self.schedule(bi);
                        match self.exp(bi, false) {
                            None => Some(self.optional(name)),
                            Some(h) => Some(alt(alloc::vec![Some(name), Some(h)], false)),
                        }
                    }
                }
            }
            ContentModel::Seq(xs) => {
                let items: Vec<ContentModel> = xs.iter().filter_map(|x| self.proc(x, owner, acc)).collect();
                seq(items)
            }
            ContentModel::Alt(xs) => {
                let items: Vec<Option<ContentModel>> = xs.iter().map(|x| self.proc(x, owner, acc)).collect();
                let nothing = items.iter().all(Option::is_none);
                if nothing {
                    return None;
                }
                Some(alt(items, true))
            }
            ContentModel::Star(x) => self.proc(x, owner, acc).map(|y| match y {
                ContentModel::Star(_) => y,
                y => ContentModel::star(y),
            }),
        }
    }

    fn optional(&self, m: ContentModel) -> ContentModel {
        if self.opts.optional_conditionals {
            ContentModel::Alt(alloc::vec![m, ContentModel::Empty])
        } else {
            m
        }
    }
}

fn seq(items: Vec<ContentModel>) -> Option<ContentModel> {
    let mut out = Vec::new();
    for i in items {
        match i {
            ContentModel::Seq(xs) => out.extend(xs),
            i => out.push(i),
        }
    }
    match out.len() {
        0 => None,
        1 => out.pop(),
        _ => Some(ContentModel::Seq(out)),
    }
}

/// Choice over `items`, `None` standing for an empty alternative.
fn alt(items: Vec<Option<ContentModel>>, empty_for_none: bool) -> ContentModel {
    let mut out: Vec<ContentModel> = Vec::new();
    let mut has_empty = false;
    for i in items {
        match i {
            None if empty_for_none => has_empty = true,
            None => {}
            Some(ContentModel::Empty) => has_empty = true,
            Some(ContentModel::Alt(xs)) => {
                for x in xs {
                    if x == ContentModel::Empty {
                        has_empty = true;
                    } else if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
            Some(x) if !out.contains(&x) => out.push(x),
            Some(_) => {}
        }
    }
    if has_empty {
        out.push(ContentModel::Empty);
    }
    match out.len() {
        0 => ContentModel::Empty,
        1 => out.pop().unwrap_or(ContentModel::Empty),
        _ => ContentModel::Alt(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::conforms;
    use crate::dtd::{parse_dtd, serialize_dtd};
    use crate::spec::{compat_mode, parse_spec};

    const EX21: &str = "<!ELEMENT root (A)><!ELEMENT A (C?, B)><!ELEMENT B EMPTY><!ELEMENT C (D)><!ELEMENT D EMPTY>";

    fn view_of(dtd: &str, ann: &str, compat: bool, opts: DeriveOptions) -> (AccessSpec, DtdView) {
        let d = parse_dtd(dtd).unwrap();
        let mut s = parse_spec(ann, &d).unwrap();
        if compat {
            s = compat_mode(&s);
        }
        let v = derive_view_with(&s, opts);
        (s, v)
    }

    #[test]
    fn small_nonrecursive_view() {
        let (_, v) = view_of(EX21, "ann(root,A)=[child::B]\nann(A,B)=N\nann(A,C)=N\nann(C,D)=Y", true, DeriveOptions::default());
        let expected = parse_dtd("<!ELEMENT root (A)><!ELEMENT A (D|EMPTY)><!ELEMENT D EMPTY>").unwrap();
        assert_eq!(v.view, expected);
        assert_eq!(v.parsed.get(&("C".to_string(), false)), Some(&Some(ContentModel::name("D"))));
        assert_eq!(v.parsed.get(&("B".to_string(), false)), Some(&None));
    }

    #[test]
    fn strict_marks_conditionals_optional() {
        let opts = DeriveOptions { optional_conditionals: true };
        let (_, v) = view_of(EX21, "ann(root,A)=[child::B]\nann(A,B)=N\nann(A,C)=N\nann(C,D)=Y", true, opts);
        assert_eq!(serialize_dtd(&v.view), "<!ELEMENT root (A|EMPTY)>\n<!ELEMENT A (D|EMPTY)>\n<!ELEMENT D EMPTY>\n");
    }

    #[test]
    fn no_annotations_gives_original() {
        let (s, v) = view_of(EX21, "", false, DeriveOptions::default());
        assert_eq!(&v.view, s.dtd());
        let st = view_stats(&s, &v);
        assert_eq!(st.kept, 5);
        assert!(st.elided.is_empty());
        assert!(!st.recursive);
        assert!(st.visits <= st.visit_bound);
    }

    #[test]
    fn overridable_condition_exposes_hidden_content() {
        let (_, v) = view_of(EX21, "ann(A,C)=[child::D]\nann(C,D)=Y", false, DeriveOptions::default());
        assert_eq!(v.view.production("A").unwrap().to_string(), "((C|D|EMPTY),B)");
    }

    #[test]
    fn downward_closed_deny_prunes_regrants() {
        let (_, v) = view_of(EX21, "ann(A,C)=N_h\nann(C,D)=Y", false, DeriveOptions::default());
        assert!(!v.view.contains("C") && !v.view.contains("D"));
        assert_eq!(v.view.production("A").unwrap(), &ContentModel::name("B"));
    }

    const FIG4: &str = "<!ELEMENT root (A*)><!ELEMENT A (A|B)*><!ELEMENT B (D)><!ELEMENT C (D)>\
                        <!ELEMENT D (B|E|C)><!ELEMENT E EMPTY>";

    #[test]
    fn hidden_cycle_terminates_and_exposes_d_and_e() {
        let (s, v) = view_of(FIG4, "ann(D,E)=Y\nann(D,B)=N\nann(C,D)=Y\nann(A,B)=N", false, DeriveOptions::default());
        let names = v.view.production("A").unwrap().names();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(sorted, ["A", "D", "E"]);
        assert!(!v.view.contains("B"));
        let st = view_stats(&s, &v);
        assert!(st.recursive);
        assert!(st.visits <= st.visit_bound, "{} > {}", st.visits, st.visit_bound);
    }

    #[test]
    fn view_conforms_on_small_instance() {
        let opts = DeriveOptions { optional_conditionals: true };
        let (s, v) = view_of(FIG4, "ann(D,E)=Y\nann(D,B)=N\nann(C,D)=Y\nann(A,B)=N", false, opts);
        let t = crate::tree::parse_xml(
            "<root><A><B><D><E/></D></B></A><A><A><B><D><E/></D></B></A></A><A><B><D><C><D><E/></D></C></D></B></A></root>",
        )
        .unwrap();
        let m = crate::access::materialize(&t, &s);
        assert!(conforms(&m.view, &v.view).is_ok(), "{:?}", conforms(&m.view, &v.view));
    }
}

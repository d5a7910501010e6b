//! Security views over (possibly recursive) DTDs.
//!
//! The crate derives a DTD view from an annotated DTD, rewrites downward XPath
//! queries posed over the view into upward/position/node-comparison XPath over
//! the original document, and carries an independent materialization oracle to
//! check that both answer the same nodes.
//!
//! Everything here is `no_std` + `alloc`; file IO and the command line live in
//! the `xsecview` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod access;
pub mod campaign;
pub mod content;
pub mod docgen;
pub mod dtd;
pub mod eval;
pub mod fixtures;
pub mod naive;
pub mod predicates;
pub mod rewrite;
pub mod spec;
pub mod tree;
pub mod typeset;
pub mod view;
pub mod xpath;

pub use access::{answer_equal, materialize, oracle_accessible, oracle_set, AccessLabel, Materialized};
pub use docgen::{generate, generate_corpus, GenConfig, GenError};
pub use dtd::{build_reach_index, is_recursive, parse_dtd, serialize_dtd, ContentModel, Dtd, DtdError, ReachIndex};
pub use eval::{eval, eval_qual, Evaluator};
pub use predicates::{a_elem, build_kit, fs, PredicateKit};
pub use rewrite::{rewrite, rewrite_counted, rewrite_fast, rw_pred, RewriteContext, RewriteError, RewriteOutcome, SecurityView};
pub use spec::{compat_mode, parse_spec, parse_spec_with_vars, serialize_spec, AccessSpec, AnnValue, SpecError};
pub use tree::{parse_xml, NodeId, XmlError, XmlTree};
pub use typeset::TypeSet;
pub use view::{derive_view, derive_view_with, view_stats, DeriveOptions, DtdView, ViewStats};
pub use xpath::{
    classify, parse_qual, parse_with_macros, parse_xpath, parse_xpath_x, serialize, serialize_qual, Axis, FragmentClass,
    Label, Path, Qual, Step, XPathError,
};

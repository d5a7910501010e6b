//! File-level front end over `xsecview-core`.

pub mod args;
mod bench;

use std::fs;
use std::io::Write;
use std::path::Path as FsPath;

use anyhow::{bail, Context, Result};
use serde_json::json;
use xsecview_core::campaign::{run_campaign, run_self_oracle, CampaignConfig};
use xsecview_core::fixtures::{self, Fixture};
use xsecview_core::{
    build_kit, compat_mode, derive_view_with, eval, generate, generate_corpus, materialize, parse_dtd, parse_spec_with_vars,
    parse_with_macros, parse_xml, parse_xpath, serialize, serialize_dtd, serialize_qual, view_stats, AccessSpec,
    DeriveOptions, Dtd, Evaluator, GenConfig, Materialized, NodeId, Path, RewriteOutcome, SecurityView, XmlTree,
};

use args::{Cli, Command, Format, Global, SpecFiles};

/// Process outcome; input errors surface as `Err` instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// DIFFER, DIVERGENT or a failed campaign.
    Mismatch,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Mismatch => 1,
        }
    }
}

fn read(p: &FsPath) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write_out(path: Option<&FsPath>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dtd(p: &FsPath) -> Result<Dtd> {
    parse_dtd(&read(p)?).with_context(|| format!("parsing {}", p.display()))
}

fn parse_vars(vars: &[String]) -> Result<Vec<(String, String)>> {
    vars.iter()
        .map(|v| match v.split_once('=') {
            Some((k, val)) if !k.is_empty() => Ok((k.to_string(), val.to_string())),
            _ => bail!("--var expects NAME=VALUE, got `{v}`"),
        })
        .collect()
}

fn load_spec(files: &SpecFiles, g: &Global) -> Result<AccessSpec> {
    let d = load_dtd(&files.dtd)?;
    let vars = parse_vars(&g.vars)?;
    let s = parse_spec_with_vars(&read(&files.ann)?, &d, &vars).with_context(|| format!("parsing {}", files.ann.display()))?;
    Ok(if g.definition_1 { compat_mode(&s) } else { s })
}

fn load_xml(p: &FsPath) -> Result<XmlTree> {
    parse_xml(&read(p)?).with_context(|| format!("parsing {}", p.display()))
}

fn render(t: &XmlTree, nodes: &[NodeId], f: Format) -> String {
    let mut out = String::new();
    for &n in nodes {
        match f {
            Format::Paths => out.push_str(&t.path_of(n)),
            Format::Xml => t.write_xml(n, &mut out),
        }
        out.push('\n');
    }
    out
}

fn paths(t: &XmlTree, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&n| t.path_of(n)).collect()
}

/// Evaluates `q` over the materialized view from every context node,
/// returning original node ids.
fn view_answer(m: &Materialized, q: &Path, context: Option<&str>) -> Vec<NodeId> {
    let mut ev = Evaluator::new(&m.view);
    let mut got = match context {
        None => ev.eval(q, XmlTree::ROOT),
        Some(l) => {
            let ctxs: Vec<NodeId> = m.view.elements().filter(|&n| m.view.label(n) == Some(l)).collect();
            ctxs.into_iter().flat_map(|n| ev.eval(q, n)).collect()
        }
    };
    got.sort_unstable();
    got.dedup();
    m.to_original(&got)
}

pub fn run(cli: Cli) -> Result<Status> {
    let g = &cli.global;
    match &cli.command {
        Command::Derive { spec, output, optional_conditionals } => {
            let s = load_spec(spec, g)?;
            let v = derive_view_with(&s, DeriveOptions { optional_conditionals: *optional_conditionals });
            let text = serialize_dtd(&v.view);
            if g.json {
                let st = view_stats(&s, &v);
                let j = json!({
                    "view": text,
                    "kept": st.kept,
                    "elided": st.elided,
                    "recursive": st.recursive,
                    "visits": st.visits,
                    "visit_bound": st.visit_bound,
                });
                write_out(output.as_deref(), &format!("{j}\n"))?;
            } else {
                write_out(output.as_deref(), &text)?;
            }
        }
        Command::Predicates { spec } => {
            let s = load_spec(spec, g)?;
            let k = build_kit(&s);
            let a_plus = serialize(&Path::Step(k.a_plus.clone()));
            if g.json {
                let j = json!({
                    "a1": serialize_qual(&k.a1),
                    "a2": serialize_qual(&k.a2),
                    "acc": serialize_qual(&k.acc),
                    "a+": a_plus,
                });
                println!("{j}");
            } else {
                println!("a1: {}", serialize_qual(&k.a1));
                println!("a2: {}", serialize_qual(&k.a2));
                println!("acc: {}", serialize_qual(&k.acc));
                println!("a+: {a_plus}");
            }
        }
        Command::Rewrite { spec, query, abbrev } => {
            let sv = SecurityView::new(load_spec(spec, g)?);
            let q = parse_xpath(query).context("parsing --query")?;
            let out = sv.rewrite(&q, g.fast, g.context.as_deref())?;
            let text = match &out {
                RewriteOutcome::Query(p) if *abbrev => sv.kit.print(p),
                RewriteOutcome::Query(p) => serialize(p),
                RewriteOutcome::Empty { .. } => "-- unsatisfiable --".to_string(),
            };
            if g.json {
                let reason = match &out {
                    RewriteOutcome::Empty { reason } => Some(reason.clone()),
                    RewriteOutcome::Query(_) => None,
                };
                println!("{}", json!({ "query": out.query().map(|_| &text), "unsatisfiable": reason }));
            } else {
                println!("{text}");
            }
        }
        Command::Eval { xml, query, dtd, ann } => {
            let t = load_xml(xml)?;
            let q = match (dtd, ann) {
                (Some(d), Some(a)) => {
                    let s = load_spec(&SpecFiles { dtd: d.clone(), ann: a.clone() }, g)?;
                    parse_with_macros(query, &build_kit(&s))
                }
                (None, None) => parse_xpath(query),
                _ => bail!("--dtd and --ann go together"),
            }
            .context("parsing --query")?;
            let got = eval(&t, &q, XmlTree::ROOT);
            if g.json {
                println!("{}", json!({ "answer": paths(&t, &got) }));
            } else {
                print!("{}", render(&t, &got, g.format));
            }
        }
        Command::Materialize { spec, xml, output } => {
            let s = load_spec(spec, g)?;
            let t = load_xml(xml)?;
            let m = materialize(&t, &s);
            let text = m.view.to_xml();
            if g.json {
                let kept = paths(&t, &m.node_map);
                write_out(output.as_deref(), &format!("{}\n", json!({ "xml": text, "nodes": kept })))?;
            } else {
                write_out(output.as_deref(), &format!("{text}\n"))?;
            }
        }
        Command::Check { spec, xml, query, inject_query } => return check(g, spec, xml, query, inject_query.as_deref()),
        Command::Gen { dtd, max_depth, target_nodes, star_p, alphabet, output, count, out_dir } => {
            let d = load_dtd(dtd)?;
            let mut cfg = GenConfig { seed: g.seed, max_depth: *max_depth, star_p: *star_p, target_nodes: *target_nodes, ..GenConfig::default() };
            if let Some(a) = alphabet {
                cfg.text_alphabet = a.split(',').map(str::to_string).collect();
            }
            match (count, out_dir) {
                (Some(n), Some(dir)) => {
                    fs::create_dir_all(dir)?;
                    for (i, t) in generate_corpus(&d, &cfg, *n)?.iter().enumerate() {
                        fs::write(dir.join(format!("doc-{i:03}.xml")), format!("{}\n", t.to_xml()))?;
                    }
                }
                (None, None) => {
                    let t = generate(&d, &cfg)?;
                    write_out(output.as_deref(), &format!("{}\n", t.to_xml()))?;
                }
                _ => bail!("--count and --out-dir go together"),
            }
        }
        Command::Bench { spec, corpus, queries, reps, output } => {
            let s = load_spec(spec, g)?;
            let qs = bench::read_queries(&read(queries)?)?;
            let report = bench::run(&s, corpus, &qs, (*reps).max(1), g.context.as_deref())?;
            write_out(output.as_deref(), &report.csv)?;
            if report.divergent > 0 {
                eprintln!("{} DIVERGENT rows", report.divergent);
                return Ok(Status::Mismatch);
            }
        }
        Command::Fuzz { cases, upward, self_oracle } => {
            let cfg = CampaignConfig { seed: g.seed, cases: *cases, upward: *upward, ..CampaignConfig::default() };
            let r = run_campaign(&cfg);
            let differ = r.cases - r.rewrite_pass.min(r.fast_pass);
            let so = (*self_oracle > 0).then(|| run_self_oracle(g.seed, *self_oracle, 100));
            if g.json {
                let j = json!({
                    "cases": r.cases,
                    "rewrite_equal": r.rewrite_pass,
                    "fast_equal": r.fast_pass,
                    "acc_equal": r.acc_pass,
                    "nonempty": r.nonempty,
                    "self_oracle": so.as_ref().map(|s| json!({ "cases": s.cases, "agree": s.agree })),
                    "failures": r.failures,
                });
                println!("{j}");
            } else {
                println!("cases {} rewrite EQUAL {} fast EQUAL {} acc EQUAL {} nonempty {}", r.cases, r.rewrite_pass, r.fast_pass, r.acc_pass, r.nonempty);
                println!("DIFFER {differ}");
                if let Some(s) = &so {
                    println!("self-oracle {}/{}", s.agree, s.cases);
                }
                for f in &r.failures {
                    println!("{f}\n");
                }
            }
            let so_ok = so.as_ref().is_none_or(|s| s.agree == s.cases);
            if !r.all_passed() || !so_ok {
                return Ok(Status::Mismatch);
            }
        }
        Command::Fixtures { output, name } => {
            let chosen: Vec<&Fixture> = match name {
                Some(n) => vec![fixtures::get(n).with_context(|| format!("no fixture named `{n}`"))?],
                None => fixtures::FIXTURES.iter().collect(),
            };
            for f in chosen {
                write_fixture(f, &output.join(f.name))?;
                println!("{}", output.join(f.name).display());
            }
        }
    }
    Ok(Status::Ok)
}

fn check(g: &Global, spec: &SpecFiles, xml: &FsPath, query: &str, inject: Option<&str>) -> Result<Status> {
    let sv = SecurityView::new(load_spec(spec, g)?);
    let t = load_xml(xml)?;
    let q = parse_xpath(query).context("parsing --query")?;
    let m = materialize(&t, &sv.spec);
    let want = view_answer(&m, &q, g.context.as_deref());
    let (label, got) = match inject {
        Some(text) => {
            let p = parse_with_macros(text, &sv.kit).context("parsing --inject-query")?;
            ("injected", eval(&t, &p, XmlTree::ROOT))
        }
        None => {
            let out = sv.rewrite(&q, g.fast, g.context.as_deref())?;
            ("rewritten", out.query().map_or_else(Vec::new, |p| eval(&t, p, XmlTree::ROOT)))
        }
    };
    let mut got = got;
    got.sort_unstable();
    let extra: Vec<NodeId> = got.iter().filter(|n| want.binary_search(n).is_err()).copied().collect();
    let missing: Vec<NodeId> = want.iter().filter(|n| got.binary_search(n).is_err()).copied().collect();
    let witness = match (extra.first(), missing.first()) {
        (Some(&a), Some(&b)) if b < a => Some((b, "missing")),
        (Some(&a), _) => Some((a, "extra")),
        (None, Some(&b)) => Some((b, "missing")),
        (None, None) => None,
    };
    if g.json {
        let j = json!({
            "verdict": if witness.is_some() { "DIFFER" } else { "EQUAL" },
            "view": paths(&t, &want),
            label: paths(&t, &got),
            "witness": witness.map(|(n, why)| json!({ "node": t.path_of(n), "kind": why })),
        });
        println!("{j}");
    } else {
        match witness {
            None => println!("EQUAL"),
            Some((n, why)) => println!("DIFFER witness {} ({why} in the {label} answer)", t.path_of(n)),
        }
        println!("view: {}", paths(&t, &want).join(" "));
        println!("{label}: {}", paths(&t, &got).join(" "));
    }
    Ok(if witness.is_some() { Status::Mismatch } else { Status::Ok })
}

fn write_fixture(f: &Fixture, dir: &FsPath) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("schema.dtd"), f.dtd)?;
    fs::write(dir.join("spec.ann"), f.ann)?;
    if let Some(x) = f.xml {
        fs::write(dir.join("doc.xml"), format!("{x}\n"))?;
    }
    let mut q = fs::File::create(dir.join("queries.txt"))?;
    for (name, text) in f.queries {
        writeln!(q, "{name} {text}")?;
    }
    let mut note = format!("{}\n", f.note);
    if f.definition_1 {
        note.push_str("flags: --definition-1\n");
    }
    if !f.nodes.is_empty() {
        note.push_str("nodes:");
        for (h, p) in f.nodes {
            note.push_str(&format!(" {h}={p}"));
        }
        note.push('\n');
    }
    fs::write(dir.join("RECONSTRUCTED"), note)?;
    Ok(())
}

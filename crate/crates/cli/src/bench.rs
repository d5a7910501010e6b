use std::fs;
use std::path::Path as FsPath;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use xsecview_core::{answer_equal, eval, materialize, parse_xml, parse_xpath, AccessSpec, NodeId, Path, SecurityView};

use crate::view_answer;

pub struct Report {
    pub csv: String,
    pub divergent: usize,
}

/// `NAME QUERY` lines; blank lines and `#` comments are skipped.
pub fn read_queries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(char::is_whitespace) {
            Some((n, q)) => out.push((n.to_string(), q.trim().to_string())),
            None => bail!("queries line {}: expected NAME QUERY", i + 1),
        }
    }
    Ok(out)
}

fn ms(f: impl FnOnce()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_secs_f64() * 1e3
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

struct Timing {
    prep: f64,
    answer: f64,
    nodes: Vec<NodeId>,
}

fn repeat(reps: usize, mut f: impl FnMut() -> (f64, f64, Vec<NodeId>)) -> Timing {
    let (mut ps, mut as_) = (Vec::new(), Vec::new());
    let mut nodes = Vec::new();
    for _ in 0..reps {
        let (p, a, n) = f();
        ps.push(p);
        as_.push(a);
        nodes = n;
    }
    Timing { prep: median(ps), answer: median(as_), nodes }
}

pub fn run(s: &AccessSpec, corpus: &FsPath, queries: &[(String, String)], reps: usize, context: Option<&str>) -> Result<Report> {
    let mut docs: Vec<_> = fs::read_dir(corpus)
        .with_context(|| format!("reading {}", corpus.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xml"))
        .collect();
    docs.sort();
    let sv = SecurityView::new(s.clone());
    let mut parsed: Vec<(String, Path, f64)> = Vec::new();
    for (name, text) in queries {
        let start = Instant::now();
        let q = parse_xpath(text).with_context(|| format!("parsing query {name}"))?;
        let t = start.elapsed().as_secs_f64() * 1e3;
        sv.rewrite(&q, false, context).with_context(|| format!("rewriting query {name}"))?;
        parsed.push((name.clone(), q, t));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["document", "nodes", "query", "strategy", "parse_ms", "prep_ms", "answer_ms", "answer_size", "status"])?;
    let mut divergent = 0;
    for doc in &docs {
        let text = fs::read_to_string(doc)?;
        let start = Instant::now();
        let t = parse_xml(&text).with_context(|| format!("parsing {}", doc.display()))?;
        let doc_ms = start.elapsed().as_secs_f64() * 1e3;
        let name = doc.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for (qname, q, q_ms) in &parsed {
            let rw = repeat(reps, || {
                let mut out = None;
                let p = ms(|| out = Some(sv.rewrite(q, false, context)));
                let out = out.expect("timed").expect("checked above");
                let mut nodes = Vec::new();
                let a = ms(|| nodes = out.query().map_or_else(Vec::new, |p| eval(&t, p, 0)));
                (p, a, nodes)
            });
            let mat = repeat(reps, || {
                let mut m = None;
                let p = ms(|| m = Some(materialize(&t, &sv.spec)));
                let m = m.expect("timed");
                let mut nodes = Vec::new();
                let a = ms(|| nodes = view_answer(&m, q, context));
                (p, a, nodes)
            });
            let ok = answer_equal(&rw.nodes, &mat.nodes);
            if !ok {
                divergent += 1;
            }
            let status = if ok { "EQUAL" } else { "DIVERGENT" };
            for (strategy, tm) in [("rewrite", &rw), ("materialize", &mat)] {
                w.write_record([
                    name.as_str(),
                    &t.len().to_string(),
                    qname,
                    strategy,
                    &format!("{:.3}", doc_ms + q_ms),
                    &format!("{:.3}", tm.prep),
                    &format!("{:.3}", tm.answer),
                    &tm.nodes.len().to_string(),
                    status,
                ])?;
            }
        }
    }
    let csv = String::from_utf8(w.into_inner()?)?;
    Ok(Report { csv, divergent })
}

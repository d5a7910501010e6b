use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xsecview"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn xsecview")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixtures() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fx");
    let o = run(&["fixtures", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    (dir, out)
}

fn files(fx: &Path, name: &str) -> (String, String, String) {
    let d = fx.join(name);
    let s = |f: &str| d.join(f).to_str().unwrap().to_string();
    (s("schema.dtd"), s("spec.ann"), s("doc.xml"))
}

#[test]
fn fixtures_are_written_with_markers() {
    let (_t, fx) = fixtures();
    for name in ["example21", "example22", "figure3", "figure4", "hospital"] {
        assert!(fx.join(name).join("schema.dtd").exists(), "{name}");
        let note = fs::read_to_string(fx.join(name).join("RECONSTRUCTED")).unwrap();
        assert!(note.starts_with("RECONSTRUCTED"), "{name}");
    }
    let q = fs::read_to_string(fx.join("hospital/queries.txt")).unwrap();
    assert_eq!(q.lines().count(), 3);
}

#[test]
fn derive_writes_the_view() {
    let (_t, fx) = fixtures();
    let (dtd, ann, _) = files(&fx, "example21");
    let o = run(&["--definition-1", "derive", "--dtd", &dtd, "--ann", &ann]);
    assert_eq!(stdout(&o), "<!ELEMENT root (A)>\n<!ELEMENT A (D|EMPTY)>\n<!ELEMENT D EMPTY>\n");
    let o = run(&["--definition-1", "derive", "--dtd", &dtd, "--ann", &ann, "--json"]);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["elided"], serde_json::json!(["B", "C"]));
    assert!(j["visits"].as_u64().unwrap() <= j["visit_bound"].as_u64().unwrap());
}

#[test]
fn derive_output_file_round_trips() {
    let (t, fx) = fixtures();
    let (dtd, ann, _) = files(&fx, "hospital");
    let out = t.path().join("view.dtd");
    let o = run(&["derive", "--dtd", &dtd, "--ann", &ann, "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("<!ELEMENT hospital (patient*)>"), "{text}");
    assert!(xsecview_core::parse_dtd(&text).is_ok());
}

#[test]
fn predicates_print_all_four() {
    let (_t, fx) = fixtures();
    let (dtd, ann, _) = files(&fx, "figure3");
    let o = run(&["--definition-1", "predicates", "--dtd", &dtd, "--ann", &ann]);
    let s = stdout(&o);
    let keys: Vec<&str> = s.lines().map(|l| l.split(':').next().unwrap()).collect();
    assert_eq!(keys, ["a1", "a2", "acc", "a+"]);
    assert!(s.contains("a2: not(ancestor::A[not(child::D)]/parent::root)"), "{s}");
}

#[test]
fn rewrite_prints_query_or_unsatisfiable() {
    let (_t, fx) = fixtures();
    let (dtd, ann, _) = files(&fx, "figure4");
    let o = run(&["rewrite", "--dtd", &dtd, "--ann", &ann, "--query", "descendant::A[child::E]", "--abbrev"]);
    assert_eq!(stdout(&o), "descendant::A[{acc}][descendant::E[{acc}]/{a+}[1] = self::A]\n");
    let o = run(&["rewrite", "--dtd", &dtd, "--ann", &ann, "--query", "child::B"]);
    assert_eq!(stdout(&o), "-- unsatisfiable --\n");
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["rewrite", "--fast", "--context", "A", "--dtd", &dtd, "--ann", &ann, "--query", "child::E", "--abbrev"]);
    assert!(stdout(&o).starts_with("descendant::E[{acc}]"), "{}", stdout(&o));
}

#[test]
fn eval_formats() {
    let (_t, fx) = fixtures();
    let (_, _, xml) = files(&fx, "figure4");
    let o = run(&["eval", "--xml", &xml, "--query", "descendant::E/parent::D/ancestor::A"]);
    assert_eq!(stdout(&o), "/0\n/1\n/1/0\n/2\n");
    let o = run(&["eval", "--xml", &xml, "--query", "child::A[2]/child::A", "--format", "xml"]);
    assert_eq!(stdout(&o), "<A><B><D><E/></D></B></A>\n");
    let o = run(&["eval", "--xml", &xml, "--query", "descendant::E", "--json"]);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["answer"].as_array().unwrap().len(), 3);
}

#[test]
fn materialize_drops_hidden_nodes() {
    let (_t, fx) = fixtures();
    let (dtd, ann, xml) = files(&fx, "figure4");
    let o = run(&["materialize", "--dtd", &dtd, "--ann", &ann, "--xml", &xml]);
    assert_eq!(stdout(&o), "<root><A><E/></A><A><A><E/></A></A><A><D><E/></D></A></root>\n");
}

#[test]
fn check_reports_equal_for_examples() {
    let (_t, fx) = fixtures();
    let (dtd, ann, xml) = files(&fx, "figure4");
    for q in ["child::A/child::E", "descendant::A[child::E]", "descendant::*[not(child::*)]"] {
        for fast in [false, true] {
            let mut args = vec!["check", "--dtd", &dtd, "--ann", &ann, "--xml", &xml, "--query", q];
            if fast {
                args.push("--fast");
            }
            let o = run(&args);
            assert_eq!(o.status.code(), Some(0), "{q} {}", stdout(&o));
            assert!(stdout(&o).starts_with("EQUAL"));
        }
    }
}

#[test]
fn all_allow_spec_is_the_identity() {
    let (t, fx) = fixtures();
    let (dtd, _, xml) = files(&fx, "figure4");
    let ann = t.path().join("all.ann");
    fs::write(&ann, "ann(root,A)=Y\nann(A,B)=Y\nann(D,E)=Y\n").unwrap();
    for q in ["descendant::B/child::D", "child::A/child::A/child::B", "descendant::C[child::D]"] {
        let o = run(&["check", "--dtd", &dtd, "--ann", ann.to_str().unwrap(), "--xml", &xml, "--query", q]);
        assert_eq!(o.status.code(), Some(0), "{q}: {}", stdout(&o));
    }
}

#[test]
fn check_json_witness() {
    let (_t, fx) = fixtures();
    let (dtd, ann, xml) = files(&fx, "figure4");
    let o = run(&[
        "check", "--json", "--dtd", &dtd, "--ann", &ann, "--xml", &xml, "--query", "descendant::A[child::E]",
        "--inject-query", "descendant::A[{acc}]",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["verdict"], "DIFFER");
    assert_eq!(j["witness"]["node"], "/1");
    assert_eq!(j["witness"]["kind"], "extra");
}

#[test]
fn variables_are_substituted() {
    let (t, fx) = fixtures();
    let (dtd, _, xml) = files(&fx, "figure4");
    let ann = t.path().join("var.ann");
    fs::write(&ann, "ann(root,A)=[child::$kid]_h\nann(A,B)=N\nann(D,E)=Y\n").unwrap();
    let a = ann.to_str().unwrap();
    let o = run(&["--var", "kid=A", "materialize", "--dtd", &dtd, "--ann", a, "--xml", &xml]);
    assert_eq!(stdout(&o), "<root><A><A><E/></A></A></root>\n");
    let o = run(&["materialize", "--dtd", &dtd, "--ann", a, "--xml", &xml]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    let (t, fx) = fixtures();
    let (dtd, ann, xml) = files(&fx, "figure4");
    let o = run(&["check", "--dtd", &dtd, "--ann", &ann, "--xml", &xml, "--query", "child::A["]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["rewrite", "--dtd", &dtd, "--ann", &ann, "--query", "child::A[1]"]);
    assert_eq!(o.status.code(), Some(2));
    let missing = t.path().join("nope.dtd");
    let o = run(&["derive", "--dtd", missing.to_str().unwrap(), "--ann", &ann]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.dtd"));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let (t, fx) = fixtures();
    let (dtd, _, _) = files(&fx, "hospital");
    let a = run(&["gen", "--dtd", &dtd, "--seed", "42", "--target-nodes", "5000", "--star-p", "0.7"]);
    let b = run(&["gen", "--dtd", &dtd, "--seed", "42", "--target-nodes", "5000", "--star-p", "0.7"]);
    assert_eq!(a.stdout, b.stdout);
    let doc = xsecview_core::parse_xml(&stdout(&a)).unwrap();
    let d = xsecview_core::parse_dtd(&fs::read_to_string(&dtd).unwrap()).unwrap();
    assert!(xsecview_core::content::conforms(&doc, &d).is_ok());
    assert!(doc.len() >= 5000, "{}", doc.len());
    let dir = t.path().join("corpus");
    let o = run(&["gen", "--dtd", &dtd, "--count", "3", "--out-dir", dir.to_str().unwrap(), "--target-nodes", "200"]);
    assert!(o.status.success());
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 3);
}

#[test]
fn bench_on_empty_and_small_corpora() {
    let (t, fx) = fixtures();
    let (dtd, ann, _) = files(&fx, "hospital");
    let queries = fx.join("hospital/queries.txt");
    let q = queries.to_str().unwrap();
    let empty = t.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = run(&["bench", "--dtd", &dtd, "--ann", &ann, "--corpus", empty.to_str().unwrap(), "--queries", q]);
    assert_eq!(stdout(&o), "document,nodes,query,strategy,parse_ms,prep_ms,answer_ms,answer_size,status\n");
    let dir = t.path().join("small");
    run(&["gen", "--dtd", &dtd, "--count", "2", "--out-dir", dir.to_str().unwrap(), "--target-nodes", "300", "--star-p", "0.7"]);
    let o = run(&["bench", "--dtd", &dtd, "--ann", &ann, "--corpus", dir.to_str().unwrap(), "--queries", q]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 1 + 3 * 2 * 2);
    assert!(s.lines().skip(1).all(|l| l.ends_with(",EQUAL")), "{s}");
}

#[test]
fn fuzz_smoke() {
    let o = run(&["fuzz", "--cases", "40", "--self-oracle", "40", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("DIFFER 0"), "{s}");
    assert!(s.contains("self-oracle 40/40"), "{s}");
}

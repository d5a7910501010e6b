use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "xsecview", version, about = "Security views over recursive DTDs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Read [Q] as [Q]_h and N as N_h.
    #[arg(long = "definition-1", global = true)]
    pub definition_1: bool,
    /// Use the linear rewriting (no wildcard elimination).
    #[arg(long, global = true)]
    pub fast: bool,
    /// `$name` substitution in annotation files, as name=value.
    #[arg(long = "var", value_name = "K=V", global = true)]
    pub vars: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Paths, global = true)]
    pub format: Format,
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// View element type of the context nodes (default: the root).
    #[arg(long, global = true)]
    pub context: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Paths,
    Xml,
}

#[derive(Args, Debug, Clone)]
pub struct SpecFiles {
    #[arg(long)]
    pub dtd: PathBuf,
    #[arg(long)]
    pub ann: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive the DTD view.
    Derive {
        #[command(flatten)]
        spec: SpecFiles,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Keep conditional children optional in the view, `(B|EMPTY)`.
        #[arg(long)]
        optional_conditionals: bool,
    },
    /// Print the accessibility predicates.
    Predicates {
        #[command(flatten)]
        spec: SpecFiles,
    },
    /// Rewrite a view query into a query over the original document.
    Rewrite {
        #[command(flatten)]
        spec: SpecFiles,
        #[arg(long)]
        query: String,
        /// Print {acc}, {a1}, {a2} and {a+} instead of expanding them.
        #[arg(long)]
        abbrev: bool,
    },
    /// Evaluate a query over a document.
    Eval {
        #[arg(long)]
        xml: PathBuf,
        #[arg(long)]
        query: String,
        /// With --ann, `{acc}`-style placeholders in the query expand.
        #[arg(long)]
        dtd: Option<PathBuf>,
        #[arg(long)]
        ann: Option<PathBuf>,
    },
    /// Materialize the view of a document.
    Materialize {
        #[command(flatten)]
        spec: SpecFiles,
        #[arg(long)]
        xml: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the rewritten query with the query over the materialized view.
    Check {
        #[command(flatten)]
        spec: SpecFiles,
        #[arg(long)]
        xml: PathBuf,
        #[arg(long)]
        query: String,
        /// Evaluate this query over the original instead of the rewriting.
        #[arg(long)]
        inject_query: Option<String>,
    },
    /// Generate documents conforming to a DTD.
    Gen {
        #[arg(long)]
        dtd: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        #[arg(long)]
        target_nodes: Option<usize>,
        /// Stop probability of each star repetition.
        #[arg(long, default_value_t = 0.5)]
        star_p: f64,
        /// Comma-separated text values.
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write this many documents into --out-dir.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Time both answering strategies over a corpus, as CSV.
    Bench {
        #[command(flatten)]
        spec: SpecFiles,
        /// Directory of .xml documents.
        #[arg(long)]
        corpus: PathBuf,
        /// One query per line: NAME QUERY.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the randomized closure campaign.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// Draw parent and ancestor steps too.
        #[arg(long)]
        upward: bool,
        /// Also run this many evaluator self-oracle cases.
        #[arg(long, default_value_t = 0)]
        self_oracle: usize,
    },
    /// Write the built-in fixtures.
    Fixtures {
        #[arg(short, long, default_value = "fixtures")]
        output: PathBuf,
        /// Only this fixture.
        #[arg(long)]
        name: Option<String>,
    },
}

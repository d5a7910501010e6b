//! Random documents conforming to a DTD.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dtd::{ContentModel, Dtd};
use crate::tree::{TreeBuilder, XmlTree};

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Element depth at which only minimal content is generated.
    pub max_depth: usize,
    /// Stop probability of each star repetition: counts are Geometric(p),
    /// mean `(1-p)/p`.
    pub star_p: f64,
    pub text_alphabet: Vec<String>,
    /// Soft cap on node count: content turns minimal once it is exceeded.
    pub target_nodes: Option<usize>,
    /// Keep repeating stars of the root production until `target_nodes`.
    pub fill: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 12,
            star_p: 0.5,
            text_alphabet: (1..=4).map(|i| alloc::format!("disease{i}")).collect(),
            target_nodes: None,
            fill: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("element type `{0}` has no finite derivation")]
    NonTerminating(String),
    #[error("invalid generator configuration: {0}")]
    Config(String),
}

const INF: usize = usize::MAX / 4;
/// Guard against a pathological `star_p` close to zero.
const MAX_REPEAT: usize = 64;

/// Minimal node count of each type's subtree (text leaves count as one).
fn shortest(d: &Dtd) -> Vec<usize> {
    let mut cost = alloc::vec![INF; d.len()];
    loop {
        let mut changed = false;
        for t in 0..d.len() {
            let c = 1usize.saturating_add(model_cost(d, d.production_at(t), &cost)).min(INF);
            if c < cost[t] {
                cost[t] = c;
                changed = true;
            }
        }
        if !changed {
            return cost;
        }
    }
}

fn model_cost(d: &Dtd, m: &ContentModel, cost: &[usize]) -> usize {
    match m {
        ContentModel::Text => 1,
        ContentModel::Empty | ContentModel::Star(_) => 0,
        ContentModel::Name(n) => d.index_of(n).map_or(INF, |i| cost[i]),
        ContentModel::Seq(xs) => xs.iter().map(|x| model_cost(d, x, cost)).fold(0, |a, b| a.saturating_add(b).min(INF)),
        ContentModel::Alt(xs) => xs.iter().map(|x| model_cost(d, x, cost)).min().unwrap_or(INF),
    }
}

struct Gen<'d> {
    dtd: &'d Dtd,
    cfg: &'d GenConfig,
    cost: Vec<usize>,
    rng: ChaCha8Rng,
    b: TreeBuilder,
}

impl Gen<'_> {
    fn over_budget(&self) -> bool {
        self.cfg.target_nodes.is_some_and(|n| self.b.len() >= n)
    }

    fn element(&mut self, t: usize, depth: usize) {
        self.b.open(self.dtd.name(t));
        let minimal = depth >= self.cfg.max_depth || self.over_budget();
        let m = self.dtd.production_at(t).clone();
        self.content(&m, depth, minimal, depth == 0);
        self.b.close();
    }

    fn content(&mut self, m: &ContentModel, depth: usize, minimal: bool, top: bool) {
        match m {
            ContentModel::Empty => {}
            ContentModel::Text => {
                let a = &self.cfg.text_alphabet;
                let s = if a.is_empty() { "x".to_string() } else { a[self.rng.random_range(0..a.len())].clone() };
                self.b.text(&s);
            }
            ContentModel::Name(n) => {
                let i = self.dtd.index_of(n).unwrap_or(0);
                self.element(i, depth + 1);
            }
            ContentModel::Seq(xs) => {
                for x in xs {
                    self.content(x, depth, minimal, top);
                }
            }
            ContentModel::Alt(xs) => {
                let costs: Vec<usize> = xs.iter().map(|x| model_cost(self.dtd, x, &self.cost)).collect();
                let pick = if minimal {
                    (0..xs.len()).min_by_key(|&i| costs[i]).unwrap_or(0)
                } else {
                    let ok: Vec<usize> = (0..xs.len()).filter(|&i| costs[i] < INF).collect();
                    ok[self.rng.random_range(0..ok.len())]
                };
                self.content(&xs[pick], depth, minimal, top);
            }
            ContentModel::Star(x) => {
                if top && self.cfg.fill && self.cfg.target_nodes.is_some() {
                    while !self.over_budget() {
                        let before = self.b.len();
                        self.content(x, depth, false, false);
                        if self.b.len() == before {
                            break;
                        }
                    }
                    return;
                }
                if minimal {
                    return;
                }
                let mut k = 0;
                while k < MAX_REPEAT && !self.rng.random_bool(self.cfg.star_p) {
                    k += 1;
                }
                for _ in 0..k {
                    let m = minimal || self.over_budget();
                    self.content(x, depth, m, false);
                }
            }
        }
    }
}

pub fn generate(d: &Dtd, cfg: &GenConfig) -> Result<XmlTree, GenError> {
    if !(cfg.star_p > 0.0 && cfg.star_p <= 1.0) {
        return Err(GenError::Config(alloc::format!("star probability {} not in (0, 1]", cfg.star_p)));
    }
    if cfg.max_depth == 0 {
        return Err(GenError::Config("max depth must be at least 1".into()));
    }
    let cost = shortest(d);
    if let Some(t) = (0..d.len()).find(|&t| cost[t] >= INF) {
        return Err(GenError::NonTerminating(d.name(t).to_string()));
    }
    let mut g = Gen { dtd: d, cfg, cost, rng: ChaCha8Rng::seed_from_u64(cfg.seed), b: TreeBuilder::new() };
    g.element(0, 0);
    Ok(g.b.finish())
}

/// `count` documents with seeds drawn from `cfg.seed`.
pub fn generate_corpus(d: &Dtd, cfg: &GenConfig, count: usize) -> Result<Vec<XmlTree>, GenError> {
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..count)
        .map(|_| {
            let c = GenConfig { seed: seeds.next_u64(), ..cfg.clone() };
            generate(d, &c)
        })
        .collect()
}

//! BLEU, ROUGE-L and METEOR over token sequences, at sentence and corpus
//! level. Scores live in [0, 1].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::io::References;
use crate::types::QAPair;

pub const DEFAULT_MAX_N: usize = 4;

/// Upper bound on search nodes when minimizing METEOR chunks. Only
/// sequences with long runs of repeated words come near it; past the budget
/// the best alignment found so far is used.
const METEOR_SEARCH_BUDGET: usize = 2_000_000;

/// Lowercases, splits on whitespace and strips punctuation from word edges.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and total candidate n-grams.
fn ngram_stats<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let total = candidate.len().saturating_sub(n - 1);
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (g, c) in ngram_counts(r.as_ref(), n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, total)
}

/// Reference length closest to `c`; ties go to the shorter reference.
fn closest_ref_len<T, R: AsRef<[T]>>(c: usize, references: &[R]) -> usize {
    references
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&r| (r.abs_diff(c), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    }
}

/// Sentence BLEU: uniform weights over n = 1..=max_n, add-one smoothing on
/// the n >= 2 precisions, brevity penalty against the closest reference.
/// An empty candidate scores 0.
pub fn bleu<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], max_n: usize) -> f64 {
    if candidate.is_empty() || max_n == 0 || references.iter().all(|r| r.as_ref().is_empty()) {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (m, t) = ngram_stats(candidate, references, n);
        let p = if n == 1 {
            if m == 0 {
                return 0.0;
            }
            m as f64 / t as f64
        } else {
            (m as f64 + 1.0) / (t as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let r = closest_ref_len(candidate.len(), references);
    brevity_penalty(candidate.len(), r) * (log_sum / max_n as f64).exp()
}

/// Corpus BLEU: n-gram counts and lengths are summed over all pairs before
/// the geometric mean, without smoothing.
pub fn corpus_bleu<T, C, R>(pairs: &[(C, Vec<R>)], max_n: usize) -> f64
where
    T: Eq + Hash,
    C: AsRef<[T]>,
    R: AsRef<[T]>,
{
    if max_n == 0 {
        return 0.0;
    }
    let mut matched = vec![0usize; max_n + 1];
    let mut totals = vec![0usize; max_n + 1];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (cand, refs) in pairs {
        let cand = cand.as_ref();
        c_len += cand.len();
        r_len += closest_ref_len(cand.len(), refs);
        for n in 1..=max_n {
            let (m, t) = ngram_stats(cand, refs, n);
            matched[n] += m;
            totals[n] += t;
        }
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if matched[n] == 0 || totals[n] == 0 {
            return 0.0;
        }
        log_sum += (matched[n] as f64 / totals[n] as f64).ln();
    }
    brevity_penalty(c_len, r_len) * (log_sum / max_n as f64).exp()
}

pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-score with recall weight `beta` (1 = balanced).
pub fn rouge_l_beta<T: Eq>(candidate: &[T], reference: &[T], beta: f64) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let l = lcs_len(candidate, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / candidate.len() as f64;
    let r = l as f64 / reference.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> f64 {
    rouge_l_beta(candidate, reference, 1.0)
}

/// Matches and chunks of the best exact-match unigram alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
}

struct ChunkSearch {
    cand: Vec<usize>,
    ref_pos: Vec<Vec<usize>>,
    quota: Vec<usize>,
    remaining: Vec<Vec<usize>>,
    used: Vec<bool>,
    got: Vec<usize>,
    best_adj: Option<usize>,
    nodes: usize,
}

impl ChunkSearch {
    // prev: reference position aligned to candidate position i-1, if any
    fn run(&mut self, i: usize, prev: Option<usize>, adj: usize) {
        self.nodes += 1;
        if self.nodes > METEOR_SEARCH_BUDGET && self.best_adj.is_some() {
            return;
        }
        if i == self.cand.len() {
            if self.best_adj.is_none_or(|b| adj > b) {
                self.best_adj = Some(adj);
            }
            return;
        }
        if let Some(b) = self.best_adj {
            if adj + (self.cand.len() - i) <= b {
                return;
            }
        }
        let ty = self.cand[i];
        if self.got[ty] < self.quota[ty] {
            let mut options: Vec<usize> = Vec::with_capacity(self.ref_pos[ty].len());
            if let Some(p) = prev {
                if self.ref_pos[ty].contains(&(p + 1)) && !self.used[p + 1] {
                    options.push(p + 1);
                }
            }
            for &j in &self.ref_pos[ty] {
                if !self.used[j] && Some(j) != prev.map(|p| p + 1) {
                    options.push(j);
                }
            }
            for j in options {
                let gain = usize::from(prev.is_some_and(|p| p + 1 == j));
                self.used[j] = true;
                self.got[ty] += 1;
                self.run(i + 1, Some(j), adj + gain);
                self.got[ty] -= 1;
                self.used[j] = false;
            }
        }
        // leaving i unmatched must still allow the type's quota to be met
        if self.got[ty] + self.remaining[i][ty] >= self.quota[ty] {
            self.run(i + 1, None, adj);
        }
    }
}

/// Exact-match alignment with the maximum number of matches and, among
/// those, the fewest chunks. A chunk is a run of matches adjacent in both
/// sequences and in the same order.
pub fn meteor_alignment<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> Alignment {
    let mut ids: HashMap<&T, usize> = HashMap::new();
    for t in candidate.iter().chain(reference) {
        let next = ids.len();
        ids.entry(t).or_insert(next);
    }
    let types = ids.len();
    let cand: Vec<usize> = candidate.iter().map(|t| ids[t]).collect();
    let mut ref_pos = vec![Vec::new(); types];
    for (j, t) in reference.iter().enumerate() {
        ref_pos[ids[t]].push(j);
    }
    let mut cand_count = vec![0usize; types];
    for &t in &cand {
        cand_count[t] += 1;
    }
    let quota: Vec<usize> = (0..types)
        .map(|t| cand_count[t].min(ref_pos[t].len()))
        .collect();
    let matches: usize = quota.iter().sum();
    if matches == 0 {
        return Alignment { matches: 0, chunks: 0 };
    }
    // remaining[i][t]: occurrences of type t in cand[i+1..]
    let mut remaining = vec![vec![0usize; types]; cand.len()];
    let mut acc = vec![0usize; types];
    for i in (0..cand.len()).rev() {
        remaining[i] = acc.clone();
        acc[cand[i]] += 1;
    }
    let mut search = ChunkSearch {
        cand,
        ref_pos,
        quota,
        remaining,
        used: vec![false; reference.len()],
        got: vec![0; types],
        best_adj: None,
        nodes: 0,
    };
    search.run(0, None, 0);
    let adj = search.best_adj.expect("a maximum alignment always exists");
    Alignment {
        matches,
        chunks: matches - adj,
    }
}

/// METEOR with exact matching only: Fmean = 10PR / (R + 9P), fragmentation
/// penalty 0.5 * (chunks / matches)^3.
pub fn meteor<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let a = meteor_alignment(candidate, reference);
    if a.matches == 0 {
        return 0.0;
    }
    let m = a.matches as f64;
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (a.chunks as f64 / m).powi(3);
    fmean * (1.0 - penalty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Bleu,
    RougeL,
    Meteor,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Bleu, Metric::RougeL, Metric::Meteor];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleu => "bleu",
            Metric::RougeL => "rouge-l",
            Metric::Meteor => "meteor",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "bleu" => Ok(Metric::Bleu),
            "rouge-l" | "rougel" | "rouge" => Ok(Metric::RougeL),
            "meteor" => Ok(Metric::Meteor),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Parses a comma-separated metric list such as `bleu,rouge-l`.
pub fn parse_metric_list(s: &str) -> Result<BTreeSet<Metric>, Error> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Corpus-level scores. Metrics that were not requested are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: Option<f64>,
    pub rouge_l: Option<f64>,
    pub meteor: Option<f64>,
    pub n_pairs: usize,
    /// `image_id/caption_id` of candidates without references.
    #[serde(default)]
    pub skipped_ids: Vec<String>,
}

/// Scores generated questions against references. Corpus BLEU uses every
/// reference of a candidate; ROUGE-L and METEOR take the best reference per
/// candidate and are averaged in input order.
pub fn evaluate_corpus(
    candidates: &[QAPair],
    references: &References,
    metrics: &BTreeSet<Metric>,
) -> MetricReport {
    let mut skipped_ids = Vec::new();
    let mut pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = Vec::new();
    for c in candidates {
        let refs: Vec<Vec<String>> = references
            .lookup(&c.image_id, &c.caption_id)
            .iter()
            .map(|r| tokenize(r))
            .filter(|r| !r.is_empty())
            .collect();
        if refs.is_empty() {
            skipped_ids.push(format!("{}/{}", c.image_id, c.caption_id));
            continue;
        }
        pairs.push((tokenize(&c.question), refs));
    }

    let n = pairs.len();
    let mean_best = |score: fn(&[String], &[String]) -> f64| -> f64 {
        if n == 0 {
            return 0.0;
        }
        let total: f64 = pairs
            .iter()
            .map(|(c, refs)| refs.iter().map(|r| score(c, r)).fold(0.0, f64::max))
            .sum();
        total / n as f64
    };

    MetricReport {
        bleu: metrics
            .contains(&Metric::Bleu)
            .then(|| corpus_bleu::<String, _, _>(&pairs, DEFAULT_MAX_N)),
        rouge_l: metrics
            .contains(&Metric::RougeL)
            .then(|| mean_best(rouge_l::<String>)),
        meteor: metrics
            .contains(&Metric::Meteor)
            .then(|| mean_best(meteor::<String>)),
        n_pairs: n,
        skipped_ids,
    }
}

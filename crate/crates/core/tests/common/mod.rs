//! Brute-force oracles and random generators shared by the integration
//! tests. Nothing here calls into the metric or traversal code under test.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use vqag::conllu::{DepToken, DepTree};
use vqag::io::{DetectedObject, ImageRecord};
use vqag::types::QAPair;

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

pub fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

// ---------------------------------------------------------------- metrics

fn count_in<T: PartialEq>(seq: &[T], gram: &[T]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| &seq[i..i + gram.len()] == gram)
        .count()
}

/// Clipped matches and candidate n-gram total, by linear scans.
fn oracle_ngram_stats<T: PartialEq>(cand: &[T], refs: &[&[T]], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let grams: Vec<&[T]> = (0..=cand.len() - n).map(|i| &cand[i..i + n]).collect();
    let mut seen: Vec<&[T]> = Vec::new();
    let mut matched = 0;
    for g in &grams {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        let max_ref = refs.iter().map(|r| count_in(r, g)).max().unwrap_or(0);
        matched += count_in(cand, g).min(max_ref);
    }
    (matched, grams.len())
}

fn oracle_closest(c: usize, refs: &[usize]) -> usize {
    let mut best: Option<usize> = None;
    for &r in refs {
        best = match best {
            None => Some(r),
            Some(b) => {
                let (db, dr) = (b.abs_diff(c), r.abs_diff(c));
                if dr < db || (dr == db && r < b) {
                    Some(r)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.unwrap_or(0)
}

fn oracle_bp(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    }
}

pub fn oracle_bleu<T: PartialEq>(cand: &[T], refs: &[&[T]], max_n: usize) -> f64 {
    if cand.is_empty() || refs.iter().all(|r| r.is_empty()) {
        return 0.0;
    }
    let mut prod = 1.0f64;
    for n in 1..=max_n {
        let (m, t) = oracle_ngram_stats(cand, refs, n);
        if n == 1 {
            if m == 0 {
                return 0.0;
            }
            prod *= m as f64 / t as f64;
        } else {
            prod *= (m as f64 + 1.0) / (t as f64 + 1.0);
        }
    }
    let lens: Vec<usize> = refs.iter().map(|r| r.len()).collect();
    oracle_bp(cand.len(), oracle_closest(cand.len(), &lens)) * prod.powf(1.0 / max_n as f64)
}

pub fn oracle_corpus_bleu<T: PartialEq>(pairs: &[(&[T], Vec<&[T]>)], max_n: usize) -> f64 {
    let mut prod = 1.0f64;
    for n in 1..=max_n {
        let (mut m, mut t) = (0, 0);
        for (c, refs) in pairs {
            let (a, b) = oracle_ngram_stats(c, refs, n);
            m += a;
            t += b;
        }
        if m == 0 || t == 0 {
            return 0.0;
        }
        prod *= m as f64 / t as f64;
    }
    let c_len: usize = pairs.iter().map(|(c, _)| c.len()).sum();
    let r_len: usize = pairs
        .iter()
        .map(|(c, refs)| {
            let lens: Vec<usize> = refs.iter().map(|r| r.len()).collect();
            oracle_closest(c.len(), &lens)
        })
        .sum();
    oracle_bp(c_len, r_len) * prod.powf(1.0 / max_n as f64)
}

fn is_subsequence<T: PartialEq>(sub: &[&T], seq: &[T]) -> bool {
    let mut it = seq.iter();
    sub.iter().all(|x| it.any(|y| y == *x))
}

/// Longest common subsequence by trying every subset of the candidate.
pub fn oracle_lcs<T: PartialEq>(cand: &[T], reference: &[T]) -> usize {
    assert!(cand.len() <= 20, "subset enumeration is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << cand.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&T> = (0..cand.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &cand[i])
            .collect();
        if is_subsequence(&sub, reference) {
            best = size;
        }
    }
    best
}

pub fn oracle_rouge_l<T: PartialEq>(cand: &[T], reference: &[T], beta: f64) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let l = oracle_lcs(cand, reference) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let p = l / cand.len() as f64;
    let r = l / reference.len() as f64;
    (1.0 + beta * beta) * p * r / (r + beta * beta * p)
}

/// Number of runs in an alignment listed by increasing candidate position.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let extends = k > 0 && pairs[k - 1].0 + 1 == i && pairs[k - 1].1 + 1 == j;
        if !extends {
            chunks += 1;
        }
    }
    chunks
}

fn enumerate_alignments<T: PartialEq>(
    cand: &[T],
    reference: &[T],
    i: usize,
    used: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    best: &mut (usize, usize),
) {
    if i == cand.len() {
        let m = pairs.len();
        let ch = count_chunks(pairs);
        if m > best.0 || (m == best.0 && ch < best.1) {
            *best = (m, ch);
        }
        return;
    }
    enumerate_alignments(cand, reference, i + 1, used, pairs, best);
    for j in 0..reference.len() {
        if !used[j] && reference[j] == cand[i] {
            used[j] = true;
            pairs.push((i, j));
            enumerate_alignments(cand, reference, i + 1, used, pairs, best);
            pairs.pop();
            used[j] = false;
        }
    }
}

/// (matches, chunks) over every one-to-one exact alignment: most matches,
/// then fewest chunks.
pub fn oracle_alignment<T: PartialEq>(cand: &[T], reference: &[T]) -> (usize, usize) {
    let mut best = (0, 0);
    enumerate_alignments(cand, reference, 0, &mut vec![false; reference.len()], &mut Vec::new(), &mut best);
    best
}

pub fn oracle_meteor<T: PartialEq>(cand: &[T], reference: &[T]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (m, ch) = oracle_alignment(cand, reference);
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    let p = m / cand.len() as f64;
    let r = m / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    fmean * (1.0 - 0.5 * (ch as f64 / m).powi(3))
}

/// Every sequence of length 1..=max_len over `0..alphabet`.
pub fn all_sequences(alphabet: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet as usize);
        for s in &layer {
            for a in 0..alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

// ------------------------------------------------------------------ trees

/// Acyclicity and single-root check with union-find over the head links.
pub fn is_single_rooted_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    if heads.iter().any(|&h| h > n) {
        return false;
    }
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, &h) in heads.iter().enumerate() {
        let (a, b) = (find(&mut parent, i + 1), find(&mut parent, h));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

fn split_into_segments<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Vec<(usize, usize)> {
    let mut segs = Vec::new();
    if lo > hi {
        return segs;
    }
    let mut start = lo;
    for i in lo..hi {
        if rng.gen_bool(0.5) {
            segs.push((start, i));
            start = i + 1;
        }
    }
    segs.push((start, hi));
    segs
}

fn fill_projective<R: Rng>(rng: &mut R, lo: usize, hi: usize, parent: usize, heads: &mut [usize]) {
    let r = rng.gen_range(lo..=hi);
    heads[r - 1] = parent;
    for (a, b) in split_into_segments(rng, lo, r - 1)
        .into_iter()
        .chain(split_into_segments(rng, r + 1, hi))
    {
        fill_projective(rng, a, b, r, heads);
    }
}

/// Head array (1-based ids, 0 = root) of a random projective tree.
pub fn random_projective_heads<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut heads = vec![0; n];
    fill_projective(rng, 1, n, 0, &mut heads);
    heads
}

/// Head array of a random tree that may have crossing arcs.
pub fn random_heads<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        heads[order[k] - 1] = order[rng.gen_range(0..k)];
    }
    heads
}

/// True when no two arcs cross and no arc covers the root.
pub fn is_projective(heads: &[usize]) -> bool {
    let arcs: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| if h == 0 { (0, i + 1) } else { ((i + 1).min(h), (i + 1).max(h)) })
        .collect();
    arcs.iter().all(|&(a, b)| {
        arcs.iter()
            .all(|&(c, d)| !(a < c && c < b && b < d) && !(c < a && a < d && d < b))
    })
}

pub fn plain_tree(heads: &[usize], sid: &str, iid: &str) -> DepTree {
    let tokens = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| DepToken::new(i + 1, &format!("w{}", i + 1), "NOUN", h, if h == 0 { "root" } else { "dep" }))
        .collect();
    DepTree::new(tokens, sid, iid).expect("generated heads form a tree")
}

pub fn conllu_text(heads: &[usize], sid: &str) -> String {
    let mut s = format!("# sent_id = {sid}\n# image_id = img\n");
    for (i, &h) in heads.iter().enumerate() {
        let rel = if h == 0 { "root" } else { "dep" };
        s.push_str(&format!("{}\tw{}\tw{}\tNOUN\t_\t_\t{}\t{}\t_\t_\n", i + 1, i + 1, i + 1, h, rel));
    }
    s.push('\n');
    s
}

// -------------------------------------------------------- synthetic corpus

const VOCAB: &[&str] = &[
    "dog", "cat", "horse", "man", "woman", "boy", "girl", "person", "frisbee", "ball", "table", "bench",
    "car", "bus", "tree", "field", "park", "street", "pole", "sign", "kite", "plate", "pizza", "cake",
    "runs", "sits", "holds", "throws", "rides", "stands", "eats", "walks", "looks", "plays", "waits",
    "red", "small", "large", "green", "wooden", "old", "busy", "tall", "white", "happy", "two", "three",
    "four", "five", "several", "a", "the", "on", "in", "near", "with", "under", "behind", "beside", "of",
    "bird", "sheep", "cow", "zebra", "giraffe", "bear", "elephant", "umbrella", "clock", "laptop",
    "phone", "bottle", "chair", "couch", "bed", "window", "door", "wall", "floor", "road",
];

const PROPER: &[&str] = &["Paris", "London", "Boeing", "Seattle", "Maria", "Tokyo", "Nike", "Jordan"];

const UPOS: &[&str] = &["NOUN", "NOUN", "NOUN", "VERB", "DET", "ADJ", "ADP", "NUM", "PROPN", "ADV"];

const RELS: &[&str] = &["nsubj", "obj", "obl", "nmod", "amod", "det", "compound", "nummod", "case", "advmod"];

const ENTITY_TYPES: &[&str] = &["PERSON", "GPE", "ORG", "CARDINAL", "MONEY", "LOC", "FAC", "QUANTITY"];

/// A random projective caption of `n` distinct words, optionally ending in
/// a period, with random tags and entity spans.
pub fn synthetic_caption<R: Rng>(rng: &mut R, n: usize, sid: &str, iid: &str) -> DepTree {
    let with_punct = n >= 3 && rng.gen_bool(0.3);
    let words = if with_punct { n - 1 } else { n };
    let mut heads = random_projective_heads(rng, words);
    let root = heads.iter().position(|&h| h == 0).unwrap() + 1;
    if with_punct {
        heads.push(root);
    }
    let mut pool: Vec<&str> = VOCAB.to_vec();
    pool.shuffle(rng);
    let mut proper: Vec<&str> = PROPER.to_vec();
    proper.shuffle(rng);

    let mut tokens = Vec::with_capacity(n);
    let mut entity: Option<&str> = None;
    for (i, &h) in heads.iter().enumerate() {
        let id = i + 1;
        if with_punct && id == n {
            tokens.push(DepToken::new(id, ".", "PUNCT", h, "punct"));
            break;
        }
        let mut upos = *UPOS.choose(rng).unwrap();
        let form = if upos == "PROPN" {
            match proper.pop() {
                Some(p) => p.to_string(),
                None => {
                    upos = "NOUN";
                    pool.pop().unwrap().to_string()
                }
            }
        } else {
            pool.pop().unwrap().to_string()
        };
        let rel = if h == 0 { "root" } else { *RELS.choose(rng).unwrap() };
        let ner = match entity {
            Some(kind) if rng.gen_bool(0.5) => format!("I-{kind}"),
            _ if rng.gen_bool(0.15) => {
                let kind = *ENTITY_TYPES.choose(rng).unwrap();
                entity = Some(kind);
                format!("B-{kind}")
            }
            _ => {
                entity = None;
                "O".to_string()
            }
        };
        tokens.push(DepToken::new(id, &form, upos, h, rel).with_ner(&ner));
    }
    DepTree::new(tokens, sid, iid).expect("synthetic caption is a tree")
}

/// A record with 1..=4 captions and detections drawn partly from the
/// caption words and partly from the vocabulary.
pub fn synthetic_record<R: Rng>(rng: &mut R, idx: usize, max_len: usize) -> ImageRecord {
    let iid = format!("syn{idx}");
    let captions: Vec<DepTree> = (0..rng.gen_range(1..=4))
        .map(|k| {
            let n = rng.gen_range(2..=max_len);
            synthetic_caption(rng, n, &format!("{iid}-{}", k + 1), &iid)
        })
        .collect();
    let mut objects = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let label = if rng.gen_bool(0.6) {
            let c = captions.choose(rng).unwrap();
            c.tokens.choose(rng).unwrap().form.clone()
        } else {
            VOCAB.choose(rng).unwrap().to_string()
        };
        if label != "." {
            objects.push(DetectedObject::new(&label, rng.gen_range(0.05..1.0)));
        }
    }
    ImageRecord::new(&iid, objects, captions).expect("captions share the image id")
}

// ------------------------------------------------------------- QA checks

const WH: &[&str] = &["who", "what", "which", "where", "how many", "how much"];

/// Pair invariants checked from the serialized strings alone.
pub fn qa_violations(p: &QAPair, max_tokens: usize) -> Vec<String> {
    let mut bad = Vec::new();
    let q = p.question.as_str();
    if !q.ends_with('?') {
        bad.push("no terminal question mark".to_string());
    }
    let words: Vec<String> = q
        .trim_end_matches('?')
        .split_whitespace()
        .map(str::to_lowercase)
        .collect();
    if words.len() > max_tokens {
        bad.push(format!("{} words", words.len()));
    }
    let joined = words.join(" ");
    let own = p.question_word.as_str();
    if !WH.iter().any(|w| joined == *w || joined.starts_with(&format!("{w} "))) {
        bad.push("no wh-word prefix".to_string());
    }
    if !(joined == own || joined.starts_with(&format!("{own} "))) {
        bad.push(format!("does not start with {own:?}"));
    }
    let answer: Vec<String> = p.answer.split_whitespace().map(str::to_lowercase).collect();
    if !answer.is_empty() && words.windows(answer.len()).any(|w| w == answer.as_slice()) {
        bad.push(format!("answer {:?} appears in the question", p.answer));
    }
    bad
}

//! Turning a masked caption into a question.
//!
//! The nearest question is the masked caption read left to right. The
//! relevant question comes from rewriting the dependency tree so the mask
//! is read first:
//!
//! 1. left dependents of the mask node are pruned with their subtrees;
//! 2. at every ancestor of the mask, the child whose subtree holds the mask
//!    is moved to the front of the child list;
//! 3. the tree is read back with [`in_order`], and the mask is replaced by
//!    the question word of its category.
//!
//! Punctuation leaves are dropped during reconstruction.

use std::collections::{BTreeMap, BTreeSet};

use crate::conllu::DepTree;
use crate::error::{Error, Result};
use crate::types::{Category, QuestionWord};

pub const DEFAULT_MAX_QUESTION_TOKENS: usize = 24;
pub const MIN_QUESTION_TOKENS: usize = 3;

/// Category -> question word. Always total over the seven categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhMapping {
    map: BTreeMap<Category, QuestionWord>,
}

impl Default for WhMapping {
    fn default() -> Self {
        use Category::*;
        WhMapping {
            map: BTreeMap::from([
                (Person, QuestionWord::Who),
                (Location, QuestionWord::Where),
                (Count, QuestionWord::HowMany),
                (Quantity, QuestionWord::HowMuch),
                (Entity, QuestionWord::Which),
                (Animal, QuestionWord::What),
                (Object, QuestionWord::What),
            ]),
        }
    }
}

impl WhMapping {
    pub fn get(&self, category: Category) -> QuestionWord {
        self.map[&category]
    }

    pub fn set(&mut self, category: Category, word: QuestionWord) {
        self.map.insert(category, word);
    }

    /// Distinct question words the mapping can produce.
    pub fn image(&self) -> BTreeSet<QuestionWord> {
        self.map.values().copied().collect()
    }

    /// Applies `category<TAB>question-word` overrides on top of `self`.
    pub fn override_from_tsv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(i + 1, "expected `category<TAB>question-word`"))?;
            let cat: Category = cat
                .parse()
                .map_err(|e: Error| Error::format(i + 1, e.to_string()))?;
            let word: QuestionWord = word
                .parse()
                .map_err(|e: Error| Error::format(i + 1, e.to_string()))?;
            self.set(cat, word);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub max_question_tokens: usize,
    pub wh_mapping: WhMapping,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_question_tokens: DEFAULT_MAX_QUESTION_TOKENS,
            wh_mapping: WhMapping::default(),
        }
    }
}

impl GenConfig {
    pub fn new(max_question_tokens: usize, wh_mapping: WhMapping) -> Result<Self> {
        if max_question_tokens < MIN_QUESTION_TOKENS {
            return Err(Error::Config(format!(
                "maximum question length must be at least {MIN_QUESTION_TOKENS}, got {max_question_tokens}"
            )));
        }
        Ok(GenConfig {
            max_question_tokens,
            wh_mapping,
        })
    }
}

/// A surface token on its way into a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub form: String,
    /// Tagged PROPN in the source tree; keeps its case.
    pub proper: bool,
}

impl From<&str> for Word {
    fn from(form: &str) -> Self {
        Word {
            form: form.to_string(),
            proper: false,
        }
    }
}

pub fn is_mask(form: &str) -> bool {
    form.starts_with("[MASK:") && form.ends_with(']')
}

fn find_mask(tree: &DepTree) -> Result<usize> {
    let masks: Vec<usize> = tree
        .tokens
        .iter()
        .filter(|t| is_mask(&t.form))
        .map(|t| t.id)
        .collect();
    match masks.as_slice() {
        [m] => Ok(*m),
        _ => Err(Error::Contract(format!(
            "sentence {} must contain exactly one mask token, found {}",
            tree.sentence_id,
            masks.len()
        ))),
    }
}

fn word_of(tree: &DepTree, id: usize) -> Word {
    let t = tree.token(id);
    Word {
        form: t.form.clone(),
        proper: t.upos == "PROPN",
    }
}

/// The masked caption in original order without sentence-final
/// punctuation.
pub fn nearest_question(masked: &DepTree) -> Result<Vec<Word>> {
    find_mask(masked)?;
    let mut end = masked.len();
    while end > 0 && masked.token(end).is_punct() && !is_mask(&masked.token(end).form) {
        end -= 1;
    }
    Ok((1..=end).map(|id| word_of(masked, id)).collect())
}

/// Prunes the mask's left dependents and promotes the mask-bearing child at
/// every ancestor. Returns a new, renumbered tree whose `promoted` flags
/// record the moves.
pub fn reconstruct_tree(masked: &DepTree) -> Result<DepTree> {
    let mask = find_mask(masked)?;

    let mut dropped: BTreeSet<usize> = BTreeSet::new();
    for child in masked.children(mask) {
        if child < mask {
            dropped.extend(masked.subtree(child));
        }
    }
    let children = masked.child_lists();
    for t in &masked.tokens {
        if t.is_punct() && t.id != mask && t.head != 0 && children[t.id].is_empty() {
            dropped.insert(t.id);
        }
    }

    let mut new_id = vec![0usize; masked.len() + 1];
    let mut next = 1;
    for t in &masked.tokens {
        if !dropped.contains(&t.id) {
            new_id[t.id] = next;
            next += 1;
        }
    }
    let on_path: BTreeSet<usize> = masked.path_from_root(mask).into_iter().collect();
    let tokens = masked
        .tokens
        .iter()
        .filter(|t| !dropped.contains(&t.id))
        .map(|t| {
            let mut nt = t.clone();
            nt.id = new_id[t.id];
            nt.head = new_id[t.head];
            nt.promoted = on_path.contains(&t.id) && t.head != 0;
            nt
        })
        .collect();
    DepTree::new(tokens, &masked.sentence_id, &masked.image_id)
}

/// Token ids in traversal order.
///
/// At each node, promoted children are read first (in id order); then the
/// node itself and its remaining children are read interleaved by id, so
/// that an untouched projective tree reads back as the original sentence.
pub fn in_order_ids(tree: &DepTree) -> Vec<usize> {
    fn emit(tree: &DepTree, children: &[Vec<usize>], node: usize, out: &mut Vec<usize>) {
        let kids = &children[node];
        for &c in kids.iter().filter(|&&c| tree.token(c).promoted) {
            emit(tree, children, c, out);
        }
        let mut head_done = false;
        for &c in kids.iter().filter(|&&c| !tree.token(c).promoted) {
            if !head_done && c > node {
                out.push(node);
                head_done = true;
            }
            emit(tree, children, c, out);
        }
        if !head_done {
            out.push(node);
        }
    }

    let children = tree.child_lists();
    let mut out = Vec::with_capacity(tree.len());
    emit(tree, &children, tree.root, &mut out);
    out
}

pub fn in_order(tree: &DepTree) -> Vec<Word> {
    in_order_ids(tree)
        .into_iter()
        .map(|id| word_of(tree, id))
        .collect()
}

/// Replaces the mask with the category's question word and realizes the
/// question: first letter uppercased, other words lowercased unless proper,
/// truncated to `cfg.max_question_tokens` words, terminated with `?`.
pub fn wh_substitute(seq: &[Word], category: Category, cfg: &GenConfig) -> Result<String> {
    let masks = seq.iter().filter(|w| is_mask(&w.form)).count();
    if masks != 1 {
        return Err(Error::Contract(format!(
            "token sequence must contain exactly one mask token, found {masks}"
        )));
    }
    let wh = cfg.wh_mapping.get(category);
    let mut words: Vec<String> = Vec::with_capacity(seq.len() + 1);
    for w in seq {
        if is_mask(&w.form) {
            words.extend(wh.as_str().split(' ').map(str::to_string));
        } else if w.proper {
            words.push(w.form.clone());
        } else {
            words.push(w.form.to_lowercase());
        }
    }
    words.truncate(cfg.max_question_tokens);
    let mut question = words.join(" ");
    if let Some(first) = question.chars().next() {
        let upper: String = first.to_uppercase().collect();
        question.replace_range(..first.len_utf8(), &upper);
    }
    question.push('?');
    Ok(question)
}

//! Answer extraction: pick one answer span per caption, classify it and
//! replace it with a category mask token.
//!
//! Detected objects are preferred. A caption word matches an object when its
//! lowercase form or lemma is the object label or one of the label's
//! synonyms. Without a match the first named-entity span is used, then the
//! head noun of the first noun chunk.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use crate::conllu::{DepToken, DepTree};
use crate::error::{Error, Result};
use crate::io::{DetectedObject, ImageRecord};
use crate::types::{AnswerSource, Category};

const PERSON_LABEL: &str = "person";
const PERSON_WORDS: [&str; 5] = ["adult", "man", "woman", "boy", "girl"];

/// COCO animal classes.
const COCO_ANIMALS: [&str; 10] = [
    "bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe",
];

const CHUNK_MODIFIERS: [&str; 4] = ["det", "amod", "compound", "nummod"];

/// Object label -> caption words that count as a mention of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymTable {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl Default for SynonymTable {
    /// Ships the person set: adult, man, woman, boy, girl.
    fn default() -> Self {
        let mut t = SynonymTable::empty();
        t.insert(PERSON_LABEL, PERSON_WORDS);
        t
    }
}

impl SynonymTable {
    pub fn empty() -> Self {
        SynonymTable {
            entries: BTreeMap::new(),
        }
    }

    /// Adds words for `label`; everything is lowercased and the label always
    /// maps to itself.
    pub fn insert<I, S>(&mut self, label: &str, words: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let label = label.trim().to_lowercase();
        let set = self.entries.entry(label.clone()).or_default();
        set.insert(label);
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if !w.is_empty() {
                set.insert(w);
            }
        }
    }

    /// The label plus all its synonyms.
    pub fn expand(&self, label: &str) -> BTreeSet<String> {
        let label = label.trim().to_lowercase();
        match self.entries.get(&label) {
            Some(set) => set.clone(),
            None => BTreeSet::from([label]),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.entries
    }

    /// Merges `label<TAB>word1,word2,...` lines. Blank lines and `#`
    /// comments are skipped.
    pub fn extend_from_tsv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, words) = line.split_once('\t').ok_or_else(|| {
                Error::format(i + 1, "expected `label<TAB>word1,word2,...`")
            })?;
            if label.trim().is_empty() {
                return Err(Error::format(i + 1, "empty label"));
            }
            self.insert(label, words.split(','));
        }
        Ok(())
    }
}

/// Labels classified as animals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    words: BTreeSet<String>,
}

impl Default for Gazetteer {
    fn default() -> Self {
        Gazetteer::new(COCO_ANIMALS)
    }
}

impl Gazetteer {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Gazetteer {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One label per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Gazetteer::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractConfig {
    /// Prefer detected-object matches over entity / noun-chunk fallbacks.
    pub use_objects_context: bool,
    /// Drop captions that mention none of the detected objects.
    pub filter_captions: bool,
    pub synonyms: SynonymTable,
    pub animals: Gazetteer,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            use_objects_context: true,
            filter_captions: false,
            synonyms: SynonymTable::default(),
            animals: Gazetteer::default(),
        }
    }
}

/// The chosen answer for one caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerCandidate {
    pub image_id: String,
    pub caption_id: String,
    /// Inclusive token-id range.
    pub span: RangeInclusive<usize>,
    /// Span token closest to the root.
    pub head_id: usize,
    pub surface: String,
    pub category: Category,
    pub source: AnswerSource,
    /// Detector label that produced an object match.
    pub matched_label: Option<String>,
}

impl AnswerCandidate {
    /// Builds a candidate over `span`, deriving the head and surface from
    /// the tree and the category from `cfg`.
    pub fn new(
        tree: &DepTree,
        span: RangeInclusive<usize>,
        source: AnswerSource,
        matched_label: Option<String>,
        cfg: &ExtractConfig,
    ) -> Result<Self> {
        if span.is_empty() || *span.start() < 1 || *span.end() > tree.len() {
            return Err(Error::Contract(format!(
                "span {span:?} outside sentence {} of {} tokens",
                tree.sentence_id,
                tree.len()
            )));
        }
        let head_id = span_head(tree, &span);
        let surface = span
            .clone()
            .map(|i| tree.token(i).form.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let mut cand = AnswerCandidate {
            image_id: tree.image_id.clone(),
            caption_id: tree.sentence_id.clone(),
            span,
            head_id,
            surface,
            category: Category::Object,
            source,
            matched_label,
        };
        cand.category = assign_category(&cand, tree, cfg);
        Ok(cand)
    }
}

/// The span token with the smallest depth; ties go to the smallest id.
pub fn span_head(tree: &DepTree, span: &RangeInclusive<usize>) -> usize {
    span.clone()
        .min_by_key(|&i| (tree.depth(i), i))
        .expect("non-empty span")
}

fn mentions(tok: &DepToken, words: &BTreeSet<String>) -> bool {
    words.contains(&tok.form.to_lowercase()) || words.contains(&tok.lemma.to_lowercase())
}

/// Whether any caption token mentions any (synonym-expanded) object label.
pub fn mentions_any_object(tree: &DepTree, objects: &[DetectedObject], synonyms: &SynonymTable) -> bool {
    objects.iter().any(|o| {
        let words = synonyms.expand(&o.label);
        tree.tokens.iter().any(|t| mentions(t, &words))
    })
}

/// With filtering enabled, keeps only captions that mention a detected
/// object; otherwise returns the record unchanged.
pub fn filter_captions(record: &ImageRecord, cfg: &ExtractConfig) -> ImageRecord {
    if !cfg.filter_captions {
        return record.clone();
    }
    ImageRecord {
        image_id: record.image_id.clone(),
        objects: record.objects.clone(),
        captions: record
            .captions
            .iter()
            .filter(|c| mentions_any_object(c, &record.objects, &cfg.synonyms))
            .cloned()
            .collect(),
    }
}

/// Contiguous entity spans as `(start, end, type)`, in sentence order.
/// An `I-` tag that does not continue an entity of the same type opens a
/// new one.
pub fn entity_spans(tree: &DepTree) -> Vec<(usize, usize, String)> {
    let mut spans: Vec<(usize, usize, String)> = Vec::new();
    let mut open = false;
    for t in &tree.tokens {
        match (t.ner.as_str(), t.entity_type()) {
            ("O", _) | (_, None) => open = false,
            (tag, Some(kind)) => {
                let continues = open
                    && tag.starts_with("I-")
                    && spans.last().is_some_and(|s| s.1 + 1 == t.id && s.2 == kind);
                if continues {
                    spans.last_mut().unwrap().1 = t.id;
                } else {
                    spans.push((t.id, t.id, kind.to_string()));
                }
                open = true;
            }
        }
    }
    spans
}

fn base_rel(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

fn is_noun(t: &DepToken) -> bool {
    t.upos == "NOUN" || t.upos == "PROPN"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NounChunk {
    pub start: usize,
    pub end: usize,
    pub head: usize,
}

/// Noun chunks in order of their first token. A chunk is a noun that is
/// not itself a compound/flat part of another noun, together with the
/// contiguous run of det/amod/compound/nummod tokens to its left that
/// attach inside the chunk.
pub fn noun_chunks(tree: &DepTree) -> Vec<NounChunk> {
    let mut chunks = Vec::new();
    for t in &tree.tokens {
        if !is_noun(t) {
            continue;
        }
        let absorbed = t.head != 0
            && matches!(base_rel(&t.deprel), "compound" | "flat")
            && is_noun(tree.token(t.head));
        if absorbed {
            continue;
        }
        let mut members = BTreeSet::from([t.id]);
        let mut start = t.id;
        while start > 1 {
            let left = tree.token(start - 1);
            if members.contains(&left.head) && CHUNK_MODIFIERS.contains(&base_rel(&left.deprel)) {
                members.insert(left.id);
                start -= 1;
            } else {
                break;
            }
        }
        chunks.push(NounChunk {
            start,
            end: t.id,
            head: t.id,
        });
    }
    chunks.sort_by_key(|c| c.start);
    chunks
}

/// Chooses the answer for one caption, or `None` when nothing qualifies.
pub fn extract_answer(
    tree: &DepTree,
    objects: &[DetectedObject],
    cfg: &ExtractConfig,
) -> Option<AnswerCandidate> {
    if cfg.use_objects_context {
        let mut best: Option<(f64, usize, &str)> = None;
        for obj in objects {
            let words = cfg.synonyms.expand(&obj.label);
            for t in tree.tokens.iter().filter(|t| !t.is_punct()) {
                if !mentions(t, &words) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((score, id, label)) => obj
                        .score
                        .total_cmp(&score)
                        .reverse()
                        .then(t.id.cmp(&id))
                        .then(obj.label.as_str().cmp(label))
                        .is_lt(),
                };
                if better {
                    best = Some((obj.score, t.id, &obj.label));
                }
            }
        }
        if let Some((_, id, label)) = best {
            return AnswerCandidate::new(
                tree,
                id..=id,
                AnswerSource::ObjectMatch,
                Some(label.to_string()),
                cfg,
            )
            .ok();
        }
    }
    if let Some((start, end, _)) = entity_spans(tree).into_iter().next() {
        return AnswerCandidate::new(tree, start..=end, AnswerSource::Ner, None, cfg).ok();
    }
    noun_chunks(tree).first().and_then(|c| {
        AnswerCandidate::new(tree, c.head..=c.head, AnswerSource::NounChunk, None, cfg).ok()
    })
}

/// Classifies an answer by entity type, part of speech and the person and
/// animal word lists. Rules apply in order: COUNT, QUANTITY, PERSON,
/// LOCATION, ANIMAL, ENTITY, OBJECT.
pub fn assign_category(cand: &AnswerCandidate, tree: &DepTree, cfg: &ExtractConfig) -> Category {
    let head = tree.token(cand.head_id);
    let entity = head.entity_type().unwrap_or("");
    let mut labels: Vec<String> = vec![head.lemma.to_lowercase(), head.form.to_lowercase()];
    if let Some(l) = &cand.matched_label {
        labels.push(l.to_lowercase());
    }
    let person = cfg.synonyms.expand(PERSON_LABEL);

    if head.upos == "NUM" || entity == "CARDINAL" {
        Category::Count
    } else if matches!(entity, "MONEY" | "QUANTITY" | "PERCENT") {
        Category::Quantity
    } else if entity == "PERSON" || labels.iter().any(|l| person.contains(l)) {
        Category::Person
    } else if matches!(entity, "GPE" | "LOC" | "FAC") {
        Category::Location
    } else if labels.iter().any(|l| cfg.animals.contains(l)) {
        Category::Animal
    } else if head.upos == "PROPN" {
        Category::Entity
    } else {
        Category::Object
    }
}

pub fn mask_form(category: Category) -> String {
    format!("[MASK:{category}]")
}

/// The category of a mask token form such as `[MASK:ANIMAL]`.
pub fn parse_mask(form: &str) -> Option<Category> {
    form.strip_prefix("[MASK:")?
        .strip_suffix(']')?
        .parse()
        .ok()
}

/// Replaces the answer span with one `[MASK:<CATEGORY>]` token.
///
/// The mask takes the span head's head and relation; tokens outside the
/// span that depended on a span token now depend on the mask. Ids are
/// renumbered contiguously. The input tree is left untouched.
pub fn mask_caption(tree: &DepTree, cand: &AnswerCandidate) -> Result<DepTree> {
    let (s, e) = (*cand.span.start(), *cand.span.end());
    if cand.span.is_empty() || s < 1 || e > tree.len() || !cand.span.contains(&cand.head_id) {
        return Err(Error::Contract(format!(
            "answer span {:?} / head {} invalid for sentence {}",
            cand.span, cand.head_id, tree.sentence_id
        )));
    }
    let shift = e - s;
    let remap = |old: usize| -> usize {
        if old == 0 {
            0
        } else if old < s {
            old
        } else if old <= e {
            s
        } else {
            old - shift
        }
    };
    let head_tok = tree.token(cand.head_id);
    let mut tokens = Vec::with_capacity(tree.len() - shift);
    for t in &tree.tokens {
        if t.id == s {
            let form = mask_form(cand.category);
            let mut mask = DepToken::new(s, &form, "X", remap(head_tok.head), &head_tok.deprel);
            mask.lemma = form;
            tokens.push(mask);
        }
        if cand.span.contains(&t.id) {
            continue;
        }
        let mut nt = t.clone();
        nt.id = remap(t.id);
        nt.head = remap(t.head);
        tokens.push(nt);
    }
    DepTree::new(tokens, &tree.sentence_id, &tree.image_id)
}

//! CoNLL-U captions: dependency tokens, sentence trees, parsing and
//! serialization.
//!
//! Each sentence block must carry `# sent_id = ...` and `# image_id = ...`
//! comments. Named-entity tags ride in the MISC column as `NER=<tag>` in BIO
//! form; a token without one is tagged `O`. Multiword token ranges (`1-2`)
//! and empty nodes (`1.1`) are rejected.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One token line of a CoNLL-U sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepToken {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// Parent token id, `0` for the root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    /// Raw MISC column, written back verbatim.
    pub misc: String,
    /// BIO entity tag taken from MISC (`O`, `B-PERSON`, ...).
    pub ner: String,
    /// Set by tree reconstruction: this token's subtree was moved to the
    /// front of its parent's child list. Not part of the file format.
    pub promoted: bool,
}

impl DepToken {
    /// A token with lemma = lowercase form, no entity tag and empty
    /// auxiliary columns.
    pub fn new(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Self {
        DepToken {
            id,
            form: form.to_string(),
            lemma: form.to_lowercase(),
            upos: upos.to_string(),
            xpos: "_".into(),
            feats: "_".into(),
            head,
            deprel: deprel.to_string(),
            deps: "_".into(),
            misc: "_".into(),
            ner: "O".into(),
            promoted: false,
        }
    }

    pub fn with_lemma(mut self, lemma: &str) -> Self {
        self.lemma = lemma.to_string();
        self
    }

    /// Sets the entity tag and rewrites MISC to match.
    pub fn with_ner(mut self, ner: &str) -> Self {
        self.ner = ner.to_string();
        self.misc = if ner == "O" { "_".into() } else { format!("NER={ner}") };
        self
    }

    /// Entity type without the BIO prefix, `None` for `O`.
    pub fn entity_type(&self) -> Option<&str> {
        self.ner
            .strip_prefix("B-")
            .or_else(|| self.ner.strip_prefix("I-"))
    }

    pub fn is_punct(&self) -> bool {
        self.deprel == "punct" || self.upos == "PUNCT"
    }

    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            self.xpos,
            self.feats,
            self.head,
            self.deprel,
            self.deps,
            self.misc
        )
    }
}

/// `O` or `B-TYPE` / `I-TYPE` with an uppercase type.
pub fn is_valid_ner(tag: &str) -> bool {
    if tag == "O" {
        return true;
    }
    match tag.split_once('-') {
        Some((prefix, kind)) => {
            (prefix == "B" || prefix == "I")
                && !kind.is_empty()
                && kind.chars().all(|c| c.is_ascii_uppercase())
        }
        None => false,
    }
}

/// A caption as a rooted, ordered dependency tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    pub tokens: Vec<DepToken>,
    /// Id of the unique token whose head is 0.
    pub root: usize,
    pub sentence_id: String,
    pub image_id: String,
    /// Comment lines of the source block, without the trailing newline.
    pub comments: Vec<String>,
}

impl DepTree {
    /// Builds a tree, checking that ids are contiguous from 1, entity tags
    /// are well formed and head links form a single rooted tree.
    pub fn new(tokens: Vec<DepToken>, sentence_id: &str, image_id: &str) -> Result<Self> {
        let root = validate(&tokens, sentence_id)?;
        Ok(DepTree {
            tokens,
            root,
            sentence_id: sentence_id.to_string(),
            image_id: image_id.to_string(),
            comments: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &DepToken {
        &self.tokens[id - 1]
    }

    /// Child lists indexed by head id (index 0 holds the root), each in
    /// ascending id order.
    pub fn child_lists(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.tokens.len() + 1];
        for t in &self.tokens {
            children[t.head].push(t.id);
        }
        children
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.head == id)
            .map(|t| t.id)
            .collect()
    }

    /// Ids on the path from the root down to `id`, both ends included.
    pub fn path_from_root(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while self.token(cur).head != 0 {
            cur = self.token(cur).head;
            path.push(cur);
        }
        path.reverse();
        path
    }

    pub fn depth(&self, id: usize) -> usize {
        self.path_from_root(id).len() - 1
    }

    /// All ids in the subtree rooted at `id`, ascending.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let children = self.child_lists();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(children[n].iter().copied());
        }
        out.sort_unstable();
        out
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// The sentence block as CoNLL-U text, terminated by a blank line.
    /// Trees built in code get synthesized `sent_id` / `image_id` comments.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        if self.comments.is_empty() {
            let _ = writeln!(out, "# sent_id = {}", self.sentence_id);
            let _ = writeln!(out, "# image_id = {}", self.image_id);
        } else {
            for c in &self.comments {
                out.push_str(c);
                out.push('\n');
            }
        }
        for t in &self.tokens {
            out.push_str(&t.to_line());
            out.push('\n');
        }
        out.push('\n');
        out
    }
}

/// Serializes several trees back to one CoNLL-U document.
pub fn write_conllu(trees: &[DepTree]) -> String {
    trees.iter().map(DepTree::to_conllu).collect()
}

fn validate(tokens: &[DepToken], sentence_id: &str) -> Result<usize> {
    if tokens.is_empty() {
        return Err(Error::tree(sentence_id, "sentence has no tokens"));
    }
    let n = tokens.len();
    for (i, t) in tokens.iter().enumerate() {
        if t.id != i + 1 {
            return Err(Error::tree(
                sentence_id,
                format!("token ids must run 1..{n}, found {} at position {}", t.id, i + 1),
            ));
        }
        if t.head > n {
            return Err(Error::tree(
                sentence_id,
                format!("token {} has head {} outside the sentence", t.id, t.head),
            ));
        }
        if t.head == t.id {
            return Err(Error::tree(
                sentence_id,
                format!("token {} is its own head (cycle)", t.id),
            ));
        }
        if !is_valid_ner(&t.ner) {
            return Err(Error::tree(
                sentence_id,
                format!("token {} has malformed entity tag {:?}", t.id, t.ner),
            ));
        }
    }
    let roots: Vec<usize> = tokens.iter().filter(|t| t.head == 0).map(|t| t.id).collect();
    let root = match roots.as_slice() {
        [r] => *r,
        [] => return Err(Error::tree(sentence_id, "no token has head 0")),
        many => {
            return Err(Error::tree(
                sentence_id,
                format!("multiple roots: tokens {many:?} have head 0"),
            ))
        }
    };

    // 0 = unvisited, 1 = on current walk, 2 = known to reach the root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut walk = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            walk.push(cur);
            cur = tokens[cur - 1].head;
        }
        if state[cur] == 1 {
            return Err(Error::tree(
                sentence_id,
                format!("head links form a cycle through token {cur}"),
            ));
        }
        for w in walk {
            state[w] = 2;
        }
    }
    Ok(root)
}

#[derive(Default)]
struct Block {
    start_line: usize,
    comments: Vec<String>,
    tokens: Vec<DepToken>,
    sent_id: Option<String>,
    image_id: Option<String>,
}

/// Parses a CoNLL-U document into one tree per sentence block.
pub fn parse_conllu(text: &str) -> Result<Vec<DepTree>> {
    let mut trees = Vec::new();
    let mut block: Option<Block> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            if let Some(b) = block.take() {
                trees.push(finish_block(b)?);
            }
            continue;
        }
        let b = block.get_or_insert_with(|| Block {
            start_line: line_no,
            ..Block::default()
        });
        if let Some(comment) = line.strip_prefix('#') {
            if !b.tokens.is_empty() {
                return Err(Error::format(line_no, "comment line inside token lines"));
            }
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => b.sent_id = Some(value.trim().to_string()),
                    "image_id" => b.image_id = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            b.comments.push(line.to_string());
            continue;
        }
        let token = parse_token_line(line, line_no, b.tokens.len() + 1)?;
        b.tokens.push(token);
    }
    if let Some(b) = block.take() {
        trees.push(finish_block(b)?);
    }
    Ok(trees)
}

fn finish_block(b: Block) -> Result<DepTree> {
    if b.tokens.is_empty() {
        return Err(Error::format(b.start_line, "sentence block has no token lines"));
    }
    let sent_id = b
        .sent_id
        .ok_or_else(|| Error::format(b.start_line, "sentence block lacks a `# sent_id =` comment"))?;
    let image_id = b.image_id.ok_or_else(|| {
        Error::format(b.start_line, "sentence block lacks an `# image_id =` comment")
    })?;
    let mut tree = DepTree::new(b.tokens, &sent_id, &image_id)?;
    tree.comments = b.comments;
    Ok(tree)
}

fn parse_token_line(line: &str, line_no: usize, expected_id: usize) -> Result<DepToken> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::format(
            line_no,
            format!("expected 10 tab-separated columns, found {}", cols.len()),
        ));
    }
    let id_col = cols[0];
    if id_col.contains('-') {
        return Err(Error::format(
            line_no,
            format!("multiword token range {id_col:?} is not supported"),
        ));
    }
    if id_col.contains('.') {
        return Err(Error::format(
            line_no,
            format!("empty node {id_col:?} is not supported"),
        ));
    }
    let id: usize = id_col
        .parse()
        .map_err(|_| Error::format(line_no, format!("invalid token id {id_col:?}")))?;
    if id != expected_id {
        return Err(Error::format(
            line_no,
            format!("token id {id} out of sequence, expected {expected_id}"),
        ));
    }
    let head: usize = cols[6]
        .parse()
        .map_err(|_| Error::format(line_no, format!("invalid head {:?}", cols[6])))?;
    let misc = cols[9];
    let ner = misc
        .split('|')
        .find_map(|kv| kv.strip_prefix("NER="))
        .unwrap_or("O");
    if !is_valid_ner(ner) {
        return Err(Error::format(
            line_no,
            format!("malformed entity tag {ner:?} in MISC"),
        ));
    }
    Ok(DepToken {
        id,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: cols[5].to_string(),
        head,
        deprel: cols[7].to_string(),
        deps: cols[8].to_string(),
        misc: misc.to_string(),
        ner: ner.to_string(),
        promoted: false,
    })
}

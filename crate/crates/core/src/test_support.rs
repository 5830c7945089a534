use crate::conllu::{DepToken, DepTree};

/// Builds a tree from space-separated `form|UPOS|head|deprel[|NER[|lemma]]`
/// token descriptions.
pub(crate) fn sent(desc: &str) -> DepTree {
    sent_with_ids(desc, "s1", "img1")
}

pub(crate) fn sent_with_ids(desc: &str, sentence_id: &str, image_id: &str) -> DepTree {
    let tokens = desc
        .split_whitespace()
        .enumerate()
        .map(|(i, t)| {
            let f: Vec<&str> = t.split('|').collect();
            let mut tok = DepToken::new(i + 1, f[0], f[1], f[2].parse().unwrap(), f[3]);
            if let Some(ner) = f.get(4) {
                tok = tok.with_ner(ner);
            }
            if let Some(lemma) = f.get(5) {
                tok = tok.with_lemma(lemma);
            }
            tok
        })
        .collect();
    DepTree::new(tokens, sentence_id, image_id).unwrap()
}

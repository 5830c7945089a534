//! End-to-end generation over image records.

use rayon::prelude::*;

use crate::conllu::DepTree;
use crate::error::{Error, Result};
use crate::extract::{extract_answer, filter_captions, mask_caption, AnswerCandidate, ExtractConfig};
use crate::io::{DetectedObject, ImageRecord};
use crate::question::{in_order, reconstruct_tree, wh_substitute, GenConfig};
use crate::types::QAPair;

/// Generated pairs plus diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Generation {
    pub pairs: Vec<QAPair>,
    /// Captions seen before filtering.
    pub captions: usize,
    /// Captions removed by the filtering block.
    pub filtered: usize,
    /// Captions that yielded no valid pair.
    pub skipped: usize,
}

impl Generation {
    fn absorb(&mut self, other: Generation) {
        self.pairs.extend(other.pairs);
        self.captions += other.captions;
        self.filtered += other.filtered;
        self.skipped += other.skipped;
    }
}

/// Runs answer extraction and question rewriting for one caption. `None`
/// when the caption has no usable answer or the result breaks a pair
/// invariant.
pub fn question_for_caption(
    tree: &DepTree,
    objects: &[DetectedObject],
    ecfg: &ExtractConfig,
    gcfg: &GenConfig,
) -> Option<QAPair> {
    let cand = extract_answer(tree, objects, ecfg)?;
    build_pair(tree, &cand, gcfg).ok()
}

fn build_pair(tree: &DepTree, cand: &AnswerCandidate, gcfg: &GenConfig) -> Result<QAPair> {
    let masked = mask_caption(tree, cand)?;
    let rebuilt = reconstruct_tree(&masked)?;
    let question = wh_substitute(&in_order(&rebuilt), cand.category, gcfg)?;
    let pair = QAPair {
        image_id: tree.image_id.clone(),
        caption_id: tree.sentence_id.clone(),
        question,
        answer: cand.surface.clone(),
        category: cand.category,
        question_word: gcfg.wh_mapping.get(cand.category),
        answer_source: cand.source,
    };
    pair.check_invariants(gcfg.max_question_tokens)
        .map_err(Error::Contract)?;
    Ok(pair)
}

/// Pairs for one image, in caption order.
pub fn generate_qa(record: &ImageRecord, ecfg: &ExtractConfig, gcfg: &GenConfig) -> Generation {
    let kept = filter_captions(record, ecfg);
    let mut out = Generation {
        captions: record.captions.len(),
        filtered: record.captions.len() - kept.captions.len(),
        ..Generation::default()
    };
    for tree in &kept.captions {
        match question_for_caption(tree, &kept.objects, ecfg, gcfg) {
            Some(pair) => out.pairs.push(pair),
            None => out.skipped += 1,
        }
    }
    out
}

/// Generates over many records on `jobs` worker threads (0 = rayon's
/// default). Output order always follows input order.
pub fn generate_corpus(
    records: &[ImageRecord],
    ecfg: &ExtractConfig,
    gcfg: &GenConfig,
    jobs: usize,
) -> Result<Generation> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let parts: Vec<Generation> = pool.install(|| {
        records
            .par_iter()
            .map(|r| generate_qa(r, ecfg, gcfg))
            .collect()
    });
    let mut total = Generation::default();
    for part in parts {
        total.absorb(part);
    }
    Ok(total)
}

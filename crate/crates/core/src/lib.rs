//! Weakly supervised question-answer generation from image captions.
//!
//! Captions arrive as dependency-parsed CoNLL-U with NER tags, paired with
//! per-image object detections. Each caption yields at most one question
//! whose answer is a span of the caption.

pub mod conllu;
pub mod error;
pub mod extract;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod question;
pub mod report;
pub mod types;

#[cfg(test)]
mod test_support;

pub use conllu::{parse_conllu, write_conllu, DepToken, DepTree};
pub use error::{Error, Result};
pub use extract::{extract_answer, mask_caption, AnswerCandidate, ExtractConfig, Gazetteer, SynonymTable};
pub use io::{read_captions, read_objects, read_qa, read_references, write_qa, DetectedObject, ImageRecord, References};
pub use metrics::{bleu, corpus_bleu, evaluate_corpus, meteor, rouge_l, Metric, MetricReport};
pub use pipeline::{generate_corpus, generate_qa, Generation};
pub use question::{in_order, reconstruct_tree, wh_substitute, GenConfig, WhMapping};
pub use report::{category_distribution, render_report, CategoryHistogram};
pub use types::{AnswerSource, Category, QAPair, QuestionWord};

//! Question-word distribution and printable reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::types::{QAPair, QuestionWord};

pub const JSON_SENTINEL: &str = "---JSON---";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryHistogram {
    /// One entry per question word, zeros included.
    pub counts: BTreeMap<QuestionWord, usize>,
    pub total: usize,
}

impl Default for CategoryHistogram {
    fn default() -> Self {
        CategoryHistogram {
            counts: QuestionWord::ALL.into_iter().map(|w| (w, 0)).collect(),
            total: 0,
        }
    }
}

impl CategoryHistogram {
    pub fn count(&self, word: QuestionWord) -> usize {
        self.counts.get(&word).copied().unwrap_or(0)
    }

    /// Most frequent question word; ties resolve to the earlier word in
    /// [`QuestionWord::ALL`]. `None` for an empty histogram.
    pub fn mode(&self) -> Option<QuestionWord> {
        if self.total == 0 {
            return None;
        }
        QuestionWord::ALL
            .into_iter()
            .rev()
            .max_by_key(|&w| self.count(w))
    }

    pub fn percent(&self, word: QuestionWord) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.count(word) as f64 / self.total as f64
        }
    }
}

pub fn category_distribution(pairs: &[QAPair]) -> CategoryHistogram {
    let mut hist = CategoryHistogram::default();
    for p in pairs {
        *hist.counts.entry(p.question_word).or_insert(0) += 1;
        hist.total += 1;
    }
    hist
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub histogram: CategoryHistogram,
    pub metrics: Option<MetricReport>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", x * 100.0))
}

/// Human-readable tables followed by a JSON block between
/// `---JSON---` lines. Percentages have one decimal; metric scores are
/// scaled by 100 with two decimals.
pub fn render_report(hist: &CategoryHistogram, metrics: Option<&MetricReport>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>7} {:>7}", "question", "count", "share");
    for w in QuestionWord::ALL {
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>6.1}%",
            w.as_str(),
            hist.count(w),
            hist.percent(w)
        );
    }
    let _ = writeln!(out, "{:<10} {:>7}", "total", hist.total);

    if let Some(m) = metrics {
        out.push('\n');
        let _ = writeln!(out, "{:<10} {:>7}", "metric", "score");
        let _ = writeln!(out, "{:<10} {:>7}", "BLEU", pct(m.bleu));
        let _ = writeln!(out, "{:<10} {:>7}", "METEOR", pct(m.meteor));
        let _ = writeln!(out, "{:<10} {:>7}", "ROUGE-L", pct(m.rouge_l));
        let _ = writeln!(out, "{:<10} {:>7}", "pairs", m.n_pairs);
        if !m.skipped_ids.is_empty() {
            let _ = writeln!(out, "{} candidate(s) without references", m.skipped_ids.len());
        }
    }

    let data = ReportData {
        histogram: hist.clone(),
        metrics: metrics.cloned(),
    };
    out.push_str(JSON_SENTINEL);
    out.push('\n');
    out.push_str(&serde_json::to_string_pretty(&data).expect("report serializes"));
    out.push('\n');
    out.push_str(JSON_SENTINEL);
    out.push('\n');
    out
}

/// Extracts the JSON block from a rendered report.
pub fn parse_report(text: &str) -> Result<ReportData> {
    let mut lines = text.lines().enumerate();
    let start = lines
        .find(|(_, l)| l.trim() == JSON_SENTINEL)
        .map(|(i, _)| i + 1)
        .ok_or_else(|| Error::format(1, "report has no JSON block"))?;
    let mut body = String::new();
    for (_, l) in lines.by_ref() {
        if l.trim() == JSON_SENTINEL {
            return serde_json::from_str(&body).map_err(|source| Error::Json {
                line: start + 1,
                source,
            });
        }
        body.push_str(l);
        body.push('\n');
    }
    Err(Error::format(start, "unterminated JSON block"))
}

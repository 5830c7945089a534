//! Shared vocabulary: answer categories, question words and the generated
//! question-answer record.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Semantic class of an extracted answer. Each class maps onto one of the
/// six question words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Person,
    Animal,
    Location,
    Count,
    Quantity,
    Entity,
    Object,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Person,
        Category::Animal,
        Category::Location,
        Category::Count,
        Category::Quantity,
        Category::Entity,
        Category::Object,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Person => "PERSON",
            Category::Animal => "ANIMAL",
            Category::Location => "LOCATION",
            Category::Count => "COUNT",
            Category::Quantity => "QUANTITY",
            Category::Entity => "ENTITY",
            Category::Object => "OBJECT",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown answer category {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionWord {
    #[serde(rename = "who")]
    Who,
    #[serde(rename = "what")]
    What,
    #[serde(rename = "which")]
    Which,
    #[serde(rename = "where")]
    Where,
    #[serde(rename = "how many")]
    HowMany,
    #[serde(rename = "how much")]
    HowMuch,
}

impl QuestionWord {
    pub const ALL: [QuestionWord; 6] = [
        QuestionWord::Who,
        QuestionWord::What,
        QuestionWord::Which,
        QuestionWord::Where,
        QuestionWord::HowMany,
        QuestionWord::HowMuch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionWord::Who => "who",
            QuestionWord::What => "what",
            QuestionWord::Which => "which",
            QuestionWord::Where => "where",
            QuestionWord::HowMany => "how many",
            QuestionWord::HowMuch => "how much",
        }
    }

    /// Number of whitespace-separated words the question word occupies.
    pub fn word_count(self) -> usize {
        self.as_str().split_whitespace().count()
    }
}

impl fmt::Display for QuestionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        QuestionWord::ALL
            .into_iter()
            .find(|w| w.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown question word {s:?}")))
    }
}

/// Where an answer span came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnswerSource {
    ObjectMatch,
    NounChunk,
    Ner,
}

/// One generated question-answer pair with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub image_id: String,
    pub caption_id: String,
    pub question: String,
    pub answer: String,
    pub category: Category,
    pub question_word: QuestionWord,
    pub answer_source: AnswerSource,
}

impl QAPair {
    /// Checks the structural invariants every generated pair must satisfy,
    /// returning a description of the first violation.
    pub fn check_invariants(&self, max_tokens: usize) -> Result<(), String> {
        if !self.question.ends_with('?') {
            return Err("question does not end with '?'".into());
        }
        let words = question_words(&self.question);
        if words.len() > max_tokens {
            return Err(format!(
                "question has {} tokens, limit is {max_tokens}",
                words.len()
            ));
        }
        let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let starts_with_wh = QuestionWord::ALL.iter().any(|qw| {
            let wh: Vec<&str> = qw.as_str().split(' ').collect();
            lowered.len() >= wh.len() && lowered[..wh.len()].iter().zip(&wh).all(|(a, b)| a == b)
        });
        if !starts_with_wh {
            return Err("question does not start with a question word".into());
        }
        let prefix: Vec<&str> = self.question_word.as_str().split(' ').collect();
        if lowered.len() < prefix.len() || lowered[..prefix.len()] != prefix[..] {
            return Err(format!(
                "question does not start with its question word {:?}",
                self.question_word.as_str()
            ));
        }
        if contains_answer(&lowered, &self.answer) {
            return Err(format!("answer {:?} occurs in the question", self.answer));
        }
        Ok(())
    }
}

/// Whitespace tokens of a question with the trailing `?` detached.
pub(crate) fn question_words(question: &str) -> Vec<&str> {
    question
        .trim_end_matches('?')
        .split_whitespace()
        .collect()
}

/// Whether the answer's tokens occur contiguously in `question_tokens`
/// (compared case-insensitively; tokens must already be lowercase).
pub(crate) fn contains_answer(question_tokens: &[String], answer: &str) -> bool {
    let ans: Vec<String> = answer.split_whitespace().map(str::to_lowercase).collect();
    if ans.is_empty() || ans.len() > question_tokens.len() {
        return false;
    }
    question_tokens.windows(ans.len()).any(|w| w == ans.as_slice())
}

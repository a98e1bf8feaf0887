//! Tokenization, stemming and quantity spotting for intent sentences.

use std::ops::Range;

use serde::Serialize;

use crate::decimal::Decimal;
use crate::model::{ComparisonOp, Level, TimeUnit};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Word,
    Number { value: Decimal, percent: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    /// Lowercased surface form (numbers keep their digits).
    pub lower: String,
    pub stem: String,
    /// Byte offsets into the intent.
    pub span: Range<usize>,
    pub sentence: usize,
}

impl Token {
    fn is_word(&self) -> bool {
        matches!(self.kind, TokenKind::Word)
    }
}

/// Light suffix stripping: one inflectional suffix, then a trailing `e`.
/// Good enough to conflate schedule/schedules/scheduling.
pub fn stem(word: &str) -> String {
    const SUFFIXES: [&str; 9] = ["ations", "ation", "ingly", "ing", "edly", "ed", "ly", "es", "s"];
    let mut w = word.to_lowercase();
    for suffix in SUFFIXES {
        if w.len() >= suffix.len() + 3 && w.ends_with(suffix) {
            w.truncate(w.len() - suffix.len());
            break;
        }
    }
    if w.len() > 3 && w.ends_with('e') {
        w.pop();
    }
    w
}

pub(crate) fn stem_phrase(phrase: &str) -> Vec<String> {
    phrase.split_whitespace().map(stem).collect()
}

pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sentence = 0;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let digits = &text[start..i];
            let Ok(value) = digits.parse::<Decimal>() else {
                continue;
            };
            let mut end = i;
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            let percent = if bytes.get(j) == Some(&b'%') {
                end = j + 1;
                true
            } else if text[j..].len() >= 7 && text[j..j + 7].eq_ignore_ascii_case("percent") {
                end = j + 7;
                true
            } else {
                false
            };
            i = end;
            tokens.push(Token {
                kind: TokenKind::Number { value, percent },
                lower: digits.to_string(),
                stem: digits.to_string(),
                span: start..end,
                sentence,
            });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric()
                    || ((bytes[i] == b'-' || bytes[i] == b'\'')
                        && bytes.get(i + 1).is_some_and(u8::is_ascii_alphabetic)))
            {
                i += 1;
            }
            let lower = text[start..i].to_ascii_lowercase();
            tokens.push(Token {
                kind: TokenKind::Word,
                stem: stem(&lower),
                lower,
                span: start..i,
                sentence,
            });
        } else {
            if matches!(c, b'.' | b'!' | b'?' | b';') {
                sentence += 1;
            }
            // Skip the whole UTF-8 sequence for non-ASCII characters.
            i += text[i..].chars().next().map_or(1, char::len_utf8);
        }
    }
    tokens
}

/// Cue phrase category that fixes the comparison operator of a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CueCategory {
    AtLeast,
    AtMost,
    Exactly,
}

impl CueCategory {
    pub fn op(self) -> ComparisonOp {
        match self {
            CueCategory::AtLeast => ComparisonOp::AtLeast,
            CueCategory::AtMost => ComparisonOp::AtMost,
            CueCategory::Exactly => ComparisonOp::Exactly,
        }
    }

    /// Phrases recognised immediately before a quantity, longest first.
    pub(crate) const PHRASES: &'static [(&'static [&'static str], CueCategory)] = &[
        (&["no", "more", "than"], CueCategory::AtMost),
        (&["no", "less", "than"], CueCategory::AtLeast),
        (&["not", "exceeding"], CueCategory::AtMost),
        (&["a", "minimum", "of"], CueCategory::AtLeast),
        (&["a", "maximum", "of"], CueCategory::AtMost),
        (&["at", "least"], CueCategory::AtLeast),
        (&["at", "most"], CueCategory::AtMost),
        (&["up", "to"], CueCategory::AtMost),
        (&["equal", "to"], CueCategory::Exactly),
        (&["minimum", "of"], CueCategory::AtLeast),
        (&["maximum", "of"], CueCategory::AtMost),
        (&["minimum"], CueCategory::AtLeast),
        (&["maximum"], CueCategory::AtMost),
        (&["within"], CueCategory::AtMost),
        (&["under"], CueCategory::AtMost),
        (&["below"], CueCategory::AtMost),
        (&["exactly"], CueCategory::Exactly),
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Quantity {
    Duration { magnitude: Decimal, unit: TimeUnit },
    Percent { value: Decimal },
    Count { value: u64 },
    Level { level: Level },
}

/// A quantity found in an intent, with the cue phrase preceding it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityMention {
    /// Byte offsets of the quantity in the intent.
    pub span: Range<usize>,
    pub quantity: Quantity,
    pub cue: Option<CueCategory>,
    #[serde(skip)]
    pub(crate) tokens: Range<usize>,
    #[serde(skip)]
    pub(crate) sentence: usize,
}

pub(crate) fn find_quantities(tokens: &[Token]) -> Vec<QuantityMention> {
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let next = tokens.get(i + 1).filter(|t| t.sentence == tok.sentence && t.is_word());
        let found = match &tok.kind {
            TokenKind::Number { value, percent: true } => Some((Quantity::Percent { value: *value }, i + 1)),
            TokenKind::Number { value, percent: false } => match next {
                Some(n) => match TimeUnit::from_word(&n.lower) {
                    Some(unit) if !value.is_zero() => {
                        Some((Quantity::Duration { magnitude: *value, unit }, i + 2))
                    }
                    Some(_) => None,
                    None => value.as_u64().map(|v| (Quantity::Count { value: v }, i + 1)),
                },
                None => None,
            },
            TokenKind::Word => Level::from_word(&tok.lower).map(|level| (Quantity::Level { level }, i + 1)),
        };
        match found {
            Some((quantity, end)) => {
                let cue = match quantity {
                    Quantity::Level { .. } => None,
                    _ => preceding_cue(tokens, i),
                };
                mentions.push(QuantityMention {
                    span: tokens[i].span.start..tokens[end - 1].span.end,
                    quantity,
                    cue,
                    tokens: i..end,
                    sentence: tok.sentence,
                });
                i = end;
            }
            None => i += 1,
        }
    }
    mentions
}

fn preceding_cue(tokens: &[Token], at: usize) -> Option<CueCategory> {
    let sentence = tokens[at].sentence;
    CueCategory::PHRASES.iter().find_map(|(phrase, cat)| {
        let n = phrase.len();
        if n > at {
            return None;
        }
        let window = &tokens[at - n..at];
        let hit = window.iter().all(|t| t.sentence == sentence)
            && window.iter().zip(phrase.iter()).all(|(t, w)| t.lower == *w);
        hit.then_some(*cat)
    })
}

/// Token positions where a stemmed phrase occurs, restricted to one sentence.
pub(crate) fn phrase_occurrences(tokens: &[Token], phrase: &[String], sentence: Option<usize>) -> Vec<Range<usize>> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - phrase.len())
        .filter(|&s| {
            let window = &tokens[s..s + phrase.len()];
            let same_sentence = window.iter().all(|t| t.sentence == window[0].sentence);
            same_sentence
                && sentence.is_none_or(|want| window[0].sentence == want)
                && window.iter().zip(phrase).all(|(t, p)| t.is_word() && t.stem == *p)
        })
        .map(|s| s..s + phrase.len())
        .collect()
}

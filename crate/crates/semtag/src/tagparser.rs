//! Tag tokenization and well-formedness auditing over a fixed tag
//! vocabulary.
//!
//! Only the vocabulary's literal `<name>` / `</name>` forms are treated
//! as markup; every other character — including stray angle brackets from
//! OCR noise and unknown tags — is ordinary text. A single left-to-right
//! stack pass counts correctly nested open/close pairs and malformed tag
//! events, yielding the well-formedness ratio and the tag count used for
//! candidate selection.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Default tag set: the five annotation categories the tagging prompt
/// allows.
pub const DEFAULT_TAGS: [&str; 5] = ["location", "entity", "event", "organization", "date"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("tag vocabulary must not be empty")]
    Empty,
    #[error("invalid tag name {0:?}: names must be non-empty lowercase ASCII letters")]
    InvalidName(String),
    #[error("duplicate tag name {0:?}")]
    Duplicate(String),
}

/// Ordered set of lowercase tag names recognized as markup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagVocabulary {
    names: Vec<String>,
    max_len: usize,
}

impl TagVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for name in names {
            let name = name.into();
            if name.is_empty() || !name.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(VocabularyError::InvalidName(name));
            }
            if out.contains(&name) {
                return Err(VocabularyError::Duplicate(name));
            }
            out.push(name);
        }
        if out.is_empty() {
            return Err(VocabularyError::Empty);
        }
        let max_len = out.iter().map(|n| n.len()).max().unwrap_or(0);
        Ok(Self {
            names: out,
            max_len,
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl Default for TagVocabulary {
    fn default() -> Self {
        Self::new(DEFAULT_TAGS).expect("default tags are valid")
    }
}

/// One token of tagged text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Open(String),
    Close(String),
    Text(String),
}

/// A token plus the character offset where it starts in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagToken {
    pub kind: TokenKind,
    pub offset: usize,
}

impl TagToken {
    /// The exact source characters this token covers.
    pub fn source_text(&self) -> String {
        match &self.kind {
            TokenKind::Open(name) => format!("<{name}>"),
            TokenKind::Close(name) => format!("</{name}>"),
            TokenKind::Text(content) => content.clone(),
        }
    }
}

/// One well-formed tag pair located in the tag-stripped text.
///
/// `start` and `end` are character offsets into the stripped text;
/// `text` is the enclosed stripped content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub tag: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}..{}] {:?}", self.tag, self.start, self.end, self.text)
    }
}

/// Result of stack-matching a token stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagAudit {
    pub n_pairs: u64,
    pub n_malformed: u64,
    pub per_tag_pairs: BTreeMap<String, u64>,
    pub annotations: Vec<Annotation>,
}

/// Split `text` into Open/Close/Text tokens.
///
/// A literal `<name>` or `</name>` whose name is in the vocabulary
/// (exact lowercase match, no attributes, no internal whitespace)
/// becomes a tag token; everything else joins the surrounding text
/// token. Tokenization is lossless: concatenating the tokens' source
/// spans in order reconstructs the input exactly.
pub fn tokenize(text: &str, vocab: &TagVocabulary) -> Vec<TagToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut text_start = 0usize;
    let mut text_buf = String::new();
    let mut i = 0usize;

    while i < chars.len() {
        if chars[i] == '<' {
            if let Some((kind, consumed)) = match_tag(&chars[i..], vocab) {
                if !text_buf.is_empty() {
                    tokens.push(TagToken {
                        kind: TokenKind::Text(std::mem::take(&mut text_buf)),
                        offset: text_start,
                    });
                }
                tokens.push(TagToken { kind, offset: i });
                i += consumed;
                text_start = i;
                continue;
            }
        }
        if text_buf.is_empty() {
            text_start = i;
        }
        text_buf.push(chars[i]);
        i += 1;
    }
    if !text_buf.is_empty() {
        tokens.push(TagToken {
            kind: TokenKind::Text(text_buf),
            offset: text_start,
        });
    }
    tokens
}

/// Try to read `<name>` or `</name>` at the start of `chars`.
/// Returns the token kind and the number of characters consumed.
fn match_tag(chars: &[char], vocab: &TagVocabulary) -> Option<(TokenKind, usize)> {
    debug_assert_eq!(chars[0], '<');
    let mut j = 1;
    let closing = chars.get(j) == Some(&'/');
    if closing {
        j += 1;
    }
    let name_start = j;
    while j < chars.len()
        && j - name_start <= vocab.max_len
        && chars[j].is_ascii_lowercase()
    {
        j += 1;
    }
    if j == name_start || chars.get(j) != Some(&'>') {
        return None;
    }
    let name: String = chars[name_start..j].iter().collect();
    if !vocab.contains(&name) {
        return None;
    }
    let kind = if closing {
        TokenKind::Close(name)
    } else {
        TokenKind::Open(name)
    };
    Some((kind, j + 1))
}

/// Stack-match a token stream into pair and malformed counts plus
/// annotation spans.
///
/// Open pushes its name. A close matching the stack top pops it and
/// records one pair; a close that does not match the top (or arrives on
/// an empty stack) counts as malformed and is discarded without touching
/// the stack. Every name still open at the end also counts as malformed.
/// Annotation offsets refer to the tag-stripped text, in characters,
/// recorded in the order pairs complete.
pub fn audit(tokens: &[TagToken]) -> TagAudit {
    // (name, stripped char offset, stripped byte offset) per open tag
    let mut stack: Vec<(String, usize, usize)> = Vec::new();
    let mut stripped = String::new();
    let mut stripped_chars = 0usize;
    let mut result = TagAudit::default();

    for token in tokens {
        match &token.kind {
            TokenKind::Text(content) => {
                stripped.push_str(content);
                stripped_chars += content.chars().count();
            }
            TokenKind::Open(name) => {
                stack.push((name.clone(), stripped_chars, stripped.len()));
            }
            TokenKind::Close(name) => match stack.last() {
                Some((top, start_chars, start_bytes)) if top == name => {
                    result.n_pairs += 1;
                    *result.per_tag_pairs.entry(name.clone()).or_insert(0) += 1;
                    result.annotations.push(Annotation {
                        tag: name.clone(),
                        text: stripped[*start_bytes..].to_string(),
                        start: *start_chars,
                        end: stripped_chars,
                    });
                    stack.pop();
                }
                _ => {
                    result.n_malformed += 1;
                }
            },
        }
    }
    result.n_malformed += stack.len() as u64;
    result
}

/// Well-formedness ratio: pairs over all tag events.
///
/// Vacuously 1.0 when the text contains no tag events at all.
pub fn twf(audit: &TagAudit) -> f64 {
    let events = audit.n_pairs + audit.n_malformed;
    if events == 0 {
        1.0
    } else {
        audit.n_pairs as f64 / events as f64
    }
}

/// Number of well-formed tag pairs. Malformed fragments do not count,
/// so they cannot inflate the selection metric.
pub fn n_tags(audit: &TagAudit) -> u64 {
    audit.n_pairs
}

/// Remove every vocabulary tag token and concatenate the remaining text.
pub fn strip_tags(text: &str, vocab: &TagVocabulary) -> String {
    tokenize(text, vocab)
        .into_iter()
        .filter_map(|t| match t.kind {
            TokenKind::Text(content) => Some(content),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> TagVocabulary {
        TagVocabulary::default()
    }

    #[test]
    fn default_vocabulary_matches_prompt_tags() {
        assert_eq!(
            vocab().names(),
            &["location", "entity", "event", "organization", "date"]
        );
    }

    #[test]
    fn vocabulary_rejects_bad_names() {
        assert_eq!(
            TagVocabulary::new(["ok", "Bad"]).unwrap_err(),
            VocabularyError::InvalidName("Bad".into())
        );
        assert_eq!(
            TagVocabulary::new(["a", "a"]).unwrap_err(),
            VocabularyError::Duplicate("a".into())
        );
        assert_eq!(
            TagVocabulary::new(Vec::<String>::new()).unwrap_err(),
            VocabularyError::Empty
        );
        assert!(TagVocabulary::new(["tagone"]).is_ok());
    }

    #[test]
    fn tokenize_basic_pair() {
        let tokens = tokenize("<location>Iran</location>", &vocab());
        assert_eq!(
            tokens,
            vec![
                TagToken { kind: TokenKind::Open("location".into()), offset: 0 },
                TagToken { kind: TokenKind::Text("Iran".into()), offset: 10 },
                TagToken { kind: TokenKind::Close("location".into()), offset: 14 },
            ]
        );
    }

    #[test]
    fn tokenize_unknown_markup_is_text() {
        let tokens = tokenize("a < b and <misc>x</misc>", &vocab());
        assert_eq!(tokens.len(), 1);
        assert_eq!(
            tokens[0].kind,
            TokenKind::Text("a < b and <misc>x</misc>".into())
        );
    }

    #[test]
    fn tokenize_unclosed_tag() {
        let tokens = tokenize("<date>1946", &vocab());
        assert_eq!(
            tokens,
            vec![
                TagToken { kind: TokenKind::Open("date".into()), offset: 0 },
                TagToken { kind: TokenKind::Text("1946".into()), offset: 6 },
            ]
        );
    }

    #[test]
    fn tokenize_rejects_attributes_whitespace_and_case() {
        for text in [
            "<location foo=\"1\">",
            "< location>",
            "<location >",
            "<Location>",
            "<LOCATION>",
            "</ location>",
        ] {
            let tokens = tokenize(text, &vocab());
            assert_eq!(tokens.len(), 1, "{text:?} should be plain text");
            assert!(matches!(tokens[0].kind, TokenKind::Text(_)));
        }
    }

    #[test]
    fn tokenize_is_lossless_on_dense_input() {
        let text = "<<date><date>>1946</date><entity</entity>";
        let tokens = tokenize(text, &vocab());
        let rebuilt: String = tokens.iter().map(|t| t.source_text()).collect();
        assert_eq!(rebuilt, text);
    }

    #[test]
    fn audit_single_pair() {
        let a = audit(&tokenize("<location>Paris</location>", &vocab()));
        assert_eq!(a.n_pairs, 1);
        assert_eq!(a.n_malformed, 0);
        assert_eq!(a.per_tag_pairs.get("location"), Some(&1));
        assert_eq!(
            a.annotations,
            vec![Annotation { tag: "location".into(), text: "Paris".into(), start: 0, end: 5 }]
        );
    }

    #[test]
    fn audit_interleaved_tags() {
        // <entity><date></entity></date>:
        //   </entity> does not match top "date"  -> malformed, discarded
        //   </date> matches top                  -> pair
        //   <entity> never closed                -> malformed
        let a = audit(&tokenize("<entity><date></entity></date>", &vocab()));
        assert_eq!(a.n_pairs, 1);
        assert_eq!(a.n_malformed, 2);
        assert_eq!(a.per_tag_pairs.get("date"), Some(&1));
        assert!((twf(&a) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(n_tags(&a), 1);
    }

    #[test]
    fn audit_empty_input() {
        let a = audit(&[]);
        assert_eq!(a.n_pairs, 0);
        assert_eq!(a.n_malformed, 0);
        assert_eq!(twf(&a), 1.0);
        assert_eq!(n_tags(&a), 0);
    }

    #[test]
    fn audit_unmatched_closer_on_empty_stack() {
        let a = audit(&tokenize("</date>1946", &vocab()));
        assert_eq!(a.n_pairs, 0);
        assert_eq!(a.n_malformed, 1);
    }

    #[test]
    fn audit_nested_pairs_record_both_spans() {
        let a = audit(&tokenize("<entity><date>1946</date> x</entity>", &vocab()));
        assert_eq!(a.n_pairs, 2);
        assert_eq!(a.n_malformed, 0);
        assert_eq!(twf(&a), 1.0);
        // inner pair completes first
        assert_eq!(
            a.annotations,
            vec![
                Annotation { tag: "date".into(), text: "1946".into(), start: 0, end: 4 },
                Annotation { tag: "entity".into(), text: "1946 x".into(), start: 0, end: 6 },
            ]
        );
    }

    #[test]
    fn audit_offsets_are_characters_not_bytes() {
        let a = audit(&tokenize("às <date>1946</date>", &vocab()));
        assert_eq!(
            a.annotations,
            vec![Annotation { tag: "date".into(), text: "1946".into(), start: 3, end: 7 }]
        );
    }

    #[test]
    fn twf_fully_matched_is_one() {
        let a = audit(&tokenize("<date>1946</date><date>1947</date>", &vocab()));
        assert_eq!(a.n_pairs, 2);
        assert_eq!(twf(&a), 1.0);
    }

    #[test]
    fn n_tags_sums_pairs() {
        let mut a = TagAudit::default();
        a.per_tag_pairs.insert("location".into(), 2);
        a.per_tag_pairs.insert("date".into(), 1);
        a.n_pairs = 3;
        assert_eq!(n_tags(&a), 3);
        assert_eq!(a.per_tag_pairs.values().sum::<u64>(), a.n_pairs);
    }

    #[test]
    fn strip_tags_cases() {
        let v = vocab();
        assert_eq!(strip_tags("<location>Iran</location>", &v), "Iran");
        assert_eq!(strip_tags("plain text", &v), "plain text");
        assert_eq!(strip_tags("<date>1946", &v), "1946");
        assert_eq!(strip_tags("", &v), "");
    }

    #[test]
    fn strip_tags_idempotent_on_tagged_output() {
        let v = vocab();
        let text = "In <date>1946</date> the <organization>Council</organization> met.";
        let once = strip_tags(text, &v);
        assert_eq!(strip_tags(&once, &v), once);
    }

    /// Reference audit: same pairing rule, written as a direct simulation
    /// over token kinds only.
    fn reference_counts(tokens: &[TagToken]) -> (u64, u64) {
        let mut stack: Vec<&str> = Vec::new();
        let mut pairs = 0u64;
        let mut malformed = 0u64;
        for t in tokens {
            match &t.kind {
                TokenKind::Open(n) => stack.push(n),
                TokenKind::Close(n) => {
                    if stack.last().map(|s| *s == n.as_str()).unwrap_or(false) {
                        stack.pop();
                        pairs += 1;
                    } else {
                        malformed += 1;
                    }
                }
                TokenKind::Text(_) => {}
            }
        }
        (pairs, malformed + stack.len() as u64)
    }

    fn tag_soup() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            prop::sample::select(DEFAULT_TAGS.to_vec()).prop_map(|t| format!("<{t}>")),
            prop::sample::select(DEFAULT_TAGS.to_vec()).prop_map(|t| format!("</{t}>")),
            "[a-d<>/ ]{0,6}".prop_map(|s| s),
            Just("<misc>".to_string()),
            Just("<dat".to_string()),
        ];
        prop::collection::vec(piece, 0..24).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn tokenize_lossless(text in ".{0,200}") {
            let tokens = tokenize(&text, &vocab());
            let rebuilt: String = tokens.iter().map(|t| t.source_text()).collect();
            prop_assert_eq!(rebuilt, text);
        }

        #[test]
        fn tokenize_lossless_on_tag_soup(text in tag_soup()) {
            let tokens = tokenize(&text, &vocab());
            let rebuilt: String = tokens.iter().map(|t| t.source_text()).collect();
            prop_assert_eq!(rebuilt, text);
        }

        #[test]
        fn audit_matches_reference(text in tag_soup()) {
            let tokens = tokenize(&text, &vocab());
            let a = audit(&tokens);
            let (pairs, malformed) = reference_counts(&tokens);
            prop_assert_eq!(a.n_pairs, pairs);
            prop_assert_eq!(a.n_malformed, malformed);
            prop_assert_eq!(a.per_tag_pairs.values().sum::<u64>(), a.n_pairs);
            prop_assert_eq!(a.annotations.len() as u64, a.n_pairs);
            let ratio = twf(&a);
            prop_assert!((0.0..=1.0).contains(&ratio));
            prop_assert_eq!(ratio == 1.0, a.n_malformed == 0);
        }

        #[test]
        fn untagged_text_is_untouched(text in "[^<]{0,120}") {
            let v = vocab();
            let a = audit(&tokenize(&text, &v));
            prop_assert_eq!(a.n_pairs, 0);
            prop_assert_eq!(a.n_malformed, 0);
            prop_assert_eq!(strip_tags(&text, &v), text);
        }

        #[test]
        fn annotations_index_into_stripped_text(text in tag_soup()) {
            let v = vocab();
            let stripped = strip_tags(&text, &v);
            let stripped_chars: Vec<char> = stripped.chars().collect();
            for ann in audit(&tokenize(&text, &v)).annotations {
                prop_assert!(ann.start <= ann.end);
                prop_assert!(ann.end <= stripped_chars.len());
                let sub: String = stripped_chars[ann.start..ann.end].iter().collect();
                prop_assert_eq!(&sub, &ann.text);
            }
        }
    }
}

//! Corpus ingestion, vocabulary construction, tokenization, and batching.
//!
//! The tokenizer is deliberately simple and fully documented:
//!   1. Text is cut at whitespace; every non-alphanumeric, non-underscore
//!      character becomes its own single-character token.
//!   2. Word runs are split at underscores (which are dropped) and at
//!      camelCase boundaries: before an uppercase letter that follows a
//!      lowercase letter or digit, and before the last uppercase letter of an
//!      uppercase run that is followed by a lowercase letter (`getUserName`
//!      -> `get user name`, `HTMLParser` -> `html parser`).
//!   3. Everything is lowercased.
//!
//! Sequences are wrapped in [CLS]/[SEP], truncated so the true length
//! (including both markers) never exceeds `max_len`, and padded with [PAD].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

pub const RESERVED_TOKENS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

/// One <code, description> pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub code_text: String,
    pub doc_text: String,
}

/// Loads a JSON Lines corpus: one object per line with string fields
/// `code` and `doc`, optional `id` (defaults to the zero-based line number).
/// Blank lines are skipped; unknown fields are ignored.
pub fn load_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    let mut seen = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let human_line = lineno + 1;
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!("{}:{}: malformed JSON: {}", path.display(), human_line, e))
        })?;
        let doc = document_from_value(&value, lineno)
            .map_err(|msg| Error::data(format!("{}:{}: {}", path.display(), human_line, msg)))?;
        if let Some(prev) = seen.insert(doc.id.clone(), human_line) {
            return Err(Error::data(format!(
                "{}:{}: duplicate id {:?} (first seen on line {})",
                path.display(),
                human_line,
                doc.id,
                prev
            )));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn document_from_value(value: &serde_json::Value, lineno: usize) -> std::result::Result<Document, String> {
    let obj = value.as_object().ok_or("expected a JSON object")?;
    let field = |name: &str| -> std::result::Result<String, String> {
        let v = obj
            .get(name)
            .ok_or_else(|| format!("missing required field {:?}", name))?;
        let s = v
            .as_str()
            .ok_or_else(|| format!("field {:?} must be a string", name))?;
        if s.trim().is_empty() {
            return Err(format!("field {:?} is empty", name));
        }
        Ok(s.to_string())
    };
    let code_text = field("code")?;
    let doc_text = field("doc")?;
    let id = match obj.get("id") {
        Some(v) => {
            let s = v.as_str().ok_or("field \"id\" must be a string")?;
            if s.trim().is_empty() {
                return Err("field \"id\" is empty".to_string());
            }
            s.to_string()
        }
        None => lineno.to_string(),
    };
    Ok(Document { id, code_text, doc_text })
}

/// Token/id bijection with fixed reserved entries [PAD],[UNK],[CLS],[SEP]
/// at ids 0..=3.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if token_to_id.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::data(format!("duplicate vocabulary token {:?}", tok)));
            }
        }
        for (i, reserved) in RESERVED_TOKENS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*reserved) {
                return Err(Error::data(format!(
                    "reserved token {:?} missing or out of place at id {}",
                    reserved, i
                )));
            }
        }
        Ok(Vocabulary { token_to_id, id_to_token: tokens })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Writes the vocabulary file: UTF-8, one token per line, line number = id.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for tok in &self.id_to_token {
            out.push_str(tok);
            out.push('\n');
        }
        let mut file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let reader = BufReader::new(file);
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            tokens.push(line);
        }
        // A trailing newline produces no extra entry because `lines` drops it.
        Self::from_tokens(tokens)
            .map_err(|e| Error::data(format!("{}: {}", path.display(), e)))
    }
}

/// Builds a vocabulary from both texts of every document. Tokens with
/// frequency below `min_count` are dropped; the rest are ranked by descending
/// frequency with lexicographic tie-break and capped so the total entry count
/// (reserved tokens included) does not exceed `max_size`.
pub fn build_vocab(docs: &[Document], min_count: usize, max_size: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::data("empty corpus".to_string()));
    }
    if min_count == 0 {
        return Err(Error::config("min_count must be at least 1".to_string()));
    }
    if max_size < RESERVED_TOKENS.len() + 1 {
        return Err(Error::config(format!(
            "max_size must be at least {} (reserved tokens plus one)",
            RESERVED_TOKENS.len() + 1
        )));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        for text in [&doc.code_text, &doc.doc_text] {
            for tok in split_text(text) {
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> =
        counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size - RESERVED_TOKENS.len());

    let mut tokens: Vec<String> = RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(ranked.into_iter().map(|(t, _)| t));
    Vocabulary::from_tokens(tokens)
}

/// Splits raw text into surface tokens per the module rules. No vocabulary
/// lookup, no markers.
pub fn split_text(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            flush_word(&mut word, &mut out);
            if !ch.is_whitespace() {
                out.push(ch.to_lowercase().collect());
            }
        }
    }
    flush_word(&mut word, &mut out);
    out
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    for piece in word.split('_') {
        for part in split_camel(piece) {
            out.push(part.to_lowercase());
        }
    }
    word.clear();
}

// Split boundaries: lower/digit -> upper, and before the final upper of an
// uppercase run followed by lower ("HTMLParser" -> "HTML" + "Parser").
fn split_camel(piece: &str) -> Vec<String> {
    let chars: Vec<char> = piece.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = chars[i - 1];
        let cur = chars[i];
        let lower_to_upper = cur.is_uppercase() && (prev.is_lowercase() || prev.is_numeric());
        let run_end = cur.is_uppercase()
            && prev.is_uppercase()
            && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
        if lower_to_upper || run_end {
            parts.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    if start < chars.len() {
        parts.push(chars[start..].iter().collect());
    }
    parts
}

/// Fixed-length token id sequence with validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub true_length: usize,
    pub mask: Vec<bool>,
}

impl TokenSequence {
    pub fn padded_len(&self) -> usize {
        self.ids.len()
    }
}

/// Tokenizes `text` against `vocab`: split, lowercase, map unknowns to [UNK],
/// wrap with [CLS]/[SEP], truncate to `max_len` (markers count), pad with
/// [PAD].
pub fn tokenize(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len < 3 {
        return Err(Error::config(format!(
            "max_len must be at least 3 ([CLS], one token, [SEP]); got {}",
            max_len
        )));
    }
    let surface = split_text(text);
    if surface.is_empty() {
        return Err(Error::data("text is empty after tokenization".to_string()));
    }
    let keep = surface.len().min(max_len - 2);
    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    for tok in &surface[..keep] {
        ids.push(vocab.id_of(tok).unwrap_or(UNK_ID));
    }
    ids.push(SEP_ID);
    let true_length = ids.len();
    ids.resize(max_len, PAD_ID);
    let mask = (0..max_len).map(|i| i < true_length).collect();
    Ok(TokenSequence { ids, true_length, mask })
}

/// Batching policy: shuffle with the supplied stream, then cut into
/// `batch_size` chunks. Training drops the final short batch (in-batch
/// negatives need a full batch); evaluation keeps it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    Training,
    Evaluation,
}

/// Produces batches of indices into `pairs` (any slice; only the length is
/// used). Identical RNG state yields identical batch composition.
pub fn make_batches<T>(
    pairs: &[T],
    batch_size: usize,
    mode: BatchMode,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<usize>>> {
    if mode == BatchMode::Training && batch_size < 2 {
        return Err(Error::config(format!(
            "training batch_size must be at least 2 for in-batch negatives; got {}",
            batch_size
        )));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size must be positive".to_string()));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.shuffle(&mut order);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    if mode == BatchMode::Training {
        batches.retain(|b| b.len() == batch_size);
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn write_corpus(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{}", line).unwrap();
        }
        f.flush().unwrap();
        f
    }

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: i.to_string(),
                code_text: t.to_string(),
                doc_text: t.to_string(),
            })
            .collect()
    }

    #[test]
    fn load_well_formed_line() {
        let f = write_corpus(&[r#"{"id":"a","code":"def f(): pass","doc":"do nothing"}"#]);
        let docs = load_jsonl(f.path()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "a");
        assert_eq!(docs[0].code_text, "def f(): pass");
        assert_eq!(docs[0].doc_text, "do nothing");
    }

    #[test]
    fn load_empty_file() {
        let f = write_corpus(&[]);
        assert!(load_jsonl(f.path()).unwrap().is_empty());
    }

    #[test]
    fn load_missing_doc_field_names_line() {
        let f = write_corpus(&[r#"{"id":"a","code":"x","doc":"y"}"#, r#"{"code":"x"}"#]);
        let err = load_jsonl(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "missing line number in {:?}", msg);
        assert!(msg.contains("doc"), "missing field name in {:?}", msg);
    }

    #[test]
    fn load_malformed_json_names_line() {
        let f = write_corpus(&[r#"{"id":"a","code":"x","doc":"y"}"#, "{not json"]);
        let err = load_jsonl(f.path()).unwrap_err();
        assert!(err.to_string().contains(":2:"));
    }

    #[test]
    fn load_default_id_is_line_number() {
        let f = write_corpus(&[r#"{"code":"x","doc":"y"}"#, "", r#"{"code":"a","doc":"b"}"#]);
        let docs = load_jsonl(f.path()).unwrap();
        assert_eq!(docs[0].id, "0");
        assert_eq!(docs[1].id, "2"); // blank line skipped but still counted
    }

    #[test]
    fn load_duplicate_id_errors() {
        let f = write_corpus(&[
            r#"{"id":"a","code":"x","doc":"y"}"#,
            r#"{"id":"a","code":"p","doc":"q"}"#,
        ]);
        assert!(load_jsonl(f.path()).is_err());
    }

    // Corpus holding exactly the texts "a b" and "a": a=2, b=1.
    fn ab_corpus() -> Vec<Document> {
        vec![Document {
            id: "0".to_string(),
            code_text: "a b".to_string(),
            doc_text: "a".to_string(),
        }]
    }

    #[test]
    fn vocab_min_count_one() {
        let v = build_vocab(&ab_corpus(), 1, 100).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.id_of("a").is_some());
        assert!(v.id_of("b").is_some());
    }

    #[test]
    fn vocab_min_count_two_drops_rare() {
        let v = build_vocab(&ab_corpus(), 2, 100).unwrap();
        assert!(v.id_of("a").is_some());
        assert!(v.id_of("b").is_none());
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn vocab_max_size_keeps_highest_frequency() {
        // Ten distinct tokens, "t0" most frequent, descending from there.
        let mut texts = Vec::new();
        for i in 0..10usize {
            for _ in 0..(10 - i) {
                texts.push(format!("t{}", i));
            }
        }
        let joined = texts.join(" ");
        let v = build_vocab(&docs(&[&joined]), 1, 5).unwrap();
        assert_eq!(v.len(), 5);
        assert!(v.id_of("t0").is_some());
        assert!(v.id_of("t1").is_none());
    }

    #[test]
    fn vocab_empty_corpus_errors() {
        assert!(build_vocab(&[], 1, 10).is_err());
    }

    #[test]
    fn camel_case_splitting() {
        assert_eq!(split_text("getUserName"), vec!["get", "user", "name"]);
        assert_eq!(split_text("HTMLParser"), vec!["html", "parser"]);
        assert_eq!(split_text("parseHTML"), vec!["parse", "html"]);
    }

    #[test]
    fn underscore_and_punctuation_splitting() {
        assert_eq!(split_text("foo_bar(x)"), vec!["foo", "bar", "(", "x", ")"]);
    }

    #[test]
    fn tokenize_wraps_with_markers() {
        let v = build_vocab(&docs(&["get user name"]), 1, 100).unwrap();
        let seq = tokenize("getUserName", &v, 8).unwrap();
        assert_eq!(seq.true_length, 5);
        assert_eq!(seq.ids[0], CLS_ID);
        assert_eq!(seq.ids[4], SEP_ID);
        assert_eq!(seq.ids[5..], [PAD_ID, PAD_ID, PAD_ID]);
        assert_eq!(
            v.token_of(seq.ids[1]).unwrap(),
            "get"
        );
    }

    #[test]
    fn tokenize_unknown_maps_to_unk() {
        let v = build_vocab(&docs(&["alpha"]), 1, 100).unwrap();
        let seq = tokenize("alpha omega", &v, 8).unwrap();
        assert_eq!(seq.ids[1], v.id_of("alpha").unwrap());
        assert_eq!(seq.ids[2], UNK_ID);
    }

    #[test]
    fn tokenize_truncates_to_max_len() {
        let text = (0..300).map(|i| format!("w{}", i)).collect::<Vec<_>>().join(" ");
        let v = build_vocab(&docs(&[&text]), 1, 10_000).unwrap();
        let seq = tokenize(&text, &v, 256).unwrap();
        assert_eq!(seq.true_length, 256);
        assert_eq!(seq.padded_len(), 256);
        assert_eq!(seq.ids[255], SEP_ID);
        assert_eq!(seq.ids[0], CLS_ID);
    }

    #[test]
    fn tokenize_rejects_tiny_max_len_and_empty_text() {
        let v = build_vocab(&docs(&["a"]), 1, 100).unwrap();
        assert!(tokenize("a", &v, 2).is_err());
        assert!(tokenize("   ", &v, 8).is_err());
    }

    #[test]
    fn batches_drop_remainder_in_training() {
        let pairs: Vec<u32> = (0..10).collect();
        let mut rng = SeededRng::stream(5, "test.batch");
        let batches = make_batches(&pairs, 4, BatchMode::Training, &mut rng).unwrap();
        assert_eq!(batches.len(), 2);
        assert!(batches.iter().all(|b| b.len() == 4));
    }

    #[test]
    fn batches_keep_remainder_in_evaluation() {
        let pairs: Vec<u32> = (0..10).collect();
        let mut rng = SeededRng::stream(5, "test.batch");
        let batches = make_batches(&pairs, 4, BatchMode::Evaluation, &mut rng).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }

    #[test]
    fn batches_deterministic_for_same_seed() {
        let pairs: Vec<u32> = (0..23).collect();
        let mut a = SeededRng::stream(9, "test.batch");
        let mut b = SeededRng::stream(9, "test.batch");
        assert_eq!(
            make_batches(&pairs, 4, BatchMode::Training, &mut a).unwrap(),
            make_batches(&pairs, 4, BatchMode::Training, &mut b).unwrap()
        );
    }

    #[test]
    fn batches_reject_small_training_batch() {
        let pairs: Vec<u32> = (0..10).collect();
        let mut rng = SeededRng::stream(5, "test.batch");
        assert!(make_batches(&pairs, 1, BatchMode::Training, &mut rng).is_err());
    }

    #[test]
    fn vocab_round_trips_through_file() {
        let v = build_vocab(&docs(&["some tokens appear_here camelCase (x)"]), 1, 100).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        v.save(f.path()).unwrap();
        let loaded = Vocabulary::load(f.path()).unwrap();
        assert_eq!(v, loaded);
        let bytes_a = std::fs::read(f.path()).unwrap();
        loaded.save(f.path()).unwrap();
        let bytes_b = std::fs::read(f.path()).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    proptest! {
        #[test]
        fn tokenize_respects_sequence_invariants(
            words in proptest::collection::vec("[a-zA-Z_()0-9]{1,8}", 1..40),
            max_len in 3usize..32,
        ) {
            let text = words.join(" ");
            let all = docs(&[text.as_str()]);
            let v = build_vocab(&all, 1, 10_000).unwrap();
            if let Ok(seq) = tokenize(&text, &v, max_len) {
                prop_assert_eq!(seq.padded_len(), max_len);
                prop_assert!(seq.true_length <= max_len);
                prop_assert_eq!(seq.ids[0], CLS_ID);
                prop_assert_eq!(seq.ids[seq.true_length - 1], SEP_ID);
                for i in 0..max_len {
                    prop_assert_eq!(seq.mask[i], i < seq.true_length);
                    if i >= seq.true_length {
                        prop_assert_eq!(seq.ids[i], PAD_ID);
                    }
                }
            }
        }

        #[test]
        fn tokenization_idempotent_on_joined_tokens(
            words in proptest::collection::vec("[a-zA-Z_]{1,10}", 1..20),
        ) {
            let text = words.join(" ");
            let once = split_text(&text);
            let rejoined = once.join(" ");
            let twice = split_text(&rejoined);
            prop_assert_eq!(once, twice);
        }
    }
}

//! Document ingestion, token normalisation, vocabulary and time slicing.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Optional surface-form to lemma lookup applied after lower-casing.
pub type LemmaTable = HashMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub category: String,
    pub time_index: usize,
}

/// One line of the JSONL corpus format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub category: String,
    pub time_index: usize,
}

impl RawDocument {
    pub fn normalize(self, lemmas: Option<&LemmaTable>) -> Document {
        Document {
            tokens: normalize(&self.text, lemmas),
            id: self.id,
            category: self.category,
            time_index: self.time_index,
        }
    }
}

impl From<&Document> for RawDocument {
    fn from(doc: &Document) -> Self {
        RawDocument {
            id: doc.id.clone(),
            text: doc.tokens.join(" "),
            category: doc.category.clone(),
            time_index: doc.time_index,
        }
    }
}

/// Lower-case, split on whitespace, strip non-alphanumeric characters from
/// both ends of every token, drop empty and all-digit tokens, then map each
/// token through the lemma table when it has an entry.
pub fn normalize(raw_text: &str, lemmas: Option<&LemmaTable>) -> Vec<String> {
    raw_text
        .split_whitespace()
        .filter_map(|chunk| {
            let lowered = chunk.to_lowercase();
            let token = lowered.trim_matches(|c: char| !c.is_alphanumeric());
            if token.is_empty() || token.chars().all(char::is_numeric) {
                return None;
            }
            let token = match lemmas.and_then(|table| table.get(token)) {
                Some(lemma) => lemma.clone(),
                None => token.to_string(),
            };
            Some(token)
        })
        .collect()
}

/// Reads a `surface<TAB>lemma` file. Both columns are lower-cased so the
/// table composes with [`normalize`].
pub fn read_lemma_table<R: BufRead>(reader: R) -> Result<LemmaTable> {
    let mut table = LemmaTable::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(surface), Some(lemma), None) if !surface.is_empty() && !lemma.is_empty() => {
                table.insert(surface.to_lowercase(), lemma.to_lowercase());
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected `surface<TAB>lemma`".into(),
                })
            }
        }
    }
    Ok(table)
}

pub fn read_jsonl<R: BufRead>(reader: R, lemmas: Option<&LemmaTable>) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        docs.push(raw.normalize(lemmas));
    }
    Ok(docs)
}

pub fn write_jsonl<W: Write>(mut writer: W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, &RawDocument::from(doc))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Dense bijection between words and `0..len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabMap {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl VocabMap {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Result<Self> {
        let words: Vec<String> = words.into_iter().collect();
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(invalid(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(VocabMap { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// One word per line; the line number is the index.
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        for w in &self.words {
            writeln!(writer, "{w}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let words = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
        Self::from_words(words)
    }
}

/// Keeps the `cap` most frequent words. Equal counts order lexicographically.
pub fn build_vocabulary<'a, I>(docs: I, cap: usize) -> Result<VocabMap>
where
    I: IntoIterator<Item = &'a Document>,
{
    if cap == 0 {
        return Err(invalid("vocabulary cap must be at least 1"));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    VocabMap::from_words(ranked.into_iter().map(|(w, _)| w.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlicedCorpus {
    pub slices: Vec<Vec<Document>>,
    pub vocab: VocabMap,
    pub granularity: String,
}

impl TimeSlicedCorpus {
    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn n_documents(&self) -> usize {
        self.slices.iter().map(Vec::len).sum()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.slices.iter().flatten()
    }
}

/// Groups documents by `time_index`, keeping input order within a slice.
pub fn slice_by_time(docs: Vec<Document>, n_slices: usize, vocab: VocabMap) -> Result<TimeSlicedCorpus> {
    let mut slices = vec![Vec::new(); n_slices];
    for doc in docs {
        if doc.time_index >= n_slices {
            return Err(Error::TimeIndexOutOfRange {
                id: doc.id,
                time_index: doc.time_index,
                n_slices,
            });
        }
        slices[doc.time_index].push(doc);
    }
    Ok(TimeSlicedCorpus {
        slices,
        vocab,
        granularity: "slice".to_string(),
    })
}

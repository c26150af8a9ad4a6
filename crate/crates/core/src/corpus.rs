//! Line-structured corpus: chapters, verses and lines, with optional
//! precomputed word analyses kept for display next to the text.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub type LineId = u64;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("record {index}: {message}")]
    Parse { index: usize, message: String },
    #[error("duplicate line id {0}")]
    DuplicateLineId(LineId),
    #[error("duplicate position {chapter:?} verse {verse_no} line {line_in_verse}")]
    DuplicatePosition {
        chapter: String,
        verse_no: u32,
        line_in_verse: u32,
    },
    #[error("invalid verse range {from}..={to}")]
    InvalidRange { from: u32, to: u32 },
}

/// Display-only morphological analysis of one word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordAnalysis {
    pub word: String,
    pub root: String,
    pub gender: String,
    #[serde(rename = "case")]
    pub case_no: String,
    pub number: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub line_id: LineId,
    pub chapter: String,
    pub verse_no: u32,
    pub line_in_verse: u32,
    pub text_devanagari: String,
    pub text_iast: String,
    pub split_text: Option<String>,
    pub analyses: Option<Vec<WordAnalysis>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub chapters: usize,
    pub verses: usize,
    pub lines: usize,
}

type Position = (String, u32, u32);

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    lines: BTreeMap<Position, Line>,
    by_id: HashMap<LineId, Position>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Imports a JSON Lines stream. The import is atomic: on any error the
    /// corpus is left unchanged.
    pub fn import(&mut self, source: &str) -> Result<CorpusStats, CorpusError> {
        let mut staged = Vec::new();
        for (index, raw) in source.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| CorpusError::Parse {
                index,
                message: e.to_string(),
            })?;
            staged.push(line);
        }
        self.insert_all(staged)?;
        Ok(self.stats())
    }

    pub fn insert_all(&mut self, lines: Vec<Line>) -> Result<(), CorpusError> {
        let mut ids = BTreeSet::new();
        let mut positions = BTreeSet::new();
        for line in &lines {
            if self.by_id.contains_key(&line.line_id) || !ids.insert(line.line_id) {
                return Err(CorpusError::DuplicateLineId(line.line_id));
            }
            let pos = position(line);
            if self.lines.contains_key(&pos) || !positions.insert(pos.clone()) {
                return Err(CorpusError::DuplicatePosition {
                    chapter: pos.0,
                    verse_no: pos.1,
                    line_in_verse: pos.2,
                });
            }
        }
        for line in lines {
            let pos = position(&line);
            self.by_id.insert(line.line_id, pos.clone());
            self.lines.insert(pos, line);
        }
        Ok(())
    }

    /// Serializes every line, in corpus order, as JSON Lines.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for line in self.lines.values() {
            out.push_str(&serde_json::to_string(line).expect("line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn stats(&self) -> CorpusStats {
        let chapters: BTreeSet<&str> = self.lines.keys().map(|(c, _, _)| c.as_str()).collect();
        let verses: BTreeSet<(&str, u32)> =
            self.lines.keys().map(|(c, v, _)| (c.as_str(), *v)).collect();
        CorpusStats {
            chapters: chapters.len(),
            verses: verses.len(),
            lines: self.lines.len(),
        }
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.by_id.get(&id).and_then(|pos| self.lines.get(pos))
    }

    pub fn contains(&self, id: LineId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn get_lines(
        &self,
        chapter: &str,
        from_verse: u32,
        to_verse: u32,
    ) -> Result<Vec<&Line>, CorpusError> {
        if from_verse > to_verse {
            return Err(CorpusError::InvalidRange {
                from: from_verse,
                to: to_verse,
            });
        }
        let lo = (chapter.to_string(), from_verse, 0);
        let hi = (chapter.to_string(), to_verse, u32::MAX);
        Ok(self.lines.range(lo..=hi).map(|(_, l)| l).collect())
    }

    pub fn lines(&self) -> impl Iterator<Item = &Line> {
        self.lines.values()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

fn position(line: &Line) -> Position {
    (line.chapter.clone(), line.verse_no, line.line_in_verse)
}

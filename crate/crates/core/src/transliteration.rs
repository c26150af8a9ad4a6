//! Conversion among Devanagari and six romanization schemes, and the global
//! prefix index that backs autocomplete.
//!
//! Every scheme is described by one table, `data/schemes.tsv`, pairing each
//! scheme's spelling with an SLP1 phoneme. Text is decoded into the phoneme
//! stream by longest-match tokenization and re-encoded in the target scheme,
//! so no scheme-to-scheme tables exist.
//!
//! Romanized spellings are not uniquely decodable for every phoneme sequence:
//! `kh` is both the aspirate and `k` followed by `h`. The sequences where this
//! happens are listed in [`is_ambiguous_pair`]; text free of them round-trips
//! losslessly. The table is checked against that list when it is first loaded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

pub const SCHEME_TABLE: &str = include_str!("../data/schemes.tsv");

/// Minimum query length, in user-perceived characters.
pub const MIN_PREFIX: usize = 3;
pub const SUGGEST_LIMIT: usize = 50;

const VIRAMA: char = '\u{094D}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    Devanagari,
    Iast,
    Hk,
    Itrans,
    Slp1,
    Velthuis,
    Wx,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Devanagari,
        Scheme::Iast,
        Scheme::Hk,
        Scheme::Itrans,
        Scheme::Slp1,
        Scheme::Velthuis,
        Scheme::Wx,
    ];

    pub const ROMAN: [Scheme; 6] = [
        Scheme::Iast,
        Scheme::Hk,
        Scheme::Itrans,
        Scheme::Slp1,
        Scheme::Velthuis,
        Scheme::Wx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Devanagari => "devanagari",
            Scheme::Iast => "iast",
            Scheme::Hk => "hk",
            Scheme::Itrans => "itrans",
            Scheme::Slp1 => "slp1",
            Scheme::Velthuis => "velthuis",
            Scheme::Wx => "wx",
        }
    }

    // position in the romanized columns of the table
    fn column(self) -> Option<usize> {
        match self {
            Scheme::Devanagari => None,
            Scheme::Iast => Some(0),
            Scheme::Hk => Some(1),
            Scheme::Itrans => Some(2),
            Scheme::Velthuis => Some(3),
            Scheme::Wx => Some(4),
            Scheme::Slp1 => Some(5),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown transliteration scheme {0:?}")]
pub struct UnknownScheme(pub String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Vowel,
    Consonant,
    Mark,
}

#[derive(Debug)]
struct Phoneme {
    slp1: char,
    kind: Kind,
    devanagari: char,
    sign: Option<char>,
    roman: [String; 6],
}

#[derive(Debug, Default)]
struct Decoder {
    tokens: HashMap<String, Vec<char>>,
    max_len: usize,
}

impl Decoder {
    fn insert(&mut self, token: &str, phonemes: Vec<char>) -> Result<(), String> {
        let token: String = token.nfc().collect();
        if let Some(prev) = self.tokens.get(&token) {
            if *prev != phonemes {
                return Err(format!("token {token:?} maps to both {prev:?} and {phonemes:?}"));
            }
        }
        self.max_len = self.max_len.max(token.chars().count());
        self.tokens.insert(token, phonemes);
        Ok(())
    }

    fn decode(&self, text: &str, out: &mut Vec<Unit>) {
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let longest = (1..=self.max_len.min(chars.len() - i)).rev().find_map(|len| {
                let candidate: String = chars[i..i + len].iter().collect();
                self.tokens.get(&candidate).map(|p| (len, p))
            });
            match longest {
                Some((len, phonemes)) => {
                    out.extend(phonemes.iter().map(|&p| Unit::Phoneme(p)));
                    i += len;
                }
                None => {
                    out.push(Unit::Other(chars[i]));
                    i += 1;
                }
            }
        }
    }
}

#[derive(Debug)]
struct Tables {
    phonemes: Vec<Phoneme>,
    by_slp1: HashMap<char, usize>,
    decoders: [Decoder; 6],
    by_devanagari: HashMap<char, usize>,
    by_sign: HashMap<char, usize>,
}

impl Tables {
    fn parse(source: &str) -> Result<Self, String> {
        let mut phonemes = Vec::new();
        let mut aliases = Vec::new();
        for (n, line) in source.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols[0] == "alias" {
                if cols.len() != 4 {
                    return Err(format!("line {}: alias rows have 4 columns", n + 1));
                }
                let scheme: Scheme = cols[1].parse().map_err(|e| format!("line {}: {e}", n + 1))?;
                aliases.push((scheme, cols[2].to_string(), cols[3].chars().collect::<Vec<_>>()));
                continue;
            }
            if cols.len() != 10 {
                return Err(format!("line {}: expected 10 columns, got {}", n + 1, cols.len()));
            }
            let single = |s: &str| -> Result<char, String> {
                let mut it = s.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(format!("line {}: {s:?} is not a single character", n + 1)),
                }
            };
            let kind = match cols[1] {
                "vowel" => Kind::Vowel,
                "consonant" => Kind::Consonant,
                "mark" => Kind::Mark,
                other => return Err(format!("line {}: unknown kind {other:?}", n + 1)),
            };
            let roman: [String; 6] = std::array::from_fn(|i| cols[4 + i].nfc().collect());
            if roman.iter().any(|r| r.is_empty()) {
                return Err(format!("line {}: empty rendering", n + 1));
            }
            phonemes.push(Phoneme {
                slp1: single(cols[0])?,
                kind,
                devanagari: single(cols[2])?,
                sign: if cols[3] == "-" { None } else { Some(single(cols[3])?) },
                roman,
            });
        }

        let mut by_slp1 = HashMap::new();
        let mut by_devanagari = HashMap::new();
        let mut by_sign = HashMap::new();
        let mut decoders: [Decoder; 6] = Default::default();
        for (i, p) in phonemes.iter().enumerate() {
            if by_slp1.insert(p.slp1, i).is_some() {
                return Err(format!("phoneme {:?} listed twice", p.slp1));
            }
            if by_devanagari.insert(p.devanagari, i).is_some() {
                return Err(format!("glyph {:?} listed twice", p.devanagari));
            }
            if let Some(s) = p.sign {
                by_sign.insert(s, i);
            }
            if p.kind == Kind::Vowel && p.sign.is_none() && p.slp1 != 'a' {
                return Err(format!("vowel {:?} has no sign", p.slp1));
            }
            for (col, decoder) in decoders.iter_mut().enumerate() {
                decoder.insert(&p.roman[col], vec![p.slp1])?;
            }
        }
        for (scheme, token, targets) in aliases {
            if targets.iter().any(|t| !by_slp1.contains_key(t)) {
                return Err(format!("alias {token:?} names an unknown phoneme"));
            }
            let col = scheme.column().ok_or("aliases apply to romanized schemes only")?;
            decoders[col].insert(&token, targets)?;
        }
        Ok(Tables {
            phonemes,
            by_slp1,
            decoders,
            by_devanagari,
            by_sign,
        })
    }

    fn phoneme(&self, slp1: char) -> &Phoneme {
        &self.phonemes[self.by_slp1[&slp1]]
    }

    fn kind(&self, slp1: char) -> Kind {
        self.phoneme(slp1).kind
    }

    /// Verifies that each rendering decodes back to its phoneme and that every
    /// pair of phonemes whose joined rendering decodes differently is covered
    /// by [`is_ambiguous_pair`].
    fn self_check(&self) -> Result<(), String> {
        for scheme in Scheme::ROMAN {
            let col = scheme.column().expect("romanized");
            for p in &self.phonemes {
                let decoded = self.decode(&p.roman[col], scheme);
                if decoded.units != [Unit::Phoneme(p.slp1)] {
                    return Err(format!(
                        "{scheme}: {:?} does not decode to {:?}",
                        p.roman[col], p.slp1
                    ));
                }
            }
            for a in &self.phonemes {
                for b in &self.phonemes {
                    let joined = format!("{}{}", a.roman[col], b.roman[col]);
                    let decoded = self.decode(&joined, scheme);
                    let expected = [Unit::Phoneme(a.slp1), Unit::Phoneme(b.slp1)];
                    if decoded.units != expected && !is_ambiguous_pair(a.slp1, b.slp1) {
                        return Err(format!(
                            "{scheme}: {:?} + {:?} is ambiguous but not listed as a normalization pair",
                            a.slp1, b.slp1
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn decode(&self, text: &str, scheme: Scheme) -> Decoded {
        let mut decoded = Decoded::default();
        match scheme.column() {
            Some(col) => {
                let text: String = text.nfc().collect();
                self.decoders[col].decode(&text, &mut decoded.units)
            }
            None => self.decode_devanagari(text, &mut decoded),
        }
        decoded
    }

    fn decode_devanagari(&self, text: &str, out: &mut Decoded) {
        let chars: Vec<char> = text.nfc().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            i += 1;
            if is_vedic_accent(c) {
                out.advisories.push(Advisory::StrippedAccent(c));
                continue;
            }
            let Some(&idx) = self.by_devanagari.get(&c) else {
                out.units.push(Unit::Other(c));
                continue;
            };
            let p = &self.phonemes[idx];
            out.units.push(Unit::Phoneme(p.slp1));
            if p.kind != Kind::Consonant {
                continue;
            }
            // skip accents between the consonant and its vowel sign
            while i < chars.len() && is_vedic_accent(chars[i]) {
                out.advisories.push(Advisory::StrippedAccent(chars[i]));
                i += 1;
            }
            match chars.get(i) {
                Some(&VIRAMA) => i += 1,
                Some(s) if self.by_sign.contains_key(s) => {
                    out.units.push(Unit::Phoneme(self.phonemes[self.by_sign[s]].slp1));
                    i += 1;
                }
                _ => out.units.push(Unit::Phoneme('a')),
            }
        }
    }

    fn encode(&self, units: &[Unit], scheme: Scheme) -> String {
        let mut out = String::new();
        match scheme.column() {
            Some(col) => {
                for unit in units {
                    match *unit {
                        Unit::Phoneme(p) => out.push_str(&self.phoneme(p).roman[col]),
                        Unit::Other(c) => out.push(c),
                    }
                }
            }
            None => {
                let mut i = 0;
                while i < units.len() {
                    match units[i] {
                        Unit::Other(c) => out.push(c),
                        Unit::Phoneme(slp) => {
                            let p = self.phoneme(slp);
                            out.push(p.devanagari);
                            if p.kind == Kind::Consonant {
                                match units.get(i + 1) {
                                    Some(&Unit::Phoneme(v)) if self.kind(v) == Kind::Vowel => {
                                        if let Some(sign) = self.phoneme(v).sign {
                                            out.push(sign);
                                        }
                                        i += 1;
                                    }
                                    _ => out.push(VIRAMA),
                                }
                            }
                        }
                    }
                    i += 1;
                }
            }
        }
        out
    }
}

fn is_vedic_accent(c: char) -> bool {
    matches!(c, '\u{0951}'..='\u{0954}')
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let tables = Tables::parse(SCHEME_TABLE).unwrap_or_else(|e| panic!("scheme table: {e}"));
        if let Err(e) = tables.self_check() {
            panic!("scheme table self-check failed: {e}");
        }
        tables
    })
}

/// Checks the shipped scheme table; called once at service start-up so a
/// broken table fails loudly before any request is served.
pub fn verify_tables() -> Result<(), String> {
    Tables::parse(SCHEME_TABLE)?.self_check()
}

/// Phoneme pairs (as SLP1 letters) whose romanized spelling cannot be split
/// unambiguously in at least one scheme. Lossless round-trips hold for text
/// that contains none of these adjacent pairs.
pub fn is_ambiguous_pair(first: char, second: char) -> bool {
    const VOWELS: &str = "aAiIuUfFxXeEoO";
    const UNASPIRATED_STOPS: &str = "kgcjwqtdpb";
    // hiatus: "ai" / "au" diphthongs, doubled-letter long vowels, "RR", ".rr"
    (VOWELS.contains(first) && VOWELS.contains(second))
        // "kh", "gh", ... versus stop + h
        || (UNASPIRATED_STOPS.contains(first) && second == 'h')
        // ITRANS "sh" (palatal sibilant)
        || (first == 's' && second == 'h')
        // Harvard-Kyoto "lR" / "lRR" (vocalic l)
        || (first == 'l' && matches!(second, 'f' | 'F'))
        // Velthuis ".r" + "r" = ".rr", ".l" + "l" = ".ll"
        || (first == 'f' && second == 'r')
        || (first == 'x' && second == 'l')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Phoneme(char),
    Other(char),
}

#[derive(Debug, Default)]
struct Decoded {
    units: Vec<Unit>,
    advisories: Vec<Advisory>,
}

/// Characters that were not converted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "char", rename_all = "snake_case")]
pub enum Advisory {
    /// Not part of the source scheme; copied to the output unchanged.
    Passthrough(char),
    /// Vedic accent mark, removed.
    StrippedAccent(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transliteration {
    pub text: String,
    pub advisories: Vec<Advisory>,
}

/// Converts `text` from one scheme to another through the SLP1 phoneme stream.
pub fn transliterate(text: &str, from: Scheme, to: Scheme) -> Transliteration {
    if from == to {
        return Transliteration {
            text: text.to_string(),
            advisories: Vec::new(),
        };
    }
    let t = tables();
    let mut decoded = t.decode(text, from);
    for unit in &decoded.units {
        if let Unit::Other(c) = *unit {
            if !(c.is_whitespace() || c.is_ascii_punctuation() || c.is_ascii_digit()) {
                decoded.advisories.push(Advisory::Passthrough(c));
            }
        }
    }
    Transliteration {
        text: t.encode(&decoded.units, to),
        advisories: decoded.advisories,
    }
}

/// Shorthand for [`transliterate`] when advisories are not needed.
pub fn convert(text: &str, from: Scheme, to: Scheme) -> String {
    transliterate(text, from, to).text
}

/// All seven renderings of a Devanagari word, in [`Scheme::ALL`] order.
pub fn renderings(devanagari: &str) -> Vec<(Scheme, String)> {
    Scheme::ALL
        .into_iter()
        .map(|s| (s, convert(devanagari, Scheme::Devanagari, s)))
        .collect()
}

/// SLP1 letters of the covered phoneme set, grouped by kind: vowels,
/// consonants, marks.
pub fn phoneme_inventory() -> (Vec<char>, Vec<char>, Vec<char>) {
    let t = tables();
    let pick = |k: Kind| t.phonemes.iter().filter(|p| p.kind == k).map(|p| p.slp1).collect();
    (pick(Kind::Vowel), pick(Kind::Consonant), pick(Kind::Mark))
}

/// Lower-cased renderings of annotated lemmas, for prefix search.
///
/// Case distinctions of HK, SLP1 and WX are lost on purpose, so different
/// words may share an entry; lookups return the union.
#[derive(Debug, Clone, Default)]
pub struct TransliterationIndex {
    entries: BTreeMap<String, BTreeSet<String>>,
    lemmas: BTreeSet<String>,
}

impl TransliterationIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts all seven renderings of `lemma`. Idempotent.
    pub fn index_lemma(&mut self, lemma: &str) {
        if lemma.is_empty() || !self.lemmas.insert(lemma.to_string()) {
            return;
        }
        let keys: Vec<String> = renderings(lemma)
            .into_iter()
            .map(|(_, r)| r.to_lowercase())
            .collect();
        for key in keys {
            self.entries.entry(key).or_default().insert(lemma.to_string());
        }
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    /// Lemmas with a rendering starting with `prefix` (case-insensitive), in
    /// lexicographic order, at most [`SUGGEST_LIMIT`] of them. Prefixes shorter
    /// than [`MIN_PREFIX`] user-perceived characters give nothing.
    pub fn suggest(&self, prefix: &str) -> Vec<String> {
        let mut all = self.suggest_all(prefix);
        all.truncate(SUGGEST_LIMIT);
        all
    }

    /// [`suggest`](Self::suggest) without the result limit.
    pub fn suggest_all(&self, prefix: &str) -> Vec<String> {
        if prefix.graphemes(true).count() < MIN_PREFIX {
            return Vec::new();
        }
        let needle: String = prefix.nfc().collect::<String>().to_lowercase();
        let mut found = BTreeSet::new();
        for (key, lemmas) in self.entries.range(needle.clone()..) {
            if !key.starts_with(&needle) {
                break;
            }
            found.extend(lemmas.iter().cloned());
        }
        found.into_iter().collect()
    }

    /// Lemmas having a rendering exactly equal to `text` (case-insensitive).
    pub fn lookup_exact(&self, text: &str) -> Vec<String> {
        let needle: String = text.nfc().collect::<String>().to_lowercase();
        self.entries
            .get(&needle)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }
}

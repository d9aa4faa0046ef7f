//! Reading "Analyze Results" source-title exports and reconciling the titles
//! against the base map.

use std::collections::BTreeMap;
use std::io::Read;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::basemap::{BaseMap, JournalId};
use crate::error::{Error, Result};

/// One unit's export as read from disk, before matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPortfolio {
    pub unit_label: String,
    pub rows: Vec<(String, u64)>,
    pub total_records: u64,
}

/// A unit's journal counts restricted to journals on the base map.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioDistribution {
    pub unit_label: String,
    pub entries: BTreeMap<JournalId, u64>,
    pub proportions: BTreeMap<JournalId, f64>,
    pub matched_records: u64,
    pub total_records: u64,
    /// Rows with no base-map journal, sorted by title then count.
    pub unmatched: Vec<(String, u64)>,
}

impl PortfolioDistribution {
    /// Share of exported records that landed on a mapped journal.
    pub fn coverage(&self) -> f64 {
        if self.total_records == 0 {
            0.0
        } else {
            self.matched_records as f64 / self.total_records as f64
        }
    }

    pub fn n_journals(&self) -> usize {
        self.entries.len()
    }

    pub fn unmatched_records(&self) -> u64 {
        self.total_records - self.matched_records
    }
}

/// Decodes raw export bytes: UTF-16LE/BE when a BOM says so, UTF-8 otherwise
/// (with or without BOM). Invalid sequences become U+FFFD.
pub fn decode_export(bytes: &[u8]) -> String {
    fn utf16(bytes: &[u8], from: fn([u8; 2]) -> u16) -> String {
        let units: Vec<u16> = bytes.chunks_exact(2).map(|c| from([c[0], c[1]])).collect();
        String::from_utf16_lossy(&units)
    }
    match bytes {
        [0xFF, 0xFE, rest @ ..] => utf16(rest, u16::from_le_bytes),
        [0xFE, 0xFF, rest @ ..] => utf16(rest, u16::from_be_bytes),
        [0xEF, 0xBB, 0xBF, rest @ ..] => String::from_utf8_lossy(rest).into_owned(),
        _ => String::from_utf8_lossy(bytes).into_owned(),
    }
}

fn parse_count(field: &str) -> Option<i64> {
    let cleaned: String = field
        .trim()
        .chars()
        .filter(|c| !matches!(c, ',' | '\u{a0}' | '\u{202f}' | '\''))
        .collect();
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse().ok()
}

/// Parses a tab-delimited source-title export.
///
/// Lines with fewer than two fields (blank lines, WoS summary trailers) are
/// skipped. Before the first data row, a line whose second field is not an
/// integer is treated as a header; after it, such a line is an error.
pub fn parse_analyze_export<R: Read>(mut source: R, unit_label: &str) -> Result<RawPortfolio> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_analyze_text(&decode_export(&bytes), unit_label)
}

pub fn parse_analyze_text(text: &str, unit_label: &str) -> Result<RawPortfolio> {
    let mut rows = Vec::new();
    let mut total: u64 = 0;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_start_matches('\u{feff}');
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let title = fields[0].trim();
        let count = match parse_count(fields[1]) {
            Some(c) => c,
            None if rows.is_empty() => continue,
            None => {
                return Err(Error::parse(
                    lineno,
                    format!("non-numeric record count {:?}", fields[1].trim()),
                ))
            }
        };
        if count <= 0 {
            return Err(Error::parse(lineno, format!("record count must be positive, found {count}")));
        }
        if title.is_empty() {
            return Err(Error::parse(lineno, "empty source title"));
        }
        let count = count as u64;
        total += count;
        rows.push((title.to_owned(), count));
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput("no data rows"));
    }
    Ok(RawPortfolio {
        unit_label: unit_label.to_owned(),
        rows,
        total_records: total,
    })
}

/// Canonical form used for every title comparison.
///
/// Uppercases, folds decomposable diacritics to their base letter, spells `&`
/// as `AND`, drops punctuation other than hyphens and collapses whitespace.
pub fn normalize_title(raw: &str) -> String {
    let folded: String = raw
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_uppercase)
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect();

    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    let push_word_char = |out: &mut String, c: char, pending: &mut bool| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push(c);
    };
    for c in folded.chars() {
        if c == '&' {
            pending_space = true;
            for a in "AND".chars() {
                push_word_char(&mut out, a, &mut pending_space);
            }
            pending_space = true;
        } else if c.is_whitespace() {
            pending_space = true;
        } else if c == '-' || c.is_alphanumeric() {
            push_word_char(&mut out, c, &mut pending_space);
        }
    }
    out
}

/// Matches each export row against the map (full titles, then abbreviations).
///
/// Proportions are taken over matched records only; unmatched rows are kept
/// so that coverage can be reported.
pub fn match_portfolio(raw: &RawPortfolio, map: &BaseMap) -> PortfolioDistribution {
    let mut entries: BTreeMap<JournalId, u64> = BTreeMap::new();
    let mut unmatched = Vec::new();
    let mut matched_records = 0;

    for (title, count) in &raw.rows {
        match map.lookup_normalized(&normalize_title(title)) {
            Some(id) => {
                *entries.entry(id).or_default() += count;
                matched_records += count;
            }
            None => unmatched.push((title.clone(), *count)),
        }
    }
    unmatched.sort();

    let proportions = entries
        .iter()
        .map(|(&id, &c)| (id, c as f64 / matched_records as f64))
        .collect();

    if entries.is_empty() {
        log::warn!(
            "no journal of unit {:?} matched the base map ({} records unmatched)",
            raw.unit_label,
            raw.total_records
        );
    }

    PortfolioDistribution {
        unit_label: raw.unit_label.clone(),
        entries,
        proportions,
        matched_records,
        total_records: raw.total_records,
        unmatched,
    }
}

//! The journal universe: identities, map coordinates and the disparity
//! between any two journals.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::geometry::{compute_diameter, Point};
use crate::ingest::normalize_title;

pub const BASEMAP_HEADER: [&str; 6] = ["id", "full_title", "abbrev_title", "x", "y", "cluster"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JournalId(pub u32);

impl fmt::Display for JournalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JournalEntry {
    pub id: JournalId,
    pub full_title: String,
    pub abbrev_title: String,
    pub x: f64,
    pub y: f64,
    pub cluster: u32,
}

impl JournalEntry {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// An immutable base map. Journal order is the file order and doubles as the
/// canonical index order for every downstream computation.
#[derive(Debug, Clone)]
pub struct BaseMap {
    journals: Vec<JournalEntry>,
    positions: HashMap<JournalId, usize>,
    full_index: HashMap<String, JournalId>,
    abbrev_index: HashMap<String, JournalId>,
    diameter: f64,
    warnings: Vec<String>,
}

impl BaseMap {
    /// Builds a map from already-parsed entries.
    ///
    /// Duplicate ids and titles that normalize to nothing are rejected. Title
    /// collisions keep the first journal and record a warning.
    pub fn from_entries(journals: Vec<JournalEntry>) -> Result<Self> {
        if journals.is_empty() {
            return Err(Error::EmptyInput("base map has no journals"));
        }
        let mut positions = HashMap::with_capacity(journals.len());
        let mut full_index = HashMap::with_capacity(journals.len());
        let mut abbrev_index = HashMap::new();
        let mut warnings = Vec::new();

        for (pos, j) in journals.iter().enumerate() {
            if positions.insert(j.id, pos).is_some() {
                return Err(Error::InvalidMap(format!("duplicate journal id {}", j.id)));
            }
            if !(j.x.is_finite() && j.y.is_finite()) {
                return Err(Error::InvalidMap(format!(
                    "journal {} has non-finite coordinates",
                    j.id
                )));
            }
            let key = normalize_title(&j.full_title);
            if key.is_empty() {
                return Err(Error::InvalidMap(format!("journal {} has an empty title", j.id)));
            }
            if let Some(&first) = full_index.get(&key) {
                warnings.push(format!(
                    "title {key:?} of journal {} already belongs to journal {first}; keeping {first}",
                    j.id
                ));
            } else {
                full_index.insert(key, j.id);
            }

            let abbrev = normalize_title(&j.abbrev_title);
            if abbrev.is_empty() {
                continue;
            }
            match abbrev_index.get(&abbrev) {
                Some(&first) if first != j.id => warnings.push(format!(
                    "abbreviation {abbrev:?} of journal {} already belongs to journal {first}; keeping {first}",
                    j.id
                )),
                Some(_) => {}
                None => {
                    abbrev_index.insert(abbrev, j.id);
                }
            }
        }

        let points: Vec<Point> = journals.iter().map(JournalEntry::point).collect();
        let diameter = compute_diameter(&points);
        if diameter == 0.0 {
            warnings.push(
                "base map is degenerate (fewer than two distinct coordinates); diversity is undefined"
                    .to_owned(),
            );
        }

        Ok(BaseMap {
            journals,
            positions,
            full_index,
            abbrev_index,
            diameter,
            warnings,
        })
    }

    pub fn journals(&self) -> &[JournalEntry] {
        &self.journals
    }

    pub fn len(&self) -> usize {
        self.journals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.journals.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Diagnostics collected while loading (title collisions, degenerate geometry).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Index of `id` in map order.
    pub fn position(&self, id: JournalId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn journal(&self, id: JournalId) -> Option<&JournalEntry> {
        self.position(id).map(|p| &self.journals[p])
    }

    /// Resolves a title against full titles first, then abbreviations. The
    /// argument is normalized before lookup.
    pub fn lookup_title(&self, title: &str) -> Option<JournalId> {
        self.lookup_normalized(&normalize_title(title))
    }

    pub(crate) fn lookup_normalized(&self, key: &str) -> Option<JournalId> {
        self.full_index
            .get(key)
            .or_else(|| self.abbrev_index.get(key))
            .copied()
    }

    /// Map distance between two journals divided by the map diameter, in `[0, 1]`.
    pub fn disparity(&self, i: JournalId, j: JournalId) -> Result<f64> {
        let a = self.journal(i).ok_or(Error::UnknownJournal(i))?;
        let b = self.journal(j).ok_or(Error::UnknownJournal(j))?;
        if self.diameter == 0.0 {
            return Err(Error::DegenerateMap);
        }
        if i == j {
            return Ok(0.0);
        }
        Ok(a.point().distance(b.point()) / self.diameter)
    }
}

/// Reads the base map TSV (`id, full_title, abbrev_title, x, y, cluster`).
pub fn load_basemap<R: BufRead>(source: R) -> Result<BaseMap> {
    let mut journals = Vec::new();
    let mut seen = HashSet::new();
    let mut saw_header = false;

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let line = if lineno == 1 { line.trim_start_matches('\u{feff}') } else { line };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();

        if !saw_header {
            saw_header = true;
            let is_header = fields.len() == BASEMAP_HEADER.len()
                && fields
                    .iter()
                    .zip(BASEMAP_HEADER)
                    .all(|(f, h)| f.trim().eq_ignore_ascii_case(h));
            if !is_header {
                return Err(Error::parse(
                    lineno,
                    format!("expected header {:?}", BASEMAP_HEADER.join("\t")),
                ));
            }
            continue;
        }

        if fields.len() != BASEMAP_HEADER.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} columns, found {}", BASEMAP_HEADER.len(), fields.len()),
            ));
        }
        let id: u32 = fields[0]
            .trim()
            .parse()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::parse(lineno, format!("invalid journal id {:?}", fields[0])))?;
        if !seen.insert(id) {
            return Err(Error::parse(lineno, format!("duplicate journal id {id}")));
        }
        let coord = |s: &str, axis: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(lineno, format!("invalid {axis} coordinate {s:?}")))
        };
        let x = coord(fields[3], "x")?;
        let y = coord(fields[4], "y")?;
        let cluster: u32 = fields[5]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid cluster {:?}", fields[5])))?;
        let full_title = normalize_title(fields[1]);
        if full_title.is_empty() {
            return Err(Error::parse(lineno, "empty full_title"));
        }

        journals.push(JournalEntry {
            id: JournalId(id),
            full_title,
            abbrev_title: normalize_title(fields[2]),
            x,
            y,
            cluster,
        });
    }

    if journals.is_empty() {
        return Err(Error::EmptyInput("base map has no data rows"));
    }
    BaseMap::from_entries(journals)
}

//! The units x journals count matrix and the unit-to-unit matrices derived
//! from it.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::basemap::{BaseMap, JournalId};
use crate::error::{Error, Result};
use crate::ingest::PortfolioDistribution;

/// Rejects labels that cannot survive the tab-separated ledgers.
pub fn validate_label(label: &str) -> Result<()> {
    let reason = if label.trim().is_empty() {
        "label is empty"
    } else if label.chars().any(|c| matches!(c, '\t' | '\n' | '\r')) {
        "label contains a tab or line break"
    } else if label != label.trim() {
        "label has leading or trailing whitespace"
    } else {
        return Ok(());
    };
    Err(Error::InvalidLabel {
        label: label.to_owned(),
        reason,
    })
}

/// Dense count matrix. The journal axis always spans the whole base map in
/// map order; units are columns in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortfolioMatrix {
    journal_ids: Vec<JournalId>,
    rows_by_id: HashMap<JournalId, usize>,
    unit_labels: Vec<String>,
    columns: Vec<Vec<u64>>,
}

impl PortfolioMatrix {
    pub fn for_basemap(map: &BaseMap) -> Self {
        let journal_ids: Vec<JournalId> = map.journals().iter().map(|j| j.id).collect();
        let rows_by_id = journal_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        PortfolioMatrix {
            journal_ids,
            rows_by_id,
            unit_labels: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn journal_ids(&self) -> &[JournalId] {
        &self.journal_ids
    }

    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    pub fn n_units(&self) -> usize {
        self.unit_labels.len()
    }

    pub fn column(&self, label: &str) -> Option<&[u64]> {
        self.unit_labels
            .iter()
            .position(|l| l == label)
            .map(|k| self.columns[k].as_slice())
    }

    pub fn columns(&self) -> &[Vec<u64>] {
        &self.columns
    }

    pub fn column_sum(&self, unit: usize) -> u64 {
        self.columns[unit].iter().sum()
    }

    /// Creates or replaces the column for `dist.unit_label`.
    pub fn upsert_unit(&mut self, dist: &PortfolioDistribution) -> Result<()> {
        validate_label(&dist.unit_label)?;
        let mut column = vec![0u64; self.journal_ids.len()];
        for (&id, &count) in &dist.entries {
            let row = *self.rows_by_id.get(&id).ok_or_else(|| {
                Error::DimensionMismatch(format!("journal {id} of unit {:?} is not on the matrix axis", dist.unit_label))
            })?;
            column[row] = count;
        }
        self.set_column(dist.unit_label.clone(), column);
        Ok(())
    }

    fn set_column(&mut self, label: String, column: Vec<u64>) {
        match self.unit_labels.iter().position(|l| *l == label) {
            Some(k) => self.columns[k] = column,
            None => {
                self.unit_labels.push(label);
                self.columns.push(column);
            }
        }
    }

    /// Writes the ledger: `journal_id` then one column per unit, one row per
    /// base-map journal.
    pub fn write_ledger<W: Write>(&self, mut sink: W) -> Result<()> {
        let mut line = String::from("journal_id");
        for label in &self.unit_labels {
            line.push('\t');
            line.push_str(label);
        }
        writeln!(sink, "{line}")?;
        for (row, id) in self.journal_ids.iter().enumerate() {
            line.clear();
            line.push_str(&id.to_string());
            for col in &self.columns {
                line.push('\t');
                line.push_str(&col[row].to_string());
            }
            writeln!(sink, "{line}")?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads a ledger written by [`write_ledger`](Self::write_ledger). Its
    /// journal rows must match `map` exactly, in order.
    pub fn read_ledger<R: BufRead>(source: R, map: &BaseMap) -> Result<Self> {
        let mut matrix = PortfolioMatrix::for_basemap(map);
        let mut lines = source.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::EmptyInput("matrix ledger is empty")),
        };
        let mut head = header.split('\t');
        if head.next() != Some("journal_id") {
            return Err(Error::parse(1, "matrix ledger header must start with journal_id"));
        }
        let labels: Vec<String> = head.map(str::to_owned).collect();
        for (k, label) in labels.iter().enumerate() {
            validate_label(label).map_err(|e| Error::parse(1, e.to_string()))?;
            if labels[..k].contains(label) {
                return Err(Error::parse(1, format!("duplicate unit {label:?}")));
            }
        }
        let mut columns = vec![Vec::with_capacity(matrix.journal_ids.len()); labels.len()];

        let mut row = 0;
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id: u32 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(lineno, "invalid journal_id"))?;
            if matrix.journal_ids.get(row) != Some(&JournalId(id)) {
                return Err(Error::DimensionMismatch(format!(
                    "ledger row {} is journal {id}, base map expects {}",
                    row + 1,
                    matrix.journal_ids.get(row).map_or("end of map".to_owned(), |j| j.to_string())
                )));
            }
            let mut n = 0;
            for (col, cell) in columns.iter_mut().zip(fields.by_ref()) {
                let v: u64 = cell
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid count {cell:?}")))?;
                col.push(v);
                n += 1;
            }
            if n != labels.len() || fields.next().is_some() {
                return Err(Error::parse(lineno, format!("expected {} columns", labels.len() + 1)));
            }
            row += 1;
        }
        if row != matrix.journal_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "ledger has {row} journal rows, base map has {}",
                matrix.journal_ids.len()
            )));
        }
        for (label, col) in labels.into_iter().zip(columns) {
            matrix.set_column(label, col);
        }
        Ok(matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Cosine,
    Cooccurrence,
}

/// Symmetric units x units matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub unit_labels: Vec<String>,
    pub values: Vec<f64>,
    pub kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn zeros(unit_labels: Vec<String>, kind: SimilarityKind) -> Self {
        let n = unit_labels.len();
        SimilarityMatrix {
            unit_labels,
            values: vec![0.0; n * n],
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.unit_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.len() + b]
    }

    /// Sets both `(a, b)` and `(b, a)`.
    pub fn set_symmetric(&mut self, a: usize, b: usize, value: f64) {
        let n = self.len();
        self.values[a * n + b] = value;
        self.values[b * n + a] = value;
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| (a + 1..n).all(|b| self.get(a, b) == self.get(b, a)))
    }
}

fn dot(a: &[u64], b: &[u64]) -> u128 {
    a.iter().zip(b).map(|(&x, &y)| x as u128 * y as u128).sum()
}

/// Unit-by-unit inner products of the raw count columns (`M^T M`).
pub fn cooccurrence_matrix(matrix: &PortfolioMatrix) -> Result<SimilarityMatrix> {
    let n = matrix.n_units();
    if n < 2 {
        return Err(Error::TooFewUnits(n));
    }
    let mut sim = SimilarityMatrix::zeros(matrix.unit_labels.clone(), SimilarityKind::Cooccurrence);
    for a in 0..n {
        for b in a..n {
            sim.set_symmetric(a, b, dot(&matrix.columns[a], &matrix.columns[b]) as f64);
        }
    }
    Ok(sim)
}

/// Cosine of the angle between count columns. An all-zero column is 0
/// against everything, itself included.
pub fn cosine_matrix(matrix: &PortfolioMatrix) -> Result<SimilarityMatrix> {
    let n = matrix.n_units();
    if n < 2 {
        return Err(Error::TooFewUnits(n));
    }
    let square_norms: Vec<u128> = matrix.columns.iter().map(|c| dot(c, c)).collect();
    let norms: Vec<f64> = square_norms.iter().map(|&s| (s as f64).sqrt()).collect();
    for (label, &norm) in matrix.unit_labels.iter().zip(&norms) {
        if norm == 0.0 {
            log::warn!("unit {label:?} has no counts; its cosine row is zero");
        }
    }

    let mut sim = SimilarityMatrix::zeros(matrix.unit_labels.clone(), SimilarityKind::Cosine);
    for a in 0..n {
        if norms[a] == 0.0 {
            continue;
        }
        sim.set_symmetric(a, a, 1.0);
        for b in a + 1..n {
            if norms[b] == 0.0 {
                continue;
            }
            let ab = dot(&matrix.columns[a], &matrix.columns[b]);
            // Parallel columns give exactly 1.
            let cos = if ab.checked_mul(ab) == square_norms[a].checked_mul(square_norms[b]) && ab > 0 {
                1.0
            } else {
                (ab as f64 / (norms[a] * norms[b])).clamp(0.0, 1.0)
            };
            sim.set_symmetric(a, b, cos);
        }
    }
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basemap::load_basemap;
    use std::collections::BTreeMap;

    fn map3() -> BaseMap {
        let src = "id\tfull_title\tabbrev_title\tx\ty\tcluster\n\
                   1\tA\t\t0\t0\t1\n2\tB\t\t1\t0\t1\n3\tC\t\t0\t1\t2\n";
        load_basemap(src.as_bytes()).unwrap()
    }

    fn dist(label: &str, counts: &[u64]) -> PortfolioDistribution {
        let entries: BTreeMap<JournalId, u64> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (JournalId(k as u32 + 1), c))
            .collect();
        let matched = entries.values().sum();
        PortfolioDistribution {
            unit_label: label.into(),
            proportions: entries.iter().map(|(&id, &c)| (id, c as f64 / matched as f64)).collect(),
            entries,
            matched_records: matched,
            total_records: matched,
            unmatched: vec![],
        }
    }

    fn matrix_of(cols: &[(&str, &[u64])]) -> PortfolioMatrix {
        let mut m = PortfolioMatrix::for_basemap(&map3());
        for (label, c) in cols {
            m.upsert_unit(&dist(label, c)).unwrap();
        }
        m
    }

    #[test]
    fn upsert_semantics() {
        let mut m = PortfolioMatrix::for_basemap(&map3());
        m.upsert_unit(&dist("NL", &[1, 2, 0])).unwrap();
        assert_eq!(m.n_units(), 1);
        assert_eq!(m.column_sum(0), 3);
        m.upsert_unit(&dist("NL", &[4, 0, 4])).unwrap();
        assert_eq!(m.n_units(), 1);
        assert_eq!(m.column("NL").unwrap(), &[4, 0, 4]);
        m.upsert_unit(&dist("BE", &[1, 1, 1])).unwrap();
        m.upsert_unit(&dist("DE", &[0, 1, 1])).unwrap();
        assert_eq!(m.unit_labels(), ["NL", "BE", "DE"]);
    }

    #[test]
    fn upsert_rejects_foreign_journal() {
        let mut m = PortfolioMatrix::for_basemap(&map3());
        let mut d = dist("NL", &[1]);
        d.entries.insert(JournalId(77), 3);
        assert!(matches!(m.upsert_unit(&d), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cosine_examples() {
        let m = matrix_of(&[("u", &[1, 2, 0]), ("v", &[2, 1, 0]), ("w", &[0, 0, 3]), ("u2", &[1, 2, 0])]);
        let c = cosine_matrix(&m).unwrap();
        assert!((c.get(0, 1) - 0.8).abs() < 1e-15);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(0, 3), 1.0);
        assert_eq!(c.get(2, 2), 1.0);
        assert!(c.is_symmetric());
    }

    #[test]
    fn zero_column_cosine() {
        let m = matrix_of(&[("u", &[1, 2, 0]), ("z", &[0, 0, 0])]);
        let c = cosine_matrix(&m).unwrap();
        assert_eq!(c.get(1, 1), 0.0);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(0, 0), 1.0);
    }

    #[test]
    fn cooccurrence_examples() {
        let m = matrix_of(&[("u", &[1, 2, 0]), ("v", &[2, 1, 0]), ("w", &[0, 0, 3])]);
        let c = cooccurrence_matrix(&m).unwrap();
        assert_eq!(c.get(0, 1), 4.0);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(0, 0), 5.0);
        assert_eq!(c.kind, SimilarityKind::Cooccurrence);
    }

    #[test]
    fn too_few_units() {
        let m = matrix_of(&[("u", &[1, 2, 0])]);
        assert!(matches!(cosine_matrix(&m), Err(Error::TooFewUnits(1))));
        assert!(matches!(cooccurrence_matrix(&m), Err(Error::TooFewUnits(1))));
    }

    #[test]
    fn ledger_round_trip() {
        let m = matrix_of(&[("NL", &[1, 2, 0]), ("Univ. of Amsterdam", &[0, 0, 9])]);
        let mut buf = Vec::new();
        m.write_ledger(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "journal_id\tNL\tUniv. of Amsterdam\n1\t1\t0\n2\t2\t0\n3\t0\t9\n"
        );
        assert_eq!(PortfolioMatrix::read_ledger(&buf[..], &map3()).unwrap(), m);
    }

    #[test]
    fn ledger_against_other_map_is_rejected() {
        let m = matrix_of(&[("NL", &[1, 2, 0])]);
        let mut buf = Vec::new();
        m.write_ledger(&mut buf).unwrap();
        let other = load_basemap("id\tfull_title\tabbrev_title\tx\ty\tcluster\n1\tA\t\t0\t0\t1\n2\tB\t\t1\t0\t1\n".as_bytes()).unwrap();
        assert!(matches!(
            PortfolioMatrix::read_ledger(&buf[..], &other),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn labels_are_validated() {
        assert!(validate_label("Beer Sheva").is_ok());
        assert!(validate_label("Tel\tAviv").is_err());
        assert!(validate_label(" ").is_err());
        assert!(validate_label(" NL").is_err());
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        #[allow(clippy::needless_range_loop)]
        fn brute(cols: &[Vec<u64>]) -> (Vec<f64>, Vec<f64>) {
            let n = cols.len();
            let mut co = vec![0.0; n * n];
            let mut cos = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0u64;
                    let mut na = 0u64;
                    let mut nb = 0u64;
                    for k in 0..cols[a].len() {
                        s += cols[a][k] * cols[b][k];
                        na += cols[a][k] * cols[a][k];
                        nb += cols[b][k] * cols[b][k];
                    }
                    co[a * n + b] = s as f64;
                    cos[a * n + b] = if na == 0 || nb == 0 { 0.0 } else { s as f64 / ((na as f64).sqrt() * (nb as f64).sqrt()) };
                }
            }
            (co, cos)
        }

        fn small_matrix() -> impl Strategy<Value = Vec<Vec<u64>>> {
            (2usize..=5, 1usize..=10).prop_flat_map(|(units, journals)| {
                proptest::collection::vec(proptest::collection::vec(0u64..20, journals), units)
            })
        }

        fn build(cols: &[Vec<u64>]) -> PortfolioMatrix {
            let journals = cols[0].len();
            let entries = (0..journals)
                .map(|k| crate::basemap::JournalEntry {
                    id: JournalId(k as u32 + 1),
                    full_title: format!("J{k}"),
                    abbrev_title: String::new(),
                    x: k as f64,
                    y: 0.0,
                    cluster: 0,
                })
                .collect();
            let map = BaseMap::from_entries(entries).unwrap();
            let mut m = PortfolioMatrix::for_basemap(&map);
            for (u, c) in cols.iter().enumerate() {
                m.upsert_unit(&dist(&format!("U{u}"), c)).unwrap();
            }
            m
        }

        proptest! {
            #[test]
            fn matches_brute_force(cols in small_matrix()) {
                let m = build(&cols);
                let (co, cos) = brute(&cols);
                prop_assert_eq!(cooccurrence_matrix(&m).unwrap().values, co);
                let c = cosine_matrix(&m).unwrap();
                prop_assert!(c.is_symmetric());
                for (k, (&got, &want)) in c.values.iter().zip(&cos).enumerate() {
                    prop_assert!((0.0..=1.0).contains(&got));
                    prop_assert!((got - want).abs() <= 1e-12, "cell {} got {} want {}", k, got, want);
                }
            }

            #[test]
            fn scaling_a_unit(cols in small_matrix(), k in 2u64..50) {
                let m = build(&cols);
                let mut scaled = cols.clone();
                scaled[0].iter_mut().for_each(|v| *v *= k);
                let ms = build(&scaled);
                let n = cols.len();
                let (c, cs) = (cosine_matrix(&m).unwrap(), cosine_matrix(&ms).unwrap());
                let (o, os) = (cooccurrence_matrix(&m).unwrap(), cooccurrence_matrix(&ms).unwrap());
                for b in 1..n {
                    prop_assert!((c.get(0, b) - cs.get(0, b)).abs() <= 1e-12);
                    prop_assert_eq!(os.get(0, b), o.get(0, b) * k as f64);
                }
            }

            #[test]
            fn upsert_is_idempotent(cols in small_matrix()) {
                let once = build(&cols);
                let mut twice = once.clone();
                for (u, c) in cols.iter().enumerate() {
                    twice.upsert_unit(&dist(&format!("U{u}"), c)).unwrap();
                }
                prop_assert_eq!(once, twice);
            }
        }
    }
}

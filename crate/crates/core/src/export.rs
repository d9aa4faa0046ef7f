//! Writers for VOSviewer, Pajek, UCINET DL and CSV, plus a Pajek reader.
//!
//! All output is UTF-8 with LF line endings. Coordinates carry 4 decimals,
//! similarities and edge weights 6, and co-occurrence values are written as
//! integers, so identical inputs always give identical bytes.

use std::io::{BufRead, Write};

use crate::basemap::BaseMap;
use crate::error::{Error, Result};
use crate::ingest::PortfolioDistribution;
use crate::matrix::{PortfolioMatrix, SimilarityKind, SimilarityMatrix};

pub const VOS_MAP_HEADER: &str = "id\tlabel\tx\ty\tcluster\tweight";

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayEntry {
    pub id: u32,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub cluster: u32,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlayMap {
    pub entries: Vec<OverlayEntry>,
}

impl OverlayMap {
    /// One entry per base-map journal, weighted by the unit's matched counts.
    pub fn from_portfolio(map: &BaseMap, dist: &PortfolioDistribution) -> Self {
        let entries = map
            .journals()
            .iter()
            .map(|j| OverlayEntry {
                id: j.id.0,
                label: j.full_title.clone(),
                x: j.x,
                y: j.y,
                cluster: j.cluster,
                weight: dist.entries.get(&j.id).copied().unwrap_or(0),
            })
            .collect();
        OverlayMap { entries }
    }

    /// Units as items for a VOSviewer map; layout is left to VOSviewer, so
    /// every unit sits at the origin in cluster 0, weighted by its column sum.
    pub fn for_units(matrix: &PortfolioMatrix) -> Self {
        let entries = matrix
            .unit_labels()
            .iter()
            .enumerate()
            .map(|(k, label)| OverlayEntry {
                id: k as u32 + 1,
                label: label.clone(),
                x: 0.0,
                y: 0.0,
                cluster: 0,
                weight: matrix.column_sum(k),
            })
            .collect();
        OverlayMap { entries }
    }
}

fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    // "-0.0000" and friends
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn format_value(kind: SimilarityKind, value: f64) -> String {
    match kind {
        SimilarityKind::Cosine => fixed(value, 6),
        SimilarityKind::Cooccurrence => fixed(value, 0),
    }
}

fn single_line(label: &str) -> Result<()> {
    if label.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidLabel {
            label: label.to_owned(),
            reason: "label contains a tab or line break",
        });
    }
    Ok(())
}

pub fn write_vos_map<W: Write>(overlay: &OverlayMap, mut sink: W) -> Result<()> {
    writeln!(sink, "{VOS_MAP_HEADER}")?;
    if overlay.entries.is_empty() {
        log::warn!("no journals: VOSviewer map has a header only");
    }
    for e in &overlay.entries {
        single_line(&e.label)?;
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            e.label,
            fixed(e.x, 4),
            fixed(e.y, 4),
            e.cluster,
            e.weight
        )?;
    }
    sink.flush()?;
    Ok(())
}

fn positive_pairs(sim: &SimilarityMatrix) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let n = sim.len();
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b, sim.get(a, b)))).filter(|&(_, _, v)| v > 0.0)
}

/// `i<TAB>j<TAB>strength` per positive unordered pair, 1-based, `i < j`.
pub fn write_vos_network<W: Write>(sim: &SimilarityMatrix, mut sink: W) -> Result<()> {
    for (a, b, v) in positive_pairs(sim) {
        writeln!(sink, "{}\t{}\t{}", a + 1, b + 1, fixed(v, 6))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn write_pajek<W: Write>(sim: &SimilarityMatrix, mut sink: W) -> Result<()> {
    for label in &sim.unit_labels {
        if label.contains('"') {
            return Err(Error::InvalidLabel {
                label: label.clone(),
                reason: "Pajek labels cannot contain double quotes",
            });
        }
        single_line(label)?;
    }
    writeln!(sink, "*Vertices {}", sim.len())?;
    for (k, label) in sim.unit_labels.iter().enumerate() {
        writeln!(sink, "{} \"{}\"", k + 1, label)?;
    }
    writeln!(sink, "*Edges")?;
    for (a, b, v) in positive_pairs(sim) {
        writeln!(sink, "{} {} {}", a + 1, b + 1, fixed(v, 6))?;
    }
    sink.flush()?;
    Ok(())
}

#[derive(PartialEq)]
enum PajekSection {
    Preamble,
    Vertices,
    Lines,
}

/// Reads a Pajek `.net` file into a symmetric matrix of the given kind.
///
/// `*Arcs` are symmetrized; when a pair appears more than once the largest
/// weight wins. Edges without a weight count as 1. Missing vertex lines get
/// their index as label.
pub fn read_pajek<R: BufRead>(source: R, kind: SimilarityKind) -> Result<SimilarityMatrix> {
    let mut section = PajekSection::Preamble;
    let mut sim: Option<SimilarityMatrix> = None;

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_start_matches('\u{feff}').trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }

        if let Some(directive) = line.strip_prefix('*') {
            let mut words = directive.split_whitespace();
            let name = words.next().unwrap_or("").to_ascii_lowercase();
            match name.as_str() {
                "network" if section == PajekSection::Preamble => {}
                "vertices" if sim.is_none() => {
                    let n: usize = words
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::parse(lineno, "malformed *Vertices header"))?;
                    let labels = (1..=n).map(|k| k.to_string()).collect();
                    sim = Some(SimilarityMatrix::zeros(labels, kind));
                    section = PajekSection::Vertices;
                }
                "edges" | "arcs" if sim.is_some() => section = PajekSection::Lines,
                _ => return Err(Error::parse(lineno, format!("unexpected section *{directive}"))),
            }
            continue;
        }

        let Some(m) = sim.as_mut() else {
            return Err(Error::parse(lineno, "expected *Vertices header"));
        };
        let n = m.len();
        let vertex = |s: &str| -> Result<usize> {
            let k: usize = s
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid vertex index {s:?}")))?;
            if k == 0 || k > n {
                return Err(Error::parse(lineno, format!("vertex {k} out of range 1..={n}")));
            }
            Ok(k - 1)
        };

        match section {
            PajekSection::Vertices => {
                let (index, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                let k = vertex(index)?;
                let rest = rest.trim_start();
                let label = if let Some(quoted) = rest.strip_prefix('"') {
                    let end = quoted
                        .find('"')
                        .ok_or_else(|| Error::parse(lineno, "unterminated vertex label"))?;
                    &quoted[..end]
                } else {
                    rest.split_whitespace().next().unwrap_or("")
                };
                if !label.is_empty() {
                    m.unit_labels[k] = label.to_owned();
                }
            }
            PajekSection::Lines => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 2 {
                    return Err(Error::parse(lineno, "edge line needs two vertices"));
                }
                let a = vertex(fields[0])?;
                let b = vertex(fields[1])?;
                let w = match fields.get(2) {
                    Some(s) => s
                        .parse::<f64>()
                        .ok()
                        .filter(|w| w.is_finite())
                        .ok_or_else(|| Error::parse(lineno, format!("invalid weight {s:?}")))?,
                    None => 1.0,
                };
                let w = w.max(m.get(a, b));
                m.set_symmetric(a, b, w);
            }
            PajekSection::Preamble => unreachable!(),
        }
    }

    sim.ok_or(Error::EmptyInput("no *Vertices section"))
}

fn ucinet_label(label: &str) -> String {
    if label.contains([',', ' ', '"', '\'']) {
        format!("\"{}\"", label.replace('"', "'"))
    } else {
        label.to_owned()
    }
}

/// UCINET DL full matrix: integers for co-occurrence, 6 decimals for cosine.
pub fn write_ucinet_dl<W: Write>(sim: &SimilarityMatrix, mut sink: W) -> Result<()> {
    for label in &sim.unit_labels {
        single_line(label)?;
    }
    let n = sim.len();
    writeln!(sink, "dl n={n} format=fullmatrix")?;
    writeln!(sink, "labels:")?;
    let labels: Vec<String> = sim.unit_labels.iter().map(|l| ucinet_label(l)).collect();
    writeln!(sink, "{}", labels.join(","))?;
    writeln!(sink, "data:")?;
    let mut row = Vec::with_capacity(n);
    for a in 0..n {
        row.clear();
        row.extend((0..n).map(|b| format_value(sim.kind, sim.get(a, b))));
        writeln!(sink, "{}", row.join(" "))?;
    }
    sink.flush()?;
    Ok(())
}

/// Anything that can be laid out as a labelled table for CSV export.
pub trait CsvTable {
    /// Header of the first (row key) column.
    fn key_header(&self) -> &str;
    fn column_labels(&self) -> Vec<String>;
    fn n_rows(&self) -> usize;
    fn row(&self, index: usize) -> (String, Vec<String>);
}

impl CsvTable for SimilarityMatrix {
    fn key_header(&self) -> &str {
        "unit"
    }

    fn column_labels(&self) -> Vec<String> {
        self.unit_labels.clone()
    }

    fn n_rows(&self) -> usize {
        self.len()
    }

    fn row(&self, a: usize) -> (String, Vec<String>) {
        let cells = (0..self.len()).map(|b| format_value(self.kind, self.get(a, b))).collect();
        (self.unit_labels[a].clone(), cells)
    }
}

impl CsvTable for PortfolioMatrix {
    fn key_header(&self) -> &str {
        "journal_id"
    }

    fn column_labels(&self) -> Vec<String> {
        self.unit_labels().to_vec()
    }

    fn n_rows(&self) -> usize {
        self.journal_ids().len()
    }

    fn row(&self, r: usize) -> (String, Vec<String>) {
        let cells = self.columns().iter().map(|c| c[r].to_string()).collect();
        (self.journal_ids()[r].to_string(), cells)
    }
}

/// Comma-separated with a label header row and the row key first; fields are
/// quoted only when needed.
pub fn write_csv_matrix<T: CsvTable + ?Sized, W: Write>(table: &T, sink: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(sink);
    let mut header = vec![table.key_header().to_owned()];
    header.extend(table.column_labels());
    out.write_record(&header)?;
    for r in 0..table.n_rows() {
        let (key, cells) = table.row(r);
        out.write_field(key)?;
        out.write_record(cells)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(labels: &[&str], kind: SimilarityKind, upper: &[(usize, usize, f64)], diag: f64) -> SimilarityMatrix {
        let mut m = SimilarityMatrix::zeros(labels.iter().map(|s| s.to_string()).collect(), kind);
        for k in 0..labels.len() {
            m.set_symmetric(k, k, diag);
        }
        for &(a, b, v) in upper {
            m.set_symmetric(a, b, v);
        }
        m
    }

    fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn vos_map_rows() {
        let overlay = OverlayMap {
            entries: vec![
                OverlayEntry { id: 1, label: "NATURE".into(), x: 0.5, y: -0.3, cluster: 4, weight: 310 },
                OverlayEntry { id: 2, label: "SCIENCE".into(), x: -0.00001, y: 2.0, cluster: 1, weight: 0 },
            ],
        };
        let text = render(|b| write_vos_map(&overlay, b));
        assert_eq!(
            text,
            "id\tlabel\tx\ty\tcluster\tweight\n1\tNATURE\t0.5000\t-0.3000\t4\t310\n2\tSCIENCE\t0.0000\t2.0000\t1\t0\n"
        );
        assert_eq!(render(|b| write_vos_map(&OverlayMap::default(), b)), "id\tlabel\tx\ty\tcluster\tweight\n");
    }

    #[test]
    fn vos_network_lines() {
        let two = sim(&["A", "B"], SimilarityKind::Cosine, &[(0, 1, 0.8)], 1.0);
        assert_eq!(render(|b| write_vos_network(&two, b)), "1\t2\t0.800000\n");
        let sparse = sim(&["A", "B", "C"], SimilarityKind::Cosine, &[(0, 2, 0.5)], 1.0);
        assert_eq!(render(|b| write_vos_network(&sparse, b)), "1\t3\t0.500000\n");
        let full = sim(&["A", "B", "C"], SimilarityKind::Cosine, &[(1, 2, 0.3), (0, 2, 0.2), (0, 1, 0.1)], 1.0);
        assert_eq!(
            render(|b| write_vos_network(&full, b)),
            "1\t2\t0.100000\n1\t3\t0.200000\n2\t3\t0.300000\n"
        );
    }

    #[test]
    fn pajek_example() {
        let m = sim(&["UvA", "Pfizer"], SimilarityKind::Cosine, &[(0, 1, 0.8)], 1.0);
        let text = render(|b| write_pajek(&m, b));
        assert_eq!(text, "*Vertices 2\n1 \"UvA\"\n2 \"Pfizer\"\n*Edges\n1 2 0.800000\n");

        let back = read_pajek(text.as_bytes(), SimilarityKind::Cosine).unwrap();
        assert_eq!(back.unit_labels, ["UvA", "Pfizer"]);
        assert_eq!(back.get(0, 1), 0.8);
        assert_eq!(back.get(1, 0), 0.8);
    }

    #[test]
    fn pajek_without_edges() {
        let m = sim(&["A", "B"], SimilarityKind::Cosine, &[], 1.0);
        assert_eq!(render(|b| write_pajek(&m, b)), "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Edges\n");
    }

    #[test]
    fn pajek_rejects_quotes() {
        let m = sim(&["A \"B\"", "C"], SimilarityKind::Cosine, &[], 1.0);
        assert!(matches!(write_pajek(&m, Vec::new()), Err(Error::InvalidLabel { .. })));
    }

    #[test]
    fn pajek_arcs_are_symmetrized() {
        let text = "*Vertices 2\n1 \"A\"\n2 \"B\"\n*Arcs\n1 2 3\n";
        let m = read_pajek(text.as_bytes(), SimilarityKind::Cooccurrence).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.kind, SimilarityKind::Cooccurrence);
    }

    #[test]
    fn pajek_errors_carry_line_numbers() {
        let out_of_range = "*Vertices 2\n1 \"A\"\n5 \"X\"\n*Edges\n";
        assert!(matches!(read_pajek(out_of_range.as_bytes(), SimilarityKind::Cosine), Err(Error::Parse { line: 3, .. })));
        let bad_header = "*Vertices two\n";
        assert!(matches!(read_pajek(bad_header.as_bytes(), SimilarityKind::Cosine), Err(Error::Parse { line: 1, .. })));
        let no_header = "1 \"A\"\n";
        assert!(matches!(read_pajek(no_header.as_bytes(), SimilarityKind::Cosine), Err(Error::Parse { line: 1, .. })));
        let bad_edge = "*Vertices 2\n*Edges\n1 3 1.0\n";
        assert!(matches!(read_pajek(bad_edge.as_bytes(), SimilarityKind::Cosine), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn pajek_tolerates_network_line_comments_and_bare_labels() {
        let text = "% generated elsewhere\r\n*Network demo\r\n*vertices 3\r\n1 Alpha 0.1 0.2\r\n3 \"Gamma ray\"\r\n*edges\r\n1 3\r\n";
        let m = read_pajek(text.as_bytes(), SimilarityKind::Cosine).unwrap();
        assert_eq!(m.unit_labels, ["Alpha", "2", "Gamma ray"]);
        assert_eq!(m.get(2, 0), 1.0);
    }

    #[test]
    fn ucinet_examples() {
        let co = sim(&["UvA", "Pfizer"], SimilarityKind::Cooccurrence, &[(0, 1, 4.0)], 5.0);
        assert_eq!(
            render(|b| write_ucinet_dl(&co, b)),
            "dl n=2 format=fullmatrix\nlabels:\nUvA,Pfizer\ndata:\n5 4\n4 5\n"
        );
        let cos = sim(&["A", "Beer Sheva"], SimilarityKind::Cosine, &[(0, 1, 0.25)], 1.0);
        assert_eq!(
            render(|b| write_ucinet_dl(&cos, b)),
            "dl n=2 format=fullmatrix\nlabels:\nA,\"Beer Sheva\"\ndata:\n1.000000 0.250000\n0.250000 1.000000\n"
        );
        let one = sim(&["Solo"], SimilarityKind::Cooccurrence, &[], 9.0);
        assert_eq!(render(|b| write_ucinet_dl(&one, b)), "dl n=1 format=fullmatrix\nlabels:\nSolo\ndata:\n9\n");
    }

    #[test]
    fn csv_similarity() {
        let m = sim(&["UvA", "Philips, NL"], SimilarityKind::Cosine, &[(0, 1, 0.5)], 1.0);
        assert_eq!(
            render(|b| write_csv_matrix(&m, b)),
            "unit,UvA,\"Philips, NL\"\nUvA,1.000000,0.500000\n\"Philips, NL\",0.500000,1.000000\n"
        );
    }

    #[test]
    fn csv_portfolio_matrix() {
        use crate::basemap::{BaseMap, JournalEntry, JournalId};
        use std::collections::BTreeMap;
        let entries = (1..=2)
            .map(|k| JournalEntry {
                id: JournalId(k * 10),
                full_title: format!("J{k}"),
                abbrev_title: String::new(),
                x: k as f64,
                y: 0.0,
                cluster: 0,
            })
            .collect();
        let map = BaseMap::from_entries(entries).unwrap();
        let mut pm = PortfolioMatrix::for_basemap(&map);
        let entries = BTreeMap::from([(JournalId(20), 7)]);
        pm.upsert_unit(&PortfolioDistribution {
            unit_label: "NL".into(),
            proportions: BTreeMap::from([(JournalId(20), 1.0)]),
            entries,
            matched_records: 7,
            total_records: 7,
            unmatched: vec![],
        })
        .unwrap();
        assert_eq!(render(|b| write_csv_matrix(&pm, b)), "journal_id,NL\n10,0\n20,7\n");
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pajek_round_trip(n in 1usize..8, raw in proptest::collection::vec(0.0f64..1.0, 28), labels in proptest::collection::vec("[A-Za-z][A-Za-z .,-]{0,12}", 8)) {
                let labels: Vec<String> = labels.into_iter().take(n).collect();
                let mut m = SimilarityMatrix::zeros(labels.clone(), SimilarityKind::Cosine);
                let mut k = 0;
                for a in 0..n {
                    for b in a + 1..n {
                        // roughly a third of the pairs stay at zero
                        let v = if raw[k] < 0.33 { 0.0 } else { raw[k] };
                        m.set_symmetric(a, b, v);
                        k += 1;
                    }
                }
                let mut buf = Vec::new();
                write_pajek(&m, &mut buf).unwrap();
                let back = read_pajek(&buf[..], SimilarityKind::Cosine).unwrap();
                prop_assert_eq!(&back.unit_labels, &labels);
                for a in 0..n {
                    for b in 0..n {
                        if a != b {
                            prop_assert!((back.get(a, b) - m.get(a, b)).abs() <= 1e-6);
                        }
                    }
                }
            }
        }
    }
}

//! Rao-Stirling diversity and its true-diversity transform.
//!
//! For a portfolio with proportions `p` over journals and pairwise
//! disparities `d` (normalized map distances),
//!
//! ```text
//! delta = sum over ordered pairs (i, j) of p_i * p_j * d_ij
//!       = 2 * sum over i < j of p_i * p_j * d_ij
//! D     = 1 / (1 - delta)
//! ```
//!
//! Only journals with a nonzero count take part in the pair loop, so the cost
//! is quadratic in the portfolio size rather than in the map size.

use std::io::{BufRead, Write};

use crate::basemap::BaseMap;
use crate::error::{Error, Result};
use crate::ingest::PortfolioDistribution;

/// Neumaier-compensated accumulator. Results depend on insertion order only,
/// so a fixed order gives bit-identical sums.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Rao-Stirling diversity of `dist` over `map`.
pub fn rao_stirling(dist: &PortfolioDistribution, map: &BaseMap) -> Result<f64> {
    if dist.proportions.is_empty() {
        return Err(Error::EmptyDistribution(dist.unit_label.clone()));
    }
    if map.diameter() == 0.0 {
        return Err(Error::DegenerateMap);
    }

    // (map position, point, p) in ascending map order.
    let mut nodes = Vec::with_capacity(dist.proportions.len());
    for (&id, &p) in &dist.proportions {
        let pos = map.position(id).ok_or(Error::UnknownJournal(id))?;
        let j = &map.journals()[pos];
        nodes.push((pos, j.point(), p));
    }
    nodes.sort_unstable_by_key(|n| n.0);

    let diameter = map.diameter();
    let mut acc = CompensatedSum::new();
    for (k, &(_, pi, wi)) in nodes.iter().enumerate() {
        for &(_, pj, wj) in &nodes[k + 1..] {
            acc.add(wi * wj * (pi.distance(pj) / diameter));
        }
    }
    Ok(2.0 * acc.value())
}

/// `1 / (1 - delta)`, defined for `delta` in `[0, 1)`.
pub fn true_diversity(delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(delta));
    }
    Ok(1.0 / (1.0 - delta))
}

/// Inverse of [`true_diversity`]: `1 - 1 / d`, for `d >= 1`.
pub fn delta_from_true_diversity(d: f64) -> Result<f64> {
    if !(d >= 1.0 && d.is_finite()) {
        return Err(Error::Domain(d));
    }
    Ok(1.0 - 1.0 / d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub unit_label: String,
    pub delta: f64,
    pub true_diversity: f64,
    pub n_journals: usize,
    pub matched_records: u64,
    pub total_records: u64,
    pub coverage: f64,
}

pub fn diversity_report(dist: &PortfolioDistribution, map: &BaseMap) -> Result<DiversityReport> {
    let delta = rao_stirling(dist, map)?;
    Ok(DiversityReport {
        unit_label: dist.unit_label.clone(),
        delta,
        true_diversity: true_diversity(delta)?,
        n_journals: dist.n_journals(),
        matched_records: dist.matched_records,
        total_records: dist.total_records,
        coverage: dist.coverage(),
    })
}

pub const DIVERSITY_LEDGER_HEADER: [&str; 7] = [
    "unit",
    "delta",
    "true_diversity",
    "n_journals",
    "matched_records",
    "total_records",
    "coverage",
];

/// Persistent per-unit diversity rows, keyed by unit label in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiversityLedger {
    pub rows: Vec<DiversityReport>,
}

impl DiversityLedger {
    /// Replaces the row with the same label, or appends.
    pub fn upsert(&mut self, report: DiversityReport) {
        match self.rows.iter_mut().find(|r| r.unit_label == report.unit_label) {
            Some(slot) => *slot = report,
            None => self.rows.push(report),
        }
    }

    pub fn get(&self, label: &str) -> Option<&DiversityReport> {
        self.rows.iter().find(|r| r.unit_label == label)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Tab-separated; reals use the shortest representation that round-trips.
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{}", DIVERSITY_LEDGER_HEADER.join("\t"))?;
        for r in &self.rows {
            writeln!(
                sink,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.unit_label, r.delta, r.true_diversity, r.n_journals, r.matched_records, r.total_records, r.coverage
            )?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut ledger = DiversityLedger::default();
        for (idx, line) in source.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            if lineno == 1 {
                if line.split('\t').ne(DIVERSITY_LEDGER_HEADER) {
                    return Err(Error::parse(lineno, "unexpected diversity ledger header"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != DIVERSITY_LEDGER_HEADER.len() {
                return Err(Error::parse(lineno, format!("expected 7 columns, found {}", f.len())));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(lineno, format!("invalid number {s:?}")));
            let int = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(lineno, format!("invalid integer {s:?}")));
            ledger.upsert(DiversityReport {
                unit_label: f[0].to_owned(),
                delta: real(f[1])?,
                true_diversity: real(f[2])?,
                n_journals: int(f[3])? as usize,
                matched_records: int(f[4])?,
                total_records: int(f[5])?,
                coverage: real(f[6])?,
            });
        }
        Ok(ledger)
    }
}

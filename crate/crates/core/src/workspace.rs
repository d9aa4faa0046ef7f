//! A directory holding the base map, the two ledgers and every generated
//! artifact, plus the commands that operate on it.
//!
//! Layout under the root:
//!
//! | file                 | content                                   |
//! |----------------------|-------------------------------------------|
//! | `basemap.tsv`        | default base map (overridable)            |
//! | `matrix.tsv`         | units x journals counts                   |
//! | `rao.tsv`            | one diversity row per unit                |
//! | `<label>.vos`        | per-unit overlay                          |
//! | `cosine.*`, `coocc.*`, `matrix.csv` | outputs of `compare`       |
//! | `.portfolio-outputs` | manifest of generated files, for `reset`  |
//! | `.portfolio.lock`    | present while a command mutates the root  |

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::basemap::{load_basemap, BaseMap};
use crate::diversity::{diversity_report, DiversityLedger, DiversityReport};
use crate::error::{Error, Result};
use crate::export::{write_csv_matrix, write_pajek, write_ucinet_dl, write_vos_map, write_vos_network, OverlayMap};
use crate::ingest::{match_portfolio, parse_analyze_export, PortfolioDistribution};
use crate::matrix::{cooccurrence_matrix, cosine_matrix, validate_label, PortfolioMatrix, SimilarityMatrix};

pub const BASEMAP_FILE: &str = "basemap.tsv";
pub const MATRIX_LEDGER: &str = "matrix.tsv";
pub const DIVERSITY_LEDGER: &str = "rao.tsv";
const MANIFEST: &str = ".portfolio-outputs";
const LOCK: &str = ".portfolio.lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareKind {
    Cosine,
    Cooccurrence,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    TrueDiversity,
    Delta,
    /// Matched records.
    N,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub report: DiversityReport,
    pub distribution: PortfolioDistribution,
    pub overlay_path: PathBuf,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
    pub basemap_path: PathBuf,
    pub matrix_ledger: PathBuf,
    pub diversity_ledger: PathBuf,
}

/// Exclusive hold on a workspace; released on drop.
#[derive(Debug)]
pub struct WorkspaceLock {
    path: PathBuf,
}

impl Drop for WorkspaceLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// File name used for a unit's overlay. Characters outside
/// `[A-Za-z0-9._-]` become `_`.
pub fn overlay_file_name(label: &str) -> String {
    let stem: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{stem}.vos")
}

fn write_atomically(path: &Path, render: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        render(&mut out)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>, basemap: Option<PathBuf>) -> Self {
        let root = root.into();
        Workspace {
            basemap_path: basemap.unwrap_or_else(|| root.join(BASEMAP_FILE)),
            matrix_ledger: root.join(MATRIX_LEDGER),
            diversity_ledger: root.join(DIVERSITY_LEDGER),
            root,
        }
    }

    pub fn lock(&self) -> Result<WorkspaceLock> {
        let path = self.root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WorkspaceLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(Error::Locked(path.display().to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load_basemap(&self) -> Result<BaseMap> {
        let f = File::open(&self.basemap_path).map_err(|e| {
            io::Error::new(e.kind(), format!("cannot open base map {}: {e}", self.basemap_path.display()))
        })?;
        load_basemap(BufReader::new(f))
    }

    /// The matrix ledger, or an empty matrix over `map` when none exists yet.
    pub fn load_matrix(&self, map: &BaseMap) -> Result<PortfolioMatrix> {
        match File::open(&self.matrix_ledger) {
            Ok(f) => PortfolioMatrix::read_ledger(BufReader::new(f), map),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(PortfolioMatrix::for_basemap(map)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load_diversity(&self) -> Result<DiversityLedger> {
        match File::open(&self.diversity_ledger) {
            Ok(f) => DiversityLedger::read(BufReader::new(f)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(DiversityLedger::default()),
            Err(e) => Err(e.into()),
        }
    }

    fn manifest(&self) -> Result<BTreeSet<String>> {
        match fs::read_to_string(self.root.join(MANIFEST)) {
            Ok(s) => Ok(s.lines().filter(|l| !l.is_empty()).map(str::to_owned).collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeSet::new()),
            Err(e) => Err(e.into()),
        }
    }

    fn record_outputs<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let mut set = self.manifest()?;
        set.extend(names.into_iter().map(str::to_owned));
        write_atomically(&self.root.join(MANIFEST), |out| {
            for name in &set {
                writeln!(out, "{name}")?;
            }
            Ok(())
        })
    }

    /// Profiles one unit: overlay file, matrix column and diversity row.
    pub fn analyze(&self, export: &Path, label: &str, min_coverage: f64) -> Result<AnalyzeOutcome> {
        validate_label(label)?;
        let _lock = self.lock()?;
        let map = self.load_basemap()?;
        let mut warnings: Vec<String> = map.warnings().to_vec();

        let raw = parse_analyze_export(File::open(export)?, label)?;
        let dist = match_portfolio(&raw, &map);
        if dist.coverage() < min_coverage {
            warnings.push(format!(
                "coverage {:.4} is below {min_coverage}: {} of {} records matched the base map",
                dist.coverage(),
                dist.matched_records,
                dist.total_records
            ));
        }
        let report = diversity_report(&dist, &map)?;

        let mut matrix = self.load_matrix(&map)?;
        let mut ledger = self.load_diversity()?;
        matrix.upsert_unit(&dist)?;
        ledger.upsert(report.clone());

        let overlay_name = overlay_file_name(label);
        let overlay_path = self.root.join(&overlay_name);
        let overlay = OverlayMap::from_portfolio(&map, &dist);
        write_atomically(&overlay_path, |out| write_vos_map(&overlay, out))?;
        self.record_outputs([overlay_name.as_str()])?;
        write_atomically(&self.matrix_ledger, |out| matrix.write_ledger(out))?;
        write_atomically(&self.diversity_ledger, |out| ledger.write(out))?;

        Ok(AnalyzeOutcome {
            report,
            distribution: dist,
            overlay_path,
            warnings,
        })
    }

    /// Writes similarity outputs for every unit in the matrix ledger and
    /// returns the paths written.
    pub fn compare(&self, kind: CompareKind) -> Result<Vec<PathBuf>> {
        let _lock = self.lock()?;
        let map = self.load_basemap()?;
        let matrix = self.load_matrix(&map)?;
        if matrix.n_units() < 2 {
            return Err(Error::TooFewUnits(matrix.n_units()));
        }

        let mut written: Vec<&'static str> = Vec::new();
        let units = OverlayMap::for_units(&matrix);
        let emit_pair = |sim: &SimilarityMatrix, prefix: &'static str, written: &mut Vec<&'static str>| -> Result<()> {
            let (map_name, net_name, csv_name) = match prefix {
                "cosine" => ("cosine_map.vos", "cosine_network.vos", "cosine.csv"),
                _ => ("coocc_map.vos", "coocc_network.vos", "coocc.csv"),
            };
            write_atomically(&self.root.join(map_name), |out| write_vos_map(&units, out))?;
            write_atomically(&self.root.join(net_name), |out| write_vos_network(sim, out))?;
            write_atomically(&self.root.join(csv_name), |out| write_csv_matrix(sim, out))?;
            written.extend([map_name, net_name, csv_name]);
            Ok(())
        };

        if matches!(kind, CompareKind::Cosine | CompareKind::Both) {
            let sim = cosine_matrix(&matrix)?;
            write_atomically(&self.root.join("cosine.net"), |out| write_pajek(&sim, out))?;
            written.push("cosine.net");
            emit_pair(&sim, "cosine", &mut written)?;
        }
        if matches!(kind, CompareKind::Cooccurrence | CompareKind::Both) {
            let sim = cooccurrence_matrix(&matrix)?;
            write_atomically(&self.root.join("coocc.dat"), |out| write_ucinet_dl(&sim, out))?;
            written.push("coocc.dat");
            emit_pair(&sim, "coocc", &mut written)?;
        }
        write_atomically(&self.root.join("matrix.csv"), |out| write_csv_matrix(&matrix, out))?;
        written.push("matrix.csv");

        self.record_outputs(written.iter().copied())?;
        Ok(written.into_iter().map(|n| self.root.join(n)).collect())
    }

    /// Diversity rows sorted descending by `key`, ties by label ascending.
    pub fn report(&self, key: SortKey, top: Option<usize>) -> Result<Vec<DiversityReport>> {
        let ledger = self.load_diversity()?;
        if ledger.is_empty() {
            return Err(Error::EmptyInput("empty ledger: run `portfolio analyze` first"));
        }
        Ok(rank(ledger.rows, key, top))
    }

    /// Removes both ledgers and every generated output. The base map and any
    /// file not produced by this tool are left alone.
    pub fn reset(&self) -> Result<Vec<PathBuf>> {
        let _lock = self.lock()?;
        let mut targets: Vec<PathBuf> = self.manifest()?.iter().map(|n| self.root.join(n)).collect();
        targets.push(self.matrix_ledger.clone());
        targets.push(self.diversity_ledger.clone());
        targets.push(self.root.join(MANIFEST));

        let mut removed = Vec::new();
        for path in targets {
            if path == self.basemap_path {
                continue;
            }
            match fs::remove_file(&path) {
                Ok(()) => removed.push(path),
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(removed)
    }
}

pub fn rank(mut rows: Vec<DiversityReport>, key: SortKey, top: Option<usize>) -> Vec<DiversityReport> {
    rows.sort_by(|a, b| {
        let primary = match key {
            SortKey::TrueDiversity => b.true_diversity.total_cmp(&a.true_diversity),
            SortKey::Delta => b.delta.total_cmp(&a.delta),
            SortKey::N => b.matched_records.cmp(&a.matched_records),
        };
        primary.then_with(|| a.unit_label.cmp(&b.unit_label))
    });
    if let Some(k) = top {
        rows.truncate(k);
    }
    rows
}

/// Aligned text table: unit, true diversity, Rao-Stirling, matched records.
pub fn render_report_table(rows: &[DiversityReport]) -> String {
    let headers = ["Unit", "2D^S", "Delta", "N"];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.unit_label.clone(),
                format!("{:.4}", r.true_diversity),
                format!("{:.4}", r.delta),
                r.matched_records.to_string(),
            ]
        })
        .collect();
    let mut widths = headers.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }

    let mut out = String::new();
    let mut line = |cells: [&str; 4]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            s.push_str(&format!("  {cell:>w$}"));
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(headers);
    for row in &body {
        line([&row[0], &row[1], &row[2], &row[3]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(label: &str, d: f64, n: u64) -> DiversityReport {
        DiversityReport {
            unit_label: label.into(),
            delta: 1.0 - 1.0 / d,
            true_diversity: d,
            n_journals: 1,
            matched_records: n,
            total_records: n,
            coverage: 1.0,
        }
    }

    #[test]
    fn ranking_contract() {
        let rows = vec![report("B", 1.20, 5), report("A", 1.48, 3), report("C", 1.20, 9)];
        let ranked = rank(rows.clone(), SortKey::TrueDiversity, None);
        let labels: Vec<_> = ranked.iter().map(|r| r.unit_label.as_str()).collect();
        assert_eq!(labels, ["A", "B", "C"]);
        assert_eq!(rank(rows.clone(), SortKey::TrueDiversity, Some(1)).len(), 1);
        assert_eq!(rank(rows, SortKey::N, None)[0].unit_label, "C");
    }

    #[test]
    fn table_is_aligned() {
        let table = render_report_table(&[report("Israel", 1.4809, 16237), report("USA", 1.4540, 553620)]);
        assert_eq!(
            table,
            "Unit      2D^S   Delta       N\n\
             Israel  1.4809  0.3247   16237\n\
             USA     1.4540  0.3122  553620\n"
        );
    }

    #[test]
    fn overlay_names() {
        assert_eq!(overlay_file_name("NL"), "NL.vos");
        assert_eq!(overlay_file_name("Univ. of Amsterdam"), "Univ._of_Amsterdam.vos");
        assert_eq!(overlay_file_name("a/b"), "a_b.vos");
    }
}

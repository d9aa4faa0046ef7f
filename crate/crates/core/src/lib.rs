//! Journal-portfolio analysis over a base map of journals.
//!
//! A unit of analysis (country, city, organization) is described by how its
//! publications spread over journals. Matching those counts onto a base map
//! with 2D journal coordinates gives an overlay, a Rao-Stirling diversity
//! score with map distance as disparity, and a column of a units x journals
//! matrix from which unit-to-unit cosine and co-occurrence matrices follow.
//!
//! ```
//! use portfolio_core::{basemap::load_basemap, diversity::diversity_report,
//!                      ingest::{match_portfolio, parse_analyze_text}};
//!
//! let map = load_basemap(
//!     "id\tfull_title\tabbrev_title\tx\ty\tcluster\n\
//!      1\tNATURE\tNATURE\t0\t0\t1\n\
//!      2\tPLOS ONE\tPLOS ONE\t1\t0\t1\n\
//!      3\tSCIENCE\tSCIENCE\t0\t1\t2\n".as_bytes(),
//! )?;
//! let raw = parse_analyze_text("NATURE\t2\nPlos One\t1\nScience\t1\n", "NL")?;
//! let report = diversity_report(&match_portfolio(&raw, &map), &map)?;
//! assert!((report.delta - 0.478553).abs() < 1e-6);
//! assert!((report.true_diversity - 1.917742).abs() < 1e-6);
//! # Ok::<(), portfolio_core::Error>(())
//! ```
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doctests of this crate.

pub mod basemap;
pub mod diversity;
pub mod error;
pub mod export;
pub mod geometry;
pub mod ingest;
pub mod matrix;
pub mod workspace;

pub use basemap::{load_basemap, BaseMap, JournalEntry, JournalId};
pub use diversity::{diversity_report, rao_stirling, true_diversity, DiversityReport};
pub use error::{Error, Result};
pub use ingest::{match_portfolio, normalize_title, parse_analyze_export, PortfolioDistribution, RawPortfolio};
pub use matrix::{cooccurrence_matrix, cosine_matrix, PortfolioMatrix, SimilarityKind, SimilarityMatrix};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basemap.md")]
    mod basemap {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/diversity.md")]
    mod diversity {}
    #[doc = include_str!("../../../book/src/matrices.md")]
    mod matrices {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

//! Star-history analysis for GitHub repositories.
//!
//! The library turns a snapshot of repositories and their timestamped star
//! events into popularity tiers, weekly rank trajectories, growth-pattern
//! labels, and correlation/quartile statistics, with deterministic CSV/JSON
//! report emission. Ingestion (GitHub REST, NPM registry) runs against an
//! injected transport so everything is testable offline.
//!
//! Data flows through the modules in pipeline order:
//!
//! ```text
//! github/npm  →  corpus (snapshot on disk)  →  trajectory  →  classifier
//!                                                    ↘      ↙
//!                                               stats, report
//! ```

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod github;
pub mod npm;
pub mod report;
pub mod stats;
pub mod time;
pub mod trajectory;
pub mod transport;

pub use classifier::{
    assign_tiers, classify_growth, CanonicalLabel, ClassificationConfig, GrowthLabelSet,
    GrowthPattern, PopularityTier, Tier,
};
pub use corpus::{
    open_snapshot, write_snapshot, FullName, RepoRecord, Snapshot, SnapshotManifest,
    SnapshotSource, StarEvent,
};
pub use error::{Error, Result};
pub use github::{BuildOutcome, CrawlFailure, FetchPolicy, GithubClient, StarHistory};
pub use npm::{NpmClient, PackageUsage};
pub use report::{analyze, correlate, write_reports, Analysis, AnalysisOptions, ReportBundle};
pub use stats::{quartiles_by_group, rank_star_curve, spearman, CorrelationResult, QuartileSummary};
pub use time::Timestamp;
pub use trajectory::{
    bucketize, eligibility, rank_corpus, Eligibility, IneligibleReason, RankTrajectory,
    WeeklyStarSeries,
};
pub use transport::{HttpRequest, HttpResponse, MockTransport, Pacer, SystemPacer, Transport};

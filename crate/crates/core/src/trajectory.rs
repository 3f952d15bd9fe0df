//! Weekly star series and log₂ rank trajectories.
//!
//! The analysis window is `weeks` fixed 7-day buckets counted backward from
//! the snapshot instant (no calendar/ISO weeks, no timezones). Week `w`
//! (1-based) covers the half-open interval
//!
//! ```text
//! [snapshot_at − (weeks+1−w)·7d, snapshot_at − (weeks−w)·7d)
//! ```
//!
//! so week `weeks` ends at the snapshot instant. Events earlier than week 1
//! count toward the baseline; an event stamped exactly at `snapshot_at`
//! belongs to the final week.

use std::collections::BTreeSet;
use std::fmt;

use crate::corpus::{FullName, RepoRecord, StarEvent};
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const SECONDS_PER_WEEK: i64 = 7 * 24 * 60 * 60;
/// Default window length: one year of weekly buckets.
pub const DEFAULT_WEEKS: usize = 52;

/// New-star counts per week for one repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeeklyStarSeries {
    pub repo: FullName,
    /// Stars earned strictly before week 1.
    pub baseline: u64,
    /// New stars per week, index 0 = week 1 (oldest), last = newest.
    pub weekly_new: Vec<u64>,
    /// Total stars at the end of the window: baseline + Σ weekly_new.
    pub total_at_new: u64,
}

impl WeeklyStarSeries {
    pub fn weeks(&self) -> usize {
        self.weekly_new.len()
    }

    /// Cumulative stars at the end of each week.
    pub fn cumulative(&self) -> Vec<u64> {
        let mut cum = Vec::with_capacity(self.weekly_new.len());
        let mut total = self.baseline;
        for &w in &self.weekly_new {
            total += w;
            cum.push(total);
        }
        cum
    }
}

/// Buckets a repo's star events into `weeks` weekly counts plus a baseline.
///
/// `events` must be sorted ascending with `starred_at ≤ snapshot_at`, all
/// tagged with `repo`. The week lower bound is inclusive: an event at exactly
/// `snapshot_at − 7d` lands in the final week, one at exactly
/// `snapshot_at − weeks·7d` in week 1.
pub fn bucketize(
    repo: &FullName,
    events: &[StarEvent],
    snapshot_at: Timestamp,
    weeks: usize,
) -> Result<WeeklyStarSeries> {
    if weeks < 2 {
        return Err(Error::Validation(format!(
            "window must span at least 2 weeks, got {weeks}"
        )));
    }
    let mut weekly_new = vec![0u64; weeks];
    let mut baseline = 0u64;
    let mut prev: Option<Timestamp> = None;
    for event in events {
        if &event.repo != repo {
            return Err(Error::Validation(format!(
                "event stream for {repo} contains event tagged {}",
                event.repo
            )));
        }
        if let Some(p) = prev {
            if event.starred_at < p {
                return Err(Error::Validation(format!(
                    "events for {repo} are not sorted by starred_at"
                )));
            }
        }
        prev = Some(event.starred_at);
        let age = snapshot_at.seconds_since(event.starred_at);
        if age < 0 {
            return Err(Error::Validation(format!(
                "event for {repo} at {} is after the snapshot instant {snapshot_at}",
                event.starred_at
            )));
        }
        if age > weeks as i64 * SECONDS_PER_WEEK {
            baseline += 1;
        } else if age == 0 {
            // the snapshot instant itself closes the final week
            weekly_new[weeks - 1] += 1;
        } else {
            // age ∈ (0, weeks·7d]; week = weeks+1 − ceil(age/7d), 1-based
            let week = weeks as u64 + 1 - (age as u64).div_ceil(SECONDS_PER_WEEK as u64);
            weekly_new[week as usize - 1] += 1;
        }
    }
    Ok(WeeklyStarSeries {
        repo: repo.clone(),
        baseline,
        total_at_new: baseline + weekly_new.iter().sum::<u64>(),
        weekly_new,
    })
}

/// Why a repository is excluded from trajectory analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IneligibleReason {
    /// Created less than `weeks` weeks before the snapshot.
    TooYoung { weeks: usize },
    /// Ingestion could not retrieve the full star history.
    IncompleteHistory,
}

impl fmt::Display for IneligibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IneligibleReason::TooYoung { weeks } => write!(f, "age < {weeks} weeks"),
            IneligibleReason::IncompleteHistory => f.write_str("incomplete history"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    Eligible,
    Ineligible(IneligibleReason),
}

impl Eligibility {
    pub fn is_eligible(&self) -> bool {
        matches!(self, Eligibility::Eligible)
    }
}

/// A repository enters the analysis only if its whole window is observable:
/// created at least `weeks` weeks before the snapshot, full history fetched.
/// Total function; age is checked first when both conditions fail.
pub fn eligibility(
    repo: &RepoRecord,
    history_complete: bool,
    snapshot_at: Timestamp,
    weeks: usize,
) -> Eligibility {
    let window_start = snapshot_at.minus_seconds(weeks as i64 * SECONDS_PER_WEEK);
    if repo.created_at > window_start {
        Eligibility::Ineligible(IneligibleReason::TooYoung { weeks })
    } else if !history_complete {
        Eligibility::Ineligible(IneligibleReason::IncompleteHistory)
    } else {
        Eligibility::Eligible
    }
}

/// Per-week ranks of one repository on a log₂ scale.
///
/// `r[t]` = log₂(integer rank in week t+1) + 1, so the corpus leader scores
/// exactly 1 and the last of N scores log₂(N)+1.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTrajectory {
    pub repo: FullName,
    pub r: Vec<f64>,
    /// Rank at the start of the window (week 1).
    pub r_old: f64,
    /// Rank at the end of the window (final week).
    pub r_now: f64,
    /// Best (smallest) rank over the window.
    pub r_top: f64,
    /// Worst (largest) rank over the window.
    pub r_bottom: f64,
}

impl RankTrajectory {
    /// Derives the summary fields from a full rank series.
    pub fn from_series(repo: FullName, r: Vec<f64>) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::Validation(format!(
                "rank trajectory for {repo} needs at least 2 weeks, got {}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "rank trajectory for {repo} contains a non-finite value"
            )));
        }
        let r_old = r[0];
        let r_now = r[r.len() - 1];
        let r_top = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_bottom = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(RankTrajectory {
            repo,
            r,
            r_old,
            r_now,
            r_top,
            r_bottom,
        })
    }
}

/// Ranks every repo against the corpus for each week of the window.
///
/// Week ranks order repos by cumulative stars descending, ties broken by
/// full name ascending, so ranks are a permutation of 1..N each week and the
/// result is independent of input order. Output is sorted by full name.
pub fn rank_corpus(series_set: &[WeeklyStarSeries]) -> Result<Vec<RankTrajectory>> {
    if series_set.is_empty() {
        return Err(Error::Validation(
            "rank_corpus needs at least one series".to_string(),
        ));
    }
    let weeks = series_set[0].weeks();
    let mut seen = BTreeSet::new();
    for series in series_set {
        if series.weeks() != weeks {
            return Err(Error::Validation(format!(
                "window length mismatch: {} has {} weeks, {} has {}",
                series_set[0].repo,
                weeks,
                series.repo,
                series.weeks()
            )));
        }
        if !seen.insert(&series.repo) {
            return Err(Error::Validation(format!(
                "duplicate series for {}",
                series.repo
            )));
        }
    }

    let n = series_set.len();
    let mut cum: Vec<u64> = series_set.iter().map(|s| s.baseline).collect();
    let mut r: Vec<Vec<f64>> = vec![Vec::with_capacity(weeks); n];
    let mut order: Vec<usize> = (0..n).collect();
    for t in 0..weeks {
        for (c, s) in cum.iter_mut().zip(series_set) {
            *c += s.weekly_new[t];
        }
        order.sort_by(|&a, &b| {
            cum[b]
                .cmp(&cum[a])
                .then_with(|| series_set[a].repo.cmp(&series_set[b].repo))
        });
        for (pos, &i) in order.iter().enumerate() {
            r[i].push(((pos + 1) as f64).log2() + 1.0);
        }
    }

    let mut trajectories = Vec::with_capacity(n);
    for (series, r) in series_set.iter().zip(r) {
        trajectories.push(RankTrajectory::from_series(series.repo.clone(), r)?);
    }
    trajectories.sort_by(|a, b| a.repo.cmp(&b.repo));
    Ok(trajectories)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    fn name(s: &str) -> FullName {
        FullName::new(s).unwrap()
    }

    fn event_at(repo: &FullName, at: Timestamp) -> StarEvent {
        StarEvent {
            repo: repo.clone(),
            starred_at: at,
        }
    }

    const SNAP: &str = "2015-05-04T00:00:00Z";

    fn bucket_one(seconds_before_snapshot: i64) -> WeeklyStarSeries {
        let repo = name("a/x");
        let snap = ts(SNAP);
        let events = vec![event_at(&repo, snap.minus_seconds(seconds_before_snapshot))];
        bucketize(&repo, &events, snap, 52).unwrap()
    }

    #[test]
    fn final_week_boundaries() {
        // one second before the snapshot
        let s = bucket_one(1);
        assert_eq!(s.weekly_new[51], 1);
        assert_eq!(s.baseline, 0);
        // exactly seven days before: lower bound of the final week, inclusive
        let s = bucket_one(7 * 86_400);
        assert_eq!(s.weekly_new[51], 1);
        // seven days and one second: previous week
        let s = bucket_one(7 * 86_400 + 1);
        assert_eq!(s.weekly_new[50], 1);
        // the snapshot instant itself closes the final week
        let s = bucket_one(0);
        assert_eq!(s.weekly_new[51], 1);
    }

    #[test]
    fn window_start_boundaries() {
        // exactly 52 weeks before: first instant of week 1
        let s = bucket_one(52 * 7 * 86_400);
        assert_eq!(s.weekly_new[0], 1);
        assert_eq!(s.baseline, 0);
        // one second earlier: baseline
        let s = bucket_one(52 * 7 * 86_400 + 1);
        assert_eq!(s.baseline, 1);
        assert_eq!(s.weekly_new.iter().sum::<u64>(), 0);
        // 365 days is outside a 364-day window
        let s = bucket_one(365 * 86_400);
        assert_eq!(s.baseline, 1);
    }

    #[test]
    fn totals_are_conserved() {
        let repo = name("a/x");
        let snap = ts(SNAP);
        let offsets = [0, 1, 86_400, 604_800, 604_801, 10_000_000, 40_000_000];
        let mut events: Vec<StarEvent> = offsets
            .iter()
            .map(|&s| event_at(&repo, snap.minus_seconds(s)))
            .collect();
        events.sort_by_key(|e| e.starred_at);
        let series = bucketize(&repo, &events, snap, 52).unwrap();
        assert_eq!(
            series.baseline + series.weekly_new.iter().sum::<u64>(),
            offsets.len() as u64
        );
        assert_eq!(series.total_at_new, offsets.len() as u64);
    }

    #[test]
    fn unsorted_events_rejected() {
        let repo = name("a/x");
        let snap = ts(SNAP);
        let events = vec![
            event_at(&repo, snap.minus_seconds(10)),
            event_at(&repo, snap.minus_seconds(20)),
        ];
        let err = bucketize(&repo, &events, snap, 52).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn future_event_rejected() {
        let repo = name("a/x");
        let snap = ts(SNAP);
        let events = vec![event_at(&repo, snap.minus_seconds(-5))];
        assert!(bucketize(&repo, &events, snap, 52).is_err());
    }

    fn record(created: &str) -> RepoRecord {
        RepoRecord {
            full_name: name("a/x"),
            language: "Rust".to_string(),
            stars_at_snapshot: 1,
            forks_at_snapshot: 0,
            created_at: ts(created),
            fetched_at: ts(SNAP),
        }
    }

    #[test]
    fn eligibility_cases() {
        let snap = ts(SNAP);
        // two years old, complete history
        let old = record("2013-05-04T00:00:00Z");
        assert!(eligibility(&old, true, snap, 52).is_eligible());
        // ten weeks old
        let young = record("2015-02-23T00:00:00Z");
        match eligibility(&young, true, snap, 52) {
            Eligibility::Ineligible(reason) => assert_eq!(reason.to_string(), "age < 52 weeks"),
            other => panic!("expected ineligible, got {other:?}"),
        }
        // truncated history
        match eligibility(&old, false, snap, 52) {
            Eligibility::Ineligible(reason) => {
                assert_eq!(reason.to_string(), "incomplete history")
            }
            other => panic!("expected ineligible, got {other:?}"),
        }
        // created exactly at the window start is old enough
        let edge = record("2014-05-05T00:00:00Z");
        assert!(eligibility(&edge, true, snap, 52).is_eligible());
    }

    fn series(full_name: &str, baseline: u64, weekly: &[u64]) -> WeeklyStarSeries {
        WeeklyStarSeries {
            repo: name(full_name),
            baseline,
            weekly_new: weekly.to_vec(),
            total_at_new: baseline + weekly.iter().sum::<u64>(),
        }
    }

    #[test]
    fn constant_leader_ranks_one_everywhere() {
        let corpus = vec![
            series("a/lead", 100, &[5, 5, 5, 5]),
            series("b/mid", 50, &[1, 1, 1, 1]),
            series("c/tail", 10, &[0, 0, 0, 0]),
        ];
        let trajectories = rank_corpus(&corpus).unwrap();
        let lead = &trajectories[0];
        assert_eq!(lead.repo.as_str(), "a/lead");
        assert!(lead.r.iter().all(|&v| v == 1.0));
        assert_eq!(lead.r_old, 1.0);
        assert_eq!(lead.r_now, 1.0);
        // place 2 → log2(2)+1 = 2, place 3 → log2(3)+1
        assert_eq!(trajectories[1].r[0], 2.0);
        let third = 3.0f64.log2() + 1.0;
        assert!((trajectories[2].r[0] - third).abs() < 1e-15);
    }

    #[test]
    fn ties_break_by_full_name() {
        let corpus = vec![series("b/y", 10, &[0, 0]), series("a/x", 10, &[0, 0])];
        let trajectories = rank_corpus(&corpus).unwrap();
        assert_eq!(trajectories[0].repo.as_str(), "a/x");
        assert_eq!(trajectories[0].r, vec![1.0, 1.0]);
        assert_eq!(trajectories[1].repo.as_str(), "b/y");
        assert_eq!(trajectories[1].r, vec![2.0, 2.0]);
    }

    #[test]
    fn result_ignores_input_order() {
        let a = series("a/x", 3, &[9, 0, 4]);
        let b = series("b/y", 7, &[1, 1, 8]);
        let c = series("c/z", 0, &[2, 20, 0]);
        let fwd = rank_corpus(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let rev = rank_corpus(&[c, b, a]).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn summary_fields_track_extremes() {
        // ranks: week1 place 1, week2 place 2, week3 place 1
        let corpus = vec![series("a/x", 10, &[0, 0, 10]), series("b/y", 5, &[0, 7, 0])];
        let trajectories = rank_corpus(&corpus).unwrap();
        let a = &trajectories[0];
        assert_eq!(a.r_old, 1.0);
        assert_eq!(a.r_now, 1.0);
        assert_eq!(a.r_top, 1.0);
        assert_eq!(a.r_bottom, 2.0);
    }

    #[test]
    fn empty_and_mismatched_corpora_rejected() {
        assert!(rank_corpus(&[]).is_err());
        let bad = vec![series("a/x", 0, &[1, 2]), series("b/y", 0, &[1, 2, 3])];
        assert!(rank_corpus(&bad).is_err());
        let dup = vec![series("a/x", 0, &[1, 2]), series("a/x", 0, &[3, 4])];
        assert!(rank_corpus(&dup).is_err());
    }
}

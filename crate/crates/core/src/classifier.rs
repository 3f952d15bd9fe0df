//! Popularity tiers and growth-pattern labels.
//!
//! Tiers slice the corpus by star count at the snapshot (top 10% popular,
//! top 0.1% very popular by default). Growth patterns test four predicates
//! on a repo's rank trajectory and weekly series:
//!
//! * sustainable — rank varies less than `sustainable_band` over the window
//! * fast — rank improves by more than `shift_threshold` and does not worsen
//!   in at least `monotone_fraction` of week-to-week transitions
//! * slow — the mirror image (rank decays)
//! * viral — more than `viral_fraction` of all stars arrive in one week
//!
//! The predicates are not mutually exclusive (viral can ride on fast), so
//! results carry the full matched set plus one canonical label chosen by
//! precedence viral > fast > slow > sustainable.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::corpus::RepoRecord;
use crate::error::{Error, Result};
use crate::trajectory::{RankTrajectory, WeeklyStarSeries};

/// Thresholds for tier and growth classification. Defaults reproduce the
/// standard analysis; every field can be overridden from the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationConfig {
    /// Max rank variation (log₂ points) counted as flat.
    pub sustainable_band: f64,
    /// Min rank shift (log₂ points) counted as fast/slow movement.
    pub shift_threshold: f64,
    /// Min fraction of week transitions that must not move against the trend.
    pub monotone_fraction: f64,
    /// Strict lower bound on single-week share of total stars.
    pub viral_fraction: f64,
    /// Slice of the corpus counted popular.
    pub popular_fraction: f64,
    /// Slice counted very popular; must not exceed `popular_fraction`.
    pub very_popular_fraction: f64,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        ClassificationConfig {
            sustainable_band: 0.25,
            shift_threshold: 1.0,
            monotone_fraction: 0.90,
            viral_fraction: 0.5,
            popular_fraction: 0.10,
            very_popular_fraction: 0.001,
        }
    }
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sustainable_band", self.sustainable_band),
            ("shift_threshold", self.shift_threshold),
            ("monotone_fraction", self.monotone_fraction),
            ("viral_fraction", self.viral_fraction),
            ("popular_fraction", self.popular_fraction),
            ("very_popular_fraction", self.very_popular_fraction),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Validation(format!(
                    "{field} must be positive and finite, got {value}"
                )));
            }
        }
        let at_most_one = [
            ("monotone_fraction", self.monotone_fraction),
            ("viral_fraction", self.viral_fraction),
            ("popular_fraction", self.popular_fraction),
            ("very_popular_fraction", self.very_popular_fraction),
        ];
        for (field, value) in at_most_one {
            if value > 1.0 {
                return Err(Error::Validation(format!(
                    "{field} must not exceed 1, got {value}"
                )));
            }
        }
        if self.very_popular_fraction > self.popular_fraction {
            return Err(Error::Validation(format!(
                "very_popular_fraction {} exceeds popular_fraction {}",
                self.very_popular_fraction, self.popular_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthPattern {
    Sustainable,
    Fast,
    Slow,
    Viral,
}

impl fmt::Display for GrowthPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthPattern::Sustainable => "sustainable",
            GrowthPattern::Fast => "fast",
            GrowthPattern::Slow => "slow",
            GrowthPattern::Viral => "viral",
        })
    }
}

/// Canonical single label: the highest-precedence matched pattern, or
/// `Other` when nothing matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CanonicalLabel {
    Sustainable,
    Fast,
    Slow,
    Viral,
    Other,
}

impl fmt::Display for CanonicalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CanonicalLabel::Sustainable => "sustainable",
            CanonicalLabel::Fast => "fast",
            CanonicalLabel::Slow => "slow",
            CanonicalLabel::Viral => "viral",
            CanonicalLabel::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthLabelSet {
    pub matched: BTreeSet<GrowthPattern>,
    pub canonical: CanonicalLabel,
}

/// Tests the four growth predicates against one repo's trajectory.
///
/// `traj` and `series` must describe the same repo over the same window.
/// A repo with no stars at all is never viral.
pub fn classify_growth(
    traj: &RankTrajectory,
    series: &WeeklyStarSeries,
    cfg: &ClassificationConfig,
) -> Result<GrowthLabelSet> {
    cfg.validate()?;
    if traj.repo != series.repo {
        return Err(Error::Validation(format!(
            "trajectory is for {} but series is for {}",
            traj.repo, series.repo
        )));
    }
    if traj.r.len() != series.weeks() {
        return Err(Error::Validation(format!(
            "{}: trajectory spans {} weeks but series spans {}",
            traj.repo,
            traj.r.len(),
            series.weeks()
        )));
    }

    let transitions = (traj.r.len() - 1) as f64;
    let mut non_worsening = 0u32;
    let mut non_improving = 0u32;
    for pair in traj.r.windows(2) {
        if pair[1] <= pair[0] {
            non_worsening += 1;
        }
        if pair[1] >= pair[0] {
            non_improving += 1;
        }
    }

    let mut matched = BTreeSet::new();
    if traj.r_bottom - traj.r_top < cfg.sustainable_band {
        matched.insert(GrowthPattern::Sustainable);
    }
    if traj.r_old - traj.r_now > cfg.shift_threshold
        && f64::from(non_worsening) / transitions >= cfg.monotone_fraction
    {
        matched.insert(GrowthPattern::Fast);
    }
    if traj.r_now - traj.r_old > cfg.shift_threshold
        && f64::from(non_improving) / transitions >= cfg.monotone_fraction
    {
        matched.insert(GrowthPattern::Slow);
    }
    if series.total_at_new > 0 {
        let peak = *series.weekly_new.iter().max().expect("weeks >= 2") as f64;
        if peak / series.total_at_new as f64 > cfg.viral_fraction {
            matched.insert(GrowthPattern::Viral);
        }
    }

    let canonical = [
        GrowthPattern::Viral,
        GrowthPattern::Fast,
        GrowthPattern::Slow,
        GrowthPattern::Sustainable,
    ]
    .into_iter()
    .find(|p| matched.contains(p))
    .map_or(CanonicalLabel::Other, |p| match p {
        GrowthPattern::Sustainable => CanonicalLabel::Sustainable,
        GrowthPattern::Fast => CanonicalLabel::Fast,
        GrowthPattern::Slow => CanonicalLabel::Slow,
        GrowthPattern::Viral => CanonicalLabel::Viral,
    });

    Ok(GrowthLabelSet { matched, canonical })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    VeryPopular,
    Popular,
    Ordinary,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::VeryPopular => "very-popular",
            Tier::Popular => "popular",
            Tier::Ordinary => "ordinary",
        })
    }
}

/// A repo's tier and the star cut that produced it: the very-popular cut for
/// very-popular rows, otherwise the popular cut (0 when the popular set is
/// empty).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PopularityTier {
    pub tier: Tier,
    pub threshold_stars: u64,
}

/// Assigns a popularity tier to each repo, returned in input order.
///
/// Repos are ordered by stars descending (full-name tie-break); the top
/// `floor(popular_fraction·N)` are popular and the top
/// `floor(very_popular_fraction·N)` very popular. Each threshold is the star
/// count of the last repo inside its set.
pub fn assign_tiers(
    repos: &[RepoRecord],
    cfg: &ClassificationConfig,
) -> Result<Vec<PopularityTier>> {
    cfg.validate()?;
    if repos.is_empty() {
        return Err(Error::Validation(
            "assign_tiers needs at least one repo".to_string(),
        ));
    }
    let n = repos.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        repos[b]
            .stars_at_snapshot
            .cmp(&repos[a].stars_at_snapshot)
            .then_with(|| repos[a].full_name.cmp(&repos[b].full_name))
    });

    let popular_count = (cfg.popular_fraction * n as f64).floor() as usize;
    let very_count = (cfg.very_popular_fraction * n as f64).floor() as usize;
    let popular_cut = popular_count
        .checked_sub(1)
        .map_or(0, |i| repos[order[i]].stars_at_snapshot);
    let very_cut = very_count
        .checked_sub(1)
        .map_or(0, |i| repos[order[i]].stars_at_snapshot);

    let mut tiers = vec![
        PopularityTier {
            tier: Tier::Ordinary,
            threshold_stars: popular_cut,
        };
        n
    ];
    for (pos, &i) in order.iter().enumerate() {
        if pos < very_count {
            tiers[i] = PopularityTier {
                tier: Tier::VeryPopular,
                threshold_stars: very_cut,
            };
        } else if pos < popular_count {
            tiers[i] = PopularityTier {
                tier: Tier::Popular,
                threshold_stars: popular_cut,
            };
        }
    }
    Ok(tiers)
}

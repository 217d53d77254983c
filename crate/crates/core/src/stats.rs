//! One-way ANOVA, Levene homogeneity tests and Fisher LSD comparisons.
//!
//! Everything here is generic over [`Scalar`]; the crate root exposes
//! `f64` aliases for the common case.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::special::{f_survival, t_two_sided, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite value in group `{0}`")]
    NonFinite(String),
    #[error("ANOVA result does not belong to these groups: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSamples<T> {
    pub label: String,
    pub values: Vec<T>,
}

impl<T: Scalar> GroupSamples<T> {
    pub fn new(label: impl Into<String>, values: Vec<T>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    fn mean(&self) -> T {
        mean(&self.values)
    }
}

/// Descriptive statistics of one group, as used by the summary-based routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary<T> {
    pub label: String,
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (n - 1 denominator); NaN when n = 1.
    pub sd: T,
    pub se: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult<T> {
    pub ss_between: T,
    pub ss_within: T,
    pub ss_total: T,
    pub df_between: usize,
    pub df_within: usize,
    pub ms_between: T,
    pub ms_within: T,
    pub f_statistic: T,
    pub p_value: T,
    /// Set when the within-group sum of squares vanishes and F is not a
    /// proper ratio (0 when nothing varies, +inf when only group means differ).
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeveneCenter {
    Mean,
    Median,
    /// Median-centred with a Satterthwaite-style correction of the
    /// within-groups degrees of freedom.
    MedianAdjustedDf,
}

impl LeveneCenter {
    pub const ALL: [LeveneCenter; 3] = [Self::Mean, Self::Median, Self::MedianAdjustedDf];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeveneResult<T> {
    pub center: LeveneCenter,
    pub statistic: T,
    pub df: usize,
    pub df_within: usize,
    /// Equals `df_within` except for [`LeveneCenter::MedianAdjustedDf`].
    pub adjusted_df_within: T,
    pub p_value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison<T> {
    pub group_a: String,
    pub group_b: String,
    pub mean_difference: T,
    pub std_error: T,
    pub p_value: T,
    pub significant_at_0_05: bool,
}

fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, &v| acc + v) / T::from_len(values.len())
}

fn median<T: Scalar>(values: &[T]) -> T {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) * T::lit(0.5)
    }
}

fn validate<T: Scalar>(groups: &[GroupSamples<T>]) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::InsufficientData(format!(
                "group `{}` has {} value(s), need at least 2",
                g.label,
                g.values.len()
            )));
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(g.label.clone()));
        }
    }
    Ok(())
}

/// Mean, sample standard deviation and standard error per group.
pub fn summarize_groups<T: Scalar>(
    groups: &[GroupSamples<T>],
) -> Result<Vec<GroupSummary<T>>, StatsError> {
    groups
        .iter()
        .map(|g| {
            if g.values.is_empty() {
                return Err(StatsError::InsufficientData(format!("group `{}` is empty", g.label)));
            }
            let n = g.values.len();
            let m = g.mean();
            let sd = if n > 1 {
                let ss = g.values.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
                (ss / T::from_len(n - 1)).sqrt()
            } else {
                T::nan()
            };
            Ok(GroupSummary {
                label: g.label.clone(),
                n,
                mean: m,
                sd,
                se: sd / T::from_len(n).sqrt(),
            })
        })
        .collect()
}

fn finish_anova<T: Scalar>(
    ss_between: T,
    ss_within: T,
    ss_total: T,
    groups: usize,
    observations: usize,
    scale: T,
) -> Result<AnovaResult<T>, StatsError> {
    let df_between = groups - 1;
    let df_within = observations - groups;
    let ms_between = ss_between / T::from_len(df_between);
    let ms_within = ss_within / T::from_len(df_within);

    // Anything below accumulated rounding noise counts as zero.
    let noise = T::epsilon() * T::lit(64.0) * scale.max(T::min_positive_value());
    let (f_statistic, p_value, degenerate) = if ss_within <= noise {
        if ss_between <= noise {
            (T::zero(), T::one(), true)
        } else {
            (T::infinity(), T::zero(), true)
        }
    } else {
        let f = ms_between / ms_within;
        let p = f_survival(f, T::from_len(df_between), T::from_len(df_within))?;
        (f, p, false)
    };

    Ok(AnovaResult {
        ss_between,
        ss_within,
        ss_total,
        df_between,
        df_within,
        ms_between,
        ms_within,
        f_statistic,
        p_value,
        degenerate,
    })
}

/// Fixed-effects one-way ANOVA.
pub fn one_way_anova<T: Scalar>(groups: &[GroupSamples<T>]) -> Result<AnovaResult<T>, StatsError> {
    validate(groups)?;
    let observations: usize = groups.iter().map(|g| g.values.len()).sum();
    let all = groups.iter().flat_map(|g| g.values.iter().copied());
    let grand = all.clone().fold(T::zero(), |acc, v| acc + v) / T::from_len(observations);

    let mut ss_between = T::zero();
    let mut ss_within = T::zero();
    for g in groups {
        let m = g.mean();
        ss_between = ss_between + T::from_len(g.values.len()) * (m - grand) * (m - grand);
        ss_within = g.values.iter().fold(ss_within, |acc, &v| acc + (v - m) * (v - m));
    }
    let ss_total = all.clone().fold(T::zero(), |acc, v| acc + (v - grand) * (v - grand));
    let scale = all.fold(T::zero(), |acc, v| acc + v * v);
    finish_anova(ss_between, ss_within, ss_total, groups.len(), observations, scale)
}

/// One-way ANOVA reconstructed from group sizes, means and standard deviations.
pub fn one_way_anova_from_summaries<T: Scalar>(
    summaries: &[GroupSummary<T>],
) -> Result<AnovaResult<T>, StatsError> {
    if summaries.len() < 2 {
        return Err(StatsError::InsufficientData("need at least 2 groups".into()));
    }
    if let Some(s) = summaries.iter().find(|s| s.n < 2) {
        return Err(StatsError::InsufficientData(format!(
            "group `{}` has n = {}, need at least 2",
            s.label, s.n
        )));
    }
    let observations: usize = summaries.iter().map(|s| s.n).sum();
    let grand = summaries
        .iter()
        .fold(T::zero(), |acc, s| acc + T::from_len(s.n) * s.mean)
        / T::from_len(observations);
    let ss_between = summaries.iter().fold(T::zero(), |acc, s| {
        acc + T::from_len(s.n) * (s.mean - grand) * (s.mean - grand)
    });
    let ss_within = summaries
        .iter()
        .fold(T::zero(), |acc, s| acc + T::from_len(s.n - 1) * s.sd * s.sd);
    let scale = summaries.iter().fold(T::zero(), |acc, s| {
        acc + T::from_len(s.n) * (s.mean * s.mean + s.sd * s.sd)
    });
    finish_anova(
        ss_between,
        ss_within,
        ss_between + ss_within,
        summaries.len(),
        observations,
        scale,
    )
}

/// Levene's test: ANOVA on absolute deviations from each group's center.
pub fn levene_test<T: Scalar>(
    groups: &[GroupSamples<T>],
    center: LeveneCenter,
) -> Result<LeveneResult<T>, StatsError> {
    validate(groups)?;
    let deviations: Vec<GroupSamples<T>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                LeveneCenter::Mean => g.mean(),
                LeveneCenter::Median | LeveneCenter::MedianAdjustedDf => median(&g.values),
            };
            GroupSamples::new(g.label.clone(), g.values.iter().map(|&v| (v - c).abs()).collect())
        })
        .collect();
    let anova = one_way_anova(&deviations)?;

    let mut adjusted_df_within = T::from_len(anova.df_within);
    let mut p_value = anova.p_value;
    if center == LeveneCenter::MedianAdjustedDf {
        // df = (Σ u_i)^2 / Σ (u_i^2 / (n_i - 1)),  u_i = (n_i - 1) var_i(z)
        let (num, den) = deviations.iter().fold((T::zero(), T::zero()), |(num, den), g| {
            let m = g.mean();
            let u = g.values.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
            let k = T::from_len(g.values.len() - 1);
            (num + u, den + u * u / k)
        });
        if den > T::zero() {
            adjusted_df_within = num * num / den;
            if !anova.degenerate {
                p_value = f_survival(
                    anova.f_statistic,
                    T::from_len(anova.df_between),
                    adjusted_df_within,
                )?;
            }
        }
    }

    Ok(LeveneResult {
        center,
        statistic: anova.f_statistic,
        df: anova.df_between,
        df_within: anova.df_within,
        adjusted_df_within,
        p_value,
    })
}

/// Fisher's least significant difference comparisons for every unordered pair.
pub fn pairwise_lsd<T: Scalar>(
    groups: &[GroupSamples<T>],
    anova: &AnovaResult<T>,
) -> Result<Vec<PairwiseComparison<T>>, StatsError> {
    validate(groups)?;
    let observations: usize = groups.iter().map(|g| g.values.len()).sum();
    if anova.df_between + 1 != groups.len() || anova.df_within + groups.len() != observations {
        return Err(StatsError::Mismatch(format!(
            "df ({}, {}) vs {} groups / {} observations",
            anova.df_between,
            anova.df_within,
            groups.len(),
            observations
        )));
    }
    let summaries = summarize_groups(groups)?;
    pairwise_lsd_from_summaries(&summaries, anova.ms_within, anova.df_within)
}

/// LSD comparisons from group summaries and a pooled within-groups mean square.
pub fn pairwise_lsd_from_summaries<T: Scalar>(
    summaries: &[GroupSummary<T>],
    ms_within: T,
    df_within: usize,
) -> Result<Vec<PairwiseComparison<T>>, StatsError> {
    if df_within == 0 {
        return Err(StatsError::InsufficientData("df_within is 0".into()));
    }
    let alpha = T::lit(0.05);
    let mut out = Vec::with_capacity(summaries.len() * summaries.len().saturating_sub(1) / 2);
    for (i, a) in summaries.iter().enumerate() {
        for b in &summaries[i + 1..] {
            let mean_difference = a.mean - b.mean;
            let std_error = (ms_within
                * (T::one() / T::from_len(a.n) + T::one() / T::from_len(b.n)))
            .sqrt();
            let p_value = if std_error > T::zero() {
                t_two_sided(mean_difference / std_error, T::from_len(df_within))?
            } else if mean_difference == T::zero() {
                T::one()
            } else {
                T::zero()
            };
            out.push(PairwiseComparison {
                group_a: a.label.clone(),
                group_b: b.label.clone(),
                mean_difference,
                std_error,
                p_value,
                significant_at_0_05: p_value < alpha,
            });
        }
    }
    Ok(out)
}

/// A published ANOVA table, checked for internal consistency by [`audit_reported_anova`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedAnova {
    pub ss_between: f64,
    pub df_between: usize,
    pub ms_between: f64,
    pub ss_within: f64,
    pub df_within: usize,
    pub ms_within: f64,
    #[serde(default)]
    pub ss_total: Option<f64>,
    #[serde(default)]
    pub f_statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconsistency {
    pub field: String,
    pub printed: f64,
    pub expected: f64,
    pub basis: String,
}

/// Flag printed ANOVA values that disagree with their own table or with a
/// reconstruction by more than `rel_tol` (relative).
pub fn audit_reported_anova<T: Scalar>(
    reported: &ReportedAnova,
    reconstructed: Option<&AnovaResult<T>>,
    rel_tol: f64,
) -> Vec<Inconsistency> {
    let mut out = Vec::new();
    let mut check = |field: &str, printed: f64, expected: f64, basis: &str| {
        let scale = printed.abs().max(expected.abs()).max(f64::MIN_POSITIVE);
        if (printed - expected).abs() / scale > rel_tol {
            out.push(Inconsistency {
                field: field.to_string(),
                printed,
                expected,
                basis: basis.to_string(),
            });
        }
    };

    check(
        "ss_between",
        reported.ss_between,
        reported.df_between as f64 * reported.ms_between,
        "df_between x ms_between",
    );
    check(
        "ss_within",
        reported.ss_within,
        reported.df_within as f64 * reported.ms_within,
        "df_within x ms_within",
    );
    if let Some(total) = reported.ss_total {
        check(
            "ss_total",
            total,
            reported.ss_between + reported.ss_within,
            "ss_between + ss_within",
        );
    }
    if let Some(r) = reconstructed {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        check("ss_between", reported.ss_between, f(r.ss_between), "reconstructed from group summaries");
        check("ss_within", reported.ss_within, f(r.ss_within), "reconstructed from group summaries");
        if let Some(fs) = reported.f_statistic {
            check("f_statistic", fs, f(r.f_statistic), "reconstructed from group summaries");
        }
    }
    out
}

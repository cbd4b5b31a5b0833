//! CSV artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a file back yields the exact values that were written.

use std::path::Path;

use lapse_core::cartpole::Calibration;
use lapse_core::PolicyKind;

use crate::CliError;

pub const SYNTHETIC_HEADER: [&str; 6] = [
    "policy",
    "seed",
    "slots",
    "avg_context_lapse",
    "violation_probability",
    "bound",
];
pub const CARTPOLE_HEADER: [&str; 5] = ["policy", "seed", "episodes", "mean_steps", "stderr_steps"];
pub const BOUND_HEADER: [&str; 6] = ["user", "p", "weighted_moment", "width", "pi", "bound_term"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRow {
    pub policy: PolicyKind,
    pub seed: u64,
    pub slots: u64,
    pub avg_context_lapse: f64,
    pub violation_probability: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleRow {
    pub policy: PolicyKind,
    pub seed: u64,
    pub episodes: usize,
    pub mean_steps: f64,
    pub stderr_steps: f64,
}

/// One user's share of the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub p: f64,
    pub weighted_moment: f64,
    pub width: f64,
    pub pi: f64,
}

impl BoundRow {
    pub fn term(&self) -> f64 {
        self.weighted_moment / (self.p * self.pi)
    }
}

/// Per-policy mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub policy: PolicyKind,
    pub seeds: usize,
    pub mean: f64,
    pub stderr: f64,
    pub second_mean: f64,
    pub second_stderr: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean across values; NaN for a single value.
pub fn stderr(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn by_policy<R, F>(rows: &[R], policy_of: F) -> Vec<(PolicyKind, Vec<&R>)>
where
    F: Fn(&R) -> PolicyKind,
{
    let mut groups: Vec<(PolicyKind, Vec<&R>)> = Vec::new();
    for r in rows {
        let k = policy_of(r);
        match groups.iter_mut().find(|(p, _)| *p == k) {
            Some((_, g)) => g.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
}

pub fn summarize_synthetic(rows: &[SyntheticRow]) -> Vec<Summary> {
    by_policy(rows, |r| r.policy)
        .into_iter()
        .map(|(policy, g)| {
            let lapse: Vec<f64> = g.iter().map(|r| r.avg_context_lapse).collect();
            let viol: Vec<f64> = g.iter().map(|r| r.violation_probability).collect();
            Summary {
                policy,
                seeds: g.len(),
                mean: mean(&lapse),
                stderr: stderr(&lapse),
                second_mean: mean(&viol),
                second_stderr: stderr(&viol),
            }
        })
        .collect()
}

/// Mean of the per-seed means; the error combines the per-seed standard
/// errors, `sqrt(Σ se²) / n`.
pub fn summarize_cartpole(rows: &[CartpoleRow]) -> Vec<Summary> {
    by_policy(rows, |r| r.policy)
        .into_iter()
        .map(|(policy, g)| {
            let means: Vec<f64> = g.iter().map(|r| r.mean_steps).collect();
            let n = g.len() as f64;
            let se = g.iter().map(|r| r.stderr_steps.powi(2)).sum::<f64>().sqrt() / n;
            Summary {
                policy,
                seeds: g.len(),
                mean: mean(&means),
                stderr: se,
                second_mean: f64::NAN,
                second_stderr: f64::NAN,
            }
        })
        .collect()
}

fn write_csv<I>(path: &Path, header: &[&str], records: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_synthetic_results(path: &Path, rows: &[SyntheticRow]) -> Result<(), CliError> {
    write_csv(
        path,
        &SYNTHETIC_HEADER,
        rows.iter().map(|r| {
            vec![
                r.policy.to_string(),
                r.seed.to_string(),
                r.slots.to_string(),
                r.avg_context_lapse.to_string(),
                r.violation_probability.to_string(),
                r.bound.to_string(),
            ]
        }),
    )
}

pub fn write_cartpole_results(path: &Path, rows: &[CartpoleRow]) -> Result<(), CliError> {
    write_csv(
        path,
        &CARTPOLE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.policy.to_string(),
                r.seed.to_string(),
                r.episodes.to_string(),
                r.mean_steps.to_string(),
                r.stderr_steps.to_string(),
            ]
        }),
    )
}

pub fn write_synthetic_summary(path: &Path, summary: &[Summary]) -> Result<(), CliError> {
    write_csv(
        path,
        &[
            "policy",
            "seeds",
            "mean_avg_context_lapse",
            "stderr_avg_context_lapse",
            "mean_violation_probability",
            "stderr_violation_probability",
        ],
        summary.iter().map(|s| {
            vec![
                s.policy.to_string(),
                s.seeds.to_string(),
                s.mean.to_string(),
                s.stderr.to_string(),
                s.second_mean.to_string(),
                s.second_stderr.to_string(),
            ]
        }),
    )
}

pub fn write_cartpole_summary(path: &Path, summary: &[Summary]) -> Result<(), CliError> {
    write_csv(
        path,
        &["policy", "seeds", "mean_steps", "stderr_steps"],
        summary.iter().map(|s| {
            vec![
                s.policy.to_string(),
                s.seeds.to_string(),
                s.mean.to_string(),
                s.stderr.to_string(),
            ]
        }),
    )
}

/// Per-user rows followed by a `total` row carrying the bound.
pub fn write_bound(path: &Path, rows: &[BoundRow]) -> Result<(), CliError> {
    let total: f64 = rows.iter().map(BoundRow::term).sum();
    let per_user = rows.iter().enumerate().map(|(i, r)| {
        vec![
            i.to_string(),
            r.p.to_string(),
            r.weighted_moment.to_string(),
            r.width.to_string(),
            r.pi.to_string(),
            r.term().to_string(),
        ]
    });
    let last = vec![
        "total".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        total.to_string(),
    ];
    write_csv(path, &BOUND_HEADER, per_user.chain(std::iter::once(last)))
}

pub fn write_calibration(path: &Path, cal: &Calibration) -> Result<(), CliError> {
    std::fs::write(path, cal.to_text()).map_err(|e| CliError::io(path, e))
}

//! Slotted simulation of the N-user system and its metrics.
//!
//! Each slot runs in a fixed order:
//!
//! 1. shift the weights (`ω(t) ← ω(t+1)`) and draw the next one;
//! 2. record `Σ ω_i(t) Q_i(t)²` and threshold violations on the
//!    pre-transmission state;
//! 3. pick the scheduled users;
//! 4. draw the channel of each scheduled user;
//! 5. draw the increments and update error and age.

use rand_chacha::ChaCha8Rng;

use crate::dist::{substream, StreamTag};
use crate::error::{Error, Result};
use crate::model::{context_lapse, step_aoi, step_error, SystemParams, UserState};
use crate::policies::{PolicyInput, PolicyKind, Selector};
use crate::waterfill::StationaryPolicy;
use rand::Rng;

/// Error thresholds keyed by the weight in force.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRule {
    classes: Vec<(f64, f64)>,
}

impl ThresholdRule {
    /// `(weight, threshold)` pairs; `|Q| > threshold` is a violation.
    pub fn new(classes: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((w, t)) = classes.iter().find(|(_, t)| t.is_nan() || *t <= 0.0) {
            return Err(Error::InvalidParams(format!(
                "threshold for weight {w} must be positive, got {t}"
            )));
        }
        Ok(Self { classes })
    }

    /// 15 at weight 1, 5 at weight 9.
    pub fn standard() -> Self {
        Self {
            classes: vec![(1.0, 15.0), (9.0, 5.0)],
        }
    }

    pub fn none() -> Self {
        Self {
            classes: Vec::new(),
        }
    }

    pub fn classes(&self) -> &[(f64, f64)] {
        &self.classes
    }

    /// Class index and threshold for a weight, if the weight is covered.
    pub fn lookup(&self, weight: f64) -> Option<(usize, f64)> {
        self.classes
            .iter()
            .position(|(w, _)| *w == weight)
            .map(|c| (c, self.classes[c].1))
    }

    pub fn is_violation(&self, weight: f64, q: f64) -> bool {
        self.lookup(weight).is_some_and(|(_, t)| q.abs() > t)
    }
}

/// Running sums over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    pub slots: u64,
    pub lapse_sum: f64,
    pub violation_counts: Vec<u64>,
    pub violation_opportunities: Vec<u64>,
}

impl MetricsAccumulator {
    pub fn new(classes: usize) -> Self {
        Self {
            slots: 0,
            lapse_sum: 0.0,
            violation_counts: vec![0; classes],
            violation_opportunities: vec![0; classes],
        }
    }

    /// Adds another accumulator's sums into this one.
    pub fn merge(&mut self, other: &MetricsAccumulator) -> Result<()> {
        if self.violation_counts.len() != other.violation_counts.len() {
            return Err(Error::Mismatch("threshold classes differ".into()));
        }
        self.slots += other.slots;
        self.lapse_sum += other.lapse_sum;
        for (a, b) in self.violation_counts.iter_mut().zip(&other.violation_counts) {
            *a += b;
        }
        for (a, b) in self
            .violation_opportunities
            .iter_mut()
            .zip(&other.violation_opportunities)
        {
            *a += b;
        }
        Ok(())
    }

    pub fn total_violations(&self) -> u64 {
        self.violation_counts.iter().sum()
    }

    pub fn total_opportunities(&self) -> u64 {
        self.violation_opportunities.iter().sum()
    }
}

/// Time-average context-aware lapse.
pub fn avg_context_lapse(acc: &MetricsAccumulator) -> Result<f64> {
    if acc.slots == 0 {
        return Err(Error::NoSamples("no slots recorded"));
    }
    Ok(acc.lapse_sum / acc.slots as f64)
}

/// Fraction of (user, slot) pairs whose error exceeded its threshold.
pub fn violation_probability(acc: &MetricsAccumulator) -> Result<f64> {
    let opportunities = acc.total_opportunities();
    if opportunities == 0 {
        return Err(Error::NoSamples("no violation opportunities"));
    }
    Ok(acc.total_violations() as f64 / opportunities as f64)
}

struct UserStreams {
    weight: ChaCha8Rng,
    increment: ChaCha8Rng,
    channel: ChaCha8Rng,
}

/// Run one trace and hand the pre-transmission state of every slot to
/// `observe` along with the users delivered in that slot.
pub fn run_trace_observed<F>(
    params: &SystemParams,
    kind: PolicyKind,
    stationary: &StationaryPolicy,
    slots: u64,
    seed: u64,
    thresholds: &ThresholdRule,
    mut observe: F,
) -> Result<MetricsAccumulator>
where
    F: FnMut(u64, &[UserState], &[bool]),
{
    let n = params.n_users();
    if stationary.len() != n {
        return Err(Error::Mismatch(format!(
            "stationary policy has {} entries for {n} users",
            stationary.len()
        )));
    }
    if slots == 0 {
        return Err(Error::InvalidParams("slots must be positive".into()));
    }

    let mut streams: Vec<UserStreams> = (0..n)
        .map(|i| UserStreams {
            weight: substream(seed, i, StreamTag::Weight),
            increment: substream(seed, i, StreamTag::Increment),
            channel: substream(seed, i, StreamTag::Channel),
        })
        .collect();
    let mut users: Vec<UserState> = (0..n)
        .map(|i| UserState::initial(params.weights()[i].sample(&mut streams[i].weight)))
        .collect();

    let mut acc = MetricsAccumulator::new(thresholds.classes().len());
    let mut selector = Selector::new();
    let mut scheduled = Vec::with_capacity(params.slots_per_round());
    let mut delivered = vec![false; n];

    for t in 0..slots {
        let mut lapse = 0.0;
        for (i, u) in users.iter_mut().enumerate() {
            u.weight_now = u.weight_next;
            u.weight_next = params.weights()[i].sample(&mut streams[i].weight);
            lapse += context_lapse(u.weight_now, u.q);
            if let Some((class, threshold)) = thresholds.lookup(u.weight_now) {
                acc.violation_opportunities[class] += 1;
                if u.q.abs() > threshold {
                    acc.violation_counts[class] += 1;
                }
            }
        }
        acc.lapse_sum += lapse;
        acc.slots += 1;

        let input = PolicyInput {
            users: &users,
            params,
            stationary,
            slot: t,
        };
        selector.select_into(kind, &input, &mut scheduled);

        delivered.iter_mut().for_each(|d| *d = false);
        for &i in &scheduled {
            delivered[i] = streams[i].channel.random_bool(params.p()[i]);
        }
        observe(t, &users, &delivered);

        for (i, u) in users.iter_mut().enumerate() {
            let a = params.increments()[i].sample(&mut streams[i].increment);
            u.q = step_error(u.q, a, delivered[i]);
            u.aoi = step_aoi(u.aoi, delivered[i]);
        }
    }
    Ok(acc)
}

/// Run one trace of `slots` slots.
pub fn run_trace(
    params: &SystemParams,
    kind: PolicyKind,
    stationary: &StationaryPolicy,
    slots: u64,
    seed: u64,
    thresholds: &ThresholdRule,
) -> Result<MetricsAccumulator> {
    run_trace_observed(params, kind, stationary, slots, seed, thresholds, |_, _, _| {})
}

/// Independent traces, one per seed, in seed order.
pub fn run_traces(
    params: &SystemParams,
    kind: PolicyKind,
    stationary: &StationaryPolicy,
    slots: u64,
    seeds: &[u64],
    thresholds: &ThresholdRule,
) -> Result<Vec<MetricsAccumulator>> {
    crate::parallel::map_seeds(seeds, |seed| {
        run_trace(params, kind, stationary, slots, seed, thresholds)
    })
    .into_iter()
    .collect()
}

/// Sum of per-seed accumulators, reduced in the order given.
pub fn merge_all(accs: &[MetricsAccumulator]) -> Result<MetricsAccumulator> {
    let first = accs.first().ok_or(Error::Empty("accumulators"))?;
    let mut total = MetricsAccumulator::new(first.violation_counts.len());
    for a in accs {
        total.merge(a)?;
    }
    Ok(total)
}

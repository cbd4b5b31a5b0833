//! The five scheduling policies compared in the experiments.
//!
//! Index policies score every user and schedule the `K` largest scores; ties
//! go to the lowest user index. Round robin walks the users in contiguous
//! blocks of `K`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ScheduleDecision, SystemParams, UserState};
use crate::waterfill::StationaryPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    RoundRobin,
    AoiIndex,
    AoiWeightIndex,
    LapseIndex,
    ContextLapseIndex,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::RoundRobin,
        PolicyKind::AoiIndex,
        PolicyKind::AoiWeightIndex,
        PolicyKind::LapseIndex,
        PolicyKind::ContextLapseIndex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::RoundRobin => "round_robin",
            PolicyKind::AoiIndex => "aoi_index",
            PolicyKind::AoiWeightIndex => "aoi_weight_index",
            PolicyKind::LapseIndex => "lapse_index",
            PolicyKind::ContextLapseIndex => "context_lapse_index",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "round_robin" | "rr" => Ok(PolicyKind::RoundRobin),
            "aoi_index" | "aoi" => Ok(PolicyKind::AoiIndex),
            "aoi_weight_index" | "aoi_weight" => Ok(PolicyKind::AoiWeightIndex),
            "lapse_index" | "lapse" => Ok(PolicyKind::LapseIndex),
            "context_lapse_index" | "context_lapse" => Ok(PolicyKind::ContextLapseIndex),
            other => Err(Error::InvalidParams(format!("unknown policy `{other}`"))),
        }
    }
}

/// Drift-plus-penalty index:
/// `(E[ω](1/(pπ) - 1) + ω(t+1)) p Q²`.
#[inline]
pub fn index_context_lapse(user: &UserState, p: f64, pi: f64, w_mean: f64) -> f64 {
    (w_mean * (1.0 / (p * pi) - 1.0) + user.weight_next) * p * user.q * user.q
}

/// The same policy written with the Lyapunov weight
/// `θ = E[ω](1 - pπ)/(pπ)`: `(θ + ω(t+1)) p Q²`.
#[inline]
pub fn index_drift_plus_penalty(user: &UserState, p: f64, pi: f64, w_mean: f64) -> f64 {
    let theta = w_mean * (1.0 - p * pi) / (p * pi);
    (theta + user.weight_next) * p * user.q * user.q
}

/// `p Δ (Δ + 1)`.
#[inline]
pub fn index_aoi(user: &UserState, p: f64) -> f64 {
    let age = user.aoi as f64;
    p * age * (age + 1.0)
}

/// Context-lapse index with `Q²` replaced by its expectation `Δ E[A²]`.
#[inline]
pub fn index_aoi_weight(user: &UserState, p: f64, pi: f64, w_mean: f64, a2: f64) -> f64 {
    (1.0 / (p * pi) - 1.0 + user.weight_next / w_mean) * p * w_mean * a2 * user.aoi as f64
}

/// Weight-agnostic lapse index `E[ω] Q² / π`.
#[inline]
pub fn index_lapse(user: &UserState, pi: f64, w_mean: f64) -> f64 {
    w_mean / pi * user.q * user.q
}

/// Everything an index policy may look at in one slot.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub users: &'a [UserState],
    pub params: &'a SystemParams,
    pub stationary: &'a StationaryPolicy,
    pub slot: u64,
}

impl<'a> PolicyInput<'a> {
    pub fn new(
        users: &'a [UserState],
        params: &'a SystemParams,
        stationary: &'a StationaryPolicy,
        slot: u64,
    ) -> Result<Self> {
        let n = params.n_users();
        if users.len() != n || stationary.len() != n {
            return Err(Error::Mismatch(format!(
                "{} user states and {} stationary entries for {n} users",
                users.len(),
                stationary.len()
            )));
        }
        if let Some(i) = stationary.pi.iter().position(|&v| v <= 0.0) {
            return Err(Error::ZeroProbability(i));
        }
        Ok(Self {
            users,
            params,
            stationary,
            slot,
        })
    }

    /// Index of user `i` under `kind`; `None` for round robin.
    pub fn index(&self, kind: PolicyKind, i: usize) -> Option<f64> {
        let u = &self.users[i];
        let p = self.params.p()[i];
        let pi = self.stationary.pi[i];
        let w = self.params.w_mean()[i];
        Some(match kind {
            PolicyKind::RoundRobin => return None,
            PolicyKind::AoiIndex => index_aoi(u, p),
            PolicyKind::AoiWeightIndex => index_aoi_weight(u, p, pi, w, self.params.a2_moment()[i]),
            PolicyKind::LapseIndex => index_lapse(u, pi, w),
            PolicyKind::ContextLapseIndex => index_context_lapse(u, p, pi, w),
        })
    }
}

/// Users `{(slot K + j) mod N : j < K}`, ascending.
pub fn round_robin_into(slot: u64, n: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    let k = k.min(n);
    let start = ((slot % n as u64) as usize * (k % n)) % n;
    out.extend((0..k).map(|j| (start + j) % n));
    out.sort_unstable();
}

/// The `k` highest scores, lowest index first among equals. `out` is
/// ascending. `order` is scratch space.
pub fn top_k_into(scores: &[f64], k: usize, order: &mut Vec<usize>, out: &mut Vec<usize>) {
    let k = k.min(scores.len());
    // `order` holds the current best, sorted by (score desc, index asc).
    order.clear();
    for (i, &s) in scores.iter().enumerate() {
        if order.len() == k {
            match order.last() {
                Some(&worst) if s > scores[worst] => {
                    order.pop();
                }
                _ => continue,
            }
        }
        // Later indices lose ties, so insert after every score >= s.
        let pos = order
            .iter()
            .position(|&j| scores[j] < s)
            .unwrap_or(order.len());
        order.insert(pos, i);
    }
    out.clear();
    out.extend_from_slice(order);
    out.sort_unstable();
}

/// Reusable scratch buffers for per-slot selection.
#[derive(Debug, Default, Clone)]
pub struct Selector {
    scores: Vec<f64>,
    order: Vec<usize>,
}

impl Selector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn select_into(&mut self, kind: PolicyKind, input: &PolicyInput<'_>, out: &mut Vec<usize>) {
        let n = input.params.n_users();
        let k = input.params.n_channels();
        if kind == PolicyKind::RoundRobin {
            round_robin_into(input.slot, n, k, out);
            return;
        }
        self.scores.clear();
        self.scores
            .extend((0..n).map(|i| input.index(kind, i).unwrap_or(0.0)));
        top_k_into(&self.scores, k, &mut self.order, out);
    }
}

/// Users to schedule in this slot; channel outcomes are left unrealized.
pub fn select(kind: PolicyKind, input: &PolicyInput<'_>) -> ScheduleDecision {
    let mut out = Vec::new();
    Selector::new().select_into(kind, input, &mut out);
    ScheduleDecision::scheduled_only(out, input.params.n_users())
}

//! Per-user state, system parameters and the per-slot transitions.

use crate::dist::{DistSpec, IncrementDist, WeightDist};
use crate::error::{Error, Result};

/// Evolving state of one user as seen by the fusion center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    /// Estimation error `Q(t)`.
    pub q: f64,
    /// Age of information in slots.
    pub aoi: u64,
    /// Weight in force this slot, `ω(t)`.
    pub weight_now: f64,
    /// Next slot's weight `ω(t+1)`, visible to the scheduler one slot early.
    pub weight_next: f64,
}

impl UserState {
    /// Zero error and zero age, with the first weight already drawn.
    pub fn initial(weight_next: f64) -> Self {
        Self {
            q: 0.0,
            aoi: 0,
            weight_now: weight_next,
            weight_next,
        }
    }
}

/// `(1 - D) q + a`.
#[inline]
pub fn step_error(q: f64, a: f64, delivered: bool) -> f64 {
    if delivered {
        a
    } else {
        q + a
    }
}

/// Zero-delay delivery: the packet delivered in slot `t` was generated in slot
/// `t`, so its age at `t + 1` is one.
#[inline]
pub fn step_aoi(aoi: u64, delivered: bool) -> u64 {
    if delivered {
        1
    } else {
        aoi + 1
    }
}

/// Context-aware lapse with squared-error lapse: `ω q²`.
#[inline]
pub fn context_lapse(weight: f64, q: f64) -> f64 {
    weight * q * q
}

/// `n` probabilities evenly spaced from `start` to `end` inclusive.
pub fn arithmetic_probabilities(n: usize, start: f64, end: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Static description of an N-user, K-channel system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    n_channels: usize,
    p: Vec<f64>,
    increments: Vec<IncrementDist>,
    weights: Vec<WeightDist>,
    a2_moment: Vec<f64>,
    w_mean: Vec<f64>,
}

impl SystemParams {
    pub fn new(
        n_channels: usize,
        p: Vec<f64>,
        increments: Vec<IncrementDist>,
        weights: Vec<WeightDist>,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidParams("n_users must be positive".into()));
        }
        if n_channels == 0 {
            return Err(Error::InvalidParams("n_channels must be positive".into()));
        }
        if increments.len() != n || weights.len() != n {
            return Err(Error::Mismatch(format!(
                "{n} users but {} increment and {} weight distributions",
                increments.len(),
                weights.len()
            )));
        }
        if let Some((i, pi)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
        {
            return Err(Error::InvalidParams(format!(
                "p[{i}] = {pi} is outside (0, 1]"
            )));
        }
        let a2_moment: Vec<f64> = increments.iter().map(|d| d.second_moment()).collect();
        let w_mean: Vec<f64> = weights.iter().map(|d| d.mean()).collect();
        Ok(Self {
            n_channels,
            p,
            increments,
            weights,
            a2_moment,
            w_mean,
        })
    }

    /// Every user shares the same increment and weight distributions.
    pub fn homogeneous(
        n_channels: usize,
        p: Vec<f64>,
        increment: IncrementDist,
        weight: WeightDist,
    ) -> Result<Self> {
        let n = p.len();
        Self::new(n_channels, p, vec![increment; n], vec![weight; n])
    }

    /// N = 10, K = 2, p from 0.9 to 1, standard Gaussian increments, weight 9
    /// with probability 0.05 and 1 otherwise.
    pub fn standard_setup() -> Self {
        Self::homogeneous(
            2,
            arithmetic_probabilities(10, 0.9, 1.0),
            IncrementDist::new(DistSpec::standard_gaussian()).expect("valid"),
            WeightDist::new(DistSpec::two_level_weights()).expect("valid"),
        )
        .expect("valid standard setup")
    }

    pub fn n_users(&self) -> usize {
        self.p.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Number of users scheduled per slot.
    pub fn slots_per_round(&self) -> usize {
        self.n_channels.min(self.n_users())
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn increments(&self) -> &[IncrementDist] {
        &self.increments
    }

    pub fn weights(&self) -> &[WeightDist] {
        &self.weights
    }

    /// `E[A_i²]`.
    pub fn a2_moment(&self) -> &[f64] {
        &self.a2_moment
    }

    /// `E[ω_i]`.
    pub fn w_mean(&self) -> &[f64] {
        &self.w_mean
    }

    /// Water-filling bar widths `sqrt(E[ω] E[A²] / p)`.
    pub fn bar_widths(&self) -> Vec<f64> {
        (0..self.n_users())
            .map(|i| (self.w_mean[i] * self.a2_moment[i] / self.p[i]).sqrt())
            .collect()
    }
}

/// Scheduling outcome of one slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleDecision {
    /// Scheduled users, ascending.
    pub scheduled: Vec<usize>,
    /// Channel state of each scheduled user, aligned with `scheduled`.
    pub channel_ok: Vec<bool>,
    /// Per-user delivery indicator.
    pub delivered: Vec<bool>,
}

impl ScheduleDecision {
    /// A decision with no channel realizations yet.
    pub fn scheduled_only(mut scheduled: Vec<usize>, n_users: usize) -> Self {
        scheduled.sort_unstable();
        Self {
            channel_ok: Vec::new(),
            delivered: vec![false; n_users],
            scheduled,
        }
    }

    /// Records the channel outcomes of the scheduled users.
    pub fn realize(&mut self, channel_ok: Vec<bool>) {
        assert_eq!(channel_ok.len(), self.scheduled.len());
        self.delivered.iter_mut().for_each(|d| *d = false);
        for (&u, &ok) in self.scheduled.iter().zip(&channel_ok) {
            self.delivered[u] = ok;
        }
        self.channel_ok = channel_ok;
    }
}

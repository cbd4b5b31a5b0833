//! Stationary scheduling probabilities that minimize the drift-plus-penalty
//! bound `Σ E[ω_i] E[A_i²] / (p_i π_i)`.
//!
//! With `d_i = sqrt(E[ω_i] E[A_i²] / p_i)` the objective is `Σ d_i² / π_i`
//! subject to `Σ π_i ≤ K` and `0 < π_i ≤ 1`. Picture bars of width `d_i` and
//! height `1 / d_i` (so each holds at most one unit of water) and pour in `K`
//! units: the water in each bar is `π_i`. Uncapped bars share the common
//! level `d_i / π_i`; full bars have `d_i` at or above it.

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Bar geometry for the water-filling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSpec {
    pub widths: Vec<f64>,
    pub budget: f64,
}

impl BarSpec {
    pub fn new(widths: Vec<f64>, budget: f64) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::Empty("bar widths"));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "budget must be positive, got {budget}"
            )));
        }
        if let Some((i, w)) = widths
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(Error::InvalidParams(format!(
                "width[{i}] = {w} must be positive"
            )));
        }
        Ok(Self { widths, budget })
    }

    pub fn from_params(params: &SystemParams) -> Result<Self> {
        Self::new(params.bar_widths(), params.n_channels() as f64)
    }
}

/// Per-user scheduling probabilities of a randomized stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    pub pi: Vec<f64>,
}

impl StationaryPolicy {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::Empty("stationary policy"));
        }
        if let Some((i, _)) = pi
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
        {
            return Err(Error::ZeroProbability(i));
        }
        Ok(Self { pi })
    }

    /// Water-filling solution for the given system.
    pub fn for_params(params: &SystemParams) -> Result<Self> {
        waterfill(&BarSpec::from_params(params)?)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

/// K = 1 solution: `π_i = d_i / Σ d_j`.
pub fn closed_form_k1(widths: &[f64]) -> Result<StationaryPolicy> {
    if widths.is_empty() {
        return Err(Error::Empty("bar widths"));
    }
    if widths.len() == 1 {
        return Ok(StationaryPolicy { pi: vec![1.0] });
    }
    let total: f64 = widths.iter().sum();
    Ok(StationaryPolicy {
        pi: widths.iter().map(|d| d / total).collect(),
    })
}

/// Solution of the capped water-filling problem together with its water
/// level (`None` when every bar is full).
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    pub policy: StationaryPolicy,
    pub level: Option<f64>,
    pub capped: usize,
}

/// Solve the capped problem by growing the set of full bars.
///
/// Users are visited by decreasing width; the widest remaining bar is capped
/// whenever the proportional split of the remaining volume would overflow it.
/// The set of full bars is always a prefix of that order, so at most `N`
/// rounds are needed.
pub fn waterfill_solve(spec: &BarSpec) -> WaterfillSolution {
    let n = spec.widths.len();
    if spec.budget >= n as f64 {
        return WaterfillSolution {
            policy: StationaryPolicy { pi: vec![1.0; n] },
            level: None,
            capped: n,
        };
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spec.widths[b].total_cmp(&spec.widths[a]).then(a.cmp(&b)));

    // suffix[c] = Σ widths of order[c..]
    let mut suffix = vec![0.0; n + 1];
    for c in (0..n).rev() {
        suffix[c] = suffix[c + 1] + spec.widths[order[c]];
    }

    let mut capped = 0;
    while capped < n {
        let remaining = spec.budget - capped as f64;
        let widest = spec.widths[order[capped]];
        if widest * remaining / suffix[capped] > 1.0 {
            capped += 1;
        } else {
            break;
        }
    }

    let remaining = spec.budget - capped as f64;
    let sum = suffix[capped];
    let mut pi = vec![1.0; n];
    for &u in &order[capped..] {
        pi[u] = spec.widths[u] * remaining / sum;
    }
    WaterfillSolution {
        policy: StationaryPolicy { pi },
        level: (capped < n).then(|| sum / remaining),
        capped,
    }
}

/// Optimal stationary probabilities for `spec`.
pub fn waterfill(spec: &BarSpec) -> Result<StationaryPolicy> {
    // Re-validate: the fields are public.
    let spec = BarSpec::new(spec.widths.clone(), spec.budget)?;
    Ok(waterfill_solve(&spec).policy)
}

/// `Σ d_i² / π_i`.
pub fn bar_objective(widths: &[f64], pi: &[f64]) -> f64 {
    widths.iter().zip(pi).map(|(d, p)| d * d / p).sum()
}

/// Upper bound on the average context-aware lapse of the drift-plus-penalty
/// policy tuned with `policy`: `Σ E[ω_i] E[A_i²] / (p_i π_i)`.
pub fn bound_objective(params: &SystemParams, policy: &StationaryPolicy) -> Result<f64> {
    if policy.len() != params.n_users() {
        return Err(Error::Mismatch(format!(
            "policy has {} entries for {} users",
            policy.len(),
            params.n_users()
        )));
    }
    let mut total = 0.0;
    for i in 0..params.n_users() {
        let pi = policy.pi[i];
        if pi <= 0.0 {
            return Err(Error::ZeroProbability(i));
        }
        total += params.w_mean()[i] * params.a2_moment()[i] / (params.p()[i] * pi);
    }
    Ok(total)
}

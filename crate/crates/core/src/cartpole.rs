//! Remote control of several cart-poles over shared lossy channels.
//!
//! Physics follow the classic-control cart-pole: explicit Euler with a
//! 0.02 s step, failure when the cart leaves `|x| ≤ 2.4` or the pole leans
//! past 12°, and at most 200 steps per episode. Every step a Gaussian
//! disturbance force is added to the controller's ±10 N push.
//!
//! The controller only sees a remote estimate of each cart-pole. Poles that
//! are not delivered are propagated with the zero-disturbance model. The
//! scheduler decides which `K` poles deliver their true state each step.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist::{substream, StreamTag};
use crate::error::{Error, Result};
use crate::model::{arithmetic_probabilities, step_aoi, UserState};
use crate::policies::{
    index_aoi, index_aoi_weight, index_context_lapse, index_lapse, round_robin_into, top_k_into,
    PolicyKind,
};
use crate::waterfill::{waterfill, BarSpec, StationaryPolicy};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * POLE_HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
pub const ANGLE_LIMIT: f64 = 12.0 * 2.0 * PI / 360.0;
pub const MAX_STEPS: u32 = 200;
/// Disturbance standard deviation, in newtons.
pub const DISTURBANCE_SIGMA: f64 = 10.0;
/// Half-width of the uniform initial-state distribution.
const RESET_SPREAD: f64 = 0.05;
const MIN_CALIBRATION_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub alpha: f64,
    pub alpha_dot: f64,
}

impl CartPoleState {
    pub const ZERO: CartPoleState = CartPoleState {
        x: 0.0,
        x_dot: 0.0,
        alpha: 0.0,
        alpha_dot: 0.0,
    };

    pub fn new(x: f64, x_dot: f64, alpha: f64, alpha_dot: f64) -> Self {
        Self {
            x,
            x_dot,
            alpha,
            alpha_dot,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.x_dot, self.alpha, self.alpha_dot]
    }

    pub fn is_alive(&self) -> bool {
        self.x.abs() <= X_LIMIT && self.alpha.abs() <= ANGLE_LIMIT
    }

    /// Position dimensions divided by 2.4, angle dimensions by 12°.
    pub fn rescaled(&self) -> [f64; 4] {
        [
            self.x / X_LIMIT,
            self.x_dot / X_LIMIT,
            self.alpha / ANGLE_LIMIT,
            self.alpha_dot / ANGLE_LIMIT,
        ]
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || rng.random_range(-RESET_SPREAD..RESET_SPREAD);
        Self {
            x: draw(),
            x_dot: draw(),
            alpha: draw(),
            alpha_dot: draw(),
        }
    }
}

impl std::ops::Neg for CartPoleState {
    type Output = CartPoleState;

    fn neg(self) -> Self {
        Self::new(-self.x, -self.x_dot, -self.alpha, -self.alpha_dot)
    }
}

/// One Euler step under the total force `control_force + disturbance_force`.
pub fn dynamics_step(
    state: CartPoleState,
    control_force: f64,
    disturbance_force: f64,
) -> CartPoleState {
    let force = control_force + disturbance_force;
    let (sin, cos) = state.alpha.sin_cos();
    let temp = (force + POLE_MASS_LENGTH * state.alpha_dot * state.alpha_dot * sin) / TOTAL_MASS;
    let alpha_acc = (GRAVITY * sin - cos * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * alpha_acc * cos / TOTAL_MASS;
    CartPoleState {
        x: state.x + TAU * state.x_dot,
        x_dot: state.x_dot + TAU * x_acc,
        alpha: state.alpha + TAU * state.alpha_dot,
        alpha_dot: state.alpha_dot + TAU * alpha_acc,
    }
}

/// Remote prediction assuming no disturbance.
pub fn estimator_predict(estimate: CartPoleState, control_force: f64) -> CartPoleState {
    dynamics_step(estimate, control_force, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn force(self) -> f64 {
        match self {
            Direction::Left => -FORCE_MAG,
            Direction::Right => FORCE_MAG,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// Maps the controller's view of a cart-pole to a push direction.
pub trait Controller: Sync {
    fn act(&self, estimate: &CartPoleState) -> Direction;
}

/// Push right iff `g · (x, ẋ, α, α̇) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSignController {
    pub gains: [f64; 4],
}

impl LinearSignController {
    /// Holds the undisturbed pole for 200 steps from any reset state.
    pub const DEFAULT_GAINS: [f64; 4] = [0.05, 0.0, 1.0, 0.2];

    pub fn new(gains: [f64; 4]) -> Self {
        Self { gains }
    }
}

impl Default for LinearSignController {
    fn default() -> Self {
        Self::new(Self::DEFAULT_GAINS)
    }
}

impl Controller for LinearSignController {
    fn act(&self, estimate: &CartPoleState) -> Direction {
        let s = estimate.to_array();
        let score: f64 = self.gains.iter().zip(s).map(|(g, v)| g * v).sum();
        if score > 0.0 {
            Direction::Right
        } else {
            Direction::Left
        }
    }
}

/// Context weights: 9 for a dimension pair whose magnitude is about to grow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionWeights {
    /// Shared by `x` and `ẋ`.
    pub w_pos: f64,
    /// Shared by `α` and `α̇`.
    pub w_ang: f64,
}

impl DimensionWeights {
    pub fn per_dimension(&self) -> [f64; 4] {
        [self.w_pos, self.w_pos, self.w_ang, self.w_ang]
    }
}

pub fn context_weights(state: &CartPoleState) -> DimensionWeights {
    let rule = |a: f64, b: f64| if a * b > 0.0 { 9.0 } else { 1.0 };
    DimensionWeights {
        w_pos: rule(state.x, state.x_dot),
        w_ang: rule(state.alpha, state.alpha_dot),
    }
}

/// Weighted squared error summed over the four rescaled dimensions.
pub fn cartpole_lapse(
    true_state: &CartPoleState,
    estimate: &CartPoleState,
    weights: &DimensionWeights,
) -> f64 {
    let a = true_state.rescaled();
    let b = estimate.rescaled();
    let w = weights.per_dimension();
    (0..4).map(|d| w[d] * (a[d] - b[d]).powi(2)).sum()
}

/// Per-dimension second moments of the one-step increment and mean weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionMoments {
    pub a2: [f64; 4],
    pub w_mean: [f64; 4],
}

impl DimensionMoments {
    /// `Σ_d E[ω_d] E[A_d²]`.
    pub fn weighted_energy(&self) -> f64 {
        (0..4).map(|d| self.w_mean[d] * self.a2[d]).sum()
    }
}

/// Result of [`calibrate_moments`], stored as a small text artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub seed: u64,
    pub sigma: f64,
    pub episodes: usize,
    pub samples: u64,
    pub moments: DimensionMoments,
}

const DIM_NAMES: [&str; 4] = ["x", "x_dot", "alpha", "alpha_dot"];

impl Calibration {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# cart-pole increment calibration (rescaled coordinates)\n");
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "sigma {}", self.sigma);
        let _ = writeln!(s, "episodes {}", self.episodes);
        let _ = writeln!(s, "samples {}", self.samples);
        for (d, name) in DIM_NAMES.iter().enumerate() {
            let _ = writeln!(s, "a2_{name} {}", self.moments.a2[d]);
        }
        for (d, name) in DIM_NAMES.iter().enumerate() {
            let _ = writeln!(s, "w_mean_{name} {}", self.moments.w_mean[d]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| Error::InvalidParams(format!("bad calibration line `{line}`")))?;
            fields.insert(k.to_string(), v.trim().to_string());
        }
        fn get<T: std::str::FromStr>(
            f: &std::collections::HashMap<String, String>,
            k: &str,
        ) -> Result<T> {
            f.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidParams(format!("calibration field `{k}` missing")))
        }
        let mut moments = DimensionMoments {
            a2: [0.0; 4],
            w_mean: [0.0; 4],
        };
        for (d, name) in DIM_NAMES.iter().enumerate() {
            moments.a2[d] = get(&fields, &format!("a2_{name}"))?;
            moments.w_mean[d] = get(&fields, &format!("w_mean_{name}"))?;
        }
        Ok(Self {
            seed: get(&fields, "seed")?,
            sigma: get(&fields, "sigma")?,
            episodes: get(&fields, "episodes")?,
            samples: get(&fields, "samples")?,
            moments,
        })
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Estimate the per-dimension increment moments under full observability.
///
/// Each step the increment is `rescaled(true next) − rescaled(zero-force
/// prediction from the true state)`. Under explicit Euler the position and
/// angle increments are identically zero; only the velocities pick up the
/// disturbance within one step.
pub fn calibrate_moments(
    episodes: usize,
    seed: u64,
    sigma: f64,
    controller: &dyn Controller,
) -> Result<Calibration> {
    let mut disturbance = substream(seed, 0, StreamTag::Disturbance);
    let mut reset = substream(seed, 0, StreamTag::Reset);
    let mut sum_sq = [0.0; 4];
    let mut sum_w = [0.0; 4];
    let mut samples = 0u64;
    for _ in 0..episodes {
        let mut state = CartPoleState::uniform(&mut reset);
        for _ in 0..MAX_STEPS {
            let w = context_weights(&state).per_dimension();
            let u = controller.act(&state).force();
            let predicted = estimator_predict(state, u).rescaled();
            state = dynamics_step(state, u, gaussian(&mut disturbance, sigma));
            let actual = state.rescaled();
            for d in 0..4 {
                sum_sq[d] += (actual[d] - predicted[d]).powi(2);
                sum_w[d] += w[d];
            }
            samples += 1;
            if !state.is_alive() {
                break;
            }
        }
    }
    if samples < MIN_CALIBRATION_SAMPLES {
        return Err(Error::NoSamples("fewer than 1000 calibration increments"));
    }
    let n = samples as f64;
    Ok(Calibration {
        seed,
        sigma,
        episodes,
        samples,
        moments: DimensionMoments {
            a2: sum_sq.map(|s| s / n),
            w_mean: sum_w.map(|s| s / n),
        },
    })
}

/// Setup of the remote-control benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct CartPoleConfig {
    pub n_channels: usize,
    /// Per-pole delivery probability; its length is the number of poles.
    pub p: Vec<f64>,
    pub disturbance_sigma: f64,
    pub moments: DimensionMoments,
}

impl CartPoleConfig {
    /// Ten poles, two channels, p from 0.9 to 1, σ = 10 N.
    pub fn standard(moments: DimensionMoments) -> Self {
        Self {
            n_channels: 2,
            p: arithmetic_probabilities(10, 0.9, 1.0),
            disturbance_sigma: DISTURBANCE_SIGMA,
            moments,
        }
    }

    pub fn n_poles(&self) -> usize {
        self.p.len()
    }

    fn validate(&self) -> Result<()> {
        if self.p.is_empty() {
            return Err(Error::InvalidParams("need at least one pole".into()));
        }
        if self.n_channels == 0 {
            return Err(Error::InvalidParams("n_channels must be positive".into()));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParams(format!("p = {p} is outside [0, 1]")));
        }
        if !(self.disturbance_sigma >= 0.0 && self.disturbance_sigma.is_finite()) {
            return Err(Error::InvalidParams("disturbance sigma must be nonnegative".into()));
        }
        Ok(())
    }

    /// Per-pole bar widths `sqrt(Σ_d E[ω_d] E[A_d²] / p_i)`.
    pub fn bar_widths(&self) -> Vec<f64> {
        let energy = self.moments.weighted_energy();
        self.p.iter().map(|p| (energy / p).sqrt()).collect()
    }

    /// Water-filling probabilities for the poles.
    pub fn stationary(&self) -> Result<StationaryPolicy> {
        waterfill(&BarSpec::new(self.bar_widths(), self.n_channels as f64)?)
    }
}

/// Summary of a batch of episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    /// Steps of every recorded episode, grouped by pole.
    pub steps: Vec<u32>,
}

impl EpisodeStats {
    pub fn episodes(&self) -> usize {
        self.steps.len()
    }

    pub fn mean_steps(&self) -> f64 {
        self.steps.iter().map(|&s| s as f64).sum::<f64>() / self.steps.len() as f64
    }

    /// Standard error of the mean episode length.
    pub fn stderr_steps(&self) -> f64 {
        let n = self.steps.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.mean_steps();
        let var = self
            .steps
            .iter()
            .map(|&s| (s as f64 - m).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }
}

struct Pole {
    truth: CartPoleState,
    estimate: CartPoleState,
    aoi: u64,
    steps: u32,
    recorded: usize,
    disturbance: ChaCha8Rng,
    channel: ChaCha8Rng,
    reset: ChaCha8Rng,
}

impl Pole {
    fn new(seed: u64, index: usize) -> Self {
        let mut reset = substream(seed, index, StreamTag::Reset);
        let truth = CartPoleState::uniform(&mut reset);
        Self {
            truth,
            estimate: truth,
            aoi: 0,
            steps: 0,
            recorded: 0,
            disturbance: substream(seed, index, StreamTag::Disturbance),
            channel: substream(seed, index, StreamTag::Channel),
            reset,
        }
    }

    /// New episode; the controller starts with the exact initial state.
    fn restart(&mut self) {
        self.truth = CartPoleState::uniform(&mut self.reset);
        self.estimate = self.truth;
        self.aoi = 0;
        self.steps = 0;
    }
}

fn needs_stationary(kind: PolicyKind) -> bool {
    matches!(
        kind,
        PolicyKind::AoiWeightIndex | PolicyKind::LapseIndex | PolicyKind::ContextLapseIndex
    )
}

/// Scheduling score of one pole: the scalar index summed over dimensions.
fn pole_index(
    kind: PolicyKind,
    pole: &Pole,
    p: f64,
    pi: f64,
    moments: &DimensionMoments,
) -> f64 {
    let err = {
        let a = pole.truth.rescaled();
        let b = pole.estimate.rescaled();
        [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
    };
    let w = context_weights(&pole.truth).per_dimension();
    let dim = |d: usize| UserState {
        q: err[d],
        aoi: pole.aoi,
        weight_now: w[d],
        weight_next: w[d],
    };
    match kind {
        PolicyKind::RoundRobin => 0.0,
        PolicyKind::AoiIndex => index_aoi(&dim(0), p),
        PolicyKind::AoiWeightIndex => (0..4)
            .map(|d| index_aoi_weight(&dim(d), p, pi, moments.w_mean[d], moments.a2[d]))
            .sum(),
        PolicyKind::LapseIndex => (0..4)
            .map(|d| index_lapse(&dim(d), pi, moments.w_mean[d]))
            .sum(),
        PolicyKind::ContextLapseIndex => (0..4)
            .map(|d| index_context_lapse(&dim(d), p, pi, moments.w_mean[d]))
            .sum(),
    }
}

/// Play until every pole has finished `ceil(episodes / N)` episodes and
/// return the recorded episode lengths.
///
/// All poles run together; a pole that fails (or reaches 200 steps) starts a
/// new episode at once, so N poles always compete for the K channels. Poles
/// that have met their quota keep playing unrecorded until the rest catch up.
pub fn run_episodes(
    config: &CartPoleConfig,
    kind: PolicyKind,
    episodes: usize,
    seed: u64,
    controller: &dyn Controller,
) -> Result<EpisodeStats> {
    config.validate()?;
    if episodes == 0 {
        return Err(Error::InvalidParams("episodes must be positive".into()));
    }
    let n = config.n_poles();
    let quota = episodes.div_ceil(n);
    let pi = if needs_stationary(kind) {
        if config.p.contains(&0.0) {
            return Err(Error::InvalidParams(format!(
                "{kind} needs every delivery probability to be positive"
            )));
        }
        config.stationary()?.pi
    } else {
        vec![1.0; n]
    };

    let mut poles: Vec<Pole> = (0..n).map(|i| Pole::new(seed, i)).collect();
    let mut steps: Vec<Vec<u32>> = vec![Vec::with_capacity(quota); n];
    let mut scores = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut scheduled = Vec::with_capacity(config.n_channels);
    let mut pending = n;
    let mut slot = 0u64;

    while pending > 0 {
        if kind == PolicyKind::RoundRobin {
            round_robin_into(slot, n, config.n_channels, &mut scheduled);
        } else {
            for (i, pole) in poles.iter().enumerate() {
                scores[i] = pole_index(kind, pole, config.p[i], pi[i], &config.moments);
            }
            top_k_into(&scores, config.n_channels, &mut order, &mut scheduled);
        }
        for (i, pole) in poles.iter_mut().enumerate() {
            let delivered =
                scheduled.contains(&i) && pole.channel.random_bool(config.p[i]);
            if delivered {
                pole.estimate = pole.truth;
            }
            pole.aoi = step_aoi(pole.aoi, delivered);
        }

        for (i, pole) in poles.iter_mut().enumerate() {
            let u = controller.act(&pole.estimate).force();
            let d = gaussian(&mut pole.disturbance, config.disturbance_sigma);
            pole.truth = dynamics_step(pole.truth, u, d);
            pole.estimate = estimator_predict(pole.estimate, u);
            pole.steps += 1;
            if !pole.truth.is_alive() || pole.steps >= MAX_STEPS {
                if pole.recorded < quota {
                    steps[i].push(pole.steps);
                    pole.recorded += 1;
                    if pole.recorded == quota {
                        pending -= 1;
                    }
                }
                pole.restart();
            }
        }
        slot += 1;
    }

    Ok(EpisodeStats {
        steps: steps.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_from_rest() {
        let s = dynamics_step(CartPoleState::ZERO, 10.0, 0.0);
        assert_eq!(s.x, 0.0);
        assert_eq!(s.alpha, 0.0);
        assert!((s.x_dot - 0.195_121_951_219_512_2).abs() < 1e-12);
        assert!((s.alpha_dot + 0.292_682_926_829_268_3).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_and_force_additivity() {
        assert_eq!(dynamics_step(CartPoleState::ZERO, 0.0, 0.0), CartPoleState::ZERO);
        let s = CartPoleState::new(0.3, -0.2, 0.05, 0.4);
        assert_eq!(dynamics_step(s, 7.5, -7.5), dynamics_step(s, 0.0, 0.0));
    }

    #[test]
    fn weights_rule() {
        let w = context_weights(&CartPoleState::new(1.0, 0.5, -0.01, 0.02));
        assert_eq!((w.w_pos, w.w_ang), (9.0, 1.0));
        let w = context_weights(&CartPoleState::ZERO);
        assert_eq!((w.w_pos, w.w_ang), (1.0, 1.0));
        let w = context_weights(&CartPoleState::new(-1.0, -0.5, 0.0, 0.0));
        assert_eq!(w.w_pos, 9.0);
    }

    #[test]
    fn lapse_rescaling() {
        let s = CartPoleState::new(0.1, 0.2, 0.03, -0.1);
        let unit = DimensionWeights { w_pos: 1.0, w_ang: 1.0 };
        assert_eq!(cartpole_lapse(&s, &s, &unit), 0.0);
        let shifted = CartPoleState { x: s.x + X_LIMIT, ..s };
        assert!((cartpole_lapse(&shifted, &s, &unit) - 1.0).abs() < 1e-12);
        let both = CartPoleState {
            x: s.x + X_LIMIT,
            alpha: s.alpha + ANGLE_LIMIT,
            ..s
        };
        let w = DimensionWeights { w_pos: 9.0, w_ang: 1.0 };
        assert!((cartpole_lapse(&both, &s, &w) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn termination_edge() {
        let eps = 1e-9;
        assert!(!CartPoleState::new(0.0, 0.0, ANGLE_LIMIT + eps, 0.0).is_alive());
        assert!(CartPoleState::new(0.0, 0.0, ANGLE_LIMIT - eps, 0.0).is_alive());
        assert!(!CartPoleState::new(-X_LIMIT - eps, 0.0, 0.0, 0.0).is_alive());
        assert!(CartPoleState::new(X_LIMIT, 0.0, 0.0, 0.0).is_alive());
    }

    #[test]
    fn controller_sign_logic() {
        let c = LinearSignController::default();
        let lean = CartPoleState::new(0.0, 0.0, 0.01, 0.0);
        assert_eq!(c.act(&lean), Direction::Right);
        let s = CartPoleState::new(0.2, -0.3, 0.02, 0.1);
        assert_eq!(c.act(&-s), c.act(&s).opposite());
    }

    #[test]
    fn calibration_text_round_trip() {
        let cal = Calibration {
            seed: 9,
            sigma: 10.0,
            episodes: 3,
            samples: 1234,
            moments: DimensionMoments {
                a2: [0.0, 0.0123, 0.0, 1.5],
                w_mean: [5.0, 5.0, 4.2, 4.2],
            },
        };
        assert_eq!(Calibration::from_text(&cal.to_text()).unwrap(), cal);
        assert!(Calibration::from_text("seed 1\n").is_err());
    }
}

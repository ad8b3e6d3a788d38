//! Stage payoffs of the one-step game, the compact control set, the channel
//! ranking check, and the reduction to the two-channel game.
//!
//! Given that the jammer selects channel `j`, the control reaches the plant
//! with probability `q_j`, so
//!
//! ```text
//! h_j(u) = q_j·σ(F(x,u), u, f_j) + (1 − q_j)·σ(F(x,0), u, f_j).
//! ```

use std::fmt;
use std::sync::Arc;

use crate::channel::{ChannelSet, JammerPolicy, LinkState};
use crate::error::{Error, Result};
use crate::numeric::{bisect, central_diff, linspace};

/// Plant map `(x, v) ↦ x⁺`.
pub type Dynamics = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// Payoff `σ(y, u, f_j)`; the channel argument is 1-based.
pub type Payoff = Arc<dyn Fn(&[f64], f64, usize) -> f64 + Send + Sync>;
/// Partial derivatives of the payoff, `(∂σ/∂y, ∂σ/∂u)`.
pub type PayoffGradient = Arc<dyn Fn(&[f64], f64, usize) -> (Vec<f64>, f64) + Send + Sync>;
/// Input sensitivity of the plant, `∂F/∂v (x, v)`.
pub type InputSensitivity = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// Scalar curve `u ↦ f(u)`.
pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default level margin above `max_j h_j(0)`.
pub const DEFAULT_MARGIN: f64 = 1.0;

/// Closed bounded interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ControlInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ControlInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::contract(format!(
                "[{lo}, {hi}] is not a closed bounded interval"
            )));
        }
        Ok(ControlInterval { lo, hi })
    }

    pub fn point(u: f64) -> Self {
        ControlInterval { lo: u, hi: u }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }

    /// Widened by `fraction` of the width on each side.
    pub fn inflate(&self, fraction: f64) -> Self {
        let pad = fraction * self.width();
        ControlInterval {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    pub fn hull(&self, other: &ControlInterval) -> Self {
        ControlInterval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl fmt::Display for ControlInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Everything needed to evaluate the conditional payoffs `h_j(u)` at one
/// plant state and link configuration.
#[derive(Clone)]
pub struct GameInstance {
    dynamics: Dynamics,
    payoff: Payoff,
    gradient: Option<(PayoffGradient, InputSensitivity)>,
    channels: ChannelSet,
    link: LinkState,
    x: Vec<f64>,
    known_control_set: Option<ControlInterval>,
    // cached at construction
    q: Vec<f64>,
    x_idle: Vec<f64>,
}

impl fmt::Debug for GameInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameInstance")
            .field("x", &self.x)
            .field("q", &self.q)
            .field("link", &self.link)
            .field("analytic_derivatives", &self.gradient.is_some())
            .field("known_control_set", &self.known_control_set)
            .finish()
    }
}

impl GameInstance {
    pub fn new(
        x: Vec<f64>,
        dynamics: Dynamics,
        payoff: Payoff,
        channels: ChannelSet,
        link: LinkState,
    ) -> Result<Self> {
        if link.channels() != channels.len() {
            return Err(Error::contract(format!(
                "link state covers {} channels, channel set has {}",
                link.channels(),
                channels.len()
            )));
        }
        let x_idle = dynamics(&x, 0.0);
        let q = channels.q_at(link.c_minus()).to_vec();
        Ok(GameInstance {
            dynamics,
            payoff,
            gradient: None,
            channels,
            link,
            x,
            known_control_set: None,
            q,
            x_idle,
        })
    }

    /// Supplies analytic derivatives; `h_j'` then follows by the chain rule
    /// instead of finite differences.
    pub fn with_derivatives(
        mut self,
        gradient: PayoffGradient,
        sensitivity: InputSensitivity,
    ) -> Self {
        self.gradient = Some((gradient, sensitivity));
        self
    }

    /// Attaches a control set known in closed form. [`compute_control_set`]
    /// still validates coercivity and connectedness but returns this set.
    pub fn with_control_set(mut self, set: ControlInterval) -> Self {
        self.known_control_set = Some(set);
        self
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn j_minus(&self) -> usize {
        self.link.j_minus()
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn link(&self) -> &LinkState {
        &self.link
    }

    /// Passing probabilities at the observed prior states.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn known_control_set(&self) -> Option<ControlInterval> {
        self.known_control_set
    }

    pub fn next_state(&self, v: f64) -> Vec<f64> {
        (self.dynamics)(&self.x, v)
    }

    pub fn payoff(&self, y: &[f64], u: f64, j: usize) -> f64 {
        (self.payoff)(y, u, j)
    }

    fn check_channel(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n_channels() {
            return Err(Error::contract(format!(
                "channel {j} outside 1..={}",
                self.n_channels()
            )));
        }
        Ok(())
    }

    /// `h_j(u)` without index checks.
    pub(crate) fn h(&self, u: f64, j: usize) -> f64 {
        let qj = self.q[j - 1];
        let idle = (self.payoff)(&self.x_idle, u, j);
        if qj == 0.0 {
            return idle;
        }
        let driven = (self.payoff)(&(self.dynamics)(&self.x, u), u, j);
        qj * driven + (1.0 - qj) * idle
    }

    /// `h_j'(u)`: chain rule when derivatives were supplied, central
    /// differences otherwise.
    pub(crate) fn h_du(&self, u: f64, j: usize) -> f64 {
        match &self.gradient {
            Some((grad, sens)) => {
                let qj = self.q[j - 1];
                let y = (self.dynamics)(&self.x, u);
                let (dy, du) = grad(&y, u, j);
                let fv = sens(&self.x, u);
                let through_plant: f64 = dy.iter().zip(&fv).map(|(a, b)| a * b).sum();
                let (_, du_idle) = grad(&self.x_idle, u, j);
                qj * (through_plant + du) + (1.0 - qj) * du_idle
            }
            None => self.h_du_numeric(u, j),
        }
    }

    pub(crate) fn h_du_numeric(&self, u: f64, j: usize) -> f64 {
        central_diff(|v| self.h(v, j), u)
    }

    fn h_max(&self, u: f64) -> f64 {
        (1..=self.n_channels())
            .map(|j| self.h(u, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn h_min(&self, u: f64) -> f64 {
        (1..=self.n_channels())
            .map(|j| self.h(u, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cross-checks the analytic `h_j'` against central differences at
    /// `points` evenly spaced controls of `interval`, with mixed tolerance
    /// `1e-5·(1+|value|)`. A no-op without analytic derivatives.
    pub fn check_derivatives(&self, interval: &ControlInterval, points: usize) -> Result<()> {
        if self.gradient.is_none() {
            return Ok(());
        }
        for u in linspace(interval.lo, interval.hi, points) {
            for j in 1..=self.n_channels() {
                let analytic = self.h_du(u, j);
                let numeric = self.h_du_numeric(u, j);
                if (analytic - numeric).abs() > 1e-5 * (1.0 + analytic.abs()) {
                    return Err(Error::DerivativeMismatch {
                        channel: j,
                        u,
                        analytic,
                        numeric,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `h_j(u) = E[σ(x⁺, u, f_S) | S = j]`.
pub fn conditional_payoff(game: &GameInstance, u: f64, j: usize) -> Result<f64> {
    game.check_channel(j)?;
    Ok(game.h(u, j))
}

/// `h_j'(u)`.
pub fn conditional_payoff_du(game: &GameInstance, u: f64, j: usize) -> Result<f64> {
    game.check_channel(j)?;
    Ok(game.h_du(u, j))
}

/// `Σ_j p_j h_j(u) = E[σ(x⁺, u, f_S)]`.
pub fn expected_payoff(game: &GameInstance, u: f64, policy: &JammerPolicy) -> Result<f64> {
    if policy.len() != game.n_channels() {
        return Err(Error::contract(format!(
            "policy has {} entries, game has {} channels",
            policy.len(),
            game.n_channels()
        )));
    }
    Ok(policy
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| p * game.h(u, i + 1))
        .sum())
}

/// Tuning for [`compute_control_set_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSetOptions {
    /// `α = max_j h_j(0) + margin`.
    pub margin: f64,
    /// Largest `|u|` scanned before declaring the payoffs non-coercive.
    pub scan_bound: f64,
    /// First outward step; steps double from there.
    pub initial_step: f64,
    /// Bisection tolerance on the sublevel boundary.
    pub tol: f64,
    /// Grid used for the connectedness check.
    pub connectivity_points: usize,
    /// The connectedness grid extends this many set widths past each end.
    pub connectivity_reach: f64,
}

impl Default for ControlSetOptions {
    fn default() -> Self {
        ControlSetOptions {
            margin: DEFAULT_MARGIN,
            scan_bound: 1e6,
            initial_step: 1e-3,
            tol: 1e-9,
            connectivity_points: 10_000,
            connectivity_reach: 8.0,
        }
    }
}

/// Compact control set with the default scan settings and the given margin.
pub fn compute_control_set(game: &GameInstance, margin: f64) -> Result<ControlInterval> {
    compute_control_set_with(
        game,
        &ControlSetOptions {
            margin,
            ..ControlSetOptions::default()
        },
    )
}

/// Builds the sublevel interval `U_α` around `u = 0`.
///
/// Scans outward from 0 with doubling steps until every `h_j` exceeds `α`,
/// bisects the crossing, and returns the hull of the per-channel sublevel
/// sets. That hull contains `{u : max_j h_j(u) ≤ α}` and every minimizer of
/// any mixture `Σ p_j h_j` (whose minimum is at most `α`). If the game carries
/// a closed-form control set, that set is returned after the scan has
/// validated coercivity and connectedness.
pub fn compute_control_set_with(
    game: &GameInstance,
    opts: &ControlSetOptions,
) -> Result<ControlInterval> {
    if !(opts.margin > 0.0) {
        return Err(Error::contract(format!(
            "margin must be positive, got {}",
            opts.margin
        )));
    }
    let alpha = game.h_max(0.0) + opts.margin;
    let excess = |u: f64| game.h_min(u) - alpha;

    let mut ends = [0.0f64; 2];
    for (end, dir) in ends.iter_mut().zip([-1.0, 1.0]) {
        let mut inside: f64 = 0.0;
        let mut step = opts.initial_step;
        loop {
            let u = dir * (inside.abs() + step);
            let e = excess(u);
            if e > 0.0 {
                *end = bisect(excess, inside, u, opts.tol);
                break;
            }
            if u.abs() >= opts.scan_bound {
                return Err(Error::NotCoercive {
                    bound: opts.scan_bound,
                    value: e + alpha,
                    alpha,
                });
            }
            inside = u;
            step *= 2.0;
        }
    }
    let hull = ControlInterval {
        lo: ends[0],
        hi: ends[1],
    };

    // look well beyond the set for a second component
    let reach = opts.connectivity_reach * hull.width().max(opts.initial_step);
    let grid = linspace(hull.lo - reach, hull.hi + reach, opts.connectivity_points);
    let below_max = |u: f64| game.h_max(u) <= alpha;
    let below_min = |u: f64| game.h_min(u) <= alpha;
    for indicator in [&below_max as &dyn Fn(f64) -> bool, &below_min] {
        let flags: Vec<bool> = grid.iter().map(|&u| indicator(u)).collect();
        let changes = flags.windows(2).filter(|w| w[0] != w[1]).count();
        if changes > 2 {
            return Err(Error::Disconnected {
                sign_changes: changes,
            });
        }
    }

    Ok(game.known_control_set.unwrap_or(hull))
}

/// First pair of non-current channels found out of order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingViolation {
    pub u: f64,
    pub j: usize,
    pub k: usize,
    pub h_j: f64,
    pub h_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub holds: bool,
    pub grid_points: usize,
    pub violation: Option<RankingViolation>,
}

/// Checks `h_j(u) ≥ h_k(u)` for all non-current channels `j < k` on a uniform
/// grid over `interval`.
///
/// Only consecutive non-current channels are compared (the order is
/// transitive); a relative slack of `1e-12` absorbs rounding when channels tie.
pub fn check_ranking(
    game: &GameInstance,
    interval: &ControlInterval,
    grid_points: usize,
) -> RankingReport {
    let ranked: Vec<usize> = (1..=game.n_channels())
        .filter(|&j| j != game.j_minus())
        .collect();
    let grid = linspace(interval.lo, interval.hi, grid_points.max(2));
    for &u in &grid {
        let values: Vec<f64> = ranked.iter().map(|&j| game.h(u, j)).collect();
        for (w, idx) in values.windows(2).zip(ranked.windows(2)) {
            let slack = 1e-12 * (1.0 + w[0].abs().max(w[1].abs()));
            if w[0] < w[1] - slack {
                return RankingReport {
                    holds: false,
                    grid_points: grid.len(),
                    violation: Some(RankingViolation {
                        u,
                        j: idx[0],
                        k: idx[1],
                        h_j: w[0],
                        h_k: w[1],
                    }),
                };
            }
        }
    }
    RankingReport {
        holds: true,
        grid_points: grid.len(),
        violation: None,
    }
}

/// Grid density used by [`reduce_game`] for its ranking precondition.
pub const RANKING_GRID: usize = 1001;

/// The two-channel game between the most damaging alternative channel and
/// the current channel.
#[derive(Clone)]
pub struct ReducedGame {
    h: [Curve; 2],
    dh: [Curve; 2],
    interval: ControlInterval,
    blocking_index: usize,
    j_minus: usize,
    n: usize,
}

impl fmt::Debug for ReducedGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedGame")
            .field("interval", &self.interval)
            .field("blocking_index", &self.blocking_index)
            .field("j_minus", &self.j_minus)
            .field("n", &self.n)
            .finish()
    }
}

impl ReducedGame {
    /// A reduced game from explicit curves, labelled as channel 1 (blocking)
    /// against channel 2 (current) of a two-channel family.
    pub fn from_curves(
        h1: Curve,
        h1_du: Curve,
        h2: Curve,
        h2_du: Curve,
        interval: ControlInterval,
    ) -> Self {
        ReducedGame {
            h: [h1, h2],
            dh: [h1_du, h2_du],
            interval,
            blocking_index: 1,
            j_minus: 2,
            n: 2,
        }
    }

    /// Relabels which channels of an `n`-channel family the curves stand for.
    pub fn with_channels(
        mut self,
        blocking_index: usize,
        j_minus: usize,
        n: usize,
    ) -> Result<Self> {
        if blocking_index == j_minus
            || blocking_index == 0
            || j_minus == 0
            || blocking_index.max(j_minus) > n
        {
            return Err(Error::contract(format!(
                "invalid labels: blocking {blocking_index}, current {j_minus}, n = {n}"
            )));
        }
        self.blocking_index = blocking_index;
        self.j_minus = j_minus;
        self.n = n;
        Ok(self)
    }

    /// Same game with the two curves exchanged (labels exchanged too).
    pub fn swapped(&self) -> Self {
        let [a, b] = self.h.clone();
        let [da, db] = self.dh.clone();
        ReducedGame {
            h: [b, a],
            dh: [db, da],
            interval: self.interval,
            blocking_index: self.j_minus,
            j_minus: self.blocking_index,
            n: self.n,
        }
    }

    pub fn with_interval(mut self, interval: ControlInterval) -> Self {
        self.interval = interval;
        self
    }

    pub fn h1(&self, u: f64) -> f64 {
        (self.h[0])(u)
    }

    pub fn h2(&self, u: f64) -> f64 {
        (self.h[1])(u)
    }

    pub fn h1_du(&self, u: f64) -> f64 {
        (self.dh[0])(u)
    }

    pub fn h2_du(&self, u: f64) -> f64 {
        (self.dh[1])(u)
    }

    /// `p̃ᵀh̃(u)`.
    pub fn mixed(&self, p_tilde: [f64; 2], u: f64) -> f64 {
        p_tilde[0] * self.h1(u) + p_tilde[1] * self.h2(u)
    }

    pub fn interval(&self) -> ControlInterval {
        self.interval
    }

    pub fn blocking_index(&self) -> usize {
        self.blocking_index
    }

    pub fn j_minus(&self) -> usize {
        self.j_minus
    }

    pub fn n_channels(&self) -> usize {
        self.n
    }
}

/// Lowest-index channel other than the current one.
pub fn blocking_channel(j_minus: usize) -> usize {
    if j_minus == 1 {
        2
    } else {
        1
    }
}

/// Reduces the game to the blocking channel against the current channel.
///
/// Refuses when the non-current channels are not ranked on `interval`.
pub fn reduce_game(game: &GameInstance, interval: &ControlInterval) -> Result<ReducedGame> {
    let report = check_ranking(game, interval, RANKING_GRID);
    if let Some(v) = report.violation {
        return Err(Error::Ranking {
            u: v.u,
            j: v.j,
            k: v.k,
            h_j: v.h_j,
            h_k: v.h_k,
        });
    }
    let blocking = blocking_channel(game.j_minus());
    let current = game.j_minus();
    let g = Arc::new(game.clone());
    let curve = |j: usize| -> Curve {
        let g = Arc::clone(&g);
        Arc::new(move |u| g.h(u, j))
    };
    let slope = |j: usize| -> Curve {
        let g = Arc::clone(&g);
        Arc::new(move |u| g.h_du(u, j))
    };
    ReducedGame::from_curves(
        curve(blocking),
        slope(blocking),
        curve(current),
        slope(current),
        *interval,
    )
    .with_channels(blocking, current, game.n_channels())
}

/// Places a reduced strategy on the full simplex: `p̃₁` on the blocking
/// channel, `p̃₂` on the current one, zero elsewhere.
pub fn lift_strategy(
    p_tilde: [f64; 2],
    blocking_index: usize,
    j_minus: usize,
    n: usize,
) -> Result<JammerPolicy> {
    if blocking_index == j_minus {
        return Err(Error::contract(format!(
            "blocking channel and current channel coincide ({j_minus})"
        )));
    }
    if blocking_index == 0 || j_minus == 0 || blocking_index.max(j_minus) > n {
        return Err(Error::contract(format!(
            "channels {blocking_index}, {j_minus} outside 1..={n}"
        )));
    }
    let mut p = vec![0.0; n];
    p[blocking_index - 1] = p_tilde[0];
    p[j_minus - 1] = p_tilde[1];
    JammerPolicy::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar LQ plant built directly from the generic pieces.
    fn scalar_lq(a: f64, b: f64, x: f64, q: Vec<f64>, j_minus: usize, tau: f64) -> GameInstance {
        let n = q.len();
        let dynamics: Dynamics = Arc::new(move |x: &[f64], v: f64| vec![a * x[0] + b * v]);
        let payoff: Payoff = Arc::new(move |y: &[f64], u: f64, j: usize| {
            x * x + u * u + y[0] * y[0] + if j == j_minus { tau } else { 0.0 }
        });
        GameInstance::new(
            vec![x],
            dynamics,
            payoff,
            ChannelSet::constant(q).unwrap(),
            LinkState::on_channel(j_minus, n).unwrap(),
        )
        .unwrap()
    }

    fn scalar() -> GameInstance {
        scalar_lq(2.0, 1.0, 1.0, vec![0.1, 0.9], 2, 1.6)
    }

    const U_BAR: f64 = -0.585_786_437_626_905;

    #[test]
    fn payoff_at_zero_ignores_q() {
        for q in [0.0, 0.3, 1.0] {
            let g = scalar_lq(2.0, 1.0, 1.0, vec![q, 1.0], 2, 0.0);
            assert_eq!(conditional_payoff(&g, 0.0, 1).unwrap(), 5.0);
        }
    }

    #[test]
    fn scalar_indifference_values() {
        let g = scalar();
        let h1 = conditional_payoff(&g, U_BAR, 1).unwrap();
        let h2 = conditional_payoff(&g, U_BAR, 2).unwrap();
        assert!((h1 - 5.14315).abs() < 1e-5);
        assert!((h2 - 5.14315).abs() < 1e-5);
        assert!((h1 - h2).abs() < 1e-12);
    }

    #[test]
    fn decomposition_identity() {
        let g = scalar();
        for &u in &[-3.7, -1.0, 0.0, 0.4, 2.5] {
            for j in 1..=2 {
                let qj = g.q()[j - 1];
                let direct = qj * g.payoff(&g.next_state(u), u, j)
                    + (1.0 - qj) * g.payoff(&g.next_state(0.0), u, j);
                assert_eq!(conditional_payoff(&g, u, j).unwrap(), direct);
            }
        }
        assert!(conditional_payoff(&g, 0.0, 3).is_err());
        assert!(conditional_payoff(&g, 0.0, 0).is_err());
    }

    #[test]
    fn expected_payoff_examples() {
        let g = scalar();
        let e1 = JammerPolicy::vertex(2, 1).unwrap();
        assert_eq!(expected_payoff(&g, 0.7, &e1).unwrap(), g.h(0.7, 1));
        let half = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        assert!((expected_payoff(&g, 0.0, &half).unwrap() - 5.8).abs() < 1e-12);
        for p in [0.0, 0.2, 0.77, 1.0] {
            let pol = JammerPolicy::new(vec![p, 1.0 - p]).unwrap();
            assert!((expected_payoff(&g, U_BAR, &pol).unwrap() - 5.14315).abs() < 1e-5);
        }
    }

    #[test]
    fn control_set_of_scalar_without_closed_form() {
        let u = compute_control_set(&scalar(), 1.0).unwrap();
        // α = 7.6; h1 ≤ α on [-1.72994, 1.36631], h2 on [-2.14061, 0.24587]
        assert!((u.lo - (-3.6 - (12.96f64 + 4.0 * 1.9).sqrt()) / 3.8).abs() < 1e-8);
        assert!((u.hi - (-0.4 + (0.16f64 + 4.0 * 1.1 * 2.6).sqrt()) / 2.2).abs() < 1e-8);
        // contains the minimizer of max_j h_j found by a dense scan
        let grid = linspace(-10.0, 10.0, 200_001);
        let g = scalar();
        let argmin = grid
            .iter()
            .copied()
            .min_by(|a, b| g.h_max(*a).partial_cmp(&g.h_max(*b)).unwrap())
            .unwrap();
        assert!(u.contains(argmin));
    }

    #[test]
    fn known_control_set_is_returned_after_validation() {
        let g = scalar().with_control_set(ControlInterval::new(-4.0, 0.0).unwrap());
        let u = compute_control_set(&g, 1.0).unwrap();
        assert_eq!(u, ControlInterval { lo: -4.0, hi: 0.0 });
    }

    #[test]
    fn zero_state_shrinks_with_margin() {
        let g = scalar_lq(2.0, 1.0, 0.0, vec![0.1, 0.9], 2, 1.6);
        for margin in [1.0, 0.01, 1e-4] {
            let u = compute_control_set(&g, margin).unwrap();
            assert!(u.contains(0.0));
            // widest channel: 1.1u² ≤ 1.6 + margin
            assert!(u.width() <= 2.0 * ((1.6 + margin) / 1.1f64).sqrt() + 1e-8);
        }
        // the widest per-channel set is bounded by τ; the max-sublevel set
        // (1.6 + 1.9u² ≤ 1.6 + m) has width O(√m)
        let g = scalar_lq(2.0, 1.0, 0.0, vec![0.1, 0.9], 2, 0.0);
        let u = compute_control_set(&g, 1e-4).unwrap();
        assert!(u.width() <= 2.0 * (1e-4f64 / 1.1).sqrt() + 1e-8);
    }

    #[test]
    fn non_coercive_payoff_is_rejected() {
        let dynamics: Dynamics = Arc::new(|x: &[f64], v: f64| vec![x[0] + v]);
        let payoff: Payoff = Arc::new(|_: &[f64], u: f64, _| -u * u);
        let g = GameInstance::new(
            vec![1.0],
            dynamics,
            payoff,
            ChannelSet::constant(vec![0.2, 0.8]).unwrap(),
            LinkState::on_channel(2, 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            compute_control_set(&g, 1.0),
            Err(Error::NotCoercive { .. })
        ));
        assert!(compute_control_set(&g, 0.0).is_err());
    }

    #[test]
    fn disconnected_sublevel_set_is_rejected() {
        // two wells at u = 0 and u = 3 separated by a hump of height 2.53
        let dynamics: Dynamics = Arc::new(|x: &[f64], _v: f64| x.to_vec());
        let payoff: Payoff = Arc::new(|_: &[f64], u: f64, _| u * u * (u - 3.0) * (u - 3.0) / 2.0);
        let g = GameInstance::new(
            vec![0.0],
            dynamics,
            payoff,
            ChannelSet::constant(vec![0.5, 0.5]).unwrap(),
            LinkState::on_channel(2, 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            compute_control_set(&g, 0.5),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn ranking_examples() {
        let exact = |beta: f64| {
            ControlInterval::new((-2.0 * beta).min(0.0), (-2.0 * beta).max(0.0)).unwrap()
        };
        // ascending q, current channel in the middle
        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.1, 0.5, 0.9], 2, 1.0);
        assert!(check_ranking(&g, &exact(2.0), 101).holds);
        // ties
        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.4, 0.4, 0.9], 3, 1.0);
        assert!(check_ranking(&g, &exact(2.0), 101).holds);
        // descending q among the ranked channels
        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.9, 0.5, 0.1], 3, 1.0);
        let r = check_ranking(&g, &exact(2.0), 101);
        assert!(!r.holds);
        let v = r.violation.unwrap();
        assert_eq!((v.j, v.k), (1, 2));
        assert!(v.u > -4.0 && v.u < 0.0);
    }

    #[test]
    fn reduction_picks_blocking_and_current() {
        let g = scalar();
        let rg = reduce_game(&g, &ControlInterval::new(-4.0, 0.0).unwrap()).unwrap();
        assert_eq!((rg.blocking_index(), rg.j_minus()), (1, 2));
        assert_eq!(rg.h1(-1.0), g.h(-1.0, 1));
        assert_eq!(rg.h2(-1.0), g.h(-1.0, 2));

        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.1, 0.5, 0.9], 1, 1.0);
        let rg = reduce_game(&g, &ControlInterval::new(-4.0, 0.0).unwrap()).unwrap();
        assert_eq!((rg.blocking_index(), rg.j_minus()), (2, 1));
        assert_eq!(rg.h1(-1.0), g.h(-1.0, 2));
        assert_eq!(rg.h2(-1.0), g.h(-1.0, 1));

        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.1, 0.9], 1, 1.0);
        let rg = reduce_game(&g, &ControlInterval::new(-4.0, 0.0).unwrap()).unwrap();
        assert_eq!((rg.blocking_index(), rg.j_minus()), (2, 1));
        assert_eq!(rg.h1(-0.5), g.h(-0.5, 2));

        let g = scalar_lq(2.0, 1.0, 1.0, vec![0.9, 0.5, 0.1], 3, 1.0);
        assert!(matches!(
            reduce_game(&g, &ControlInterval::new(-4.0, 0.0).unwrap()),
            Err(Error::Ranking { j: 1, k: 2, .. })
        ));
    }

    #[test]
    fn finite_difference_slopes_match_hand_formula() {
        // h_j'(u) = 2(1+q_j)u + 4q_j for A = 2, B = 1, x = 1
        let g = scalar();
        for &u in &[-3.0, U_BAR, 0.0, 1.2] {
            for (j, q) in [(1, 0.1), (2, 0.9)] {
                let want = 2.0 * (1.0 + q) * u + 4.0 * q;
                assert!((conditional_payoff_du(&g, u, j).unwrap() - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lift_examples() {
        let p = lift_strategy([1.0, 0.0], 1, 3, 4).unwrap();
        assert_eq!(p.probabilities(), &[1.0, 0.0, 0.0, 0.0]);
        let p = lift_strategy([0.60723, 0.39277], 1, 2, 2).unwrap();
        assert_eq!(p.probabilities(), &[0.60723, 0.39277]);
        let p = lift_strategy([0.25, 0.75], 2, 4, 5).unwrap();
        assert_eq!(p.probabilities(), &[0.0, 0.25, 0.0, 0.75, 0.0]);
        assert!(lift_strategy([0.5, 0.5], 2, 2, 3).is_err());
    }
}

//! Brute-force ground truth: grid upper and lower values of the reduced game,
//! saddle-inequality certificates, and Monte Carlo estimates of the expected
//! payoff from simulated channel switching.

use serde::Serialize;

use crate::channel::{sample_unchecked, JammerPolicy, TrialStreams};
use crate::error::{Error, Result};
use crate::game::{ControlInterval, GameInstance, ReducedGame};
use crate::numeric::linspace;

pub const DEFAULT_U_POINTS: usize = 2001;
pub const DEFAULT_P_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub u_points: usize,
    pub p_points: usize,
    pub interval: ControlInterval,
}

impl GridSpec {
    pub fn new(u_points: usize, p_points: usize, interval: ControlInterval) -> Result<Self> {
        if u_points < 3 || p_points < 3 {
            return Err(Error::contract(format!(
                "grids need at least 3 points, got {u_points} controls and {p_points} strategies"
            )));
        }
        Ok(GridSpec {
            u_points,
            p_points,
            interval,
        })
    }

    /// Default densities (2001 × 1001) over `interval`.
    pub fn default_for(interval: ControlInterval) -> Self {
        GridSpec {
            u_points: DEFAULT_U_POINTS,
            p_points: DEFAULT_P_POINTS,
            interval,
        }
    }

    /// Both densities doubled (interval count doubled, so the new grids
    /// contain the old ones).
    pub fn doubled(&self) -> Self {
        GridSpec {
            u_points: 2 * self.u_points - 1,
            p_points: 2 * self.p_points - 1,
            interval: self.interval,
        }
    }

    fn u_grid(&self) -> Vec<f64> {
        linspace(self.interval.lo, self.interval.hi, self.u_points)
    }

    fn p_grid(&self) -> Vec<f64> {
        linspace(0.0, 1.0, self.p_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    /// `min_u max(h̃₁, h̃₂)` on the control grid.
    pub j1_hat: f64,
    /// `max_p̃ min_u p̃ᵀh̃(u)` on the product grid.
    pub j2_hat: f64,
    pub u_argmin: f64,
    pub p_argmax: [f64; 2],
    pub gap: f64,
}

impl OracleReport {
    /// Whether the maximizing strategy sits on a vertex of the simplex, up to
    /// `steps` grid steps.
    pub fn p_argmax_at_vertex(&self, spec: &GridSpec, steps: f64) -> bool {
        let step = 1.0 / (spec.p_points - 1) as f64;
        self.p_argmax[0] <= steps * step || self.p_argmax[0] >= 1.0 - steps * step
    }
}

/// Discretized upper and lower values.
///
/// The inner maximization of the upper value is exact (an affine function of
/// `p̃` peaks at a vertex); the lower value scans the full product grid. Ties
/// go to the first grid index.
pub fn grid_game_values(rg: &ReducedGame, spec: &GridSpec) -> OracleReport {
    let us = spec.u_grid();
    let h1: Vec<f64> = us.iter().map(|&u| rg.h1(u)).collect();
    let h2: Vec<f64> = us.iter().map(|&u| rg.h2(u)).collect();

    let (mut j1_hat, mut u_argmin) = (f64::INFINITY, us[0]);
    for (i, &u) in us.iter().enumerate() {
        let top = h1[i].max(h2[i]);
        if top < j1_hat {
            j1_hat = top;
            u_argmin = u;
        }
    }

    let (mut j2_hat, mut p_best) = (f64::NEG_INFINITY, 0.0);
    for p in spec.p_grid() {
        let inner = h1
            .iter()
            .zip(&h2)
            .map(|(a, b)| p * a + (1.0 - p) * b)
            .fold(f64::INFINITY, f64::min);
        if inner > j2_hat {
            j2_hat = inner;
            p_best = p;
        }
    }

    OracleReport {
        j1_hat,
        j2_hat,
        u_argmin,
        p_argmax: [p_best, 1.0 - p_best],
        gap: j1_hat - j2_hat,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleCheck {
    pub passed: bool,
    /// `p̃ᵀh̃(u*)`.
    pub value: f64,
    /// Largest controller gain `p̃ᵀh̃(u*) − p̃ᵀh̃(u)` over the control grid.
    pub controller_gain: f64,
    pub controller_u: f64,
    /// Largest jammer gain `p̃′ᵀh̃(u*) − p̃ᵀh̃(u*)` over the strategy grid.
    pub jammer_gain: f64,
    pub jammer_p: f64,
    /// Side (a): no control on the grid does better than `u*` by `tol`.
    pub controller_ok: bool,
    /// Side (b): no strategy on the grid does better than `p̃` by `tol`.
    pub jammer_ok: bool,
}

/// Certifies `(u*, p̃)` as a saddle on the grids up to `tol`.
pub fn verify_saddle(
    rg: &ReducedGame,
    u_star: f64,
    p_tilde: [f64; 2],
    spec: &GridSpec,
    tol: f64,
) -> SaddleCheck {
    let value = rg.mixed(p_tilde, u_star);

    let (mut controller_gain, mut controller_u) = (f64::NEG_INFINITY, u_star);
    for u in spec.u_grid() {
        let gain = value - rg.mixed(p_tilde, u);
        if gain > controller_gain {
            controller_gain = gain;
            controller_u = u;
        }
    }

    let (h1, h2) = (rg.h1(u_star), rg.h2(u_star));
    let (mut jammer_gain, mut jammer_p) = (f64::NEG_INFINITY, p_tilde[0]);
    for p in spec.p_grid() {
        let gain = p * h1 + (1.0 - p) * h2 - value;
        if gain > jammer_gain {
            jammer_gain = gain;
            jammer_p = p;
        }
    }

    let controller_ok = controller_gain <= tol;
    let jammer_ok = jammer_gain <= tol;
    SaddleCheck {
        passed: controller_ok && jammer_ok,
        value,
        controller_gain,
        controller_u,
        jammer_gain,
        jammer_p,
        controller_ok,
        jammer_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub mean: f64,
    /// `3·s/√trials`.
    pub half_width_3sigma: f64,
    pub std_dev: f64,
    pub trials: u64,
    /// Fraction of trials with a passing link.
    pub passing_fraction: f64,
    /// How often each channel was selected.
    pub selections: Vec<u64>,
}

impl MonteCarloReport {
    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width_3sigma
    }
}

/// Trials per chunk; each chunk seeks its own stream position, and chunk
/// statistics merge in index order.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Simulates the switching step `trials` times at control `u` and averages
/// the realized cost `σ(F(x, b·u), u, f_S)`.
///
/// Given `(S, b)` the cost is deterministic, so the `2n` possible costs are
/// evaluated once and looked up per trial. Results depend only on `seed`.
pub fn run_monte_carlo(
    game: &GameInstance,
    u: f64,
    policy: &JammerPolicy,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    let n = game.n_channels();
    if policy.len() != n {
        return Err(Error::contract(format!(
            "policy has {} entries, game has {n} channels",
            policy.len()
        )));
    }
    if trials == 0 {
        return Err(Error::contract("at least one trial is required"));
    }
    let driven = game.next_state(u);
    let idle = game.next_state(0.0);
    let costs: Vec<[f64; 2]> = (1..=n)
        .map(|j| [game.payoff(&idle, u, j), game.payoff(&driven, u, j)])
        .collect();
    let q = game.q().to_vec();
    let streams = TrialStreams::new(seed, n);

    let mut total = Moments::default();
    let mut passing = 0u64;
    let mut selections = vec![0u64; n];
    let mut start = 0u64;
    while start < trials {
        let len = CHUNK.min(trials - start);
        let mut rng = streams.at(start);
        let mut chunk = Moments::default();
        for _ in 0..len {
            let step = sample_unchecked(&q, policy, &mut rng);
            selections[step.selected - 1] += 1;
            passing += u64::from(step.passing);
            chunk.push(costs[step.selected - 1][usize::from(step.passing)]);
        }
        total = total.merge(chunk);
        start += len;
    }

    let var = if trials > 1 {
        total.m2 / (total.n - 1.0)
    } else {
        0.0
    };
    let std_dev = var.max(0.0).sqrt();
    Ok(MonteCarloReport {
        mean: total.mean,
        half_width_3sigma: 3.0 * std_dev / (trials as f64).sqrt(),
        std_dev,
        trials,
        passing_fraction: passing as f64 / trials as f64,
        selections,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::game::{expected_payoff, Curve};
    use crate::lq::LqScenario;

    fn scalar_reduced() -> ReducedGame {
        let h =
            |gamma: f64, q: f64| -> Curve { Arc::new(move |u| gamma + u * u + q * u * (u + 4.0)) };
        let dh = |q: f64| -> Curve { Arc::new(move |u| 2.0 * (1.0 + q) * u + 4.0 * q) };
        ReducedGame::from_curves(
            h(5.0, 0.1),
            dh(0.1),
            h(6.6, 0.9),
            dh(0.9),
            ControlInterval::new(-4.0, 0.0).unwrap(),
        )
    }

    const U_STAR: f64 = -0.585_786_437_626_904_9;
    const P1: f64 = 0.607_233_047_033_631_3;
    const J: f64 = 5.143_145_750_507_619;

    #[test]
    fn scalar_grid_values() {
        let rg = scalar_reduced();
        let spec = GridSpec::default_for(rg.interval());
        let rep = grid_game_values(&rg, &spec);
        assert!((rep.j1_hat - 5.1431).abs() < 5e-3);
        assert!((rep.j2_hat - 5.1431).abs() < 5e-3);
        assert!(rep.gap >= -1e-12 && rep.gap <= 1e-3, "gap {}", rep.gap);
        assert!((rep.p_argmax[0] - P1).abs() < 2e-3);
    }

    #[test]
    fn identical_curves_have_no_gap() {
        let h: Curve = Arc::new(|u| (u - 0.2) * (u - 0.2) + 1.0);
        let dh: Curve = Arc::new(|u| 2.0 * (u - 0.2));
        let rg = ReducedGame::from_curves(
            h.clone(),
            dh.clone(),
            h,
            dh,
            ControlInterval::new(-1.0, 1.0).unwrap(),
        );
        let spec = GridSpec::new(201, 11, rg.interval()).unwrap();
        let rep = grid_game_values(&rg, &spec);
        assert_eq!(rep.gap, 0.0);
        assert_eq!(rep.j1_hat, 1.0);
        assert!(verify_saddle(&rg, rep.u_argmin, [0.3, 0.7], &spec, 1e-12).passed);
    }

    #[test]
    fn trivial_regime_maximizer_is_a_vertex() {
        let h =
            |gamma: f64, q: f64| -> Curve { Arc::new(move |u| gamma + u * u + q * u * (u + 4.0)) };
        let dh = |q: f64| -> Curve { Arc::new(move |u| 2.0 * (1.0 + q) * u + 4.0 * q) };
        let rg = ReducedGame::from_curves(
            h(5.0, 0.1),
            dh(0.1),
            h(5.4, 0.9),
            dh(0.9),
            ControlInterval::new(-4.0, 0.0).unwrap(),
        );
        let spec = GridSpec::default_for(rg.interval());
        let rep = grid_game_values(&rg, &spec);
        assert!(rep.p_argmax_at_vertex(&spec, 1.0), "{:?}", rep.p_argmax);
    }

    #[test]
    fn saddle_certificates() {
        let rg = scalar_reduced();
        let spec = GridSpec::default_for(rg.interval());
        let ok = verify_saddle(&rg, U_STAR, [P1, 1.0 - P1], &spec, 1e-4);
        assert!(ok.passed, "{ok:?}");
        assert!((ok.value - J).abs() < 1e-12);

        // committing to the blocking channel at its best reply leaves the
        // jammer a profitable deviation toward staying put
        let u_block = -0.4 / 2.2;
        let bad = verify_saddle(&rg, u_block, [1.0, 0.0], &spec, 1e-4);
        assert!(!bad.passed);
        assert!(!bad.jammer_ok);
        assert!(bad.controller_ok);

        let shifted = verify_saddle(&rg, U_STAR + 0.1, [P1, 1.0 - P1], &spec, 1e-4);
        assert!(!shifted.controller_ok);
    }

    #[test]
    fn swapping_curves_reflects_the_strategy_grid() {
        let rg = scalar_reduced();
        let spec = GridSpec::default_for(rg.interval());
        let a = grid_game_values(&rg, &spec);
        let b = grid_game_values(&rg.swapped(), &spec);
        assert_eq!(a.j1_hat, b.j1_hat);
        assert!((a.j2_hat - b.j2_hat).abs() < 1e-12);
        assert!((a.p_argmax[0] - b.p_argmax[1]).abs() < 1e-12);
    }

    #[test]
    fn doubled_grid_contains_original() {
        let spec = GridSpec::default_for(ControlInterval::new(-4.0, 0.0).unwrap());
        let d = spec.doubled();
        assert_eq!((d.u_points, d.p_points), (4001, 2001));
        let (a, b) = (spec.u_grid(), d.u_grid());
        assert!(a
            .iter()
            .enumerate()
            .all(|(i, &u)| (b[2 * i] - u).abs() < 1e-15));
    }

    #[test]
    fn deterministic_cost_has_zero_variance() {
        let s = LqScenario::scalar(2.0, 1.0, 1.0, vec![0.0, 1.0], 2, 1.6).unwrap();
        let g = s.to_game();
        for j in 1..=2 {
            let p = JammerPolicy::vertex(2, j).unwrap();
            let rep = run_monte_carlo(&g, -0.5, &p, 1000, 5).unwrap();
            assert_eq!(rep.std_dev, 0.0);
            assert!((rep.mean - expected_payoff(&g, -0.5, &p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_monte_carlo_atoms_and_mean() {
        let s = LqScenario::scalar(2.0, 1.0, 1.0, vec![0.1, 0.9], 2, 1.6).unwrap();
        let g = s.to_game();
        // the four realized costs for (S, b)
        let atoms = [
            g.payoff(&g.next_state(U_STAR), U_STAR, 1),
            g.payoff(&g.next_state(0.0), U_STAR, 1),
            g.payoff(&g.next_state(U_STAR), U_STAR, 2),
            g.payoff(&g.next_state(0.0), U_STAR, 2),
        ];
        for (a, want) in atoms.iter().zip([3.34315, 5.34315, 4.94315, 6.94315]) {
            assert!((a - want).abs() < 1e-5);
        }
        let p = JammerPolicy::new(vec![P1, 1.0 - P1]).unwrap();
        let rep = run_monte_carlo(&g, U_STAR, &p, 200_000, 11).unwrap();
        assert!(rep.contains(J), "{rep:?}");
        let pq = P1 * 0.1 + (1.0 - P1) * 0.9;
        let sd = (pq * (1.0 - pq) / 200_000.0).sqrt();
        assert!((rep.passing_fraction - pq).abs() < 4.0 * sd);
        assert_eq!(rep.selections.iter().sum::<u64>(), 200_000);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_chunk_independent() {
        let g = LqScenario::scalar(2.0, 1.0, 1.0, vec![0.1, 0.9], 2, 1.6)
            .unwrap()
            .to_game();
        let p = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        let a = run_monte_carlo(&g, -0.3, &p, 50_000, 77).unwrap();
        let b = run_monte_carlo(&g, -0.3, &p, 50_000, 77).unwrap();
        assert_eq!(a, b);
        let c = run_monte_carlo(&g, -0.3, &p, 50_000, 78).unwrap();
        assert_ne!(a.mean, c.mean);
        assert!(run_monte_carlo(&g, -0.3, &p, 0, 77).is_err());
    }
}

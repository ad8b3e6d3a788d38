//! Scenario files: a TOML document describing the plant, the payoff, the
//! channel family, the state, and solver/simulation settings.
//!
//! ```toml
//! [plant]
//! A = [[2.0]]          # rows of the N×N state matrix
//! B = [1.0]            # input direction
//!
//! [payoff]
//! kind = "lq"          # or "quadratic"
//! tau = 1.6            # stealthiness reward
//!
//! [channels]
//! q = [0.1, 0.9]       # passing probabilities, strictly increasing
//! j_minus = 2          # channel currently on the link (1-based)
//! c_minus = [0, 1]     # optional prior transmission states
//!
//! [state]
//! x = [1.0]
//!
//! [solver]             # optional; defaults shown
//! margin = 1.0
//! u_grid = 2001
//! p_grid = 1001
//!
//! [mc]                 # optional; defaults shown
//! trials = 100000
//! seed = 0
//! ```
//!
//! A `quadratic` payoff replaces the stealth reward with one bonus per
//! channel and weights on the state and control terms:
//! `σ(y,u,f_j) = w_x·(‖x‖² + ‖y‖²) + w_u·u² + rewards[j]`. It is solved by
//! the generic pipeline only, and `w_u` may be negative to probe the
//! coercivity check. Conditional passing probabilities can be given
//! as `[[channels.conditional]]` tables with their own `c_minus` and `q`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, LinkState};
use crate::error::{Error, Result};
use crate::game::{ControlInterval, Dynamics, GameInstance, Payoff};
use crate::lq::LqScenario;
use crate::oracle::{GridSpec, DEFAULT_P_POINTS, DEFAULT_U_POINTS};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: Plant,
    pub payoff: PayoffSpec,
    pub channels: Channels,
    pub state: State,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub mc: McSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plant {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PayoffSpec {
    Lq {
        tau: f64,
    },
    Quadratic {
        #[serde(default = "one")]
        state_weight: f64,
        #[serde(default = "one")]
        control_weight: f64,
        rewards: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channels {
    pub q: Vec<f64>,
    pub j_minus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_minus: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditional: Vec<ConditionalQ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalQ {
    pub c_minus: Vec<u8>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub margin: f64,
    pub u_grid: usize,
    pub p_grid: usize,
    pub scan_points: usize,
    pub tol_root: f64,
    pub tol_grad: f64,
    pub tol_eq: f64,
    /// Slack for the saddle certificate.
    pub saddle_tol: f64,
    /// Allowed distance between the solver value and the grid values.
    pub value_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        SolverSection {
            margin: s.margin,
            u_grid: DEFAULT_U_POINTS,
            p_grid: DEFAULT_P_POINTS,
            scan_points: s.scan_points,
            tol_root: s.tol_root,
            tol_grad: s.tol_grad,
            tol_eq: s.tol_eq,
            saddle_tol: 1e-4,
            value_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub trials: u64,
    pub seed: u64,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            trials: 100_000,
            seed: 0,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let reason = e.message().to_string();
        let field = reason
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "document".to_string());
        Error::scenario(field, reason)
    })?;
    file.validate()?;
    Ok(file)
}

impl ScenarioFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n_state = self.plant.a.len();
        if n_state == 0 {
            return Err(Error::scenario("plant.A", "must have at least one row"));
        }
        if let Some(i) = self.plant.a.iter().position(|row| row.len() != n_state) {
            return Err(Error::scenario(
                "plant.A",
                format!(
                    "must be {n_state}x{n_state}; row {} has {} entries",
                    i + 1,
                    self.plant.a[i].len()
                ),
            ));
        }
        if self.plant.b.len() != n_state {
            return Err(Error::scenario(
                "plant.B",
                format!("must have {n_state} entries, has {}", self.plant.b.len()),
            ));
        }
        if self.plant.b.iter().all(|v| *v == 0.0) {
            return Err(Error::scenario("plant.B", "must be nonzero"));
        }
        if self.state.x.len() != n_state {
            return Err(Error::scenario(
                "state.x",
                format!("must have {n_state} entries, has {}", self.state.x.len()),
            ));
        }
        let all_finite = self
            .plant
            .a
            .iter()
            .flatten()
            .chain(&self.plant.b)
            .chain(&self.state.x)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::scenario("plant", "entries must be finite"));
        }

        let n = self.channels.q.len();
        if n < 2 {
            return Err(Error::scenario("channels.q", "needs at least 2 channels"));
        }
        if self.channels.j_minus == 0 || self.channels.j_minus > n {
            return Err(Error::scenario(
                "channels.j_minus",
                format!("must lie in 1..={n}"),
            ));
        }
        if let Some(c) = &self.channels.c_minus {
            check_bits("channels.c_minus", c, n)?;
        }
        for (i, cond) in self.channels.conditional.iter().enumerate() {
            check_bits(
                &format!("channels.conditional[{i}].c_minus"),
                &cond.c_minus,
                n,
            )?;
            check_q(&format!("channels.conditional[{i}].q"), &cond.q, n, false)?;
        }
        check_q("channels.q", &self.channels.q, n, false)?;
        let effective = self.effective_q();
        let field = if effective == self.channels.q.as_slice() {
            "channels.q"
        } else {
            "channels.conditional.q"
        };
        check_q(field, effective, n, true)?;

        match &self.payoff {
            PayoffSpec::Lq { tau } => {
                if !(*tau >= 0.0 && tau.is_finite()) {
                    return Err(Error::scenario(
                        "payoff.tau",
                        "must be finite and nonnegative",
                    ));
                }
            }
            PayoffSpec::Quadratic {
                state_weight,
                control_weight,
                rewards,
            } => {
                if !(*state_weight >= 0.0 && state_weight.is_finite()) {
                    return Err(Error::scenario(
                        "payoff.state_weight",
                        "must be nonnegative",
                    ));
                }
                // any sign is accepted; a negative weight makes a non-coercive
                // game, which the assumption checks report
                if !control_weight.is_finite() {
                    return Err(Error::scenario("payoff.control_weight", "must be finite"));
                }
                if rewards.len() != n {
                    return Err(Error::scenario(
                        "payoff.rewards",
                        format!("must have {n} entries, has {}", rewards.len()),
                    ));
                }
            }
        }

        let s = &self.solver;
        if !(s.margin > 0.0) {
            return Err(Error::scenario("solver.margin", "must be positive"));
        }
        if s.u_grid < 3 || s.p_grid < 3 {
            return Err(Error::scenario(
                "solver.u_grid",
                "grids need at least 3 points",
            ));
        }
        if s.scan_points < 2 {
            return Err(Error::scenario(
                "solver.scan_points",
                "needs at least 2 points",
            ));
        }
        for (name, v) in [
            ("solver.tol_root", s.tol_root),
            ("solver.tol_grad", s.tol_grad),
            ("solver.tol_eq", s.tol_eq),
            ("solver.saddle_tol", s.saddle_tol),
            ("solver.value_tol", s.value_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::scenario(name, "must be positive"));
            }
        }
        if self.mc.trials == 0 {
            return Err(Error::scenario("mc.trials", "must be at least 1"));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.plant.a.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.q.len()
    }

    pub fn c_minus(&self) -> Vec<u8> {
        self.channels
            .c_minus
            .clone()
            .unwrap_or_else(|| vec![0; self.n_channels()])
    }

    /// Passing probabilities in force at the observed prior states.
    pub fn effective_q(&self) -> &[f64] {
        let c = self.c_minus();
        self.channels
            .conditional
            .iter()
            .find(|cond| cond.c_minus == c)
            .map(|cond| cond.q.as_slice())
            .unwrap_or(&self.channels.q)
    }

    pub fn channel_set(&self) -> Result<ChannelSet> {
        self.channels.conditional.iter().try_fold(
            ChannelSet::constant(self.channels.q.clone())?,
            |set, cond| set.with_conditional(cond.c_minus.clone(), cond.q.clone()),
        )
    }

    pub fn link(&self) -> Result<LinkState> {
        LinkState::new(self.channels.j_minus, self.c_minus())
    }

    fn a_matrix(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        DMatrix::from_row_iterator(n, n, self.plant.a.iter().flatten().copied())
    }

    /// The closed-form view, for `lq` payoffs.
    pub fn lq(&self) -> Option<LqScenario> {
        match self.payoff {
            PayoffSpec::Lq { tau } => LqScenario::new(
                self.a_matrix(),
                DVector::from_column_slice(&self.plant.b),
                tau,
                self.effective_q().to_vec(),
                self.channels.j_minus,
                DVector::from_column_slice(&self.state.x),
            )
            .ok(),
            PayoffSpec::Quadratic { .. } => None,
        }
    }

    pub fn game(&self) -> Result<GameInstance> {
        match &self.payoff {
            PayoffSpec::Lq { .. } => {
                let lq = self
                    .lq()
                    .ok_or_else(|| Error::scenario("payoff", "inconsistent lq scenario"))?;
                let game = lq.to_game();
                if self.channels.conditional.is_empty() && self.channels.c_minus.is_none() {
                    return Ok(game);
                }
                // same payoff, but keep the declared channel table and prior states
                let rebuilt = GameInstance::new(
                    self.state.x.clone(),
                    self.dynamics(),
                    Arc::new(move |y: &[f64], u: f64, j: usize| lq.sigma(y, u, j)),
                    self.channel_set()?,
                    self.link()?,
                )?;
                Ok(match game.known_control_set() {
                    Some(set) => rebuilt.with_control_set(set),
                    None => rebuilt,
                })
            }
            PayoffSpec::Quadratic {
                state_weight,
                control_weight,
                rewards,
            } => {
                let (wx, wu, rewards) = (*state_weight, *control_weight, rewards.clone());
                let x_sq: f64 = self.state.x.iter().map(|v| v * v).sum();
                let payoff: Payoff = Arc::new(move |y: &[f64], u: f64, j: usize| {
                    wx * (x_sq + y.iter().map(|v| v * v).sum::<f64>()) + wu * u * u + rewards[j - 1]
                });
                GameInstance::new(
                    self.state.x.clone(),
                    self.dynamics(),
                    payoff,
                    self.channel_set()?,
                    self.link()?,
                )
            }
        }
    }

    fn dynamics(&self) -> Dynamics {
        let a = self.a_matrix();
        let b = DVector::from_column_slice(&self.plant.b);
        Arc::new(move |x: &[f64], v: f64| {
            (&a * DVector::from_column_slice(x) + &b * v)
                .as_slice()
                .to_vec()
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            margin: self.solver.margin,
            scan_points: self.solver.scan_points,
            tol_root: self.solver.tol_root,
            tol_grad: self.solver.tol_grad,
            tol_eq: self.solver.tol_eq,
            ..SolverOptions::default()
        }
    }

    pub fn grid_spec(&self, interval: ControlInterval) -> GridSpec {
        GridSpec {
            u_points: self.solver.u_grid,
            p_points: self.solver.p_grid,
            interval,
        }
    }
}

fn check_bits(field: &str, c: &[u8], n: usize) -> Result<()> {
    if c.len() != n {
        return Err(Error::scenario(
            field,
            format!("must have {n} entries, has {}", c.len()),
        ));
    }
    if c.iter().any(|b| *b > 1) {
        return Err(Error::scenario(field, "entries must be 0 or 1"));
    }
    Ok(())
}

fn check_q(field: &str, q: &[f64], n: usize, ordered: bool) -> Result<()> {
    if q.len() != n {
        return Err(Error::scenario(
            field,
            format!("must have {n} entries, has {}", q.len()),
        ));
    }
    if let Some(i) = q.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::scenario(
            field,
            format!("entry {} = {} is not a probability", i + 1, q[i]),
        ));
    }
    if ordered {
        if let Some(i) = q.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::scenario(
                field,
                format!(
                    "channels must be ordered by passing probability, q_1 < q_2 < ... < q_n; entry {} = {} is not below entry {} = {}",
                    i + 1,
                    q[i],
                    i + 2,
                    q[i + 1]
                ),
            ));
        }
    }
    Ok(())
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Stealthiness reward `τ`.
    Tau,
    /// State scale `λ` in `x = λ·x₀`.
    StateScale,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(SweepParam::Tau),
            "state-scale" | "lambda" => Ok(SweepParam::StateScale),
            other => Err(Error::scenario(
                "sweep-param",
                format!("unknown parameter `{other}` (expected tau or state-scale)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SweepSpec {
    /// A single point needs `lo ≤ hi` (only `lo` is used); more points need
    /// `lo < hi`.
    pub fn new(parameter: SweepParam, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::scenario("sweep-points", "must be at least 1"));
        }
        if !(lo.is_finite() && hi.is_finite()) || (points >= 2 && !(lo < hi)) || lo > hi {
            return Err(Error::scenario(
                "sweep-range",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(SweepSpec {
            parameter,
            lo,
            hi,
            points,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        crate::numeric::linspace(self.lo, self.hi, self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SCALAR: &str = r#"
[plant]
A = [[2.0]]
B = [1.0]

[payoff]
kind = "lq"
tau = 1.6

[channels]
q = [0.1, 0.9]
j_minus = 2

[state]
x = [1.0]
"#;

    #[test]
    fn parses_scalar_with_defaults() {
        let s = parse_scenario(SCALAR).unwrap();
        assert_eq!(s.state_dim(), 1);
        assert_eq!(s.n_channels(), 2);
        assert_eq!(s.payoff, PayoffSpec::Lq { tau: 1.6 });
        assert_eq!(s.solver.u_grid, 2001);
        assert_eq!(s.solver.p_grid, 1001);
        assert_eq!(s.solver.margin, 1.0);
        assert_eq!(
            s.mc,
            McSection {
                trials: 100_000,
                seed: 0
            }
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let s = parse_scenario(SCALAR).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn descending_q_is_rejected() {
        let text = SCALAR.replace("q = [0.1, 0.9]", "q = [0.9, 0.1]");
        match parse_scenario(&text) {
            Err(Error::Scenario { field, reason }) => {
                assert_eq!(field, "channels.q");
                assert!(
                    reason.contains("ordered by passing probability"),
                    "{reason}"
                );
            }
            other => panic!("expected a scenario error, got {other:?}"),
        }
    }

    #[test]
    fn missing_and_inconsistent_fields_are_named() {
        let text = SCALAR.replace("tau = 1.6\n", "");
        match parse_scenario(&text) {
            Err(Error::Scenario { field, .. }) => assert_eq!(field, "tau"),
            other => panic!("{other:?}"),
        }
        let text = SCALAR.replace("x = [1.0]", "x = [1.0, 2.0]");
        assert!(
            matches!(parse_scenario(&text), Err(Error::Scenario { field, .. }) if field == "state.x")
        );
        let text = SCALAR.replace("j_minus = 2", "j_minus = 3");
        assert!(
            matches!(parse_scenario(&text), Err(Error::Scenario { field, .. }) if field == "channels.j_minus")
        );
        let text = SCALAR.replace("A = [[2.0]]", "A = [[2.0, 1.0]]");
        assert!(
            matches!(parse_scenario(&text), Err(Error::Scenario { field, .. }) if field == "plant.A")
        );
    }

    #[test]
    fn explicit_sections_override_defaults() {
        let text = format!("{SCALAR}\n[mc]\ntrials = 10\nseed = 3\n\n[solver]\nu_grid = 101\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(
            s.mc,
            McSection {
                trials: 10,
                seed: 3
            }
        );
        assert_eq!(s.solver.u_grid, 101);
        assert_eq!(s.solver.p_grid, 1001);
    }

    #[test]
    fn conditional_table_selects_effective_q() {
        let text = SCALAR.replace(
            "j_minus = 2\n",
            "j_minus = 2\nc_minus = [1, 0]\n\n[[channels.conditional]]\nc_minus = [1, 0]\nq = [0.2, 0.7]\n",
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.effective_q(), &[0.2, 0.7]);
        assert_eq!(s.lq().unwrap().q(), &[0.2, 0.7]);
        assert_eq!(s.game().unwrap().q(), &[0.2, 0.7]);
    }

    #[test]
    fn quadratic_payoff_builds_a_generic_game() {
        let text = SCALAR.replace(
            "kind = \"lq\"\ntau = 1.6",
            "kind = \"quadratic\"\nrewards = [0.0, 1.6]",
        );
        let s = parse_scenario(&text).unwrap();
        assert!(s.lq().is_none());
        let generic = s.game().unwrap();
        let lq = parse_scenario(SCALAR).unwrap().game().unwrap();
        for u in [-3.0, -0.5, 0.0, 0.7] {
            for j in 1..=2 {
                assert!((generic.h(u, j) - lq.h(u, j)).abs() < 1e-12);
            }
        }
        let bad = text.replace("rewards = [0.0, 1.6]", "rewards = [0.0]");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn sweep_spec_validation() {
        assert!(SweepSpec::new(SweepParam::Tau, 0.1, 3.0, 30).is_ok());
        assert!(SweepSpec::new(SweepParam::Tau, 3.0, 0.1, 30).is_err());
        assert!(SweepSpec::new(SweepParam::Tau, 1.0, 1.0, 2).is_err());
        assert_eq!(
            SweepSpec::new(SweepParam::Tau, 1.6, 1.6, 1)
                .unwrap()
                .values(),
            vec![1.6]
        );
        assert_eq!(
            "state-scale".parse::<SweepParam>().unwrap(),
            SweepParam::StateScale
        );
        assert!("nope".parse::<SweepParam>().is_err());
    }
}

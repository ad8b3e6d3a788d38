//! Batch workflows behind the command-line tool: solve, sweep, check,
//! oracle verification and simulation, with text reports and CSV rows.

use std::fmt::Write as _;

use crate::channel::JammerPolicy;
use crate::error::{Error, Result};
use crate::game::{
    check_ranking, compute_control_set_with, reduce_game, ControlInterval, ControlSetOptions,
    GameInstance, RankingReport, RANKING_GRID,
};
use crate::lq::{lq_region, lq_u_star, LqScenario, Region, RegionReport};
use crate::oracle::{
    grid_game_values, run_monte_carlo, verify_saddle, MonteCarloReport, OracleReport, SaddleCheck,
};
use crate::scenario::{ScenarioFile, SweepParam, SweepSpec};
use crate::solver::{solve_with, SaddleReport};

/// Column order shared by `solve` and each `sweep` row.
pub const SOLVE_COLUMNS: &str = "z,region,kind,u_star,p_tilde_1,J,gap";

pub fn sweep_header() -> String {
    format!("param,{SOLVE_COLUMNS}")
}

/// Full-precision float for CSV and reports; non-finite values become empty.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    format!("[{}]", items.join(", "))
}

/// Outcome of the assumption checks: coercivity and connectivity of the
/// control set, supplied derivatives, and channel ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub control_set: Option<ControlInterval>,
    pub ranking: Option<RankingReport>,
    pub derivatives_checked: bool,
    pub failures: Vec<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.control_set {
            Some(set) => writeln!(out, "control_set = {set}").unwrap(),
            None => writeln!(out, "control_set = unavailable").unwrap(),
        }
        let ranking = match &self.ranking {
            Some(r) if r.holds => format!("holds ({} grid points)", r.grid_points),
            Some(r) => match r.violation {
                Some(v) => format!(
                    "violated at u = {}: h_{}(u) = {} < h_{}(u) = {}",
                    v.u, v.j, v.h_j, v.k, v.h_k
                ),
                None => "violated".to_string(),
            },
            None => "not checked".to_string(),
        };
        writeln!(out, "ranking = {ranking}").unwrap();
        writeln!(
            out,
            "derivatives = {}",
            if self.derivatives_checked {
                "consistent"
            } else {
                "not checked"
            }
        )
        .unwrap();
        writeln!(
            out,
            "assumptions = {}",
            if self.passed() { "pass" } else { "FAIL" }
        )
        .unwrap();
        for f in &self.failures {
            writeln!(out, "  failure: {f}").unwrap();
        }
        out
    }
}

fn check_game(game: &GameInstance, s: &ScenarioFile) -> Result<AssumptionReport> {
    let opts = s.solver_options();
    let mut report = AssumptionReport {
        control_set: None,
        ranking: None,
        derivatives_checked: false,
        failures: Vec::new(),
    };
    let set = match compute_control_set_with(
        game,
        &ControlSetOptions {
            margin: opts.margin,
            ..ControlSetOptions::default()
        },
    ) {
        Ok(set) => set,
        Err(e) if e.is_assumption_failure() => {
            report.failures.push(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.control_set = Some(set);
    match game.check_derivatives(&set, opts.derivative_checks) {
        Ok(()) => report.derivatives_checked = true,
        Err(e) if e.is_assumption_failure() => report.failures.push(e.to_string()),
        Err(e) => return Err(e),
    }
    let ranking = check_ranking(game, &set, RANKING_GRID);
    if let Some(v) = ranking.violation {
        report.failures.push(format!(
            "channels {} and {} are out of order at u = {}",
            v.j, v.k, v.u
        ));
    }
    report.ranking = Some(ranking);
    Ok(report)
}

/// Runs the assumption checks alone.
pub fn run_check(s: &ScenarioFile) -> Result<AssumptionReport> {
    check_game(&s.game()?, s)
}

/// One solved point: the machine-readable row plus everything behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub report: SaddleReport,
    pub region: Option<RegionReport>,
    /// Closed-form control when the state is inside the randomization region.
    pub closed_form_u: Option<f64>,
    pub oracle: OracleReport,
    pub assumptions: AssumptionReport,
}

impl SolveOutcome {
    pub fn csv_row(&self) -> String {
        let (z, region) = match &self.region {
            Some(r) => (fmt_opt(r.z), r.region.as_str().to_string()),
            None => (String::new(), String::new()),
        };
        let r = &self.report;
        format!(
            "{z},{region},{},{},{},{},{}",
            r.kind,
            fmt_opt(r.u_star),
            fmt_opt(r.p_tilde.map(|p| p[0])),
            fmt_float(r.value),
            fmt_float(self.oracle.gap)
        )
    }

    pub fn to_text(&self) -> String {
        let r = &self.report;
        let mut out = String::new();
        writeln!(out, "kind = {}", r.kind).unwrap();
        writeln!(out, "u_star = {}", fmt_opt(r.u_star)).unwrap();
        writeln!(
            out,
            "p_tilde = {}",
            r.p_tilde.map(|p| fmt_vec(&p)).unwrap_or_default()
        )
        .unwrap();
        writeln!(
            out,
            "p_star = {}",
            r.p_star.as_deref().map(fmt_vec).unwrap_or_default()
        )
        .unwrap();
        writeln!(out, "J = {}", fmt_float(r.value)).unwrap();
        writeln!(out, "blocking_channel = {}", r.blocking_index).unwrap();
        writeln!(out, "j_minus = {}", r.j_minus).unwrap();
        writeln!(out, "unique_strategy = {}", r.unique_strategy).unwrap();
        writeln!(out, "multiple_saddles = {}", r.multiple).unwrap();
        if let Some(region) = &self.region {
            writeln!(out, "z = {}", fmt_opt(region.z)).unwrap();
            writeln!(
                out,
                "region = {} (bounds {}, {})",
                region.region,
                fmt_float(region.lower),
                fmt_float(region.upper)
            )
            .unwrap();
        }
        if let Some(u) = self.closed_form_u {
            writeln!(out, "u_star_closed_form = {}", fmt_float(u)).unwrap();
        }
        writeln!(
            out,
            "min_blocking = {} at u = {}",
            fmt_float(r.blocking_min.1),
            fmt_float(r.blocking_min.0)
        )
        .unwrap();
        writeln!(
            out,
            "min_stay = {} at u = {}",
            fmt_float(r.stay_min.1),
            fmt_float(r.stay_min.0)
        )
        .unwrap();
        writeln!(out, "indifference_points = {}", r.indifference_points.len()).unwrap();
        for p in &r.indifference_points {
            writeln!(
                out,
                "  u_bar = {}  {:?}  residual = {:.3e}  h1' = {:.6e}  h2' = {:.6e}  {}",
                fmt_float(p.u_bar),
                p.kind,
                p.residual,
                p.h1_du,
                p.h2_du,
                p.classification
            )
            .unwrap();
        }
        writeln!(out, "j1_hat = {}", fmt_float(self.oracle.j1_hat)).unwrap();
        writeln!(out, "j2_hat = {}", fmt_float(self.oracle.j2_hat)).unwrap();
        writeln!(out, "gap = {}", fmt_float(self.oracle.gap)).unwrap();
        out.push_str(&self.assumptions.to_text());
        out
    }
}

fn solve_game(
    game: &GameInstance,
    s: &ScenarioFile,
    lq: Option<&LqScenario>,
) -> Result<SolveOutcome> {
    let report = solve_with(game, &s.solver_options())?;
    let assumptions = check_game(game, s)?;
    let rg = reduce_game(game, &report.control_set)?;
    let oracle = grid_game_values(&rg, &s.grid_spec(report.control_set));
    let region = lq.map(lq_region);
    let closed_form_u = lq.and_then(|l| lq_u_star(l).ok());
    Ok(SolveOutcome {
        report,
        region,
        closed_form_u,
        oracle,
        assumptions,
    })
}

/// Solves the scenario. Assumption failures come back as errors carrying the
/// violating detail.
pub fn run_solve(s: &ScenarioFile) -> Result<SolveOutcome> {
    let lq = s.lq();
    solve_game(&s.game()?, s, lq.as_ref())
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub outcome: SolveOutcome,
}

impl SweepRow {
    pub fn csv_row(&self) -> String {
        format!("{},{}", fmt_float(self.param), self.outcome.csv_row())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = sweep_header();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }

    /// Parameter values at which the region label changes, as
    /// `(last value before, first value after, label after)`.
    pub fn region_transitions(&self) -> Vec<(f64, f64, Region)> {
        self.rows
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (w[0].outcome.region?, w[1].outcome.region?);
                (a.region != b.region).then_some((w[0].param, w[1].param, b.region))
            })
            .collect()
    }
}

/// Sweeps `τ` or the state scale `λ` (with `x = λ·x₀`) over the LQ
/// closed forms.
pub fn run_sweep(s: &ScenarioFile, sweep: &SweepSpec) -> Result<SweepTable> {
    let base = s.lq().ok_or_else(|| {
        Error::Unsupported("sweeps are defined for the lq payoff only".to_string())
    })?;
    let rows = sweep
        .values()
        .into_iter()
        .map(|v| {
            let point = match sweep.parameter {
                SweepParam::Tau => base.with_tau(v)?,
                SweepParam::StateScale => base.with_state(base.x() * v)?,
            };
            let outcome = solve_game(&point.to_game(), s, Some(&point))?;
            Ok(SweepRow { param: v, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { spec: *sweep, rows })
}

/// Oracle, saddle certificate and simulation checks of a solver answer.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub value: f64,
    pub oracle: OracleReport,
    pub saddle: Option<SaddleCheck>,
    pub monte_carlo: Option<MonteCarloReport>,
    pub value_ok: bool,
    pub gap_ok: bool,
    pub monte_carlo_ok: bool,
    pub passed: bool,
}

impl VerificationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(out, "J = {}", fmt_float(self.value)).unwrap();
        writeln!(out, "j1_hat = {}", fmt_float(self.oracle.j1_hat)).unwrap();
        writeln!(out, "j2_hat = {}", fmt_float(self.oracle.j2_hat)).unwrap();
        writeln!(
            out,
            "gap = {} [{}]",
            fmt_float(self.oracle.gap),
            mark(self.gap_ok)
        )
        .unwrap();
        writeln!(
            out,
            "value_vs_oracle = {:.3e} [{}]",
            (self.value - self.oracle.j1_hat).abs(),
            mark(self.value_ok)
        )
        .unwrap();
        match &self.saddle {
            Some(c) => {
                writeln!(
                    out,
                    "saddle = {} (controller gain {:.3e} at u = {}; jammer gain {:.3e} at p1 = {})",
                    mark(c.passed),
                    c.controller_gain,
                    fmt_float(c.controller_u),
                    c.jammer_gain,
                    fmt_float(c.jammer_p)
                )
                .unwrap();
                writeln!(out, "  side_a_controller = {}", mark(c.controller_ok)).unwrap();
                writeln!(out, "  side_b_jammer = {}", mark(c.jammer_ok)).unwrap();
            }
            None => writeln!(out, "saddle = FAIL (no solver answer)").unwrap(),
        }
        if let Some(mc) = &self.monte_carlo {
            writeln!(
                out,
                "mc_mean = {} +/- {} ({} trials) [{}]",
                fmt_float(mc.mean),
                fmt_float(mc.half_width_3sigma),
                mc.trials,
                mark(self.monte_carlo_ok)
            )
            .unwrap();
            writeln!(
                out,
                "mc_passing_fraction = {}",
                fmt_float(mc.passing_fraction)
            )
            .unwrap();
        }
        writeln!(out, "verdict = {}", mark(self.passed)).unwrap();
        out
    }
}

/// Checks a (possibly edited) solver answer against the grid oracle, the
/// saddle inequalities and a Monte Carlo estimate.
pub fn verify(s: &ScenarioFile, report: &SaddleReport) -> Result<VerificationReport> {
    let game = s.game()?;
    let rg = reduce_game(&game, &report.control_set)?;
    let spec = s.grid_spec(report.control_set);
    let oracle = grid_game_values(&rg, &spec);
    let tol = s.solver.value_tol;
    let value_ok = (report.value - oracle.j1_hat).abs() <= tol;
    let gap_ok = oracle.gap <= tol;

    let (saddle, monte_carlo) = match (report.u_star, report.p_tilde, report.policy()) {
        (Some(u), Some(p), Some(policy)) => {
            let check = verify_saddle(&rg, u, p, &spec, s.solver.saddle_tol);
            let mc = run_monte_carlo(&game, u, &policy, s.mc.trials, s.mc.seed)?;
            (Some(check), Some(mc))
        }
        _ => (None, None),
    };
    let monte_carlo_ok = monte_carlo
        .as_ref()
        .is_some_and(|mc| mc.contains(report.value));
    let saddle_ok = saddle.is_some_and(|c| c.passed);
    Ok(VerificationReport {
        value: report.value,
        oracle,
        saddle,
        monte_carlo,
        value_ok,
        gap_ok,
        monte_carlo_ok,
        passed: value_ok && gap_ok && saddle_ok && monte_carlo_ok,
    })
}

/// Solves, then verifies the answer.
pub fn run_oracle_and_simulate(s: &ScenarioFile) -> Result<(SolveOutcome, VerificationReport)> {
    let solved = run_solve(s)?;
    let verification = verify(s, &solved.report)?;
    Ok((solved, verification))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutcome {
    pub u: f64,
    pub policy: Vec<f64>,
    pub value: f64,
    pub monte_carlo: MonteCarloReport,
    /// `pᵀq`, the exact probability of a passing link.
    pub passing_probability: f64,
}

impl SimulateOutcome {
    pub fn to_text(&self) -> String {
        let mc = &self.monte_carlo;
        let mut out = String::new();
        writeln!(out, "u_star = {}", fmt_float(self.u)).unwrap();
        writeln!(out, "p_star = {}", fmt_vec(&self.policy)).unwrap();
        writeln!(out, "J = {}", fmt_float(self.value)).unwrap();
        writeln!(out, "trials = {}", mc.trials).unwrap();
        writeln!(out, "mc_mean = {}", fmt_float(mc.mean)).unwrap();
        writeln!(
            out,
            "mc_half_width_3sigma = {}",
            fmt_float(mc.half_width_3sigma)
        )
        .unwrap();
        writeln!(out, "mc_std_dev = {}", fmt_float(mc.std_dev)).unwrap();
        writeln!(out, "contains_J = {}", mc.contains(self.value)).unwrap();
        writeln!(out, "passing_fraction = {}", fmt_float(mc.passing_fraction)).unwrap();
        writeln!(
            out,
            "passing_probability = {}",
            fmt_float(self.passing_probability)
        )
        .unwrap();
        let sel: Vec<String> = mc.selections.iter().map(u64::to_string).collect();
        writeln!(out, "selections = [{}]", sel.join(", ")).unwrap();
        out
    }
}

/// Simulates the switching step at the solver's saddle point.
pub fn run_simulate(s: &ScenarioFile) -> Result<SimulateOutcome> {
    let game = s.game()?;
    let report = solve_with(&game, &s.solver_options())?;
    let (u, policy) = match (report.u_star, report.policy()) {
        (Some(u), Some(p)) => (u, p),
        _ => {
            return Err(Error::Unsupported(format!(
                "no saddle point to simulate (kind {})",
                report.kind
            )))
        }
    };
    simulate_at(&game, u, &policy, report.value, s.mc.trials, s.mc.seed)
}

pub fn simulate_at(
    game: &GameInstance,
    u: f64,
    policy: &JammerPolicy,
    value: f64,
    trials: u64,
    seed: u64,
) -> Result<SimulateOutcome> {
    let monte_carlo = run_monte_carlo(game, u, policy, trials, seed)?;
    let passing_probability = policy
        .probabilities()
        .iter()
        .zip(game.q())
        .map(|(p, q)| p * q)
        .sum();
    Ok(SimulateOutcome {
        u,
        policy: policy.probabilities().to_vec(),
        value,
        monte_carlo,
        passing_probability,
    })
}

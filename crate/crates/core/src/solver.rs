//! Nontrivial saddle points of the reduced game.
//!
//! With strictly convex `h̃₁`, `h̃₂`, a saddle with an interior jammer strategy
//! exists exactly when some `ū` has `h̃₁(ū) = h̃₂(ū)` and either the slopes
//! there have opposite signs or both vanish. The jammer's weights then make
//! the mixed payoff stationary at `ū`. Otherwise the saddle sits at a vertex:
//! the jammer commits to whichever channel leaves the controller the larger
//! minimum.

use std::fmt;

use serde::Serialize;

use crate::channel::JammerPolicy;
use crate::error::{Error, Result};
use crate::game::{
    compute_control_set_with, lift_strategy, reduce_game, ControlInterval, ControlSetOptions,
    GameInstance, ReducedGame,
};
use crate::numeric::{bisect, golden_min, grid_min, linspace};

/// Tolerances and grid densities for [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Level margin for the control set.
    pub margin: f64,
    /// Sign-change scan density for indifference points.
    pub scan_points: usize,
    /// Bisection tolerance on `ū`.
    pub tol_root: f64,
    /// Slope threshold separating "zero" from "nonzero" derivatives.
    pub tol_grad: f64,
    /// Relative threshold under which `|h̃₁ − h̃₂|` counts as equality.
    pub tol_eq: f64,
    /// Fraction of the control-set width added on each side of the search
    /// domain.
    pub inflate: f64,
    /// Points at which supplied derivatives are cross-checked.
    pub derivative_checks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            margin: 1.0,
            scan_points: 10_000,
            tol_root: 1e-10,
            tol_grad: 1e-7,
            tol_eq: 1e-9,
            inflate: 0.05,
            derivative_checks: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// `h̃₁'(ū)·h̃₂'(ū) < 0`.
    OppositeSigns,
    /// `h̃₁'(ū) = h̃₂'(ū) = 0`.
    BothZero,
    NotASaddle,
}

impl Classification {
    pub fn is_saddle(self) -> bool {
        !matches!(self, Classification::NotASaddle)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::OppositeSigns => "opposite-signs",
            Classification::BothZero => "both-zero",
            Classification::NotASaddle => "not-a-saddle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleKind {
    NontrivialMixed,
    DegenerateFlat,
    TrivialBlocking,
    TrivialStay,
    NoneFound,
}

impl SaddleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SaddleKind::NontrivialMixed => "nontrivial-mixed",
            SaddleKind::DegenerateFlat => "degenerate-flat",
            SaddleKind::TrivialBlocking => "trivial-blocking",
            SaddleKind::TrivialStay => "trivial-stay",
            SaddleKind::NoneFound => "none-found",
        }
    }

    pub fn is_trivial(self) -> bool {
        matches!(self, SaddleKind::TrivialBlocking | SaddleKind::TrivialStay)
    }
}

impl fmt::Display for SaddleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a candidate was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootKind {
    /// `h̃₁ − h̃₂` changes sign (or vanishes on an isolated grid point).
    Crossing,
    /// `|h̃₁ − h̃₂|` dips under the equality threshold without a sign change.
    Tangency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub u: f64,
    pub kind: RootKind,
}

/// A classified indifference point with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndifferencePoint {
    pub u_bar: f64,
    pub kind: RootKind,
    /// `h̃₁(ū) − h̃₂(ū)`.
    pub residual: f64,
    pub h1_du: f64,
    pub h2_du: f64,
    pub classification: Classification,
    /// `h̃₁(ū)`, the game value if this point is selected.
    pub value: f64,
}

fn eq_threshold(rg: &ReducedGame, u: f64, tol_eq: f64) -> f64 {
    tol_eq * (1.0 + rg.h1(u).abs())
}

/// Roots of `g = h̃₁ − h̃₂` on the search domain (control set inflated by
/// `opts.inflate`).
///
/// Sign changes between grid points are bisected to `opts.tol_root`. Runs of
/// grid points where `|g|` is below the equality threshold collapse to one
/// candidate: the bracketed sign change if the run separates opposite signs,
/// otherwise the point of the run with the flattest slopes (a tangency). Grid
/// local minima of `|g|` without a sign change are refined by golden section
/// and kept when they reach the threshold.
pub fn find_indifference_points(rg: &ReducedGame, opts: &SolverOptions) -> Vec<Root> {
    let domain = rg.interval().inflate(opts.inflate);
    let grid = linspace(domain.lo, domain.hi, opts.scan_points);
    let g = |u: f64| rg.h1(u) - rg.h2(u);
    let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
    let small: Vec<bool> = grid
        .iter()
        .zip(&vals)
        .map(|(&u, &v)| v.abs() <= eq_threshold(rg, u, opts.tol_eq))
        .collect();
    let m = grid.len();
    let mut roots = Vec::new();

    let mut i = 0;
    while i < m {
        if small[i] {
            let start = i;
            while i + 1 < m && small[i + 1] {
                i += 1;
            }
            let end = i;
            let before = start.checked_sub(1).map(|k| vals[k]);
            let after = (end + 1 < m).then(|| vals[end + 1]);
            match (before, after) {
                (Some(a), Some(b)) if (a < 0.0) != (b < 0.0) => roots.push(Root {
                    u: bisect(g, grid[start - 1], grid[end + 1], opts.tol_root),
                    kind: RootKind::Crossing,
                }),
                _ => {
                    let flattest = (start..=end)
                        .min_by(|&a, &b| {
                            let sa = rg.h1_du(grid[a]).abs() + rg.h2_du(grid[a]).abs();
                            let sb = rg.h1_du(grid[b]).abs() + rg.h2_du(grid[b]).abs();
                            sa.total_cmp(&sb)
                        })
                        .unwrap_or(start);
                    let kind = if start == end && (start == 0 || end == m - 1) {
                        RootKind::Crossing
                    } else {
                        RootKind::Tangency
                    };
                    // the flattest point usually falls between nodes
                    let (lo, hi) = (
                        grid[flattest.saturating_sub(1).max(start)],
                        grid[(flattest + 1).min(end)],
                    );
                    let u = if hi > lo {
                        golden_min(
                            |u| rg.h1_du(u).abs() + rg.h2_du(u).abs(),
                            lo,
                            hi,
                            opts.tol_root,
                        )
                        .0
                    } else {
                        grid[flattest]
                    };
                    roots.push(Root { u, kind });
                }
            }
            i += 1;
            continue;
        }
        if i + 1 < m && !small[i + 1] {
            if (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
                roots.push(Root {
                    u: bisect(g, grid[i], grid[i + 1], opts.tol_root),
                    kind: RootKind::Crossing,
                });
            } else if i > 0
                && !small[i - 1]
                && vals[i].abs() < vals[i - 1].abs()
                && vals[i].abs() < vals[i + 1].abs()
                && (vals[i - 1] < 0.0) == (vals[i] < 0.0)
            {
                // |g| has a grid-local minimum: possible tangency between nodes
                let (u, v) = golden_min(|u| g(u).abs(), grid[i - 1], grid[i + 1], opts.tol_root);
                if v <= eq_threshold(rg, u, opts.tol_eq) {
                    roots.push(Root {
                        u,
                        kind: RootKind::Tangency,
                    });
                }
            }
        }
        i += 1;
    }
    roots
}

/// Derivative test at an indifference point.
pub fn classify_point(rg: &ReducedGame, u_bar: f64, tol_grad: f64) -> Classification {
    classify_slopes(rg.h1_du(u_bar), rg.h2_du(u_bar), tol_grad)
}

fn classify_slopes(d1: f64, d2: f64, tol_grad: f64) -> Classification {
    if d1.abs().max(d2.abs()) <= tol_grad {
        Classification::BothZero
    } else if d1 * d2 < -tol_grad * tol_grad {
        Classification::OppositeSigns
    } else {
        Classification::NotASaddle
    }
}

/// Jammer weights on (blocking, current) that make the mixed payoff
/// stationary at `ū`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedStrategy {
    pub p_tilde: [f64; 2],
    /// False when every mixture is stationary (both slopes vanish) and the
    /// midpoint was picked by convention.
    pub unique: bool,
}

pub fn mixed_strategy(rg: &ReducedGame, u_bar: f64, tol_grad: f64) -> Result<MixedStrategy> {
    let (d1, d2) = (rg.h1_du(u_bar), rg.h2_du(u_bar));
    match classify_slopes(d1, d2, tol_grad) {
        Classification::OppositeSigns => {
            let p1 = d2 / (d2 - d1);
            Ok(MixedStrategy {
                p_tilde: [p1, 1.0 - p1],
                unique: true,
            })
        }
        Classification::BothZero => Ok(MixedStrategy {
            p_tilde: [0.5, 0.5],
            unique: false,
        }),
        Classification::NotASaddle => Err(Error::contract(format!(
            "no stationary mixture at u = {u_bar}: slopes {d1} and {d2} share a sign"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport {
    pub kind: SaddleKind,
    pub u_star: Option<f64>,
    pub p_tilde: Option<[f64; 2]>,
    pub p_star: Option<Vec<f64>>,
    /// Game value `J`.
    pub value: f64,
    pub indifference_points: Vec<IndifferencePoint>,
    /// More than one indifference point passed the derivative test.
    pub multiple: bool,
    /// False when the jammer strategy is one of many optimal mixtures.
    pub unique_strategy: bool,
    pub control_set: ControlInterval,
    pub blocking_index: usize,
    pub j_minus: usize,
    /// `(argmin, min)` of `h̃₁` and of `h̃₂` over the search domain.
    pub blocking_min: (f64, f64),
    pub stay_min: (f64, f64),
}

impl SaddleReport {
    pub fn policy(&self) -> Option<JammerPolicy> {
        self.p_star.clone().and_then(|p| JammerPolicy::new(p).ok())
    }
}

/// Full pipeline with default options.
pub fn solve(game: &GameInstance) -> Result<SaddleReport> {
    solve_with(game, &SolverOptions::default())
}

/// Control set, assumption checks, reduction, then [`solve_reduced`].
pub fn solve_with(game: &GameInstance, opts: &SolverOptions) -> Result<SaddleReport> {
    let control_set = compute_control_set_with(
        game,
        &ControlSetOptions {
            margin: opts.margin,
            ..ControlSetOptions::default()
        },
    )?;
    game.check_derivatives(&control_set, opts.derivative_checks)?;
    let rg = reduce_game(game, &control_set)?;
    solve_reduced(&rg, opts)
}

/// Golden section resolves a minimizer only to about `√ε`; where the slope
/// changes sign around it, bisecting the slope does better.
fn polish_min(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    (u, v): (f64, f64),
    step: f64,
    tol: f64,
) -> (f64, f64) {
    let (a, b) = (u - step, u + step);
    if !(step > 0.0) || df(a) >= 0.0 || df(b) <= 0.0 {
        return (u, v);
    }
    let root = bisect(&df, a, b, tol.min(1e-14 * (1.0 + u.abs())));
    let value = f(root);
    if value <= v {
        (root, value)
    } else {
        (u, v)
    }
}

/// Saddle point of an already reduced game.
pub fn solve_reduced(rg: &ReducedGame, opts: &SolverOptions) -> Result<SaddleReport> {
    let domain = rg.interval().inflate(opts.inflate);
    let points: Vec<IndifferencePoint> = find_indifference_points(rg, opts)
        .into_iter()
        .map(|r| {
            let (d1, d2) = (rg.h1_du(r.u), rg.h2_du(r.u));
            IndifferencePoint {
                u_bar: r.u,
                kind: r.kind,
                residual: rg.h1(r.u) - rg.h2(r.u),
                h1_du: d1,
                h2_du: d2,
                classification: classify_slopes(d1, d2, opts.tol_grad),
                value: rg.h1(r.u),
            }
        })
        .collect();

    let min_points = 2001;
    let step = domain.width() / (min_points - 1) as f64;
    let blocking_min = polish_min(
        |u| rg.h1(u),
        |u| rg.h1_du(u),
        grid_min(|u| rg.h1(u), domain.lo, domain.hi, min_points),
        step,
        opts.tol_root,
    );
    let stay_min = polish_min(
        |u| rg.h2(u),
        |u| rg.h2_du(u),
        grid_min(|u| rg.h2(u), domain.lo, domain.hi, min_points),
        step,
        opts.tol_root,
    );

    let saddles: Vec<&IndifferencePoint> = points
        .iter()
        .filter(|p| p.classification.is_saddle())
        .collect();
    let best = saddles
        .iter()
        .copied()
        .filter(|p| p.value.is_finite())
        .max_by(|a, b| a.value.total_cmp(&b.value));

    let base = SaddleReport {
        kind: SaddleKind::NoneFound,
        u_star: None,
        p_tilde: None,
        p_star: None,
        value: f64::NAN,
        indifference_points: points.clone(),
        multiple: saddles.len() > 1,
        unique_strategy: true,
        control_set: rg.interval(),
        blocking_index: rg.blocking_index(),
        j_minus: rg.j_minus(),
        blocking_min,
        stay_min,
    };

    if let Some(point) = best {
        let mixed = mixed_strategy(rg, point.u_bar, opts.tol_grad)?;
        let lifted = lift_strategy(
            mixed.p_tilde,
            rg.blocking_index(),
            rg.j_minus(),
            rg.n_channels(),
        )?;
        return Ok(SaddleReport {
            kind: match point.classification {
                Classification::BothZero => SaddleKind::DegenerateFlat,
                _ => SaddleKind::NontrivialMixed,
            },
            u_star: Some(point.u_bar),
            p_tilde: Some(mixed.p_tilde),
            p_star: Some(lifted.probabilities().to_vec()),
            value: point.value,
            unique_strategy: mixed.unique,
            ..base
        });
    }

    if !(blocking_min.1.is_finite() && stay_min.1.is_finite()) {
        return Ok(base);
    }
    let (kind, (u, value), p_tilde) = if blocking_min.1 > stay_min.1 {
        (SaddleKind::TrivialBlocking, blocking_min, [1.0, 0.0])
    } else {
        (SaddleKind::TrivialStay, stay_min, [0.0, 1.0])
    };
    let lifted = lift_strategy(p_tilde, rg.blocking_index(), rg.j_minus(), rg.n_channels())?;
    Ok(SaddleReport {
        kind,
        u_star: Some(u),
        p_tilde: Some(p_tilde),
        p_star: Some(lifted.probabilities().to_vec()),
        value,
        ..base
    })
}

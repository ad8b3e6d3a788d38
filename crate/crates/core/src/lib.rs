//! Saddle-point equilibria of the one-step controller–jammer game played over
//! a switched family of binary packet-dropping channels.
//!
//! The controller picks a scalar control `u`; the jammer picks a distribution
//! over which channel replaces the one currently occupying the link. After the
//! selection every channel re-randomizes, and the control reaches the plant
//! only if the selected channel is passing. The crate
//!
//! * evaluates the conditional stage payoffs `h_j(u)` of an arbitrary game
//!   ([`game`]),
//! * reduces it to the two-channel game between the most damaging alternative
//!   and the current channel, and finds and classifies its saddle points
//!   ([`solver`]),
//! * specializes everything to the linear-quadratic game with a stealthiness
//!   reward, including the randomization region and the closed-form control
//!   ([`lq`]),
//! * verifies all of the above by brute force ([`oracle`]),
//! * and drives the workflows behind the `jamgame` CLI ([`scenario`],
//!   [`harness`]).
//!
//! Channel indices are 1-based throughout the public API, matching the
//! scenario files and reports.
//!
//! ```
//! use jamgame::lq::LqScenario;
//! use jamgame::solver::{solve, SaddleKind};
//!
//! let s = LqScenario::scalar(2.0, 1.0, 1.0, vec![0.1, 0.9], 2, 1.6).unwrap();
//! let report = solve(&s.to_game()).unwrap();
//! assert_eq!(report.kind, SaddleKind::NontrivialMixed);
//! assert!((report.u_star.unwrap() - (2f64.sqrt() - 2.0)).abs() < 1e-6);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod game;
pub mod harness;
pub mod lq;
pub mod numeric;
pub mod oracle;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};

//! Linear plant `x⁺ = Ax + bBu` with quadratic cost and a stealthiness reward
//! `τ` paid to the jammer when it leaves the current channel in place.
//!
//! Here every `h_j` is a parabola,
//!
//! ```text
//! h_j(u) = γ_j(x) + u² + ‖B‖²·q_j·u(u + 2β(x)),
//! γ_j(x) = xᵀ(I + AᵀA)x + τ·[j = j⁻],   β(x) = BᵀAx / ‖B‖²,
//! ```
//!
//! which gives the control set, the randomization region and the optimal
//! control in closed form.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::{ChannelSet, LinkState};
use crate::error::{Error, Result};
use crate::game::{
    ControlInterval, Dynamics, GameInstance, InputSensitivity, Payoff, PayoffGradient,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LqScenario {
    a: DMatrix<f64>,
    b: DVector<f64>,
    tau: f64,
    q: Vec<f64>,
    j_minus: usize,
    x: DVector<f64>,
}

impl LqScenario {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        tau: f64,
        q: Vec<f64>,
        j_minus: usize,
        x: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || x.len() != n || n == 0 {
            return Err(Error::contract(format!(
                "A is {}x{}, B has {} entries, x has {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                x.len()
            )));
        }
        if !(b.norm_squared() > 0.0) {
            return Err(Error::contract("input direction B must be nonzero"));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::contract(format!(
                "stealth reward must be finite and nonnegative, got {tau}"
            )));
        }
        if q.len() < 2 {
            return Err(Error::contract("at least two channels are required"));
        }
        if let Some(i) = q.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::contract(format!(
                "passing probabilities must be strictly increasing: q[{}] = {} vs q[{}] = {}",
                i + 1,
                q[i],
                i + 2,
                q[i + 1]
            )));
        }
        if !(0.0..=1.0).contains(&q[0]) || !(0.0..=1.0).contains(&q[q.len() - 1]) {
            return Err(Error::contract("passing probabilities must lie in [0, 1]"));
        }
        if j_minus == 0 || j_minus > q.len() {
            return Err(Error::contract(format!(
                "current channel {j_minus} outside 1..={}",
                q.len()
            )));
        }
        Ok(LqScenario {
            a,
            b,
            tau,
            q,
            j_minus,
            x,
        })
    }

    /// One-dimensional plant `x⁺ = a·x + b·v`.
    pub fn scalar(a: f64, b: f64, x: f64, q: Vec<f64>, j_minus: usize, tau: f64) -> Result<Self> {
        LqScenario::new(
            DMatrix::from_element(1, 1, a),
            DVector::from_element(1, b),
            tau,
            q,
            j_minus,
            DVector::from_element(1, x),
        )
    }

    pub fn with_state(&self, x: DVector<f64>) -> Result<Self> {
        LqScenario::new(
            self.a.clone(),
            self.b.clone(),
            self.tau,
            self.q.clone(),
            self.j_minus,
            x,
        )
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        LqScenario::new(
            self.a.clone(),
            self.b.clone(),
            tau,
            self.q.clone(),
            self.j_minus,
            self.x.clone(),
        )
    }

    pub fn with_j_minus(&self, j_minus: usize) -> Result<Self> {
        LqScenario::new(
            self.a.clone(),
            self.b.clone(),
            self.tau,
            self.q.clone(),
            j_minus,
            self.x.clone(),
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn j_minus(&self) -> usize {
        self.j_minus
    }

    pub fn n_channels(&self) -> usize {
        self.q.len()
    }

    /// `‖B‖²`.
    pub fn b_norm_sq(&self) -> f64 {
        self.b.norm_squared()
    }

    /// `BᵀAx`.
    pub fn b_ax(&self) -> f64 {
        self.b.dot(&(&self.a * &self.x))
    }

    /// `β(x) = BᵀAx / ‖B‖²`.
    pub fn beta(&self) -> f64 {
        self.b_ax() / self.b_norm_sq()
    }

    /// `γ_j(x)`.
    pub fn gamma(&self, j: usize) -> f64 {
        let ax = &self.a * &self.x;
        let base = self.x.norm_squared() + ax.norm_squared();
        if j == self.j_minus {
            base + self.tau
        } else {
            base
        }
    }

    /// The cost `σ(y, u, f_j)`.
    pub fn sigma(&self, y: &[f64], u: f64, j: usize) -> f64 {
        let reward = if j == self.j_minus { self.tau } else { 0.0 };
        self.x.norm_squared() + u * u + y.iter().map(|v| v * v).sum::<f64>() + reward
    }

    /// Wraps the scenario as a generic game with analytic derivatives and the
    /// closed-form control set attached.
    pub fn to_game(&self) -> GameInstance {
        let a = self.a.clone();
        let b = self.b.clone();
        let dynamics: Dynamics = Arc::new(move |x: &[f64], v: f64| {
            let x = DVector::from_column_slice(x);
            (&a * x + &b * v).as_slice().to_vec()
        });
        let me = self.clone();
        let payoff: Payoff = Arc::new(move |y: &[f64], u: f64, j: usize| me.sigma(y, u, j));
        let gradient: PayoffGradient =
            Arc::new(|y: &[f64], u: f64, _j: usize| (y.iter().map(|v| 2.0 * v).collect(), 2.0 * u));
        let b = self.b.clone();
        let sensitivity: InputSensitivity =
            Arc::new(move |_x: &[f64], _v: f64| b.as_slice().to_vec());
        let n = self.n_channels();
        GameInstance::new(
            self.x.as_slice().to_vec(),
            dynamics,
            payoff,
            ChannelSet::constant(self.q.clone()).expect("validated q"),
            LinkState::on_channel(self.j_minus, n).expect("validated j_minus"),
        )
        .expect("consistent dimensions")
        .with_derivatives(gradient, sensitivity)
        .with_control_set(lq_control_set(self))
    }
}

/// Closed-form `h_j(u)`.
pub fn lq_conditional_payoff(s: &LqScenario, u: f64, j: usize) -> Result<f64> {
    if j == 0 || j > s.n_channels() {
        return Err(Error::contract(format!(
            "channel {j} outside 1..={}",
            s.n_channels()
        )));
    }
    Ok(s.gamma(j) + u * u + s.b_norm_sq() * s.q[j - 1] * u * (u + 2.0 * s.beta()))
}

/// `{u : u(u + 2β) ≤ 0} = [min(0, −2β), max(0, −2β)]`.
pub fn lq_control_set(s: &LqScenario) -> ControlInterval {
    let end = -2.0 * s.beta();
    ControlInterval {
        lo: end.min(0.0),
        hi: end.max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Below,
    Inside,
    Above,
    Undefined,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Below => "below",
            Region::Inside => "inside",
            Region::Above => "above",
            Region::Undefined => "undefined",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionReport {
    /// `z = τ‖B‖² / ((q_{j⁻} − q₁)·(BᵀAx)²)`; absent when undefined.
    pub z: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub region: Region,
}

/// Where the state sits relative to the randomization region
/// `1 − 1/(1+‖B‖²q₁)² < z < 1 − 1/(1+‖B‖²q_{j⁻})²`.
pub fn lq_region(s: &LqScenario) -> RegionReport {
    let r = s.b_norm_sq();
    let q1 = s.q[0];
    let qj = s.q[s.j_minus - 1];
    let lower = 1.0 - 1.0 / ((1.0 + r * q1) * (1.0 + r * q1));
    let upper = 1.0 - 1.0 / ((1.0 + r * qj) * (1.0 + r * qj));
    let bax = s.b_ax();
    if s.j_minus == 1 || bax == 0.0 {
        return RegionReport {
            z: None,
            lower,
            upper,
            region: Region::Undefined,
        };
    }
    let z = s.tau * r / ((qj - q1) * bax * bax);
    let region = if z <= lower {
        Region::Below
    } else if z >= upper {
        Region::Above
    } else {
        Region::Inside
    };
    RegionReport {
        z: Some(z),
        lower,
        upper,
        region,
    }
}

/// The controller's saddle control inside the randomization region,
/// `u* = −β(x)·(1 − √(1 − z))`: the root of `h₁(ū) = h_{j⁻}(ū)` at which the
/// slopes of the two payoffs have opposite signs.
pub fn lq_u_star(s: &LqScenario) -> Result<f64> {
    let rep = lq_region(s);
    match (rep.region, rep.z) {
        (Region::Inside, Some(z)) => Ok(-s.beta() * (1.0 - (1.0 - z).sqrt())),
        _ => Err(Error::contract(format!(
            "closed-form control needs a state inside the randomization region (region: {})",
            rep.region
        ))),
    }
}

/// Draws `count` random planar instances for randomized testing.
///
/// `A`, `B`, `x` have entries uniform on `[−1, 1]`; there are 2–4 channels
/// with sorted uniform passing probabilities, the current channel is never
/// channel 1, and `τ` is set from a uniform `z ∈ (0, 1)` so that every region
/// is visited. The same seed always gives the same instances.
pub fn random_instances(seed: u64, count: usize) -> Vec<LqScenario> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut entry = || rng.random_range(-1.0..=1.0);
        let a = DMatrix::from_fn(2, 2, |_, _| entry());
        let b = DVector::from_fn(2, |_, _| entry());
        let x = DVector::from_fn(2, |_, _| entry());
        let n = rng.random_range(2..=4usize);
        let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        q.sort_by(f64::total_cmp);
        let j_minus = rng.random_range(2..=n);
        let z = rng.random::<f64>();
        let r = b.norm_squared();
        let bax = b.dot(&(&a * &x));
        let tau = z * (q[j_minus - 1] - q[0]) * bax * bax / r;
        // near-ties in q or a vanishing BᵀAx make degenerate draws; skip them
        if r < 1e-6 || bax.abs() < 1e-3 || q.windows(2).any(|w| w[1] - w[0] < 1e-6) {
            continue;
        }
        if let Ok(s) = LqScenario::new(a, b, tau, q, j_minus, x) {
            out.push(s);
        }
    }
    out
}

//! Switched binary channels: which channel the jammer puts on the link, how
//! every channel re-randomizes afterwards, and the resulting link bit `b`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

/// The channel family. Passing probabilities may depend on the transmission
/// states observed before switching; a lookup table keyed by those bits
/// overrides the constant default vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    q: Vec<f64>,
    table: BTreeMap<Vec<u8>, Vec<f64>>,
}

impl ChannelSet {
    /// Channels whose passing probabilities do not depend on the prior states.
    pub fn constant(q: Vec<f64>) -> Result<Self> {
        if q.len() < 2 {
            return Err(Error::contract(format!(
                "a channel set needs at least 2 channels, got {}",
                q.len()
            )));
        }
        check_probabilities(&q)?;
        Ok(ChannelSet {
            q,
            table: BTreeMap::new(),
        })
    }

    /// Adds a passing-probability vector used when the prior states equal
    /// `c_minus`.
    pub fn with_conditional(mut self, c_minus: Vec<u8>, q: Vec<f64>) -> Result<Self> {
        check_bits(&c_minus, self.len())?;
        if q.len() != self.len() {
            return Err(Error::contract(format!(
                "conditional q has length {}, expected {}",
                q.len(),
                self.len()
            )));
        }
        check_probabilities(&q)?;
        self.table.insert(c_minus, q);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Passing probabilities given the prior states.
    pub fn q_at(&self, c_minus: &[u8]) -> &[f64] {
        self.table.get(c_minus).unwrap_or(&self.q)
    }
}

fn check_probabilities(q: &[f64]) -> Result<()> {
    match q.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::contract(format!(
            "q[{}] = {} is not a probability",
            i + 1,
            q[i]
        ))),
        None => Ok(()),
    }
}

fn check_bits(c: &[u8], n: usize) -> Result<()> {
    if c.len() != n {
        return Err(Error::contract(format!(
            "state vector has length {}, expected {n}",
            c.len()
        )));
    }
    if c.iter().any(|&b| b > 1) {
        return Err(Error::contract("state vector entries must be 0 or 1"));
    }
    Ok(())
}

/// Which channel currently occupies the link and what every channel's
/// transmission state was before the switch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkState {
    j_minus: usize,
    c_minus: Vec<u8>,
}

impl LinkState {
    pub fn new(j_minus: usize, c_minus: Vec<u8>) -> Result<Self> {
        if j_minus == 0 || j_minus > c_minus.len() {
            return Err(Error::contract(format!(
                "current channel {j_minus} outside 1..={}",
                c_minus.len()
            )));
        }
        check_bits(&c_minus, c_minus.len())?;
        Ok(LinkState { j_minus, c_minus })
    }

    /// Link on channel `j_minus` with all prior states blocking.
    pub fn on_channel(j_minus: usize, n: usize) -> Result<Self> {
        LinkState::new(j_minus, vec![0; n])
    }

    pub fn j_minus(&self) -> usize {
        self.j_minus
    }

    pub fn c_minus(&self) -> &[u8] {
        &self.c_minus
    }

    pub fn channels(&self) -> usize {
        self.c_minus.len()
    }
}

/// A point of the probability simplex over channels.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerPolicy {
    p: Vec<f64>,
}

impl JammerPolicy {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::contract("empty policy"));
        }
        if let Some(i) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::contract(format!(
                "policy entry p[{}] = {} is not a nonnegative number",
                i + 1,
                p[i]
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::contract(format!("policy sums to {sum}, not 1")));
        }
        Ok(JammerPolicy { p })
    }

    /// All mass on channel `j` (1-based).
    pub fn vertex(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::contract(format!("channel {j} outside 1..={n}")));
        }
        let mut p = vec![0.0; n];
        p[j - 1] = 1.0;
        Ok(JammerPolicy { p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Channel selected by a uniform draw `r ∈ [0,1)` via the inverse CDF.
    fn select(&self, r: f64) -> usize {
        let mut acc = 0.0;
        for (i, &pi) in self.p.iter().enumerate() {
            acc += pi;
            if r < acc {
                return i + 1;
            }
        }
        // rounding left r above the accumulated mass
        self.p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0) + 1
    }
}

/// Probability that the link passes the control, `pᵀq(c⁻)`.
pub fn passing_probability(
    channels: &ChannelSet,
    link: &LinkState,
    policy: &JammerPolicy,
) -> Result<f64> {
    check_dims(channels, link, policy)?;
    let q = channels.q_at(link.c_minus());
    let p = policy.probabilities();
    Ok(p.iter()
        .zip(q)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

fn check_dims(channels: &ChannelSet, link: &LinkState, policy: &JammerPolicy) -> Result<()> {
    let n = channels.len();
    if policy.len() != n || link.channels() != n {
        return Err(Error::contract(format!(
            "dimension mismatch: {n} channels, policy of length {}, link state of length {}",
            policy.len(),
            link.channels()
        )));
    }
    Ok(())
}

/// One realization of the switching step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    /// Selected channel `S` (1-based).
    pub selected: usize,
    /// Transmission states after re-randomization.
    pub states: Vec<u8>,
    /// Link bit `b = c_S`.
    pub passing: bool,
}

/// Draws `S ~ p`, then re-randomizes every channel independently with its
/// passing probability, and reads the link bit off the selected channel.
///
/// Consumes exactly `1 + n` uniform `f64` draws, i.e. [`words_per_step`]
/// 32-bit words of a ChaCha stream.
pub fn sample_step<R: Rng + ?Sized>(
    channels: &ChannelSet,
    link: &LinkState,
    policy: &JammerPolicy,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_dims(channels, link, policy)?;
    Ok(sample_unchecked(channels.q_at(link.c_minus()), policy, rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(
    q: &[f64],
    policy: &JammerPolicy,
    rng: &mut R,
) -> StepOutcome {
    let selected = policy.select(rng.random::<f64>());
    let states: Vec<u8> = q
        .iter()
        .map(|&qj| u8::from(rng.random::<f64>() < qj))
        .collect();
    let passing = states[selected - 1] == 1;
    StepOutcome {
        selected,
        states,
        passing,
    }
}

/// 32-bit stream words consumed by one [`sample_step`] over `n` channels.
pub fn words_per_step(n: usize) -> u128 {
    2 * (n as u128 + 1)
}

/// Counter-based random streams: the generator for trial `t` is a pure
/// function of `(seed, t)`, so trials can be evaluated in any order or
/// partition and still reproduce bit-for-bit.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    base: ChaCha8Rng,
    words_per_trial: u128,
}

impl TrialStreams {
    pub fn new(seed: u64, n_channels: usize) -> Self {
        TrialStreams {
            base: ChaCha8Rng::seed_from_u64(seed),
            words_per_trial: words_per_step(n_channels),
        }
    }

    /// Generator positioned at the first word of `trial`. Consuming it
    /// sequentially walks through `trial`, `trial + 1`, ... in order.
    pub fn at(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos(trial as u128 * self.words_per_trial);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(q: [f64; 2]) -> (ChannelSet, LinkState) {
        (
            ChannelSet::constant(q.to_vec()).unwrap(),
            LinkState::on_channel(2, 2).unwrap(),
        )
    }

    #[test]
    fn passing_probability_examples() {
        let (ch, link) = two([0.1, 0.9]);
        let e1 = JammerPolicy::vertex(2, 1).unwrap();
        assert_eq!(passing_probability(&ch, &link, &e1).unwrap(), 0.1);

        let (ch01, _) = two([0.0, 1.0]);
        let half = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(passing_probability(&ch01, &link, &half).unwrap(), 0.5);

        let p = JammerPolicy::new(vec![0.60723, 0.39277]).unwrap();
        let v = passing_probability(&ch, &link, &p).unwrap();
        assert!((v - 0.414216).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ch = ChannelSet::constant(vec![0.1, 0.5, 0.9]).unwrap();
        let link = LinkState::on_channel(2, 3).unwrap();
        let p = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            passing_probability(&ch, &link, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(ChannelSet::constant(vec![0.5]).is_err());
        assert!(ChannelSet::constant(vec![0.5, 1.5]).is_err());
        assert!(LinkState::new(0, vec![0, 1]).is_err());
        assert!(LinkState::new(3, vec![0, 1]).is_err());
        assert!(LinkState::new(1, vec![0, 2]).is_err());
        assert!(JammerPolicy::new(vec![0.6, 0.6]).is_err());
        assert!(JammerPolicy::new(vec![1.5, -0.5]).is_err());
        assert!(JammerPolicy::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn conditional_table_overrides_default() {
        let ch = ChannelSet::constant(vec![0.1, 0.9])
            .unwrap()
            .with_conditional(vec![1, 0], vec![0.3, 0.4])
            .unwrap();
        assert_eq!(ch.q_at(&[0, 0]), &[0.1, 0.9]);
        assert_eq!(ch.q_at(&[1, 0]), &[0.3, 0.4]);
        assert!(ch
            .clone()
            .with_conditional(vec![1], vec![0.3, 0.4])
            .is_err());
    }

    #[test]
    fn deterministic_chains() {
        let (ch, link) = two([0.0, 1.0]);
        let streams = TrialStreams::new(9, 2);
        let e2 = JammerPolicy::vertex(2, 2).unwrap();
        let e1 = JammerPolicy::vertex(2, 1).unwrap();
        for t in 0..200 {
            let s = sample_step(&ch, &link, &e2, &mut streams.at(t)).unwrap();
            assert_eq!((s.selected, s.states[1], s.passing), (2, 1, true));
            let s = sample_step(&ch, &link, &e1, &mut streams.at(t)).unwrap();
            assert_eq!((s.selected, s.passing), (1, false));
        }
    }

    #[test]
    fn link_bit_reads_fresh_state_of_selected_channel() {
        let ch = ChannelSet::constant(vec![0.3, 0.6, 0.8]).unwrap();
        // prior states disagree with anything fresh draws might produce
        let link = LinkState::new(1, vec![1, 1, 1]).unwrap();
        let p = JammerPolicy::new(vec![0.2, 0.3, 0.5]).unwrap();
        let streams = TrialStreams::new(3, 3);
        let mut saw_blocking = false;
        for t in 0..500 {
            let s = sample_step(&ch, &link, &p, &mut streams.at(t)).unwrap();
            assert_eq!(s.passing, s.states[s.selected - 1] == 1);
            saw_blocking |= !s.passing;
        }
        assert!(saw_blocking);
    }

    #[test]
    fn streams_are_counter_based() {
        let (ch, link) = two([0.1, 0.9]);
        let p = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        let streams = TrialStreams::new(42, 2);
        // walking sequentially from trial 0 reproduces direct seeks to each trial
        let mut seq = streams.at(0);
        for t in 0..64 {
            let a = sample_step(&ch, &link, &p, &mut seq).unwrap();
            let b = sample_step(&ch, &link, &p, &mut streams.at(t)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empirical_link_frequency_matches_dot_product() {
        let (ch, link) = two([0.1, 0.9]);
        let p = JammerPolicy::new(vec![0.5, 0.5]).unwrap();
        let m = 1_000_000u64;
        let mut rng = TrialStreams::new(1, 2).at(0);
        let (mut ones, mut first) = (0u64, 0u64);
        for _ in 0..m {
            let s = sample_step(&ch, &link, &p, &mut rng).unwrap();
            ones += u64::from(s.passing);
            first += u64::from(s.selected == 1);
        }
        let mean = ones as f64 / m as f64;
        // 3 sigma of a Bernoulli(0.5) mean at 1e6 draws
        assert!((mean - 0.5).abs() <= 0.0015, "mean {mean}");
        let sd = (0.25 / m as f64).sqrt();
        assert!((first as f64 / m as f64 - 0.5).abs() <= 4.0 * sd);
    }
}

//! Two-level kernel: Rabi propagation between projective occupation
//! measurements.
//!
//! States live on the `{|+⟩, |−⟩}` basis. Evolution between measurements is
//! the real rotation
//!
//! ```text
//! ⟨+|U(dt)|+⟩ = cos ω dt    ⟨+|U(dt)|−⟩ = −sin ω dt
//! ⟨−|U(dt)|+⟩ = sin ω dt    ⟨−|U(dt)|−⟩ =  cos ω dt
//! ```
//!
//! and a measurement with outcome `q` replaces the state by its *unnormalized*
//! projection `P_q |ψ⟩`. The squared norm left after a sequence of
//! measurements is the joint probability of that outcome sequence, which is
//! what [`trajectory_product`] consumes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for the closed-form kernel identities.
pub const KERNEL_TOL: f64 = 1e-12;

/// Result of a dichotomic occupation measurement, `q ∈ {+1, −1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(Outcome::Plus),
            "-1" | "-" => Ok(Outcome::Minus),
            other => Err(Error::InvalidParameter(format!(
                "outcome must be +1 or -1, got {other:?}"
            ))),
        }
    }
}

/// Amplitude pair `(c₊, c₋)`. Not necessarily normalized: collapse only
/// ever shrinks the norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl TwoLevelState {
    pub fn new(c_plus: Complex64, c_minus: Complex64) -> Self {
        Self { c_plus, c_minus }
    }

    pub fn from_real(c_plus: f64, c_minus: f64) -> Self {
        Self::new(Complex64::new(c_plus, 0.0), Complex64::new(c_minus, 0.0))
    }

    /// `|+⟩`
    pub fn plus() -> Self {
        Self::from_real(1.0, 0.0)
    }

    /// `|−⟩`
    pub fn minus() -> Self {
        Self::from_real(0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::from_real(0.0, 0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sqr() == 0.0
    }

    /// Unnormalized weight `⟨ψ|P_q|ψ⟩`.
    pub fn weight(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Plus => self.c_plus.norm_sqr(),
            Outcome::Minus => self.c_minus.norm_sqr(),
        }
    }
}

/// Oscillation frequency of the two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    omega: f64,
}

impl DynamicsParams {
    pub fn new(omega: f64) -> Result<Self> {
        if omega.is_finite() && omega > 0.0 {
            Ok(Self { omega })
        } else {
            Err(Error::InvalidParameter(format!(
                "omega must be positive and finite, got {omega}"
            )))
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Full period `2π/ω` of the amplitudes.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Revival time `π/ω`: the state returns to its ray, so every occupation
    /// observable is periodic with this period.
    pub fn revival_time(&self) -> f64 {
        PI / self.omega
    }
}

/// The instant `t′` at which the system sat in `|+⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialPhase {
    pub t_prime: f64,
}

impl InitialPhase {
    pub fn new(t_prime: f64) -> Self {
        Self { t_prime }
    }

    /// Same phase with `t′` folded into `[0, 2π/ω)`.
    pub fn reduced(self, params: &DynamicsParams) -> Self {
        Self::new(self.t_prime.rem_euclid(params.period()))
    }
}

/// One projective measurement along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub time: f64,
    pub outcome: Outcome,
    /// Born probability of `outcome` from the normalized pre-measurement
    /// state; zero when the running state had already vanished.
    pub pre_probability: f64,
    /// `1 − pre_probability`.
    pub disturbance: f64,
}

/// `c₊ = cos ω(t₀ − t′)`, `c₋ = sin ω(t₀ − t′)`.
pub fn initial_state(phase: InitialPhase, t0: f64, params: &DynamicsParams) -> TwoLevelState {
    let (s, c) = (params.omega * (t0 - phase.t_prime)).sin_cos();
    TwoLevelState::from_real(c, s)
}

/// Free evolution over a fixed interval, with the rotation precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    cos: f64,
    sin: f64,
}

impl Propagator {
    pub fn new(dt: f64, params: &DynamicsParams) -> Self {
        let (sin, cos) = (params.omega * dt).sin_cos();
        Self { cos, sin }
    }

    pub fn identity() -> Self {
        Self { cos: 1.0, sin: 0.0 }
    }

    #[inline]
    pub fn apply(&self, state: &TwoLevelState) -> TwoLevelState {
        TwoLevelState {
            c_plus: state.c_plus * self.cos - state.c_minus * self.sin,
            c_minus: state.c_plus * self.sin + state.c_minus * self.cos,
        }
    }
}

/// Evolve `state` freely by `dt` (negative `dt` runs backwards).
pub fn propagate(state: &TwoLevelState, dt: f64, params: &DynamicsParams) -> TwoLevelState {
    Propagator::new(dt, params).apply(state)
}

/// Normalized occupation expectation `(|c₊|² − |c₋|²)/(|c₊|² + |c₋|²)`.
pub fn expectation_q(state: &TwoLevelState) -> Result<f64> {
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(Error::DegenerateState);
    }
    Ok((state.c_plus.norm_sqr() - state.c_minus.norm_sqr()) / norm)
}

/// `⟨ψ|P_q|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn born_probability(state: &TwoLevelState, outcome: Outcome) -> Result<f64> {
    let norm = state.norm_sqr();
    if norm == 0.0 {
        return Err(Error::DegenerateState);
    }
    Ok(state.weight(outcome) / norm)
}

/// Unnormalized projection `P_q |ψ⟩`.
pub fn collapse(state: &TwoLevelState, outcome: Outcome) -> TwoLevelState {
    let zero = Complex64::new(0.0, 0.0);
    match outcome {
        Outcome::Plus => TwoLevelState::new(state.c_plus, zero),
        Outcome::Minus => TwoLevelState::new(zero, state.c_minus),
    }
}

/// Runs the measure/evolve recursion for a prescribed outcome sequence.
///
/// The system starts in `|+⟩` at `t′`, evolves to `t₁`, is projected onto
/// `q₁`, evolves to `t₂`, and so on. The final state's squared norm is the
/// joint probability `p(q₁) p(q₂|q₁) ⋯`. An outcome with zero amplitude
/// produces the zero state, which then propagates with probability 0.
pub fn measured_trajectory(
    phase: InitialPhase,
    times: &[f64],
    outcomes: &[Outcome],
    params: &DynamicsParams,
) -> Result<(Vec<MeasurementRecord>, TwoLevelState)> {
    if times.len() != outcomes.len() {
        return Err(Error::TimeCountMismatch {
            expected: times.len(),
            got: outcomes.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one measurement is required".into(),
        ));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TimesNotAscending);
    }

    let mut state = initial_state(phase, phase.t_prime, params);
    let mut last = phase.t_prime;
    let mut records = Vec::with_capacity(times.len());
    for (&time, &outcome) in times.iter().zip(outcomes) {
        state = propagate(&state, time - last, params);
        last = time;
        let pre_probability = born_probability(&state, outcome).unwrap_or(0.0);
        records.push(MeasurementRecord {
            time,
            outcome,
            pre_probability,
            disturbance: 1.0 - pre_probability,
        });
        state = collapse(&state, outcome);
    }
    Ok((records, state))
}

/// `q₁ q₂ ⋯ q_N ⟨ψ(t_N⁺)|ψ(t_N⁺)⟩`.
pub fn trajectory_product(records: &[MeasurementRecord], final_state: &TwoLevelState) -> f64 {
    let sign: f64 = records.iter().map(|r| r.outcome.sign()).product();
    sign * final_state.norm_sqr()
}

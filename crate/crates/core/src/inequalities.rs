//! Temporal Bell inequalities `ΔK = Σ κ_ij K_ε(t_i, t_j) ≤ B`.
//!
//! Because `K_ε = A_ε K` with `A_ε` independent of time, measurement
//! back-action rescales every `ΔK` without moving its maximizing times. The
//! fractional violation that survives is `ΔB_max = (A_ε ΔK_max − B)/B`, and
//! the threshold `ε*` solves `A_ε* = B/ΔK_max`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::correlators::{k_selective_analytic, selection_factor, CorrelationRequest, SelectionPolicy};
use crate::dynamics::DynamicsParams;
use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_section_max};

/// One `κ_ij K(t_i, t_j)` term; indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub i: usize,
    pub j: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `|K₁₂ + K₂₃ + K₃₄ − K₁₄| ≤ 2`
    Paz4,
    /// `−K₁₂ − K₂₃ − K₁₃ ≤ 1`
    SantosMinus,
    /// `−K₁₃ + K₁₂ + K₂₃ ≤ 1`
    SantosPlus,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Paz4, Preset::SantosMinus, Preset::SantosPlus];

    pub fn spec(self) -> InequalitySpec {
        let t = |i, j, kappa| Term { i, j, kappa };
        match self {
            Preset::Paz4 => InequalitySpec {
                n_times: 4,
                terms: vec![t(1, 2, 1.0), t(2, 3, 1.0), t(3, 4, 1.0), t(1, 4, -1.0)],
                bound: 2.0,
                abs_mode: true,
            },
            Preset::SantosMinus => InequalitySpec {
                n_times: 3,
                terms: vec![t(1, 2, -1.0), t(2, 3, -1.0), t(1, 3, -1.0)],
                bound: 1.0,
                abs_mode: false,
            },
            Preset::SantosPlus => InequalitySpec {
                n_times: 3,
                terms: vec![t(1, 3, -1.0), t(1, 2, 1.0), t(2, 3, 1.0)],
                bound: 1.0,
                abs_mode: false,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paz4 => "paz4",
            Preset::SantosMinus => "santos-minus",
            Preset::SantosPlus => "santos-plus",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "paz4" | "paz" => Ok(Preset::Paz4),
            "santos-minus" => Ok(Preset::SantosMinus),
            "santos-plus" => Ok(Preset::SantosPlus),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }
}

/// Coefficients, time structure and classical bound of one inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySpec {
    n_times: usize,
    terms: Vec<Term>,
    bound: f64,
    abs_mode: bool,
}

impl InequalitySpec {
    pub fn new(n_times: usize, terms: Vec<Term>, bound: f64, abs_mode: bool) -> Result<Self> {
        if n_times < 3 {
            return Err(Error::InvalidInequality(format!(
                "need at least 3 times, got {n_times}"
            )));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidInequality(format!(
                "bound must be positive, got {bound}"
            )));
        }
        let mut seen = Vec::with_capacity(terms.len());
        for term in &terms {
            if term.i == term.j {
                return Err(Error::InvalidInequality(format!(
                    "term ({}, {}) pairs a time with itself",
                    term.i, term.j
                )));
            }
            if !(1..=n_times).contains(&term.i) || !(1..=n_times).contains(&term.j) {
                return Err(Error::InvalidInequality(format!(
                    "term ({}, {}) outside 1..={n_times}",
                    term.i, term.j
                )));
            }
            if !term.kappa.is_finite() {
                return Err(Error::InvalidInequality("non-finite coefficient".into()));
            }
            // K is symmetric, so (i, j) and (j, i) are the same correlator
            let key = (term.i.min(term.j), term.i.max(term.j));
            if seen.contains(&key) {
                return Err(Error::InvalidInequality(format!(
                    "duplicate term ({}, {})",
                    key.0, key.1
                )));
            }
            seen.push(key);
        }
        Ok(Self {
            n_times,
            terms,
            bound,
            abs_mode,
        })
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn abs_mode(&self) -> bool {
        self.abs_mode
    }

    fn combine(&self, times: &[f64], params: &DynamicsParams, policy: &SelectionPolicy) -> f64 {
        let sum: f64 = self
            .terms
            .iter()
            .map(|t| {
                let req = CorrelationRequest::new(times[t.i - 1], times[t.j - 1], *params, *policy);
                t.kappa * k_selective_analytic(&req)
            })
            .sum();
        if self.abs_mode {
            sum.abs()
        } else {
            sum
        }
    }

    /// Stationary value without the positivity check on the spacing.
    pub(crate) fn stationary_value(
        &self,
        spacing: f64,
        params: &DynamicsParams,
        policy: &SelectionPolicy,
    ) -> f64 {
        let times: Vec<f64> = (0..self.n_times).map(|k| k as f64 * spacing).collect();
        self.combine(&times, params, policy)
    }
}

/// Outcome of [`maximize_violation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationReport {
    /// Maximum of the unselected `ΔK` (at `ε = 0`), evaluated at the argmax.
    pub delta_k_max: f64,
    /// Equal spacing `t` at which `ΔK_ε` peaks.
    pub argmax_spacing: f64,
    pub a_epsilon: f64,
    /// `(A_ε ΔK_max − B)/B`
    pub delta_b_max: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Grid points over `ωt ∈ (0, π]`.
    pub grid_points: usize,
    /// Golden-section bracket width, in units of `ωt`.
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol: 1e-9 }
    }
}

/// `Σ κ_ij K_ε(t_i, t_j)`, wrapped in `|·|` for absolute-value specs.
pub fn delta_k(
    spec: &InequalitySpec,
    times: &[f64],
    params: &DynamicsParams,
    policy: &SelectionPolicy,
) -> Result<f64> {
    if times.len() != spec.n_times {
        return Err(Error::TimeCountMismatch {
            expected: spec.n_times,
            got: times.len(),
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TimesNotAscending);
    }
    Ok(spec.combine(times, params, policy))
}

/// `ΔK` at the equally spaced times `0, t, 2t, …`.
pub fn delta_k_stationary(
    spec: &InequalitySpec,
    spacing: f64,
    params: &DynamicsParams,
    policy: &SelectionPolicy,
) -> Result<f64> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(spec.stationary_value(spacing, params, policy))
}

// Grid values within this relative distance of the best count as ties; the
// lowest spacing wins.
const TIE_RTOL: f64 = 1e-12;

/// Maximizes `ΔK_ε` over the stationary spacing: grid scan on
/// `ωt ∈ (0, π]`, then golden-section refinement around the best cell.
pub fn maximize_violation(
    spec: &InequalitySpec,
    params: &DynamicsParams,
    policy: &SelectionPolicy,
    search: &SearchConfig,
) -> ViolationReport {
    let omega = params.omega();
    let n = search.grid_points.max(2);
    let step = PI / n as f64;
    let objective = |phase: f64| spec.stationary_value(phase / omega, params, policy);

    let values: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|k| objective(k as f64 * step))
        .collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = best.abs().max(f64::MIN_POSITIVE);
    let k_best = values
        .iter()
        .position(|&v| best - v <= TIE_RTOL * scale)
        .unwrap_or(0)
        + 1;

    let mut phase = k_best as f64 * step;
    // a constant objective (A_ε = 0) has nothing to refine
    if values.iter().any(|&v| v != best) {
        let lo = (k_best - 1) as f64 * step;
        let hi = (k_best + 1) as f64 * step;
        let (x, fx) = golden_section_max(objective, lo, hi, search.tol);
        if fx >= values[k_best - 1] {
            phase = x;
        }
    }

    let argmax_spacing = phase / omega;
    let delta_k_max = spec.stationary_value(argmax_spacing, params, &SelectionPolicy::unselective());
    report(spec, policy, delta_k_max, argmax_spacing)
}

fn report(
    spec: &InequalitySpec,
    policy: &SelectionPolicy,
    delta_k_max: f64,
    argmax_spacing: f64,
) -> ViolationReport {
    let a_epsilon = selection_factor(policy);
    let delta_b_max = (a_epsilon * delta_k_max - spec.bound) / spec.bound;
    ViolationReport {
        delta_k_max,
        argmax_spacing,
        a_epsilon,
        delta_b_max,
        violated: delta_b_max > 0.0,
    }
}

/// Result of the unconstrained search over all measurement gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSearchReport {
    pub delta_k_max: f64,
    /// Optimal gaps `t₂−t₁, t₃−t₂, …`.
    pub gaps: Vec<f64>,
}

/// Maximizes the unselected `ΔK` over independent gaps (no stationarity
/// assumption): a `grid_per_axis^(n−1)` scan of `ωΔt ∈ (0, π]` per gap,
/// then cyclic golden-section refinement of one gap at a time.
pub fn maximize_violation_full(
    spec: &InequalitySpec,
    params: &DynamicsParams,
    grid_per_axis: usize,
    tol: f64,
) -> FullSearchReport {
    let omega = params.omega();
    let dims = spec.n_times - 1;
    let g = grid_per_axis.max(2);
    let step = PI / g as f64;
    let unselected = SelectionPolicy::unselective();
    let eval = |phases: &[f64]| {
        let mut times = Vec::with_capacity(spec.n_times);
        let mut t = 0.0;
        times.push(t);
        for p in phases {
            t += p / omega;
            times.push(t);
        }
        spec.combine(&times, params, &unselected)
    };

    let total = g.pow(dims as u32);
    let decode = |mut idx: usize| {
        let mut phases = vec![0.0; dims];
        for p in phases.iter_mut() {
            *p = ((idx % g) + 1) as f64 * step;
            idx /= g;
        }
        phases
    };
    let (best_idx, _) = (0..total)
        .into_par_iter()
        .map(|idx| (idx, eval(&decode(idx))))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let mut phases = decode(best_idx);
    let mut value = eval(&phases);

    for _ in 0..100 {
        let before = value;
        for d in 0..dims {
            let centre = phases[d];
            let (x, fx) = golden_section_max(
                |p| {
                    let mut probe = phases.clone();
                    probe[d] = p;
                    eval(&probe)
                },
                centre - step,
                centre + step,
                tol,
            );
            if fx > value {
                phases[d] = x;
                value = fx;
            }
        }
        if value - before <= 1e-15 {
            break;
        }
    }

    FullSearchReport {
        delta_k_max: value,
        gaps: phases.iter().map(|p| p / omega).collect(),
    }
}

/// Threshold `ε*` with `A_ε* = B/ΔK_max`; violations exist iff `ε < ε*`.
pub fn epsilon_threshold(
    spec: &InequalitySpec,
    params: &DynamicsParams,
    solve: &SolveConfig,
) -> Result<f64> {
    let unselected = maximize_violation(
        spec,
        params,
        &SelectionPolicy::unselective(),
        &SearchConfig::default(),
    );
    threshold_for_max(unselected.delta_k_max, spec.bound, solve)
}

/// Solves `A_ε = bound/delta_k_max` by bisection on `[0, 1]`.
pub fn threshold_for_max(delta_k_max: f64, bound: f64, solve: &SolveConfig) -> Result<f64> {
    if (delta_k_max - bound).abs() <= 1e-12 * bound.abs().max(1.0) {
        return Ok(0.0);
    }
    if delta_k_max < bound {
        return Err(Error::NeverViolated);
    }
    let target = bound / delta_k_max;
    let a = |e: f64| selection_factor(&SelectionPolicy::new(e.clamp(0.0, 1.0)).unwrap()) - target;
    bisect(a, 0.0, 1.0, solve.tol).ok_or(Error::NeverViolated)
}

/// Effective Rabi frequency `Ω_R √(n+1)` of the Jaynes–Cummings model.
pub fn jaynes_cummings_frequency(rabi: f64, n: u32) -> Result<f64> {
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Rabi frequency must be positive, got {rabi}"
        )));
    }
    Ok(rabi * (f64::from(n) + 1.0).sqrt())
}

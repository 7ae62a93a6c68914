//! Two-time correlation functions.
//!
//! Two independent routes are provided. The closed forms ([`k_analytic`],
//! [`selection_factor`], [`k_selective_analytic`]) give `K = cos 2ωτ` and the
//! selective `K_ε = A_ε K`. The oracle ([`k_oracle`], [`SelectedEnsemble`])
//! never touches those formulas: it averages over the free phase `t′`,
//! enumerates both outcomes of both measurements through the kernel in
//! [`crate::dynamics`], drops first outcomes whose Born probability is below
//! `ε`, and accumulates `q₁ q₂ ‖ψ(t₂⁺)‖²`.
//!
//! The selection makes the phase integrand discontinuous. Cells of the phase
//! grid that straddle a switch are split at the switch, located by bisection
//! on the Born probability, so the quadrature stays accurate to `O(h²)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{
    born_probability, collapse, initial_state, DynamicsParams, InitialPhase, Outcome, Propagator,
    TwoLevelState,
};
use crate::error::{Error, Result};
use crate::optimize::bisect;

/// Oracle vs. closed-form tolerance away from the selection boundary.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Oracle vs. closed-form tolerance next to the selection boundary.
pub const BOUNDARY_TOL: f64 = 1e-3;
/// Default phase-grid size.
pub const DEFAULT_NODES: usize = 10_000;
pub const MIN_NODES: usize = 16;

/// Distinguishability threshold `ε`: a first-measurement outcome is kept
/// iff its pre-measurement Born probability is at least `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    epsilon: f64,
    select_both: bool,
}

impl SelectionPolicy {
    pub fn new(epsilon: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&epsilon) {
            Ok(Self {
                epsilon,
                select_both: false,
            })
        } else {
            Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )))
        }
    }

    /// `ε = 0`: every trajectory is retained.
    pub fn unselective() -> Self {
        Self {
            epsilon: 0.0,
            select_both: false,
        }
    }

    /// Also apply the threshold to the second measurement. Exploratory only;
    /// the closed form `A_ε K` assumes first-measurement selection.
    pub fn with_select_both(mut self, select_both: bool) -> Self {
        self.select_both = select_both;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn select_both(&self) -> bool {
        self.select_both
    }

    /// Inclusive: a probability exactly equal to `ε` is kept.
    #[inline]
    pub fn retains(&self, probability: f64) -> bool {
        probability >= self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRequest {
    pub t1: f64,
    pub t2: f64,
    pub params: DynamicsParams,
    pub policy: SelectionPolicy,
}

impl CorrelationRequest {
    /// Orders the two instants so that `t1 ≤ t2`.
    pub fn new(t1: f64, t2: f64, params: DynamicsParams, policy: SelectionPolicy) -> Self {
        let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        Self {
            t1,
            t2,
            params,
            policy,
        }
    }

    pub fn lag(&self) -> f64 {
        self.t2 - self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureScheme {
    #[default]
    UniformMidpoint,
    /// Composite four-point Gauss–Legendre; `n_nodes / 4` panels.
    GaussLegendre,
}

impl fmt::Display for QuadratureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadratureScheme::UniformMidpoint => "uniform-midpoint",
            QuadratureScheme::GaussLegendre => "gauss-legendre",
        })
    }
}

impl FromStr for QuadratureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform-midpoint" | "midpoint" => Ok(QuadratureScheme::UniformMidpoint),
            "gauss-legendre" | "gl" => Ok(QuadratureScheme::GaussLegendre),
            other => Err(Error::InvalidParameter(format!(
                "unknown quadrature scheme {other:?}"
            ))),
        }
    }
}

// nodes and weights on [-1, 1]
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

impl QuadratureScheme {
    /// Calls `emit(x, w)` for each node of the rule on `[a, b]`; the weights
    /// sum to `b − a`.
    fn for_each_node(self, a: f64, b: f64, mut emit: impl FnMut(f64, f64)) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        match self {
            QuadratureScheme::UniformMidpoint => emit(mid, b - a),
            QuadratureScheme::GaussLegendre => {
                for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                    emit(mid + half * x, half * w);
                }
            }
        }
    }

    fn cells(self, n_nodes: usize) -> usize {
        match self {
            QuadratureScheme::UniformMidpoint => n_nodes,
            QuadratureScheme::GaussLegendre => n_nodes.div_ceil(4),
        }
    }
}

/// Phase-average quadrature over one period of `t′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    n_nodes: usize,
    scheme: QuadratureScheme,
}

impl QuadratureConfig {
    pub fn new(n_nodes: usize, scheme: QuadratureScheme) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "n_nodes must be at least {MIN_NODES}, got {n_nodes}"
            )));
        }
        Ok(Self { n_nodes, scheme })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_nodes: DEFAULT_NODES,
            scheme: QuadratureScheme::UniformMidpoint,
        }
    }
}

/// `K(t₁, t₂) = cos 2ω(t₁ − t₂)`.
pub fn k_analytic(t1: f64, t2: f64, params: &DynamicsParams) -> f64 {
    // K has period π/ω in the lag
    let lag = (t2 - t1).abs().rem_euclid(params.revival_time());
    (2.0 * params.omega() * lag).cos()
}

/// `A_ε = (2√(ε(1−ε)) + arccos(2ε − 1)) / π`.
pub fn selection_factor(policy: &SelectionPolicy) -> f64 {
    let eps = policy.epsilon();
    (2.0 * (eps * (1.0 - eps)).sqrt() + (2.0 * eps - 1.0).clamp(-1.0, 1.0).acos()) / PI
}

/// `K_ε = A_ε K`.
pub fn k_selective_analytic(req: &CorrelationRequest) -> f64 {
    selection_factor(&req.policy) * k_analytic(req.t1, req.t2, &req.params)
}

/// `Δ = 1 − ⟨ψ(t₁)|P_q|ψ(t₁)⟩` for the free trajectory with phase `t′`.
pub fn disturbance(phase: InitialPhase, t1: f64, outcome: Outcome, params: &DynamicsParams) -> f64 {
    let state = initial_state(phase, t1, params);
    1.0 - born_probability(&state, outcome).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    weight: f64,
    sign: f64,
    state: TwoLevelState,
}

/// The retained post-first-measurement states for all phase nodes, ready to
/// be correlated against any second measurement time.
///
/// Each branch carries a quadrature weight (normalized to the phase
/// period), the sign `q₁`, and the unnormalized collapsed state at `t₁`.
#[derive(Debug, Clone)]
pub struct SelectedEnsemble {
    branches: Vec<Branch>,
    params: DynamicsParams,
    policy: SelectionPolicy,
}

impl SelectedEnsemble {
    pub fn build(
        t1: f64,
        params: &DynamicsParams,
        policy: &SelectionPolicy,
        quad: &QuadratureConfig,
    ) -> Self {
        let period = params.period();
        let cells = quad.scheme.cells(quad.n_nodes);
        let h = period / cells as f64;
        let mut branches = Vec::with_capacity(2 * quad.n_nodes + 16);

        let state_at = |t_prime: f64| initial_state(InitialPhase::new(t_prime), t1, params);
        let kept = |t_prime: f64, q: Outcome| {
            born_probability(&state_at(t_prime), q).is_ok_and(|p| policy.retains(p))
        };
        let margin = |t_prime: f64, q: Outcome| {
            born_probability(&state_at(t_prime), q).unwrap_or(0.0) - policy.epsilon()
        };

        let mut push = |a: f64, b: f64, q: Outcome| {
            quad.scheme.for_each_node(a, b, |t_prime, w| {
                branches.push(Branch {
                    weight: w / period,
                    sign: q.sign(),
                    state: collapse(&state_at(t_prime), q),
                });
            });
        };

        for k in 0..cells {
            let a = k as f64 * h;
            let b = if k + 1 == cells { period } else { (k + 1) as f64 * h };
            let m = 0.5 * (a + b);
            for q in Outcome::BOTH {
                let (ka, km, kb) = (kept(a, q), kept(m, q), kept(b, q));
                if ka && km && kb {
                    push(a, b, q);
                    continue;
                }
                if !ka && !km && !kb {
                    continue;
                }
                for (lo, hi, klo, khi) in [(a, m, ka, km), (m, b, km, kb)] {
                    match (klo, khi) {
                        (true, true) => push(lo, hi, q),
                        (false, false) => {}
                        _ => {
                            let tol = 1e-15 * period;
                            let root = bisect(|t| margin(t, q), lo, hi, tol)
                                .unwrap_or(0.5 * (lo + hi));
                            if klo {
                                push(lo, root, q);
                            } else {
                                push(root, hi, q);
                            }
                        }
                    }
                }
            }
        }

        Self {
            branches,
            params: *params,
            policy: *policy,
        }
    }

    /// Total retained phase weight, `⟨Σ_{p_q ≥ ε} p_q⟩` over `t′`.
    pub fn retained_probability(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight * b.state.norm_sqr())
            .sum()
    }

    /// Phase-averaged `Σ q₁ q₂ ‖ψ(t₂⁺)‖²` with `t₂ = t₁ + lag`.
    pub fn correlate(&self, lag: f64) -> f64 {
        let u = Propagator::new(lag, &self.params);
        let mut acc = 0.0;
        for br in &self.branches {
            let evolved = u.apply(&br.state);
            let mut inner = 0.0;
            for q2 in Outcome::BOTH {
                if self.policy.select_both()
                    && !born_probability(&evolved, q2).is_ok_and(|p| self.policy.retains(p))
                {
                    continue;
                }
                inner += q2.sign() * collapse(&evolved, q2).norm_sqr();
            }
            acc += br.weight * br.sign * inner;
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}

/// Selective two-time correlator from phase-averaged measured trajectories.
pub fn k_oracle(req: &CorrelationRequest, quad: &QuadratureConfig) -> f64 {
    SelectedEnsemble::build(req.t1, &req.params, &req.policy, quad).correlate(req.lag())
}

/// Whether `ε` sits close enough to a degenerate selection that a
/// retained or discarded phase arc is narrower than two grid cells.
pub fn near_selection_boundary(epsilon: f64, n_nodes: usize) -> bool {
    if epsilon <= 0.0 {
        return false;
    }
    let root = epsilon.clamp(0.0, 1.0).sqrt();
    // half-widths of the kept and the discarded arcs, in units of the π phase period
    let kept = root.acos() / PI;
    let dropped = root.asin() / PI;
    kept.min(dropped) < 1.0 / n_nodes as f64
}

/// Tolerance for `|k_oracle − k_selective_analytic|` at this `ε` and grid.
pub fn agreement_tolerance(epsilon: f64, n_nodes: usize) -> f64 {
    if near_selection_boundary(epsilon, n_nodes) {
        BOUNDARY_TOL
    } else {
        AGREEMENT_TOL
    }
}

/// One cell of an oracle-vs-closed-form comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationCell {
    pub epsilon: f64,
    pub lag: f64,
    pub oracle: f64,
    pub analytic: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

impl FactorizationCell {
    pub fn passes(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Compares the oracle with `A_ε K` over every `(ε, lag)` pair, rows in
/// `ε`-major order. Each `ε` reuses one ensemble for all lags; rows are
/// computed in parallel but each value is a fixed-order sequential sum.
pub fn factorization_scan(
    epsilons: &[f64],
    lags: &[f64],
    t1: f64,
    params: &DynamicsParams,
    quad: &QuadratureConfig,
    select_both: bool,
) -> Result<Vec<FactorizationCell>> {
    let policies = epsilons
        .iter()
        .map(|&e| SelectionPolicy::new(e).map(|p| p.with_select_both(select_both)))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<FactorizationCell>> = policies
        .par_iter()
        .map(|policy| {
            let ensemble = SelectedEnsemble::build(t1, params, policy, quad);
            let factor = selection_factor(policy);
            let tolerance = agreement_tolerance(policy.epsilon(), quad.n_nodes());
            lags.iter()
                .map(|&lag| {
                    let oracle = ensemble.correlate(lag);
                    let analytic = factor * k_analytic(t1, t1 + lag, params);
                    FactorizationCell {
                        epsilon: policy.epsilon(),
                        lag,
                        oracle,
                        analytic,
                        deviation: (oracle - analytic).abs(),
                        tolerance,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{measured_trajectory, trajectory_product};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn unit() -> DynamicsParams {
        DynamicsParams::new(1.0).unwrap()
    }

    fn eps(e: f64) -> SelectionPolicy {
        SelectionPolicy::new(e).unwrap()
    }

    // Brute force, straight from the trajectory recursion: plain midpoint over
    // t′ with no boundary splitting.
    fn brute_force(t1: f64, t2: f64, params: &DynamicsParams, policy: &SelectionPolicy, n: usize) -> f64 {
        let period = params.period();
        let mut acc = 0.0;
        for k in 0..n {
            let phase = InitialPhase::new((k as f64 + 0.5) * period / n as f64);
            for q1 in Outcome::BOTH {
                let pre = initial_state(phase, t1, params);
                if !policy.retains(born_probability(&pre, q1).unwrap()) {
                    continue;
                }
                for q2 in Outcome::BOTH {
                    let (rec, fin) =
                        measured_trajectory(phase, &[t1, t2], &[q1, q2], params).unwrap();
                    acc += trajectory_product(&rec, &fin);
                }
            }
        }
        acc / n as f64
    }

    #[test]
    fn policy_bounds() {
        assert!(SelectionPolicy::new(-0.01).is_err());
        assert!(SelectionPolicy::new(1.01).is_err());
        assert!(SelectionPolicy::new(f64::NAN).is_err());
        let p = eps(0.3);
        assert!(p.retains(0.3));
        assert!(!p.retains(0.299_999_999));
    }

    #[test]
    fn quadrature_config_bounds() {
        assert!(QuadratureConfig::new(15, QuadratureScheme::UniformMidpoint).is_err());
        assert!(QuadratureConfig::new(16, QuadratureScheme::GaussLegendre).is_ok());
        assert_eq!(QuadratureConfig::default().n_nodes(), 10_000);
        assert_eq!(
            "gauss-legendre".parse::<QuadratureScheme>().unwrap(),
            QuadratureScheme::GaussLegendre
        );
        assert!("simpson".parse::<QuadratureScheme>().is_err());
    }

    #[test]
    fn request_is_canonicalized() {
        let r = CorrelationRequest::new(2.0, 1.0, unit(), eps(0.0));
        assert_eq!((r.t1, r.t2), (1.0, 2.0));
    }

    #[test]
    fn k_analytic_examples() {
        let p = unit();
        assert_eq!(k_analytic(0.4, 0.4, &p), 1.0);
        assert!((k_analytic(0.0, FRAC_PI_2, &p) + 1.0).abs() < 1e-12);
        assert!((k_analytic(0.0, FRAC_PI_6, &p) - 0.5).abs() < 1e-12);
        assert!((k_analytic(3.0, 1.0, &p) - k_analytic(1.0, 3.0, &p)).abs() < 1e-15);
    }

    #[test]
    fn k_analytic_large_lag_reduction() {
        let p = DynamicsParams::new(1.7).unwrap();
        let lag = 0.123 + 1000.0 * p.revival_time();
        assert!((k_analytic(0.0, lag, &p) - (2.0 * 1.7 * 0.123f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn selection_factor_examples() {
        assert_eq!(selection_factor(&eps(0.0)), 1.0);
        assert_eq!(selection_factor(&eps(1.0)), 0.0);
        let half = (1.0 + FRAC_PI_2) / PI;
        assert!((selection_factor(&eps(0.5)) - half).abs() < 1e-15);
        assert!((half - 0.818_309_886_183_790_7).abs() < 1e-15);
    }

    #[test]
    fn selective_examples() {
        let p = unit();
        let r = CorrelationRequest::new(0.0, 0.37, p, eps(0.0));
        assert_eq!(k_selective_analytic(&r), k_analytic(0.0, 0.37, &p));
        let r = CorrelationRequest::new(0.0, 0.37, p, eps(1.0));
        assert_eq!(k_selective_analytic(&r), 0.0);
        let r = CorrelationRequest::new(0.0, FRAC_PI_6, p, eps(0.5));
        assert!((k_selective_analytic(&r) - 0.409_154_943_091_895_3).abs() < 1e-12);
    }

    #[test]
    fn oracle_unselected_is_k() {
        let p = DynamicsParams::new(2.3).unwrap();
        let q = QuadratureConfig::default();
        for lag in [0.0, 0.1, 0.77, 2.0, 9.5] {
            let r = CorrelationRequest::new(0.3, 0.3 + lag, p, eps(0.0));
            assert!((k_oracle(&r, &q) - k_analytic(0.3, 0.3 + lag, &p)).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_half_threshold() {
        let p = unit();
        let r = CorrelationRequest::new(0.0, FRAC_PI_6, p, eps(0.5));
        let k = k_oracle(&r, &QuadratureConfig::default());
        assert!((k - 0.409_154_943_091_895_3).abs() < 1e-6, "{k}");
    }

    #[test]
    fn oracle_full_selection_vanishes() {
        let r = CorrelationRequest::new(0.2, 0.9, unit(), eps(1.0));
        assert!(k_oracle(&r, &QuadratureConfig::default()).abs() < 1e-6);
    }

    #[test]
    fn ensemble_matches_trajectory_brute_force() {
        // coarse grid, where the two quadratures genuinely differ only by
        // the boundary treatment; ε = 0 has no boundary so they coincide
        let p = DynamicsParams::new(1.3).unwrap();
        let quad = QuadratureConfig::new(64, QuadratureScheme::UniformMidpoint).unwrap();
        for lag in [0.05, 0.4, 1.1] {
            let r = CorrelationRequest::new(0.25, 0.25 + lag, p, eps(0.0));
            let bf = brute_force(0.25, 0.25 + lag, &p, &eps(0.0), 64);
            assert!((k_oracle(&r, &quad) - bf).abs() < 1e-12);
        }
        // with selection the brute force converges at O(1/n) to the same value
        let bf = brute_force(0.0, FRAC_PI_6, &unit(), &eps(0.3), 200_000);
        let r = CorrelationRequest::new(0.0, FRAC_PI_6, unit(), eps(0.3));
        assert!((k_oracle(&r, &QuadratureConfig::default()) - bf).abs() < 1e-4);
    }

    #[test]
    fn retained_probability_is_a_epsilon() {
        let p = unit();
        for e in [0.0, 0.1, 0.5, 0.8, 0.99] {
            let ens = SelectedEnsemble::build(0.7, &p, &eps(e), &QuadratureConfig::default());
            assert!((ens.retained_probability() - selection_factor(&eps(e))).abs() < 1e-6);
        }
    }

    #[test]
    fn gauss_legendre_scheme_agrees() {
        let q = QuadratureConfig::new(10_000, QuadratureScheme::GaussLegendre).unwrap();
        let p = DynamicsParams::new(0.8).unwrap();
        for e in [0.0, 0.25, 0.6] {
            let r = CorrelationRequest::new(0.1, 1.4, p, eps(e));
            assert!((k_oracle(&r, &q) - k_selective_analytic(&r)).abs() < 1e-6);
        }
    }

    #[test]
    fn coarse_grid_misses_contract() {
        let q = QuadratureConfig::new(16, QuadratureScheme::UniformMidpoint).unwrap();
        let r = CorrelationRequest::new(0.0, 0.3, unit(), eps(0.3));
        assert!((k_oracle(&r, &q) - k_selective_analytic(&r)).abs() > AGREEMENT_TOL);
    }

    #[test]
    fn select_both_differs() {
        let p = unit();
        let q = QuadratureConfig::default();
        let r = CorrelationRequest::new(0.0, FRAC_PI_6, p, eps(0.5).with_select_both(true));
        let plain = CorrelationRequest::new(0.0, FRAC_PI_6, p, eps(0.5));
        // p(q₂|q₁) is cos²(π/6) = 0.75 or 0.25, so the minority branch is dropped
        let expected = selection_factor(&eps(0.5)) * 0.75;
        assert!((k_oracle(&r, &q) - expected).abs() < 1e-6);
        assert!((k_oracle(&r, &q) - k_oracle(&plain, &q)).abs() > 0.1);
    }

    #[test]
    fn disturbance_examples() {
        let p = unit();
        let ph = InitialPhase::new(0.4);
        assert!(disturbance(ph, 0.4, Outcome::Plus, &p).abs() < 1e-12);
        assert!(disturbance(ph, 0.4 + FRAC_PI_2, Outcome::Minus, &p).abs() < 1e-12);
        for q in Outcome::BOTH {
            assert!((disturbance(ph, 0.4 + FRAC_PI_4, q, &p) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_classification() {
        assert!(!near_selection_boundary(0.0, 10_000));
        assert!(near_selection_boundary(1.0, 10_000));
        assert!(!near_selection_boundary(0.99, 10_000));
        assert!(!near_selection_boundary(0.01, 10_000));
        assert!(near_selection_boundary(1e-12, 10_000));
        assert_eq!(agreement_tolerance(0.5, 10_000), AGREEMENT_TOL);
    }
}

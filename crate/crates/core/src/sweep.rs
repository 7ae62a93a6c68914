//! Parameter sweeps producing the tables emitted by the `tbell` binary.
//!
//! Every table is computed cell-by-cell in parallel and collected in index
//! order, so output does not depend on the number of worker threads.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::correlators::{
    factorization_scan, k_analytic, k_oracle, k_selective_analytic, selection_factor,
    CorrelationRequest, FactorizationCell, QuadratureConfig, SelectionPolicy,
};
use crate::dynamics::{
    expectation_q, initial_state, measured_trajectory, trajectory_product, DynamicsParams,
    InitialPhase, MeasurementRecord, Outcome, TwoLevelState,
};
use crate::error::{Error, Result};
use crate::inequalities::{
    epsilon_threshold, jaynes_cummings_frequency, maximize_violation, InequalitySpec, Preset,
    SearchConfig, SolveConfig,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Omega(f64),
    /// `ω = Ω_R √(n+1)`
    JaynesCummings { rabi: f64, n: u32 },
}

impl Frequency {
    pub fn params(&self) -> Result<DynamicsParams> {
        match *self {
            Frequency::Omega(w) => DynamicsParams::new(w),
            Frequency::JaynesCummings { rabi, n } => {
                DynamicsParams::new(jaynes_cummings_frequency(rabi, n)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" | "json" => Ok(OutputFormat::JsonLines),
            other => Err(Error::InvalidParameter(format!(
                "unknown output format {other:?}"
            ))),
        }
    }
}

/// Inclusive, evenly spaced grid `min, …, max` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {steps}"
            )));
        }
        if !(min.is_finite() && max.is_finite()) || max < min {
            return Err(Error::InvalidParameter(format!(
                "empty range [{min}, {max}]"
            )));
        }
        Ok(Self { min, max, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / last
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

/// Which inequality a command works on.
#[derive(Debug, Clone, PartialEq)]
pub enum InequalityChoice {
    Preset(Preset),
    Custom(InequalitySpec),
}

impl InequalityChoice {
    pub fn spec(&self) -> InequalitySpec {
        match self {
            InequalityChoice::Preset(p) => p.spec(),
            InequalityChoice::Custom(s) => s.clone(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            InequalityChoice::Preset(p) => p.name().to_string(),
            InequalityChoice::Custom(_) => "custom".to_string(),
        }
    }
}

/// Fully resolved settings for one run. Time ranges are in units of `ωt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frequency: Frequency,
    pub inequality: Option<InequalityChoice>,
    pub epsilon: f64,
    pub eps_range: Option<Range>,
    pub t_range: Option<Range>,
    pub quadrature: QuadratureConfig,
    pub format: OutputFormat,
    pub physical_time: bool,
    pub select_both: bool,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            frequency: Frequency::Omega(1.0),
            inequality: None,
            epsilon: 0.0,
            eps_range: None,
            t_range: None,
            quadrature: QuadratureConfig::default(),
            format: OutputFormat::Csv,
            physical_time: false,
            select_both: false,
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<DynamicsParams> {
        self.frequency.params()
    }

    pub fn policy(&self) -> Result<SelectionPolicy> {
        Ok(SelectionPolicy::new(self.epsilon)?.with_select_both(self.select_both))
    }

    fn eps_grid(&self) -> Range {
        self.eps_range.unwrap_or(Range {
            min: 0.0,
            max: 1.0,
            steps: 101,
        })
    }

    fn axis_label(&self) -> &'static str {
        if self.physical_time {
            "t"
        } else {
            "omega_t"
        }
    }

    fn axis_value(&self, phase: f64, params: &DynamicsParams) -> f64 {
        if self.physical_time {
            phase / params.omega()
        } else {
            phase
        }
    }
}

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Seventeen significant digits, enough to reparse every `f64` exactly.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Csv => {
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            OutputFormat::JsonLines => {
                for row in &self.rows {
                    out.push('{');
                    for (k, (name, &v)) in self.columns.iter().zip(row).enumerate() {
                        if k > 0 {
                            out.push(',');
                        }
                        let _ = write!(out, "\"{name}\":{}", format_number(v));
                    }
                    out.push_str("}\n");
                }
            }
        }
        out
    }

    pub fn write_to(&self, format: OutputFormat, mut sink: impl Write) -> io::Result<()> {
        sink.write_all(self.render(format).as_bytes())
    }
}

/// `ωt`, free `Q(t) = cos 2ωt`, stationary `ΔK₋(t)` and its bound, over
/// `ωt ∈ [0, 4π]` unless a range is given.
pub fn cmd_fig1(config: &RunConfig) -> Result<Table> {
    if let Some(choice) = &config.inequality {
        if *choice != InequalityChoice::Preset(Preset::SantosMinus) {
            return Err(Error::InvalidParameter(
                "fig1 plots the santos-minus inequality".into(),
            ));
        }
    }
    let params = config.params()?;
    let policy = config.policy()?;
    let spec = Preset::SantosMinus.spec();
    let range = config.t_range.unwrap_or(Range {
        min: 0.0,
        max: 4.0 * PI,
        steps: 1001,
    });
    let omega = params.omega();
    let rows = range
        .points()
        .par_iter()
        .map(|&phase| {
            let t = phase / omega;
            let free = initial_state(InitialPhase::new(0.0), t, &params);
            let q = expectation_q(&free)?;
            let dk = spec.stationary_value(t, &params, &policy);
            Ok(vec![config.axis_value(phase, &params), q, dk, spec.bound()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec![
            config.axis_label().into(),
            "q_free".into(),
            "delta_k_minus".into(),
            "bound".into(),
        ],
        rows,
    })
}

/// `ΔB_max(ε)` for the four-time and the three-time inequality.
pub fn cmd_fig2(config: &RunConfig) -> Result<Table> {
    let params = config.params()?;
    let search = SearchConfig::default();
    let paz = Preset::Paz4.spec();
    let santos = match &config.inequality {
        Some(InequalityChoice::Preset(p @ (Preset::SantosMinus | Preset::SantosPlus))) => p.spec(),
        _ => Preset::SantosMinus.spec(),
    };
    let rows = config
        .eps_grid()
        .points()
        .par_iter()
        .map(|&e| {
            let policy = SelectionPolicy::new(e)?;
            let a = maximize_violation(&paz, &params, &policy, &search);
            let b = maximize_violation(&santos, &params, &policy, &search);
            Ok(vec![e, a.delta_b_max, b.delta_b_max])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec![
            "epsilon".into(),
            "delta_b_max_paz".into(),
            "delta_b_max_santos".into(),
        ],
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub cells: Vec<FactorizationCell>,
    pub max_deviation: f64,
    /// Cell with the largest deviation relative to its tolerance.
    pub worst: FactorizationCell,
    pub passed: bool,
    pub table: Table,
}

/// Oracle vs. `A_ε K` over an `(ε, lag)` grid. Lags default to 256 points
/// of `ωτ ∈ [0, π]`.
pub fn cmd_validate(config: &RunConfig) -> Result<ValidationReport> {
    let params = config.params()?;
    let eps = config.eps_grid().points();
    let lag_phases = config
        .t_range
        .unwrap_or(Range {
            min: 0.0,
            max: PI,
            steps: 256,
        })
        .points();
    let lags: Vec<f64> = lag_phases.iter().map(|p| p / params.omega()).collect();
    let cells = factorization_scan(
        &eps,
        &lags,
        0.0,
        &params,
        &config.quadrature,
        config.select_both,
    )?;

    let max_deviation = cells.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let worst = *cells
        .iter()
        .reduce(|a, b| {
            if b.deviation / b.tolerance > a.deviation / a.tolerance {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::InvalidParameter("empty validation grid".into()))?;
    let passed = cells.iter().all(FactorizationCell::passes);

    let mut table = Table::new(&["epsilon", "lag", "oracle", "analytic", "deviation", "tolerance"]);
    if !config.physical_time {
        table.columns[1] = "omega_lag".into();
    }
    table.rows = cells
        .iter()
        .map(|c| {
            vec![
                c.epsilon,
                config.axis_value(c.lag * params.omega(), &params),
                c.oracle,
                c.analytic,
                c.deviation,
                c.tolerance,
            ]
        })
        .collect();

    Ok(ValidationReport {
        cells,
        max_deviation,
        worst,
        passed,
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub name: String,
    pub epsilon_star: f64,
    pub delta_k_max: f64,
    pub argmax_spacing: f64,
    pub a_at_threshold: f64,
}

impl ThresholdReport {
    pub fn render(&self) -> String {
        format!(
            "inequality = {}\nepsilon_star = {}\ndelta_k_max = {}\nargmax_spacing = {}\na_epsilon_star = {}\n",
            self.name,
            format_number(self.epsilon_star),
            format_number(self.delta_k_max),
            format_number(self.argmax_spacing),
            format_number(self.a_at_threshold),
        )
    }
}

/// `ε*`, `ΔK_max`, the maximizing spacing and `A_ε*` for one inequality.
pub fn cmd_threshold(config: &RunConfig) -> Result<ThresholdReport> {
    let choice = config
        .inequality
        .clone()
        .ok_or_else(|| Error::InvalidParameter("threshold needs --preset or --terms".into()))?;
    let spec = choice.spec();
    let params = config.params()?;
    let max = maximize_violation(
        &spec,
        &params,
        &SelectionPolicy::unselective(),
        &SearchConfig::default(),
    );
    let epsilon_star = epsilon_threshold(&spec, &params, &SolveConfig::default())?;
    Ok(ThresholdReport {
        name: choice.name(),
        epsilon_star,
        delta_k_max: max.delta_k_max,
        argmax_spacing: max.argmax_spacing,
        a_at_threshold: selection_factor(&SelectionPolicy::new(epsilon_star)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelateReport {
    pub t1: f64,
    pub t2: f64,
    pub epsilon: f64,
    pub k: f64,
    pub a_epsilon: f64,
    pub k_epsilon: f64,
    pub k_oracle: f64,
}

impl CorrelateReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, v) in [
            ("t1", self.t1),
            ("t2", self.t2),
            ("epsilon", self.epsilon),
            ("k", self.k),
            ("a_epsilon", self.a_epsilon),
            ("k_epsilon", self.k_epsilon),
            ("k_oracle", self.k_oracle),
        ] {
            let _ = writeln!(out, "{key} = {}", format_number(v));
        }
        out
    }
}

/// Single `K_ε(t₁, t₂)` query, closed form and oracle side by side.
pub fn cmd_correlate(config: &RunConfig, t1: f64, t2: f64) -> Result<CorrelateReport> {
    let params = config.params()?;
    let policy = config.policy()?;
    let req = CorrelationRequest::new(t1, t2, params, policy);
    Ok(CorrelateReport {
        t1,
        t2,
        epsilon: policy.epsilon(),
        k: k_analytic(t1, t2, &params),
        a_epsilon: selection_factor(&policy),
        k_epsilon: k_selective_analytic(&req),
        k_oracle: k_oracle(&req, &config.quadrature),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub records: Vec<MeasurementRecord>,
    pub final_state: TwoLevelState,
    pub product: f64,
    pub table: Table,
}

impl TrajectoryReport {
    pub fn summary(&self) -> String {
        format!(
            "final_norm_sqr = {}\nproduct = {}\n",
            format_number(self.final_state.norm_sqr()),
            format_number(self.product)
        )
    }
}

/// The record sequence of one measured trajectory.
pub fn cmd_trajectory(
    config: &RunConfig,
    phase: f64,
    times: &[f64],
    outcomes: &[Outcome],
) -> Result<TrajectoryReport> {
    let params = config.params()?;
    let (records, final_state) =
        measured_trajectory(InitialPhase::new(phase), times, outcomes, &params)?;
    let product = trajectory_product(&records, &final_state);
    let mut table = Table::new(&["time", "outcome", "pre_probability", "disturbance"]);
    table.rows = records
        .iter()
        .map(|r| vec![r.time, r.outcome.sign(), r.pre_probability, r.disturbance])
        .collect();
    Ok(TrajectoryReport {
        records,
        final_state,
        product,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn range_points_hit_endpoints() {
        let r = Range::new(0.0, 1.0, 101).unwrap();
        let p = r.points();
        assert_eq!(p.len(), 101);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[100], 1.0);
        assert!((p[50] - 0.5).abs() < 1e-15);
        assert!(Range::new(0.0, 1.0, 1).is_err());
        assert!(Range::new(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-300, 6.02e23, 0.0] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_number(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn csv_and_jsonl_rendering() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec![1.0, -0.5]);
        assert_eq!(
            t.render(OutputFormat::Csv),
            "a,b\n1.0000000000000000e0,-5.0000000000000000e-1\n"
        );
        assert_eq!(
            t.render(OutputFormat::JsonLines),
            "{\"a\":1.0000000000000000e0,\"b\":-5.0000000000000000e-1}\n"
        );
    }

    #[test]
    fn fig1_rows() {
        let cfg = RunConfig {
            t_range: Some(Range::new(0.0, PI, 4).unwrap()),
            ..RunConfig::default()
        };
        let t = cmd_fig1(&cfg).unwrap();
        let dk = t.column("delta_k_minus").unwrap();
        let q = t.column("q_free").unwrap();
        assert!((dk[1] - 1.5).abs() < 1e-12);
        assert!((dk[0] + 3.0).abs() < 1e-12);
        assert!((q[0] - 1.0).abs() < 1e-12);
        assert!((q[3] - 1.0).abs() < 1e-12);
        assert_eq!(t.column("bound").unwrap(), vec![1.0; 4]);
        assert!((t.column("omega_t").unwrap()[1] - FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn fig1_rejects_other_presets() {
        let cfg = RunConfig {
            inequality: Some(InequalityChoice::Preset(Preset::Paz4)),
            ..RunConfig::default()
        };
        assert!(cmd_fig1(&cfg).is_err());
    }

    #[test]
    fn physical_time_axis() {
        let cfg = RunConfig {
            frequency: Frequency::Omega(2.0),
            t_range: Some(Range::new(0.0, PI, 3).unwrap()),
            physical_time: true,
            ..RunConfig::default()
        };
        let t = cmd_fig1(&cfg).unwrap();
        assert_eq!(t.columns[0], "t");
        assert!((t.rows[2][0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn fig2_end_rows() {
        let cfg = RunConfig {
            eps_range: Some(Range::new(0.0, 1.0, 3).unwrap()),
            ..RunConfig::default()
        };
        let t = cmd_fig2(&cfg).unwrap();
        assert!((t.rows[0][1] - (2f64.sqrt() - 1.0)).abs() < 1e-9);
        assert!((t.rows[0][2] - 0.5).abs() < 1e-9);
        assert_eq!(t.rows[2][1], -1.0);
        assert_eq!(t.rows[2][2], -1.0);
    }

    #[test]
    fn jaynes_cummings_frequency_config() {
        let f = Frequency::JaynesCummings { rabi: 0.5, n: 3 };
        assert_eq!(f.params().unwrap().omega(), 1.0);
    }

    #[test]
    fn trajectory_command() {
        let cfg = RunConfig::default();
        let r = cmd_trajectory(
            &cfg,
            0.0,
            &[0.0, std::f64::consts::FRAC_PI_4],
            &[Outcome::Plus, Outcome::Minus],
        )
        .unwrap();
        assert!((r.product + 0.5).abs() < 1e-12);
        assert_eq!(r.table.rows.len(), 2);
    }

    #[test]
    fn threshold_needs_inequality() {
        assert!(cmd_threshold(&RunConfig::default()).is_err());
    }
}

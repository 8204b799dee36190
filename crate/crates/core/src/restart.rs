//! Restart wrappers for schemes with a sublinear guarantee.
//!
//! Under quadratic functional growth with parameter `μ`, a scheme whose
//! guarantee reached `A` contracts the gap by `1/(μA)`. With `μ` known the
//! scheme is restarted whenever `A_k ≥ 1/(μD)`. Without it, the first run
//! stops on a stagnation test, its final guarantee seeds the threshold `Ū`,
//! and `Ū` is multiplied by `s` whenever the per-segment decrease is not
//! geometric with ratio `D/(1−D)`.

use crate::error::{Error, Result};
use crate::scheme::{RestartMode, Scheme, StopRule};
use crate::trace::ConvergenceTrace;

/// Iterations after which a segment is cut regardless of its guarantee.
pub const SEGMENT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RestartConfig {
    /// `D`, the target per-segment decrease.
    pub decrease_factor: f64,
    /// `s`, the threshold escalation factor.
    pub escalation: f64,
    pub mode: RestartMode,
    /// Growth parameter; used by [`run_known_mu`] only.
    pub growth: Option<f64>,
    /// Maximum number of segments.
    pub outer_budget: usize,
    pub segment_cap: usize,
}

impl Default for RestartConfig {
    fn default() -> Self {
        RestartConfig {
            decrease_factor: default_decrease_factor(),
            escalation: 4.0,
            mode: RestartMode::Soft,
            growth: None,
            outer_budget: usize::MAX,
            segment_cap: SEGMENT_CAP,
        }
    }
}

impl RestartConfig {
    fn validate(&self) -> Result<()> {
        if !(self.decrease_factor > 0.0 && self.decrease_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decrease factor must lie in (0, 1), got {}",
                self.decrease_factor
            )));
        }
        if !(self.escalation > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "escalation must exceed 1, got {}",
                self.escalation
            )));
        }
        if self.outer_budget == 0 || self.segment_cap == 0 {
            return Err(Error::InvalidParameter("restart budgets must be positive".into()));
        }
        Ok(())
    }
}

/// `D = e^{-2}`.
pub fn default_decrease_factor() -> f64 {
    (-2.0f64).exp()
}

/// `Ū = 1/(μD)`.
pub fn known_mu_threshold(mu: f64, decrease_factor: f64) -> f64 {
    1.0 / (mu * decrease_factor)
}

/// Stagnation test for the first segment over `[F(x_0), …, F(x_k)]`, `k ≥ 1`:
/// `F(x_m) − F(x_k) ≤ D/(1−D) (F(x_0) − F(x_m))` with `m = ⌈k/2⌉`.
pub fn initial_stop_criterion(values: &[f64], decrease_factor: f64) -> bool {
    let k = values.len() - 1;
    assert!(k >= 1, "stagnation test needs at least two values");
    let m = k.div_ceil(2);
    let ratio = decrease_factor / (1.0 - decrease_factor);
    values[m] - values[k] <= ratio * (values[0] - values[m])
}

/// `curr_gap ≤ D/(1−D) · prev_gap`.
pub fn geometric_check(prev_gap: f64, curr_gap: f64, decrease_factor: f64) -> bool {
    curr_gap <= decrease_factor / (1.0 - decrease_factor) * prev_gap
}

/// Bound on the number of threshold escalations given `μ` and `U_1`:
/// `⌈−log_s(μ D U_1)⌉`, at least zero.
pub fn backtrack_bound(mu: f64, decrease_factor: f64, first_guarantee: f64, escalation: f64) -> usize {
    let v = -(mu * decrease_factor * first_guarantee).ln() / escalation.ln();
    v.ceil().max(0.0) as usize
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub trace: ConvergenceTrace,
    /// Threshold escalations `b`.
    pub backtracks: usize,
    /// Guarantee `U_1` at the end of the first segment.
    pub first_guarantee: Option<f64>,
    /// `F(r_j)` for each anchor, starting with `r_0`.
    pub anchor_objectives: Vec<f64>,
    /// Trace row index of each anchor.
    pub anchor_rows: Vec<usize>,
    /// Guarantee `U_{j+1}` reached by each completed segment.
    pub segment_guarantees: Vec<f64>,
    /// Threshold in force during each completed segment (0 for the first
    /// adaptive segment).
    pub thresholds: Vec<f64>,
}

enum SegmentEnd {
    Restart,
    Converged,
    Exhausted,
}

struct Driver<'a, S: Scheme + ?Sized> {
    scheme: &'a mut S,
    stop: StopRule,
    out: RestartOutcome,
    cap: usize,
    mode: RestartMode,
}

impl<'a, S: Scheme + ?Sized> Driver<'a, S> {
    fn new(scheme: &'a mut S, stop: &StopRule, config: &RestartConfig) -> Self {
        let trace = ConvergenceTrace::new(scheme.initial_row());
        let f0 = scheme.objective();
        Driver {
            scheme,
            stop: *stop,
            out: RestartOutcome {
                trace,
                backtracks: 0,
                first_guarantee: None,
                anchor_objectives: vec![f0],
                anchor_rows: vec![0],
                segment_guarantees: Vec::new(),
                thresholds: Vec::new(),
            },
            cap: config.segment_cap,
            mode: config.mode,
        }
    }

    fn exhausted(&self) -> bool {
        self.out.trace.iterations() >= self.stop.max_iterations
    }

    /// Steps until `done` returns true on the segment's objective history.
    fn segment(&mut self, threshold: f64, mut done: impl FnMut(&[f64], f64) -> bool) -> Result<SegmentEnd> {
        let mut values = vec![self.scheme.objective()];
        for _ in 0..self.cap {
            if self.exhausted() {
                return Ok(SegmentEnd::Exhausted);
            }
            let report = self.scheme.step()?;
            self.out.trace.push_report(&report, self.scheme.counts(), false);
            values.push(report.objective);
            if self.stop.reached(report.objective) {
                self.out.trace.converged = true;
                return Ok(SegmentEnd::Converged);
            }
            if done(&values, report.guarantee) {
                break;
            }
        }
        self.out.thresholds.push(threshold);
        self.out.segment_guarantees.push(self.scheme.guarantee());
        Ok(SegmentEnd::Restart)
    }

    fn restart(&mut self) {
        let last = self.out.trace.rows.len() - 1;
        self.out.trace.rows[last].restart = true;
        self.out.anchor_objectives.push(self.scheme.objective());
        self.out.anchor_rows.push(last);
        self.scheme.restart(self.mode);
    }
}

/// Restarts `scheme` whenever its guarantee reaches `1/(μD)`.
pub fn run_known_mu<S: Scheme + ?Sized>(
    scheme: &mut S,
    mu: f64,
    config: &RestartConfig,
    stop: &StopRule,
) -> Result<RestartOutcome> {
    config.validate()?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("growth parameter must be positive, got {mu}")));
    }
    let threshold = known_mu_threshold(mu, config.decrease_factor);
    let mut d = Driver::new(scheme, stop, config);
    if stop.reached(d.scheme.objective()) {
        d.out.trace.converged = true;
        return Ok(d.out);
    }
    for _ in 0..config.outer_budget {
        match d.segment(threshold, |_, a| a >= threshold)? {
            SegmentEnd::Restart => d.restart(),
            SegmentEnd::Converged | SegmentEnd::Exhausted => break,
        }
    }
    Ok(d.out)
}

/// Adaptive restarts without knowledge of `μ`. Starts from
/// `r_0 = prox(x_0, 1/L_0)`.
pub fn run_adaptive<S: Scheme + ?Sized>(
    scheme: &mut S,
    config: &RestartConfig,
    stop: &StopRule,
) -> Result<RestartOutcome> {
    config.validate()?;
    scheme.prox_start();
    let dec = config.decrease_factor;
    let mut d = Driver::new(scheme, stop, config);
    if stop.reached(d.scheme.objective()) {
        d.out.trace.converged = true;
        return Ok(d.out);
    }
    // At k = 1 the test is vacuous (m = k), so it is first applied at k = 2.
    match d.segment(0.0, |values, _| values.len() > 2 && initial_stop_criterion(values, dec))? {
        SegmentEnd::Restart => d.restart(),
        SegmentEnd::Converged | SegmentEnd::Exhausted => return Ok(d.out),
    }
    let mut threshold = d.out.segment_guarantees[0];
    d.out.first_guarantee = Some(threshold);
    for _ in 1..config.outer_budget {
        match d.segment(threshold, |_, a| a >= threshold)? {
            SegmentEnd::Restart => d.restart(),
            SegmentEnd::Converged | SegmentEnd::Exhausted => break,
        }
        let f = &d.out.anchor_objectives;
        let j = f.len() - 2;
        if !geometric_check(f[j - 1] - f[j], f[j] - f[j + 1], dec) {
            threshold *= config.escalation;
            d.out.backtracks += 1;
        }
    }
    Ok(d.out)
}
